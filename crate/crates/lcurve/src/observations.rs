//! Grouped per-size error measurements.
//!
//! An [`ObservationSet`] holds one curve's measurements, grouped by training
//! size and kept in a canonical order (sizes ascending, observations within a
//! group sorted by fold id then error) so that parsing is insensitive to input
//! row order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether training sizes count examples per class or in total. The fitting
/// math is unit-agnostic; this tag only travels along for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SizeUnit {
    PerClass,
    Total,
    #[default]
    Unspecified,
}

/// One trained model's measured test error at some training size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Fold id within the size group, if the dataset recorded one.
    pub fold: Option<u32>,
    /// Test error in percent.
    pub error: f64,
}

/// All observations at a single training size n_i; F_i = fold_count().
#[derive(Debug, Clone, PartialEq)]
pub struct SizeGroup {
    n: u64,
    observations: Vec<Observation>,
}

impl SizeGroup {
    pub fn n(&self) -> u64 {
        self.n
    }

    /// F_i: number of models trained at this size.
    pub fn fold_count(&self) -> usize {
        self.observations.len()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.error)
    }

    /// Empirical mean error at this size.
    pub fn mean(&self) -> f64 {
        self.errors().sum::<f64>() / self.fold_count() as f64
    }

    /// Unbiased sample variance (F_i - 1 divisor); None when F_i < 2.
    pub fn sample_variance(&self) -> Option<f64> {
        let f = self.fold_count();
        if f < 2 {
            return None;
        }
        let mean = self.mean();
        let ss: f64 = self.errors().map(|e| (e - mean) * (e - mean)).sum();
        Some(ss / (f - 1) as f64)
    }
}

/// One curve's measurements across training sizes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationSet {
    groups: Vec<SizeGroup>,
    unit: SizeUnit,
}

impl ObservationSet {
    /// Builds a set from (n, fold, error) rows, grouping and canonically
    /// sorting. Rejects n = 0, non-finite or out-of-range errors, and
    /// duplicate (n, fold) pairs with an explicit fold id.
    pub fn from_rows(rows: impl IntoIterator<Item = (u64, Option<u32>, f64)>) -> Result<Self> {
        Self::with_unit(rows, SizeUnit::Unspecified)
    }

    pub fn with_unit(
        rows: impl IntoIterator<Item = (u64, Option<u32>, f64)>,
        unit: SizeUnit,
    ) -> Result<Self> {
        let mut by_n: BTreeMap<u64, Vec<Observation>> = BTreeMap::new();
        for (n, fold, error) in rows {
            if n < 1 {
                return Err(Error::Domain("training size must be >= 1".into()));
            }
            if !error.is_finite() || !(0.0..=100.0).contains(&error) {
                return Err(Error::Domain(format!(
                    "error {error} at n = {n} outside the percent range [0, 100]"
                )));
            }
            by_n.entry(n).or_default().push(Observation { fold, error });
        }
        let mut groups = Vec::with_capacity(by_n.len());
        for (n, mut observations) in by_n {
            observations.sort_by(|a, b| a.fold.cmp(&b.fold).then(a.error.total_cmp(&b.error)));
            for pair in observations.windows(2) {
                if let (Some(a), Some(b)) = (pair[0].fold, pair[1].fold) {
                    if a == b {
                        return Err(Error::Domain(format!("duplicate fold {a} at n = {n}")));
                    }
                }
            }
            groups.push(SizeGroup { n, observations });
        }
        Ok(Self { groups, unit })
    }

    /// Size groups in ascending n order.
    pub fn groups(&self) -> &[SizeGroup] {
        &self.groups
    }

    pub fn unit(&self) -> SizeUnit {
        self.unit
    }

    /// D: total number of observations across all sizes.
    pub fn num_observations(&self) -> usize {
        self.groups.iter().map(SizeGroup::fold_count).sum()
    }

    /// S: number of distinct training sizes.
    pub fn num_sizes(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn sizes(&self) -> impl Iterator<Item = u64> + '_ {
        self.groups.iter().map(SizeGroup::n)
    }

    pub fn group(&self, n: u64) -> Option<&SizeGroup> {
        self.groups.iter().find(|g| g.n == n)
    }

    pub fn max_n(&self) -> Option<u64> {
        self.groups.last().map(SizeGroup::n)
    }

    /// Copy with the group at size n removed (for leave-one-size-out).
    pub fn without_size(&self, n: u64) -> ObservationSet {
        ObservationSet {
            groups: self.groups.iter().filter(|g| g.n != n).cloned().collect(),
            unit: self.unit,
        }
    }

    /// Copy keeping only the named sizes.
    pub fn restrict_to(&self, sizes: &[u64]) -> ObservationSet {
        ObservationSet {
            groups: self.groups.iter().filter(|g| sizes.contains(&g.n)).cloned().collect(),
            unit: self.unit,
        }
    }

    /// The k largest distinct sizes, ascending (all sizes when fewer exist).
    pub fn largest_sizes(&self, k: usize) -> Vec<u64> {
        let skip = self.groups.len().saturating_sub(k);
        self.groups[skip..].iter().map(SizeGroup::n).collect()
    }

    /// Flat (n, fold, error) rows in canonical order.
    pub fn rows(&self) -> impl Iterator<Item = (u64, Option<u32>, f64)> + '_ {
        self.groups
            .iter()
            .flat_map(|g| g.observations.iter().map(move |o| (g.n, o.fold, o.error)))
    }
}
