//! Dataset CSV ingestion, JSON fit reports, and the plain-text summary table.
//!
//! CSV format: header `curve_id,n,error` or `curve_id,n,error,fold`, one
//! measured error (percent, 0-100) per row, `#` starting a comment line.
//! The fold column may be blank per row. Rows may appear in any order;
//! parsing groups them per curve and canonicalizes the order.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{FitConfig, FitResult};
use crate::model::{self, CurveSummary, PowerLawParams};
use crate::observations::{ObservationSet, SizeUnit};
use crate::variance::VarianceModel;

/// Bumped whenever the report layout changes incompatibly.
pub const SCHEMA_VERSION: u32 = 1;

/// Serializable record of one fitted curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub curve_id: String,
    pub summary: CurveSummary,
    pub params: PowerLawParams,
    /// Parameter covariance, row-major, k x k in (alpha, eta[, delta]) order
    /// for the linear parameters of the variant.
    pub covariance: Vec<Vec<f64>>,
    pub objective: f64,
    pub r_squared: f64,
    pub variance_model: VarianceModel,
    pub fit_config: FitConfig,
    pub size_unit: SizeUnit,
    /// Largest size seen during fitting; lets consumers flag extrapolations
    /// far beyond the data without re-reading it.
    pub max_observed_n: u64,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn from_fit(
        curve_id: &str,
        obs: &ObservationSet,
        fit: &FitResult,
        cfg: &FitConfig,
        n_ref: u64,
    ) -> Result<Report> {
        let summary = model::summarize(&fit.params, n_ref)?;
        let max_observed_n = obs
            .max_n()
            .ok_or_else(|| Error::Domain("cannot report on an empty dataset".into()))?;
        Ok(Report {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            curve_id: curve_id.to_string(),
            summary,
            params: fit.params,
            covariance: fit.covariance.to_rows(),
            objective: fit.objective,
            r_squared: fit.r_squared,
            variance_model: fit.variance_model,
            fit_config: *cfg,
            size_unit: obs.unit(),
            max_observed_n,
            warnings: fit.warnings.iter().map(|w| w.to_string()).collect(),
        })
    }

    /// Pretty JSON with a trailing newline; stable field order.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization is total");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Report> {
        Ok(serde_json::from_str(text)?)
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse { line, msg: format!("{other:?}") },
    }
}

fn field_error(line: u64, what: &str, raw: &str) -> Error {
    Error::Parse { line: Some(line), msg: format!("invalid {what}: {raw:?}") }
}

/// Parses the CSV format into one observation set per curve_id, keyed in
/// lexicographic order. With `fraction`, the error column holds fractions
/// in [0, 1] and is converted to percent.
pub fn parse_dataset<R: Read>(reader: R, fraction: bool) -> Result<BTreeMap<String, ObservationSet>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers().map_err(csv_error)?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let with_fold = match cols.as_slice() {
        ["curve_id", "n", "error"] => false,
        ["curve_id", "n", "error", "fold"] => true,
        _ => {
            return Err(Error::Parse {
                line: Some(1),
                msg: format!(
                    "header must be curve_id,n,error[,fold], got {:?}",
                    cols.join(",")
                ),
            })
        }
    };

    let mut rows: BTreeMap<String, Vec<(u64, Option<u32>, f64)>> = BTreeMap::new();
    let mut seen: HashSet<(String, u64, u32)> = HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());

        let curve_id = record.get(0).unwrap_or("");
        if curve_id.is_empty() {
            return Err(field_error(line, "curve_id", curve_id));
        }
        let raw_n = record.get(1).unwrap_or("");
        let n: u64 = raw_n.parse().map_err(|_| field_error(line, "training size", raw_n))?;
        if n == 0 {
            return Err(Error::Parse {
                line: Some(line),
                msg: "training size must be >= 1".into(),
            });
        }
        let raw_e = record.get(2).unwrap_or("");
        let mut error: f64 = raw_e.parse().map_err(|_| field_error(line, "error", raw_e))?;
        if fraction {
            if !(0.0..=1.0).contains(&error) {
                return Err(Error::Parse {
                    line: Some(line),
                    msg: format!("fractional error must lie in [0, 1], got {error}"),
                });
            }
            error *= 100.0;
        }
        if !error.is_finite() || !(0.0..=100.0).contains(&error) {
            return Err(Error::Parse {
                line: Some(line),
                msg: format!("error must lie in [0, 100] percent, got {raw_e}"),
            });
        }
        let fold = if with_fold {
            let raw_f = record.get(3).unwrap_or("");
            if raw_f.is_empty() {
                None
            } else {
                Some(raw_f.parse::<u32>().map_err(|_| field_error(line, "fold", raw_f))?)
            }
        } else {
            None
        };
        if let Some(f) = fold {
            if !seen.insert((curve_id.to_string(), n, f)) {
                return Err(Error::Parse {
                    line: Some(line),
                    msg: format!("duplicate measurement for ({curve_id}, n={n}, fold={f})"),
                });
            }
        }
        rows.entry(curve_id.to_string()).or_default().push((n, fold, error));
    }

    let mut out = BTreeMap::new();
    for (id, curve_rows) in rows {
        out.insert(id, ObservationSet::from_rows(curve_rows)?);
    }
    Ok(out)
}

/// Writes the four-column CSV form (fold blank where unknown). Values use
/// the shortest representation that parses back to the same f64, so
/// write-then-parse is lossless.
pub fn write_dataset<W: Write>(writer: W, curves: &BTreeMap<String, ObservationSet>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["curve_id", "n", "error", "fold"]).map_err(csv_error)?;
    for (id, obs) in curves {
        for (n, fold, error) in obs.rows() {
            wtr.write_record([
                id.as_str(),
                &n.to_string(),
                &format!("{error}"),
                &fold.map(|f| f.to_string()).unwrap_or_default(),
            ])
            .map_err(csv_error)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Fixed-precision comparison table: e_N and beta_N to one decimal place,
/// gamma to two (round half to even).
pub fn render_summary_table(reports: &[Report]) -> String {
    let id_width = reports
        .iter()
        .map(|r| r.curve_id.len())
        .chain(std::iter::once("curve_id".len()))
        .max()
        .unwrap_or(8);
    let mut out = String::new();
    out.push_str(&format!(
        "{:<w$}  {:>8}  {:>8}  {:>6}\n",
        "curve_id",
        "e_N",
        "beta_N",
        "gamma",
        w = id_width
    ));
    for r in reports {
        out.push_str(&format!(
            "{:<w$}  {:>8.1}  {:>8.1}  {:>6.2}\n",
            r.curve_id,
            r.summary.e_ref,
            r.summary.beta_ref,
            r.summary.gamma,
            w = id_width
        ));
    }
    out
}
