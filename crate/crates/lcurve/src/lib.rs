//! Learning-curve fitting for classifiers.
//!
//! Test error as a function of training set size n is modeled as the power
//! law e(n) = alpha + eta * n^gamma with gamma in (-1, 0): error falls with
//! more data and levels off at the asymptote alpha. Fits are weighted least
//! squares over a gamma grid, with observation variances taken from a
//! two-component noise model sigma_i^2 = sigma0^2 + sigma_hat^2 / n_i.
//!
//! A fitted curve is usually quoted as the pair (e_N, beta_N) at a reference
//! size N: the error itself and the data reliance -2 * n * de/dn, which
//! says how much of the current error still responds to added data. The
//! linearized rule e(d*N) ~= e_N + (1/sqrt(d) - 1) * beta_N extrapolates a
//! fit without refitting.
//!
//! Modules: [`model`] (curve algebra), [`fit`] (estimation), [`variance`]
//! (noise model), [`validate`] (LOSO, t-tests, stability), [`synth`]
//! (deterministic synthetic data), [`io`] (CSV/JSON/tables), [`plot`]
//! (SVG), [`cli`] (command line).

pub mod cli;
pub mod error;
pub mod fit;
pub mod io;
pub mod model;
pub mod observations;
pub mod plot;
mod rng;
mod smat;
pub mod stats;
pub mod synth;
pub mod validate;
pub mod variance;

pub use error::{Error, Result, Warning};
