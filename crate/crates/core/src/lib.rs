//! Neyman-Pearson decision processes and what can be learned from them.
//!
//! The crate is organised bottom-up:
//!
//! - [`dist`]: normal, Student t, noncentral t and the discrete families used
//!   by the tea-tasting models, plus the seedable [`rng::RngStream`].
//! - [`engine`]: the generic most-powerful randomized rule, the P-functional
//!   and the ROC function `rho(alpha)` with its derivative.
//! - [`models`]: concrete test problems (one-sample normal, pooled two-sample
//!   t, binomial and Fisher tea tasting) and effect-size families.
//! - [`belief`], [`sequential`], [`bias`]: Bayesian updating of the
//!   probability of `H0` from data, decisions or P-values, the sequential
//!   learning loop, and reporting-bias gates.
//! - [`los`]: minimax, Bayes and discrimination-optimal levels of
//!   significance and sample-size determination.
//! - [`oracles`]: brute-force and Monte Carlo checks used by the test suites.

pub mod belief;
pub mod bias;
pub mod dist;
pub mod engine;
pub mod error;
pub mod los;
pub mod models;
pub mod oracles;
pub mod quad;
pub mod rng;
pub mod roots;
pub mod sequential;

pub use error::{Error, Result};
pub use rng::RngStream;

/// Which hypothesis generated the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

pub(crate) fn check_open_unit(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must lie in (0, 1), got {value}")))
    }
}

pub(crate) fn check_closed_unit(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must lie in [0, 1], got {value}")))
    }
}
