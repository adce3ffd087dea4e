//! Updating the probability of `H0` from data, decisions or P-values.

use serde::{Deserialize, Serialize};

use crate::engine::RocFunction;
use crate::models::ModelFamily;
use crate::{check_closed_unit, check_open_unit, Error, Result};

/// Current probability that `H0` is true, held as `log(kappa1 / kappa0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    log_odds: f64,
}

impl Belief {
    pub fn new(kappa0: f64) -> Result<Self> {
        check_open_unit("kappa0", kappa0)?;
        Ok(Self {
            log_odds: (1.0 - kappa0).ln() - kappa0.ln(),
        })
    }

    pub fn from_log_odds(log_odds: f64) -> Self {
        Self { log_odds }
    }

    /// `log(kappa1 / kappa0)`; plus infinity once `H0` has been ruled out.
    pub fn log_odds(&self) -> f64 {
        self.log_odds
    }

    pub fn kappa0(&self) -> f64 {
        logistic(-self.log_odds)
    }

    pub fn kappa1(&self) -> f64 {
        logistic(self.log_odds)
    }

    /// Posterior after evidence with likelihood ratio `f1 / f0`.
    pub fn update(&self, evidence: &Evidence) -> Result<Self> {
        Ok(self.update_log_lr(evidence.log_likelihood_ratio()?))
    }

    /// Adds a log likelihood ratio to the log odds. `-inf` (evidence
    /// impossible under `H1`) is allowed.
    pub fn update_log_lr(&self, log_lr: f64) -> Self {
        Self {
            log_odds: self.log_odds + log_lr,
        }
    }
}

/// `1 / (1 + e^{-x})` without overflow.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(a / (1 - a))`.
pub fn logit(a: f64) -> f64 {
    a.ln() - (-a).ln_1p()
}

/// What a study reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "channel", rename_all = "snake_case")]
pub enum Evidence {
    /// `Lambda(x) = f1(x) / f0(x)` for the full data.
    RawLikelihoodRatio { lambda: f64 },
    /// `log Lambda(x)`, for likelihood ratios outside the float range.
    LogLikelihoodRatio { log_lambda: f64 },
    /// The decision `d` of a level-`alpha` MP rule with power `rho`.
    Decision { d: u8, alpha: f64, rho: f64 },
    /// A realized P-value and `rho'(p)`.
    PValue { p: f64, rho_prime: f64 },
    /// A realized P-value and `log rho'(p)`.
    LogPValue { p: f64, log_rho_prime: f64 },
}

impl Evidence {
    pub fn log_likelihood_ratio(&self) -> Result<f64> {
        match *self {
            Evidence::RawLikelihoodRatio { lambda } => log_of_ratio("likelihood ratio", lambda),
            Evidence::LogLikelihoodRatio { log_lambda } => finite_log(log_lambda),
            Evidence::Decision { d, alpha, rho } => log_lambda_d(d, alpha, rho),
            Evidence::PValue { p, rho_prime } => {
                check_closed_unit("p", p)?;
                log_of_ratio("rho'(p)", rho_prime)
            }
            Evidence::LogPValue { p, log_rho_prime } => {
                check_closed_unit("p", p)?;
                finite_log(log_rho_prime)
            }
        }
    }
}

fn log_of_ratio(what: &str, v: f64) -> Result<f64> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::domain(format!("{what} must be finite and nonnegative, got {v}")));
    }
    Ok(v.ln())
}

fn finite_log(v: f64) -> Result<f64> {
    if v.is_nan() || v == f64::INFINITY {
        return Err(Error::domain(format!("log likelihood ratio must be below +inf, got {v}")));
    }
    Ok(v)
}

fn check_power(alpha: f64, rho: f64) -> Result<()> {
    check_open_unit("alpha", alpha)?;
    if !(rho >= alpha && rho <= 1.0) {
        return Err(Error::domain(format!("rho must lie in [alpha, 1], got {rho} at alpha {alpha}")));
    }
    Ok(())
}

/// `Lambda_D = (rho/alpha)^d ((1-rho)/(1-alpha))^(1-d)`.
pub fn lambda_d(d: u8, alpha: f64, rho: f64) -> Result<f64> {
    check_power(alpha, rho)?;
    match d {
        1 => Ok(rho / alpha),
        0 => Ok((1.0 - rho) / (1.0 - alpha)),
        _ => Err(Error::domain(format!("decision must be 0 or 1, got {d}"))),
    }
}

/// `log Lambda_D`.
pub fn log_lambda_d(d: u8, alpha: f64, rho: f64) -> Result<f64> {
    check_power(alpha, rho)?;
    match d {
        1 => Ok(rho.ln() - alpha.ln()),
        0 => Ok((-rho).ln_1p() - (-alpha).ln_1p()),
        _ => Err(Error::domain(format!("decision must be 0 or 1, got {d}"))),
    }
}

/// `l_D = d log(rho/alpha) + (1-d) log((1-rho)/(1-alpha))`, using the
/// ROC's own complement for `1 - rho`.
pub fn l_d<R: RocFunction + ?Sized>(roc: &R, d: u8, alpha: f64) -> Result<f64> {
    check_open_unit("alpha", alpha)?;
    match d {
        1 => Ok(roc.rho(alpha).ln() - alpha.ln()),
        0 => Ok(roc.rho_complement(alpha).ln() - (-alpha).ln_1p()),
        _ => Err(Error::domain(format!("decision must be 0 or 1, got {d}"))),
    }
}

/// `l_P = log rho'(p)`.
pub fn l_p<R: RocFunction + ?Sized>(roc: &R, p: f64) -> Result<f64> {
    check_open_unit("p", p)?;
    Ok(roc.log_rho_prime(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `l_D` for the given decision; the second axis is `logit(alpha)`.
    Decision { d: u8 },
    /// `l_P`; the second axis is `logit(p)`.
    PValue,
}

/// Values of `l_D` or `l_P` on an (effect, logit) grid.
/// `values[i][j]` belongs to `effects[i]` and `logits[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileGrid {
    pub kind: ProfileKind,
    pub effects: Vec<f64>,
    pub logits: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl ProfileGrid {
    /// The column of values at logit index `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[j]).collect()
    }
}

fn grid_values(
    family: &ModelFamily,
    kind: ProfileKind,
    effects: &[f64],
    logits: &[f64],
) -> Result<Vec<Vec<f64>>> {
    effects
        .iter()
        .map(|&e| {
            let roc = family.roc_at(e)?;
            logits
                .iter()
                .map(|&l| {
                    let a = logistic(l);
                    match kind {
                        ProfileKind::Decision { d } => l_d(&*roc, d, a),
                        ProfileKind::PValue => l_p(&*roc, a),
                    }
                })
                .collect()
        })
        .collect()
}

/// `l_D` over the effect grid at one `(d, alpha)`.
pub fn l_d_profile(family: &ModelFamily, d: u8, alpha: f64, effects: &[f64]) -> Result<ProfileGrid> {
    check_open_unit("alpha", alpha)?;
    let kind = ProfileKind::Decision { d };
    let logits = vec![logit(alpha)];
    let values = grid_values(family, kind, effects, &logits)?;
    Ok(ProfileGrid {
        kind,
        effects: effects.to_vec(),
        logits,
        values,
    })
}

/// `l_P` over the effect grid at one `p`.
pub fn l_p_profile(family: &ModelFamily, p: f64, effects: &[f64]) -> Result<ProfileGrid> {
    check_open_unit("p", p)?;
    let kind = ProfileKind::PValue;
    let logits = vec![logit(p)];
    let values = grid_values(family, kind, effects, &logits)?;
    Ok(ProfileGrid {
        kind,
        effects: effects.to_vec(),
        logits,
        values,
    })
}

/// `logit(.05)`, always included in contour grids whose range covers it.
pub const LOGIT_FIVE_PERCENT: f64 = -2.944_438_979_166_440_5;

fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
        .collect()
}

/// Dense grid of `l_D` or `l_P` over `effect_range x logit_range`.
pub fn contour_grid(
    family: &ModelFamily,
    kind: ProfileKind,
    effect_range: (f64, f64),
    logit_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<ProfileGrid> {
    if resolution.0 < 2 || resolution.1 < 2 {
        return Err(Error::domain("contour resolution must be at least 2 per axis"));
    }
    for (name, (lo, hi)) in [("effect", effect_range), ("logit", logit_range)] {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::domain(format!("empty {name} range [{lo}, {hi}]")));
        }
    }
    let effects = linspace(effect_range.0, effect_range.1, resolution.0);
    let mut logits = linspace(logit_range.0, logit_range.1, resolution.1);
    if (logit_range.0..=logit_range.1).contains(&LOGIT_FIVE_PERCENT)
        && !logits.iter().any(|&l| (l - LOGIT_FIVE_PERCENT).abs() < 1e-12)
    {
        logits.push(LOGIT_FIVE_PERCENT);
        logits.sort_by(f64::total_cmp);
    }
    let values = grid_values(family, kind, &effects, &logits)?;
    Ok(ProfileGrid {
        kind,
        effects,
        logits,
        values,
    })
}
