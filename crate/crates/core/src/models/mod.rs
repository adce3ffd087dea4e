//! Concrete test problems and effect-size families.

mod normal;
mod tea;
mod twosample;

use serde::{Deserialize, Serialize};

pub use normal::{normal_roc, normal_roc_deriv, OneSampleNormal};
pub use tea::{TeaTastingBinomial, TeaTastingFisher, TeaVersion};
pub use twosample::{
    simulate_twosample_study, twosample_roc, twosample_roc_deriv, TwoSampleParams, TwoSampleT,
};

use crate::engine::{self, RocFunction, TestProblem};
use crate::{check_open_unit, Error, Hypothesis, Result, RngStream};

/// Everything one simulated study can report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub n: usize,
    pub alpha: f64,
    pub statistic: f64,
    /// Decision of the level-`alpha` MP rule.
    pub d: u8,
    /// Realized P-functional.
    pub p: f64,
    /// Power of the rule, `rho(alpha)`.
    pub rho: f64,
    /// Full-data log likelihood ratio.
    pub log_lr_x: f64,
    /// `log rho'(p)`, the log likelihood ratio carried by `p`.
    pub log_rho_prime: f64,
}

/// Simulates one study of `problem` through the generic engine.
///
/// `log rho'(p)` is taken as the log likelihood ratio of the statistic at
/// its observed value, which is what `rho'` evaluates to at `p`, and stays
/// finite when `p` underflows.
pub fn simulate_study<P: TestProblem + RocFunction + ?Sized>(
    problem: &P,
    n: usize,
    truth: Hypothesis,
    alpha: f64,
    rng: &mut RngStream,
) -> Result<StudyRecord> {
    check_open_unit("alpha", alpha)?;
    let rule = engine::build_rule(problem, alpha)?;
    let draw = problem.sample(truth, rng);
    let u = rng.uniform();
    Ok(StudyRecord {
        n,
        alpha,
        statistic: draw.statistic,
        d: engine::decide(&rule, draw.statistic, u)?,
        p: engine::p_functional(problem, draw.statistic, u)?,
        rho: problem.rho(alpha),
        log_lr_x: draw.log_lr,
        log_rho_prime: problem.likelihood_ratio(draw.statistic).ln(),
    })
}

impl RocFunction for TeaTastingBinomial {
    fn rho(&self, alpha: f64) -> f64 {
        engine::roc(self, alpha).unwrap_or(f64::NAN)
    }
    fn rho_prime(&self, alpha: f64) -> f64 {
        engine::roc_deriv(self, alpha).unwrap_or(f64::NAN)
    }
}

impl RocFunction for TeaTastingFisher {
    fn rho(&self, alpha: f64) -> f64 {
        engine::roc(self, alpha).unwrap_or(f64::NAN)
    }
    fn rho_prime(&self, alpha: f64) -> f64 {
        engine::roc_deriv(self, alpha).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// One-sample normal; the effect is `xi = (mu1 - mu0) / sigma`.
    Normal,
    /// Pooled two-sample t; the effect is `xi = (mu1 - mu0) / sigma`.
    TwoSample,
    /// Tea tasting, binomial version; the effect is `theta1`.
    TeaBinomial,
    /// Tea tasting, choose-four version; the effect is `theta1`.
    TeaFisher,
}

/// A model indexed by a scalar effect, for profiles and contour plots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelFamily {
    pub kind: FamilyKind,
    /// Per-group sample size; ignored by the tea-tasting families.
    pub n: usize,
}

impl ModelFamily {
    pub fn new(kind: FamilyKind, n: usize) -> Result<Self> {
        let min = match kind {
            FamilyKind::TwoSample => 2,
            FamilyKind::Normal => 1,
            FamilyKind::TeaBinomial | FamilyKind::TeaFisher => 0,
        };
        if n < min {
            return Err(Error::domain(format!("{kind:?} family needs n >= {min}, got {n}")));
        }
        Ok(Self { kind, n })
    }

    /// ROC of the member with the given effect.
    pub fn roc_at(&self, effect: f64) -> Result<Box<dyn RocFunction>> {
        Ok(match self.kind {
            FamilyKind::Normal => Box::new(OneSampleNormal::new(0.0, effect, 1.0, self.n)?),
            FamilyKind::TwoSample => Box::new(TwoSampleT::new(0.0, effect, 1.0, self.n)?),
            FamilyKind::TeaBinomial => Box::new(TeaTastingBinomial::new(effect)?),
            FamilyKind::TeaFisher => Box::new(TeaTastingFisher::new(effect)?),
        })
    }

    /// Default effect axis: `xi` in `[0.1, 3.0]` step .05, or `theta1` in
    /// `[.51, .99]` step .01.
    pub fn default_effects(&self) -> Vec<f64> {
        match self.kind {
            FamilyKind::Normal | FamilyKind::TwoSample => {
                (0..=58).map(|i| 0.1 + 0.05 * i as f64).collect()
            }
            FamilyKind::TeaBinomial | FamilyKind::TeaFisher => {
                (51..=99).map(|i| i as f64 / 100.0).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generic_study_on_normal_model() {
        let m = OneSampleNormal::new(0.0, 1.0, 1.0, 5).unwrap();
        let mut rng = RngStream::new(3, 1);
        for _ in 0..100 {
            let rec = simulate_study(&m, 5, Hypothesis::H0, 0.05, &mut rng).unwrap();
            assert_eq!(rec.d == 1, rec.p <= 0.05);
            // the x-channel and p-channel ratios coincide for this model
            assert!((rec.log_lr_x - rec.log_rho_prime).abs() < 1e-10);
            assert!((rec.log_rho_prime - m.log_rho_prime(rec.p)).abs() < 1e-7);
        }
    }

    #[test]
    fn family_members() {
        let f = ModelFamily::new(FamilyKind::TeaFisher, 0).unwrap();
        let r = f.roc_at(0.8).unwrap();
        assert!(r.rho(0.05) > 0.05);
        assert!(ModelFamily::new(FamilyKind::TwoSample, 1).is_err());
        assert_eq!(f.default_effects().len(), 49);
    }
}
