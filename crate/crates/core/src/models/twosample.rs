use serde::{Deserialize, Serialize};

use crate::dist::{t_pdf, t_sf, t_upper_quantile, ChiMixture};
use crate::engine::{Draw, RocFunction, SupportKind, TestProblem};
use crate::{check_closed_unit, check_open_unit, Error, Hypothesis, Result, RngStream};

use super::StudyRecord;

/// Two independent samples of size `n`, `X ~ N(mu0, sigma^2)` and
/// `Y ~ N(mu, sigma^2)`, testing `mu = mu0` against `mu = mu1` with the
/// pooled-variance t statistic on `2(n - 1)` degrees of freedom.
#[derive(Debug, Clone)]
pub struct TwoSampleT {
    mu0: f64,
    mu1: f64,
    sigma: f64,
    n: usize,
    mixture: ChiMixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleParams {
    pub mu0: f64,
    pub mu1: f64,
    pub sigma: f64,
    pub n: usize,
}

impl TwoSampleT {
    pub fn new(mu0: f64, mu1: f64, sigma: f64, n: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        if !(mu0.is_finite() && mu1.is_finite()) || mu1 < mu0 {
            return Err(Error::domain(format!(
                "need finite mu1 >= mu0, got mu0 = {mu0}, mu1 = {mu1}"
            )));
        }
        if n < 2 {
            return Err(Error::domain(format!("two-sample t needs n >= 2, got {n}")));
        }
        let mixture = ChiMixture::new(2.0 * (n as f64 - 1.0))?;
        Ok(Self {
            mu0,
            mu1,
            sigma,
            n,
            mixture,
        })
    }

    pub fn params(&self) -> TwoSampleParams {
        TwoSampleParams {
            mu0: self.mu0,
            mu1: self.mu1,
            sigma: self.sigma,
            n: self.n,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn df(&self) -> f64 {
        2.0 * (self.n as f64 - 1.0)
    }

    /// `(mu1 - mu0) / (sigma sqrt(2 / n))`.
    pub fn ncp(&self) -> f64 {
        (self.mu1 - self.mu0) / (self.sigma * (2.0 / self.n as f64).sqrt())
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.mu0, self.mu1, self.sigma, n)
    }

    fn critical(&self, alpha: f64) -> f64 {
        t_upper_quantile(alpha, self.df()).unwrap_or(f64::NAN)
    }

    /// Pooled t statistic and the full-data log likelihood ratio.
    fn simulate_statistic(&self, truth: Hypothesis, rng: &mut RngStream) -> (f64, f64) {
        let mu = match truth {
            Hypothesis::H0 => self.mu0,
            Hypothesis::H1 => self.mu1,
        };
        let n = self.n as f64;
        let xs: Vec<f64> = (0..self.n).map(|_| rng.normal(self.mu0, self.sigma)).collect();
        let ys: Vec<f64> = (0..self.n).map(|_| rng.normal(mu, self.sigma)).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
        let (mx, my) = (mean(&xs), mean(&ys));
        let ss = |v: &[f64], m: f64| v.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
        let pooled = (ss(&xs, mx) + ss(&ys, my)) / (2.0 * (n - 1.0));
        let t = (my - mx) / (pooled.sqrt() * (2.0 / n).sqrt());
        // The X sample has the same law under both hypotheses.
        let kappa = self.mu1 - self.mu0;
        let log_lr = ys
            .iter()
            .map(|y| kappa * (y - self.mu0 - 0.5 * kappa))
            .sum::<f64>()
            / (self.sigma * self.sigma);
        (t, log_lr)
    }
}

impl TestProblem for TwoSampleT {
    fn kind(&self) -> SupportKind {
        SupportKind::Continuous
    }
    fn null_tail(&self, s: f64) -> f64 {
        t_sf(s, self.df()).unwrap_or(f64::NAN)
    }
    fn alt_tail(&self, s: f64) -> f64 {
        self.mixture.sf(s, self.ncp())
    }
    fn null_density(&self, s: f64) -> f64 {
        t_pdf(s, self.df()).unwrap_or(f64::NAN)
    }
    fn alt_density(&self, s: f64) -> f64 {
        self.mixture.pdf(s, self.ncp())
    }
    fn null_upper_quantile(&self, alpha: f64) -> Option<f64> {
        t_upper_quantile(alpha, self.df()).ok()
    }
    fn sample(&self, truth: Hypothesis, rng: &mut RngStream) -> Draw {
        let (t, log_lr) = self.simulate_statistic(truth, rng);
        Draw {
            statistic: t,
            log_lr,
        }
    }
}

impl RocFunction for TwoSampleT {
    fn rho(&self, alpha: f64) -> f64 {
        if alpha <= 0.0 || alpha >= 1.0 || self.ncp() == 0.0 {
            return alpha.clamp(0.0, 1.0);
        }
        self.mixture.sf(self.critical(alpha), self.ncp())
    }
    fn rho_complement(&self, alpha: f64) -> f64 {
        if alpha <= 0.0 || alpha >= 1.0 || self.ncp() == 0.0 {
            return 1.0 - alpha.clamp(0.0, 1.0);
        }
        self.mixture.cdf(self.critical(alpha), self.ncp())
    }
    fn rho_prime(&self, alpha: f64) -> f64 {
        if self.ncp() == 0.0 {
            return 1.0;
        }
        let q = self.critical(alpha);
        self.mixture.pdf(q, self.ncp()) / t_pdf(q, self.df()).unwrap_or(f64::NAN)
    }
    fn log_rho_prime(&self, alpha: f64) -> f64 {
        if self.ncp() == 0.0 {
            return 0.0;
        }
        let q = self.critical(alpha);
        self.mixture.pdf(q, self.ncp()).ln() - t_pdf(q, self.df()).unwrap_or(f64::NAN).ln()
    }
}

/// `rho_m(alpha) = 1 - T_nc(t_{2(n-1); alpha})` on `[0, 1]`.
pub fn twosample_roc(model: &TwoSampleT, alpha: f64) -> Result<f64> {
    check_closed_unit("alpha", alpha)?;
    Ok(model.rho(alpha))
}

/// `rho_m'(alpha)`, the noncentral over central t density at the critical
/// value, on `(0, 1)`.
pub fn twosample_roc_deriv(model: &TwoSampleT, alpha: f64) -> Result<f64> {
    check_open_unit("alpha", alpha)?;
    Ok(model.rho_prime(alpha))
}

/// Simulates one study: draws both samples, forms the pooled t statistic,
/// rejects when `T >= t_{2(n-1); alpha}` and reports `p = Pr0{T > t}`.
pub fn simulate_twosample_study(
    model: &TwoSampleT,
    truth: Hypothesis,
    alpha: f64,
    rng: &mut RngStream,
) -> Result<StudyRecord> {
    check_open_unit("alpha", alpha)?;
    let (t, log_lr) = model.simulate_statistic(truth, rng);
    let critical = t_upper_quantile(alpha, model.df())?;
    let p = t_sf(t, model.df())?;
    let ratio = if model.ncp() == 0.0 {
        0.0
    } else {
        model.mixture.pdf(t, model.ncp()).ln() - t_pdf(t, model.df())?.ln()
    };
    Ok(StudyRecord {
        n: model.n,
        alpha,
        statistic: t,
        d: u8::from(t >= critical),
        p,
        rho: model.rho(alpha),
        log_lr_x: log_lr,
        log_rho_prime: ratio,
    })
}
