use serde::{Deserialize, Serialize};

use crate::dist::{norm_cdf, norm_pdf, norm_sf, norm_upper_quantile};
use crate::engine::{Draw, RocFunction, SupportKind, TestProblem};
use crate::{check_closed_unit, check_open_unit, Error, Hypothesis, Result, RngStream};

/// `n` iid `N(mu, sigma^2)` observations, testing `mu = mu0` against
/// `mu = mu1 >= mu0` with `sigma` known. The statistic is
/// `Z = sqrt(n) (xbar - mu0) / sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSampleNormal {
    pub mu0: f64,
    pub mu1: f64,
    pub sigma: f64,
    pub n: usize,
}

impl OneSampleNormal {
    pub fn new(mu0: f64, mu1: f64, sigma: f64, n: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        if !(mu0.is_finite() && mu1.is_finite()) || mu1 < mu0 {
            return Err(Error::domain(format!(
                "need finite mu1 >= mu0, got mu0 = {mu0}, mu1 = {mu1}"
            )));
        }
        if n == 0 {
            return Err(Error::domain("sample size must be at least 1"));
        }
        Ok(Self { mu0, mu1, sigma, n })
    }

    /// Standardised effect `(mu1 - mu0) / sigma`.
    pub fn xi(&self) -> f64 {
        (self.mu1 - self.mu0) / self.sigma
    }

    /// `xi sqrt(n)`, the mean of `Z` under `H1`.
    pub fn shift(&self) -> f64 {
        self.xi() * (self.n as f64).sqrt()
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.mu0, self.mu1, self.sigma, n)
    }
}

impl TestProblem for OneSampleNormal {
    fn kind(&self) -> SupportKind {
        SupportKind::Continuous
    }
    fn null_tail(&self, s: f64) -> f64 {
        norm_sf(s)
    }
    fn alt_tail(&self, s: f64) -> f64 {
        norm_sf(s - self.shift())
    }
    fn null_density(&self, s: f64) -> f64 {
        norm_pdf(s)
    }
    fn alt_density(&self, s: f64) -> f64 {
        norm_pdf(s - self.shift())
    }
    fn null_upper_quantile(&self, alpha: f64) -> Option<f64> {
        norm_upper_quantile(alpha).ok()
    }
    fn likelihood_ratio(&self, s: f64) -> f64 {
        let d = self.shift();
        (d * s - 0.5 * d * d).exp()
    }
    fn sample(&self, truth: Hypothesis, rng: &mut RngStream) -> Draw {
        let mu = match truth {
            Hypothesis::H0 => self.mu0,
            Hypothesis::H1 => self.mu1,
        };
        let root_n = (self.n as f64).sqrt();
        let xbar = rng.normal(mu, self.sigma / root_n);
        let z = root_n * (xbar - self.mu0) / self.sigma;
        let d = self.shift();
        Draw {
            statistic: z,
            log_lr: d * z - 0.5 * d * d,
        }
    }
}

/// `rho(alpha) = 1 - Phi(z_{1-alpha} - xi sqrt(n))` on `[0, 1]`.
pub fn normal_roc(model: &OneSampleNormal, alpha: f64) -> Result<f64> {
    check_closed_unit("alpha", alpha)?;
    Ok(model.rho(alpha))
}

/// `rho'(alpha) = exp{xi sqrt(n) (z_{1-alpha} - xi sqrt(n) / 2)}` on `(0, 1)`.
pub fn normal_roc_deriv(model: &OneSampleNormal, alpha: f64) -> Result<f64> {
    check_open_unit("alpha", alpha)?;
    Ok(model.rho_prime(alpha))
}

impl RocFunction for OneSampleNormal {
    fn rho(&self, alpha: f64) -> f64 {
        let d = self.shift();
        if alpha <= 0.0 || alpha >= 1.0 || d == 0.0 {
            return alpha.clamp(0.0, 1.0);
        }
        norm_sf(-norm_quantile_sign(alpha) - d)
    }
    fn rho_complement(&self, alpha: f64) -> f64 {
        let d = self.shift();
        if alpha <= 0.0 || alpha >= 1.0 || d == 0.0 {
            return 1.0 - alpha.clamp(0.0, 1.0);
        }
        norm_cdf(-norm_quantile_sign(alpha) - d)
    }
    fn rho_prime(&self, alpha: f64) -> f64 {
        self.log_rho_prime(alpha).exp()
    }
    fn log_rho_prime(&self, alpha: f64) -> f64 {
        let d = self.shift();
        if d == 0.0 {
            return 0.0;
        }
        d * (-norm_quantile_sign(alpha) - 0.5 * d)
    }
}

// Phi^{-1}(alpha); callers pass alpha in (0, 1).
fn norm_quantile_sign(alpha: f64) -> f64 {
    -norm_upper_quantile(alpha).unwrap_or(f64::NAN)
}
