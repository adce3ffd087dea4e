//! Publication gates on decisions and P-values, and their effect on what an
//! updater learns.

use serde::{Deserialize, Serialize};

use crate::belief::logistic;
use crate::engine::RocFunction;
use crate::los::finite_end;
use crate::models::StudyRecord;
use crate::roots::{self, Tolerance};
use crate::sequential::{run_filtered, Channel, PublicationFilter, SequentialConfig, StudyDesign, Trajectory};
use crate::{check_closed_unit, check_open_unit, quad, Error, Hypothesis, Result, RngStream};

/// Publish with probability `eta0` after `d = 0` and `eta1` after `d = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionGate {
    pub eta0: f64,
    pub eta1: f64,
}

impl DecisionGate {
    /// Requires `0 <= eta0 <= eta1 <= 1` and `eta1 > 0`. Equal rates give
    /// the unbiased gate.
    pub fn new(eta0: f64, eta1: f64) -> Result<Self> {
        let g = Self { eta0, eta1 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        check_closed_unit("eta0", self.eta0)?;
        check_closed_unit("eta1", self.eta1)?;
        if self.eta1 == 0.0 {
            return Err(Error::domain("eta1 = 0: nothing is ever published"));
        }
        if self.eta0 > self.eta1 {
            return Err(Error::domain(format!(
                "gate favours non-rejections: eta0 = {} > eta1 = {}",
                self.eta0, self.eta1
            )));
        }
        Ok(())
    }
}

/// `P0*(D* = 1) = alpha eta1 / (alpha eta1 + (1 - alpha) eta0)`.
pub fn biased_size(gate: &DecisionGate, alpha: f64) -> Result<f64> {
    gate.validate()?;
    check_open_unit("alpha", alpha)?;
    let num = alpha * gate.eta1;
    Ok(num / (num + (1.0 - alpha) * gate.eta0))
}

/// `E0[V] = alpha log(rho/alpha) + (1-alpha) log((1-rho)/(1-alpha))`.
pub fn expected_v(alpha: f64, rho: f64) -> Result<f64> {
    check_open_unit("alpha", alpha)?;
    check_power(alpha, rho)?;
    Ok(alpha * (rho / alpha).ln() + (1.0 - alpha) * ((-rho).ln_1p() - (-alpha).ln_1p()))
}

fn check_power(alpha: f64, rho: f64) -> Result<()> {
    if !(rho > alpha && rho < 1.0) {
        return Err(Error::domain(format!("rho must lie in (alpha, 1), got {rho} at alpha {alpha}")));
    }
    Ok(())
}

/// Expected log likelihood ratio of a published decision under `H0`:
/// `P0*(D*=1) log[rho(1-alpha) / (alpha(1-rho))] + log[(1-rho)/(1-alpha)]`.
pub fn biased_expected_v(gate: &DecisionGate, alpha: f64, rho: f64) -> Result<f64> {
    let size = biased_size(gate, alpha)?;
    check_power(alpha, rho)?;
    let log_odds_ratio = rho.ln() - alpha.ln() + (-alpha).ln_1p() - (-rho).ln_1p();
    Ok(size * log_odds_ratio + (-rho).ln_1p() - (-alpha).ln_1p())
}

/// Publication probability as a nonincreasing function of `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PValueGate {
    /// `g(p) = 1{p <= cutoff}`.
    Step { cutoff: f64 },
    /// `g(p) = exp(-rate p)`.
    Exponential { rate: f64 },
    /// `g(p) = values[i]` on `[breaks[i-1], breaks[i])`, with `breaks`
    /// ascending inside (0, 1) and one more value than breaks.
    Table { breaks: Vec<f64>, values: Vec<f64> },
}

impl PValueGate {
    pub fn validate(&self) -> Result<()> {
        match self {
            PValueGate::Step { cutoff } => check_open_unit("step cutoff", *cutoff),
            PValueGate::Exponential { rate } => {
                if *rate > 0.0 && rate.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain(format!("exponential rate must be positive, got {rate}")))
                }
            }
            PValueGate::Table { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return Err(Error::domain("table gate needs one more value than breaks"));
                }
                if breaks.windows(2).any(|w| w[0] >= w[1])
                    || breaks.iter().any(|b| !(*b > 0.0 && *b < 1.0))
                {
                    return Err(Error::domain("table breaks must be ascending inside (0, 1)"));
                }
                for v in values {
                    check_closed_unit("gate value", *v)?;
                }
                if values.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::domain("gate must be nonincreasing in p"));
                }
                if values.iter().all(|v| *v == 1.0) {
                    return Err(Error::domain("gate is identically 1"));
                }
                if self.integral() <= 0.0 {
                    return Err(Error::domain("gate is identically 0"));
                }
                Ok(())
            }
        }
    }

    pub fn g(&self, p: f64) -> f64 {
        match self {
            PValueGate::Step { cutoff } => f64::from(u8::from(p <= *cutoff)),
            PValueGate::Exponential { rate } => (-rate * p).exp(),
            PValueGate::Table { breaks, values } => values[breaks.partition_point(|b| *b <= p)],
        }
    }

    /// `int_0^x g(p) dp`.
    pub fn partial_integral(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            PValueGate::Step { cutoff } => x.min(*cutoff),
            PValueGate::Exponential { rate } => -(-rate * x).exp_m1() / rate,
            PValueGate::Table { breaks, values } => {
                let mut acc = 0.0;
                let mut left = 0.0;
                for (i, v) in values.iter().enumerate() {
                    let right = breaks.get(i).copied().unwrap_or(1.0);
                    if x <= left {
                        break;
                    }
                    acc += v * (x.min(right) - left);
                    left = right;
                }
                acc
            }
        }
    }

    pub fn integral(&self) -> f64 {
        self.partial_integral(1.0)
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            PValueGate::Step { cutoff } => vec![*cutoff],
            PValueGate::Exponential { .. } => Vec::new(),
            PValueGate::Table { breaks, .. } => breaks.clone(),
        }
    }
}

/// Density `g(p) / int g` of a published P-value under `H0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasedPDensity {
    gate: PValueGate,
    mass: f64,
}

impl BiasedPDensity {
    pub fn density(&self, p: f64) -> f64 {
        if (0.0..=1.0).contains(&p) {
            self.gate.g(p) / self.mass
        } else {
            0.0
        }
    }

    pub fn cdf(&self, p: f64) -> f64 {
        self.gate.partial_integral(p) / self.mass
    }
}

pub fn biased_p_density(gate: &PValueGate) -> Result<BiasedPDensity> {
    gate.validate()?;
    Ok(BiasedPDensity {
        gate: gate.clone(),
        mass: gate.integral(),
    })
}

fn split_points(extra: &[f64]) -> Vec<f64> {
    let mut cuts = vec![0.0, 1e-8, 1e-4, 0.01, 0.5, 0.99, 1.0 - 1e-4, 1.0 - 1e-8, 1.0];
    cuts.extend(extra.iter().copied().filter(|c| *c > 0.0 && *c < 1.0));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// `E0*[log rho'(P*)] = int_0^1 log rho'(p) gbar(p) dp`.
pub fn biased_expected_logrho<R: RocFunction + ?Sized>(gate: &PValueGate, roc: &R) -> Result<f64> {
    let dens = biased_p_density(gate)?;
    let f = |p: f64| {
        let g = dens.density(p);
        if g == 0.0 {
            0.0
        } else {
            g * roc.log_rho_prime(p)
        }
    };
    let total: f64 = split_points(&gate.breakpoints())
        .windows(2)
        .map(|w| quad::adaptive(f, w[0], w[1], 1e-12))
        .sum();
    if !total.is_finite() {
        return Err(Error::solver("biased expectation did not converge", 0, total));
    }
    Ok(total)
}

/// The `p` at which `rho'(p) = 1`, by root finding on `log rho'` in
/// logit(p).
pub fn rho_prime_crossing<R: RocFunction + ?Sized>(roc: &R) -> Result<f64> {
    let f = |t: f64| roc.log_rho_prime(logistic(t));
    let (lo, _) = finite_end(&f, &[-40.0, -20.0, -10.0])?;
    let (hi, _) = finite_end(&f, &[36.0, 20.0, 10.0])?;
    let root = roots::bracketed(
        f,
        lo,
        hi,
        Tolerance {
            f_tol: 1e-14,
            x_tol: 1e-15,
            max_iter: 400,
        },
    )?;
    Ok(logistic(root.x))
}

/// The gate applied in a biased sequential run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Gate {
    None,
    Decision(DecisionGate),
    PValue(PValueGate),
}

impl Gate {
    pub fn validate(&self) -> Result<()> {
        match self {
            Gate::None => Ok(()),
            Gate::Decision(g) => g.validate(),
            Gate::PValue(g) => g.validate(),
        }
    }
}

impl PublicationFilter for Gate {
    fn publish(&self, record: &StudyRecord, _channel: Channel, rng: &mut RngStream) -> bool {
        match self {
            Gate::None => true,
            Gate::Decision(g) => {
                let eta = if record.d == 1 { g.eta1 } else { g.eta0 };
                rng.uniform() < eta
            }
            Gate::PValue(g) => rng.uniform() < g.g(record.p),
        }
    }
}

/// The sequential loop with unpublished studies withheld from the updater.
/// Every study stays in the trajectory with its `published` flag and the
/// counterfactual unfiltered posterior.
pub fn run_biased_sequential<D: StudyDesign + ?Sized>(
    cfg: &SequentialConfig,
    gate: &Gate,
    truth: Hypothesis,
    design: &D,
    rng: &mut RngStream,
) -> Result<Trajectory> {
    gate.validate()?;
    run_filtered(cfg, truth, design, gate, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::norm_cdf;
    use crate::models::OneSampleNormal;

    #[test]
    fn biased_size_reference_values() {
        let g = DecisionGate::new(0.2, 1.0).unwrap();
        assert!((biased_size(&g, 0.05).unwrap() - 0.05 / (0.05 + 0.95 * 0.2)).abs() < 1e-15);
        assert_eq!(biased_size(&DecisionGate::new(0.0, 1.0).unwrap(), 0.05).unwrap(), 1.0);
        assert!((biased_size(&DecisionGate::new(0.4, 0.4).unwrap(), 0.05).unwrap() - 0.05).abs() < 1e-16);
        assert!(DecisionGate::new(0.0, 0.0).unwrap_err().is_domain());
        assert!(DecisionGate::new(0.5, 0.2).is_err());
    }

    #[test]
    fn extreme_gate_expectation_is_log_rho_over_alpha() {
        let g = DecisionGate::new(0.0, 1.0).unwrap();
        let v = biased_expected_v(&g, 0.05, 0.5).unwrap();
        assert!((v - 10f64.ln()).abs() < 1e-14);
        let fair = DecisionGate::new(0.3, 0.3).unwrap();
        let v = biased_expected_v(&fair, 0.05, 0.5).unwrap();
        assert!((v - expected_v(0.05, 0.5).unwrap()).abs() < 1e-15);
        assert!(v < 0.0);
    }

    #[test]
    fn gate_densities_normalise() {
        let gates = [
            PValueGate::Step { cutoff: 0.3 },
            PValueGate::Exponential { rate: 4.0 },
            PValueGate::Table {
                breaks: vec![0.05, 0.2],
                values: vec![1.0, 0.5, 0.1],
            },
        ];
        for g in &gates {
            let d = biased_p_density(g).unwrap();
            let num: f64 = split_points(&g.breakpoints())
                .windows(2)
                .map(|w| quad::adaptive(|p| d.density(p), w[0], w[1], 1e-13))
                .sum();
            assert!((num - 1.0).abs() < 1e-8, "{g:?}: {num}");
            assert!((d.cdf(1.0) - 1.0).abs() < 1e-14);
            for i in 0..=100 {
                let p = i as f64 / 100.0;
                assert!(d.cdf(p) >= p - 1e-12);
            }
        }
    }

    #[test]
    fn invalid_gates() {
        assert!(PValueGate::Step { cutoff: 1.0 }.validate().is_err());
        assert!(PValueGate::Exponential { rate: 0.0 }.validate().is_err());
        let rising = PValueGate::Table {
            breaks: vec![0.5],
            values: vec![0.2, 0.8],
        };
        assert!(rising.validate().is_err());
        let zero = PValueGate::Table {
            breaks: vec![0.5],
            values: vec![0.0, 0.0],
        };
        assert!(biased_p_density(&zero).unwrap_err().is_domain());
    }

    #[test]
    fn step_gate_at_crossing_gives_positive_expectation() {
        let m = OneSampleNormal::new(0.0, 1.0, 1.0, 1).unwrap();
        let c = rho_prime_crossing(&m).unwrap();
        assert!((c - norm_cdf(-0.5)).abs() < 1e-13);
        let v = biased_expected_logrho(&PValueGate::Step { cutoff: c }, &m).unwrap();
        assert!(v > 0.0);
        let near_identity = PValueGate::Step { cutoff: 1.0 - 1e-9 };
        let u = biased_expected_logrho(&near_identity, &m).unwrap();
        assert!((u + 0.5).abs() < 1e-6, "{u}");
    }
}
