use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::dist::{binom_pmf, hypergeom4_pmf, theta_tea_pmf};
use crate::engine::{Draw, SupportKind, TestProblem};
use crate::{check_closed_unit, Error, Hypothesis, Result, RngStream};

/// Null and alternative pmfs on `0, 1, ..., k` with precomputed upper tails.
#[derive(Debug, Clone, PartialEq)]
struct CountTable {
    null: Vec<f64>,
    alt: Vec<f64>,
    null_tail: Vec<f64>,
    alt_tail: Vec<f64>,
}

impl CountTable {
    fn new(null: Vec<f64>, alt: Vec<f64>) -> Self {
        let tails = |pmf: &[f64]| {
            let mut out = vec![0.0; pmf.len()];
            let mut acc = 0.0;
            for k in (0..pmf.len()).rev() {
                out[k] = acc;
                acc += pmf[k];
            }
            out
        };
        Self {
            null_tail: tails(&null),
            alt_tail: tails(&alt),
            null,
            alt,
        }
    }

    fn index(&self, s: f64) -> Option<usize> {
        (s >= 0.0 && s.fract() == 0.0 && (s as usize) < self.null.len()).then_some(s as usize)
    }

    /// Sum of `pmf` strictly above `s`, for any real `s`.
    fn tail(&self, pmf: &[f64], tail: &[f64], s: f64) -> f64 {
        if s < 0.0 {
            return pmf.iter().sum();
        }
        let k = s.floor() as usize;
        if k >= pmf.len() {
            0.0
        } else {
            tail[k]
        }
    }

    fn draw(&self, truth: Hypothesis, rng: &mut RngStream) -> Draw {
        let pmf = match truth {
            Hypothesis::H0 => &self.null,
            Hypothesis::H1 => &self.alt,
        };
        let u = rng.uniform();
        let mut acc = 0.0;
        let mut s = pmf.len() - 1;
        for (k, p) in pmf.iter().enumerate() {
            acc += p;
            if u < acc {
                s = k;
                break;
            }
        }
        Draw {
            statistic: s as f64,
            log_lr: (self.alt[s] / self.null[s]).ln(),
        }
    }
}

macro_rules! count_problem {
    ($t:ty) => {
        impl TestProblem for $t {
            fn kind(&self) -> SupportKind {
                SupportKind::Finite
            }
            fn support(&self) -> Vec<f64> {
                (0..self.table.null.len()).map(|k| k as f64).collect()
            }
            fn null_tail(&self, s: f64) -> f64 {
                self.table.tail(&self.table.null, &self.table.null_tail, s)
            }
            fn alt_tail(&self, s: f64) -> f64 {
                self.table.tail(&self.table.alt, &self.table.alt_tail, s)
            }
            fn null_point(&self, s: f64) -> f64 {
                self.table.index(s).map_or(0.0, |k| self.table.null[k])
            }
            fn alt_point(&self, s: f64) -> f64 {
                self.table.index(s).map_or(0.0, |k| self.table.alt[k])
            }
            fn sample(&self, truth: Hypothesis, rng: &mut RngStream) -> Draw {
                self.table.draw(truth, rng)
            }
        }
    };
}

fn check_theta1(theta1: f64) -> Result<()> {
    check_closed_unit("theta1", theta1)?;
    if theta1 < 0.5 {
        return Err(Error::domain(format!("theta1 must be at least 1/2, got {theta1}")));
    }
    Ok(())
}

/// Tea tasting, first version: the lady classifies 8 cups independently and
/// `S ~ Binomial(8, theta)` counts the correct calls; `H0: theta = 1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TeaTastingBinomial {
    pub theta1: f64,
    table: CountTable,
}

impl TeaTastingBinomial {
    pub const CUPS: u64 = 8;

    pub fn new(theta1: f64) -> Result<Self> {
        check_theta1(theta1)?;
        let pmf = |theta: f64| -> Result<Vec<f64>> {
            (0..=Self::CUPS).map(|s| binom_pmf(s, Self::CUPS, theta)).collect()
        };
        Ok(Self {
            theta1,
            table: CountTable::new(pmf(0.5)?, pmf(theta1)?),
        })
    }

    /// `C(8, s) / 256` for `s = 0..=8`.
    pub fn exact_null_pmf() -> Vec<BigRational> {
        Self::exact_pmf(&BigRational::new(BigInt::one(), BigInt::from(2)))
    }

    /// `C(8, s) theta^s (1 - theta)^(8 - s)` for `s = 0..=8`.
    pub fn exact_pmf(theta: &BigRational) -> Vec<BigRational> {
        let one = BigRational::one();
        (0..=Self::CUPS as usize)
            .map(|s| {
                BigRational::from_integer(binomial(Self::CUPS as usize, s))
                    * pow(theta, s)
                    * pow(&(one.clone() - theta), Self::CUPS as usize - s)
            })
            .collect()
    }
}

/// Tea tasting, second version: the lady picks the 4 tea-first cups out of
/// 8 and `T` counts how many picks are right. Under `H0` this is
/// hypergeometric; the alternative weights `C(4,t)^2 theta^t (1-theta)^(8-t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TeaTastingFisher {
    pub theta1: f64,
    table: CountTable,
}

impl TeaTastingFisher {
    pub fn new(theta1: f64) -> Result<Self> {
        check_theta1(theta1)?;
        let null = (0..=4).map(hypergeom4_pmf).collect::<Result<Vec<_>>>()?;
        let alt = (0..=4).map(|t| theta_tea_pmf(t, theta1)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            theta1,
            table: CountTable::new(null, alt),
        })
    }

    /// `C(4,t) C(4,4-t) / 70`.
    pub fn exact_null_pmf() -> Vec<BigRational> {
        (0..=4)
            .map(|t| {
                BigRational::new(binomial(4, t) * binomial(4, 4 - t), BigInt::from(70))
            })
            .collect()
    }

    pub fn exact_pmf(theta: &BigRational) -> Vec<BigRational> {
        let one = BigRational::one();
        let weights: Vec<BigRational> = (0..=4)
            .map(|t| {
                let c = BigRational::from_integer(binomial(4, t));
                c.clone() * c * pow(theta, t) * pow(&(one.clone() - theta), 4 - t)
            })
            .collect();
        let total: BigRational = weights.iter().fold(BigRational::zero(), |a, w| a + w);
        weights.into_iter().map(|w| w / &total).collect()
    }
}

count_problem!(TeaTastingBinomial);
count_problem!(TeaTastingFisher);

fn binomial(n: usize, k: usize) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

fn pow(x: &BigRational, k: usize) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, _| acc * x)
}

/// A tea-tasting version selector, as used in configs and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TeaVersion {
    Binomial,
    Fisher,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{self, exact_rule};

    fn half() -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(2))
    }

    #[test]
    fn fisher_family_at_half_is_hypergeometric_exactly() {
        assert_eq!(TeaTastingFisher::exact_pmf(&half()), TeaTastingFisher::exact_null_pmf());
    }

    #[test]
    fn exact_size_equals_alpha() {
        let alpha = BigRational::new(BigInt::one(), BigInt::from(20));
        let theta = BigRational::new(BigInt::from(7), BigInt::from(10));
        for (null, alt) in [
            (TeaTastingBinomial::exact_null_pmf(), TeaTastingBinomial::exact_pmf(&theta)),
            (TeaTastingFisher::exact_null_pmf(), TeaTastingFisher::exact_pmf(&theta)),
        ] {
            let rule = exact_rule(&null, &alt, &alpha).unwrap();
            assert_eq!(rule.size, alpha);
        }
    }

    #[test]
    fn float_rule_matches_exact_rule() {
        let m = TeaTastingBinomial::new(0.7).unwrap();
        let rule = engine::build_rule(&m, 0.05).unwrap();
        assert_eq!(rule.c, 6.0);
        // (0.05 - 9/256) / (28/256)
        assert!((rule.gamma - (0.05 * 256.0 - 9.0) / 28.0).abs() < 1e-14);
        let f = TeaTastingFisher::new(0.7).unwrap();
        let rule = engine::build_rule(&f, 0.05).unwrap();
        assert_eq!(rule.c, 3.0);
        assert!((rule.gamma - 2.5 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn tails_handle_off_support_points() {
        let m = TeaTastingBinomial::new(0.8).unwrap();
        assert_eq!(m.null_tail(-1.0), m.null_tail(-0.5));
        assert!((m.null_tail(-1.0) - 1.0).abs() < 1e-15);
        assert_eq!(m.null_tail(8.0), 0.0);
        assert_eq!(m.null_tail(6.5), m.null_tail(6.0));
        assert_eq!(m.null_point(6.5), 0.0);
    }

    #[test]
    fn theta_below_half_rejected() {
        assert!(TeaTastingBinomial::new(0.3).unwrap_err().is_domain());
        assert!(TeaTastingFisher::new(1.2).is_err());
    }
}
