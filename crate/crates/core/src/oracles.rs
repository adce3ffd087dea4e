//! Brute-force and Monte Carlo oracles for the test suites.
//!
//! Exact oracles rebuild their pmfs from scratch in rational arithmetic and
//! search every vertex of the randomized-rule polytope; they never call the
//! rule builder except to compare against it.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::engine::{self, RocFunction, TestProblem};
use crate::models::{simulate_study, TeaTastingBinomial, TeaTastingFisher, TeaVersion};
use crate::{check_open_unit, Error, Hypothesis, Result, RngStream};

pub const MAX_ENUMERATION_SUPPORT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Uncertainty {
    Exact,
    StandardError { se: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub target: String,
    pub method: String,
    pub estimate: f64,
    pub reference: f64,
    pub uncertainty: Uncertainty,
    pub tolerance: f64,
    pub pass: bool,
}

fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_f64(x).ok_or_else(|| Error::domain(format!("{x} is not finite")))
}

fn choose(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::one(), |c, i| c * BigInt::from(n - i) / BigInt::from(i + 1))
}

fn power(x: &BigRational, k: u64) -> BigRational {
    (0..k).fold(BigRational::one(), |a, _| a * x)
}

/// Pmfs of the two tasting experiments, built independently of the models.
pub fn tea_pmfs(version: TeaVersion, theta: &BigRational) -> Vec<BigRational> {
    let one = BigRational::one();
    match version {
        TeaVersion::Binomial => (0..=8)
            .map(|s| BigRational::from_integer(choose(8, s)) * power(theta, s) * power(&(&one - theta), 8 - s))
            .collect(),
        TeaVersion::Fisher => {
            let w: Vec<BigRational> = (0..=4)
                .map(|t| {
                    BigRational::from_integer(choose(4, t).pow(2u32))
                        * power(theta, t)
                        * power(&(&one - theta), 8 - t)
                })
                .collect();
            let total = w.iter().fold(BigRational::zero(), |a, x| a + x);
            w.into_iter().map(|x| x / &total).collect()
        }
    }
}

/// Result of searching every vertex of `{phi in [0,1]^K : sum phi p0 <= alpha}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexOptimum {
    pub power: BigRational,
    pub size: BigRational,
    pub vertices: usize,
}

/// Maximal power over all randomized rules of size at most `alpha`.
///
/// Power and size are linear in the rule, so the optimum sits on a vertex:
/// every coordinate is 0 or 1 except at most one fractional coordinate,
/// which is set to spend the remaining size.
pub fn vertex_optimum(null: &[BigRational], alt: &[BigRational], alpha: &BigRational) -> Result<VertexOptimum> {
    let k = null.len();
    if k != alt.len() || k == 0 {
        return Err(Error::domain("null and alternative pmfs must share a nonempty support"));
    }
    if k > MAX_ENUMERATION_SUPPORT {
        return Err(Error::domain(format!(
            "support of {k} points is too large to enumerate (limit {MAX_ENUMERATION_SUPPORT})"
        )));
    }
    let mut best = VertexOptimum {
        power: BigRational::zero(),
        size: BigRational::zero(),
        vertices: 0,
    };
    for mask in 0u32..(1 << k) {
        let inside = |i: usize| mask & (1 << i) != 0;
        let (mut size, mut pow) = (BigRational::zero(), BigRational::zero());
        for i in (0..k).filter(|&i| inside(i)) {
            size += &null[i];
            pow += &alt[i];
        }
        if size > *alpha {
            continue;
        }
        let mut consider = |size: BigRational, pow: BigRational| {
            best.vertices += 1;
            if pow > best.power {
                best.power = pow;
                best.size = size;
            }
        };
        consider(size.clone(), pow.clone());
        let slack = alpha - &size;
        for j in (0..k).filter(|&j| !inside(j)) {
            if null[j].is_zero() {
                consider(size.clone(), &pow + &alt[j]);
                continue;
            }
            let phi = (&slack / &null[j]).min(BigRational::one());
            consider(&size + &phi * &null[j], &pow + &phi * &alt[j]);
        }
    }
    Ok(best)
}

/// Threshold-plus-randomization rules of exact size `alpha`, one per support
/// point that admits a `gamma` in `[0, 1]`. Returns the best power found.
pub fn threshold_rule_optimum(null: &[BigRational], alt: &[BigRational], alpha: &BigRational) -> Option<BigRational> {
    let k = null.len();
    let mut best: Option<BigRational> = None;
    for c in 0..k {
        let above_null = null[c + 1..].iter().fold(BigRational::zero(), |a, x| a + x);
        let above_alt = alt[c + 1..].iter().fold(BigRational::zero(), |a, x| a + x);
        if null[c].is_zero() {
            continue;
        }
        let gamma = (alpha - &above_null) / &null[c];
        if gamma < BigRational::zero() || gamma > BigRational::one() {
            continue;
        }
        let pow = above_alt + gamma * &alt[c];
        if best.as_ref().is_none_or(|b| pow > *b) {
            best = Some(pow);
        }
    }
    best
}

/// Checks the MP rule of a tasting experiment against exhaustive search,
/// exactly and in floating point.
pub fn enumerate_mp_optimality(version: TeaVersion, alpha: f64, theta1: f64) -> Result<OracleReport> {
    check_open_unit("alpha", alpha)?;
    let a = rational(alpha)?;
    let theta = rational(theta1)?;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let null = tea_pmfs(version, &half);
    let alt = tea_pmfs(version, &theta);
    let oracle = vertex_optimum(&null, &alt, &a)?;
    let threshold = threshold_rule_optimum(&null, &alt, &a)
        .ok_or_else(|| Error::domain("no threshold rule attains the requested size"))?;

    let (exact, float_power) = match version {
        TeaVersion::Binomial => {
            let m = TeaTastingBinomial::new(theta1)?;
            let r = engine::exact_rule(&TeaTastingBinomial::exact_null_pmf(), &TeaTastingBinomial::exact_pmf(&theta), &a)?;
            (r, engine::build_rule(&m, alpha)?.power)
        }
        TeaVersion::Fisher => {
            let m = TeaTastingFisher::new(theta1)?;
            let r = engine::exact_rule(&TeaTastingFisher::exact_null_pmf(), &TeaTastingFisher::exact_pmf(&theta), &a)?;
            (r, engine::build_rule(&m, alpha)?.power)
        }
    };
    let exact_gap = &oracle.power - &exact.power;
    let oracle_f = oracle.power.to_f64().unwrap_or(f64::NAN);
    let float_gap = (oracle_f - float_power).abs();
    let pass = exact_gap.is_zero() && threshold == oracle.power && exact.size == a && float_gap <= 1e-12;
    Ok(OracleReport {
        target: format!("mp_rule/{version:?}/alpha={alpha}/theta1={theta1}"),
        method: format!("vertex enumeration over {} candidate rules", oracle.vertices),
        estimate: exact.power.to_f64().unwrap_or(f64::NAN),
        reference: oracle_f,
        uncertainty: Uncertainty::Exact,
        tolerance: 0.0,
        pass,
    })
}

/// Kolmogorov-Smirnov distance between a sample and Uniform(0, 1).
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Largest gap between the empirical cdf of `sample` and `cdf` over `grid`.
pub fn ecdf_gap<F: Fn(f64) -> f64>(sample: &[f64], cdf: F, grid: &[f64]) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    grid.iter()
        .map(|&g| {
            let count = xs.partition_point(|&x| x <= g) as f64;
            (count / n - cdf(g)).abs()
        })
        .fold(0.0, f64::max)
}

/// Monte Carlo checks of the distribution of the P-functional and of the
/// null drift of the log likelihood ratio.
///
/// Returns three reports: KS against Uniform under `H0`, ecdf against `rho`
/// under `H1` on a 99-point grid, and the mean null log likelihood ratio,
/// which must be negative and, when `null_kl` is given, equal `-null_kl`
/// within 4 standard errors.
pub fn mc_theorem_checks<P: TestProblem + RocFunction + ?Sized>(
    problem: &P,
    null_kl: Option<f64>,
    reps: usize,
    rng: &mut RngStream,
) -> Result<Vec<OracleReport>> {
    if reps < 10_000 {
        return Err(Error::domain(format!("need at least 10^4 replications, got {reps}")));
    }
    let run = |truth: Hypothesis, stream: u64| -> Result<Vec<(f64, f64)>> {
        let mut r = rng.substream(stream);
        (0..reps)
            .map(|_| simulate_study(problem, 0, truth, 0.05, &mut r).map(|s| (s.p, s.log_lr_x)))
            .collect()
    };
    let null = run(Hypothesis::H0, 0)?;
    let alt = run(Hypothesis::H1, 1)?;

    let p0: Vec<f64> = null.iter().map(|x| x.0).collect();
    let ks = ks_uniform(&p0);
    let crit = ks_critical_1pct(reps);

    let p1: Vec<f64> = alt.iter().map(|x| x.0).collect();
    let grid: Vec<f64> = (1..100).map(|j| j as f64 / 100.0).collect();
    let gap = ecdf_gap(&p1, |a| problem.rho(a), &grid);

    let n = reps as f64;
    let mean = null.iter().map(|x| x.1).sum::<f64>() / n;
    let var = null.iter().map(|x| (x.1 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let (reference, tol, pass) = match null_kl {
        Some(kl) => (-kl, 4.0 * se, (mean + kl).abs() <= 4.0 * se && mean + 4.0 * se < 0.0),
        None => (0.0, 4.0 * se, mean + 4.0 * se < 0.0),
    };

    Ok(vec![
        OracleReport {
            target: "p_functional_null_uniform".into(),
            method: format!("one-sample KS, {reps} reps"),
            estimate: ks,
            reference: crit,
            uncertainty: Uncertainty::StandardError { se: 0.0 },
            tolerance: crit,
            pass: ks < crit,
        },
        OracleReport {
            target: "p_functional_alt_cdf_is_roc".into(),
            method: format!("ecdf vs rho on 99 points, {reps} reps"),
            estimate: gap,
            reference: 0.0,
            uncertainty: Uncertainty::StandardError { se: 0.5 / n.sqrt() },
            tolerance: 0.01,
            pass: gap < 0.01,
        },
        OracleReport {
            target: "null_mean_log_lr".into(),
            method: format!("sample mean, {reps} reps"),
            estimate: mean,
            reference,
            uncertainty: Uncertainty::StandardError { se },
            tolerance: tol,
            pass,
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn oracle_pmfs_match_models() {
        let t = q(4, 5);
        assert_eq!(tea_pmfs(TeaVersion::Binomial, &t), TeaTastingBinomial::exact_pmf(&t));
        assert_eq!(tea_pmfs(TeaVersion::Fisher, &t), TeaTastingFisher::exact_pmf(&t));
        assert_eq!(tea_pmfs(TeaVersion::Fisher, &q(1, 2)), TeaTastingFisher::exact_null_pmf());
    }

    #[test]
    fn binomial_and_fisher_examples_pass() {
        assert!(enumerate_mp_optimality(TeaVersion::Binomial, 0.05, 0.8).unwrap().pass);
        assert!(enumerate_mp_optimality(TeaVersion::Fisher, 0.05, 0.9).unwrap().pass);
    }

    #[test]
    fn achievable_size_needs_no_randomization() {
        // Pr0{S >= 7} = 9/256
        let null = tea_pmfs(TeaVersion::Binomial, &q(1, 2));
        let alt = tea_pmfs(TeaVersion::Binomial, &q(7, 10));
        let a = q(9, 256);
        let rule = engine::exact_rule(&null, &alt, &a).unwrap();
        assert!(rule.gamma.is_zero() || rule.gamma.is_one());
        assert_eq!(vertex_optimum(&null, &alt, &a).unwrap().power, rule.power);
    }

    #[test]
    fn refuses_large_supports() {
        let v = vec![q(1, 21); 21];
        assert!(vertex_optimum(&v, &v, &q(1, 20)).unwrap_err().is_domain());
    }

    #[test]
    fn ks_of_a_regular_grid_is_small() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!((ks_uniform(&xs) - 0.0005).abs() < 1e-12);
    }
}
