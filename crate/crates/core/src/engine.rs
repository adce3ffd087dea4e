//! The most-powerful randomized rule, the P-functional and the ROC.
//!
//! Everything is written on the scale of a real statistic `S` whose
//! likelihood ratio is nondecreasing, so the rule rejects for large `S`.

use std::ops::{Div, Sub};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::{check_closed_unit, check_open_unit, Error, Hypothesis, Result, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupportKind {
    /// A finite, ascending list of support points.
    Finite,
    /// Absolutely continuous under both hypotheses.
    Continuous,
}

/// One simulated study: the test statistic and the full-data log likelihood
/// ratio `log f1(x) / f0(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub statistic: f64,
    pub log_lr: f64,
}

/// A simple-vs-simple testing problem reduced to a monotone statistic.
pub trait TestProblem: Send + Sync {
    fn kind(&self) -> SupportKind;

    /// Ascending support points; empty for continuous problems.
    fn support(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `Pr0{S > s}`.
    fn null_tail(&self, s: f64) -> f64;
    /// `Pr1{S > s}`.
    fn alt_tail(&self, s: f64) -> f64;

    /// `Pr0{S = s}`; zero for continuous problems.
    fn null_point(&self, _s: f64) -> f64 {
        0.0
    }
    fn alt_point(&self, _s: f64) -> f64 {
        0.0
    }

    fn null_density(&self, _s: f64) -> f64 {
        0.0
    }
    fn alt_density(&self, _s: f64) -> f64 {
        0.0
    }

    /// `c` with `Pr0{S > c} = alpha`, for continuous problems.
    fn null_upper_quantile(&self, _alpha: f64) -> Option<f64> {
        None
    }

    /// Likelihood ratio of the statistic, `f1(s) / f0(s)` or `p1(s) / p0(s)`.
    fn likelihood_ratio(&self, s: f64) -> f64 {
        match self.kind() {
            SupportKind::Finite => self.alt_point(s) / self.null_point(s),
            SupportKind::Continuous => self.alt_density(s) / self.null_density(s),
        }
    }

    fn sample(&self, truth: Hypothesis, rng: &mut RngStream) -> Draw;
}

/// The size-`alpha` most-powerful rule: reject when `S > c`, and with
/// probability `gamma` when `S = c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    pub alpha: f64,
    pub c: f64,
    pub gamma: f64,
    pub power: f64,
}

/// Cutoff index and randomization for a finite problem.
///
/// `tails[k] = Pr0{S > s_k}` and `points[k] = Pr0{S = s_k}` over ascending
/// support points. Returns the smallest `k` with `tails[k] <= alpha` and
/// `gamma = (alpha - tails[k]) / points[k]`.
pub fn finite_cutoff<T>(tails: &[T], points: &[T], alpha: &T) -> Option<(usize, T)>
where
    T: Clone + PartialOrd + Zero + for<'a> Sub<&'a T, Output = T> + for<'a> Div<&'a T, Output = T>,
{
    let k = tails.iter().position(|t| t <= alpha)?;
    let gamma = if points[k].is_zero() {
        T::zero()
    } else {
        (alpha.clone() - &tails[k]) / &points[k]
    };
    Some((k, gamma))
}

/// The exact most-powerful rule for a finite problem with rational masses.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactRule {
    pub cutoff_index: usize,
    pub gamma: BigRational,
    pub size: BigRational,
    pub power: BigRational,
}

fn upper_tails(pmf: &[BigRational]) -> Vec<BigRational> {
    let mut tails = vec![BigRational::zero(); pmf.len()];
    let mut acc = BigRational::zero();
    for k in (0..pmf.len()).rev() {
        tails[k] = acc.clone();
        acc += &pmf[k];
    }
    tails
}

/// Rational-arithmetic version of [`build_rule`] for pmfs over an ascending
/// support.
pub fn exact_rule(null_pmf: &[BigRational], alt_pmf: &[BigRational], alpha: &BigRational) -> Result<ExactRule> {
    if null_pmf.len() != alt_pmf.len() || null_pmf.is_empty() {
        return Err(Error::domain("null and alternative pmfs must share a nonempty support"));
    }
    if *alpha <= BigRational::zero() || *alpha >= BigRational::one() {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let null_tails = upper_tails(null_pmf);
    let alt_tails = upper_tails(alt_pmf);
    let (k, gamma) = finite_cutoff(&null_tails, null_pmf, alpha)
        .ok_or_else(|| Error::domain("null pmf has no mass"))?;
    let size = null_tails[k].clone() + &gamma * &null_pmf[k];
    let power = alt_tails[k].clone() + &gamma * &alt_pmf[k];
    Ok(ExactRule {
        cutoff_index: k,
        gamma,
        size,
        power,
    })
}

fn rule_unchecked<P: TestProblem + ?Sized>(problem: &P, alpha: f64) -> Result<DecisionRule> {
    match problem.kind() {
        SupportKind::Finite => {
            let support = problem.support();
            let tails: Vec<f64> = support.iter().map(|&s| problem.null_tail(s)).collect();
            let points: Vec<f64> = support.iter().map(|&s| problem.null_point(s)).collect();
            let (k, gamma) = finite_cutoff(&tails, &points, &alpha)
                .ok_or_else(|| Error::domain("finite problem has an empty support"))?;
            let c = support[k];
            let gamma = gamma.clamp(0.0, 1.0);
            Ok(DecisionRule {
                alpha,
                c,
                gamma,
                power: problem.alt_tail(c) + gamma * problem.alt_point(c),
            })
        }
        SupportKind::Continuous => {
            let c = problem
                .null_upper_quantile(alpha)
                .ok_or_else(|| Error::domain("continuous problem without a null quantile"))?;
            Ok(DecisionRule {
                alpha,
                c,
                gamma: 0.0,
                power: problem.alt_tail(c),
            })
        }
    }
}

/// Most-powerful size-`alpha` rule for `problem`.
pub fn build_rule<P: TestProblem + ?Sized>(problem: &P, alpha: f64) -> Result<DecisionRule> {
    check_open_unit("alpha", alpha)?;
    rule_unchecked(problem, alpha)
}

/// `d = 1` iff `s > c`, or `s = c` and `u <= gamma`.
pub fn decide(rule: &DecisionRule, s: f64, u: f64) -> Result<u8> {
    check_closed_unit("randomizer u", u)?;
    Ok(u8::from(s > rule.c || (s == rule.c && u <= rule.gamma)))
}

/// `P(s, u) = Pr0{S > s} + u Pr0{S = s}`.
pub fn p_functional<P: TestProblem + ?Sized>(problem: &P, s: f64, u: f64) -> Result<f64> {
    check_closed_unit("randomizer u", u)?;
    if s.is_nan() {
        return Err(Error::domain("statistic is NaN"));
    }
    Ok((problem.null_tail(s) + u * problem.null_point(s)).clamp(0.0, 1.0))
}

/// `rho(alpha)`, the power of the size-`alpha` MP rule, on `[0, 1]`.
pub fn roc<P: TestProblem + ?Sized>(problem: &P, alpha: f64) -> Result<f64> {
    check_closed_unit("alpha", alpha)?;
    if alpha == 0.0 {
        return Ok(0.0);
    }
    if alpha == 1.0 {
        return Ok(1.0);
    }
    Ok(rule_unchecked(problem, alpha)?.power)
}

/// `rho'(alpha)`: the likelihood-ratio value at the cutoff. For finite
/// problems this is the right derivative at breakpoints.
pub fn roc_deriv<P: TestProblem + ?Sized>(problem: &P, alpha: f64) -> Result<f64> {
    check_open_unit("alpha", alpha)?;
    let rule = rule_unchecked(problem, alpha)?;
    match problem.kind() {
        SupportKind::Finite => Ok(problem.alt_point(rule.c) / problem.null_point(rule.c)),
        SupportKind::Continuous => Ok(problem.alt_density(rule.c) / problem.null_density(rule.c)),
    }
}

/// Monte Carlo size and power of the MP rule, `(size, power)`.
pub fn mc_size_power<P: TestProblem + ?Sized>(
    problem: &P,
    alpha: f64,
    reps: usize,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    if reps == 0 {
        return Err(Error::domain("reps must be positive"));
    }
    let rule = build_rule(problem, alpha)?;
    let mut rejections = [0usize; 2];
    for (slot, truth) in [Hypothesis::H0, Hypothesis::H1].into_iter().enumerate() {
        for _ in 0..reps {
            let draw = problem.sample(truth, rng);
            let u = rng.uniform();
            rejections[slot] += usize::from(decide(&rule, draw.statistic, u)? == 1);
        }
    }
    Ok((
        rejections[0] as f64 / reps as f64,
        rejections[1] as f64 / reps as f64,
    ))
}

/// The ROC function of a test problem: `rho` on `[0, 1]`, `rho'` on `(0, 1)`.
///
/// Implementations may assume the argument is in range; the free functions
/// in this module validate.
pub trait RocFunction: Send + Sync {
    fn rho(&self, alpha: f64) -> f64;
    fn rho_prime(&self, alpha: f64) -> f64;

    /// `1 - rho(alpha)`, overridden where it can be computed without loss.
    fn rho_complement(&self, alpha: f64) -> f64 {
        1.0 - self.rho(alpha)
    }

    /// `log rho'(alpha)`, overridden where `rho'` would overflow.
    fn log_rho_prime(&self, alpha: f64) -> f64 {
        self.rho_prime(alpha).ln()
    }
}

impl<R: RocFunction + ?Sized> RocFunction for &R {
    fn rho(&self, alpha: f64) -> f64 {
        (**self).rho(alpha)
    }
    fn rho_prime(&self, alpha: f64) -> f64 {
        (**self).rho_prime(alpha)
    }
    fn rho_complement(&self, alpha: f64) -> f64 {
        (**self).rho_complement(alpha)
    }
    fn log_rho_prime(&self, alpha: f64) -> f64 {
        (**self).log_rho_prime(alpha)
    }
}

impl<R: RocFunction + ?Sized> RocFunction for Box<R> {
    fn rho(&self, alpha: f64) -> f64 {
        (**self).rho(alpha)
    }
    fn rho_prime(&self, alpha: f64) -> f64 {
        (**self).rho_prime(alpha)
    }
    fn rho_complement(&self, alpha: f64) -> f64 {
        (**self).rho_complement(alpha)
    }
    fn log_rho_prime(&self, alpha: f64) -> f64 {
        (**self).log_rho_prime(alpha)
    }
}

/// The ROC of any [`TestProblem`], computed through the generic engine.
#[derive(Debug, Clone, Copy)]
pub struct EngineRoc<'a, P: ?Sized>(pub &'a P);

impl<P: TestProblem + ?Sized> RocFunction for EngineRoc<'_, P> {
    fn rho(&self, alpha: f64) -> f64 {
        roc(self.0, alpha).unwrap_or(f64::NAN)
    }
    fn rho_prime(&self, alpha: f64) -> f64 {
        roc_deriv(self.0, alpha).unwrap_or(f64::NAN)
    }
}

/// `rho` on a grid of `alpha` values together with `rho'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub alpha: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_prime: Vec<f64>,
}

impl RocCurve {
    /// Tabulates `roc`; `rho'` is reported as NaN at `alpha` in {0, 1}.
    pub fn tabulate<R: RocFunction + ?Sized>(roc: &R, grid: &[f64]) -> Result<Self> {
        let mut out = RocCurve {
            alpha: Vec::with_capacity(grid.len()),
            rho: Vec::with_capacity(grid.len()),
            rho_prime: Vec::with_capacity(grid.len()),
        };
        for &a in grid {
            check_closed_unit("alpha", a)?;
            out.alpha.push(a);
            out.rho.push(roc.rho(a));
            out.rho_prime.push(if a > 0.0 && a < 1.0 { roc.rho_prime(a) } else { f64::NAN });
        }
        Ok(out)
    }

    /// `rho(alpha) >= alpha` everywhere, up to `tol`.
    pub fn dominates_diagonal(&self, tol: f64) -> bool {
        self.alpha.iter().zip(&self.rho).all(|(a, r)| *r >= a - tol)
    }

    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        self.rho.windows(2).all(|w| w[1] >= w[0] - tol)
    }

    /// Chord-midpoint concavity on consecutive grid triples.
    pub fn is_concave(&self, tol: f64) -> bool {
        (2..self.alpha.len()).all(|i| {
            let (a0, a1, a2) = (self.alpha[i - 2], self.alpha[i - 1], self.alpha[i]);
            let t = (a1 - a0) / (a2 - a0);
            let chord = (1.0 - t) * self.rho[i - 2] + t * self.rho[i];
            self.rho[i - 1] >= chord - tol
        })
    }
}

/// Evenly spaced grid `0, 1/(m-1), ..., 1` of `m` points.
pub fn unit_grid(m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..m).map(|i| i as f64 / (m - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn finite_cutoff_on_a_fair_coin() {
        // S ~ Binomial(2, 1/2), support 0,1,2 with masses 1/4, 1/2, 1/4
        let pmf = vec![r(1, 4), r(1, 2), r(1, 4)];
        let alt = vec![r(1, 9), r(4, 9), r(4, 9)];
        let rule = exact_rule(&pmf, &alt, &r(1, 8)).unwrap();
        assert_eq!(rule.cutoff_index, 2);
        assert_eq!(rule.gamma, r(1, 2));
        assert_eq!(rule.size, r(1, 8));
        assert_eq!(rule.power, r(2, 9));
        let rule = exact_rule(&pmf, &alt, &r(1, 2)).unwrap();
        assert_eq!(rule.cutoff_index, 1);
        assert_eq!(rule.gamma, r(1, 2));
        assert_eq!(rule.power, r(4, 9) + r(2, 9));
    }

    #[test]
    fn exact_rule_rejects_bad_alpha() {
        let pmf = vec![r(1, 2), r(1, 2)];
        assert!(exact_rule(&pmf, &pmf, &r(0, 1)).unwrap_err().is_domain());
        assert!(exact_rule(&pmf, &pmf, &r(1, 1)).is_err());
        assert!(exact_rule(&pmf, &pmf[..1], &r(1, 3)).is_err());
    }

    #[test]
    fn unit_grid_endpoints() {
        let g = unit_grid(5);
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
