//! Choosing the level of significance: minimax, Bayes and
//! discrimination-optimal levels, and the sample sizes they imply.

use serde::{Deserialize, Serialize};

use crate::belief::logistic;
use crate::dist::{norm_cdf, norm_upper_quantile};
use crate::engine::RocFunction;
use crate::models::{FamilyKind, ModelFamily, OneSampleNormal};
use crate::roots::{self, Tolerance};
use crate::{check_open_unit, Error, Result};

/// `C[i][j]` is the cost of deciding `H_j` when `H_i` is true.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostMatrix {
    pub c00: f64,
    pub c01: f64,
    pub c10: f64,
    pub c11: f64,
}

impl CostMatrix {
    pub fn new(c00: f64, c01: f64, c10: f64, c11: f64) -> Result<Self> {
        let c = Self { c00, c01, c10, c11 };
        c.validate()?;
        Ok(c)
    }

    /// Zero cost for correct decisions.
    pub fn errors_only(c01: f64, c10: f64) -> Result<Self> {
        Self::new(0.0, c01, c10, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.c00, self.c01, self.c10, self.c11];
        if all.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(Error::domain("costs must be finite and nonnegative"));
        }
        if self.c01 <= self.c00 || self.c10 <= self.c11 {
            return Err(Error::domain("costs need C01 > C00 and C10 > C11"));
        }
        Ok(())
    }

    /// `(C01 - C00) / (C10 - C11)`.
    pub fn r1(&self) -> f64 {
        (self.c01 - self.c00) / (self.c10 - self.c11)
    }

    /// `(C01 - C11) / (C10 - C11)`.
    pub fn r2(&self) -> f64 {
        (self.c01 - self.c11) / (self.c10 - self.c11)
    }

    /// `(C10 - C00) / (C10 - C11)`.
    pub fn r0(&self) -> f64 {
        (self.c10 - self.c00) / (self.c10 - self.c11)
    }

    /// `kappa0 / (1 - kappa0) R1`.
    pub fn r3(&self, kappa0: f64) -> f64 {
        kappa0 / (1.0 - kappa0) * self.r1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosMethod {
    Minimax,
    Bayes,
    Discrimination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionStatus {
    Interior,
    /// A boundary case of the cost structure: `alpha` is 0 or 1 by
    /// construction.
    Boundary,
    /// The target slope exceeds `rho'(0+)`; clamped to 0.
    ClampedLow,
    /// The target slope is below `rho'(1-)`; clamped to 1.
    ClampedHigh,
    /// `rho'` jumps across the target at a kink of a piecewise-linear ROC.
    Kink,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosSolution {
    pub method: LosMethod,
    pub alpha_star: f64,
    pub power_at_alpha: f64,
    pub status: SolutionStatus,
    pub iterations: usize,
    pub residual: f64,
}

fn rho_at<R: RocFunction + ?Sized>(roc: &R, a: f64) -> f64 {
    roc.rho(a.clamp(0.0, 1.0))
}

/// Chord check on a 201-point grid.
pub fn is_concave<R: RocFunction + ?Sized>(roc: &R) -> bool {
    let grid: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let rho: Vec<f64> = grid.iter().map(|&a| rho_at(roc, a)).collect();
    (1..200).all(|i| rho[i] >= 0.5 * (rho[i - 1] + rho[i + 1]) - 1e-9)
}

const TIGHT: Tolerance = Tolerance {
    f_tol: 1e-12,
    x_tol: 1e-16,
    max_iter: 400,
};

/// Level equalising the two maximal risks: the root of
/// `rho(alpha) + R1 alpha - R0 = 0`.
pub fn solve_minimax<R: RocFunction + ?Sized>(roc: &R, costs: &CostMatrix) -> Result<LosSolution> {
    costs.validate()?;
    let boundary = |a: f64| LosSolution {
        method: LosMethod::Minimax,
        alpha_star: a,
        power_at_alpha: rho_at(roc, a),
        status: SolutionStatus::Boundary,
        iterations: 0,
        residual: 0.0,
    };
    if costs.c11 >= costs.c01 {
        return Ok(boundary(1.0));
    }
    if costs.c00 >= costs.c10 {
        return Ok(boundary(0.0));
    }
    if !is_concave(roc) {
        return Err(Error::solver("ROC is not concave; risk curves may cross repeatedly", 0, f64::NAN));
    }
    let (r0, r1) = (costs.r0(), costs.r1());
    let h = |a: f64| rho_at(roc, a) + r1 * a - r0;
    let dh = |a: f64| {
        if a > 0.0 && a < 1.0 {
            roc.rho_prime(a) + r1
        } else {
            f64::NAN
        }
    };
    let root = roots::hybrid(h, Some(dh), 0.0, 1.0, TIGHT)?;
    Ok(LosSolution {
        method: LosMethod::Minimax,
        alpha_star: root.x,
        power_at_alpha: rho_at(roc, root.x),
        status: SolutionStatus::Interior,
        iterations: root.iterations,
        residual: root.residual,
    })
}

// alpha = logistic(t) stays below 1 in floating point up to about t = 36.
const LOGIT_LO: [f64; 7] = [-700.0, -300.0, -150.0, -80.0, -40.0, -20.0, -10.0];
const LOGIT_HI: [f64; 4] = [36.0, 30.0, 20.0, 10.0];

/// First candidate logit at which `f` is finite, with its value.
pub(crate) fn finite_end<F: Fn(f64) -> f64>(f: &F, candidates: &[f64]) -> Result<(f64, f64)> {
    candidates
        .iter()
        .map(|&t| (t, f(t)))
        .find(|(_, v)| v.is_finite())
        .ok_or_else(|| Error::solver("log rho' is not finite near the ends of (0, 1)", 0, f64::NAN))
}

/// Level minimising Bayes risk: `rho'(alpha_B) = R3`, solved in
/// `logit(alpha)` on the log scale.
pub fn solve_bayes<R: RocFunction + ?Sized>(roc: &R, costs: &CostMatrix, kappa0: f64) -> Result<LosSolution> {
    costs.validate()?;
    check_open_unit("kappa0", kappa0)?;
    let target = costs.r3(kappa0).ln();
    let f = |t: f64| roc.log_rho_prime(logistic(t)) - target;
    let make = |a: f64, status, iterations, residual| LosSolution {
        method: LosMethod::Bayes,
        alpha_star: a,
        power_at_alpha: rho_at(roc, a),
        status,
        iterations,
        residual,
    };
    let (lo, f_lo) = finite_end(&f, &LOGIT_LO)?;
    if f_lo <= 0.0 {
        return Ok(make(0.0, SolutionStatus::ClampedLow, 0, f_lo.abs()));
    }
    let (hi, f_hi) = finite_end(&f, &LOGIT_HI)?;
    if f_hi >= 0.0 {
        return Ok(make(1.0, SolutionStatus::ClampedHigh, 0, f_hi.abs()));
    }
    let root = roots::bracketed(f, lo, hi, TIGHT)?;
    let a = logistic(root.x);
    // near alpha = 1 the residual is limited by the spacing of doubles, while
    // a kink leaves a jump of order one
    let status = if root.residual <= 1e-6 {
        SolutionStatus::Interior
    } else {
        SolutionStatus::Kink
    };
    Ok(make(a, status, root.iterations, root.residual))
}

/// `alpha_B = Phi(-xi sqrt(n)/2 - log(R3) / (xi sqrt(n)))`.
pub fn bayes_normal_closed_form(model: &OneSampleNormal, costs: &CostMatrix, kappa0: f64) -> Result<f64> {
    costs.validate()?;
    check_open_unit("kappa0", kappa0)?;
    let d = model.shift();
    if d == 0.0 {
        return Err(Error::domain("Bayes level undefined for zero effect"));
    }
    Ok(norm_cdf(-0.5 * d - costs.r3(kappa0).ln() / d))
}

/// Closed-form Bayes level for the normal model, cross-checked against the
/// generic solver. `residual` reports the disagreement between the two.
pub fn solve_bayes_normal(model: &OneSampleNormal, costs: &CostMatrix, kappa0: f64) -> Result<LosSolution> {
    let closed = bayes_normal_closed_form(model, costs, kappa0)?;
    let generic = solve_bayes(model, costs, kappa0)?;
    let gap = (closed - generic.alpha_star).abs();
    if gap > 1e-9 * closed.clamp(1e-300, 1.0) + 1e-15 {
        return Err(Error::solver("closed-form and generic Bayes levels disagree", generic.iterations, gap));
    }
    Ok(LosSolution {
        alpha_star: closed,
        power_at_alpha: model.rho(closed),
        residual: gap,
        ..generic
    })
}

/// `D(alpha) = (rho - alpha) log[(rho/alpha) (1-alpha)/(1-rho)]`.
pub fn discrimination<R: RocFunction + ?Sized>(roc: &R, a: f64) -> f64 {
    if a <= 0.0 || a >= 1.0 {
        return 0.0;
    }
    let rho = roc.rho(a);
    let log_or = rho.ln() - a.ln() + (-a).ln_1p() - roc.rho_complement(a).ln();
    (rho - a) * log_or
}

fn discrimination_slope<R: RocFunction + ?Sized>(roc: &R, a: f64) -> f64 {
    let rho = roc.rho(a);
    let comp = roc.rho_complement(a);
    let rp = roc.rho_prime(a);
    let log_or = rho.ln() - a.ln() + (-a).ln_1p() - comp.ln();
    (rp - 1.0) * log_or + (rho - a) * (rp / (rho * comp) - 1.0 / (a * (1.0 - a)))
}

fn discrimination_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (1..1000).map(|i| i as f64 / 1000.0).collect();
    for k in 4..=15 {
        let e = 10f64.powi(-k);
        g.push(e);
        g.push(1.0 - e);
    }
    g.sort_by(f64::total_cmp);
    g
}

/// Level maximising `D`: coarse grid scan, golden section around the best
/// grid point, then a root polish of `D'` when it changes sign there.
pub fn solve_discrimination<R: RocFunction + ?Sized>(roc: &R) -> Result<LosSolution> {
    let grid = discrimination_grid();
    let vals: Vec<f64> = grid.iter().map(|&a| discrimination(roc, a)).collect();
    let (i, best) = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, v)| (i, *v))
        .ok_or_else(|| Error::solver("no discrimination: D is undefined on the grid", 0, f64::NAN))?;
    if best <= 1e-14 {
        return Err(Error::solver("no discrimination: D vanishes on (0, 1)", grid.len(), best));
    }
    let lo = if i == 0 { 0.5 * grid[0] } else { grid[i - 1] };
    let hi = if i + 1 == grid.len() { 0.5 * (1.0 + grid[i]) } else { grid[i + 1] };
    let (mut a, mut fa) = roots::golden_max(|x| discrimination(roc, x), lo, hi, 1e-12 * (hi - lo));
    let mut iterations = 60;
    let slope = |x: f64| discrimination_slope(roc, x);
    let (s_lo, s_hi) = (slope(lo), slope(hi));
    if s_lo > 0.0 && s_hi < 0.0 {
        let polish = Tolerance {
            f_tol: 0.0,
            x_tol: 1e-16,
            max_iter: 300,
        };
        if let Ok(root) = roots::bracketed(slope, lo, hi, polish) {
            let fr = discrimination(roc, root.x);
            if fr >= fa - 1e-15 * fa.abs() {
                a = root.x;
                fa = fr;
                iterations += root.iterations;
            }
        }
    }
    let residual = slope(a).abs();
    let status = if residual.is_finite() && residual < 1e-6 {
        SolutionStatus::Interior
    } else {
        SolutionStatus::Kink
    };
    let _ = fa;
    Ok(LosSolution {
        method: LosMethod::Discrimination,
        alpha_star: a,
        power_at_alpha: roc.rho(a),
        status,
        iterations,
        residual,
    })
}

/// Which optimal level a sample-size search evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SampleSizeMethod {
    Discrimination,
    Minimax { costs: CostMatrix },
    Bayes { costs: CostMatrix, kappa0: f64 },
}

impl SampleSizeMethod {
    fn solve<R: RocFunction + ?Sized>(&self, roc: &R) -> Result<LosSolution> {
        match self {
            SampleSizeMethod::Discrimination => solve_discrimination(roc),
            SampleSizeMethod::Minimax { costs } => solve_minimax(roc, costs),
            SampleSizeMethod::Bayes { costs, kappa0 } => solve_bayes(roc, costs, *kappa0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSize {
    pub n_star: usize,
    /// Continuous solution, when a closed form exists.
    pub n_bar: Option<f64>,
    pub alpha_at_n: f64,
    pub rho_at_n: f64,
    pub log_odds_ratio_at_n: f64,
    /// `1 / (1 + e^{b/2})`.
    pub design_alpha: f64,
    /// `e^{b/2} / (1 + e^{b/2})`.
    pub design_rho: f64,
}

fn check_bound(b: f64) -> Result<()> {
    if b > 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("log-odds bound b must be positive, got {b}")))
    }
}

/// Closed form for the one-sample normal model with standardised effect
/// `xi`: `n_bar = 4 [Phi^{-1}(e^{b/2} / (1 + e^{b/2}))]^2 / xi^2`.
pub fn sample_size_normal(b: f64, xi: f64) -> Result<SampleSize> {
    check_bound(b)?;
    if !(xi.is_finite() && xi != 0.0) {
        return Err(Error::domain(format!("effect must be nonzero, got {xi}")));
    }
    let design_alpha = logistic(-0.5 * b);
    let z = norm_upper_quantile(design_alpha)?;
    let n_bar = 4.0 * z * z / (xi * xi);
    let n_star = (n_bar.ceil() as usize).max(1);
    let model = OneSampleNormal::new(0.0, xi.abs(), 1.0, n_star)?;
    let alpha = norm_cdf(-0.5 * model.shift());
    Ok(SampleSize {
        n_star,
        n_bar: Some(n_bar),
        alpha_at_n: alpha,
        rho_at_n: model.rho(alpha),
        log_odds_ratio_at_n: log_odds_ratio(&model, alpha),
        design_alpha,
        design_rho: logistic(0.5 * b),
    })
}

fn log_odds_ratio<R: RocFunction + ?Sized>(roc: &R, a: f64) -> f64 {
    if a <= 0.0 || a >= 1.0 {
        return f64::NAN;
    }
    roc.rho(a).ln() - a.ln() + (-a).ln_1p() - roc.rho_complement(a).ln()
}

/// Smallest `n` whose optimal level attains a log odds ratio of at least
/// `b`. The log odds ratio grows with `n`, so the search gallops upward and
/// then bisects.
pub fn sample_size(
    b: f64,
    family: FamilyKind,
    effect: f64,
    method: SampleSizeMethod,
    n_max: usize,
) -> Result<SampleSize> {
    check_bound(b)?;
    if !(effect.is_finite() && effect != 0.0) {
        return Err(Error::domain(format!("effect must be nonzero, got {effect}")));
    }
    let n_min = match family {
        FamilyKind::TwoSample => 2,
        _ => 1,
    };
    let fixed_size = matches!(family, FamilyKind::TeaBinomial | FamilyKind::TeaFisher);
    let eval = |n: usize| -> Result<(f64, f64, f64)> {
        let roc = ModelFamily::new(family, n)?.roc_at(effect)?;
        let sol = method.solve(&*roc)?;
        Ok((log_odds_ratio(&*roc, sol.alpha_star), sol.alpha_star, sol.power_at_alpha))
    };
    let ok = |v: f64| v.is_finite() && v >= b;
    let (mut lo, mut hi) = (n_min - 1, n_min);
    let mut at_hi = eval(hi)?;
    while !ok(at_hi.0) {
        if fixed_size || hi >= n_max {
            return Err(Error::solver(
                format!("log odds ratio stays below {b} up to n = {hi}"),
                hi,
                b - at_hi.0,
            ));
        }
        lo = hi;
        hi = (2 * hi).min(n_max);
        at_hi = eval(hi)?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let v = eval(mid)?;
        if ok(v.0) {
            hi = mid;
            at_hi = v;
        } else {
            lo = mid;
        }
    }
    let n_bar = (family == FamilyKind::Normal).then(|| {
        let z = norm_upper_quantile(logistic(-0.5 * b)).unwrap_or(f64::NAN);
        4.0 * z * z / (effect * effect)
    });
    Ok(SampleSize {
        n_star: hi,
        n_bar,
        alpha_at_n: at_hi.1,
        rho_at_n: at_hi.2,
        log_odds_ratio_at_n: at_hi.0,
        design_alpha: logistic(-0.5 * b),
        design_rho: logistic(0.5 * b),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskPoint {
    pub alpha: f64,
    /// `C00 (1 - alpha) + C01 alpha`.
    pub r0: f64,
    /// `C10 (1 - rho) + C11 rho`.
    pub r1: f64,
    /// `kappa0 R0 + (1 - kappa0) R1`.
    pub bayes: f64,
}

pub fn risk_curves<R: RocFunction + ?Sized>(
    roc: &R,
    costs: &CostMatrix,
    kappa0: f64,
    grid: &[f64],
) -> Result<Vec<RiskPoint>> {
    costs.validate()?;
    check_open_unit("kappa0", kappa0)?;
    grid.iter()
        .map(|&a| {
            crate::check_closed_unit("alpha", a)?;
            let rho = roc.rho(a);
            let r0 = costs.c00 * (1.0 - a) + costs.c01 * a;
            let r1 = costs.c10 * roc.rho_complement(a) + costs.c11 * rho;
            Ok(RiskPoint {
                alpha: a,
                r0,
                r1,
                bayes: kappa0 * r0 + (1.0 - kappa0) * r1,
            })
        })
        .collect()
}

/// One scenario of the normal-model comparison table (`C00 = C11 = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosScenario {
    pub setting: usize,
    pub c01: f64,
    pub c10: f64,
    pub kappa0: f64,
    pub n: usize,
    pub xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosTableRow {
    #[serde(flatten)]
    pub scenario: LosScenario,
    pub alpha_m: f64,
    pub alpha_b: f64,
    pub alpha_d: f64,
}

/// The 24 scenarios: `C01` in {1, 10}, `kappa0` in {.5, .25}, `n` in
/// {1, 5}, `xi` in {.5, 1, 2}, with `C10 = 1`.
pub fn table1_scenarios() -> Vec<LosScenario> {
    let mut out = Vec::with_capacity(24);
    for c01 in [1.0, 10.0] {
        for kappa0 in [0.5, 0.25] {
            for n in [1, 5] {
                for xi in [0.5, 1.0, 2.0] {
                    out.push(LosScenario {
                        setting: out.len() + 1,
                        c01,
                        c10: 1.0,
                        kappa0,
                        n,
                        xi,
                    });
                }
            }
        }
    }
    out
}

/// All three levels for one scenario, from the generic solvers.
pub fn los_table_row(s: &LosScenario) -> Result<LosTableRow> {
    let model = OneSampleNormal::new(0.0, s.xi, 1.0, s.n)?;
    let costs = CostMatrix::errors_only(s.c01, s.c10)?;
    Ok(LosTableRow {
        scenario: *s,
        alpha_m: solve_minimax(&model, &costs)?.alpha_star,
        alpha_b: solve_bayes(&model, &costs, s.kappa0)?.alpha_star,
        alpha_d: solve_discrimination(&model)?.alpha_star,
    })
}

pub fn table1() -> Result<Vec<LosTableRow>> {
    table1_scenarios().iter().map(los_table_row).collect()
}
