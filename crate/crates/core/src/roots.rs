//! Bracketed one-dimensional root finding and maximisation.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub iterations: usize,
    /// |f(x)| at the returned point.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    /// Stop once |f(x)| falls to this level.
    pub f_tol: f64,
    /// Stop once the bracket is narrower than this.
    pub x_tol: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            f_tol: 1e-12,
            x_tol: 1e-15,
            max_iter: 200,
        }
    }
}

/// Safeguarded hybrid on a sign-changing bracket `[lo, hi]`.
///
/// Each step tries a Newton step from the best point when `df` is given and
/// a secant step through the bracket ends otherwise; the candidate is kept
/// only if it stays strictly inside the bracket, and a plain bisection is
/// taken whenever the bracket fails to halve over two steps.
pub fn hybrid<F, D>(f: F, df: Option<D>, lo: f64, hi: f64, tol: Tolerance) -> Result<Root>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(Root { x: a, iterations: 0, residual: 0.0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, iterations: 0, residual: 0.0 });
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::solver(
            format!("root not bracketed on [{a}, {b}] (f = {fa:e}, {fb:e})"),
            0,
            fa.abs().min(fb.abs()),
        ));
    }
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    let mut width_two_ago = f64::INFINITY;
    let mut width_one_ago = b - a;
    for it in 1..=tol.max_iter {
        let width = b - a;
        let mut x = f64::NAN;
        if width <= 0.5 * width_two_ago {
            if let Some(d) = df.as_ref() {
                let slope = d(best.0);
                if slope.is_finite() && slope != 0.0 {
                    x = best.0 - best.1 / slope;
                }
            } else {
                x = b - fb * (b - a) / (fb - fa);
            }
        }
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
            if !(x > a && x < b) {
                // a and b are adjacent floats
                return Ok(Root { x: best.0, iterations: it, residual: best.1.abs() });
            }
        }
        let fx = f(x);
        if fx.abs() < best.1.abs() || fx.is_nan() {
            best = (x, fx);
        }
        if fx == 0.0 || fx.abs() <= tol.f_tol {
            return Ok(Root { x, iterations: it, residual: fx.abs() });
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        width_two_ago = width_one_ago;
        width_one_ago = width;
        if b - a <= tol.x_tol * (1.0 + a.abs().max(b.abs())) {
            let (x, fx) = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
            return Ok(Root { x, iterations: it, residual: fx.abs() });
        }
    }
    Err(Error::solver(
        "iteration limit reached",
        tol.max_iter,
        best.1.abs(),
    ))
}

/// Bracketed search without derivative information.
pub fn bracketed<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<Root> {
    hybrid(f, None::<fn(f64) -> f64>, lo, hi, tol)
}

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmax, max)`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, x_tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > x_tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
