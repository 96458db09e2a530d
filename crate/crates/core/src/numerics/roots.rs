use crate::error::{Error, Result};

/// Direction of a monotone function on its bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slope {
    Increasing,
    Decreasing,
}

/// Brent's method on a sign-changing bracket. Stops once `|f(x)| <= tol`
/// or the bracket shrinks to adjacent floats.
pub fn bracketed_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa.abs() <= tol {
        return Ok(a);
    }
    if fb.abs() <= tol {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidArgument(format!(
            "no sign change on [{lo}, {hi}]: f = {fa}, {fb}"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..500 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let eps = 2.0 * f64::EPSILON * b.abs().max(f64::MIN_POSITIVE);
        let m = 0.5 * (c - b);
        if fb.abs() <= tol || m.abs() <= eps {
            return Ok(b);
        }
        if e.abs() >= eps && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (eps * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > eps { d } else { eps.copysign(m) };
        fb = f(b);
    }
    Err(Error::NoConvergence(format!("brent on [{lo}, {hi}]")))
}

/// Safeguarded Newton iteration for a function known to be monotone on
/// `(lo, hi)` with its root inside.
///
/// `fdf` returns `(f(x), f'(x))`. The endpoints are never evaluated, so
/// they may be poles. Newton steps that leave the current bracket or fail
/// to halve the residual are replaced by bisection.
pub fn monotone_root<F>(
    fdf: F,
    lo: f64,
    hi: f64,
    slope: Slope,
    guess: Option<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("bad bracket [{lo}, {hi}]")));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut x = match guess {
        Some(g) if g > lo && g < hi => g,
        _ => 0.5 * (lo + hi),
    };
    let mut prev_residual = f64::INFINITY;
    for _ in 0..max_iter {
        let (fx, dfx) = fdf(x);
        if !fx.is_finite() {
            return Err(Error::NoConvergence(format!("non-finite residual at {x}")));
        }
        if fx.abs() <= tol {
            return Ok(x);
        }
        // root lies to the right of x iff (f increasing and f(x) < 0) or (decreasing and f(x) > 0)
        let root_right = match slope {
            Slope::Increasing => fx < 0.0,
            Slope::Decreasing => fx > 0.0,
        };
        if root_right {
            lo = x;
        } else {
            hi = x;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // bracket exhausted at floating-point resolution
            return Ok(x);
        }
        let newton = x - fx / dfx;
        let good = dfx != 0.0
            && newton.is_finite()
            && newton > lo
            && newton < hi
            && fx.abs() <= 0.5 * prev_residual;
        x = if good { newton } else { mid };
        prev_residual = fx.abs();
    }
    Err(Error::NoConvergence(format!(
        "monotone root on [{lo}, {hi}] after {max_iter} iterations"
    )))
}
