use num_complex::Complex64;

use crate::error::{Error, Result};

/// Newton's method for an analytic `f`, with step halving whenever a full
/// step increases `|f|`.
pub fn complex_newton<F>(fdf: F, seed: Complex64, tol: f64, max_iter: usize) -> Result<Complex64>
where
    F: Fn(Complex64) -> (Complex64, Complex64),
{
    let mut z = seed;
    let (mut fz, mut dfz) = fdf(z);
    for _ in 0..max_iter {
        if !(fz.re.is_finite() && fz.im.is_finite()) {
            break;
        }
        if fz.norm() <= tol {
            return Ok(z);
        }
        if dfz.norm() == 0.0 {
            return Err(Error::NoConvergence(format!("zero derivative at {z}")));
        }
        let step = fz / dfz;
        let mut lambda = 1.0;
        loop {
            let cand = z - step * lambda;
            let (fc, dfc) = fdf(cand);
            if fc.re.is_finite() && fc.im.is_finite() && fc.norm() < fz.norm() {
                z = cand;
                fz = fc;
                dfz = dfc;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                // no descent possible at working precision
                return if fz.norm() <= tol.max(1e3 * f64::EPSILON) {
                    Ok(z)
                } else {
                    Err(Error::NoConvergence(format!("newton stalled at {z}, |f| = {:.3e}", fz.norm())))
                };
            }
        }
    }
    if fz.norm() <= tol {
        Ok(z)
    } else {
        Err(Error::NoConvergence(format!(
            "complex newton: |f| = {:.3e} after {max_iter} iterations",
            fz.norm()
        )))
    }
}

/// Tracks the root of `f(·, t)` from `t = 0` (root `start`) to `t = 1` in
/// `segments` equal steps, warm-starting each Newton solve at the previous
/// root.
pub fn continue_along_path<F>(
    fdf: F,
    start: Complex64,
    segments: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Complex64>
where
    F: Fn(Complex64, f64) -> (Complex64, Complex64),
{
    let mut z = start;
    for k in 1..=segments {
        let t = k as f64 / segments as f64;
        z = complex_newton(|w| fdf(w, t), z, tol, max_iter)?;
    }
    Ok(z)
}
