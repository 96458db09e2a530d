//! Hilbert transform `H(z) = ∫ (z-λ)⁻¹ dμ(λ)` off the support hull, its
//! branch inverse `K`, the R-transform `R(γ) = K(γ) - 1/γ` and its inverse
//! `Q`, plus the complex continuation of `R` near zero.
//!
//! `R` is never computed as `K(γ) - 1/γ`, which cancels catastrophically for
//! small `γ`. Writing `z = r + 1/γ`, the equation `H(z) = γ` becomes
//!
//! ```text
//! ψ(r; γ) = Σ wᵢ (λᵢ - r) / (1 + γ (r - λᵢ)) = 0,      H(z) - γ = γ² ψ,
//! ```
//!
//! and `ψ` is strictly decreasing in `r` with `∂ψ/∂r = -Σ wᵢ / Dᵢ²`,
//! `Dᵢ = 1 + γ (r - λᵢ)`. At `γ = 0` the root is the mean, so the formula
//! is uniformly well conditioned.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{AtomicMeasure, Spectrum};
use crate::numerics::{continue_along_path, monotone_root, Slope, ToleranceConfig};

const DIVERGENCE_CAP: f64 = 1e12;

/// Endpoints that delimit where `K`, `R` and `Q` are defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformDomain {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `lim_{z↑λ_min} H(z)`, possibly `-∞`.
    pub h_min: f64,
    /// `lim_{z↓λ_max} H(z)`, possibly `+∞`.
    pub h_max: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub mean: f64,
}

impl TransformDomain {
    /// `H_min < γ < H_max` (open).
    pub fn contains_gamma(&self, gamma: f64) -> bool {
        gamma > self.h_min && gamma < self.h_max
    }

    /// `H_min ≤ γ ≤ H_max`.
    pub fn closure_contains_gamma(&self, gamma: f64) -> bool {
        gamma >= self.h_min && gamma <= self.h_max
    }
}

fn inv(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

pub fn domain(mu: &AtomicMeasure) -> TransformDomain {
    let (lo, hi) = mu.support();
    let h_max = if mu.upper_edge_mass() > 0.0 {
        f64::INFINITY
    } else {
        let s: f64 = mu.atoms().map(|(x, w)| w / (hi - x)).sum();
        if s > DIVERGENCE_CAP {
            f64::INFINITY
        } else {
            s
        }
    };
    let h_min = if mu.lower_edge_mass() > 0.0 {
        f64::NEG_INFINITY
    } else {
        let s: f64 = mu.atoms().map(|(x, w)| w / (lo - x)).sum();
        if s < -DIVERGENCE_CAP {
            f64::NEG_INFINITY
        } else {
            s
        }
    };
    let mean = mu.mean();
    TransformDomain {
        lambda_min: lo,
        lambda_max: hi,
        h_min,
        h_max,
        alpha_min: (lo - inv(h_min)).min(mean),
        alpha_max: (hi - inv(h_max)).max(mean),
        mean,
    }
}

fn check_outside(mu: &AtomicMeasure, z: f64) -> Result<()> {
    let (lo, hi) = mu.support();
    if !z.is_finite() || (z >= lo && z <= hi) {
        return Err(Error::Domain(format!("z = {z} is not outside the support [{lo}, {hi}]")));
    }
    Ok(())
}

pub fn hilbert(mu: &AtomicMeasure, z: f64) -> Result<f64> {
    check_outside(mu, z)?;
    Ok(mu.atoms().map(|(x, w)| w / (z - x)).sum())
}

pub fn hilbert_prime(mu: &AtomicMeasure, z: f64) -> Result<f64> {
    check_outside(mu, z)?;
    Ok(-mu.atoms().map(|(x, w)| w / ((z - x) * (z - x))).sum::<f64>())
}

/// `(ψ(r; γ), ∂ψ/∂r)`.
pub(crate) fn psi(mu: &AtomicMeasure, r: f64, gamma: f64) -> (f64, f64) {
    let mut f = 0.0;
    let mut df = 0.0;
    for (x, w) in mu.atoms() {
        let d = 1.0 + gamma * (r - x);
        f += w * (x - r) / d;
        df -= w / (d * d);
    }
    (f, df)
}

fn psi_tol(gamma: f64, tol: &ToleranceConfig) -> f64 {
    let g2 = gamma * gamma;
    if g2 == 0.0 {
        tol.root_abs_tol
    } else {
        tol.root_abs_tol * (gamma.abs().max(1.0) / g2).min(1.0)
    }
}

fn gamma_domain_error(gamma: f64, d: &TransformDomain) -> Error {
    Error::Domain(format!("γ = {gamma} outside ({}, {})", d.h_min, d.h_max))
}

pub fn k_transform(mu: &AtomicMeasure, gamma: f64) -> Result<f64> {
    k_transform_with(mu, gamma, &ToleranceConfig::default())
}

/// Solves `H(z) = γ` on the branch `z > λ_max` (γ > 0) or `z < λ_min` (γ < 0).
pub fn k_transform_with(mu: &AtomicMeasure, gamma: f64, tol: &ToleranceConfig) -> Result<f64> {
    let d = domain(mu);
    if gamma == 0.0 || !gamma.is_finite() {
        return Err(Error::Domain(format!("K has a pole at γ = {gamma}")));
    }
    if !d.closure_contains_gamma(gamma) {
        return Err(gamma_domain_error(gamma, &d));
    }
    if gamma == d.h_max {
        return Ok(d.lambda_max);
    }
    if gamma == d.h_min {
        return Ok(d.lambda_min);
    }
    let first = mu.positions()[0];
    let last = *mu.positions().last().expect("nonempty");
    if first == last {
        return Ok(first + 1.0 / gamma);
    }
    // 1/(z - first) ≤ H(z) ≤ 1/(z - last) on the upper branch, reversed below
    let (lo, hi) = if gamma > 0.0 {
        (d.lambda_max.max(first + 1.0 / gamma), last + 1.0 / gamma)
    } else {
        (first + 1.0 / gamma, d.lambda_min.min(last + 1.0 / gamma))
    };
    let target = tol.root_abs_tol * gamma.abs().max(1.0);
    let fdf = |z: f64| {
        let mut h = 0.0;
        let mut dh = 0.0;
        for (x, w) in mu.atoms() {
            let u = 1.0 / (z - x);
            h += w * u;
            dh -= w * u * u;
        }
        (h - gamma, dh)
    };
    if !(lo < hi) {
        return Ok(0.5 * (lo + hi));
    }
    monotone_root(fdf, lo, hi, Slope::Decreasing, None, target, tol.newton_max_iter)
}

pub fn r_transform(mu: &AtomicMeasure, gamma: f64) -> Result<f64> {
    r_transform_with(mu, gamma, &ToleranceConfig::default())
}

/// `R(γ)` for `γ ∈ [H_min, H_max]`, with `R(0) = mean` and the closed
/// endpoints mapping to `α_min`, `α_max`.
pub fn r_transform_with(mu: &AtomicMeasure, gamma: f64, tol: &ToleranceConfig) -> Result<f64> {
    let d = domain(mu);
    if !gamma.is_finite() || !d.closure_contains_gamma(gamma) {
        return Err(gamma_domain_error(gamma, &d));
    }
    if gamma == 0.0 {
        return Ok(d.mean);
    }
    if mu.is_dirac() {
        return Ok(mu.positions()[0]);
    }
    if gamma == d.h_max {
        return Ok(d.alpha_max);
    }
    if gamma == d.h_min {
        return Ok(d.alpha_min);
    }
    r_root(mu, &d, gamma, tol)
}

fn r_root(mu: &AtomicMeasure, d: &TransformDomain, gamma: f64, tol: &ToleranceConfig) -> Result<f64> {
    let (lo, hi) = if gamma > 0.0 {
        (d.lambda_min.max(d.lambda_max - 1.0 / gamma), d.lambda_max)
    } else {
        (d.lambda_min, d.lambda_max.min(d.lambda_min - 1.0 / gamma))
    };
    let guess = d.mean + gamma * mu.variance();
    monotone_root(
        |r| psi(mu, r, gamma),
        lo,
        hi,
        Slope::Decreasing,
        Some(guess),
        psi_tol(gamma, tol),
        tol.newton_max_iter,
    )
}

/// `R'(γ) = Σ w (λ-r)²/D² / Σ w/D²` at `r = R(γ)`; equals the variance at 0.
pub fn r_derivative(mu: &AtomicMeasure, gamma: f64) -> Result<f64> {
    let r = r_transform(mu, gamma)?;
    Ok(r_derivative_at(mu, gamma, r))
}

fn r_derivative_at(mu: &AtomicMeasure, gamma: f64, r: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, w) in mu.atoms() {
        let d = 1.0 + gamma * (r - x);
        let d2 = d * d;
        num += w * (x - r) * (x - r) / d2;
        den += w / d2;
    }
    num / den
}

pub fn q_transform(mu: &AtomicMeasure, alpha: f64) -> Result<f64> {
    q_transform_with(mu, alpha, &ToleranceConfig::default())
}

/// Inverse of `R`: the `γ` with `R(γ) = α`, for `α ∈ (α_min, α_max)`.
/// The closed endpoint is accepted when the matching `H` limit is finite.
pub fn q_transform_with(mu: &AtomicMeasure, alpha: f64, tol: &ToleranceConfig) -> Result<f64> {
    let d = domain(mu);
    let err = || Error::Domain(format!("α = {alpha} outside ({}, {})", d.alpha_min, d.alpha_max));
    if !alpha.is_finite() {
        return Err(err());
    }
    if alpha == d.mean {
        return Ok(0.0);
    }
    if mu.is_dirac() || alpha < d.alpha_min || alpha > d.alpha_max {
        return Err(err());
    }
    if alpha == d.alpha_max {
        return if d.h_max.is_finite() { Ok(d.h_max) } else { Err(err()) };
    }
    if alpha == d.alpha_min {
        return if d.h_min.is_finite() { Ok(d.h_min) } else { Err(err()) };
    }
    let upward = alpha > d.mean;
    let limit = if upward { d.h_max } else { d.h_min };
    let far = if limit.is_finite() {
        limit
    } else {
        let mut g = if upward { 1.0 } else { -1.0 } / mu.variance().sqrt();
        loop {
            let r = r_root(mu, &d, g, tol)?;
            if (upward && r > alpha) || (!upward && r < alpha) {
                break g;
            }
            g *= 2.0;
            if !g.is_finite() {
                return Err(Error::NoConvergence(format!("no Q bracket for α = {alpha}")));
            }
        }
    };
    let (lo, hi) = if upward { (0.0, far) } else { (far, 0.0) };
    let fdf = |g: f64| match r_root(mu, &d, g, tol) {
        Ok(r) => (r - alpha, r_derivative_at(mu, g, r)),
        Err(_) => (f64::NAN, f64::NAN),
    };
    let guess = (alpha - d.mean) / mu.variance();
    monotone_root(fdf, lo, hi, Slope::Increasing, Some(guess), tol.root_abs_tol, tol.newton_max_iter)
}

/// Radius inside which [`r_transform_complex`] accepts arguments.
///
/// Combines the heuristic `½ min(|H(λ_min - Δ)|, H(λ_max + Δ))`,
/// `Δ = 0.1 (λ_max - λ_min + 1)`, with `1/(4s)`, `s` the largest distance
/// from the mean to the support hull. The second term keeps the disk inside
/// the convergence disk of the R-series, which for the symmetric two-point
/// law has its singularities at `±i/(2s)`.
pub fn r_guard(mu: &AtomicMeasure) -> f64 {
    let (lo, hi) = mu.support();
    let delta = 0.1 * (hi - lo + 1.0);
    let h = |z: f64| mu.atoms().map(|(x, w)| w / (z - x)).sum::<f64>();
    let heuristic = 0.5 * h(lo - delta).abs().min(h(hi + delta));
    let m = mu.mean();
    let spread = (hi - m).abs().max((m - lo).abs());
    if spread > 0.0 {
        heuristic.min(0.25 / spread)
    } else {
        heuristic
    }
}

pub fn r_transform_complex(mu: &AtomicMeasure, w: Complex64) -> Result<Complex64> {
    r_transform_complex_with(mu, w, &ToleranceConfig::default())
}

/// Analytic continuation of `R` to `|w| ≤ r_guard(μ)`.
///
/// Tracks the root of the complex `ψ(r; t w) = 0` along `t ∈ [0, 1]`,
/// starting from `r = mean` at `t = 0`, so the iterate stays on the branch
/// that is analytic at zero.
pub fn r_transform_complex_with(mu: &AtomicMeasure, w: Complex64, tol: &ToleranceConfig) -> Result<Complex64> {
    let guard = r_guard(mu);
    if !(w.re.is_finite() && w.im.is_finite()) || w.norm() > guard {
        return Err(Error::Domain(format!("|w| = {} exceeds the guard radius {guard}", w.norm())));
    }
    if w.im == 0.0 {
        return r_transform_with(mu, w.re, tol).map(|r| Complex64::new(r, 0.0));
    }
    if mu.is_dirac() {
        return Ok(Complex64::new(mu.positions()[0], 0.0));
    }
    let fdf = |r: Complex64, t: f64| {
        let g = w * t;
        let mut f = Complex64::new(0.0, 0.0);
        let mut df = Complex64::new(0.0, 0.0);
        for (x, wt) in mu.atoms() {
            let d = g * (r - x) + 1.0;
            let inv_d = d.inv();
            f += (-r + x) * inv_d * wt;
            df -= inv_d * inv_d * wt;
        }
        (f, df)
    };
    continue_along_path(
        fdf,
        Complex64::new(mu.mean(), 0.0),
        tol.path_segments,
        tol.root_abs_tol,
        tol.newton_max_iter,
    )
}

pub fn v_n_solve(e: &Spectrum, theta: f64, beta: u8) -> Result<f64> {
    v_n_solve_with(e, theta, beta, &ToleranceConfig::default())
}

/// `v_N` with `H_{E_N}(β/(2θ) + v_N) = 2θ/β`, i.e. the R-transform of the
/// empirical measure at `2θ/β`.
pub fn v_n_solve_with(e: &Spectrum, theta: f64, beta: u8, tol: &ToleranceConfig) -> Result<f64> {
    check_beta(beta)?;
    if theta == 0.0 || !theta.is_finite() {
        return Err(Error::InvalidArgument(format!("v_N needs a finite θ ≠ 0, got {theta}")));
    }
    let gamma = 2.0 * theta / beta as f64;
    let emp = e.empirical();
    let d = domain(&emp);
    if !d.contains_gamma(gamma) {
        return Err(gamma_domain_error(gamma, &d));
    }
    r_transform_with(&emp, gamma, tol)
}

pub(crate) fn check_beta(beta: u8) -> Result<()> {
    if beta == 1 || beta == 2 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("β must be 1 or 2, got {beta}")))
    }
}

pub const MAX_SERIES_ORDER: usize = 12;

/// Coefficients `c_0..c_order` of `R(γ) = Σ c_k γ^k` (free cumulants
/// `c_k = κ_{k+1}`), from the moment-cumulant recursion
/// `M(z) = 1 + Σ_s κ_s z^s M(z)^s` on the centred measure.
pub fn r_series(mu: &AtomicMeasure, order: usize) -> Result<Vec<f64>> {
    if order > MAX_SERIES_ORDER {
        return Err(Error::InvalidArgument(format!(
            "series order {order} exceeds {MAX_SERIES_ORDER}"
        )));
    }
    let n = order + 1;
    let mean = mu.mean();
    let moments: Vec<f64> = (0..=n as u32).map(|k| mu.central_moment(k)).collect();
    // powers[s] = M(z)^s truncated at degree n
    let mut powers: Vec<Vec<f64>> = vec![vec![0.0; n + 1]; n + 1];
    powers[0][0] = 1.0;
    for s in 1..=n {
        for i in 0..=n {
            powers[s][i] = (0..=i).map(|j| powers[s - 1][j] * moments[i - j]).sum();
        }
    }
    let mut kappa = vec![0.0; n + 1];
    for k in 1..=n {
        kappa[k] = moments[k] - (1..k).map(|s| kappa[s] * powers[s][k - s]).sum::<f64>();
    }
    kappa[1] = mean;
    Ok(kappa[1..=n].to_vec())
}
