//! Limits of `(1/N) log I_N(θ, E_N)`.
//!
//! For `γ = 2θ/β` the maximizer is `v = R(γ)` while `H_min < γ < H_max`
//! and is pinned to `λ_max - 1/γ` (resp. `λ_min - 1/γ`) beyond, giving
//!
//! ```text
//! I(θ) = θ v - (β/2) ∫ log(1 + γ (v - λ)) dμ(λ).
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::measure::{AtomicMeasure, Spectrum};
use crate::numerics::{adaptive_quadrature, ToleranceConfig};
use crate::transform::{
    check_beta, domain, r_guard, r_series, r_transform_complex_with, r_transform_with, v_n_solve_with,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Interior,
    SaturatedMax,
    SaturatedMin,
    BoundaryMax,
    BoundaryMin,
    Zero,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Interior => "Interior",
            Regime::SaturatedMax => "SaturatedMax",
            Regime::SaturatedMin => "SaturatedMin",
            Regime::BoundaryMax => "BoundaryMax",
            Regime::BoundaryMin => "BoundaryMin",
            Regime::Zero => "Zero",
        }
    }

    /// Interior, its boundary, or θ = 0: the maximizer is an R-transform value.
    pub fn is_unsaturated(self) -> bool {
        !matches!(self, Regime::SaturatedMax | Regime::SaturatedMin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoteResult {
    pub theta: f64,
    pub value: f64,
    pub v_theta: f64,
    pub regime: Regime,
    /// `K(2θ/β)` when the maximizer comes from the R-transform.
    pub k_point: Option<f64>,
    pub beta: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrefactorResult {
    /// `Z = ∫ (K(2θ) - λ)⁻² dμ`.
    pub z_value: f64,
    /// `Z - 4θ²`, strictly positive for non-degenerate measures.
    pub det_value: f64,
    /// `lim e^{-N·I(θ)} I_N(θ, E_N) = 2|θ| / √Z`.
    pub prefactor: f64,
    pub leading_exponent_per_n: f64,
}

/// `Σ wᵢ ln(1 + γ (v - λᵢ))`, failing if any argument is not positive.
fn log_sum(mu: &AtomicMeasure, gamma: f64, v: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (x, w) in mu.atoms() {
        let t = gamma * (v - x);
        if !(t > -1.0) {
            return Err(Error::Domain(format!(
                "log argument 1 + γ(v - λ) = {} ≤ 0 at λ = {x} (γ = {gamma}, v = {v})",
                1.0 + t
            )));
        }
        acc += w * t.ln_1p();
    }
    Ok(acc)
}

pub fn rank_one_limit(mu: &AtomicMeasure, theta: f64, beta: u8) -> Result<AsymptoteResult> {
    rank_one_limit_with(mu, theta, beta, &ToleranceConfig::default())
}

pub fn rank_one_limit_with(
    mu: &AtomicMeasure,
    theta: f64,
    beta: u8,
    tol: &ToleranceConfig,
) -> Result<AsymptoteResult> {
    check_beta(beta)?;
    if !theta.is_finite() {
        return Err(Error::InvalidArgument(format!("θ must be finite, got {theta}")));
    }
    let d = domain(mu);
    if theta == 0.0 {
        return Ok(AsymptoteResult { theta, value: 0.0, v_theta: d.mean, regime: Regime::Zero, k_point: None, beta });
    }
    let b = beta as f64;
    let gamma = 2.0 * theta / b;
    let (regime, v, k_point) = if gamma > d.h_max {
        (Regime::SaturatedMax, d.lambda_max - 1.0 / gamma, None)
    } else if gamma < d.h_min {
        (Regime::SaturatedMin, d.lambda_min - 1.0 / gamma, None)
    } else if gamma == d.h_max {
        (Regime::BoundaryMax, d.alpha_max, Some(d.lambda_max))
    } else if gamma == d.h_min {
        (Regime::BoundaryMin, d.alpha_min, Some(d.lambda_min))
    } else {
        let v = r_transform_with(mu, gamma, tol)?;
        (Regime::Interior, v, Some(v + 1.0 / gamma))
    };
    let value = theta * v - 0.5 * b * log_sum(mu, gamma, v)?;
    Ok(AsymptoteResult { theta, value, v_theta: v, regime, k_point, beta })
}

/// [`rank_one_limit`] over a θ grid, in grid order.
pub fn rank_one_limit_grid(
    mu: &AtomicMeasure,
    thetas: &[f64],
    beta: u8,
    tol: &ToleranceConfig,
    exec: Execution,
) -> Result<Vec<AsymptoteResult>> {
    map_slice(exec, thetas, |&t| rank_one_limit_with(mu, t, beta, tol)).into_iter().collect()
}

pub fn small_theta_integral(mu: &AtomicMeasure, theta: f64, beta: u8) -> Result<f64> {
    small_theta_integral_with(mu, theta, beta, &ToleranceConfig::default())
}

/// `(β/2) ∫₀^{2θ/β} R(u) du` by adaptive quadrature.
pub fn small_theta_integral_with(mu: &AtomicMeasure, theta: f64, beta: u8, tol: &ToleranceConfig) -> Result<f64> {
    check_beta(beta)?;
    let b = beta as f64;
    let gamma = 2.0 * theta / b;
    let d = domain(mu);
    if !theta.is_finite() || !d.contains_gamma(gamma) {
        return Err(Error::Domain(format!(
            "2θ/β = {gamma} is not inside ({}, {})",
            d.h_min, d.h_max
        )));
    }
    if theta == 0.0 {
        return Ok(0.0);
    }
    let failed = std::cell::Cell::new(None);
    let q = adaptive_quadrature(
        |u| match r_transform_with(mu, u, tol) {
            Ok(r) => r,
            Err(e) => {
                failed.set(Some(e));
                0.0
            }
        },
        0.0,
        gamma,
        tol.quad_abs_tol,
    )?;
    if let Some(e) = failed.take() {
        return Err(e);
    }
    Ok(0.5 * b * q.value)
}

pub fn finite_n_leading_term(e: &Spectrum, theta: f64, beta: u8) -> Result<f64> {
    finite_n_leading_term_with(e, theta, beta, &ToleranceConfig::default())
}

/// `θ v_N - (β/2N) Σ ln(1 + (2θ/β)(v_N - λᵢ))`.
pub fn finite_n_leading_term_with(e: &Spectrum, theta: f64, beta: u8, tol: &ToleranceConfig) -> Result<f64> {
    let v = v_n_solve_with(e, theta, beta, tol)?;
    let b = beta as f64;
    let gamma = 2.0 * theta / b;
    Ok(theta * v - 0.5 * b * log_sum(&e.empirical(), gamma, v)?)
}

pub fn clt_prefactor(mu: &AtomicMeasure, theta: f64) -> Result<PrefactorResult> {
    clt_prefactor_with(mu, theta, &ToleranceConfig::default())
}

/// Second-order term for `β = 1`: `e^{-N I(θ)} I_N(θ, E_N) → 2|θ|/√Z`.
///
/// With `Dᵢ = 1 + 2θ (v - λᵢ)`, `Z = 4θ² Σ w/D²` and the fixed-point equation
/// gives `Σ w/D = 1`, so `Z - 4θ² = 4θ² Σ w (1/D - 1)²` is evaluated without
/// cancellation and the prefactor is `(Σ w/D²)^{-1/2}`.
pub fn clt_prefactor_with(mu: &AtomicMeasure, theta: f64, tol: &ToleranceConfig) -> Result<PrefactorResult> {
    if mu.is_dirac() {
        return Err(Error::DiracDegenerate(mu.positions()[0]));
    }
    if theta == 0.0 || !theta.is_finite() {
        return Err(Error::InvalidArgument(format!("prefactor needs a finite θ ≠ 0, got {theta}")));
    }
    let limit = rank_one_limit_with(mu, theta, 1, tol)?;
    if limit.regime != Regime::Interior {
        return Err(Error::Domain(format!("2θ = {} is not in the interior regime", 2.0 * theta)));
    }
    let gamma = 2.0 * theta;
    let v = limit.v_theta;
    let mut s = 0.0;
    let mut excess = 0.0;
    for (x, w) in mu.atoms() {
        let inv_d = 1.0 / (1.0 + gamma * (v - x));
        s += w * inv_d * inv_d;
        excess += w * (inv_d - 1.0) * (inv_d - 1.0);
    }
    let g2 = gamma * gamma;
    let det = g2 * excess;
    if !(det > 0.0) {
        return Err(Error::Precision(format!("Z - 4θ² = {det} is not positive")));
    }
    Ok(PrefactorResult {
        z_value: g2 * s,
        det_value: det,
        prefactor: 1.0 / s.sqrt(),
        leading_exponent_per_n: limit.value,
    })
}

/// `ln(1 + z)` on the principal branch, accurate for small `|z|`.
fn ln_1p_complex(z: Complex64) -> Complex64 {
    let modulus = 0.5 * (2.0 * z.re + z.norm_sqr()).ln_1p();
    Complex64::new(modulus, z.im.atan2(1.0 + z.re))
}

/// Largest `|θ|` accepted by [`complex_rank_one_limit`]: half the R guard.
pub fn complex_theta_guard(mu: &AtomicMeasure) -> f64 {
    0.5 * r_guard(mu)
}

pub fn complex_rank_one_limit(mu: &AtomicMeasure, theta: Complex64) -> Result<Complex64> {
    complex_rank_one_limit_with(mu, theta, &ToleranceConfig::default())
}

/// `θ v - ½ Σ w Log(1 + 2θ (v - λ))` with `v = R(2θ)` continued analytically;
/// β = 1. A Dirac mass returns `θ e` for every θ.
pub fn complex_rank_one_limit_with(mu: &AtomicMeasure, theta: Complex64, tol: &ToleranceConfig) -> Result<Complex64> {
    if mu.is_dirac() {
        return Ok(theta * mu.positions()[0]);
    }
    let gamma = theta * 2.0;
    let v = r_transform_complex_with(mu, gamma, tol)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in mu.atoms() {
        let t = gamma * (v - x);
        if !(1.0 + t.re > 0.0) {
            return Err(Error::Branch(format!("Re(1 + 2θ(v - λ)) = {} ≤ 0 at λ = {x}", 1.0 + t.re)));
        }
        acc += ln_1p_complex(t) * w;
    }
    Ok(theta * v - acc * 0.5)
}

pub const MAX_TAYLOR_ORDER: usize = 8;
const CONTOUR_NODES: usize = 64;

/// Radius of the Cauchy contour used by [`taylor_coefficients`]: half the θ guard.
pub fn contour_radius(mu: &AtomicMeasure) -> f64 {
    0.5 * complex_theta_guard(mu)
}

/// `a_0..a_{n_max}` of `f(θ) = Σ a_n θⁿ`, `f` the complex limit, by the
/// trapezoidal rule on `|θ| = ρ` with 64 nodes.
pub fn taylor_coefficients(mu: &AtomicMeasure, n_max: usize) -> Result<Vec<Complex64>> {
    if n_max > MAX_TAYLOR_ORDER {
        return Err(Error::InvalidArgument(format!("n_max {n_max} exceeds {MAX_TAYLOR_ORDER}")));
    }
    let rho = contour_radius(mu);
    let tol = ToleranceConfig::default();
    let values: Vec<(Complex64, Complex64)> = (0..CONTOUR_NODES)
        .map(|k| {
            let unit = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / CONTOUR_NODES as f64);
            complex_rank_one_limit_with(mu, unit * rho, &tol).map(|f| (unit, f))
        })
        .collect::<Result<_>>()?;
    Ok((0..=n_max)
        .map(|n| {
            let sum: Complex64 = values.iter().map(|(u, f)| f * u.powi(-(n as i32))).sum();
            sum / (CONTOUR_NODES as f64 * rho.powi(n as i32))
        })
        .collect())
}

/// `a_0..a_{n_max}` predicted from free cumulants: `a_n = 2^{n-1} c_{n-1} / n`, `a_0 = 0`.
pub fn taylor_from_cumulants(mu: &AtomicMeasure, n_max: usize) -> Result<Vec<f64>> {
    if n_max > MAX_TAYLOR_ORDER {
        return Err(Error::InvalidArgument(format!("n_max {n_max} exceeds {MAX_TAYLOR_ORDER}")));
    }
    let c = r_series(mu, n_max.saturating_sub(1))?;
    let mut out = vec![0.0];
    for n in 1..=n_max {
        out.push(2f64.powi(n as i32 - 1) * c[n - 1] / n as f64);
    }
    Ok(out)
}

/// `(1/M) Σ I(θᵢ)`; every θᵢ must be in the unsaturated regime.
pub fn finite_rank_limit(mu: &AtomicMeasure, thetas: &[f64], beta: u8) -> Result<f64> {
    if thetas.is_empty() {
        return Err(Error::InvalidArgument("finite-rank limit needs at least one θ".into()));
    }
    let mut total = 0.0;
    for &t in thetas {
        let r = rank_one_limit(mu, t, beta)?;
        if !r.regime.is_unsaturated() {
            return Err(Error::Domain(format!("θ = {t} is in the {} regime", r.regime.as_str())));
        }
        total += r.value;
    }
    Ok(total / thetas.len() as f64)
}
