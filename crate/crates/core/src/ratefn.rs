//! Large-deviation rate functions.
//!
//! `T(α)` is the rate of the overlap `(U E U*)₁₁` near `α`; `L(x)` is the
//! rate of the weighted chi-square sum `Σ λᵢ gᵢ² / N`. Varadhan's lemma
//! ties them back to the limit: `sup_α {θα - T(α)} = I(θ)` for `β = 1`.

use serde::Serialize;

use crate::asymptote::rank_one_limit;
use crate::error::{Error, Result};
use crate::measure::AtomicMeasure;
use crate::numerics::{adaptive_quadrature, grid_then_golden, monotone_root, Slope, ToleranceConfig};
use crate::transform::{domain, q_transform, r_transform, TransformDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RatePiece {
    Interior,
    UpperTail,
    LowerTail,
    Infinite,
}

impl RatePiece {
    pub fn as_str(self) -> &'static str {
        match self {
            RatePiece::Interior => "Interior",
            RatePiece::UpperTail => "UpperTail",
            RatePiece::LowerTail => "LowerTail",
            RatePiece::Infinite => "Infinite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub alpha: f64,
    pub t_value: f64,
    pub piece: RatePiece,
}

/// `h_α(κ) = Σ w log((κ - λ)/(κ - α))` for `κ` off the support hull.
pub fn h_alpha(mu: &AtomicMeasure, alpha: f64, kappa: f64) -> Result<f64> {
    let (lo, hi) = mu.support();
    if !kappa.is_finite() || (kappa >= lo && kappa <= hi) {
        return Err(Error::Domain(format!("κ = {kappa} is not outside [{lo}, {hi}]")));
    }
    if !(alpha > lo && alpha < hi) && !(mu.is_dirac() && alpha == lo) {
        return Err(Error::Domain(format!("α = {alpha} is not inside ({lo}, {hi})")));
    }
    Ok(mu.atoms().map(|(x, w)| w * ((kappa - x) / (kappa - alpha)).ln()).sum())
}

/// `½ Σ w log((edge - λ)/(edge - α))`, the one-sided limit of `h_α` at a hull edge.
fn edge_tail(mu: &AtomicMeasure, alpha: f64, edge: f64) -> f64 {
    0.5 * mu.atoms().map(|(x, w)| w * ((edge - x) / (edge - alpha)).ln()).sum::<f64>()
}

pub fn t_rate(mu: &AtomicMeasure, alpha: f64) -> RatePoint {
    let d = domain(mu);
    t_rate_in(mu, &d, alpha)
}

fn t_rate_in(mu: &AtomicMeasure, d: &TransformDomain, alpha: f64) -> RatePoint {
    let point = |t_value, piece| RatePoint { alpha, t_value, piece };
    if alpha == d.mean {
        return point(0.0, RatePiece::Interior);
    }
    if !(alpha > d.lambda_min && alpha < d.lambda_max) || alpha.is_nan() {
        return point(f64::INFINITY, RatePiece::Infinite);
    }
    if alpha > d.alpha_max {
        return point(edge_tail(mu, alpha, d.lambda_max), RatePiece::UpperTail);
    }
    if alpha < d.alpha_min {
        return point(edge_tail(mu, alpha, d.lambda_min), RatePiece::LowerTail);
    }
    match q_transform(mu, alpha) {
        // κ₀ = K(Q(α)) = α + 1/γ, so (κ₀ - λ)/(κ₀ - α) = 1 + γ(α - λ)
        Ok(gamma) => {
            let t = 0.5 * mu.atoms().map(|(x, w)| w * (gamma * (alpha - x)).ln_1p()).sum::<f64>();
            point(t.max(0.0), RatePiece::Interior)
        }
        Err(_) => point(f64::INFINITY, RatePiece::Infinite),
    }
}

/// `Σ w λ / (1 - 2λu)` evaluated through `H`: the derivative of the
/// log-moment generating function `-½ Σ w log(1 - 2λu)`.
fn chi_mgf(mu: &AtomicMeasure, u: f64) -> (f64, f64, f64) {
    let mut log_sum = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for (x, w) in mu.atoms() {
        let a = 1.0 - 2.0 * x * u;
        log_sum += w * (-2.0 * x * u).ln_1p();
        d1 += w * x / a;
        d2 += 2.0 * w * x * x / (a * a);
    }
    (0.5 * log_sum, d1, d2)
}

/// `Σ w / (g - λ)`, infinite when an atom sits at `g`.
fn hilbert_at(mu: &AtomicMeasure, g: f64) -> f64 {
    if mu.positions().contains(&g) {
        return f64::INFINITY.copysign(g - mu.mean());
    }
    mu.atoms().map(|(x, w)| w / (g - x)).sum()
}

/// Rate function of `Σ λᵢ gᵢ² / N` for spectra confined to `[γ_min, γ_max]`:
/// `L(x) = sup_u {u x + ½ Σ w log(1 - 2λu)}`, linear beyond `x₁`, `x₂`.
pub fn j_rate(mu: &AtomicMeasure, gamma_min: f64, gamma_max: f64, x: f64) -> Result<f64> {
    let (first, last) = (mu.positions()[0], *mu.positions().last().expect("nonempty"));
    if !(gamma_min <= first && gamma_max >= last) || !gamma_min.is_finite() || !gamma_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bounds [{gamma_min}, {gamma_max}] do not contain the atoms [{first}, {last}]"
        )));
    }
    if x.is_nan() {
        return Err(Error::InvalidArgument("x is NaN".into()));
    }
    let m = mu.mean();
    if x == m {
        return Ok(0.0);
    }
    let objective = |u: f64| u * x + chi_mgf(mu, u).0;
    let u_hi = if gamma_max > 0.0 { 0.5 / gamma_max } else { f64::INFINITY };
    let u_lo = if gamma_min < 0.0 { 0.5 / gamma_min } else { f64::NEG_INFINITY };
    let tol = ToleranceConfig::default();
    let upward = x > m;
    if upward && u_hi.is_finite() {
        let h = hilbert_at(mu, gamma_max);
        let x2 = gamma_max * (gamma_max * h - 1.0);
        if x >= x2 {
            return Ok(objective(u_hi));
        }
    }
    if !upward && u_lo.is_finite() {
        let h = hilbert_at(mu, gamma_min);
        let x1 = gamma_min * (gamma_min * h - 1.0);
        if x <= x1 {
            return Ok(objective(u_lo));
        }
    }
    // stationary point of the strictly concave objective between 0 and the pole side
    let far = if upward { u_hi } else { u_lo };
    let far = if far.is_finite() {
        far
    } else {
        let mut u: f64 = if upward { 1.0 } else { -1.0 };
        loop {
            if x - chi_mgf(mu, u).1 <= 0.0 && upward || x - chi_mgf(mu, u).1 >= 0.0 && !upward {
                break u;
            }
            u *= 2.0;
            if u.abs() > 1e300 {
                return Ok(f64::INFINITY);
            }
        }
    };
    let (lo, hi) = if upward { (0.0, far) } else { (far, 0.0) };
    let u = monotone_root(
        |u| {
            let (_, d1, d2) = chi_mgf(mu, u);
            (x - d1, -d2)
        },
        lo,
        hi,
        Slope::Decreasing,
        None,
        tol.root_abs_tol * (1.0 + x.abs()),
        tol.newton_max_iter,
    )?;
    Ok(objective(u).max(0.0))
}

/// `|J_{μ^α}(0) - T(α)|`, with `μ^α` the shift of `μ` by `-α`.
pub fn shift_identity_gap(mu: &AtomicMeasure, alpha: f64) -> Result<f64> {
    let (lo, hi) = mu.support();
    let shifted = mu.shifted(-alpha);
    let j = j_rate(&shifted, lo - alpha, hi - alpha, 0.0)?;
    let t = t_rate(mu, alpha).t_value;
    if j.is_infinite() || t.is_infinite() {
        return Ok(if j == t { 0.0 } else { f64::INFINITY });
    }
    Ok((j - t).abs())
}

pub fn shift_identity_check(mu: &AtomicMeasure, alpha: f64) -> bool {
    const TOL: f64 = 1e-7;
    matches!(shift_identity_gap(mu, alpha), Ok(g) if g <= TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LegendreResult {
    pub value: f64,
    pub argmax: f64,
}

const LEGENDRE_GRID: usize = 200;
const GOLDEN_ITERS: usize = 60;

/// `sup_α {θα - T(α)}` by grid search plus golden-section refinement,
/// compared against the analytic stationary point (ties go to the latter).
pub fn legendre_sup(mu: &AtomicMeasure, theta: f64) -> Result<LegendreResult> {
    if !theta.is_finite() {
        return Err(Error::InvalidArgument(format!("θ must be finite, got {theta}")));
    }
    let d = domain(mu);
    if theta == 0.0 || mu.is_dirac() {
        return Ok(LegendreResult { value: theta * d.mean, argmax: d.mean });
    }
    let f = |a: f64| theta * a - t_rate_in(mu, &d, a).t_value;
    let width = d.lambda_max - d.lambda_min;
    let eps = 1e-9 * width;
    let (mut argmax, mut value) = grid_then_golden(f, d.lambda_min + eps, d.lambda_max - eps, LEGENDRE_GRID, GOLDEN_ITERS);
    let gamma = 2.0 * theta;
    let candidate = if gamma > d.h_max {
        d.lambda_max - 1.0 / gamma
    } else if gamma < d.h_min {
        d.lambda_min - 1.0 / gamma
    } else {
        r_transform(mu, gamma)?
    };
    let fc = f(candidate);
    if fc >= value - 1e-15 * (1.0 + value.abs()) {
        argmax = candidate;
        value = fc;
    }
    Ok(LegendreResult { value, argmax })
}

/// Suprema of `θα - T(α)` over the three pieces of `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GPieces {
    /// Over `[α_min, α_max]`: `½ ∫₀^{2θ} R` when `2θ ∈ [H_min, H_max]`.
    pub g: f64,
    /// Over the upper tail `[α_max, λ_max)`; `-∞` when `H_max = ∞`.
    pub g1: f64,
    /// Over the lower tail `(λ_min, α_min]`; `-∞` when `H_min = -∞`.
    pub g2: f64,
}

impl GPieces {
    pub fn max(&self) -> f64 {
        self.g.max(self.g1).max(self.g2)
    }
}

pub fn g_pieces(mu: &AtomicMeasure, theta: f64) -> Result<GPieces> {
    let d = domain(mu);
    let gamma = 2.0 * theta;
    let tol = ToleranceConfig::default();
    let (lo, hi) = (d.lambda_min, d.lambda_max);
    // value of θα - T(α) at the finite junctions α_max, α_min
    let at_upper = || theta * d.alpha_max - 0.5 * mu.atoms().map(|(x, w)| w * (d.h_max * (hi - x)).ln()).sum::<f64>();
    let at_lower = || theta * d.alpha_min - 0.5 * mu.atoms().map(|(x, w)| w * (d.h_min * (lo - x)).ln()).sum::<f64>();
    let g = if gamma > d.h_max {
        at_upper()
    } else if gamma < d.h_min {
        at_lower()
    } else if theta == 0.0 {
        0.0
    } else {
        let failed = std::cell::Cell::new(None);
        let q = adaptive_quadrature(
            |u| {
                r_transform(mu, u).unwrap_or_else(|e| {
                    failed.set(Some(e));
                    0.0
                })
            },
            0.0,
            gamma,
            tol.quad_abs_tol,
        )?;
        if let Some(e) = failed.take() {
            return Err(e);
        }
        0.5 * q.value
    };
    let g1 = if d.h_max.is_infinite() {
        f64::NEG_INFINITY
    } else if gamma >= d.h_max {
        theta * (hi - 1.0 / gamma) - 0.5 * mu.atoms().map(|(x, w)| w * (gamma * (hi - x)).ln()).sum::<f64>()
    } else {
        at_upper()
    };
    let g2 = if d.h_min.is_infinite() {
        f64::NEG_INFINITY
    } else if gamma <= d.h_min {
        theta * (lo - 1.0 / gamma) - 0.5 * mu.atoms().map(|(x, w)| w * (gamma * (lo - x)).ln()).sum::<f64>()
    } else {
        at_lower()
    };
    Ok(GPieces { g, g1, g2 })
}

/// `|legendre_sup - I(θ)|` for `β = 1`.
pub fn varadhan_gap(mu: &AtomicMeasure, theta: f64) -> Result<f64> {
    Ok((legendre_sup(mu, theta)?.value - rank_one_limit(mu, theta, 1)?.value).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pm1() -> AtomicMeasure {
        AtomicMeasure::bernoulli(-1.0, 1.0, 0.5).unwrap()
    }

    fn trimmed() -> AtomicMeasure {
        AtomicMeasure::trimmed_bernoulli(-1.0, 1.0, 0.5, 0.5).unwrap()
    }

    #[test]
    fn h_alpha_examples() {
        let d = AtomicMeasure::dirac(0.0).unwrap().with_support(-1.0, 1.0).unwrap();
        assert_abs_diff_eq!(h_alpha(&d, 0.3, 2.0).unwrap(), (2.0f64 / 1.7).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(h_alpha(&pm1(), 0.0, 2.0).unwrap(), 0.5 * 3f64.ln() - 2f64.ln(), epsilon = 1e-15);
        let mu = AtomicMeasure::from_atoms(&[-1.0, 0.5, 1.0], &[0.2, 0.3, 0.5]).unwrap();
        let r = mu.reflected();
        assert_abs_diff_eq!(h_alpha(&mu, 0.2, 3.0).unwrap(), h_alpha(&r, -0.2, -3.0).unwrap(), epsilon = 1e-15);
        assert!(h_alpha(&pm1(), 0.0, 0.5).is_err());
        assert!(h_alpha(&pm1(), 0.3, 1e9).unwrap().abs() < 1e-8);
    }

    #[test]
    fn t_examples() {
        for mu in [pm1(), trimmed(), AtomicMeasure::uniform_grid(0.0, 2.0, 13).unwrap()] {
            let p = t_rate(&mu, mu.mean());
            assert_eq!((p.t_value, p.piece), (0.0, RatePiece::Interior));
            let q = t_rate(&mu, mu.lambda_max() + 1.0);
            assert_eq!((q.t_value, q.piece), (f64::INFINITY, RatePiece::Infinite));
        }
        // Q(0.5) = 2/3 from the quadratic oracle, then T = ¼ log(4/3)
        assert_abs_diff_eq!(t_rate(&pm1(), 0.5).t_value, 0.25 * (4.0f64 / 3.0).ln(), epsilon = 1e-12);
        let tail = t_rate(&trimmed(), 1.2);
        assert_eq!(tail.piece, RatePiece::UpperTail);
        assert_abs_diff_eq!(tail.t_value, 0.25 * ((0.5f64 / 0.3).ln() + (2.5f64 / 0.3).ln()), epsilon = 1e-14);
    }

    #[test]
    fn t_pieces_join_continuously() {
        let t = trimmed();
        let d = domain(&t);
        let a = t_rate(&t, d.alpha_max - 1e-10).t_value;
        let b = t_rate(&t, d.alpha_max + 1e-10).t_value;
        assert!((a - b).abs() < 1e-8);
        let a = t_rate(&t, d.alpha_min - 1e-10).t_value;
        let b = t_rate(&t, d.alpha_min + 1e-10).t_value;
        assert!((a - b).abs() < 1e-8);
    }

    /// `T'(α)`: `Q(α)/2` on the interior piece, `±1/(2 dist)` on the tails.
    fn t_slope(mu: &AtomicMeasure, alpha: f64) -> f64 {
        let (lo, hi) = mu.support();
        match t_rate(mu, alpha).piece {
            RatePiece::Interior => 0.5 * q_transform(mu, alpha).unwrap(),
            RatePiece::UpperTail => 0.5 / (hi - alpha),
            RatePiece::LowerTail => -0.5 / (alpha - lo),
            RatePiece::Infinite => f64::INFINITY,
        }
    }

    #[test]
    fn t_nonnegative_and_zero_only_at_mean() {
        let mu = AtomicMeasure::from_atoms(&[-1.0, 0.25, 2.0], &[0.3, 0.4, 0.3]).unwrap().with_support(-1.5, 2.5).unwrap();
        let m = mu.mean();
        let h = 1e-3;
        let mut prev: Option<(f64, f64)> = None;
        for k in 1..4000 {
            let alpha = -1.5 + k as f64 * h;
            let t = t_rate(&mu, alpha).t_value;
            assert!(t >= 0.0);
            if (alpha - m).abs() > 1e-3 {
                assert!(t > 0.0, "T({alpha}) = 0");
            }
            if let Some((pa, pt)) = prev {
                let bound = 10.0 * h * t_slope(&mu, pa).abs().max(t_slope(&mu, alpha).abs());
                assert!((t - pt).abs() <= bound, "jump at {alpha}");
            }
            prev = Some((alpha, t));
        }
    }

    #[test]
    fn j_examples() {
        let d = AtomicMeasure::dirac(1.0).unwrap();
        for x in [0.2, 0.9, 1.5, 4.0] {
            let want = 0.5 * (x - 1.0 - f64::ln(x));
            assert_abs_diff_eq!(j_rate(&d, 1.0, 1.0, x).unwrap(), want, epsilon = 1e-12);
        }
        assert_eq!(j_rate(&d, 1.0, 1.0, -0.5).unwrap(), f64::INFINITY);
        assert_eq!(j_rate(&pm1(), -1.0, 1.0, 0.0).unwrap(), 0.0);
        assert!(j_rate(&pm1(), -0.5, 1.0, 0.2).is_err());
    }

    #[test]
    fn j_linear_beyond_x2() {
        let mu = AtomicMeasure::from_atoms(&[-0.5, 0.5], &[0.5, 0.5]).unwrap();
        let (gmin, gmax) = (-1.0, 1.0);
        let h = 0.5 / (gmax - 0.5) + 0.5 / (gmax + 0.5);
        let x2 = gmax * (gmax * h - 1.0);
        let base = j_rate(&mu, gmin, gmax, x2).unwrap();
        for dx in [0.1, 0.5, 2.0] {
            let v = j_rate(&mu, gmin, gmax, x2 + dx).unwrap();
            assert_abs_diff_eq!(v, base + dx / (2.0 * gmax), epsilon = 1e-12);
        }
        let inside = j_rate(&mu, gmin, gmax, x2 - 1e-7).unwrap();
        assert!((inside - base).abs() < 1e-7);
    }

    #[test]
    fn chi_square_tail_matches_rate() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        // slope of -log P(χ²_N / N > x) between N = 400 and 800 cancels the polynomial prefactor
        let x = 1.5;
        let log_tail = |n: f64| ChiSquared::new(n).unwrap().sf(n * x).ln();
        let slope = (log_tail(400.0) - log_tail(800.0)) / 400.0;
        let j = j_rate(&AtomicMeasure::dirac(1.0).unwrap(), 1.0, 1.0, x).unwrap();
        assert_abs_diff_eq!(j, 0.5 * (0.5 - 1.5f64.ln()), epsilon = 1e-12);
        assert!((slope - j).abs() <= 0.15 * j, "{slope} vs {j}");
    }

    #[test]
    fn concave_maximize_on_chi_square_dual() {
        use crate::numerics::concave_maximize;
        let x = 1.5;
        let (u, v) = concave_maximize(|u| u * x + 0.5 * (1.0 - 2.0 * u).ln(), -5.0, 0.5 - 1e-12, 200);
        assert!((u - 0.5 * (1.0 - 1.0 / x)).abs() < 1e-7);
        assert_abs_diff_eq!(v, 0.5 * (x - 1.0 - x.ln()), epsilon = 1e-12);
    }

    #[test]
    fn shift_identity_examples() {
        assert!(shift_identity_check(&pm1(), 0.0));
        assert!(shift_identity_check(&pm1(), 0.3));
        assert!(shift_identity_check(&trimmed(), 1.3));
        let gap = shift_identity_gap(&pm1(), 1.0 - 1e-9).unwrap();
        assert!(gap <= 1e-7, "{gap}");
    }

    #[test]
    fn legendre_examples() {
        let l = legendre_sup(&pm1(), 0.0).unwrap();
        assert_eq!((l.value, l.argmax), (0.0, 0.0));
        let l = legendre_sup(&pm1(), 0.25).unwrap();
        assert_abs_diff_eq!(l.value, rank_one_limit(&pm1(), 0.25, 1).unwrap().value, epsilon = 1e-6);
        assert_abs_diff_eq!(l.argmax, r_transform(&pm1(), 0.5).unwrap(), epsilon = 1e-6);
        let l = legendre_sup(&trimmed(), 2.0).unwrap();
        assert_abs_diff_eq!(l.argmax, 1.5 - 0.25, epsilon = 1e-6);
    }

    #[test]
    fn g_piece_examples() {
        let d = AtomicMeasure::dirac(0.7).unwrap();
        let g = g_pieces(&d, 0.4).unwrap();
        assert_abs_diff_eq!(g.g, 0.28, epsilon = 1e-12);
        assert_eq!((g.g1, g.g2), (f64::NEG_INFINITY, f64::NEG_INFINITY));
        let t = g_pieces(&trimmed(), 1.0).unwrap();
        assert!(t.g1 > t.g && t.g1 > t.g2);
        let s = g_pieces(&trimmed(), 0.1).unwrap();
        assert!(s.g >= s.g1 && s.g >= s.g2);
        let n = g_pieces(&trimmed(), -1.0).unwrap();
        assert!(n.g2 > n.g && n.g2 > n.g1);
    }

    proptest! {
        #[test]
        fn varadhan_on_random_measures(
            atoms in prop::collection::vec((-2.0f64..2.0, 0.05f64..1.0), 2..5),
            margin in 0.1f64..1.0,
            theta in -3.0f64..3.0,
        ) {
            let (xs, ws): (Vec<f64>, Vec<f64>) = atoms.into_iter().unzip();
            let mu = AtomicMeasure::from_atoms(&xs, &ws).unwrap();
            prop_assume!(mu.len() >= 2);
            let (lo, hi) = mu.support();
            let mu = mu.with_support(lo - margin, hi + margin).unwrap();
            let l = legendre_sup(&mu, theta).unwrap();
            let i = rank_one_limit(&mu, theta, 1).unwrap().value;
            prop_assert!((l.value - i).abs() <= 1e-6, "{} vs {}", l.value, i);
            let g = g_pieces(&mu, theta).unwrap();
            prop_assert!((g.max() - l.value).abs() <= 1e-6);
        }
    }
}
