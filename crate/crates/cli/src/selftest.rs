//! Invariant suite behind `spherint selftest`.

use spherint::asymptote::{rank_one_limit_with, small_theta_integral_with, taylor_coefficients, taylor_from_cumulants};
use spherint::measure::{AtomicMeasure, Spectrum};
use spherint::montecarlo::{mc_log_integral, McConfig, Method};
use spherint::ratefn::{shift_identity_gap, varadhan_gap};
use spherint::transform::{domain, hilbert, k_transform_with, q_transform_with, r_transform_with};
use spherint::{Result, ToleranceConfig};

use crate::table::{Cell, Table};

struct Check {
    name: &'static str,
    tolerance: f64,
    run: fn(&ToleranceConfig) -> Result<f64>,
}

fn suite_measures() -> Vec<AtomicMeasure> {
    vec![
        AtomicMeasure::bernoulli(-1.0, 1.0, 0.5).expect("valid"),
        AtomicMeasure::trimmed_bernoulli(-1.0, 1.0, 0.3, 0.5).expect("valid"),
        AtomicMeasure::semicircle_grid(200).expect("valid"),
    ]
}

/// Fractions of the unsaturated γ range, capped at ±3 for unbounded ends.
fn gamma_grid(mu: &AtomicMeasure) -> Vec<f64> {
    let d = domain(mu);
    let (lo, hi) = (d.h_min.max(-3.0), d.h_max.min(3.0));
    [-0.9, -0.5, -0.1, 0.1, 0.5, 0.9]
        .iter()
        .map(|&f: &f64| if f < 0.0 { -f * lo } else { f * hi })
        .collect()
}

fn k_roundtrip(tol: &ToleranceConfig) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for mu in suite_measures() {
        for g in gamma_grid(&mu) {
            let k = k_transform_with(&mu, g, tol)?;
            worst = worst.max((hilbert(&mu, k)? - g).abs() / g.abs().max(1.0));
        }
    }
    Ok(worst)
}

fn rq_roundtrip(tol: &ToleranceConfig) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for mu in suite_measures() {
        for g in gamma_grid(&mu) {
            let r = r_transform_with(&mu, g, tol)?;
            worst = worst.max((q_transform_with(&mu, r, tol)? - g).abs());
        }
    }
    Ok(worst)
}

fn interior_identity(tol: &ToleranceConfig) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for mu in suite_measures() {
        for beta in [1u8, 2] {
            for g in gamma_grid(&mu) {
                let theta = 0.5 * beta as f64 * g;
                let a = small_theta_integral_with(&mu, theta, beta, tol)?;
                let b = rank_one_limit_with(&mu, theta, beta, tol)?.value;
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}

fn varadhan(_: &ToleranceConfig) -> Result<f64> {
    let mu = AtomicMeasure::trimmed_bernoulli(-1.0, 1.0, 0.5, 0.5)?;
    let mut worst: f64 = 0.0;
    for k in 0..=12 {
        worst = worst.max(varadhan_gap(&mu, -1.5 + 0.25 * k as f64)?);
    }
    Ok(worst)
}

fn shift_identity(_: &ToleranceConfig) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for mu in suite_measures() {
        let (lo, hi) = mu.support();
        for f in [0.1, 0.3, 0.5, 0.7, 0.9] {
            worst = worst.max(shift_identity_gap(&mu, lo + f * (hi - lo))?);
        }
    }
    Ok(worst)
}

fn taylor(_: &ToleranceConfig) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for mu in [AtomicMeasure::bernoulli(-1.0, 1.0, 0.3)?, AtomicMeasure::trimmed_semicircle(100, 1.5)?] {
        let a = taylor_coefficients(&mu, 4)?;
        let c = taylor_from_cumulants(&mu, 4)?;
        for n in 1..=4 {
            worst = worst.max((a[n].re - c[n]).abs().max(a[n].im.abs()));
        }
    }
    Ok(worst)
}

fn dirac_mc(tol: &ToleranceConfig) -> Result<f64> {
    let spec = Spectrum::constant(0.7, 40)?;
    let mut worst: f64 = 0.0;
    for method in [Method::Direct, Method::Tilted] {
        let cfg = McConfig { tol: *tol, ..McConfig::new(200, 1).with_method(method) };
        for theta in [-1.0, 0.5, 2.0] {
            let est = mc_log_integral(&spec, theta, &cfg)?;
            worst = worst.max((est.value - 0.7 * theta).abs()).max(est.std_error);
        }
    }
    Ok(worst)
}

const CHECKS: &[Check] = &[
    Check { name: "k_roundtrip", tolerance: 1e-9, run: k_roundtrip },
    Check { name: "r_q_roundtrip", tolerance: 1e-8, run: rq_roundtrip },
    Check { name: "interior_identity", tolerance: 1e-8, run: interior_identity },
    Check { name: "varadhan_duality", tolerance: 1e-6, run: varadhan },
    Check { name: "shift_identity", tolerance: 1e-7, run: shift_identity },
    Check { name: "taylor_identity", tolerance: 1e-6, run: taylor },
    Check { name: "dirac_mc_exact", tolerance: 1e-14, run: dirac_mc },
];

/// Returns the report table and whether every check passed.
pub fn run(tol: &ToleranceConfig) -> (Table, bool) {
    let mut t = Table::new("selftest", &["check", "status", "value", "tolerance"]);
    let mut all = true;
    for c in CHECKS {
        let (status, value) = match (c.run)(tol) {
            Ok(v) if v <= c.tolerance => ("PASS", Cell::Num(v)),
            Ok(v) => ("FAIL", Cell::Num(v)),
            Err(e) => ("FAIL", Cell::text(e.kind())),
        };
        all &= status == "PASS";
        t.push(vec![Cell::text(c.name), Cell::text(status), value, Cell::Num(c.tolerance)]);
    }
    (t, all)
}
