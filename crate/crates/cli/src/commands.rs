use spherint::asymptote::{clt_prefactor_with, finite_n_leading_term_with, rank_one_limit_grid, Regime};
use spherint::exec::Execution;
use spherint::measure::AtomicMeasure;
use spherint::montecarlo::{additivity_experiment, mc_log_integral, mc_prefactor_ratio, FreeConvConfig, McConfig};
use spherint::ratefn::{g_pieces, legendre_sup, t_rate};
use spherint::transform::{domain, hilbert, k_transform_with, q_transform_with, r_transform_with};
use spherint::Error;

use crate::args::RunSpec;
use crate::table::{Cell, Table};
use crate::CliError;

const DOMAIN: &str = "DOMAIN";
const DIRAC: &str = "DIRAC";
const NA: &str = "NA";

pub fn transform(spec: &RunSpec) -> Result<Vec<Table>, CliError> {
    let mu = spec.single_measure()?;
    let d = domain(mu);
    let mut t = Table::new("transform", &["gamma", "k", "h_at_k", "r", "q_residual"]);
    for &g in spec.gammas()? {
        if !d.closure_contains_gamma(g) {
            let mut row = vec![Cell::Num(g)];
            row.extend((0..4).map(|_| Cell::text(DOMAIN)));
            t.push(row);
            continue;
        }
        let (k, h) = if g == 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            let k = k_transform_with(mu, g, &spec.tol)?;
            // at a finite H limit K sits on the hull edge, where H is the one-sided limit
            let h = if g == d.h_max || g == d.h_min { g } else { hilbert(mu, k)? };
            (k, h)
        };
        let r = r_transform_with(mu, g, &spec.tol)?;
        let residual = if mu.is_dirac() {
            Cell::text(DIRAC)
        } else {
            match q_transform_with(mu, r, &spec.tol) {
                Ok(q) => Cell::Num((q - g).abs()),
                Err(Error::Domain(_)) => Cell::text(DOMAIN),
                Err(e) => return Err(e.into()),
            }
        };
        t.push(vec![Cell::Num(g), Cell::Num(k), Cell::Num(h), Cell::Num(r), residual]);
    }
    Ok(vec![t])
}

pub fn limit(spec: &RunSpec) -> Result<Vec<Table>, CliError> {
    let mu = spec.single_measure()?;
    let results = rank_one_limit_grid(mu, spec.thetas()?, spec.beta, &spec.tol, Execution::Parallel)?;
    let mut t = Table::new("limit", &["theta", "value", "v", "regime", "z", "prefactor"]);
    for r in results {
        // θ = 0 sits inside the unsaturated regime; the library tags it separately
        let regime = if r.regime == Regime::Zero { Regime::Interior } else { r.regime };
        let (z, pre) = if mu.is_dirac() {
            (Cell::text(DIRAC), Cell::text(DIRAC))
        } else if spec.beta != 1 || !matches!(r.regime, Regime::Interior | Regime::Zero) {
            (Cell::text(NA), Cell::text(NA))
        } else if r.regime == Regime::Zero {
            (Cell::Num(0.0), Cell::Num(1.0))
        } else {
            let p = clt_prefactor_with(mu, r.theta, &spec.tol)?;
            (Cell::Num(p.z_value), Cell::Num(p.prefactor))
        };
        t.push(vec![Cell::Num(r.theta), Cell::Num(r.value), Cell::Num(r.v_theta), Cell::text(regime.as_str()), z, pre]);
    }
    Ok(vec![t])
}

pub fn rate(spec: &RunSpec) -> Result<Vec<Table>, CliError> {
    let mu = spec.single_measure()?;
    let (lo, hi) = mu.support();
    let alphas = match &spec.alphas {
        Some(a) => a.clone(),
        None if lo == hi => vec![lo],
        None => (0..=20).map(|i| if i == 20 { hi } else { lo + (hi - lo) * i as f64 / 20.0 }).collect(),
    };
    let mut t = Table::new("rate", &["alpha", "t", "piece"]);
    for a in alphas {
        let p = t_rate(mu, a);
        t.push(vec![Cell::Num(a), Cell::Num(p.t_value), Cell::text(p.piece.as_str())]);
    }
    let mut tables = vec![t];
    if let Some(thetas) = &spec.thetas {
        let mut l = Table::new("legendre", &["theta", "legendre", "argmax", "g", "g1", "g2"]);
        for &theta in thetas {
            let sup = legendre_sup(mu, theta)?;
            let g = g_pieces(mu, theta)?;
            l.push(vec![
                Cell::Num(theta),
                Cell::Num(sup.value),
                Cell::Num(sup.argmax),
                Cell::Num(g.g),
                Cell::Num(g.g1),
                Cell::Num(g.g2),
            ]);
        }
        tables.push(l);
    }
    Ok(tables)
}

fn z_score(estimate: f64, std_error: f64, oracle: f64) -> f64 {
    let diff = estimate - oracle;
    if std_error > 0.0 {
        diff / std_error
    } else if diff.abs() <= 1e-14 * (1.0 + oracle.abs()) {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Deterministic value the estimator should match: the finite-`N` leading
/// term plus `ln(prefactor)/N` at the empirical measure. A complex rank-one
/// integral at `θ` equals a real one in dimension `2N` at `θ/2`, so the
/// `β = 2` prefactor is the `β = 1` one evaluated at `θ/β`.
fn mc_oracle(e: &spherint::Spectrum, emp: &AtomicMeasure, theta: f64, spec: &RunSpec) -> Result<f64, CliError> {
    if theta == 0.0 {
        return Ok(0.0);
    }
    let lead = finite_n_leading_term_with(e, theta, spec.beta, &spec.tol)?;
    if emp.is_dirac() {
        return Ok(lead);
    }
    let p = clt_prefactor_with(emp, theta / spec.beta as f64, &spec.tol)?;
    Ok(lead + p.prefactor.ln() / e.dimension() as f64)
}

pub fn mc(spec: &RunSpec) -> Result<Vec<Table>, CliError> {
    let mu = spec.single_measure()?;
    let n = spec.n.ok_or_else(|| CliError::Usage("mc needs --n".into()))?;
    if n < 2 {
        return Err(CliError::Usage(format!("--n must be ≥ 2, got {n}")));
    }
    let e = mu.quantile_discretize(n)?;
    let emp = e.empirical();
    let cfg = McConfig { samples: spec.samples, seed: spec.seed, beta: spec.beta, method: spec.method, chunks: spec.chunks, exec: Execution::Parallel, tol: spec.tol };
    let mut t = Table::new("mc", &["theta", "estimate", "std_error", "oracle", "z_score"]);
    for &theta in spec.thetas()? {
        let (est, oracle) = if spec.prefactor {
            (mc_prefactor_ratio(&e, theta, &cfg)?, clt_prefactor_with(mu, theta, &spec.tol)?.prefactor)
        } else {
            (mc_log_integral(&e, theta, &cfg)?, mc_oracle(&e, &emp, theta, spec)?)
        };
        t.push(vec![
            Cell::Num(theta),
            Cell::Num(est.value),
            Cell::Num(est.std_error),
            Cell::Num(oracle),
            Cell::Num(z_score(est.value, est.std_error, oracle)),
        ]);
    }
    Ok(vec![t])
}

pub fn freeconv(spec: &RunSpec) -> Result<Vec<Table>, CliError> {
    let [a, b] = spec.measures.as_slice() else {
        return Err(CliError::Usage(format!("freeconv needs exactly two --measure, got {}", spec.measures.len())));
    };
    if spec.beta != 1 {
        return Err(CliError::Usage("freeconv supports --beta 1 only".into()));
    }
    let n = spec.n.unwrap_or(400);
    let cfg = FreeConvConfig { n, reps: spec.reps, seed: spec.seed, solver: spec.solver, exec: Execution::Parallel, tol: spec.tol };
    let gammas = spec.gammas.clone().unwrap_or_default();
    let rep = additivity_experiment(a, b, spec.thetas()?, &gammas, &cfg)?;
    let mut add = Table::new("additivity", &["theta", "mean", "std_dev", "oracle", "gap", "excluded"]);
    let mut conc = Table::new("concentration", &["n", "theta", "draws", "variance", "variance_times_n"]);
    for row in &rep.thetas {
        add.push(vec![
            Cell::Num(row.theta),
            Cell::Num(row.mean),
            Cell::Num(row.std_dev),
            Cell::Num(row.oracle),
            Cell::Num(row.gap),
            Cell::Int(row.excluded as u64),
        ]);
        let var = row.std_dev * row.std_dev;
        conc.push(vec![
            Cell::Int(n as u64),
            Cell::Num(row.theta),
            Cell::Int((rep.reps - row.excluded) as u64),
            Cell::Num(var),
            Cell::Num(var * n as f64),
        ]);
    }
    let mut tables = vec![add, conc];
    if !rep.r_gaps.is_empty() {
        let mut r = Table::new("r_gap", &["gamma", "empirical", "oracle", "gap"]);
        for g in &rep.r_gaps {
            r.push(vec![Cell::Num(g.gamma), Cell::Num(g.empirical), Cell::Num(g.oracle), Cell::Num(g.gap)]);
        }
        tables.push(r);
    }
    Ok(tables)
}
