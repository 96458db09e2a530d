//! Free-convolution experiments: spectra of `A + V B Vᵀ` for Haar `V`.

use serde::{Deserialize, Serialize};

use crate::asymptote::rank_one_limit_with;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::measure::{AtomicMeasure, Spectrum};
use crate::numerics::{jacobi_eigenvalues, symmetric_eigenvalues, DenseMatrix, NormalStream, ToleranceConfig};
use crate::transform::{domain, r_transform_with};

use super::haar::sample_haar_columns;

pub const MAX_DENSE_DIM: usize = 1500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Eigensolver {
    /// Cyclic threshold Jacobi.
    #[default]
    Jacobi,
    /// Householder tridiagonalization plus implicit QL; much faster for large `n`.
    Householder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeConvConfig {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub solver: Eigensolver,
    pub exec: Execution,
    pub tol: ToleranceConfig,
}

impl FreeConvConfig {
    pub fn new(n: usize, reps: usize, seed: u64) -> Self {
        Self { n, reps, seed, solver: Eigensolver::default(), exec: Execution::default(), tol: ToleranceConfig::default() }
    }

    pub fn with_solver(mut self, solver: Eigensolver) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n > MAX_DENSE_DIM {
            return Err(Error::InvalidArgument(format!("n must be in [2, {MAX_DENSE_DIM}], got {}", self.n)));
        }
        if self.reps == 0 {
            return Err(Error::InvalidArgument("reps must be ≥ 1".into()));
        }
        self.tol.validate()
    }
}

/// Eigenvalues of `diag(A) + V diag(B) Vᵀ` with `V` Haar on `O(n)`.
pub fn free_conv_spectrum(
    a: &Spectrum,
    b: &Spectrum,
    rng: &mut NormalStream,
    solver: Eigensolver,
    tol: &ToleranceConfig,
) -> Result<Spectrum> {
    let n = a.dimension();
    if b.dimension() != n {
        return Err(Error::InvalidArgument(format!("dimension mismatch: {n} vs {}", b.dimension())));
    }
    if n > MAX_DENSE_DIM {
        return Err(Error::InvalidArgument(format!("n = {n} exceeds the dense budget {MAX_DENSE_DIM}")));
    }
    let cols = sample_haar_columns(n, n, rng)?;
    // rows of `vt` are the Haar columns, so M = vtᵀ diag(b) vt
    let mut vt = Vec::with_capacity(n * n);
    cols.iter().for_each(|c| vt.extend_from_slice(c));
    let vt = DenseMatrix::from_row_major(n, vt)?;
    let mut scaled = vt.clone();
    for (k, &bk) in b.eigenvalues().iter().enumerate() {
        for j in 0..n {
            scaled[(k, j)] *= bk;
        }
    }
    let prod = vt.transpose().matmul(&scaled);
    let mut m = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let v = 0.5 * (prod[(i, j)] + prod[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m[(i, i)] += a.eigenvalues()[i];
    }
    let values = match solver {
        Eigensolver::Jacobi => jacobi_eigenvalues(&m, tol.jacobi_off_tol)?,
        Eigensolver::Householder => symmetric_eigenvalues(&m)?,
    };
    Spectrum::new(values)
}

fn draw_spectra(mu_a: &AtomicMeasure, mu_b: &AtomicMeasure, cfg: &FreeConvConfig, seeds: Option<&[u64]>) -> Result<Vec<Spectrum>> {
    cfg.validate()?;
    let a = mu_a.quantile_discretize(cfg.n)?;
    let b = mu_b.quantile_discretize(cfg.n)?;
    map_indexed(cfg.exec, cfg.reps, |r| {
        let mut rng = match seeds {
            Some(s) => NormalStream::new(s[r], 0),
            None => NormalStream::new(cfg.seed, r as u64),
        };
        free_conv_spectrum(&a, &b, &mut rng, cfg.solver, &cfg.tol)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaGap {
    pub theta: f64,
    /// Mean over draws of the limit evaluated on each summed spectrum.
    pub mean: f64,
    pub std_dev: f64,
    /// `I_A(θ) + I_B(θ)`.
    pub oracle: f64,
    pub gap: f64,
    /// Draws whose spectrum put θ outside its interior regime.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RGap {
    pub gamma: f64,
    /// R-transform of the pooled empirical measure of all draws.
    pub empirical: f64,
    /// `R_A(γ) + R_B(γ)`.
    pub oracle: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdditivityReport {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub thetas: Vec<ThetaGap>,
    pub r_gaps: Vec<RGap>,
}

impl AdditivityReport {
    pub fn max_theta_gap(&self) -> f64 {
        self.thetas.iter().map(|t| t.gap).fold(0.0, f64::max)
    }

    pub fn max_r_gap(&self) -> f64 {
        self.r_gaps.iter().map(|t| t.gap).fold(0.0, f64::max)
    }
}

fn check_interior(mu: &AtomicMeasure, gamma: f64) -> Result<()> {
    let d = domain(mu);
    if !d.contains_gamma(gamma) && gamma != 0.0 {
        return Err(Error::Domain(format!("2θ = {gamma} is outside ({}, {})", d.h_min, d.h_max)));
    }
    Ok(())
}

/// Compares `I(θ)` on the spectra of `A + V B Vᵀ` (β = 1) with
/// `I_A(θ) + I_B(θ)`, and the R-transform of the pooled draws with `R_A + R_B`.
pub fn additivity_experiment(
    mu_a: &AtomicMeasure,
    mu_b: &AtomicMeasure,
    thetas: &[f64],
    gammas: &[f64],
    cfg: &FreeConvConfig,
) -> Result<AdditivityReport> {
    for &t in thetas {
        check_interior(mu_a, 2.0 * t)?;
        check_interior(mu_b, 2.0 * t)?;
    }
    for &g in gammas {
        check_interior(mu_a, g)?;
        check_interior(mu_b, g)?;
    }
    let spectra = draw_spectra(mu_a, mu_b, cfg, None)?;
    let empiricals: Vec<AtomicMeasure> = spectra.iter().map(Spectrum::empirical).collect();
    let mut theta_rows = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let oracle = rank_one_limit_with(mu_a, theta, 1, &cfg.tol)?.value + rank_one_limit_with(mu_b, theta, 1, &cfg.tol)?.value;
        let mut values = Vec::with_capacity(empiricals.len());
        let mut excluded = 0;
        for emp in &empiricals {
            match rank_one_limit_with(emp, theta, 1, &cfg.tol) {
                Ok(r) if r.regime.is_unsaturated() => values.push(r.value),
                _ => excluded += 1,
            }
        }
        if values.is_empty() {
            return Err(Error::Domain(format!("θ = {theta} left the interior regime on every draw")));
        }
        let (mean, std_dev) = mean_std(&values);
        theta_rows.push(ThetaGap { theta, mean, std_dev, oracle, gap: (mean - oracle).abs(), excluded });
    }
    let pooled: Vec<f64> = spectra.iter().flat_map(|s| s.eigenvalues().iter().copied()).collect();
    let pooled = Spectrum::new(pooled)?.empirical();
    let mut r_gaps = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let empirical = r_transform_with(&pooled, gamma, &cfg.tol)?;
        let oracle = r_transform_with(mu_a, gamma, &cfg.tol)? + r_transform_with(mu_b, gamma, &cfg.tol)?;
        r_gaps.push(RGap { gamma, empirical, oracle, gap: (empirical - oracle).abs() });
    }
    Ok(AdditivityReport { n: cfg.n, reps: cfg.reps, seed: cfg.seed, thetas: theta_rows, r_gaps })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub reps: usize,
    pub theta: f64,
    /// Per-draw limit evaluated on the empirical spectrum of `A + V B Vᵀ`.
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample variance across draws.
    pub variance: f64,
    pub variance_times_n: f64,
}

/// Spread across Haar draws of `I(θ)` evaluated on the spectrum of `A + V B Vᵀ`.
pub fn concentration_experiment(
    mu_a: &AtomicMeasure,
    mu_b: &AtomicMeasure,
    theta: f64,
    cfg: &FreeConvConfig,
) -> Result<ConcentrationReport> {
    concentration_impl(mu_a, mu_b, theta, cfg, None)
}

/// As [`concentration_experiment`], with one explicit seed per draw.
pub fn concentration_experiment_with_seeds(
    mu_a: &AtomicMeasure,
    mu_b: &AtomicMeasure,
    theta: f64,
    seeds: &[u64],
    cfg: &FreeConvConfig,
) -> Result<ConcentrationReport> {
    let cfg = FreeConvConfig { reps: seeds.len(), ..*cfg };
    concentration_impl(mu_a, mu_b, theta, &cfg, Some(seeds))
}

fn concentration_impl(
    mu_a: &AtomicMeasure,
    mu_b: &AtomicMeasure,
    theta: f64,
    cfg: &FreeConvConfig,
    seeds: Option<&[u64]>,
) -> Result<ConcentrationReport> {
    check_interior(mu_a, 2.0 * theta)?;
    check_interior(mu_b, 2.0 * theta)?;
    let spectra = draw_spectra(mu_a, mu_b, cfg, seeds)?;
    let values = spectra
        .iter()
        .map(|s| rank_one_limit_with(&s.empirical(), theta, 1, &cfg.tol).map(|r| r.value))
        .collect::<Result<Vec<f64>>>()?;
    let (mean, sd) = mean_std(&values);
    let variance = sd * sd;
    Ok(ConcentrationReport {
        n: cfg.n,
        reps: values.len(),
        theta,
        values,
        mean,
        variance,
        variance_times_n: variance * cfg.n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::w1_distance;

    #[test]
    fn dirac_sum_is_exact() {
        let a = Spectrum::constant(0.5, 20).unwrap();
        let b = Spectrum::constant(-2.0, 20).unwrap();
        let mut rng = NormalStream::new(1, 0);
        let s = free_conv_spectrum(&a, &b, &mut rng, Eigensolver::Jacobi, &ToleranceConfig::default()).unwrap();
        assert!(s.eigenvalues().iter().all(|x| (x + 1.5).abs() < 1e-12));
    }

    #[test]
    fn zero_b_returns_a() {
        let a = Spectrum::new((0..15).map(|i| i as f64 * 0.3 - 1.0).collect()).unwrap();
        let b = Spectrum::constant(0.0, 15).unwrap();
        let mut rng = NormalStream::new(2, 0);
        let s = free_conv_spectrum(&a, &b, &mut rng, Eigensolver::Householder, &ToleranceConfig::default()).unwrap();
        for (x, y) in s.eigenvalues().iter().zip(a.eigenvalues()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_is_preserved() {
        let mu = AtomicMeasure::bernoulli(-1.0, 1.0, 0.3).unwrap();
        let a = mu.quantile_discretize(60).unwrap();
        let b = AtomicMeasure::uniform_grid(0.0, 2.0, 60).unwrap().quantile_discretize(60).unwrap();
        let mut rng = NormalStream::new(5, 0);
        for solver in [Eigensolver::Jacobi, Eigensolver::Householder] {
            let s = free_conv_spectrum(&a, &b, &mut rng, solver, &ToleranceConfig::default()).unwrap();
            assert!((s.trace() - a.trace() - b.trace()).abs() < 1e-8 * 60.0);
        }
    }

    #[test]
    fn bernoulli_sum_is_arcsine() {
        // two free symmetric ±1 laws sum to the arcsine law on [-2, 2]
        let mu = AtomicMeasure::bernoulli(-1.0, 1.0, 0.5).unwrap();
        let a = mu.quantile_discretize(400).unwrap();
        let mut rng = NormalStream::new(8, 0);
        let s = free_conv_spectrum(&a, &a, &mut rng, Eigensolver::Householder, &ToleranceConfig::default()).unwrap();
        let cells = 4000;
        let xs: Vec<f64> = (0..cells).map(|i| -2.0 + 4.0 * (i as f64 + 0.5) / cells as f64).collect();
        let arcsine: Vec<f64> = (0..cells)
            .map(|i| {
                let cdf = |x: f64| 0.5 + (x / 2.0).asin() / std::f64::consts::PI;
                let lo = -2.0 + 4.0 * i as f64 / cells as f64;
                cdf(lo + 4.0 / cells as f64) - cdf(lo)
            })
            .collect();
        let oracle = AtomicMeasure::from_atoms(&xs, &arcsine).unwrap();
        let d = w1_distance(&s.empirical(), &oracle);
        assert!(d < 0.05, "w1 = {d}");
    }

    #[test]
    fn dirac_experiments_have_no_gap() {
        let a = AtomicMeasure::dirac(0.3).unwrap();
        let b = AtomicMeasure::dirac(-0.1).unwrap();
        let cfg = FreeConvConfig::new(12, 3, 4);
        let rep = additivity_experiment(&a, &b, &[0.1, 0.5], &[0.2], &cfg).unwrap();
        for row in &rep.thetas {
            assert!(row.gap < 1e-13, "{row:?}");
        }
        let c = concentration_experiment(&a, &b, 0.2, &cfg).unwrap();
        assert!(c.variance < 1e-28);
    }

    #[test]
    fn identical_seeds_give_zero_variance() {
        let mu = AtomicMeasure::bernoulli(-1.0, 1.0, 0.5).unwrap();
        let cfg = FreeConvConfig::new(30, 2, 0);
        let c = concentration_experiment_with_seeds(&mu, &mu, 0.1, &[9, 9], &cfg).unwrap();
        assert_eq!(c.variance, 0.0);
        let d = concentration_experiment_with_seeds(&mu, &mu, 0.1, &[9, 10], &cfg).unwrap();
        assert!(d.variance > 0.0);
    }

    #[test]
    fn deterministic_across_execution_modes() {
        let mu = AtomicMeasure::bernoulli(-1.0, 1.0, 0.5).unwrap();
        let cfg = FreeConvConfig::new(40, 4, 77);
        let a = additivity_experiment(&mu, &mu, &[0.1], &[0.3], &cfg).unwrap();
        let b = additivity_experiment(&mu, &mu, &[0.1], &[0.3], &cfg.with_exec(Execution::Sequential)).unwrap();
        assert_eq!(a, b);
    }
}
