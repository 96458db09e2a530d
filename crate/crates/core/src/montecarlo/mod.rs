//! Monte-Carlo estimators built on the Gaussian representation of Haar
//! measure: for `g` standard Gaussian in `ℝ^N` (or `ℂ^N` for `β = 2`),
//! `(U E U*)₁₁` has the law of `Σ λᵢ |gᵢ|² / Σ |gᵢ|²`.
//!
//! Work is split into `chunks`; chunk `c` draws from the stream
//! `(seed, c)` and chunk results are merged in index order, so every
//! estimate is a deterministic function of `(seed, chunks)`.

mod accumulate;
mod experiments;
mod haar;

pub use experiments::{
    additivity_experiment, concentration_experiment, concentration_experiment_with_seeds, free_conv_spectrum, AdditivityReport, ConcentrationReport,
    Eigensolver, FreeConvConfig, RGap, ThetaGap,
};
pub use haar::{sample_haar_columns, sample_haar_columns_complex};

use rand_distr::Gamma;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::measure::Spectrum;
use crate::numerics::{NormalStream, ToleranceConfig};
use crate::transform::{check_beta, domain, v_n_solve_with};
use crate::asymptote::finite_n_leading_term_with;
use accumulate::LogMean;

/// Largest `N |θ| (λ_max - λ_min)` the plain estimator accepts.
pub const DIRECT_EXPONENT_CAP: f64 = 600.0;
pub const MAX_FINITE_RANK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Plain average of `exp(Nθ S(g))` under the standard Gaussian.
    Direct,
    /// Exponentially tilted proposal centred on the maximizer `v_N`.
    Tilted,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Tilted => "tilted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub beta: u8,
    pub method: Method,
    pub chunks: usize,
    pub exec: Execution,
    pub tol: ToleranceConfig,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 0,
            beta: 1,
            method: Method::Tilted,
            chunks: 8,
            exec: Execution::default(),
            tol: ToleranceConfig::default(),
        }
    }
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self { samples, seed, ..Self::default() }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_beta(mut self, beta: u8) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_chunks(mut self, chunks: usize) -> Self {
        self.chunks = chunks;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        if self.samples == 0 || self.chunks == 0 {
            return Err(Error::InvalidArgument("samples and chunks must be ≥ 1".into()));
        }
        self.tol.validate()
    }

    fn chunk_sizes(&self) -> Vec<usize> {
        let chunks = self.chunks.min(self.samples);
        let base = self.samples / chunks;
        let extra = self.samples % chunks;
        (0..chunks).map(|c| base + usize::from(c < extra)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples_used: u64,
    pub method: Method,
    pub seed: u64,
    pub chunks: usize,
}

/// Draws `Σ_{i in group} |gᵢ|²` for each block of equal eigenvalues. Blocks
/// of size `k` need one `scale · χ²_{βk}` variate, drawn as a sum of squared
/// normals for small `βk` and from the Gamma law otherwise.
struct GroupSampler {
    degrees: Vec<usize>,
    scales: Vec<f64>,
    gammas: Vec<Option<Gamma<f64>>>,
}

const DIRECT_SQUARES_MAX: usize = 4;

impl GroupSampler {
    fn new(multiplicities: &[usize], scales: Vec<f64>, beta: u8) -> Self {
        let degrees: Vec<usize> = multiplicities.iter().map(|&k| k * beta as usize).collect();
        let gammas = degrees
            .iter()
            .map(|&d| (d > DIRECT_SQUARES_MAX).then(|| Gamma::new(0.5 * d as f64, 2.0).expect("positive shape")))
            .collect();
        Self { degrees, scales, gammas }
    }

    fn draw(&self, rng: &mut NormalStream, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let chi = match &self.gammas[j] {
                Some(g) => rng.sample(g),
                None => (0..self.degrees[j]).map(|_| rng.normal().powi(2)).sum(),
            };
            *o = self.scales[j] * chi;
        }
    }
}

fn run_chunks<F>(cfg: &McConfig, scale: f64, per_sample: F) -> LogMean
where
    F: Fn(&mut NormalStream, &mut Vec<f64>) -> f64 + Sync + Send,
{
    let sizes = cfg.chunk_sizes();
    let parts = map_indexed(cfg.exec, sizes.len(), |c| {
        let mut rng = NormalStream::new(cfg.seed, c as u64);
        let mut scratch = Vec::new();
        let mut acc = LogMean::new(scale);
        for _ in 0..sizes[c] {
            acc.push(per_sample(&mut rng, &mut scratch));
        }
        acc
    });
    parts.into_iter().fold(LogMean::new(scale), LogMean::merge)
}

fn check_spectrum(e: &Spectrum, theta: f64) -> Result<()> {
    if e.dimension() < 2 {
        return Err(Error::InvalidArgument("Monte Carlo needs N ≥ 2".into()));
    }
    if !theta.is_finite() {
        return Err(Error::InvalidArgument(format!("θ must be finite, got {theta}")));
    }
    Ok(())
}

fn direct_guard(e: &Spectrum, theta_abs_sum: f64) -> Result<()> {
    let exponent = e.dimension() as f64 * theta_abs_sum * (e.lambda_max() - e.lambda_min());
    if exponent > DIRECT_EXPONENT_CAP {
        return Err(Error::Overflow(format!(
            "N|θ|(λ_max - λ_min) = {exponent:.1} exceeds {DIRECT_EXPONENT_CAP}; use the tilted method"
        )));
    }
    Ok(())
}

/// Estimates `(1/N) log I_N(θ, E)`.
pub fn mc_log_integral(e: &Spectrum, theta: f64, cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    check_spectrum(e, theta)?;
    let acc = match cfg.method {
        Method::Direct => direct_accumulate(e, theta, cfg)?,
        Method::Tilted => tilted_accumulate(e, theta, cfg)?.1,
    };
    let lead = match cfg.method {
        Method::Direct => 0.0,
        Method::Tilted if theta == 0.0 => 0.0,
        Method::Tilted => finite_n_leading_term_with(e, theta, cfg.beta, &cfg.tol)?,
    };
    Ok(McEstimate {
        value: lead + acc.log_mean(),
        std_error: acc.log_std_error(),
        samples_used: acc.count(),
        method: cfg.method,
        seed: cfg.seed,
        chunks: cfg.chunks,
    })
}

fn direct_accumulate(e: &Spectrum, theta: f64, cfg: &McConfig) -> Result<LogMean> {
    direct_guard(e, theta.abs())?;
    let groups = e.groups();
    let lmin = e.lambda_min();
    let offsets: Vec<f64> = groups.iter().map(|&(x, _)| x - lmin).collect();
    let mults: Vec<usize> = groups.iter().map(|&(_, k)| k).collect();
    let sampler = GroupSampler::new(&mults, vec![1.0; groups.len()], cfg.beta);
    let n = e.dimension() as f64;
    Ok(run_chunks(cfg, n, |rng, h| {
        h.resize(groups.len(), 0.0);
        sampler.draw(rng, h);
        let total: f64 = h.iter().sum();
        let weighted: f64 = h.iter().zip(&offsets).map(|(a, b)| a * b).sum();
        theta * (lmin + weighted / total)
    }))
}

/// Proposal: `|gᵢ|² ~ χ²_β / Dᵢ` with `Dᵢ = 1 + γ(v_N - λᵢ)`, `γ = 2θ/β`.
/// With `γ_N = Σh/(βN) - 1` and `δ = Σ(λᵢ - v_N) hᵢ/(βN)` (both centred under
/// the proposal) the exact likelihood ratio gives
/// `I_N = e^{N·lead} E[exp(-Nθ γ_N δ / (1 + γ_N))]`.
fn tilted_accumulate(e: &Spectrum, theta: f64, cfg: &McConfig) -> Result<(f64, LogMean)> {
    let n = e.dimension() as f64;
    if theta == 0.0 {
        let mut acc = LogMean::new(n);
        acc.push(0.0);
        return Ok((e.empirical().mean(), acc));
    }
    let v = v_n_solve_with(e, theta, cfg.beta, &cfg.tol)?;
    let b = cfg.beta as f64;
    let gamma = 2.0 * theta / b;
    let groups = e.groups();
    let centred: Vec<f64> = groups.iter().map(|&(x, _)| x - v).collect();
    let scales: Vec<f64> = groups.iter().map(|&(x, _)| 1.0 / (1.0 + gamma * (v - x))).collect();
    let mults: Vec<usize> = groups.iter().map(|&(_, k)| k).collect();
    let sampler = GroupSampler::new(&mults, scales, cfg.beta);
    let norm = b * n;
    let acc = run_chunks(cfg, n, |rng, h| {
        h.resize(groups.len(), 0.0);
        sampler.draw(rng, h);
        let gn = h.iter().sum::<f64>() / norm - 1.0;
        let delta = h.iter().zip(&centred).map(|(a, c)| a * c).sum::<f64>() / norm;
        -theta * gn * delta / (1.0 + gn)
    });
    Ok((v, acc))
}

/// Estimates `e^{-N·lead} I_N(θ, E)` for `β = 1` with the tilted method,
/// where `lead` is the finite-`N` leading term. Tends to the second-order
/// prefactor as `N → ∞`.
pub fn mc_prefactor_ratio(e: &Spectrum, theta: f64, cfg: &McConfig) -> Result<McEstimate> {
    let cfg = McConfig { beta: 1, method: Method::Tilted, ..*cfg };
    cfg.validate()?;
    check_spectrum(e, theta)?;
    if theta == 0.0 {
        return Err(Error::InvalidArgument("prefactor ratio needs θ ≠ 0".into()));
    }
    let (_, acc) = tilted_accumulate(e, theta, &cfg)?;
    let (value, std_error) = acc.natural();
    Ok(McEstimate {
        value,
        std_error,
        samples_used: acc.count(),
        method: Method::Tilted,
        seed: cfg.seed,
        chunks: cfg.chunks,
    })
}

/// Estimates `(1/(N M)) log I_N(D, E)` for `D = diag(θ₁..θ_M)` by averaging
/// `exp(N Σ_m θ_m ⟨u_m, E u_m⟩)` over `M` orthonormalized Gaussian columns.
pub fn finite_rank_mc(e: &Spectrum, thetas: &[f64], cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    let m = thetas.len();
    if m == 0 || m > MAX_FINITE_RANK {
        return Err(Error::InvalidArgument(format!("need 1 ≤ M ≤ {MAX_FINITE_RANK}, got {m}")));
    }
    for &t in thetas {
        check_spectrum(e, t)?;
    }
    if cfg.method != Method::Direct {
        return Err(Error::InvalidArgument("finite-rank Monte Carlo supports the direct method only".into()));
    }
    let n = e.dimension();
    if m > n {
        return Err(Error::InvalidArgument(format!("rank M = {m} exceeds N = {n}")));
    }
    let emp = e.empirical();
    let d = domain(&emp);
    for &t in thetas {
        let g = 2.0 * t / cfg.beta as f64;
        if t != 0.0 && !d.contains_gamma(g) {
            return Err(Error::Domain(format!("θ = {t} is outside the empirical interior regime")));
        }
    }
    direct_guard(e, thetas.iter().map(|t| t.abs()).sum())?;
    let lmin = e.lambda_min();
    let offsets: Vec<f64> = e.eigenvalues().iter().map(|x| x - lmin).collect();
    let theta_mean = thetas.iter().sum::<f64>() / m as f64;
    let beta = cfg.beta;
    let acc = run_chunks(cfg, (n * m) as f64, |rng, _| {
        let quad: Vec<f64> = if beta == 1 {
            sample_haar_columns(n, m, rng)
                .expect("validated dimensions")
                .iter()
                .map(|u| u.iter().zip(&offsets).map(|(x, o)| x * x * o).sum())
                .collect()
        } else {
            sample_haar_columns_complex(n, m, rng)
                .expect("validated dimensions")
                .iter()
                .map(|u| u.iter().zip(&offsets).map(|(x, o)| x.norm_sqr() * o).sum())
                .collect()
        };
        lmin * theta_mean + thetas.iter().zip(&quad).map(|(t, q)| t * q).sum::<f64>() / m as f64
    });
    Ok(McEstimate {
        value: acc.log_mean(),
        std_error: acc.log_std_error(),
        samples_used: acc.count(),
        method: Method::Direct,
        seed: cfg.seed,
        chunks: cfg.chunks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptote::small_theta_integral;
    use crate::measure::AtomicMeasure;

    fn bern_spectrum(n: usize) -> Spectrum {
        AtomicMeasure::bernoulli(-1.0, 1.0, 0.5).unwrap().quantile_discretize(n).unwrap()
    }

    #[test]
    fn dirac_is_exact() {
        let e = Spectrum::constant(0.8, 50).unwrap();
        for method in [Method::Direct, Method::Tilted] {
            for beta in [1, 2] {
                let cfg = McConfig::new(500, 7).with_method(method).with_beta(beta);
                for theta in [-0.4, 0.3, 2.0] {
                    let est = mc_log_integral(&e, theta, &cfg).unwrap();
                    assert_eq!(est.value, theta * 0.8, "{method:?} β={beta} θ={theta}");
                    assert_eq!(est.std_error, 0.0);
                }
            }
        }
        let r = mc_prefactor_ratio(&e, 0.3, &McConfig::new(100, 1)).unwrap();
        assert_eq!((r.value, r.std_error), (1.0, 0.0));
        let f = finite_rank_mc(&e, &[0.1, 0.3], &McConfig::new(100, 2).with_method(Method::Direct)).unwrap();
        assert_eq!(f.value, (0.1 + 0.3) * 0.8 / 2.0);
    }

    #[test]
    fn deterministic_under_seed_and_execution() {
        let e = bern_spectrum(40);
        let cfg = McConfig::new(2000, 99).with_chunks(5);
        let a = mc_log_integral(&e, 0.2, &cfg).unwrap();
        let b = mc_log_integral(&e, 0.2, &cfg.with_exec(Execution::Sequential)).unwrap();
        assert_eq!(a, b);
        let c = mc_log_integral(&e, 0.2, &McConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn tilted_matches_small_theta_integral() {
        let e = bern_spectrum(500);
        let cfg = McConfig::new(100_000, 5);
        let est = mc_log_integral(&e, 0.2, &cfg).unwrap();
        let mu = AtomicMeasure::bernoulli(-1.0, 1.0, 0.5).unwrap();
        let oracle = small_theta_integral(&mu, 0.2, 1).unwrap();
        assert!((est.value - oracle).abs() < 0.02, "{} vs {oracle}", est.value);
    }

    #[test]
    fn direct_and_tilted_agree() {
        let e = AtomicMeasure::uniform_grid(-1.0, 1.0, 200).unwrap().quantile_discretize(200).unwrap();
        for beta in [1, 2] {
            let cfg = McConfig::new(100_000, 17).with_beta(beta);
            let d = mc_log_integral(&e, 0.1, &cfg.with_method(Method::Direct)).unwrap();
            let t = mc_log_integral(&e, 0.1, &cfg.with_method(Method::Tilted)).unwrap();
            let joint = (d.std_error.powi(2) + t.std_error.powi(2)).sqrt();
            assert!((d.value - t.value).abs() <= 3.0 * joint, "{d:?} vs {t:?}");
        }
    }

    #[test]
    fn direct_guard_refuses_large_exponents() {
        let e = bern_spectrum(1000);
        let cfg = McConfig::new(10, 0).with_method(Method::Direct);
        assert!(matches!(mc_log_integral(&e, 0.5, &cfg), Err(Error::Overflow(_))));
    }

    #[test]
    fn finite_rank_one_column_matches_rank_one() {
        let e = bern_spectrum(30);
        let cfg = McConfig::new(20_000, 3).with_method(Method::Direct);
        let a = finite_rank_mc(&e, &[0.2], &cfg).unwrap();
        let b = mc_log_integral(&e, 0.2, &cfg).unwrap();
        let joint = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.value - b.value).abs() <= 4.0 * joint, "{a:?} vs {b:?}");
        assert!(finite_rank_mc(&e, &[0.1; 9], &cfg).is_err());
        assert!(finite_rank_mc(&e, &[0.1], &cfg.with_method(Method::Tilted)).is_err());
    }

    #[test]
    fn config_validation() {
        let e = bern_spectrum(10);
        assert!(mc_log_integral(&e, 0.1, &McConfig::new(0, 0)).is_err());
        assert!(mc_log_integral(&e, 0.1, &McConfig::new(10, 0).with_beta(4)).is_err());
        assert!(mc_log_integral(&Spectrum::constant(1.0, 1).unwrap(), 0.1, &McConfig::new(10, 0)).is_err());
    }
}
