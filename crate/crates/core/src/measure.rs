//! Compactly supported probability measures as finite atomic measures.
//!
//! An [`AtomicMeasure`] carries its atoms plus a support hull
//! `[λ_min, λ_max]` that contains every atom. The hull usually coincides
//! with the outermost atoms, but it may extend beyond them: a
//! discretized semicircle keeps the hull `[-2, 2]` while its atoms sit at
//! cell midpoints. Everything downstream (Hilbert transform domain,
//! saturation thresholds, rate functions) is defined relative to the hull.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MERGE_RTOL: f64 = 1e-12;
const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    positions: Vec<f64>,
    weights: Vec<f64>,
    lower: f64,
    upper: f64,
}

fn same_position(a: f64, b: f64) -> bool {
    (a - b).abs() <= MERGE_RTOL * a.abs().max(b.abs()).max(1.0)
}

impl AtomicMeasure {
    /// Builds a normalized measure. Atoms are sorted, equal positions (within
    /// a relative 1e-12) are merged and zero-weight atoms dropped.
    pub fn from_atoms(positions: &[f64], weights: &[f64]) -> Result<Self> {
        if positions.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} positions but {} weights",
                positions.len(),
                weights.len()
            )));
        }
        if positions.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if let Some(x) = positions.iter().chain(weights).find(|x| !x.is_finite()) {
            return Err(Error::InvalidMeasure(format!("non-finite entry {x}")));
        }
        if let Some(w) = weights.iter().find(|&&w| w < 0.0) {
            return Err(Error::InvalidMeasure(format!("negative weight {w}")));
        }
        let mut pairs: Vec<(f64, f64)> = positions
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&x, &w)| (x, w))
            .collect();
        if pairs.is_empty() {
            return Err(Error::InvalidMeasure("all weights are zero".into()));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut xs: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut ws: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            match xs.last() {
                Some(&last) if same_position(last, x) => *ws.last_mut().expect("paired") += w,
                _ => {
                    xs.push(x);
                    ws.push(w);
                }
            }
        }
        let total: f64 = ws.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            for w in &mut ws {
                *w /= total;
            }
        }
        let lower = xs[0];
        let upper = *xs.last().expect("nonempty");
        Ok(Self { positions: xs, weights: ws, lower, upper })
    }

    /// Widens the support hull to `[lower, upper]`, which must contain every atom.
    pub fn with_support(mut self, lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) {
            return Err(Error::InvalidMeasure("support edges must be finite".into()));
        }
        if lower > self.positions[0] || upper < *self.positions.last().expect("nonempty") {
            return Err(Error::InvalidMeasure(format!(
                "support [{lower}, {upper}] does not contain atoms [{}, {}]",
                self.positions[0],
                self.positions.last().expect("nonempty")
            )));
        }
        self.lower = lower;
        self.upper = upper;
        Ok(self)
    }

    pub fn dirac(e: f64) -> Result<Self> {
        Self::from_atoms(&[e], &[1.0])
    }

    /// Two-point law `(1-p) δ_a + p δ_b`.
    pub fn bernoulli(a: f64, b: f64, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidMeasure(format!("p = {p} outside [0, 1]")));
        }
        Self::from_atoms(&[a, b], &[1.0 - p, p])
    }

    /// Two-point law whose support hull extends `margin` past each atom:
    /// the limit of spectra in which a vanishing fraction of eigenvalues
    /// sits at the hull edges. Its Hilbert transform stays finite at the edges.
    pub fn trimmed_bernoulli(a: f64, b: f64, p: f64, margin: f64) -> Result<Self> {
        if !(margin > 0.0) {
            return Err(Error::InvalidMeasure("margin must be > 0".into()));
        }
        let mu = Self::bernoulli(a, b, p)?;
        let (lo, hi) = (mu.lower - margin, mu.upper + margin);
        mu.with_support(lo, hi)
    }

    /// Equal-weight atoms at the midpoints of `n` cells on `[a, b]`; hull `[a, b]`.
    pub fn uniform_grid(a: f64, b: f64, n: usize) -> Result<Self> {
        if n == 0 || !(a < b) {
            return Err(Error::InvalidMeasure("uniform grid needs n >= 1 and a < b".into()));
        }
        let h = (b - a) / n as f64;
        let xs: Vec<f64> = (0..n).map(|i| a + (i as f64 + 0.5) * h).collect();
        Self::from_atoms(&xs, &vec![1.0; n])?.with_support(a, b)
    }

    /// Midpoint discretization of the unit-variance semicircle law on `n` cells.
    pub fn semicircle_grid(n: usize) -> Result<Self> {
        Self::trimmed_semicircle(n, 2.0)
    }

    /// Semicircle density restricted to `[-cut, cut]` (with `0 < cut <= 2`),
    /// renormalized and midpoint-discretized on `n` cells; hull `[-cut, cut]`.
    pub fn trimmed_semicircle(n: usize, cut: f64) -> Result<Self> {
        if n == 0 || !(cut > 0.0 && cut <= 2.0) {
            return Err(Error::InvalidMeasure("semicircle needs n >= 1 and 0 < cut <= 2".into()));
        }
        let h = 2.0 * cut / n as f64;
        let xs: Vec<f64> = (0..n).map(|i| -cut + (i as f64 + 0.5) * h).collect();
        let ws: Vec<f64> = xs.iter().map(|x| (4.0 - x * x).max(0.0).sqrt() / (2.0 * PI) * h).collect();
        Self::from_atoms(&xs, &ws)?.with_support(-cut, cut)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.positions.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn lambda_min(&self) -> f64 {
        self.lower
    }

    pub fn lambda_max(&self) -> f64 {
        self.upper
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    /// `max(|λ_min|, |λ_max|)`.
    pub fn sup_norm(&self) -> f64 {
        self.lower.abs().max(self.upper.abs())
    }

    /// Single atom, regardless of the declared hull.
    pub fn is_dirac(&self) -> bool {
        self.positions.len() == 1
    }

    /// Mass of the atom sitting exactly on the upper hull edge (0 if none).
    pub fn upper_edge_mass(&self) -> f64 {
        match (self.positions.last(), self.weights.last()) {
            (Some(&x), Some(&w)) if same_position(x, self.upper) => w,
            _ => 0.0,
        }
    }

    pub fn lower_edge_mass(&self) -> f64 {
        if same_position(self.positions[0], self.lower) {
            self.weights[0]
        } else {
            0.0
        }
    }

    pub fn mean(&self) -> f64 {
        self.atoms().map(|(x, w)| w * x).sum()
    }

    pub fn moment(&self, k: u32) -> f64 {
        self.atoms().map(|(x, w)| w * x.powi(k as i32)).sum()
    }

    pub fn central_moment(&self, k: u32) -> f64 {
        let m = self.mean();
        self.atoms().map(|(x, w)| w * (x - m).powi(k as i32)).sum()
    }

    pub fn variance(&self) -> f64 {
        self.central_moment(2)
    }

    /// Push-forward under `x ↦ x + shift`, hull included.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            positions: self.positions.iter().map(|x| x + shift).collect(),
            weights: self.weights.clone(),
            lower: self.lower + shift,
            upper: self.upper + shift,
        }
    }

    /// Push-forward under `x ↦ -x`.
    pub fn reflected(&self) -> Self {
        Self {
            positions: self.positions.iter().rev().map(|x| -x).collect(),
            weights: self.weights.iter().rev().copied().collect(),
            lower: -self.upper,
            upper: -self.lower,
        }
    }

    /// `F(x) = μ((-∞, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.positions.partition_point(|&p| p <= x);
        self.weights[..k].iter().sum::<f64>().min(1.0)
    }

    /// N-point spectrum from lower quantiles: `λ_1` is the lower hull edge and
    /// `λ_i = inf{x ≥ λ_{i-1} : μ([λ_1, x]) ≥ i/N}`.
    pub fn quantile_discretize(&self, n: usize) -> Result<Spectrum> {
        if n == 0 {
            return Err(Error::InvalidArgument("quantile_discretize needs N >= 1".into()));
        }
        let mut cumulative = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        for &w in &self.weights {
            acc += w;
            cumulative.push(acc);
        }
        let mut out = Vec::with_capacity(n);
        out.push(self.lower);
        let mut j = 0;
        for i in 2..=n {
            let target = i as f64 / n as f64 - WEIGHT_TOL;
            while j + 1 < cumulative.len() && cumulative[j] < target {
                j += 1;
            }
            out.push(self.positions[j].max(*out.last().expect("nonempty")));
        }
        Spectrum::new(out)
    }

    pub fn to_file(&self) -> MeasureFile {
        let hull = (self.lower, self.upper);
        let atom_hull = (self.positions[0], *self.positions.last().expect("nonempty"));
        MeasureFile::Atoms {
            atoms: self.atoms().map(|(x, w)| AtomRecord { x, w }).collect(),
            support: (hull != atom_hull).then_some([self.lower, self.upper]),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeasureFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("measure json: {e}")))?;
        file.build()
    }
}

/// Wasserstein-1 distance `∫ |F_μ - F_ν|`, exact for atomic measures.
///
/// Upper-bounds the bounded-Lipschitz (Dudley) distance.
pub fn w1_distance(mu: &AtomicMeasure, nu: &AtomicMeasure) -> f64 {
    let mut breaks: Vec<f64> = mu.positions.iter().chain(&nu.positions).copied().collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let (mut i, mut j) = (0, 0);
    let (mut fm, mut fn_) = (0.0, 0.0);
    let mut total = 0.0;
    for k in 0..breaks.len() {
        let x = breaks[k];
        while i < mu.len() && mu.positions[i] <= x {
            fm += mu.weights[i];
            i += 1;
        }
        while j < nu.len() && nu.positions[j] <= x {
            fn_ += nu.weights[j];
            j += 1;
        }
        if let Some(&next) = breaks.get(k + 1) {
            total += (fm - fn_).abs() * (next - x);
        }
    }
    total
}

/// An explicit eigenvalue list, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidArgument("spectrum needs at least one eigenvalue".into()));
        }
        if let Some(x) = eigenvalues.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite eigenvalue {x}")));
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self { eigenvalues })
    }

    /// `n` copies of `e`.
    pub fn constant(e: f64, n: usize) -> Result<Self> {
        Self::new(vec![e; n])
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty")
    }

    pub fn sup_norm(&self) -> f64 {
        self.lambda_min().abs().max(self.lambda_max().abs())
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Empirical measure `N⁻¹ Σ δ_{λ_i}` with hull `[λ_min, λ_max]`.
    pub fn empirical(&self) -> AtomicMeasure {
        let n = self.eigenvalues.len();
        AtomicMeasure::from_atoms(&self.eigenvalues, &vec![1.0 / n as f64; n])
            .expect("validated spectrum is a valid measure")
    }

    /// Distinct eigenvalues with multiplicities, ascending.
    pub fn groups(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &x in &self.eigenvalues {
            match out.last_mut() {
                Some((v, m)) if *v == x => *m += 1,
                _ => out.push((x, 1)),
            }
        }
        out
    }

    pub fn is_constant(&self) -> bool {
        self.lambda_min() == self.lambda_max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub x: f64,
    pub w: f64,
}

/// On-disk measure description: explicit atoms or a named builtin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureFile {
    Atoms {
        atoms: Vec<AtomRecord>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<[f64; 2]>,
    },
    Builtin {
        builtin: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
}

impl MeasureFile {
    pub fn build(&self) -> Result<AtomicMeasure> {
        match self {
            MeasureFile::Atoms { atoms, support } => {
                let xs: Vec<f64> = atoms.iter().map(|a| a.x).collect();
                let ws: Vec<f64> = atoms.iter().map(|a| a.w).collect();
                let mu = AtomicMeasure::from_atoms(&xs, &ws)?;
                match support {
                    Some([lo, hi]) => mu.with_support(*lo, *hi),
                    None => Ok(mu),
                }
            }
            MeasureFile::Builtin { builtin, params } => build_builtin(builtin, params),
        }
    }
}

fn build_builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<AtomicMeasure> {
    let get = |key: &str, default: Option<f64>| -> Result<f64> {
        params
            .get(key)
            .copied()
            .or(default)
            .ok_or_else(|| Error::Parse(format!("builtin {name:?} needs parameter {key:?}")))
    };
    let count = |key: &str, default: f64| -> Result<usize> {
        let v = get(key, Some(default))?;
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::Parse(format!("{key} must be a positive integer, got {v}")))
        }
    };
    for key in params.keys() {
        let known: &[&str] = match name {
            "dirac" => &["e"],
            "bernoulli" => &["a", "b", "p"],
            "trimmed_bernoulli" => &["a", "b", "p", "margin"],
            "uniform" => &["a", "b", "n"],
            "semicircle" => &["n"],
            "trimmed_semicircle" => &["n", "cut"],
            _ => &[],
        };
        if !known.contains(&key.as_str()) {
            return Err(Error::Parse(format!("builtin {name:?}: unknown parameter {key:?}")));
        }
    }
    match name {
        "dirac" => AtomicMeasure::dirac(get("e", Some(0.0))?),
        "bernoulli" => AtomicMeasure::bernoulli(get("a", Some(-1.0))?, get("b", Some(1.0))?, get("p", Some(0.5))?),
        "trimmed_bernoulli" => AtomicMeasure::trimmed_bernoulli(
            get("a", Some(-1.0))?,
            get("b", Some(1.0))?,
            get("p", Some(0.5))?,
            get("margin", Some(0.5))?,
        ),
        "uniform" => AtomicMeasure::uniform_grid(get("a", Some(0.0))?, get("b", Some(1.0))?, count("n", 100.0)?),
        "semicircle" => AtomicMeasure::semicircle_grid(count("n", 200.0)?),
        "trimmed_semicircle" => AtomicMeasure::trimmed_semicircle(count("n", 200.0)?, get("cut", Some(1.5))?),
        other => Err(Error::Parse(format!("unknown builtin measure {other:?}"))),
    }
}
