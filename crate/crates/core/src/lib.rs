//! Numerics for rank-one and finite-rank spherical integrals.
//!
//! The crate evaluates the large-`N` behaviour of
//! `I_N(θ, E) = ∫ exp(Nθ (U E U*)₁₁) dU` over Haar-distributed orthogonal
//! (`β = 1`) or unitary (`β = 2`) matrices, for spectra whose empirical
//! measure converges to a compactly supported law:
//!
//! * [`measure`]: atomic probability measures, quantile discretization,
//!   Wasserstein-1 distance.
//! * [`transform`]: Hilbert transform off the support, its inverse `K`,
//!   the R-transform and its inverse `Q`, complex continuation near zero.
//! * [`asymptote`]: the limiting free energy in all three regimes, the
//!   finite-`N` leading term, the second-order prefactor, the complex-θ
//!   limit and the finite-rank average.
//! * [`ratefn`]: large-deviation rate functions for the overlap and the
//!   Legendre/Varadhan cross-check.
//! * [`montecarlo`]: Gaussian-representation estimators (plain and
//!   exponentially tilted), Haar sampling and free-convolution experiments.
//! * [`numerics`]: the small numeric kernel everything above is built on.
//!
//! Monte-Carlo work is split into chunks with one counter-based random
//! stream per chunk, so every estimate is a deterministic function of
//! `(seed, chunks)`. With the default `parallel` feature the chunks run on
//! the rayon pool; without it they run sequentially and give bit-identical
//! results.

// `!(x > 0.0)` deliberately rejects NaN along with the failing range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptote;
pub mod error;
pub mod exec;
pub mod measure;
pub mod montecarlo;
pub mod numerics;
pub mod ratefn;
pub mod transform;

pub use error::{Error, Result};
pub use measure::{AtomicMeasure, Spectrum};
pub use numerics::ToleranceConfig;
