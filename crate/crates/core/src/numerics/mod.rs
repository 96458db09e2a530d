//! Small, deterministic numeric kernel: random streams, quadrature, root
//! finding, 1-D maximization, complex Newton continuation and a dense
//! symmetric eigensolver.

mod complex;
mod eigen;
mod optimize;
mod quadrature;
mod rng;
mod roots;

pub use complex::{complex_newton, continue_along_path};
pub use eigen::{jacobi_eigen, jacobi_eigenvalues, symmetric_eigenvalues, DenseMatrix, Eigen};
pub use optimize::{concave_maximize, grid_then_golden};
pub use quadrature::{adaptive_quadrature, Quadrature};
pub use rng::NormalStream;
pub use roots::{bracketed_root, monotone_root, Slope};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numeric tolerances shared by every solver in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    pub root_abs_tol: f64,
    pub quad_abs_tol: f64,
    pub newton_max_iter: usize,
    pub jacobi_off_tol: f64,
    pub path_segments: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            root_abs_tol: 1e-12,
            quad_abs_tol: 1e-10,
            newton_max_iter: 200,
            jacobi_off_tol: 1e-11,
            path_segments: 32,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        positive("root_abs_tol", self.root_abs_tol)?;
        positive("quad_abs_tol", self.quad_abs_tol)?;
        positive("jacobi_off_tol", self.jacobi_off_tol)?;
        if self.newton_max_iter == 0 || self.path_segments == 0 {
            return Err(Error::InvalidArgument(
                "newton_max_iter and path_segments must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Applies a single `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let float = || {
            value
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("tolerance {key}: not a number: {value:?}")))
        };
        let int = || {
            value
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("tolerance {key}: not an integer: {value:?}")))
        };
        match key {
            "root_abs_tol" => self.root_abs_tol = float()?,
            "quad_abs_tol" => self.quad_abs_tol = float()?,
            "jacobi_off_tol" => self.jacobi_off_tol = float()?,
            "newton_max_iter" => self.newton_max_iter = int()?,
            "path_segments" => self.path_segments = int()?,
            _ => return Err(Error::Parse(format!("unknown tolerance key {key:?}"))),
        }
        self.validate()
    }
}
