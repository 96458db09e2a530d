use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::NormalStream;

const MAX_REDRAWS: usize = 100;

fn check_dims(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 ≤ k ≤ n, got k = {k}, n = {n}")));
    }
    Ok(())
}

/// `k` orthonormal columns of a Haar-distributed `n × n` orthogonal matrix:
/// Gram–Schmidt (two passes) on i.i.d. standard Gaussian vectors.
pub fn sample_haar_columns(n: usize, k: usize, rng: &mut NormalStream) -> Result<Vec<Vec<f64>>> {
    check_dims(n, k)?;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut attempts = 0;
        loop {
            let mut v = vec![0.0; n];
            rng.fill_normal(&mut v);
            for _pass in 0..2 {
                for c in &cols {
                    let dot: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(c).for_each(|(x, y)| *x -= dot * y);
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 * (n as f64).sqrt() {
                v.iter_mut().for_each(|x| *x /= norm);
                cols.push(v);
                break;
            }
            attempts += 1;
            if attempts >= MAX_REDRAWS {
                return Err(Error::NoConvergence("degenerate Gaussian draws".into()));
            }
        }
    }
    Ok(cols)
}

/// Unitary analogue of [`sample_haar_columns`] built from `g + i ĝ`.
pub fn sample_haar_columns_complex(n: usize, k: usize, rng: &mut NormalStream) -> Result<Vec<Vec<Complex64>>> {
    check_dims(n, k)?;
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut attempts = 0;
        loop {
            let mut v: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.normal(), rng.normal())).collect();
            for _pass in 0..2 {
                for c in &cols {
                    let dot: Complex64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    v.iter_mut().zip(c).for_each(|(x, y)| *x -= dot * y);
                }
            }
            let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-8 * (n as f64).sqrt() {
                v.iter_mut().for_each(|x| *x /= norm);
                cols.push(v);
                break;
            }
            attempts += 1;
            if attempts >= MAX_REDRAWS {
                return Err(Error::NoConvergence("degenerate Gaussian draws".into()));
            }
        }
    }
    Ok(cols)
}
