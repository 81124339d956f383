use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diagonal jitter added to the normal equations.
pub const RIDGE_JITTER: f64 = 1e-8;

/// Ordinary least squares `y ≈ X·a + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coeffs: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum::<f64>()
    }
}

/// In-place Cholesky factorization of a symmetric positive definite matrix
/// stored row-major; returns the lower factor.
fn cholesky(mut a: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::SingularSystem);
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for k in j + 1..n {
            a[j * n + k] = 0.0;
        }
    }
    Ok(a)
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            z[i] -= l[i * n + k] * z[k];
        }
        z[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            z[i] -= l[k * n + i] * z[k];
        }
        z[i] /= l[i * n + i];
    }
    z
}

/// Least-squares fit via the centered normal equations with a small ridge
/// jitter on the diagonal.
pub fn fit_linear(x: &Array2<f64>, y: &[f64]) -> Result<LinearModel> {
    let (n, p) = x.dim();
    if y.len() != n {
        return Err(Error::Alignment(format!("{n} feature rows vs {} targets", y.len())));
    }
    if n < p + 1 {
        return Err(Error::TooSmall(format!("{n} rows for {p} predictors plus intercept")));
    }
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let x_mean: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();
    let mut xtx = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    let mut row = vec![0.0; p];
    for i in 0..n {
        for j in 0..p {
            row[j] = x[[i, j]] - x_mean[j];
        }
        let dy = y[i] - y_mean;
        for j in 0..p {
            xty[j] += row[j] * dy;
            for k in 0..=j {
                xtx[j * p + k] += row[j] * row[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            xtx[k * p + j] = xtx[j * p + k];
        }
        xtx[j * p + j] += RIDGE_JITTER;
    }
    let coeffs = if p == 0 { Vec::new() } else { cholesky_solve(&cholesky(xtx, p)?, p, &xty) };
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::SingularSystem);
    }
    let intercept = y_mean - coeffs.iter().zip(&x_mean).map(|(a, m)| a * m).sum::<f64>();
    Ok(LinearModel { coeffs, intercept })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.7 - 2.0).collect();
        let x = Array2::from_shape_vec((10, 1), xs.clone()).unwrap();
        let y: Vec<f64> = xs.iter().map(|v| 2.0 * v + 1.0).collect();
        let m = fit_linear(&x, &y).unwrap();
        assert!((m.coeffs[0] - 2.0).abs() < 1e-9);
        assert!((m.intercept - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_target() {
        let x = Array2::from_shape_fn((8, 2), |(i, j)| ((i * 3 + j * 5) % 7) as f64);
        let m = fit_linear(&x, &[4.0; 8]).unwrap();
        assert!(m.coeffs.iter().all(|c| c.abs() < 1e-12));
        assert!((m.intercept - 4.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_rows() {
        let x = Array2::zeros((2, 2));
        assert!(matches!(fit_linear(&x, &[1.0, 2.0]), Err(Error::TooSmall(_))));
    }

    #[test]
    fn zero_columns_rejected_as_singular() {
        let x = Array2::zeros((5, 1));
        let x = x.mapv(|v: f64| v * f64::NAN);
        assert!(matches!(fit_linear(&x, &[1.0; 5]), Err(Error::SingularSystem)));
    }
}
