use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Huber transition point on standardized residuals.
pub const HUBER_DELTA: f64 = 1.0;

/// Training losses. `Mse` is the RMSE option: it has the same minimizer and
/// a smoother gradient; reported metrics always take the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Mae,
    Mse,
    Huber,
    LogCosh,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [LossKind::Mae, LossKind::Mse, LossKind::Huber, LossKind::LogCosh];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mae => "mae",
            LossKind::Mse => "mse",
            LossKind::Huber => "huber",
            LossKind::LogCosh => "logcosh",
        }
    }

    /// Loss and its derivative for one residual `r = pred - target`.
    #[inline]
    pub fn pointwise(self, r: f64) -> (f64, f64) {
        match self {
            LossKind::Mae => (r.abs(), r.signum() * (r != 0.0) as u8 as f64),
            LossKind::Mse => (r * r, 2.0 * r),
            LossKind::Huber => {
                if r.abs() <= HUBER_DELTA {
                    (0.5 * r * r, r)
                } else {
                    (HUBER_DELTA * (r.abs() - 0.5 * HUBER_DELTA), HUBER_DELTA * r.signum())
                }
            }
            LossKind::LogCosh => {
                // log(cosh r) = |r| + log1p(exp(-2|r|)) - ln 2, stable for large |r|
                let a = r.abs();
                (a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2, r.tanh())
            }
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mae" => Ok(LossKind::Mae),
            "mse" | "rmse" => Ok(LossKind::Mse),
            "huber" => Ok(LossKind::Huber),
            "logcosh" | "log-cosh" | "log_cosh" => Ok(LossKind::LogCosh),
            _ => Err(Error::Parse(format!("unknown loss `{s}`"))),
        }
    }
}

/// Mean loss over the batch and its gradient with respect to each
/// prediction.
pub fn loss_and_grad(kind: LossKind, pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() {
        return Err(Error::Alignment(format!("{} predictions vs {} targets", pred.len(), target.len())));
    }
    if pred.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let n = pred.len() as f64;
    let mut total = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let (l, g) = kind.pointwise(p - t);
            total += l;
            g / n
        })
        .collect();
    Ok((total / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_residual() {
        for k in LossKind::ALL {
            let (l, g) = loss_and_grad(k, &[1.5, -2.0], &[1.5, -2.0]).unwrap();
            assert_eq!(l, 0.0, "{k}");
            assert!(g.iter().all(|v| *v == 0.0), "{k}");
        }
    }

    #[test]
    fn log_cosh_small_residual() {
        let (l, g) = loss_and_grad(LossKind::LogCosh, &[0.1], &[0.0]).unwrap();
        assert!((l - 0.1f64.cosh().ln()).abs() < 1e-15);
        assert!((l - 0.0049917).abs() < 1e-7);
        assert!((g[0] - 0.1f64.tanh()).abs() < 1e-15);
        assert!((g[0] - 0.09967).abs() < 1e-5);
        // large residuals stay finite
        let (l, g) = loss_and_grad(LossKind::LogCosh, &[1000.0], &[0.0]).unwrap();
        assert!((l - (1000.0 - std::f64::consts::LN_2)).abs() < 1e-9);
        assert_eq!(g[0], 1.0);
    }

    #[test]
    fn huber_linear_branch() {
        let (l, g) = loss_and_grad(LossKind::Huber, &[2.0], &[0.0]).unwrap();
        assert_eq!((l, g[0]), (1.5, 1.0));
        let (l, g) = loss_and_grad(LossKind::Huber, &[0.5], &[0.0]).unwrap();
        assert_eq!((l, g[0]), (0.125, 0.5));
    }

    #[test]
    fn mean_reduction() {
        let (l, g) = loss_and_grad(LossKind::Mse, &[1.0, 3.0], &[0.0, 0.0]).unwrap();
        assert_eq!(l, 5.0);
        assert_eq!(g, vec![1.0, 3.0]);
        let (l, g) = loss_and_grad(LossKind::Mae, &[1.0, -3.0], &[0.0, 0.0]).unwrap();
        assert_eq!(l, 2.0);
        assert_eq!(g, vec![0.5, -0.5]);
        assert!(loss_and_grad(LossKind::Mae, &[1.0], &[]).is_err());
    }
}
