//! Closed-form ridge regression.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>()
    }
}

pub(crate) fn check_finite(x: &[Vec<f64>], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::input(format!(
            "{} feature rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::input("no training rows"));
    }
    let p = x[0].len();
    for row in x {
        if row.len() != p {
            return Err(Error::input("ragged feature matrix"));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("non-finite feature value"));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("non-finite target value"));
    }
    Ok(())
}

enum Form {
    /// p x p normal matrix `XᵀX` and `Xᵀy`.
    Primal { gram: DMatrix<f64>, xty: DVector<f64> },
    /// n x n kernel `XXᵀ`, used when there are more features than rows.
    Dual {
        x: DMatrix<f64>,
        kernel: DMatrix<f64>,
        y: DVector<f64>,
    },
}

/// Ridge system with the data-dependent products precomputed, so that many
/// penalties can be solved for the same training rows.
pub struct RidgeSolver {
    form: Form,
    x_mean: Vec<f64>,
    y_mean: f64,
}

impl RidgeSolver {
    /// With `fit_intercept`, columns and targets are centered and the
    /// intercept is left unpenalized.
    pub fn new(x: &[Vec<f64>], y: &[f64], fit_intercept: bool) -> Result<Self> {
        check_finite(x, y)?;
        let n = x.len();
        let p = x[0].len();
        let (x_mean, y_mean) = if fit_intercept {
            let mut m = vec![0.0; p];
            for row in x {
                for (a, v) in m.iter_mut().zip(row) {
                    *a += v;
                }
            }
            m.iter_mut().for_each(|a| *a /= n as f64);
            (m, y.iter().sum::<f64>() / n as f64)
        } else {
            (vec![0.0; p], 0.0)
        };
        let xc = DMatrix::from_fn(n, p, |i, j| x[i][j] - x_mean[j]);
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
        let form = if p <= n {
            let xt = xc.transpose();
            Form::Primal {
                gram: &xt * &xc,
                xty: &xt * &yc,
            }
        } else {
            Form::Dual {
                kernel: &xc * xc.transpose(),
                x: xc,
                y: yc,
            }
        };
        Ok(RidgeSolver { form, x_mean, y_mean })
    }

    pub fn solve(&self, alpha: f64) -> Result<LinearModel> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::input(format!("ridge alpha must be positive, got {alpha}")));
        }
        let weights = match &self.form {
            Form::Primal { gram, xty } => {
                let a = gram + DMatrix::identity(gram.nrows(), gram.ncols()) * alpha;
                spd_solve(a, xty)?
            }
            Form::Dual { x, kernel, y } => {
                let a = kernel + DMatrix::identity(kernel.nrows(), kernel.ncols()) * alpha;
                let c = spd_solve(a, y)?;
                x.transpose() * c
            }
        };
        let weights: Vec<f64> = weights.iter().copied().collect();
        let intercept = self.y_mean - weights.iter().zip(&self.x_mean).map(|(w, m)| w * m).sum::<f64>();
        Ok(LinearModel { weights, intercept })
    }
}

fn spd_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    a.lu()
        .solve(b)
        .ok_or_else(|| Error::Internal("singular ridge system".into()))
}

/// Fits ridge regression with an unpenalized intercept.
pub fn ridge_fit(x: &[Vec<f64>], y: &[f64], alpha: f64) -> Result<LinearModel> {
    RidgeSolver::new(x, y, true)?.solve(alpha)
}

/// Ridge without centering: solves `(XᵀX + αI)w = Xᵀy` with a zero intercept.
pub fn ridge_fit_no_intercept(x: &[Vec<f64>], y: &[f64], alpha: f64) -> Result<LinearModel> {
    RidgeSolver::new(x, y, false)?.solve(alpha)
}
