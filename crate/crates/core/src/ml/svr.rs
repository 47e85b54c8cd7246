//! Epsilon-support vector regression with an RBF kernel, trained by
//! sequential minimal optimization.
//!
//! The dual is written over `2n` variables: `alpha_i` (sign +1, linear term
//! `eps - y_i`) and `alpha*_i` (sign -1, linear term `eps + y_i`), subject to
//! `0 <= alpha <= C` and `sum(alpha) = sum(alpha*)`. Each step picks the
//! maximal violating pair of the KKT conditions and solves the two-variable
//! subproblem in closed form.

use serde::{Deserialize, Serialize};

use super::ridge::check_finite;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

/// Default KKT tolerance.
pub const DEFAULT_TOL: f64 = 1e-3;

pub fn rbf(u: &[f64], v: &[f64], gamma: f64) -> f64 {
    (-gamma * sq_dist(u, v)).exp()
}

pub fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Symmetric matrix of pairwise squared distances, row-major.
#[derive(Debug, Clone)]
pub struct SqDistMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SqDistMatrix {
    pub fn new(x: &[Vec<f64>]) -> Self {
        let n = x.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = sq_dist(&x[i], &x[j]);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        SqDistMatrix { n, data }
    }

    pub fn rbf_kernel(&self, gamma: f64) -> KernelMatrix {
        KernelMatrix {
            n: self.n,
            data: self.data.iter().map(|d| (-gamma * d).exp()).collect(),
        }
    }
}

/// Dense precomputed Gram matrix, row-major.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub fn rbf(x: &[Vec<f64>], gamma: f64) -> Self {
        SqDistMatrix::new(x).rbf_kernel(gamma)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoOptions {
    pub tol: f64,
    /// Iteration cap; `None` means `10 * n` passes of `n` pair updates.
    pub max_iter: Option<usize>,
}

impl Default for SmoOptions {
    fn default() -> Self {
        SmoOptions {
            tol: DEFAULT_TOL,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    /// `alpha_i - alpha*_i` per training point.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final maximal KKT violation.
    pub violation: f64,
}

/// Solves the epsilon-SVR dual for a precomputed kernel.
pub fn smo_solve(kernel: &KernelMatrix, y: &[f64], c: f64, epsilon: f64, opts: SmoOptions) -> Result<SmoSolution> {
    let n = kernel.len();
    if y.len() != n {
        return Err(Error::input("kernel and target sizes differ"));
    }
    if n == 0 {
        return Err(Error::input("no training rows"));
    }
    if !(c > 0.0) || !(epsilon >= 0.0) {
        return Err(Error::input(format!("invalid SVR parameters C={c} epsilon={epsilon}")));
    }
    let l = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let mut alpha = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| if t < n { epsilon - y[t] } else { epsilon + y[t - n] })
        .collect();
    let diag = |t: usize| kernel.row(t % n)[t % n];

    let max_iter = opts
        .max_iter
        .unwrap_or_else(|| 10usize.saturating_mul(n).saturating_mul(n).max(100_000));
    let mut iterations = 0;
    let mut converged = false;
    let mut violation = f64::INFINITY;

    while iterations < max_iter {
        // Maximal violating pair.
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..l {
            let s = sign(t);
            let v = -s * grad[t];
            let up = if s > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            let low = if s > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if up && v > gmax {
                gmax = v;
                i = t;
            }
            if low && v < gmin {
                gmin = v;
                j = t;
            }
        }
        violation = gmax - gmin;
        if i == usize::MAX || j == usize::MAX || violation < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (si, sj) = (sign(i), sign(j));
        let kij = kernel.row(i % n)[j % n];
        let qij = si * sj * kij;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if si != sj {
            let mut quad = diag(i) + diag(j) + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = diag(i) + diag(j) - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        let row_i = kernel.row(i % n);
        let row_j = kernel.row(j % n);
        for (t, g) in grad.iter_mut().enumerate() {
            let k = t % n;
            *g += sign(t) * (si * row_i[k] * di + sj * row_j[k] * dj);
        }
    }

    if !converged {
        log::warn!(
            "SMO stopped after {iterations} iterations with KKT violation {violation:.3e} (tol {})",
            opts.tol
        );
    }

    // Offset from free variables, else the midpoint of the feasible interval.
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    for t in 0..l {
        let s = sign(t);
        let yg = s * grad[t];
        if alpha[t] >= c {
            if s < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if s > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_n += 1;
            free_sum += yg;
        }
    }
    let rho = if free_n > 0 {
        free_sum / free_n as f64
    } else {
        (ub + lb) / 2.0
    };

    let dual_coef = (0..n).map(|i| alpha[i] - alpha[i + n]).collect();
    Ok(SmoSolution {
        dual_coef,
        bias: -rho,
        iterations,
        converged,
        violation,
    })
}

/// A trained RBF epsilon-SVR restricted to its support vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub epsilon: f64,
    pub converged: bool,
}

impl SvrModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.bias
            + self
                .support_vectors
                .iter()
                .zip(&self.dual_coef)
                .map(|(sv, a)| a * rbf(sv, row, self.gamma))
                .sum::<f64>()
    }

    pub(crate) fn from_solution(x: &[Vec<f64>], sol: SmoSolution, gamma: f64, c: f64, epsilon: f64) -> Self {
        let mut support_vectors = Vec::new();
        let mut dual_coef = Vec::new();
        for (row, a) in x.iter().zip(sol.dual_coef) {
            if a != 0.0 {
                support_vectors.push(row.clone());
                dual_coef.push(a);
            }
        }
        SvrModel {
            support_vectors,
            dual_coef,
            bias: sol.bias,
            gamma,
            c,
            epsilon,
            converged: sol.converged,
        }
    }
}

/// Fits an RBF epsilon-SVR, `k(u, v) = exp(-gamma * |u - v|^2)`.
pub fn svr_fit(x: &[Vec<f64>], y: &[f64], c: f64, gamma: f64, epsilon: f64) -> Result<SvrModel> {
    svr_fit_with(x, y, c, gamma, epsilon, SmoOptions::default())
}

pub fn svr_fit_with(x: &[Vec<f64>], y: &[f64], c: f64, gamma: f64, epsilon: f64, opts: SmoOptions) -> Result<SvrModel> {
    check_finite(x, y)?;
    if !(gamma > 0.0) {
        return Err(Error::input(format!("gamma must be positive, got {gamma}")));
    }
    let kernel = KernelMatrix::rbf(x, gamma);
    let sol = smo_solve(&kernel, y, c, epsilon, opts)?;
    Ok(SvrModel::from_solution(x, sol, gamma, c, epsilon))
}
