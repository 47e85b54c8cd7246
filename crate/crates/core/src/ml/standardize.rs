use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column z-scoring fitted on training rows (population sd).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// Zero-variance columns; these map to 0 on apply.
    pub degenerate: Vec<bool>,
}

// Columns whose spread is this small relative to their magnitude are
// treated as constant.
const DEGENERATE_REL: f64 = 1e-12;

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let n = x.len();
        if n == 0 {
            return Err(Error::input("cannot fit a standardizer on zero rows"));
        }
        let p = x[0].len();
        let mut mean = vec![0.0; p];
        for row in x {
            if row.len() != p {
                return Err(Error::input("ragged feature matrix"));
            }
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; p];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let sd: Vec<f64> = var.iter().map(|s| (s / n as f64).sqrt()).collect();
        let degenerate = sd
            .iter()
            .zip(&mean)
            .map(|(s, m)| *s <= DEGENERATE_REL * m.abs().max(1.0))
            .collect();
        Ok(Standardizer { mean, sd, degenerate })
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| {
                if self.degenerate[j] {
                    0.0
                } else {
                    (v - self.mean[j]) / self.sd[j]
                }
            })
            .collect()
    }

    pub fn apply(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.apply_row(r)).collect()
    }
}
