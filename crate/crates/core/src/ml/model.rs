use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ridge::{ridge_fit, LinearModel};
use super::standardize::Standardizer;
use super::svr::{svr_fit_with, SmoOptions, SvrModel};
use crate::error::{Error, Result};

pub const MODEL_SCHEMA: &str = "afs-regression-model/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ridge,
    Svr,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Ridge => "ridge",
            ModelKind::Svr => "svr",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ridge" | "rr" => Ok(ModelKind::Ridge),
            "svr" => Ok(ModelKind::Svr),
            other => Err(Error::input(format!("unknown model kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HyperParams {
    Ridge { alpha: f64 },
    Svr { c: f64, gamma: f64, epsilon: f64 },
}

impl HyperParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            HyperParams::Ridge { .. } => ModelKind::Ridge,
            HyperParams::Svr { .. } => ModelKind::Svr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            HyperParams::Ridge { alpha } => alpha > 0.0 && alpha.is_finite(),
            HyperParams::Svr { c, gamma, epsilon } => {
                c > 0.0 && gamma > 0.0 && epsilon >= 0.0 && c.is_finite() && gamma.is_finite() && epsilon.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!("invalid hyperparameters {self}")))
        }
    }
}

impl fmt::Display for HyperParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperParams::Ridge { alpha } => write!(f, "alpha={alpha}"),
            HyperParams::Svr { c, gamma, epsilon } => {
                write!(f, "C={c};gamma={gamma};epsilon={epsilon}")
            }
        }
    }
}

/// Short hash identifying an ordered list of feature column names.
pub fn layout_fingerprint<S: AsRef<str>>(columns: &[S]) -> String {
    let mut h = Sha256::new();
    for (i, c) in columns.iter().enumerate() {
        if i > 0 {
            h.update(b"\n");
        }
        h.update(c.as_ref().as_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelBody {
    Ridge(LinearModel),
    Svr(SvrModel),
}

/// A fitted regressor together with the preprocessing it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub schema: String,
    pub params: HyperParams,
    pub standardizer: Option<Standardizer>,
    pub fingerprint: String,
    /// Feature column names behind `fingerprint`, when known.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<String>,
    pub body: ModelBody,
}

impl RegressionModel {
    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }

    /// Predicts raw (unstandardized) rows; the layout fingerprint of `x`
    /// must match the one the model was trained with.
    pub fn predict(&self, x: &[Vec<f64>], fingerprint: &str) -> Result<Vec<f64>> {
        if fingerprint != self.fingerprint {
            return Err(Error::LayoutMismatch {
                expected: self.fingerprint.clone(),
                actual: fingerprint.to_string(),
            });
        }
        Ok(x.iter().map(|row| self.predict_row(row)).collect())
    }

    /// Input width, when it can be recovered from the fitted state.
    pub fn n_features(&self) -> Option<usize> {
        if let Some(s) = &self.standardizer {
            return Some(s.n_features());
        }
        match &self.body {
            ModelBody::Ridge(m) => Some(m.weights.len()),
            ModelBody::Svr(m) => m.support_vectors.first().map(Vec::len),
        }
    }

    pub(crate) fn predict_row(&self, row: &[f64]) -> f64 {
        let z;
        let row = match &self.standardizer {
            Some(s) => {
                z = s.apply_row(row);
                &z[..]
            }
            None => row,
        };
        match &self.body {
            ModelBody::Ridge(m) => m.predict_row(row),
            ModelBody::Svr(m) => m.predict_row(row),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: RegressionModel = serde_json::from_str(text)?;
        if m.schema != MODEL_SCHEMA {
            return Err(Error::input(format!(
                "unsupported model schema `{}` (expected `{MODEL_SCHEMA}`)",
                m.schema
            )));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Standardizes `x` on its own statistics and fits the model `params`
/// describes.
pub fn fit_model(
    params: HyperParams,
    x: &[Vec<f64>],
    y: &[f64],
    fingerprint: &str,
    smo: SmoOptions,
) -> Result<RegressionModel> {
    params.validate()?;
    let standardizer = Standardizer::fit(x)?;
    let z = standardizer.apply(x);
    let body = match params {
        HyperParams::Ridge { alpha } => ModelBody::Ridge(ridge_fit(&z, y, alpha)?),
        HyperParams::Svr { c, gamma, epsilon } => ModelBody::Svr(svr_fit_with(&z, y, c, gamma, epsilon, smo)?),
    };
    Ok(RegressionModel {
        schema: MODEL_SCHEMA.to_string(),
        params,
        standardizer: Some(standardizer),
        fingerprint: fingerprint.to_string(),
        columns: Vec::new(),
        body,
    })
}

/// Wraps an already-fitted linear model without preprocessing.
pub fn wrap_linear(model: LinearModel, alpha: f64, fingerprint: &str) -> RegressionModel {
    RegressionModel {
        schema: MODEL_SCHEMA.to_string(),
        params: HyperParams::Ridge { alpha },
        standardizer: None,
        fingerprint: fingerprint.to_string(),
        columns: Vec::new(),
        body: ModelBody::Ridge(model),
    }
}
