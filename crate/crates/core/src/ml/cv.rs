//! Inner grid search and nested k-fold cross-validation.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{pearson_r, rmse};
use super::model::{fit_model, HyperParams, ModelKind};
use super::ridge::RidgeSolver;
use super::standardize::Standardizer;
use super::svr::{smo_solve, sq_dist, SmoOptions, SqDistMatrix};
use crate::error::{Error, Result};

/// Hyperparameter grids. Points are enumerated in declaration order, which
/// is also the tie-break order in [`grid_search`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamGrid {
    pub ridge_alpha: Vec<f64>,
    pub svr_c: Vec<f64>,
    /// Base RBF widths; divided by the feature count when
    /// `scale_gamma_by_features` is set.
    pub svr_gamma: Vec<f64>,
    pub svr_epsilon: Vec<f64>,
    pub scale_gamma_by_features: bool,
}

impl Default for ParamGrid {
    fn default() -> Self {
        ParamGrid {
            ridge_alpha: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            svr_c: vec![0.1, 1.0, 10.0, 100.0],
            svr_gamma: vec![0.001, 0.01, 0.1, 1.0],
            svr_epsilon: vec![0.05, 0.1, 0.2],
            scale_gamma_by_features: true,
        }
    }
}

impl ParamGrid {
    pub fn points(&self, kind: ModelKind, n_features: usize) -> Vec<HyperParams> {
        match kind {
            ModelKind::Ridge => self
                .ridge_alpha
                .iter()
                .map(|&alpha| HyperParams::Ridge { alpha })
                .collect(),
            ModelKind::Svr => {
                let scale = if self.scale_gamma_by_features {
                    n_features.max(1) as f64
                } else {
                    1.0
                };
                let mut out = Vec::new();
                for &c in &self.svr_c {
                    for &g in &self.svr_gamma {
                        for &epsilon in &self.svr_epsilon {
                            out.push(HyperParams::Svr {
                                c,
                                gamma: g / scale,
                                epsilon,
                            });
                        }
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub outer_k: usize,
    pub inner_k: usize,
    pub seed: u64,
    pub smo: SmoOptions,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            outer_k: 10,
            inner_k: 3,
            seed: 0,
            smo: SmoOptions::default(),
        }
    }
}

/// Splits row indices into `k` folds of near-equal size. Rows are ordered by
/// id and then shuffled with `seed`, so the assignment does not depend on the
/// order rows are supplied in. Each fold lists indices in shuffled order.
pub fn assign_folds<S: AsRef<str>>(ids: &[S], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = ids.len();
    if k < 2 {
        return Err(Error::input(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(Error::input(format!("{n} rows cannot fill {k} folds")));
    }
    let mut seen = HashSet::with_capacity(n);
    for id in ids {
        if !seen.insert(id.as_ref()) {
            return Err(Error::input(format!("duplicate row id `{}`", id.as_ref())));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ids[a].as_ref().cmp(ids[b].as_ref()));
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

fn subset<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i].clone()).collect()
}

fn complement(folds: &[Vec<usize>], skip: usize) -> Vec<usize> {
    folds
        .iter()
        .enumerate()
        .filter(|(f, _)| *f != skip)
        .flat_map(|(_, idx)| idx.iter().copied())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: HyperParams,
    /// Mean inner-validation RMSE per grid point, in grid order.
    pub scores: Vec<(HyperParams, f64)>,
}

/// Picks the grid point with the lowest mean inner-CV RMSE. The standardizer
/// is refit inside every inner fold.
pub fn grid_search<S: AsRef<str>>(
    x: &[Vec<f64>],
    y: &[f64],
    ids: &[S],
    grid: &[HyperParams],
    inner_k: usize,
    seed: u64,
    smo: SmoOptions,
) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::config("empty hyperparameter grid"));
    }
    for p in grid {
        p.validate()?;
    }
    if grid.len() == 1 {
        return Ok(GridSearchResult {
            best: grid[0],
            scores: vec![(grid[0], f64::NAN)],
        });
    }
    let folds = assign_folds(ids, inner_k, seed)?;
    let mut totals = vec![0.0; grid.len()];
    for f in 0..folds.len() {
        let train = complement(&folds, f);
        let val = &folds[f];
        let std = Standardizer::fit(&subset(x, &train))?;
        let xt = std.apply(&subset(x, &train));
        let xv = std.apply(&subset(x, val));
        let yt = subset(y, &train);
        let yv = subset(y, val);
        let errs = evaluate_grid(grid, &xt, &yt, &xv, &yv, smo)?;
        for (t, e) in totals.iter_mut().zip(errs) {
            *t += e;
        }
    }
    let scores: Vec<(HyperParams, f64)> = grid
        .iter()
        .zip(&totals)
        .map(|(p, t)| (*p, t / folds.len() as f64))
        .collect();
    let mut best = 0;
    for (i, (_, s)) in scores.iter().enumerate() {
        if *s < scores[best].1 {
            best = i;
        }
    }
    Ok(GridSearchResult {
        best: scores[best].0,
        scores,
    })
}

/// Validation RMSE of every grid point for one train/validation split.
/// Ridge products and RBF distance matrices are shared across grid points.
fn evaluate_grid(
    grid: &[HyperParams],
    xt: &[Vec<f64>],
    yt: &[f64],
    xv: &[Vec<f64>],
    yv: &[f64],
    smo: SmoOptions,
) -> Result<Vec<f64>> {
    let mut ridge: Option<RidgeSolver> = None;
    let mut dists: Option<(SqDistMatrix, Vec<Vec<f64>>)> = None;
    let mut kernels = HashMap::new();
    let mut out = Vec::with_capacity(grid.len());
    for p in grid {
        let pred: Vec<f64> = match *p {
            HyperParams::Ridge { alpha } => {
                if ridge.is_none() {
                    ridge = Some(RidgeSolver::new(xt, yt, true)?);
                }
                let m = ridge.as_ref().expect("initialized").solve(alpha)?;
                xv.iter().map(|r| m.predict_row(r)).collect()
            }
            HyperParams::Svr { c, gamma, epsilon } => {
                let (dtt, dvt) = dists.get_or_insert_with(|| {
                    let cross = xv.iter().map(|v| xt.iter().map(|t| sq_dist(v, t)).collect()).collect();
                    (SqDistMatrix::new(xt), cross)
                });
                let k = kernels.entry(gamma.to_bits()).or_insert_with(|| dtt.rbf_kernel(gamma));
                let sol = smo_solve(k, yt, c, epsilon, smo)?;
                dvt.iter()
                    .map(|row| {
                        sol.bias
                            + row
                                .iter()
                                .zip(&sol.dual_coef)
                                .filter(|(_, a)| **a != 0.0)
                                .map(|(d, a)| a * (-gamma * d).exp())
                                .sum::<f64>()
                    })
                    .collect()
            }
        };
        out.push(rmse(&pred, yv)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// `None` when the held-out targets or predictions have zero variance.
    pub r: Option<f64>,
    pub rmse: f64,
    pub params: HyperParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub kind: ModelKind,
    pub outer_k: usize,
    pub inner_k: usize,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    /// Mean over folds with a defined r.
    pub mean_r: Option<f64>,
    pub mean_rmse: f64,
    pub undefined_r_folds: usize,
}

impl CvReport {
    pub fn fold_rmse(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.rmse).collect()
    }

    /// CSV with header `fold,r,rmse,chosen_params`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["fold", "r", "rmse", "chosen_params"])?;
        for f in &self.folds {
            w.write_record([
                f.fold.to_string(),
                f.r.map(|r| r.to_string()).unwrap_or_default(),
                f.rmse.to_string(),
                f.params.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
    }
}

/// Nested cross-validation: each outer fold runs [`grid_search`] on its
/// training part, refits the winner on the whole training part and scores
/// the held-out part. Outer folds run in parallel; results are assembled by
/// fold index.
pub fn nested_cv<S: AsRef<str> + Sync>(
    x: &[Vec<f64>],
    y: &[f64],
    ids: &[S],
    kind: ModelKind,
    grid: &ParamGrid,
    cfg: &CvConfig,
) -> Result<CvReport> {
    if x.len() != y.len() || x.len() != ids.len() {
        return Err(Error::input("feature rows, targets and ids differ in length"));
    }
    if x.is_empty() {
        return Err(Error::input("no rows to cross-validate"));
    }
    let n_features = x[0].len();
    let points = grid.points(kind, n_features);
    let folds = assign_folds(ids, cfg.outer_k, cfg.seed)?;

    let results: Vec<Result<FoldResult>> = (0..folds.len())
        .into_par_iter()
        .map(|f| {
            let train = complement(&folds, f);
            let test = &folds[f];
            let xt = subset(x, &train);
            let yt = subset(y, &train);
            let idt: Vec<&str> = train.iter().map(|&i| ids[i].as_ref()).collect();
            let inner_seed = cfg.seed.wrapping_add(1 + f as u64);
            let gs = grid_search(&xt, &yt, &idt, &points, cfg.inner_k, inner_seed, cfg.smo)?;
            let model = fit_model(gs.best, &xt, &yt, "", cfg.smo)?;
            let xh = subset(x, test);
            let yh = subset(y, test);
            let pred = model.predict(&xh, "")?;
            let r = match pearson_r(&pred, &yh) {
                Ok(r) => Some(r),
                Err(Error::Undefined(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(FoldResult {
                fold: f,
                n_train: train.len(),
                n_test: test.len(),
                r,
                rmse: rmse(&pred, &yh)?,
                params: gs.best,
            })
        })
        .collect();
    let folds: Vec<FoldResult> = results.into_iter().collect::<Result<_>>()?;
    let defined: Vec<f64> = folds.iter().filter_map(|f| f.r).collect();
    let mean_r = if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    };
    let mean_rmse = folds.iter().map(|f| f.rmse).sum::<f64>() / folds.len() as f64;
    Ok(CvReport {
        kind,
        outer_k: cfg.outer_k,
        inner_k: cfg.inner_k,
        seed: cfg.seed,
        undefined_r_folds: folds.len() - defined.len(),
        folds,
        mean_r,
        mean_rmse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("row{i:04}")).collect()
    }

    #[test]
    fn folds_partition_rows() {
        let folds = assign_folds(&ids(103), 10, 7).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..103).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert_eq!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap(), 1);
    }

    #[test]
    fn hundred_rows_ten_folds() {
        let folds = assign_folds(&ids(100), 10, 1).unwrap();
        assert!(folds.iter().all(|f| f.len() == 10));
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(assign_folds(&["a", "b", "a"], 2, 0).is_err());
        assert!(assign_folds(&["a"], 2, 0).is_err());
    }

    #[test]
    fn single_point_grid() {
        let x: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let p = [HyperParams::Ridge { alpha: 3.0 }];
        let gs = grid_search(&x, &y, &ids(9), &p, 3, 0, SmoOptions::default()).unwrap();
        assert_eq!(gs.best, p[0]);
    }

    #[test]
    fn gamma_grid_scales_with_features() {
        let g = ParamGrid::default();
        let pts = g.points(ModelKind::Svr, 10);
        assert_eq!(pts.len(), 48);
        assert_eq!(
            pts[0],
            HyperParams::Svr {
                c: 0.1,
                gamma: 0.0001,
                epsilon: 0.05
            }
        );
        assert_eq!(g.points(ModelKind::Ridge, 10).len(), 5);
    }
}
