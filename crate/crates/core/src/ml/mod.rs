//! Regression models, evaluation metrics and cross-validation.

mod cv;
mod metrics;
mod model;
mod ridge;
mod standardize;
mod stats;
mod svr;

pub use cv::{assign_folds, grid_search, nested_cv, CvConfig, CvReport, FoldResult, GridSearchResult, ParamGrid};
pub use metrics::{pearson_r, rmse};
pub use model::{
    fit_model, layout_fingerprint, wrap_linear, HyperParams, ModelBody, ModelKind, RegressionModel, MODEL_SCHEMA,
};
pub use ridge::{ridge_fit, ridge_fit_no_intercept, LinearModel, RidgeSolver};
pub use standardize::Standardizer;
pub use stats::{ln_gamma, paired_ttest, t_cdf, TTestResult};
pub use svr::{
    rbf, smo_solve, svr_fit, svr_fit_with, KernelMatrix, SmoOptions, SmoSolution, SqDistMatrix, SvrModel, DEFAULT_TOL,
};
