//! Oracle comparisons shared by the unit-style test targets and the
//! acceptance harness. Each returns the worst observed error so callers can
//! print it as well as assert on it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use afs_core::corpus::parse_conllu;
use afs_core::features::{self, CategoryLexicon, LexicalizedSide, OverlapNorm, RougeScore};
use afs_core::ml::{self, svr_fit, svr_fit_with};

use super::*;

#[derive(Debug, Clone, Default)]
pub struct Worst {
    pub err: f64,
    pub what: String,
}

impl Worst {
    pub fn update(&mut self, err: f64, what: impl FnOnce() -> String) {
        if err > self.err || err.is_nan() {
            self.err = if err.is_nan() { f64::INFINITY } else { err };
            self.what = what();
        }
    }
}

fn triple_err(s: RougeScore, o: (f64, f64, f64)) -> f64 {
    (s.precision - o.0)
        .abs()
        .max((s.recall - o.1).abs())
        .max((s.f - o.2).abs())
}

pub fn oracle_lexicon() -> LexSpec {
    LexSpec {
        categories: vec![
            (1, "affect".into(), None),
            (2, "posemo".into(), Some(1)),
            (3, "social".into(), None),
            (4, "family".into(), Some(3)),
            (5, "kin".into(), Some(4)),
        ],
        entries: vec![
            ("w0".into(), vec![2]),
            ("w1*".into(), vec![3]),
            ("w2".into(), vec![1, 5]),
            ("w3*".into(), vec![2]),
            ("w3".into(), vec![4]),
            ("w".into(), vec![3]),
        ],
    }
}

/// Every ROUGE variant, n-gram cosine and dependency overlap on `n_pairs`
/// random pairs of length at most `max_len` against brute-force oracles.
pub fn metric_oracles(seed: u64, n_pairs: usize, max_len: usize) -> Worst {
    let mut rng = rng(seed);
    let spec = oracle_lexicon();
    let lex = CategoryLexicon::parse(&spec.to_text()).expect("oracle lexicon parses");
    let mut worst = Worst::default();
    for case in 0..n_pairs {
        let a = random_tokens(&mut rng, max_len, 6);
        let b = random_tokens(&mut rng, max_len, 6);
        let tag = |m: &str| format!("{m} on {a:?} / {b:?}");
        for n in 1..=4 {
            let e = triple_err(features::rouge_n(&a, &b, n, 1.0), rouge_n(&a, &b, n));
            worst.update(e, || tag(&format!("rouge-{n}")));
        }
        worst.update(triple_err(features::rouge_l(&a, &b, 1.0), rouge_l(&a, &b)), || {
            tag("rouge-l")
        });
        for w in [1.0, 1.2, 2.0] {
            let e = triple_err(features::rouge_w(&a, &b, w, 1.0), rouge_w(&a, &b, w));
            worst.update(e, || tag(&format!("rouge-w({w})")));
        }
        worst.update(triple_err(features::rouge_s(&a, &b, 1.0), rouge_s(&a, &b)), || {
            tag("rouge-s*")
        });
        worst.update(triple_err(features::rouge_su(&a, &b, 1.0), rouge_su(&a, &b)), || {
            tag("rouge-su*")
        });
        for order in 1..=4 {
            let e = (features::ngram_cosine(&a, &b, order) - ngram_cosine(&a, &b, order)).abs();
            worst.update(e, || tag(&format!("ngram-cosine({order})")));
        }

        // Dependency overlap needs non-empty trees.
        let mut da = a.clone();
        let mut db = b.clone();
        if da.is_empty() {
            da.push("w0".into());
        }
        if db.is_empty() {
            db.push("w2".into());
        }
        let ta = random_tree(&mut rng, &da);
        let tb = random_tree(&mut rng, &db);
        let pa = parse_conllu(&to_conllu(&format!("a{case}"), &ta)).sentences.remove(0);
        let pb = parse_conllu(&to_conllu(&format!("b{case}"), &tb)).sentences.remove(0);
        let got = features::dep_overlap(&pa, &pb, &lex, LexicalizedSide::Governor, OverlapNorm::SumOfLengths)
            .expect("trees are annotated");
        let want = dep_overlap(&ta, &tb, &spec);
        worst.update((got - want).abs(), || format!("dep-overlap on {ta:?} / {tb:?}"));
    }
    worst
}

/// Random `n x p` design with `n <= 30`, `p <= 10`; about a third of the
/// systems have more columns than rows.
fn random_system(rng: &mut rand_chacha::ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>, f64) {
    let p = rng.random_range(1..=10);
    let n = if rng.random_bool(0.3) {
        rng.random_range(2..=p.max(2))
    } else {
        rng.random_range(p + 1..=30)
    };
    let scale: Vec<f64> = (0..p).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect();
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..p)
                .map(|j| scale[j] * Distribution::<f64>::sample(&StandardNormal, rng) + 0.5)
                .collect()
        })
        .collect();
    let w: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y = x
        .iter()
        .map(|r| r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + 1.5 + 0.1 * rng.random::<f64>())
        .collect();
    let alpha = 10f64.powf(rng.random_range(-2.0..2.0));
    (x, y, alpha)
}

/// Ridge against the augmented normal equations; error is relative to the
/// coefficient magnitude.
pub fn ridge_oracle(seed: u64, n_systems: usize) -> Worst {
    let mut rng = rng(seed);
    let mut worst = Worst::default();
    for s in 0..n_systems {
        let (x, y, alpha) = random_system(&mut rng);
        let got = ml::ridge_fit(&x, &y, alpha).expect("ridge fits");
        let (w, b) = ridge_normal_equations(&x, &y, alpha);
        let mag = w.iter().fold(b.abs(), |m, v| m.max(v.abs())).max(1.0);
        let err = got
            .weights
            .iter()
            .zip(&w)
            .map(|(g, o)| (g - o).abs())
            .fold((got.intercept - b).abs(), f64::max)
            / mag;
        worst.update(err, || format!("system {s}: {}x{} alpha={alpha}", x.len(), x[0].len()));
    }
    worst
}

/// Optimality residual `X_c^T (y_c - X_c w) - alpha w` relative to
/// `alpha |w|` on centered data.
pub fn ridge_residual(x: &[Vec<f64>], y: &[f64], alpha: f64) -> f64 {
    let m = ml::ridge_fit(x, y, alpha).expect("ridge fits");
    let n = x.len() as f64;
    let p = x[0].len();
    let xm: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let ym = mean(y);
    let resid: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(r, t)| {
            (t - ym)
                - r.iter()
                    .zip(&xm)
                    .zip(&m.weights)
                    .map(|((v, mu), w)| (v - mu) * w)
                    .sum::<f64>()
        })
        .collect();
    let mut worst = 0.0f64;
    let scale = alpha * m.weights.iter().map(|w| w.abs()).fold(0.0, f64::max);
    for j in 0..p {
        let g: f64 = x.iter().zip(&resid).map(|(r, e)| (r[j] - xm[j]) * e).sum();
        worst = worst.max((g - alpha * m.weights[j]).abs() / scale.max(1e-300));
    }
    worst
}

#[derive(Debug, Clone, Default)]
pub struct SvrCheck {
    pub kkt_failures: Vec<String>,
    /// Gap to the oracle for the model fitted with the requested options.
    pub prediction: Worst,
    /// Gap to the oracle for the model fitted with default options.
    pub default_prediction: Worst,
    pub unconverged: usize,
}

/// Checks the dual constraints of a fitted SVR against its training data.
pub fn svr_kkt(x: &[Vec<f64>], y: &[f64], c: f64, gamma: f64, eps: f64, tol: f64) -> Vec<String> {
    let mut fails = Vec::new();
    let k: Vec<Vec<f64>> = x.iter().map(|u| x.iter().map(|v| rbf(u, v, gamma)).collect()).collect();
    let sol = ml::smo_solve(&ml::KernelMatrix::rbf(x, gamma), y, c, eps, ml::SmoOptions::default()).expect("smo runs");
    let beta = &sol.dual_coef;
    for (i, b) in beta.iter().enumerate() {
        if b.abs() > c * (1.0 + 1e-12) {
            fails.push(format!("|beta_{i}| = {} > C = {c}", b.abs()));
        }
    }
    let sum: f64 = beta.iter().sum();
    if sum.abs() > 1e-6 * c {
        fails.push(format!("sum of dual coefficients {sum}"));
    }
    for i in 0..y.len() {
        let f: f64 = (0..y.len()).map(|j| beta[j] * k[i][j]).sum::<f64>() + sol.bias;
        if (y[i] - f).abs() < eps - tol && beta[i] != 0.0 {
            fails.push(format!("point {i} inside the tube has beta {}", beta[i]));
        }
    }
    fails
}

/// SVR on random problems with `n <= 30`: KKT suite at the default
/// tolerance plus agreement with a projected-gradient solution of the same
/// dual on training and fresh points, for a model fitted with `opts`.
pub fn svr_oracle(seed: u64, n_problems: usize, opts: ml::SmoOptions) -> SvrCheck {
    let mut rng = rng(seed);
    let mut out = SvrCheck::default();
    let noise = Normal::new(0.0, 0.2).unwrap();
    for prob in 0..n_problems {
        let n = rng.random_range(8..=30);
        let d = rng.random_range(1..=4);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| (2.0 * r[0]).sin() + 0.5 * r.iter().skip(1).sum::<f64>() + noise.sample(&mut rng))
            .collect();
        let c = [0.5, 1.0, 5.0, 20.0][prob % 4];
        let gamma = [0.2, 0.5, 1.0][prob % 3];
        let eps = [0.05, 0.1, 0.2][(prob / 3) % 3];
        let tag = format!("problem {prob}: n={n} d={d} C={c} gamma={gamma} eps={eps}");

        for f in svr_kkt(&x, &y, c, gamma, eps, ml::DEFAULT_TOL) {
            out.kkt_failures.push(format!("{tag}: {f}"));
        }
        let default_model = svr_fit(&x, &y, c, gamma, eps).expect("svr fits");
        let model = svr_fit_with(&x, &y, c, gamma, eps, opts).expect("svr fits");
        out.unconverged += usize::from(!model.converged) + usize::from(!default_model.converged);
        let k: Vec<Vec<f64>> = x.iter().map(|u| x.iter().map(|v| rbf(u, v, gamma)).collect()).collect();
        let (beta, bias) = svr_projected_gradient(&k, &y, c, eps, 20_000);
        let probe: Vec<Vec<f64>> = x
            .iter()
            .cloned()
            .chain((0..10).map(|_| (0..d).map(|_| rng.random_range(-1.5..1.5)).collect()))
            .collect();
        for p in &probe {
            let want: f64 = x.iter().zip(&beta).map(|(xi, b)| b * rbf(xi, p, gamma)).sum::<f64>() + bias;
            out.prediction
                .update((model.predict_row(p) - want).abs(), || tag.clone());
            out.default_prediction
                .update((default_model.predict_row(p) - want).abs(), || tag.clone());
        }
    }
    out
}

/// Two-sided rejection rate of the paired t-test at `level` on `sims`
/// samples of `n` pairs drawn under the null.
pub fn ttest_rejection_rate(seed: u64, sims: usize, n: usize, level: f64) -> f64 {
    let mut rng = rng(seed);
    let mut rejected = 0usize;
    for _ in 0..sims {
        let a: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = a
            .iter()
            .map(|v| v + Distribution::<f64>::sample(&StandardNormal, &mut rng) * 0.5)
            .collect();
        // `b` is `a` plus centered noise, so the paired differences have mean 0.
        let r = ml::paired_ttest(&a, &b).expect("non-degenerate sample");
        if r.p < level {
            rejected += 1;
        }
    }
    rejected as f64 / sims as f64
}

/// Runs the CLI in-process; returns its exit code.
pub fn afs(args: &[&str]) -> i32 {
    let mut v = vec!["afs"];
    v.extend_from_slice(args);
    afs_core::cli::run(v)
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Generates a synthetic corpus in `dir` and runs the whole pipeline into
/// `dir/out`; returns the output root.
pub fn synthetic_pipeline(dir: &Path, pairs: usize, seed: u64, jobs: usize) -> PathBuf {
    let pairs = pairs.to_string();
    let seed = seed.to_string();
    let jobs = jobs.to_string();
    let code = afs(&[
        "generate-synthetic",
        "--pairs",
        &pairs,
        "--seed",
        &seed,
        "--out",
        path_str(dir),
    ]);
    assert_eq!(code, 0, "generate-synthetic failed");
    let out = dir.join("out");
    let cfg = dir.join("config.toml");
    let code = afs(&[
        "pipeline",
        "--config",
        path_str(&cfg),
        "--jobs",
        &jobs,
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0, "pipeline failed");
    out
}

/// `feature_set/model -> r` from a result table CSV.
pub fn table_r(path: &Path) -> BTreeMap<String, Option<f64>> {
    let mut rd = csv::Reader::from_path(path).expect("table readable");
    let mut out = BTreeMap::new();
    for rec in rd.records() {
        let rec = rec.expect("table row");
        let label = if rec[1].is_empty() {
            rec[0].to_string()
        } else {
            format!("{}/{}", &rec[0], &rec[1])
        };
        out.insert(label, rec[2].parse().ok());
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct StatsCheck {
    pub pearson: Worst,
    pub rmse: Worst,
    pub ttest: Worst,
    pub t_cdf: Worst,
}

/// Pearson r and RMSE against the textbook formulas, the paired t statistic
/// and p-value against a hand statistic with a reference t distribution, and
/// `t_cdf` against the same reference.
pub fn statistics_oracles(seed: u64, cases: usize) -> StatsCheck {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let mut rng = rng(seed);
    let mut out = StatsCheck::default();
    let cdf = |t: f64, df: f64| StudentsT::new(0.0, 1.0, df).unwrap().cdf(t);
    for case in 0..cases {
        let n = rng.random_range(3..60);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let b: Vec<f64> = a.iter().map(|v| 0.5 * v + rng.random_range(-3.0..3.0)).collect();
        out.pearson
            .update((ml::pearson_r(&a, &b).unwrap() - pearson(&a, &b)).abs(), || {
                format!("case {case}")
            });
        out.rmse.update((ml::rmse(&a, &b).unwrap() - rmse(&a, &b)).abs(), || {
            format!("case {case}")
        });

        let c: Vec<f64> = a.iter().map(|v| v + rng.random_range(-1.0..1.5)).collect();
        let r = ml::paired_ttest(&a, &c).unwrap();
        let t = paired_t(&a, &c);
        let p = 2.0 * (1.0 - cdf(t.abs(), (n - 1) as f64));
        let err = (r.t - t).abs().max((r.p - p).abs());
        out.ttest.update(if r.df == n - 1 { err } else { f64::INFINITY }, || {
            format!("case {case} n={n}")
        });

        let df = rng.random_range(1..200) as f64;
        let tv = rng.random_range(-8.0..8.0);
        out.t_cdf.update((ml::t_cdf(tv, df).unwrap() - cdf(tv, df)).abs(), || {
            format!("t={tv} df={df}")
        });
    }
    out
}
