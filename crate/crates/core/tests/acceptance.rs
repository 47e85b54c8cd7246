//! Acceptance run: one line per criterion, non-zero exit on any failure.
//!
//! Criterion 6 needs the annotated forum corpora. Point `AFS_REPLICATION_DIR`
//! at a directory holding `gun_control.toml`, `gay_marriage.toml` and
//! `death_penalty.toml` (pipeline configs for each topic); otherwise it is
//! reported as skipped.

mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use afs_core::cli::PipelineConfig;
use afs_core::ml::SmoOptions;

use common::checks::{self, afs, path_str, table_r};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn within_budget(outcome: Outcome, took: Duration, budget: Duration) -> Outcome {
    match outcome {
        Outcome::Pass(d) if took > budget => Outcome::Fail(format!("{d}; took {took:.1?} > {budget:?}")),
        o => o,
    }
}

fn metrics() -> Outcome {
    let w = checks::metric_oracles(2024, 200, 8);
    let worst = if w.what.is_empty() {
        String::new()
    } else {
        format!(" on {}", w.what)
    };
    verdict(w.err <= 1e-12, format!("200 pairs, max err {:.2e}{worst}", w.err))
}

fn solvers() -> Outcome {
    let ridge = checks::ridge_oracle(2025, 50);
    let opts = SmoOptions {
        tol: 1e-6,
        ..SmoOptions::default()
    };
    let svr = checks::svr_oracle(2026, 20, opts);
    let ok = ridge.err <= 1e-8 && svr.kkt_failures.is_empty() && svr.unconverged == 0 && svr.prediction.err <= 1e-3;
    verdict(
        ok,
        format!(
            "ridge 50 systems max rel err {:.2e}; svr 20 problems: {} KKT violations, prediction gap {:.2e} \
             at tol 1e-6 ({:.2e} at default tol)",
            ridge.err,
            svr.kkt_failures.len(),
            svr.prediction.err,
            svr.default_prediction.err
        ),
    )
}

fn statistics() -> Outcome {
    let s = checks::statistics_oracles(2027, 300);
    let rate = checks::ttest_rejection_rate(2028, 20_000, 10, 0.05);
    let ok = s.pearson.err <= 1e-12
        && s.rmse.err <= 1e-12
        && s.ttest.err <= 1e-6
        && s.t_cdf.err <= 1e-8
        && (rate - 0.05).abs() <= 0.015;
    verdict(
        ok,
        format!(
            "pearson {:.1e}, rmse {:.1e}, paired t {:.1e}, t_cdf {:.1e}; null rejection rate {:.2}%",
            s.pearson.err,
            s.rmse.err,
            s.ttest.err,
            s.t_cdf.err,
            100.0 * rate
        ),
    )
}

fn synthetic() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = checks::synthetic_pipeline(dir.path(), 500, 11, 4);
    let t = table_r(&out.join("report/table.csv"));
    let combined = t.get("combined/svr").copied().flatten();
    let ngram = ["ngram/ridge", "ngram/svr"]
        .iter()
        .filter_map(|k| t.get(*k).copied().flatten())
        .fold(f64::NEG_INFINITY, f64::max);
    match combined {
        Some(c) => verdict(
            c >= 0.85 && c > ngram,
            format!("combined/svr r={c:.4}, best ngram r={ngram:.4}"),
        ),
        None => Outcome::Fail("combined/svr r undefined".into()),
    }
}

fn published_defaults() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("config/default.toml");
    let cfg = match PipelineConfig::load(&path) {
        Ok(c) => c,
        Err(e) => return Outcome::Fail(format!("{}: {e}", path.display())),
    };
    let checks: [(&str, bool); 8] = [
        ("zero rule", cfg.aq.zero_rule_min_dict_words == 4),
        ("token band", (cfg.aq.min_tokens, cfg.aq.max_tokens) == (10, 40)),
        ("threshold", cfg.aq.high_aq_threshold == 0.55),
        ("bin edges", cfg.aq.bin_edges == [0.55, 0.65, 0.75, 0.85, 0.95, 1.0]),
        ("cap", cfg.pairing.per_sentence_cap == 10),
        ("target pairs", cfg.pairing.target_pairs == 2000),
        ("split", cfg.experiment.set_aside_fraction == 0.10),
        ("folds", cfg.experiment.outer_k == 10),
    ];
    let bad: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    verdict(
        bad.is_empty() && cfg == PipelineConfig::default(),
        if bad.is_empty() {
            "8 protocol values read from config/default.toml".into()
        } else {
            format!("mismatch: {}", bad.join(", "))
        },
    )
}

fn replication() -> Outcome {
    let Some(root) = std::env::var_os("AFS_REPLICATION_DIR").map(PathBuf::from) else {
        return Outcome::Skip("AFS_REPLICATION_DIR not set; annotated corpus absent".into());
    };
    let topics = [("gun_control", 0.73), ("gay_marriage", 0.54), ("death_penalty", 0.63)];
    if topics.iter().any(|(t, _)| !root.join(format!("{t}.toml")).is_file()) {
        return Outcome::Skip(format!("{} lacks per-topic configs", root.display()));
    }
    let work = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (topic, target) in topics {
        let cfg = root.join(format!("{topic}.toml"));
        let out = work.path().join(topic);
        if afs(&["pipeline", "--config", path_str(&cfg), "--out", path_str(&out)]) != 0 {
            return Outcome::Fail(format!("{topic}: pipeline failed"));
        }
        let t = table_r(&out.join("report/table.csv"));
        let get = |k: &str| t.get(k).copied().flatten();
        let (c, concat, cos) = (get("combined/svr"), get("w2v_concat/svr"), get("w2v_cosine/svr"));
        let row_ok =
            matches!(c, Some(r) if (r - target).abs() <= 0.07) && matches!((concat, cos), (Some(a), Some(b)) if a > b);
        ok &= row_ok;
        parts.push(format!(
            "{topic}: combined {c:?} (target {target}), concat {concat:?} vs cosine {cos:?}"
        ));
    }
    verdict(ok, parts.join("; "))
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = checks::synthetic_pipeline(a.path(), 200, 5, 1).join("manifest.json");
    let mb = checks::synthetic_pipeline(b.path(), 200, 5, 3).join("manifest.json");
    let (x, y) = (std::fs::read(&ma).unwrap(), std::fs::read(&mb).unwrap());
    let n = serde_json::from_slice::<serde_json::Value>(&x).unwrap()["artifacts"]
        .as_object()
        .map_or(0, |m| m.len());
    verdict(
        !x.is_empty() && x == y,
        format!(
            "{n} artifacts, manifests {}",
            if x == y { "identical" } else { "differ" }
        ),
    )
}

/// Number, name, check and time budget in seconds (0 for none).
type Criterion = (u8, &'static str, fn() -> Outcome, u64);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        (1, "metric oracle equivalence", metrics, 10),
        (2, "solver oracle equivalence", solvers, 60),
        (3, "statistics", statistics, 0),
        (4, "synthetic corpus recovery", synthetic, 300),
        (5, "published-rule defaults", published_defaults, 0),
        (6, "conditional replication", replication, 0),
        (7, "deterministic manifests", determinism, 0),
    ];
    let mut failed = 0;
    for (n, name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = if budget > 0 {
            within_budget(outcome, took, Duration::from_secs(budget))
        } else {
            outcome
        };
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {n}: {tag} {name} [{took:.1?}] {detail}");
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
