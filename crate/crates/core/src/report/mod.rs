//! Result tables, the set-aside split and the qualitative export.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::ParsedSentence;
use crate::error::{Error, Result};
use crate::features::{FeatureGroup, FeatureMatrix};
use crate::ml::{
    layout_fingerprint, nested_cv, paired_ttest, CvConfig, CvReport, ModelKind, ParamGrid, RegressionModel, TTestResult,
};
use crate::pairing::ArgumentPair;

/// One feature-set row of a result table, evaluated with each listed model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub name: String,
    pub groups: Vec<FeatureGroup>,
    pub models: Vec<ModelKind>,
}

impl ExperimentRow {
    pub fn new(name: &str, groups: &[FeatureGroup], models: &[ModelKind]) -> Self {
        ExperimentRow {
            name: name.to_string(),
            groups: groups.to_vec(),
            models: models.to_vec(),
        }
    }
}

/// A pair of `name/model` row labels to compare with a paired t-test on
/// fold RMSE.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TTestPair {
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub topic: String,
    pub rows: Vec<ExperimentRow>,
    pub ttest_pairs: Vec<TTestPair>,
    pub split_seed: u64,
    pub set_aside_fraction: f64,
    pub outer_k: usize,
    pub inner_k: usize,
    pub cv_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        use FeatureGroup::*;
        use ModelKind::*;
        let both = [Ridge, Svr];
        let hand = [NgramCosine, LiwcDepOverlap, Rouge, Sts];
        let rows = vec![
            ExperimentRow::new("sts", &[Sts], &both),
            ExperimentRow::new("ngram", &[NgramCosine], &both),
            ExperimentRow::new("rouge", &[Rouge], &both),
            ExperimentRow::new("liwc_dep", &[LiwcDepOverlap], &both),
            ExperimentRow::new("w2v_cosine", &[W2vCosine], &both),
            ExperimentRow::new("ngram_rouge", &[NgramCosine, Rouge], &[Svr]),
            ExperimentRow::new("ngram_liwc", &[NgramCosine, LiwcDepOverlap], &[Svr]),
            ExperimentRow::new("ngram_liwc_rouge", &[NgramCosine, LiwcDepOverlap, Rouge], &[Svr]),
            ExperimentRow::new("hand_engineered", &hand, &[Svr]),
            ExperimentRow::new("w2v_concat", &[W2vConcat], &[Svr]),
            ExperimentRow::new(
                "combined",
                &[NgramCosine, LiwcDepOverlap, Rouge, Sts, W2vConcat],
                &[Svr],
            ),
        ];
        let tt = |a: &str, b: &str| TTestPair {
            a: a.to_string(),
            b: b.to_string(),
        };
        ExperimentConfig {
            topic: String::new(),
            rows,
            ttest_pairs: vec![
                tt("ngram_rouge/svr", "ngram/svr"),
                tt("ngram_liwc/svr", "ngram/svr"),
                tt("hand_engineered/svr", "combined/svr"),
                tt("w2v_concat/svr", "combined/svr"),
            ],
            split_seed: 0,
            set_aside_fraction: 0.10,
            outer_k: 10,
            inner_k: 3,
            cv_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.set_aside_fraction > 0.0 && self.set_aside_fraction < 0.5) {
            return Err(Error::config("set_aside_fraction must lie in (0, 0.5)"));
        }
        if self.rows.is_empty() {
            return Err(Error::config("experiment needs at least one row"));
        }
        let mut labels = std::collections::HashSet::new();
        for r in &self.rows {
            if r.groups.is_empty() || r.models.is_empty() {
                return Err(Error::config(format!("row '{}' needs groups and models", r.name)));
            }
            for m in &r.models {
                if !labels.insert(row_label(&r.name, *m)) {
                    return Err(Error::config(format!("duplicate row '{}/{m}'", r.name)));
                }
            }
        }
        for p in &self.ttest_pairs {
            for l in [&p.a, &p.b] {
                if !labels.contains(l) {
                    return Err(Error::config(format!("t-test refers to unknown row '{l}'")));
                }
            }
        }
        if self.outer_k < 2 || self.inner_k < 2 {
            return Err(Error::config("outer_k and inner_k must be at least 2"));
        }
        Ok(())
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            outer_k: self.outer_k,
            inner_k: self.inner_k,
            seed: self.cv_seed,
            ..CvConfig::default()
        }
    }

    /// Groups needed by any row.
    pub fn required_groups(&self) -> Vec<FeatureGroup> {
        let mut g: Vec<FeatureGroup> = self.rows.iter().flat_map(|r| r.groups.iter().copied()).collect();
        g.sort();
        g.dedup();
        g
    }
}

pub fn row_label(name: &str, kind: ModelKind) -> String {
    format!("{name}/{kind}")
}

fn split_key(seed: u64, pair_id: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(pair_id.as_bytes());
    h.finalize().into()
}

/// Deterministic dev / set-aside split keyed by pair id. Pairs are ranked by
/// `sha256(seed_le || pair_id)`; the first `round(n * fraction)` are set
/// aside. Both parts come back sorted by pair id.
pub fn split_setaside(
    pairs: &[ArgumentPair],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<ArgumentPair>, Vec<ArgumentPair>)> {
    if !(fraction > 0.0 && fraction < 0.5) {
        return Err(Error::config("set-aside fraction must lie in (0, 0.5)"));
    }
    let mut keyed: Vec<([u8; 32], &ArgumentPair)> = pairs.iter().map(|p| (split_key(seed, &p.pair_id), p)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.pair_id.cmp(&b.1.pair_id)));
    let k = (pairs.len() as f64 * fraction).round() as usize;
    let mut aside: Vec<ArgumentPair> = keyed[..k].iter().map(|(_, p)| (*p).clone()).collect();
    let mut dev: Vec<ArgumentPair> = keyed[k..].iter().map(|(_, p)| (*p).clone()).collect();
    aside.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    dev.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    Ok((dev, aside))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub feature_set: String,
    pub model: ModelKind,
    pub r: Option<f64>,
    pub rmse: f64,
    pub undefined_r_folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestRow {
    pub a: String,
    pub b: String,
    /// `None` when the fold differences have zero variance.
    pub result: Option<TTestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub topic: String,
    pub rows: Vec<ResultRow>,
    pub topline: Option<f64>,
    pub ttests: Vec<TTestRow>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultTable {
    pub fn row(&self, label: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| row_label(&r.feature_set, r.model) == label)
    }

    /// CSV `feature_set,model,r,rmse`; the topline, when present, is a last
    /// row with empty model and RMSE.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["feature_set", "model", "r", "rmse"])?;
        for r in &self.rows {
            w.write_record([
                r.feature_set.clone(),
                r.model.to_string(),
                fmt_opt(r.r),
                r.rmse.to_string(),
            ])?;
        }
        if let Some(t) = self.topline {
            w.write_record(["human_topline".to_string(), String::new(), t.to_string(), String::new()])?;
        }
        w.flush().map_err(|e| Error::io("<table>", e))?;
        Ok(())
    }

    /// CSV `row_a,row_b,t,df,p`.
    pub fn write_ttest_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["row_a", "row_b", "t", "df", "p"])?;
        for t in &self.ttests {
            let (tv, df, p) = match &t.result {
                Some(r) => (r.t.to_string(), r.df.to_string(), r.p.to_string()),
                None => Default::default(),
            };
            w.write_record([t.a.clone(), t.b.clone(), tv, df, p])?;
        }
        w.flush().map_err(|e| Error::io("<ttests>", e))?;
        Ok(())
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut lines: Vec<[String; 4]> = vec![["feature set".into(), "model".into(), "r".into(), "RMSE".into()]];
        for r in &self.rows {
            lines.push([
                r.feature_set.clone(),
                r.model.to_string(),
                r.r.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into()),
                format!("{:.4}", r.rmse),
            ]);
        }
        if let Some(t) = self.topline {
            lines.push(["human topline".into(), String::new(), format!("{t:.4}"), String::new()]);
        }
        let widths: Vec<usize> = (0..4)
            .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        if !self.topic.is_empty() {
            let _ = writeln!(out, "topic: {}", self.topic);
        }
        for (i, l) in lines.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:<w0$}  {:<w1$}  {:>w2$}  {:>w3$}",
                l[0],
                l[1],
                l[2],
                l[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2],
                w3 = widths[3]
            );
            if i == 0 {
                let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 6));
            }
        }
        for t in &self.ttests {
            match &t.result {
                Some(r) => {
                    let _ = writeln!(out, "t-test {} vs {}: t={:.4} df={} p={:.4}", t.a, t.b, r.t, r.df, r.p);
                }
                None => {
                    let _ = writeln!(
                        out,
                        "t-test {} vs {}: undefined (identical fold RMSE differences)",
                        t.a, t.b
                    );
                }
            }
        }
        out
    }
}

/// Runs nested CV for every (row, model) on the dev feature matrix. Returns
/// the table and the underlying reports keyed by row label.
pub fn run_table(
    dev: &FeatureMatrix,
    cfg: &ExperimentConfig,
    grid: &ParamGrid,
    topline: Option<f64>,
) -> Result<(ResultTable, Vec<(String, CvReport)>)> {
    cfg.validate()?;
    let y = dev.targets()?;
    let cv = cfg.cv_config();
    let jobs: Vec<(&ExperimentRow, ModelKind)> = cfg
        .rows
        .iter()
        .flat_map(|r| r.models.iter().map(move |m| (r, *m)))
        .collect();
    let reports: Vec<(String, CvReport)> = jobs
        .par_iter()
        .map(|(row, kind)| {
            let label = row_label(&row.name, *kind);
            let wrap = |e: Error| match e {
                Error::Input(m) => Error::Input(format!("row '{label}': {m}")),
                Error::Config(m) => Error::Config(format!("row '{label}': {m}")),
                Error::Undefined(m) => Error::Undefined(format!("row '{label}': {m}")),
                Error::Internal(m) => Error::Internal(format!("row '{label}': {m}")),
                other => other,
            };
            let x = dev.select_groups(&row.groups).map_err(wrap)?;
            let rep = nested_cv(&x.rows, &y, &x.pair_ids, *kind, grid, &cv).map_err(wrap)?;
            Ok((label, rep))
        })
        .collect::<Result<_>>()?;
    let by_label: HashMap<&str, &CvReport> = reports.iter().map(|(l, r)| (l.as_str(), r)).collect();
    let rows = jobs
        .iter()
        .zip(&reports)
        .map(|((row, kind), (_, rep))| ResultRow {
            feature_set: row.name.clone(),
            model: *kind,
            r: rep.mean_r,
            rmse: rep.mean_rmse,
            undefined_r_folds: rep.undefined_r_folds,
        })
        .collect();
    let mut ttests = Vec::new();
    for p in &cfg.ttest_pairs {
        let (a, b) = (by_label[p.a.as_str()], by_label[p.b.as_str()]);
        let result = match paired_ttest(&a.fold_rmse(), &b.fold_rmse()) {
            Ok(r) => Some(r),
            Err(Error::Undefined(_)) => None,
            Err(e) => return Err(e),
        };
        ttests.push(TTestRow {
            a: p.a.clone(),
            b: p.b.clone(),
            result,
        });
    }
    Ok((
        ResultTable {
            topic: cfg.topic.clone(),
            rows,
            topline,
            ttests,
        },
        reports,
    ))
}

/// Per set-aside pair: both argument texts, one prediction per model and the
/// gold score.
#[derive(Debug, Clone, PartialEq)]
pub struct QualitativeTable {
    pub model_names: Vec<String>,
    pub rows: Vec<QualitativeRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualitativeRow {
    pub pair_id: String,
    pub argument_1: String,
    pub argument_2: String,
    pub predictions: Vec<f64>,
    pub gold_afs: Option<f64>,
}

/// Applies each `(name, groups, model)` to the set-aside rows of
/// `features`. Rows are sorted by ascending gold AFS, then pair id.
pub fn qualitative_export(
    setaside: &[ArgumentPair],
    sentences: &[ParsedSentence],
    features: &FeatureMatrix,
    models: &[(String, Vec<FeatureGroup>, RegressionModel)],
) -> Result<QualitativeTable> {
    let text: HashMap<&str, &str> = sentences.iter().map(|s| (s.id.as_str(), s.raw_text.as_str())).collect();
    let row_of: HashMap<&str, usize> = features
        .pair_ids
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_str(), i))
        .collect();
    let mut selected = Vec::with_capacity(models.len());
    for (name, groups, model) in models {
        let m = features.select_groups(groups)?;
        let fp = layout_fingerprint(&m.columns);
        selected.push((name, m, fp, model));
    }
    let mut rows = Vec::with_capacity(setaside.len());
    for p in setaside {
        let &i = row_of
            .get(p.pair_id.as_str())
            .ok_or_else(|| Error::input(format!("no feature row for set-aside pair {}", p.pair_id)))?;
        let lookup = |id: &str| {
            text.get(id)
                .map(|t| t.to_string())
                .ok_or_else(|| Error::input(format!("unknown sentence '{id}'")))
        };
        let mut predictions = Vec::with_capacity(selected.len());
        for (_, m, fp, model) in &selected {
            predictions.push(model.predict(std::slice::from_ref(&m.rows[i]), fp)?[0]);
        }
        rows.push(QualitativeRow {
            pair_id: p.pair_id.clone(),
            argument_1: lookup(&p.sent_a)?,
            argument_2: lookup(&p.sent_b)?,
            predictions,
            gold_afs: p.gold_afs,
        });
    }
    rows.sort_by(|a, b| {
        let ga = a.gold_afs.unwrap_or(f64::NEG_INFINITY);
        let gb = b.gold_afs.unwrap_or(f64::NEG_INFINITY);
        ga.total_cmp(&gb).then_with(|| a.pair_id.cmp(&b.pair_id))
    });
    Ok(QualitativeTable {
        model_names: models.iter().map(|(n, _, _)| n.clone()).collect(),
        rows,
    })
}

impl QualitativeTable {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["argument_1".to_string(), "argument_2".to_string()];
        h.extend(self.model_names.iter().cloned());
        h.push("gold_afs".to_string());
        h
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.header())?;
        for r in &self.rows {
            let mut rec = vec![r.argument_1.clone(), r.argument_2.clone()];
            rec.extend(r.predictions.iter().map(f64::to_string));
            rec.push(fmt_opt(r.gold_afs));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<qualitative>", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(n: usize) -> Vec<ArgumentPair> {
        (0..n)
            .map(|i| ArgumentPair::new(format!("a{i:04}"), format!("b{i:04}"), 0.5))
            .collect()
    }

    #[test]
    fn split_sizes_and_partition() {
        let p = pairs(2000);
        let (dev, aside) = split_setaside(&p, 0.1, 7).unwrap();
        assert_eq!((dev.len(), aside.len()), (1800, 200));
        let mut all: Vec<_> = dev.iter().chain(&aside).map(|p| p.pair_id.clone()).collect();
        all.sort();
        let mut want: Vec<_> = p.iter().map(|p| p.pair_id.clone()).collect();
        want.sort();
        assert_eq!(all, want);
        assert_eq!(split_setaside(&p, 0.1, 7).unwrap(), (dev.clone(), aside.clone()));
        let mut rev = p.clone();
        rev.reverse();
        assert_eq!(split_setaside(&rev, 0.1, 7).unwrap().1, aside);
        assert_ne!(split_setaside(&p, 0.1, 8).unwrap().1, aside);
        assert!(split_setaside(&p, 0.5, 7).is_err());
    }

    #[test]
    fn default_experiment_validates() {
        ExperimentConfig::default().validate().unwrap();
        let mut bad = ExperimentConfig::default();
        bad.ttest_pairs.push(TTestPair {
            a: "nope/svr".into(),
            b: "ngram/svr".into(),
        });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn empty_qualitative_export() {
        let m = FeatureMatrix {
            columns: vec!["ngram_cosine".into()],
            pair_ids: vec![],
            rows: vec![],
            gold: vec![],
        };
        let t = qualitative_export(&[], &[], &m, &[]).unwrap();
        assert!(t.rows.is_empty());
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "argument_1,argument_2,gold_afs\n");
    }
}
