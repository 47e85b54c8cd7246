//! One function per CLI command. Each reads its declared inputs, writes its
//! outputs through the [`OutTree`] and returns the one-line summary.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{AqScorerKind, PipelineConfig};
use super::output::OutTree;
use crate::aq::{
    bin_by_score, bin_quality_report, filter_by_length, gold_labels, length_histogram, read_aq_annotations, rescore_aq,
    sample_bins, train_baseline_aq_scorer, AqScorer, ExternalAqScores,
};
use crate::corpus::{
    normalize_and_dedup, parse_conllu_named, read_conllu_dir, read_raw_csv, Corpus, Dictionary, ParsedSentence,
    Stopwords,
};
use crate::error::{Error, Result};
use crate::features::{featurize_pairs, CategoryLexicon, EmbeddingTable, FeatureMatrix, FeatureResources};
use crate::ml::{fit_model, grid_search, layout_fingerprint, paired_ttest, pearson_r, RegressionModel, SmoOptions};
use crate::pairing::{
    attach_annotations, human_topline, read_afs_annotations, read_pairs, select_pairs, write_pairs, AfsAnnotation,
    ExternalSts, ProxySts, StsScorer,
};
use crate::report::{qualitative_export, run_table, split_setaside};

/// Artifact paths inside the output tree.
pub mod artifacts {
    pub const SENTENCES: &str = "corpus/sentences.jsonl";
    pub const CORPUS_SUMMARY: &str = "corpus/summary.json";
    pub const AQ_SCORES: &str = "aq/scores.csv";
    pub const AQ_LENGTHS: &str = "aq/length_histogram.csv";
    pub const AQ_BINS: &str = "aq/bins.csv";
    pub const AQ_SAMPLE: &str = "aq/sample.csv";
    pub const AQ_FILTERED: &str = "aq/filtered.jsonl";
    pub const AQ_SUMMARY: &str = "aq/summary.json";
    pub const BIN_REPORT_CSV: &str = "aq/bin_report.csv";
    pub const BIN_REPORT_JSON: &str = "aq/bin_report.json";
    pub const CANDIDATES: &str = "pairs/candidates.csv";
    pub const SELECTION: &str = "pairs/selection.json";
    pub const DEV_PAIRS: &str = "pairs/dev.csv";
    pub const SETASIDE_PAIRS: &str = "pairs/setaside.csv";
    pub const DEV_FEATURES: &str = "features/dev.csv";
    pub const SETASIDE_FEATURES: &str = "features/setaside.csv";
    pub const FEATURE_SUMMARY: &str = "features/summary.json";
    pub const MODEL_SUMMARY: &str = "models/summary.json";
    pub const TABLE_CSV: &str = "report/table.csv";
    pub const TABLE_TXT: &str = "report/table.txt";
    pub const TTESTS: &str = "report/ttests.csv";
    pub const TOPLINE: &str = "report/topline.json";
    pub const REPORT_SUMMARY: &str = "report/summary.json";
    pub const QUALITATIVE: &str = "report/qualitative.csv";

    /// File-name form of a row label such as `combined/svr`.
    pub fn slug(label: &str) -> String {
        label.replace('/', "__")
    }

    pub fn model(label: &str) -> String {
        format!("models/{}.json", slug(label))
    }

    pub fn cv(label: &str) -> String {
        format!("report/cv/{}.csv", slug(label))
    }

    pub fn ttest(a: &str, b: &str) -> String {
        format!("report/ttest/{}__vs__{}.json", slug(a), slug(b))
    }

    pub fn scores(model_stem: &str) -> String {
        format!("scores/{model_stem}.csv")
    }
}

use artifacts as art;

pub struct Ctx {
    pub cfg: PipelineConfig,
    pub out: OutTree,
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn open(p: &Path) -> Result<std::fs::File> {
    std::fs::File::open(p).map_err(|e| Error::io(p, e))
}

fn jsonl(sentences: &[ParsedSentence]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for s in sentences {
        serde_json::to_writer(&mut buf, s)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

fn parse_jsonl(text: &str, source_name: &str) -> Result<Vec<ParsedSentence>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Record {
                source_name: source_name.to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn stage_sentences(out: &OutTree, rel: &str, producer: &str) -> Result<Vec<ParsedSentence>> {
    parse_jsonl(&out.read_stage(rel, producer)?, rel)
}

fn dictionary(cfg: &PipelineConfig) -> Result<Dictionary> {
    cfg.paths
        .dictionary
        .as_deref()
        .map_or_else(|| Ok(Dictionary::bundled()), Dictionary::load)
}

fn stopwords(cfg: &PipelineConfig) -> Result<Stopwords> {
    cfg.paths
        .stopwords
        .as_deref()
        .map_or_else(|| Ok(Stopwords::bundled()), Stopwords::load)
}

fn afs_annotations(cfg: &PipelineConfig) -> Result<Option<Vec<AfsAnnotation>>> {
    cfg.paths
        .afs_annotations
        .as_deref()
        .map(|p| read_afs_annotations(open(p)?))
        .transpose()
}

fn write_csv_rows<W: std::io::Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Serialize)]
struct IngestSummary {
    topic: String,
    inputs: Vec<(String, usize)>,
    record_errors: Vec<String>,
    invalid_dropped: usize,
    other_topic_dropped: usize,
    duplicates_removed: usize,
    sentences: usize,
}

pub fn ingest(ctx: &mut Ctx) -> Result<String> {
    let cfg = &ctx.cfg;
    let mut sentences = Vec::new();
    let mut inputs = Vec::new();
    let mut record_errors = Vec::new();
    if let Some(p) = &cfg.paths.conllu_dir {
        let (parse, manifest) = if p.is_dir() {
            read_conllu_dir(p, &cfg.topic)?
        } else {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let parse = parse_conllu_named(&text, &file_name(p), &cfg.topic);
            let n = parse.sentences.len();
            (parse, vec![(file_name(p), n)])
        };
        sentences.extend(parse.sentences);
        record_errors.extend(parse.errors.iter().map(ToString::to_string));
        inputs.extend(manifest);
    }
    if let Some(p) = &cfg.paths.corpus_csv {
        let raw = read_raw_csv(open(p)?)?;
        inputs.push((file_name(p), raw.len()));
        let parsed: HashSet<String> = sentences.iter().map(|s| s.id.clone()).collect();
        sentences.extend(raw.into_iter().filter(|s| !parsed.contains(&s.id)));
    }
    if inputs.is_empty() {
        return Err(Error::config(
            "no corpus input configured (paths.conllu_dir or paths.corpus_csv)",
        ));
    }
    for e in &record_errors {
        log::warn!("skipped record: {e}");
    }
    let before = sentences.len();
    sentences.retain(|s| match s.validate() {
        Ok(()) => true,
        Err(e) => {
            log::warn!("dropped sentence {}: {e}", s.id);
            false
        }
    });
    let invalid_dropped = before - sentences.len();
    let mut other_topic_dropped = 0;
    if !cfg.topic.is_empty() {
        for s in sentences.iter_mut().filter(|s| s.topic.is_empty()) {
            s.topic = cfg.topic.clone();
        }
        let n = sentences.len();
        sentences.retain(|s| s.topic == cfg.topic);
        other_topic_dropped = n - sentences.len();
    }
    let corpus = Corpus {
        topic: cfg.topic.clone(),
        sentences,
        source_manifest: inputs.clone(),
    };
    corpus.check_unique_ids()?;
    let (corpus, dedup) = normalize_and_dedup(&corpus);
    let summary = IngestSummary {
        topic: cfg.topic.clone(),
        inputs,
        record_errors,
        invalid_dropped,
        other_topic_dropped,
        duplicates_removed: dedup.removed,
        sentences: corpus.sentences.len(),
    };
    ctx.out.write(art::SENTENCES, &jsonl(&corpus.sentences)?)?;
    ctx.out.write_json(art::CORPUS_SUMMARY, &summary)?;
    Ok(format!(
        "ingest: {} sentences ({} duplicates removed, {} record errors)",
        summary.sentences,
        summary.duplicates_removed,
        summary.record_errors.len()
    ))
}

#[derive(Serialize)]
struct BinCount {
    low: f64,
    high: f64,
    count: usize,
}

#[derive(Serialize)]
struct AqSummary {
    scorer: crate::aq::AqProvenance,
    sentences: usize,
    zeroed_by_rule: usize,
    dropped_short: usize,
    dropped_long: usize,
    kept: usize,
    below_bins: usize,
    pool: usize,
    sampled: usize,
    bins: Vec<BinCount>,
}

fn aq_scorer(cfg: &PipelineConfig, sentences: &[ParsedSentence], dict: &Dictionary) -> Result<Box<dyn AqScorer>> {
    match cfg.aq_scorer {
        AqScorerKind::External => Ok(Box::new(match &cfg.paths.aq_scores {
            Some(p) => ExternalAqScores::load(p)?,
            None => ExternalAqScores::default(),
        })),
        AqScorerKind::Baseline => {
            let p = cfg
                .paths
                .aq_annotations
                .as_deref()
                .ok_or_else(|| Error::config("aq_scorer = \"baseline\" needs paths.aq_annotations"))?;
            let labels = gold_labels(&read_aq_annotations(open(p)?)?)?;
            let labeled: Vec<_> = sentences
                .iter()
                .filter_map(|s| labels.get(&s.id).map(|l| (s.clone(), *l)))
                .collect();
            Ok(Box::new(train_baseline_aq_scorer(&labeled, dict)?))
        }
    }
}

pub fn filter_aq(ctx: &mut Ctx) -> Result<String> {
    let cfg = &ctx.cfg;
    let mut sentences = stage_sentences(&ctx.out, art::SENTENCES, "ingest")?;
    let dict = dictionary(cfg)?;
    let scorer = aq_scorer(cfg, &sentences, &dict)?;
    let mut score_rows = Vec::with_capacity(sentences.len());
    let mut zeroed = 0;
    for s in &mut sentences {
        let raw = scorer.score(s)?;
        let aq = rescore_aq(s, raw, &dict, &cfg.aq)?;
        if aq == 0.0 && raw > 0.0 {
            zeroed += 1;
        }
        s.aq_score = Some(aq);
        score_rows.push(vec![s.id.clone(), raw.to_string(), aq.to_string()]);
    }
    let hist = length_histogram(&sentences);
    let part = filter_by_length(&sentences, &cfg.aq);
    let scored: Vec<(&str, f64)> = part
        .kept
        .iter()
        .map(|s| (s.id.as_str(), s.aq_score.unwrap_or(0.0)))
        .collect();
    let binning = bin_by_score(&scored, &cfg.aq)?;
    let sample = sample_bins(&binning, &cfg.aq)?;
    let in_bins: HashSet<&str> = binning
        .bins
        .iter()
        .flat_map(|b| b.members.iter().map(|(id, _)| id.as_str()))
        .collect();
    let pool: Vec<ParsedSentence> = part
        .kept
        .iter()
        .filter(|s| in_bins.contains(s.id.as_str()))
        .cloned()
        .collect();

    let summary = AqSummary {
        scorer: scorer.provenance(),
        sentences: sentences.len(),
        zeroed_by_rule: zeroed,
        dropped_short: part.dropped_short.len(),
        dropped_long: part.dropped_long.len(),
        kept: part.kept.len(),
        below_bins: binning.discard.len(),
        pool: pool.len(),
        sampled: sample.len(),
        bins: binning
            .bins
            .iter()
            .map(|b| BinCount {
                low: b.low,
                high: b.high,
                count: b.members.len(),
            })
            .collect(),
    };
    let out = &mut ctx.out;
    out.write_with(art::AQ_SCORES, |w| {
        write_csv_rows(w, &["sentence_id", "raw_aq", "aq_score"], score_rows)
    })?;
    out.write_with(art::AQ_LENGTHS, |w| {
        write_csv_rows(
            w,
            &["tokens", "count"],
            hist.iter().map(|(k, v)| vec![k.to_string(), v.to_string()]),
        )
    })?;
    out.write_with(art::AQ_BINS, |w| {
        write_csv_rows(
            w,
            &["bin", "low", "high", "count"],
            summary.bins.iter().enumerate().map(|(i, b)| {
                vec![
                    i.to_string(),
                    b.low.to_string(),
                    b.high.to_string(),
                    b.count.to_string(),
                ]
            }),
        )
    })?;
    out.write_with(art::AQ_SAMPLE, |w| {
        let mut c = csv::Writer::from_writer(w);
        if sample.is_empty() {
            c.write_record(["bin", "sentence_id", "aq_score"])?;
        }
        for s in &sample {
            c.serialize(s)?;
        }
        c.flush().map_err(|e| Error::io(art::AQ_SAMPLE, e))?;
        Ok(())
    })?;
    out.write(art::AQ_FILTERED, &jsonl(&pool)?)?;
    out.write_json(art::AQ_SUMMARY, &summary)?;
    Ok(format!(
        "filter-aq: {} of {} sentences in the high-AQ pool ({} zeroed, {} outside length band, {} sampled)",
        summary.pool,
        summary.sentences,
        zeroed,
        summary.dropped_short + summary.dropped_long,
        summary.sampled
    ))
}

fn read_rescored(out: &OutTree) -> Result<BTreeMap<String, f64>> {
    let text = out.read_stage(art::AQ_SCORES, "filter-aq")?;
    let mut m = BTreeMap::new();
    for rec in csv::Reader::from_reader(text.as_bytes()).records() {
        let rec = rec?;
        let v: f64 = rec[2]
            .parse()
            .map_err(|_| Error::input(format!("{}: bad aq_score '{}'", art::AQ_SCORES, &rec[2])))?;
        m.insert(rec[0].to_string(), v);
    }
    Ok(m)
}

pub fn bin_report(ctx: &mut Ctx) -> Result<String> {
    let cfg = &ctx.cfg;
    let p = cfg
        .paths
        .aq_annotations
        .as_deref()
        .ok_or_else(|| Error::config("bin-report needs paths.aq_annotations"))?;
    let labels = gold_labels(&read_aq_annotations(open(p)?)?)?;
    let scores = read_rescored(&ctx.out)?;
    let items: Vec<(&str, f64, crate::aq::AqLabel)> = labels
        .iter()
        .filter_map(|(id, l)| scores.get(id).map(|s| (id.as_str(), *s, *l)))
        .collect();
    let unmatched = labels.len() - items.len();
    if unmatched > 0 {
        log::warn!("{unmatched} labeled sentences have no AQ score");
    }
    let report = bin_quality_report(&items, &cfg.aq)?;
    ctx.out.write_with(art::BIN_REPORT_CSV, |w| report.write_csv(w))?;
    ctx.out.write_json(art::BIN_REPORT_JSON, &report)?;
    let agreement = report.agreement.map_or("n/a".to_string(), |a| format!("{a:.3}"));
    Ok(format!(
        "bin-report: {} labeled sentences, agreement with AQ>{} = {agreement}",
        items.len(),
        report.threshold
    ))
}

#[derive(Serialize)]
struct SelectionSummary {
    sts: &'static str,
    pool: usize,
    target_pairs: usize,
    per_sentence_cap: usize,
    selected: usize,
    min_accepted_prescore: Option<f64>,
    shortfall: Option<String>,
}

pub fn sample_pairs(ctx: &mut Ctx) -> Result<String> {
    let cfg = &ctx.cfg;
    let pool = stage_sentences(&ctx.out, art::AQ_FILTERED, "filter-aq")?;
    let (selection, sts) = match &cfg.paths.sts {
        Some(p) => {
            let s = ExternalSts::load(p)?;
            (select_pairs(&pool, &s, &cfg.pairing)?, s.provenance())
        }
        None => {
            let s = ProxySts::fit(&pool, stopwords(cfg)?);
            (select_pairs(&pool, &s, &cfg.pairing)?, s.provenance())
        }
    };
    if let Some(s) = &selection.shortfall {
        log::warn!("{s}");
    }
    let summary = SelectionSummary {
        sts,
        pool: pool.len(),
        target_pairs: cfg.pairing.target_pairs,
        per_sentence_cap: cfg.pairing.per_sentence_cap,
        selected: selection.pairs.len(),
        min_accepted_prescore: selection.min_accepted_prescore,
        shortfall: selection.shortfall.clone(),
    };
    ctx.out
        .write_with(art::CANDIDATES, |w| write_pairs(w, &selection.pairs))?;
    ctx.out.write_json(art::SELECTION, &summary)?;
    Ok(format!(
        "sample-pairs: {} of {} target pairs from {} sentences ({sts})",
        summary.selected, summary.target_pairs, summary.pool
    ))
}

#[derive(Serialize)]
struct FeatureSummary {
    pairs: usize,
    unannotated_dropped: usize,
    dev: usize,
    setaside: usize,
    columns: usize,
    sts: Option<&'static str>,
}

pub fn featurize(ctx: &mut Ctx) -> Result<String> {
    let cfg = &ctx.cfg;
    let sentences = stage_sentences(&ctx.out, art::SENTENCES, "ingest")?;
    let mut pairs = match &cfg.paths.pairs {
        Some(p) => read_pairs(open(p)?)?,
        None => read_pairs(open(&ctx.out.stage_input(art::CANDIDATES, "sample-pairs")?)?)?,
    };
    let mut unannotated_dropped = 0;
    if let Some(ann) = afs_annotations(cfg)? {
        attach_annotations(&mut pairs, &ann)?;
        let n = pairs.len();
        pairs.retain(|p| p.gold_afs.is_some());
        unannotated_dropped = n - pairs.len();
    }
    let exp = &cfg.experiment;
    let (dev, aside) = split_setaside(&pairs, exp.set_aside_fraction, exp.split_seed)?;

    let fcfg = cfg.feature_config();
    let stop = stopwords(cfg)?;
    let lexicon = cfg.paths.lexicon.as_deref().map(CategoryLexicon::load).transpose()?;
    let embeddings = cfg.paths.embeddings.as_deref().map(EmbeddingTable::load).transpose()?;
    let needs_sts = fcfg.has(crate::features::FeatureGroup::Sts);
    let external = cfg.paths.sts.as_deref().map(ExternalSts::load).transpose()?;
    let proxy = match (&external, needs_sts) {
        (None, true) => {
            let used: HashSet<&str> = dev
                .iter()
                .flat_map(|p| [p.sent_a.as_str(), p.sent_b.as_str()])
                .collect();
            let fit_on: Vec<ParsedSentence> = sentences
                .iter()
                .filter(|s| used.contains(s.id.as_str()))
                .cloned()
                .collect();
            Some(ProxySts::fit(&fit_on, stop.clone()))
        }
        _ => None,
    };
    let mut res = FeatureResources::new(&stop);
    res.lexicon = lexicon.as_ref();
    res.embeddings = embeddings.as_ref();
    res.sts = match (&external, &proxy) {
        (Some(e), _) => Some(e as &(dyn StsScorer + Sync)),
        (None, Some(p)) => Some(p as &(dyn StsScorer + Sync)),
        _ => None,
    };
    let dev_m = featurize_pairs(&dev, &sentences, &fcfg, &res)?;
    let aside_m = featurize_pairs(&aside, &sentences, &fcfg, &res)?;
    let summary = FeatureSummary {
        pairs: pairs.len(),
        unannotated_dropped,
        dev: dev.len(),
        setaside: aside.len(),
        columns: dev_m.columns.len(),
        sts: res.sts.map(|s| s.provenance()),
    };
    let out = &mut ctx.out;
    out.write_with(art::DEV_PAIRS, |w| write_pairs(w, &dev))?;
    out.write_with(art::SETASIDE_PAIRS, |w| write_pairs(w, &aside))?;
    out.write_with(art::DEV_FEATURES, |w| dev_m.write_csv(w))?;
    out.write_with(art::SETASIDE_FEATURES, |w| aside_m.write_csv(w))?;
    out.write_json(art::FEATURE_SUMMARY, &summary)?;
    Ok(format!(
        "featurize: {} dev + {} set-aside pairs, {} feature columns",
        summary.dev, summary.setaside, summary.columns
    ))
}

fn read_matrix(out: &OutTree, rel: &str) -> Result<FeatureMatrix> {
    FeatureMatrix::read_csv(open(&out.stage_input(rel, "featurize")?)?)
}

#[derive(Serialize)]
struct TrainedModel {
    label: String,
    file: String,
    params: String,
    columns: usize,
}

pub fn train(ctx: &mut Ctx) -> Result<String> {
    let cfg = &ctx.cfg;
    let dev = read_matrix(&ctx.out, art::DEV_FEATURES)?;
    let y = dev.targets()?;
    let jobs = cfg.model_labels();
    let exp = &cfg.experiment;
    let models: Vec<(String, RegressionModel)> = jobs
        .par_iter()
        .map(|(label, row, kind)| {
            let x = dev.select_groups(&exp.rows[*row].groups)?;
            let points = cfg.grid.points(*kind, x.columns.len());
            let gs = grid_search(
                &x.rows,
                &y,
                &x.pair_ids,
                &points,
                exp.inner_k,
                exp.cv_seed,
                SmoOptions::default(),
            )?;
            let mut m = fit_model(
                gs.best,
                &x.rows,
                &y,
                &layout_fingerprint(&x.columns),
                SmoOptions::default(),
            )?;
            m.columns = x.columns;
            Ok((label.clone(), m))
        })
        .collect::<Result<_>>()?;
    let mut summary = Vec::with_capacity(models.len());
    for (label, m) in &models {
        let file = art::model(label);
        let mut json = m.to_json()?;
        json.push('\n');
        ctx.out.write(&file, json.as_bytes())?;
        summary.push(TrainedModel {
            label: label.clone(),
            file,
            params: m.params.to_string(),
            columns: m.columns.len(),
        });
    }
    ctx.out.write_json(art::MODEL_SUMMARY, &summary)?;
    Ok(format!("train: {} models fit on {} dev pairs", models.len(), dev.len()))
}

pub fn evaluate(ctx: &mut Ctx) -> Result<String> {
    let cfg = &ctx.cfg;
    let dev = read_matrix(&ctx.out, art::DEV_FEATURES)?;
    let topline = match afs_annotations(cfg)? {
        Some(ann) => {
            let ids: HashSet<&str> = dev.pair_ids.iter().map(String::as_str).collect();
            let ann: Vec<AfsAnnotation> = ann.into_iter().filter(|a| ids.contains(a.pair_id.as_str())).collect();
            match human_topline(&ann) {
                Ok(t) => Some(t),
                Err(Error::Undefined(m)) | Err(Error::Input(m)) => {
                    log::warn!("no human topline: {m}");
                    None
                }
                Err(e) => return Err(e),
            }
        }
        None => None,
    };
    let (table, reports) = run_table(&dev, &cfg.experiment, &cfg.grid, topline.as_ref().map(|t| t.mean_r))?;
    let out = &mut ctx.out;
    out.write_with(art::TABLE_CSV, |w| table.write_csv(w))?;
    out.write(art::TABLE_TXT, table.to_text().as_bytes())?;
    out.write_with(art::TTESTS, |w| table.write_ttest_csv(w))?;
    for (label, rep) in &reports {
        out.write(&art::cv(label), rep.to_csv()?.as_bytes())?;
    }
    out.write_json(art::TOPLINE, &topline)?;
    out.write_json(art::REPORT_SUMMARY, &table)?;
    let best = table
        .rows
        .iter()
        .filter_map(|r| r.r.map(|v| (v, crate::report::row_label(&r.feature_set, r.model))))
        .max_by(|a, b| a.0.total_cmp(&b.0));
    let best = best.map_or("n/a".to_string(), |(r, l)| format!("{l} r={r:.3}"));
    Ok(format!(
        "evaluate: {} rows over {} dev pairs, best {best}",
        table.rows.len(),
        dev.len()
    ))
}

fn fold_rmse(out: &OutTree, label: &str) -> Result<Vec<f64>> {
    let text = out.read_stage(&art::cv(label), "evaluate")?;
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|rec| {
            let rec = rec?;
            rec[2]
                .parse::<f64>()
                .map_err(|_| Error::input(format!("{}: bad rmse '{}'", art::cv(label), &rec[2])))
        })
        .collect()
}

#[derive(Serialize)]
struct TTestOutput<'a> {
    a: &'a str,
    b: &'a str,
    result: Option<crate::ml::TTestResult>,
}

pub fn ttest(ctx: &mut Ctx, a: &str, b: &str) -> Result<String> {
    let ra = fold_rmse(&ctx.out, a)?;
    let rb = fold_rmse(&ctx.out, b)?;
    let result = match paired_ttest(&ra, &rb) {
        Ok(r) => Some(r),
        Err(Error::Undefined(_)) => None,
        Err(e) => return Err(e),
    };
    ctx.out.write_json(&art::ttest(a, b), &TTestOutput { a, b, result })?;
    Ok(match result {
        Some(r) => format!("ttest: {a} vs {b}: t={:.4} df={} p={:.4}", r.t, r.df, r.p),
        None => format!("ttest: {a} vs {b}: undefined (identical fold RMSE differences)"),
    })
}

pub fn score(ctx: &mut Ctx, model: &Path, features: &Path) -> Result<String> {
    let m = RegressionModel::load(model)?;
    let fm = FeatureMatrix::read_csv(open(features)?)?;
    let x = if m.columns.is_empty() {
        fm
    } else {
        fm.select_columns(&m.columns)?
    };
    let pred = m.predict(&x.rows, &layout_fingerprint(&x.columns))?;
    let stem = model
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    let rows = x
        .pair_ids
        .iter()
        .zip(&pred)
        .zip(&x.gold)
        .map(|((id, p), g)| vec![id.clone(), p.to_string(), g.map(|g| g.to_string()).unwrap_or_default()]);
    let rel = art::scores(&stem);
    ctx.out.write_with(&rel, |w| {
        write_csv_rows(w, &["pair_id", "prediction", "gold_afs"], rows)
    })?;
    let gold: Option<Vec<f64>> = x.gold.iter().copied().collect();
    let mut line = format!("score: {} predictions from {stem}", pred.len());
    if let Some(r) = gold.and_then(|g| pearson_r(&pred, &g).ok()) {
        let _ = write!(line, ", r={r:.3} against gold");
    }
    Ok(line)
}

pub fn export_qualitative(ctx: &mut Ctx) -> Result<String> {
    let cfg = &ctx.cfg;
    let sentences = stage_sentences(&ctx.out, art::SENTENCES, "ingest")?;
    let features = read_matrix(&ctx.out, art::SETASIDE_FEATURES)?;
    let mut aside = read_pairs(open(&ctx.out.stage_input(art::SETASIDE_PAIRS, "featurize")?)?)?;
    let gold: BTreeMap<&str, Option<f64>> = features
        .pair_ids
        .iter()
        .map(String::as_str)
        .zip(features.gold.iter().copied())
        .collect();
    for p in &mut aside {
        p.gold_afs = gold.get(p.pair_id.as_str()).copied().flatten();
    }
    let wanted: Vec<(String, usize, crate::ml::ModelKind)> = cfg
        .model_labels()
        .into_iter()
        .filter(|(l, _, _)| cfg.export_models.is_empty() || cfg.export_models.contains(l))
        .collect();
    let mut models = Vec::with_capacity(wanted.len());
    for (label, row, _) in wanted {
        let p = ctx.out.stage_input(&art::model(&label), "train")?;
        let m = RegressionModel::load(&p)?;
        models.push((label, cfg.experiment.rows[row].groups.clone(), m));
    }
    let table = qualitative_export(&aside, &sentences, &features, &models)?;
    ctx.out.write_with(art::QUALITATIVE, |w| table.write_csv(w))?;
    Ok(format!(
        "export-qualitative: {} set-aside pairs x {} models",
        table.rows.len(),
        table.model_names.len()
    ))
}

/// Commands run by `pipeline`, in order.
pub fn pipeline_steps(cfg: &PipelineConfig) -> Vec<&'static str> {
    let mut steps = vec!["ingest", "filter-aq"];
    if cfg.paths.aq_annotations.is_some() {
        steps.push("bin-report");
    }
    if cfg.paths.pairs.is_none() {
        steps.push("sample-pairs");
    }
    steps.extend(["featurize", "train", "evaluate", "export-qualitative"]);
    steps
}

pub fn run_step(ctx: &mut Ctx, step: &str) -> Result<String> {
    match step {
        "ingest" => ingest(ctx),
        "filter-aq" => filter_aq(ctx),
        "bin-report" => bin_report(ctx),
        "sample-pairs" => sample_pairs(ctx),
        "featurize" => featurize(ctx),
        "train" => train(ctx),
        "evaluate" => evaluate(ctx),
        "export-qualitative" => export_qualitative(ctx),
        other => Err(Error::Internal(format!("unknown pipeline step {other}"))),
    }
}

pub fn pipeline(ctx: &mut Ctx) -> Result<String> {
    let steps = pipeline_steps(&ctx.cfg);
    for step in &steps {
        let line = run_step(ctx, step)?;
        println!("{line}");
    }
    Ok(format!("pipeline: {} steps completed", steps.len()))
}

/// Declared inputs and outputs of a command, for `--dry-run`.
pub fn plan(step: &str, cfg: &PipelineConfig) -> (Vec<String>, Vec<String>) {
    let p = |key: &str, v: &Option<std::path::PathBuf>| v.as_ref().map(|p| format!("paths.{key}={}", p.display()));
    let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let paths = &cfg.paths;
    match step {
        "ingest" => (
            [p("conllu_dir", &paths.conllu_dir), p("corpus_csv", &paths.corpus_csv)]
                .into_iter()
                .flatten()
                .collect(),
            s(&[art::SENTENCES, art::CORPUS_SUMMARY]),
        ),
        "filter-aq" => {
            let mut i = s(&[art::SENTENCES]);
            i.extend(p("dictionary", &paths.dictionary));
            i.extend(match cfg.aq_scorer {
                AqScorerKind::External => p("aq_scores", &paths.aq_scores),
                AqScorerKind::Baseline => p("aq_annotations", &paths.aq_annotations),
            });
            (
                i,
                s(&[
                    art::AQ_SCORES,
                    art::AQ_LENGTHS,
                    art::AQ_BINS,
                    art::AQ_SAMPLE,
                    art::AQ_FILTERED,
                    art::AQ_SUMMARY,
                ]),
            )
        }
        "bin-report" => {
            let mut i = s(&[art::AQ_SCORES]);
            i.extend(p("aq_annotations", &paths.aq_annotations));
            (i, s(&[art::BIN_REPORT_CSV, art::BIN_REPORT_JSON]))
        }
        "sample-pairs" => {
            let mut i = s(&[art::AQ_FILTERED]);
            i.extend(p("sts", &paths.sts));
            (i, s(&[art::CANDIDATES, art::SELECTION]))
        }
        "featurize" => {
            let mut i = s(&[art::SENTENCES]);
            i.push(p("pairs", &paths.pairs).unwrap_or_else(|| art::CANDIDATES.to_string()));
            for (k, v) in [
                ("afs_annotations", &paths.afs_annotations),
                ("lexicon", &paths.lexicon),
                ("embeddings", &paths.embeddings),
                ("sts", &paths.sts),
                ("stopwords", &paths.stopwords),
            ] {
                i.extend(p(k, v));
            }
            (
                i,
                s(&[
                    art::DEV_PAIRS,
                    art::SETASIDE_PAIRS,
                    art::DEV_FEATURES,
                    art::SETASIDE_FEATURES,
                    art::FEATURE_SUMMARY,
                ]),
            )
        }
        "train" => {
            let mut o: Vec<String> = cfg.model_labels().iter().map(|(l, _, _)| art::model(l)).collect();
            o.push(art::MODEL_SUMMARY.to_string());
            (s(&[art::DEV_FEATURES]), o)
        }
        "evaluate" => {
            let mut i = s(&[art::DEV_FEATURES]);
            i.extend(p("afs_annotations", &paths.afs_annotations));
            let mut o = s(&[
                art::TABLE_CSV,
                art::TABLE_TXT,
                art::TTESTS,
                art::TOPLINE,
                art::REPORT_SUMMARY,
            ]);
            o.extend(cfg.model_labels().iter().map(|(l, _, _)| art::cv(l)));
            (i, o)
        }
        "export-qualitative" => {
            let mut i = s(&[art::SENTENCES, art::SETASIDE_PAIRS, art::SETASIDE_FEATURES]);
            i.extend(
                cfg.model_labels()
                    .iter()
                    .filter(|(l, _, _)| cfg.export_models.is_empty() || cfg.export_models.contains(l))
                    .map(|(l, _, _)| art::model(l)),
            );
            (i, s(&[art::QUALITATIVE]))
        }
        _ => (Vec::new(), Vec::new()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let s = vec![
            ParsedSentence::from_raw("a", "t", "p", "Guns don't kill."),
            ParsedSentence::from_raw("b", "t", "p", "x"),
        ];
        let bytes = jsonl(&s).unwrap();
        assert_eq!(parse_jsonl(std::str::from_utf8(&bytes).unwrap(), "x").unwrap(), s);
        let e = parse_jsonl("{}\n", "f.jsonl").unwrap_err();
        assert!(e.to_string().starts_with("f.jsonl:1"));
    }

    #[test]
    fn slugs() {
        assert_eq!(art::model("combined/svr"), "models/combined__svr.json");
        assert_eq!(art::ttest("a/svr", "b/ridge"), "report/ttest/a__svr__vs__b__ridge.json");
    }

    #[test]
    fn pipeline_skips_optional_steps() {
        let mut c = PipelineConfig::default();
        assert!(pipeline_steps(&c).contains(&"sample-pairs"));
        assert!(!pipeline_steps(&c).contains(&"bin-report"));
        c.paths.pairs = Some("p.csv".into());
        c.paths.aq_annotations = Some("a.csv".into());
        let s = pipeline_steps(&c);
        assert!(!s.contains(&"sample-pairs") && s.contains(&"bin-report"));
    }
}
