use std::collections::{HashMap, HashSet};

use super::{AqLabel, AqProvenance, AqScorer};
use crate::corpus::{count_dictionary_words, is_punct, Dictionary, ParsedSentence};
use crate::error::{Error, Result};
use crate::ml::{fit_model, HyperParams, RegressionModel, SmoOptions};

pub const MIN_TRAINING_SENTENCES: usize = 50;
const VOCAB_SIZE: usize = 1000;
const RIDGE_ALPHA: f64 = 1.0;
const FINGERPRINT: &str = "aq-baseline";

/// Ridge regressor over surface features and unigram presence, with
/// predictions clipped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct BaselineAqScorer {
    vocab: Vec<String>,
    vocab_index: HashMap<String, usize>,
    dict: Dictionary,
    model: Option<RegressionModel>,
    /// Set instead of `model` when training data had a single class.
    constant: Option<f64>,
}

impl BaselineAqScorer {
    fn features(&self, s: &ParsedSentence) -> Vec<f64> {
        let n = s.len().max(1) as f64;
        let lower = s.lower_surfaces();
        let types: HashSet<&str> = lower.iter().map(String::as_str).collect();
        let punct = s
            .tokens
            .iter()
            .map(|t| t.surface.chars().filter(|&c| is_punct(c)).count())
            .sum::<usize>();
        let mut x = vec![
            s.len() as f64,
            count_dictionary_words(s, &self.dict) as f64 / n,
            if s.has_verb() { 1.0 } else { 0.0 },
            types.len() as f64 / n,
            punct as f64,
        ];
        let mut present = vec![0.0; self.vocab.len()];
        for w in &lower {
            if let Some(&i) = self.vocab_index.get(w) {
                present[i] = 1.0;
            }
        }
        x.extend(present);
        x
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }
}

impl AqScorer for BaselineAqScorer {
    fn score(&self, s: &ParsedSentence) -> Result<f64> {
        if let Some(c) = self.constant {
            return Ok(c);
        }
        let model = self.model.as_ref().expect("model or constant is set");
        let y = model.predict(&[self.features(s)], FINGERPRINT)?[0];
        Ok(y.clamp(0.0, 1.0))
    }

    fn provenance(&self) -> AqProvenance {
        AqProvenance::TrainedBaseline
    }
}

/// Fits the baseline on labeled sentences (`Yes` = 1, `No` = 0). The
/// unigram vocabulary is the 1000 most frequent lowercased surfaces, ties
/// broken alphabetically.
pub fn train_baseline_aq_scorer(labeled: &[(ParsedSentence, AqLabel)], dict: &Dictionary) -> Result<BaselineAqScorer> {
    if labeled.len() < MIN_TRAINING_SENTENCES {
        return Err(Error::input(format!(
            "baseline AQ scorer needs at least {MIN_TRAINING_SENTENCES} labeled sentences, got {}",
            labeled.len()
        )));
    }
    let mut freq: HashMap<String, usize> = HashMap::new();
    for (s, _) in labeled {
        for w in s.lower_surfaces() {
            *freq.entry(w).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(VOCAB_SIZE);
    let vocab: Vec<String> = ranked.into_iter().map(|(w, _)| w).collect();
    let vocab_index = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();

    let y: Vec<f64> = labeled
        .iter()
        .map(|(_, l)| if *l == AqLabel::Yes { 1.0 } else { 0.0 })
        .collect();
    let mut scorer = BaselineAqScorer {
        vocab,
        vocab_index,
        dict: dict.clone(),
        model: None,
        constant: None,
    };
    if y.iter().all(|&v| v == y[0]) {
        scorer.constant = Some(y[0]);
        return Ok(scorer);
    }
    let x: Vec<Vec<f64>> = labeled.iter().map(|(s, _)| scorer.features(s)).collect();
    scorer.model = Some(fit_model(
        HyperParams::Ridge { alpha: RIDGE_ALPHA },
        &x,
        &y,
        FINGERPRINT,
        SmoOptions::default(),
    )?);
    Ok(scorer)
}
