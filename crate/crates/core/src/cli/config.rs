//! Pipeline configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aq::AqConfig;
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureGroup};
use crate::ml::ParamGrid;
use crate::pairing::PairSamplingConfig;
use crate::report::ExperimentConfig;

/// Input files. Relative paths are resolved against the directory holding
/// the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus_csv: Option<PathBuf>,
    pub conllu_dir: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub aq_scores: Option<PathBuf>,
    pub aq_annotations: Option<PathBuf>,
    pub afs_annotations: Option<PathBuf>,
    pub sts: Option<PathBuf>,
    /// Pre-selected pairs; when set, `sample-pairs` is skipped by `pipeline`
    /// and `featurize` reads this file instead of the sampled candidates.
    pub pairs: Option<PathBuf>,
}

impl Paths {
    fn entries(&self) -> [(&'static str, &Option<PathBuf>); 11] {
        [
            ("corpus_csv", &self.corpus_csv),
            ("conllu_dir", &self.conllu_dir),
            ("dictionary", &self.dictionary),
            ("stopwords", &self.stopwords),
            ("lexicon", &self.lexicon),
            ("embeddings", &self.embeddings),
            ("aq_scores", &self.aq_scores),
            ("aq_annotations", &self.aq_annotations),
            ("afs_annotations", &self.afs_annotations),
            ("sts", &self.sts),
            ("pairs", &self.pairs),
        ]
    }

    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.corpus_csv,
            &mut self.conllu_dir,
            &mut self.dictionary,
            &mut self.stopwords,
            &mut self.lexicon,
            &mut self.embeddings,
            &mut self.aq_scores,
            &mut self.aq_annotations,
            &mut self.afs_annotations,
            &mut self.sts,
            &mut self.pairs,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Every configured path must exist.
    pub fn check_exist(&self) -> Result<()> {
        for (key, p) in self.entries() {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(Error::input(format!("paths.{key}: {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AqScorerKind {
    /// Scores from `paths.aq_scores`, falling back to scores carried by the
    /// corpus itself.
    #[default]
    External,
    /// Ridge baseline trained on `paths.aq_annotations`.
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub topic: String,
    /// Overrides every per-stage seed when set.
    pub seed: Option<u64>,
    pub paths: Paths,
    pub aq: AqConfig,
    pub aq_scorer: AqScorerKind,
    pub pairing: PairSamplingConfig,
    pub features: FeatureConfig,
    pub grid: ParamGrid,
    pub experiment: ExperimentConfig,
    /// Row labels (`name/kind`) shown in the qualitative export; empty means
    /// every experiment row.
    pub export_models: Vec<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            topic: String::new(),
            seed: None,
            paths: Paths::default(),
            aq: AqConfig::default(),
            aq_scorer: AqScorerKind::External,
            pairing: PairSamplingConfig::default(),
            features: FeatureConfig::default(),
            grid: ParamGrid::default(),
            experiment: ExperimentConfig::default(),
            export_models: Vec::new(),
        }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.paths.resolve(&base);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.apply_seed();
    }

    /// Copies the global seed, if any, into every seeded stage, and the
    /// topic into the experiment.
    pub fn apply_seed(&mut self) {
        if let Some(s) = self.seed {
            self.aq.rng_seed = s;
            self.pairing.rng_seed = s;
            self.experiment.split_seed = s;
            self.experiment.cv_seed = s;
        }
        if !self.topic.is_empty() {
            self.experiment.topic = self.topic.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.aq.validate()?;
        self.pairing.validate()?;
        self.features.validate()?;
        self.experiment.validate()?;
        let g = &self.grid;
        if g.ridge_alpha.is_empty() || g.svr_c.is_empty() || g.svr_gamma.is_empty() || g.svr_epsilon.is_empty() {
            return Err(Error::config("every hyperparameter grid list needs at least one value"));
        }
        for l in &self.export_models {
            if !self.model_labels().iter().any(|(x, _, _)| x == l) {
                return Err(Error::config(format!("export_models refers to unknown row '{l}'")));
            }
        }
        Ok(())
    }

    /// Groups computed by `featurize`: the configured groups plus any group
    /// an experiment row needs, in canonical order.
    pub fn feature_groups(&self) -> Vec<FeatureGroup> {
        let need = self.experiment.required_groups();
        FeatureGroup::ALL
            .into_iter()
            .filter(|g| self.features.groups.contains(g) || need.contains(g))
            .collect()
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            groups: self.feature_groups(),
            ..self.features.clone()
        }
    }

    /// `(label, row index, model kind)` for every experiment job.
    pub fn model_labels(&self) -> Vec<(String, usize, crate::ml::ModelKind)> {
        self.experiment
            .rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                r.models
                    .iter()
                    .map(move |&k| (crate::report::row_label(&r.name, k), i, k))
            })
            .collect()
    }
}
