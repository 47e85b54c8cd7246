//! Command-line front end.
//!
//! Every option can also be set through an `AFS_` environment variable
//! (`AFS_CONFIG`, `AFS_TOPIC`, `AFS_SEED`, `AFS_JOBS`, `AFS_DRY_RUN`,
//! `AFS_OUT`); command-line values win.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use commands::artifacts;
use commands::Ctx;
pub use config::{AqScorerKind, Paths, PipelineConfig};
pub use output::{sha256_hex, write_atomic, Manifest, OutTree, MANIFEST};

use crate::error::{Error, Result};
use crate::features::FeatureGroup;
use crate::ml::{ModelKind, ParamGrid};
use crate::report::{ExperimentConfig, ExperimentRow, TTestPair};
use crate::synth::{self, SynthConfig};

#[derive(Debug, Parser)]
#[command(
    name = "afs",
    version,
    about = "Argument quality filtering and argument facet similarity regression"
)]
pub struct Cli {
    /// Pipeline config file (TOML).
    #[arg(long, global = true, env = "AFS_CONFIG")]
    pub config: Option<PathBuf>,
    /// Topic name; overrides `topic` in the config.
    #[arg(long, global = true, env = "AFS_TOPIC")]
    pub topic: Option<String>,
    /// Global seed; overrides every seed in the config.
    #[arg(long, global = true, env = "AFS_SEED")]
    pub seed: Option<u64>,
    /// Worker threads for data-parallel stages.
    #[arg(long, global = true, env = "AFS_JOBS", default_value_t = 1)]
    pub jobs: usize,
    /// Validate the config and print the plan without writing anything.
    #[arg(long, global = true, env = "AFS_DRY_RUN")]
    pub dry_run: bool,
    /// Output tree.
    #[arg(long, global = true, env = "AFS_OUT", default_value = "afs-out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read CoNLL-U / raw CSV sentences, drop duplicates.
    Ingest,
    /// Rescore AQ, filter by length, bin and sample.
    FilterAq,
    /// Yes-rate per AQ bin against annotated labels.
    BinReport,
    /// Select STS-prescored candidate pairs under the per-sentence cap.
    SamplePairs,
    /// Split dev / set-aside and compute feature matrices.
    Featurize,
    /// Fit one model per experiment row on the dev set.
    Train,
    /// Nested cross-validation table, t-tests and human topline.
    Evaluate,
    /// Paired t-test over fold RMSEs of two evaluated rows.
    Ttest {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Predict with a saved model on a feature CSV.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
    },
    /// Set-aside pairs with every model's prediction and the gold score.
    ExportQualitative,
    /// Run all stages in order.
    Pipeline,
    /// Write a synthetic corpus and a matching config into `--out`.
    GenerateSynthetic {
        #[arg(long, default_value_t = 200)]
        pairs: usize,
    },
    /// Print the effective config as TOML.
    ShowConfig,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::FilterAq => "filter-aq",
            Command::BinReport => "bin-report",
            Command::SamplePairs => "sample-pairs",
            Command::Featurize => "featurize",
            Command::Train => "train",
            Command::Evaluate => "evaluate",
            Command::Ttest { .. } => "ttest",
            Command::Score { .. } => "score",
            Command::ExportQualitative => "export-qualitative",
            Command::Pipeline => "pipeline",
            Command::GenerateSynthetic { .. } => "generate-synthetic",
            Command::ShowConfig => "show-config",
        }
    }
}

/// Loads the config named on the command line (or the defaults) and
/// applies the `--topic` / `--seed` overrides.
pub fn effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(t) = &cli.topic {
        cfg.topic = t.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    cfg.apply_seed();
    cfg.validate()?;
    Ok(cfg)
}

/// Config written next to a generated synthetic corpus: every input points
/// at the generated files and the experiment is trimmed so the full
/// pipeline finishes in seconds.
pub fn synthetic_pipeline_config(seed: u64) -> PipelineConfig {
    use FeatureGroup::*;
    use ModelKind::*;
    let hand = [NgramCosine, LiwcDepOverlap, Rouge, Sts];
    let all = [NgramCosine, LiwcDepOverlap, Rouge, Sts, W2vConcat];
    let rel = |f: &str| Some(PathBuf::from(f));
    let mut cfg = PipelineConfig {
        topic: "synthetic".into(),
        seed: Some(seed),
        paths: Paths {
            conllu_dir: rel(synth::files::CONLLU),
            lexicon: rel(synth::files::LEXICON),
            embeddings: rel(synth::files::EMBEDDINGS),
            aq_annotations: rel(synth::files::AQ),
            afs_annotations: rel(synth::files::AFS),
            pairs: rel(synth::files::PAIRS),
            ..Paths::default()
        },
        grid: ParamGrid {
            ridge_alpha: vec![0.1, 1.0, 10.0],
            svr_c: vec![1.0, 10.0],
            svr_gamma: vec![0.1, 1.0],
            svr_epsilon: vec![0.1],
            scale_gamma_by_features: true,
        },
        experiment: ExperimentConfig {
            rows: vec![
                ExperimentRow::new("ngram", &[NgramCosine], &[Ridge, Svr]),
                ExperimentRow::new("rouge", &[Rouge], &[Svr]),
                ExperimentRow::new("hand_engineered", &hand, &[Svr]),
                ExperimentRow::new("w2v_concat", &[W2vConcat], &[Ridge]),
                ExperimentRow::new("combined", &all, &[Ridge, Svr]),
            ],
            ttest_pairs: vec![
                TTestPair {
                    a: "combined/svr".into(),
                    b: "ngram/svr".into(),
                },
                TTestPair {
                    a: "hand_engineered/svr".into(),
                    b: "combined/svr".into(),
                },
            ],
            ..ExperimentConfig::default()
        },
        ..PipelineConfig::default()
    };
    cfg.aq.sample_per_bin = 20;
    cfg.apply_seed();
    cfg
}

fn generate_synthetic(out: &Path, pairs: usize, seed: u64, dry_run: bool) -> Result<String> {
    let scfg = SynthConfig {
        n_pairs: pairs,
        seed,
        ..SynthConfig::default()
    };
    scfg.validate()?;
    let cfg = synthetic_pipeline_config(seed);
    if dry_run {
        println!(
            "plan generate-synthetic: writes {} corpus files and config.toml into {}",
            6,
            out.display()
        );
        return Ok("dry run: nothing written".into());
    }
    let corpus = synth::generate(&scfg)?;
    let tmp = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let files = synth::write_corpus(&corpus, tmp.path())?;
    for f in &files {
        let bytes = std::fs::read(f).map_err(|e| Error::io(f, e))?;
        write_atomic(&out.join(f.file_name().unwrap_or_default()), &bytes)?;
    }
    write_atomic(&out.join("config.toml"), cfg.to_toml()?.as_bytes())?;
    Ok(format!(
        "generate-synthetic: {} sentences, {} pairs written to {}",
        corpus.sentences.len(),
        corpus.pairs.len(),
        out.display()
    ))
}

fn print_plan(steps: &[&str], cfg: &PipelineConfig, out: &Path) {
    for step in steps {
        let (inputs, outputs) = commands::plan(step, cfg);
        println!("plan {step}:");
        println!(
            "  reads:  {}",
            if inputs.is_empty() {
                "-".into()
            } else {
                inputs.join(", ")
            }
        );
        println!(
            "  writes: {}",
            outputs
                .iter()
                .map(|o| out.join(o).display().to_string())
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
}

/// Executes a parsed command line and returns its summary line.
pub fn execute(cli: Cli) -> Result<String> {
    if cli.jobs == 0 {
        return Err(Error::input("--jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    pool.install(|| execute_in_pool(cli))
}

fn execute_in_pool(cli: Cli) -> Result<String> {
    if let Command::GenerateSynthetic { pairs } = cli.command {
        return generate_synthetic(&cli.out, pairs, cli.seed.unwrap_or(0), cli.dry_run);
    }
    let cfg = effective_config(&cli)?;
    if let Command::ShowConfig = cli.command {
        return cfg.to_toml();
    }
    cfg.paths.check_exist()?;
    let steps: Vec<&str> = match &cli.command {
        Command::Pipeline => commands::pipeline_steps(&cfg),
        c => vec![c.name()],
    };
    if cli.dry_run {
        print_plan(&steps, &cfg, &cli.out);
        return Ok(format!(
            "dry run: config valid, {} step(s) planned, nothing written",
            steps.len()
        ));
    }
    let mut ctx = Ctx {
        cfg,
        out: OutTree::new(&cli.out),
    };
    let result = match &cli.command {
        Command::Ttest { a, b } => commands::ttest(&mut ctx, a, b),
        Command::Score { model, features } => commands::score(&mut ctx, model, features),
        Command::Pipeline => commands::pipeline(&mut ctx),
        c => commands::run_step(&mut ctx, c.name()),
    };
    let wrote = !ctx.out.written().is_empty();
    if wrote {
        ctx.out.finish()?;
    }
    result
}

/// Exit status for an error: 1 for input and validation problems, 2 for
/// internal failures.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_user_error() {
        1
    } else {
        2
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
/// Panics are caught and reported as internal failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match std::panic::catch_unwind(move || execute(cli)) {
        Ok(Ok(line)) => {
            println!("{line}");
            0
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
        Err(_) => {
            eprintln!("error: internal failure (panic)");
            2
        }
    }
}
