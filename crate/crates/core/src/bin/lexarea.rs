use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lexarea::eval::{render_report, Metric};
use lexarea::experiment::{self, ExperimentConfig, Layout, ModelSpec, SynthOptions, Workspace};
use lexarea::Result;

#[derive(Parser)]
#[command(
    name = "lexarea",
    version,
    about = "Multi-label legal-area classification experiments"
)]
struct Cli {
    /// Seed for every random choice in the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML experiment configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Benchmark worker threads.
    #[arg(long, global = true, env = "LEXAREA_WORKERS", default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-topic corpus, label mapping and word vectors.
    Synth {
        #[arg(long, default_value_t = 2000)]
        docs: usize,
        #[arg(long, default_value_t = 36)]
        labels: usize,
    },
    /// Normalize labels and keep the top-k areas plus `others`.
    Ingest {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Stratified holdout and nested training subsets.
    Split {
        #[arg(long)]
        holdout: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        subsets: Option<Vec<f64>>,
    },
    /// Fit one model on one training subset and save a checkpoint.
    Train {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 1.0)]
        subset: f64,
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Score the holdout with a checkpoint.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Score prediction files against the holdout.
    Evaluate {
        /// Defaults to every file in `<out>/predictions`.
        files: Vec<PathBuf>,
    },
    /// Every model on every subset, with reports.
    Benchmark {
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Top terms of the leading LSA topics.
    Topics {
        #[arg(long, default_value_t = 250)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        topics: usize,
        #[arg(long, default_value_t = 10)]
        terms: usize,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_toml_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    match &cli.command {
        Command::Ingest { corpus, mapping, top_k } => {
            config.corpus = corpus.clone().or(config.corpus);
            config.mapping = mapping.clone().or(config.mapping);
            config.top_k = top_k.unwrap_or(config.top_k);
        }
        Command::Split { holdout, subsets } => {
            config.holdout = holdout.unwrap_or(config.holdout);
            config.subsets = subsets.clone().unwrap_or(config.subsets);
        }
        Command::Train { embeddings, .. } => {
            config.embeddings = embeddings.clone().or(config.embeddings);
        }
        Command::Benchmark { models, embeddings } => {
            config.models = models.clone().unwrap_or(config.models);
            config.embeddings = embeddings.clone().or(config.embeddings);
        }
        _ => {}
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<bool> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Synth { docs, labels } => {
            let paths = experiment::cmd_synth(&SynthOptions::new(*docs, *labels, config.seed), &config.out)?;
            println!("corpus: {}", paths.corpus.display());
            println!("mapping: {}", paths.mapping.display());
            println!("embeddings: {}", paths.embeddings.display());
        }
        Command::Ingest { .. } => {
            let (space, docs) = experiment::cmd_ingest(&config)?;
            println!("{} documents, {} labels", docs.len(), space.len());
        }
        Command::Split { .. } => {
            let m = experiment::cmd_split(&config)?;
            println!("seed: {}", m.seed);
            println!("holdout: {}", m.holdout.len());
            for (f, ids) in &m.subsets {
                println!("{}: {}", lexarea::split::fraction_label(*f), ids.len());
            }
        }
        Command::Train { model, subset, .. } => {
            let spec: ModelSpec = model.parse()?;
            let ws = Workspace::load(&config)?;
            let path = experiment::cmd_train(&config, &ws, &spec, *subset)?;
            println!("{}", path.display());
        }
        Command::Predict { checkpoint } => {
            let ws = Workspace::load(&config)?;
            println!("{}", experiment::cmd_predict(&config, &ws, checkpoint)?.display());
        }
        Command::Evaluate { files } => {
            let ws = Workspace::load(&config)?;
            let files = if files.is_empty() {
                prediction_files(&config)?
            } else {
                files.clone()
            };
            let reports = experiment::cmd_evaluate(&ws, &files)?;
            println!("seed: {}", config.seed);
            for metric in Metric::ALL {
                println!();
                print!("{}", render_report(&reports, metric));
            }
        }
        Command::Benchmark { .. } => {
            let ws = Workspace::load(&config)?;
            let report = experiment::cmd_benchmark(&config, &ws, cli.workers)?;
            for c in &report.cells {
                eprintln!(
                    "{:>10} {:>5} {:7.2}s",
                    c.model,
                    lexarea::split::fraction_label(c.subset),
                    c.seconds
                );
            }
            print!("{}", report.render());
            return Ok(!report.partial);
        }
        Command::Topics { k, topics, terms } => {
            let ws = Workspace::load(&config)?;
            print!("{}", experiment::cmd_topics(&config, &ws, *k, *topics, *terms)?);
        }
    }
    Ok(true)
}

fn prediction_files(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = Layout::new(&config.out).out.join("predictions");
    let entries = std::fs::read_dir(&dir).map_err(|e| lexarea::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
