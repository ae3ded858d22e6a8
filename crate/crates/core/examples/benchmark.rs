//! The full experiment on a synthetic corpus: synth, ingest, split, then
//! every model on every training subset.
//!
//!     LEXAREA_WORKERS=2 cargo run --release --example benchmark -- [out_dir]

use lexarea::experiment::{
    cmd_benchmark, cmd_ingest, cmd_split, cmd_synth, workers_from_env, ExperimentConfig, SynthOptions, Workspace,
};

fn main() -> lexarea::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("lexarea-benchmark"));
    let paths = cmd_synth(&SynthOptions::new(600, 12, 36), out.join("synth"))?;

    let mut config = ExperimentConfig::from_toml_str(
        r#"
        top_k = 10
        models = ["base", "count_25", "lsa_50", "avg"]

        [embed]
        epochs = 15
        "#,
    )?;
    config.corpus = Some(paths.corpus);
    config.mapping = Some(paths.mapping);
    config.embeddings = Some(paths.embeddings);
    config.out = out.join("run");

    cmd_ingest(&config)?;
    cmd_split(&config)?;
    let ws = Workspace::load(&config)?;
    let report = cmd_benchmark(&config, &ws, workers_from_env())?;
    print!("{}", report.render());
    println!("\nartifacts in {}", config.out.display());
    Ok(())
}
