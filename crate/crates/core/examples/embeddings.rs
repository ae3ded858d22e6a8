//! Word-vector classifiers: average pooling, max pooling and a small text
//! CNN, all feeding a weighted-BCE MLP.

use lexarea::corpus::{finalize_label_space, label_matrix, normalize_labels, LabelMapping};
use lexarea::embed::{EmbedClassifier, EmbedConfig, EmbeddingSource, PoolingMode};
use lexarea::eval::{compute_metrics, confusion};
use lexarea::experiment::{synth_corpus, SynthOptions};
use lexarea::text::{TokenStream, Tokenizer};

fn main() -> lexarea::Result<()> {
    let dir = std::env::temp_dir().join("lexarea-embeddings-example");
    let corpus = synth_corpus(&SynthOptions::new(600, 10, 3))?;
    let paths = corpus.write(&dir)?;
    let mapping = LabelMapping::new(corpus.mapping.clone())?;
    let (space, docs) = finalize_label_space(&normalize_labels(&corpus.docs, &mapping), 30)?;
    let tokenizer = Tokenizer::default();
    let tokens: Vec<TokenStream> = docs.iter().map(|d| tokenizer.tokenize(&d.text)).collect();
    let y = label_matrix(&docs, &space);
    let (train, test) = (0..450, 450..docs.len());

    for mode in [PoolingMode::Average, PoolingMode::Max, PoolingMode::Conv] {
        let mut config = EmbedConfig::new(mode);
        config.train.epochs = if mode == PoolingMode::Conv { 5 } else { 20 };
        config.encoder.filters_per_width = 16;
        let source = EmbeddingSource::File(&paths.embeddings);
        let model = EmbedClassifier::fit(&tokens[train.clone()], &y[train.clone()], config, source)?;
        let loss = model.history();
        let scores = model.predict(&tokens[test.clone()])?;
        let r = compute_metrics(&confusion(&y[test.clone()], &scores.predictions())?, "embed", 1.0);
        println!(
            "{mode:?}: loss {:.3} -> {:.3}, macro-F1 {:.3}, micro-F1 {:.3}",
            loss[0],
            loss[loss.len() - 1],
            r.macro_avg.f1,
            r.micro_avg.f1
        );
    }
    Ok(())
}
