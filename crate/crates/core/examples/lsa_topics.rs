//! TF-IDF, truncated SVD and a one-vs-rest linear SVM, with the top terms
//! of the leading topics.

use lexarea::corpus::{finalize_label_space, label_matrix, normalize_labels, LabelMapping};
use lexarea::eval::{compute_metrics, confusion};
use lexarea::experiment::{synth_corpus, SynthOptions};
use lexarea::lsa::{top_topic_terms, LsaClassifier, LsaConfig};
use lexarea::text::{TokenStream, Tokenizer};

fn main() -> lexarea::Result<()> {
    let corpus = synth_corpus(&SynthOptions::new(800, 12, 9))?;
    let mapping = LabelMapping::new(corpus.mapping.clone())?;
    let (space, docs) = finalize_label_space(&normalize_labels(&corpus.docs, &mapping), 30)?;
    let tokenizer = Tokenizer::default();
    let tokens: Vec<TokenStream> = docs.iter().map(|d| tokenizer.tokenize(&d.text)).collect();
    let y = label_matrix(&docs, &space);
    let (train, test) = (0..600, 600..docs.len());

    let config = LsaConfig {
        k: 50,
        ..LsaConfig::default()
    };
    let model = LsaClassifier::fit(&tokens[train.clone()], &y[train], config)?;
    println!("{} terms, {} topics", model.vocab.len(), model.topics.k);
    for t in 0..5 {
        let terms = top_topic_terms(&model.topics, &model.vocab, t, 6)?;
        let words: Vec<&str> = terms.iter().map(|(w, _)| w.as_str()).collect();
        println!("Topic {}: {}", t + 1, words.join(", "));
    }

    let scores = model.predict(&tokens[test.clone()])?;
    let r = compute_metrics(&confusion(&y[test], &scores.predictions())?, "lsa_50", 1.0);
    println!(
        "\nlsa_50 macro P {:.3} R {:.3} F1 {:.3}",
        r.macro_avg.precision, r.macro_avg.recall, r.macro_avg.f1
    );
    Ok(())
}
