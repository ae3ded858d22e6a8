//! Generate a planted-topic corpus, resolve label aliases and keep the
//! most frequent areas.
//!
//!     cargo run --example synth_ingest -- [out_dir]

use lexarea::corpus::{build_sublabel_index, finalize_label_space, normalize_labels, LabelMapping};
use lexarea::experiment::{synth_corpus, SynthOptions};

fn main() -> lexarea::Result<()> {
    let corpus = synth_corpus(&SynthOptions::new(500, 14, 7))?;
    if let Some(out) = std::env::args().nth(1) {
        let paths = corpus.write(&out)?;
        println!("wrote {}", paths.corpus.display());
    }

    let first = &corpus.docs[0];
    println!("{}: {:?}", first.id, first.raw_labels);
    println!("{}...", &first.text[..first.text.len().min(90)]);

    let mapping = LabelMapping::new(corpus.mapping.clone())?;
    let resolved = normalize_labels(&corpus.docs, &mapping);
    let (space, docs) = finalize_label_space(&resolved, 10)?;
    println!("\n{} labels after top-10 truncation:", space.len());
    for (name, count) in space.labels.iter().zip(&space.counts) {
        println!("  {name:<20} {count}");
    }

    let subs = build_sublabel_index(&docs, &space);
    if let Some(phrases) = subs.get(0) {
        let sample: Vec<&str> = phrases.iter().take(4).map(String::as_str).collect();
        println!("\nsub-labels under {}: {}", space.name(0), sample.join(" | "));
    }
    Ok(())
}
