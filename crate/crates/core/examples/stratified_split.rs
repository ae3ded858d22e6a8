//! Hold out 10% by iterative stratification, then carve nested training
//! subsets and compare label shares.

use lexarea::corpus::{finalize_label_space, normalize_labels, LabelMapping};
use lexarea::experiment::{synth_corpus, SynthOptions};
use lexarea::split::{fraction_label, make_manifest};

fn main() -> lexarea::Result<()> {
    let corpus = synth_corpus(&SynthOptions::new(1000, 10, 36))?;
    let mapping = LabelMapping::new(corpus.mapping.clone())?;
    let (space, docs) = finalize_label_space(&normalize_labels(&corpus.docs, &mapping), 30)?;

    let manifest = make_manifest(&docs, &space, 0.1, &[0.1, 0.5, 1.0], 36)?;
    println!("holdout: {} docs", manifest.holdout.len());
    for (f, ids) in &manifest.subsets {
        println!("{:>5}: {} docs", fraction_label(*f), ids.len());
    }

    println!("\n{:<18} {:>6} {:>8} {:>8}", "label", "total", "holdout", "ideal");
    for l in 0..space.len() {
        let with: Vec<_> = docs.iter().filter(|d| d.final_labels.contains(&l)).collect();
        let held = with.iter().filter(|d| manifest.holdout.contains(&d.id)).count();
        println!(
            "{:<18} {:>6} {:>8} {:>8.1}",
            space.name(l),
            with.len(),
            held,
            0.1 * with.len() as f64
        );
    }
    Ok(())
}
