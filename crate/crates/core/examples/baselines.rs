//! The two reference baselines: predict every frequent label, and count
//! keyword hits from each label's associated terms.

use lexarea::baseline::{
    build_associated_terms, count_match_predict, fit_dummy, label_stopwords, predict_dummy, PhraseAutomaton,
};
use lexarea::corpus::{build_sublabel_index, finalize_label_space, label_matrix, normalize_labels, LabelMapping};
use lexarea::eval::{compute_metrics, confusion};
use lexarea::experiment::{synth_corpus, SynthOptions};
use lexarea::text::{TokenStream, Tokenizer};

fn main() -> lexarea::Result<()> {
    let automaton = PhraseAutomaton::new(&[
        vec!["duty".to_string(), "of".into(), "care".into()],
        vec!["care".to_string()],
    ]);
    let text: TokenStream = "a duty of care and a further duty of care"
        .split(' ')
        .map(String::from)
        .collect();
    println!("phrase counts: {:?}", automaton.count(&text));

    let corpus = synth_corpus(&SynthOptions::new(800, 12, 5))?;
    let mapping = LabelMapping::new(corpus.mapping.clone())?;
    let (space, docs) = finalize_label_space(&normalize_labels(&corpus.docs, &mapping), 30)?;
    let (train, test) = docs.split_at(600);
    let tokenizer = Tokenizer::default();
    let test_tokens: Vec<TokenStream> = test.iter().map(|d| tokenizer.tokenize(&d.text)).collect();
    let gold = label_matrix(test, &space);

    let dummy = fit_dummy(train, &space);
    let names: Vec<&str> = dummy.predicted_labels.iter().map(|&l| space.name(l)).collect();
    println!("base_pdf predicts {names:?} for every document");
    let scores = predict_dummy(&dummy, test.len());
    let r = compute_metrics(&confusion(&gold, &scores.predictions())?, "base_pdf", 1.0);
    println!(
        "base_pdf   macro-F1 {:.3}  micro-F1 {:.3}",
        r.macro_avg.f1, r.micro_avg.f1
    );

    let terms = build_associated_terms(
        &build_sublabel_index(train, &space),
        &space,
        &label_stopwords(),
        &tokenizer,
    );
    for m in [1, 3, 5, 10, 25] {
        let scores = count_match_predict(&test_tokens, &terms, m);
        let r = compute_metrics(&confusion(&gold, &scores.predictions())?, "count", 1.0);
        println!(
            "count_{m:<3}  macro-F1 {:.3}  micro-F1 {:.3}",
            r.macro_avg.f1, r.micro_avg.f1
        );
    }
    Ok(())
}
