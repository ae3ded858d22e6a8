//! Score a prediction file written by any producer and render the
//! macro [micro] table.

use lexarea::corpus::LabelSpace;
use lexarea::eval::{compute_metrics, confusion, format_cell, render_report, Metric};
use lexarea::scores::{read_predictions, write_predictions, ScoreMatrix, ThresholdRule};

fn main() -> lexarea::Result<()> {
    let space = LabelSpace::from_json(
        r#"{"labels": ["tort", "contract", "others"], "others": "others",
            "counts": {"tort": 2, "contract": 2, "others": 1}}"#,
    )?;
    let ids: Vec<String> = ["j1", "j2", "j3", "j4"].iter().map(|s| s.to_string()).collect();
    let gold = vec![
        vec![true, false, false],
        vec![true, true, false],
        vec![false, true, false],
        vec![false, false, true],
    ];

    let scores = ScoreMatrix::from_rows(
        vec![
            vec![0.9, 0.2, 0.1],
            vec![0.7, 0.4, 0.0],
            vec![0.6, 0.8, 0.1],
            vec![0.1, 0.1, 0.3],
        ],
        3,
        ThresholdRule::Half,
    )?;
    let path = std::env::temp_dir().join("lexarea-evaluate-example.jsonl");
    write_predictions(&path, &ids, &scores, &space, "toy")?;
    println!("{}", std::fs::read_to_string(&path).unwrap_or_default());

    let read = read_predictions(&path, &ids, &space, ThresholdRule::Half)?;
    let mut reports = Vec::new();
    for (subset, rows) in [(0.5, read.predictions()), (1.0, gold.clone())] {
        reports.push(compute_metrics(&confusion(&gold, &rows)?, "toy", subset));
    }
    for (name, prf) in space.labels.iter().zip(&reports[0].per_label) {
        println!("{name:<9} P {:.2} R {:.2} F1 {:.2}", prf.precision, prf.recall, prf.f1);
    }
    println!();
    print!("{}", render_report(&reports, Metric::F1));
    println!("\n{}", format_cell(0.632, 0.733));
    Ok(())
}
