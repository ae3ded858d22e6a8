//! Confusion counts, micro/macro precision-recall-F1, and "Macro [Micro]"
//! report tables.
//!
//! Undefined ratios (0/0) evaluate to 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::split::fraction_label;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub per_label: Vec<LabelCounts>,
}

impl ConfusionCounts {
    pub fn total(&self) -> LabelCounts {
        self.per_label
            .iter()
            .fold(LabelCounts::default(), |acc, c| LabelCounts {
                tp: acc.tp + c.tp,
                fp: acc.fp + c.fp,
                fn_: acc.fn_ + c.fn_,
            })
    }
}

/// Per-label tp/fp/fn between two docs × labels binary matrices.
pub fn confusion(gold: &[Vec<bool>], pred: &[Vec<bool>]) -> Result<ConfusionCounts> {
    if gold.len() != pred.len() {
        return Err(Error::shape(format!("{} rows", gold.len()), pred.len()));
    }
    let n_labels = gold.first().or(pred.first()).map_or(0, Vec::len);
    let mut per_label = vec![LabelCounts::default(); n_labels];
    for (g, p) in gold.iter().zip(pred) {
        if g.len() != n_labels || p.len() != n_labels {
            return Err(Error::shape(
                format!("{n_labels} columns"),
                format!("{}/{}", g.len(), p.len()),
            ));
        }
        for (c, (&g, &p)) in per_label.iter_mut().zip(g.iter().zip(p)) {
            match (g, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(ConfusionCounts { per_label })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Prf {
    pub fn from_counts(c: LabelCounts) -> Self {
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self { precision, recall, f1 }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::F1 => self.f1,
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    /// Training subset as a fraction of the non-holdout documents.
    pub subset: f64,
    pub per_label: Vec<Prf>,
    pub macro_avg: Prf,
    pub micro_avg: Prf,
}

/// Macro scores average per-label metrics (including per-label F1) with equal
/// weight; micro scores come from the summed counts.
pub fn compute_metrics(counts: &ConfusionCounts, model: &str, subset: f64) -> MetricsReport {
    let per_label: Vec<Prf> = counts.per_label.iter().map(|&c| Prf::from_counts(c)).collect();
    let n = per_label.len().max(1) as f64;
    let macro_avg = Prf {
        precision: per_label.iter().map(|p| p.precision).sum::<f64>() / n,
        recall: per_label.iter().map(|p| p.recall).sum::<f64>() / n,
        f1: per_label.iter().map(|p| p.f1).sum::<f64>() / n,
    };
    MetricsReport {
        model: model.to_string(),
        subset,
        per_label,
        macro_avg,
        micro_avg: Prf::from_counts(counts.total()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    F1,
    Precision,
    Recall,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::F1, Metric::Precision, Metric::Recall];

    pub fn title(self) -> &'static str {
        match self {
            Metric::F1 => "F1 Scores",
            Metric::Precision => "Precision",
            Metric::Recall => "Recall",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::F1 => "f1",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
        }
    }
}

/// `"63.2 [73.3]"`: macro then micro, as percentages with one decimal.
pub fn format_cell(macro_score: f64, micro_score: f64) -> String {
    format!("{:.1} [{:.1}]", macro_score * 100.0, micro_score * 100.0)
}

/// Renders one table: a row per model (first-appearance order), a column per
/// subset (ascending fraction). Missing cells print as `-`.
pub fn render_report(reports: &[MetricsReport], layout: Metric) -> String {
    let mut models: Vec<&str> = Vec::new();
    let mut subsets: Vec<f64> = Vec::new();
    for r in reports {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
        if !subsets.iter().any(|s| (s - r.subset).abs() < 1e-12) {
            subsets.push(r.subset);
        }
    }
    subsets.sort_by(f64::total_cmp);

    let header: Vec<String> = std::iter::once("Model".to_string())
        .chain(subsets.iter().map(|&s| fraction_label(s)))
        .collect();
    let mut rows = vec![header];
    for model in &models {
        let mut row = vec![model.to_string()];
        for &s in &subsets {
            let cell = reports
                .iter()
                .find(|r| r.model == *model && (r.subset - s).abs() < 1e-12)
                .map(|r| format_cell(r.macro_avg.get(layout), r.micro_avg.get(layout)))
                .unwrap_or_else(|| "-".to_string());
            row.push(cell);
        }
        rows.push(row);
    }

    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = format!("Macro [Micro] {} Across Experiments\n", layout.title());
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, &w))| {
                if c == 0 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_matrices_have_no_errors() {
        let m = vec![vec![true, false], vec![false, true]];
        let c = confusion(&m, &m).unwrap();
        assert!(c.per_label.iter().all(|l| l.fp == 0 && l.fn_ == 0));
    }

    #[test]
    fn all_missed() {
        let gold = vec![vec![true; 3]; 4];
        let pred = vec![vec![false; 3]; 4];
        let c = confusion(&gold, &pred).unwrap();
        assert!(c.per_label.iter().all(|l| l.tp == 0 && l.fn_ == 4));
    }

    #[test]
    fn shape_mismatch() {
        assert!(confusion(&[vec![true]], &[]).is_err());
        assert!(confusion(&[vec![true]], &[vec![true, false]]).is_err());
    }

    #[test]
    fn hand_worked_two_doc_case() {
        // gold d1={A}, d2={A,B}; pred d1={A,B}, d2={A}
        let gold = vec![vec![true, false], vec![true, true]];
        let pred = vec![vec![true, true], vec![true, false]];
        let r = compute_metrics(&confusion(&gold, &pred).unwrap(), "m", 1.0);
        assert_eq!(
            r.per_label[0],
            Prf {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0
            }
        );
        assert_eq!(r.per_label[1], Prf::default());
        assert_eq!(r.macro_avg.f1, 0.5);
        assert_eq!(r.micro_avg.precision, 2.0 / 3.0);
        assert_eq!(r.micro_avg.recall, 2.0 / 3.0);
        assert!((r.micro_avg.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn no_positive_predictions_give_zero_precision() {
        let gold = vec![vec![true, false]];
        let pred = vec![vec![false, false]];
        let r = compute_metrics(&confusion(&gold, &pred).unwrap(), "m", 1.0);
        assert_eq!(r.micro_avg.precision, 0.0);
        assert_eq!(r.micro_avg.f1, 0.0);
    }

    #[test]
    fn single_label_macro_equals_micro() {
        let gold = vec![vec![true], vec![false], vec![true]];
        let pred = vec![vec![true], vec![true], vec![false]];
        let r = compute_metrics(&confusion(&gold, &pred).unwrap(), "m", 1.0);
        assert_eq!(r.macro_avg, r.micro_avg);
    }

    #[test]
    fn cell_format() {
        assert_eq!(format_cell(0.632, 0.733), "63.2 [73.3]");
        assert_eq!(format_cell(0.0, 0.0), "0.0 [0.0]");
    }

    #[test]
    fn columns_sorted_by_subset() {
        let mk = |model: &str, subset: f64| MetricsReport {
            model: model.into(),
            subset,
            per_label: vec![],
            macro_avg: Prf::default(),
            micro_avg: Prf::default(),
        };
        let reports = vec![
            mk("lsa_250", 1.0),
            mk("lsa_250", 0.1),
            mk("lsa_250", 0.5),
            mk("base_pdf", 0.1),
        ];
        let table = render_report(&reports, Metric::F1);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "Macro [Micro] F1 Scores Across Experiments");
        let cols: Vec<&str> = lines[1].split_whitespace().collect();
        assert_eq!(cols, vec!["Model", "10%", "50%", "100%"]);
        assert!(lines[3].starts_with("base_pdf"));
        assert!(lines[3].ends_with('-'));
    }
}
