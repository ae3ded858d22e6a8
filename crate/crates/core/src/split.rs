//! Multi-label iterative stratification and nested training subsets.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, LabelSpace};
use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 36;

/// Splits `docs` into two parts by iterative stratification, `part_a`
/// receiving `fraction` of every label's documents as closely as possible.
///
/// Labels are processed rarest first (fewest still-unassigned documents;
/// equal counts go to the lower label index). Each document carrying that
/// label goes to the side with the largest remaining quota for the label,
/// then the largest remaining overall quota, then a seeded coin flip.
/// Documents are visited in id order, so the result does not depend on the
/// order of `docs`.
pub fn iterative_stratified_split(
    docs: &[Document],
    space: &LabelSpace,
    fraction: f64,
    seed: u64,
) -> Result<(BTreeSet<String>, BTreeSet<String>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if let Some(d) = docs.iter().find(|d| d.final_labels.is_empty()) {
        return Err(Error::EmptyLabels(d.id.clone()));
    }
    let n_labels = space.len();
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.sort_by(|&a, &b| docs[a].id.cmp(&docs[b].id));

    let ratios = [fraction, 1.0 - fraction];
    let mut label_totals = vec![0usize; n_labels];
    for d in docs {
        for &l in &d.final_labels {
            label_totals[l] += 1;
        }
    }
    let mut quota: [f64; 2] = [docs.len() as f64 * ratios[0], docs.len() as f64 * ratios[1]];
    let mut label_quota: Vec<[f64; 2]> = label_totals
        .iter()
        .map(|&n| [n as f64 * ratios[0], n as f64 * ratios[1]])
        .collect();
    let mut remaining = label_totals.clone();
    let mut assigned = vec![None::<usize>; docs.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    while let Some(label) = (0..n_labels)
        .filter(|&l| remaining[l] > 0)
        .min_by_key(|&l| (remaining[l], l))
    {
        for &d in &order {
            if assigned[d].is_some() || !docs[d].final_labels.contains(&label) {
                continue;
            }
            let lq = label_quota[label];
            let side = if lq[0] != lq[1] {
                if lq[0] > lq[1] {
                    0
                } else {
                    1
                }
            } else if quota[0] != quota[1] {
                if quota[0] > quota[1] {
                    0
                } else {
                    1
                }
            } else {
                rng.random_range(0..2)
            };
            assigned[d] = Some(side);
            quota[side] -= 1.0;
            for &l in &docs[d].final_labels {
                label_quota[l][side] -= 1.0;
                remaining[l] -= 1;
            }
        }
    }

    let mut parts = (BTreeSet::new(), BTreeSet::new());
    for (d, side) in assigned.into_iter().enumerate() {
        let id = docs[d].id.clone();
        match side.expect("every labelled document is assigned") {
            0 => parts.0.insert(id),
            _ => parts.1.insert(id),
        };
    }
    if parts.0.is_empty() || parts.1.is_empty() {
        return Err(Error::EmptySplit(format!(
            "{} documents at fraction {fraction}",
            docs.len()
        )));
    }
    Ok(parts)
}

/// Holdout ids plus nested training subsets keyed by fraction of the
/// non-holdout documents.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitManifest {
    pub seed: u64,
    pub holdout: BTreeSet<String>,
    /// Ascending by fraction; the last entry is always 1.0.
    pub subsets: Vec<(f64, BTreeSet<String>)>,
}

#[derive(Serialize, Deserialize)]
struct ManifestFile {
    seed: u64,
    holdout: Vec<String>,
    subsets: BTreeMap<String, Vec<String>>,
}

/// Key used for a subset fraction in the manifest file (`0.1`, `0.5`, `1.0`).
pub fn fraction_key(f: f64) -> String {
    if f.fract() == 0.0 {
        format!("{f:.1}")
    } else {
        format!("{f}")
    }
}

/// Column header for a subset fraction (`10%`).
pub fn fraction_label(f: f64) -> String {
    format!("{}%", (f * 100.0).round() as i64)
}

impl SplitManifest {
    pub fn subset(&self, fraction: f64) -> Option<&BTreeSet<String>> {
        self.subsets
            .iter()
            .find(|(f, _)| (f - fraction).abs() < 1e-12)
            .map(|(_, ids)| ids)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ManifestFile {
            seed: self.seed,
            holdout: self.holdout.iter().cloned().collect(),
            subsets: self
                .subsets
                .iter()
                .map(|(f, ids)| (fraction_key(*f), ids.iter().cloned().collect()))
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: ManifestFile = serde_json::from_str(json)?;
        let mut subsets = file
            .subsets
            .into_iter()
            .map(|(k, ids)| {
                k.parse::<f64>()
                    .map(|f| (f, ids.into_iter().collect()))
                    .map_err(|_| Error::InvalidArgument(format!("bad subset key {k:?}")))
            })
            .collect::<Result<Vec<(f64, BTreeSet<String>)>>>()?;
        subsets.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            seed: file.seed,
            holdout: file.holdout.into_iter().collect(),
            subsets,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json)
    }
}

/// Holds out `holdout_fraction` of the corpus, then carves each smaller
/// training subset out of the next larger one so subsets are nested.
pub fn make_manifest(
    docs: &[Document],
    space: &LabelSpace,
    holdout_fraction: f64,
    subset_fractions: &[f64],
    seed: u64,
) -> Result<SplitManifest> {
    if subset_fractions.is_empty()
        || subset_fractions.windows(2).any(|w| w[0] >= w[1])
        || subset_fractions[0] <= 0.0
        || *subset_fractions.last().unwrap() != 1.0
    {
        return Err(Error::InvalidArgument(format!(
            "subset fractions must be strictly ascending in (0, 1] and end at 1.0, got {subset_fractions:?}"
        )));
    }
    let (holdout, train) = iterative_stratified_split(docs, space, holdout_fraction, seed)?;

    let mut subsets = vec![(1.0, train)];
    for (stage, pair) in subset_fractions.windows(2).rev().enumerate() {
        let (smaller, larger) = (pair[0], pair[1]);
        let parent = &subsets.last().unwrap().1;
        let parent_docs: Vec<Document> = docs.iter().filter(|d| parent.contains(&d.id)).cloned().collect();
        let (child, _) = iterative_stratified_split(
            &parent_docs,
            space,
            smaller / larger,
            seed.wrapping_add(stage as u64 + 1),
        )?;
        subsets.push((smaller, child));
    }
    subsets.reverse();
    Ok(SplitManifest { seed, holdout, subsets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::OTHERS;

    fn space(n: usize) -> LabelSpace {
        let mut labels: Vec<String> = (0..n).map(|i| format!("l{i}")).collect();
        labels.push(OTHERS.into());
        LabelSpace {
            counts: vec![0; n + 1],
            others_index: n,
            labels,
        }
    }

    fn doc(id: usize, labels: &[usize]) -> Document {
        let mut d = Document::new(format!("d{id:04}"), "", vec!["x".into()]);
        d.final_labels = labels.iter().copied().collect();
        d
    }

    fn side_count(docs: &[Document], side: &BTreeSet<String>, label: usize) -> usize {
        docs.iter()
            .filter(|d| side.contains(&d.id) && d.final_labels.contains(&label))
            .count()
    }

    #[test]
    fn single_label_is_proportional() {
        let docs: Vec<Document> = (0..10).map(|i| doc(i, &[0])).collect();
        let (a, b) = iterative_stratified_split(&docs, &space(1), 0.1, 36).unwrap();
        assert_eq!((a.len(), b.len()), (1, 9));
    }

    #[test]
    fn rare_label_splits_evenly() {
        let mut docs: Vec<Document> = (0..4).map(|i| doc(i, &[0])).collect();
        docs.extend((4..6).map(|i| doc(i, &[0, 1])));
        for seed in 0..20 {
            let (a, b) = iterative_stratified_split(&docs, &space(2), 0.5, seed).unwrap();
            for side in [&a, &b] {
                assert_eq!(side_count(&docs, side, 1), 1);
                assert_eq!(side_count(&docs, side, 0), 3);
            }
        }
    }

    #[test]
    fn rejects_bad_fraction_and_empty_side() {
        let docs: Vec<Document> = (0..3).map(|i| doc(i, &[0])).collect();
        assert!(iterative_stratified_split(&docs, &space(1), 1.0, 1).is_err());
        assert!(iterative_stratified_split(&docs, &space(1), 0.0, 1).is_err());
        assert!(matches!(
            iterative_stratified_split(&docs, &space(1), 0.01, 1),
            Err(Error::EmptySplit(_))
        ));
    }

    #[test]
    fn single_subset_is_all_training_ids() {
        let docs: Vec<Document> = (0..20).map(|i| doc(i, &[i % 2])).collect();
        let m = make_manifest(&docs, &space(2), 0.1, &[1.0], 36).unwrap();
        assert_eq!(m.subsets.len(), 1);
        assert_eq!(m.subsets[0].1.len() + m.holdout.len(), 20);
        assert!(m.subsets[0].1.is_disjoint(&m.holdout));
    }

    #[test]
    fn fractions_must_end_at_one() {
        let docs: Vec<Document> = (0..20).map(|i| doc(i, &[0])).collect();
        assert!(make_manifest(&docs, &space(1), 0.1, &[0.1, 0.5], 36).is_err());
        assert!(make_manifest(&docs, &space(1), 0.1, &[0.5, 0.1, 1.0], 36).is_err());
    }

    #[test]
    fn manifest_json_shape() {
        let docs: Vec<Document> = (0..40).map(|i| doc(i, &[i % 3])).collect();
        let m = make_manifest(&docs, &space(3), 0.1, &[0.5, 1.0], 36).unwrap();
        let json = m.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["seed"], 36);
        assert!(v["subsets"]["0.5"].is_array());
        assert!(v["subsets"]["1.0"].is_array());
        assert_eq!(SplitManifest::from_json(&json).unwrap(), m);
    }

    #[test]
    fn fraction_keys_and_labels() {
        assert_eq!(fraction_key(0.1), "0.1");
        assert_eq!(fraction_key(1.0), "1.0");
        assert_eq!(fraction_label(0.5), "50%");
    }
}
