//! Labelled document ingestion, label normalization and label-space truncation.
//!
//! Raw labels are double-dash-delimited paths such as
//! `"tort--negligence--duty of care"`. The head segment names the legal area;
//! the remaining segments are sub-labels. Normalization rewrites the head in
//! place (so the sub-label segments survive for the keyword baseline) and
//! finalization maps every area onto a fixed [`LabelSpace`].

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Delimiter between the segments of a raw label path.
pub const PATH_DELIMITER: &str = "--";

/// Name of the catch-all bucket for labels outside the top-k.
pub const OTHERS: &str = "others";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub raw_labels: Vec<String>,
    /// Indices into a [`LabelSpace`]; empty until [`finalize_label_space`] runs.
    pub final_labels: BTreeSet<usize>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, raw_labels: Vec<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            raw_labels,
            final_labels: BTreeSet::new(),
        }
    }

    /// Distinct head segments (areas) of the raw label paths, normalized.
    pub fn areas(&self) -> BTreeSet<String> {
        self.raw_labels
            .iter()
            .map(|path| normalize_label_name(split_path(path).0))
            .collect()
    }
}

/// Lowercase, trim, and join internal whitespace runs with underscores.
pub fn normalize_label_name(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

/// Lowercase and collapse internal whitespace to single spaces.
pub fn normalize_phrase(phrase: &str) -> String {
    phrase
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Split a label path into its head and the remaining segments.
pub fn split_path(path: &str) -> (&str, Vec<&str>) {
    let mut parts = path.split(PATH_DELIMITER);
    let head = parts.next().unwrap_or("");
    (head, parts.collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMapping {
    primary_to_alternatives: BTreeMap<String, BTreeSet<String>>,
    alternative_to_primary: HashMap<String, String>,
}

impl LabelMapping {
    pub fn new<P, A, I>(entries: I) -> Result<Self>
    where
        P: AsRef<str>,
        A: AsRef<str>,
        I: IntoIterator<Item = (P, Vec<A>)>,
    {
        let mut primary_to_alternatives: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut alternative_to_primary = HashMap::new();
        for (primary, alternatives) in entries {
            let primary = normalize_label_name(primary.as_ref());
            if primary.is_empty() {
                return Err(Error::Mapping("empty primary label".into()));
            }
            let slot = primary_to_alternatives.entry(primary.clone()).or_default();
            for alternative in alternatives {
                let alternative = normalize_label_name(alternative.as_ref());
                if let Some(previous) = alternative_to_primary.insert(alternative.clone(), primary.clone()) {
                    if previous != primary {
                        return Err(Error::Mapping(format!(
                            "{alternative:?} listed under both {previous:?} and {primary:?}"
                        )));
                    }
                }
                slot.insert(alternative);
            }
        }
        for primary in primary_to_alternatives.keys() {
            if alternative_to_primary.contains_key(primary) {
                return Err(Error::Mapping(format!(
                    "primary {primary:?} also appears as an alternative"
                )));
            }
        }
        Ok(Self {
            primary_to_alternatives,
            alternative_to_primary,
        })
    }

    /// Reads a JSON object `{primary: [alternatives...]}`.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let raw: BTreeMap<String, Vec<String>> =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            })?;
        Self::new(raw)
    }

    pub fn primaries(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.primary_to_alternatives.iter().map(|(p, alts)| (p.as_str(), alts))
    }

    /// Primary label for a normalized area name, or the name itself.
    pub fn resolve<'a>(&'a self, area: &'a str) -> &'a str {
        self.alternative_to_primary
            .get(area)
            .map(String::as_str)
            .unwrap_or(area)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSpace {
    pub labels: Vec<String>,
    pub others_index: usize,
    pub counts: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct LabelSpaceFile {
    labels: Vec<String>,
    others: String,
    counts: BTreeMap<String, usize>,
}

impl LabelSpace {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == name)
    }

    pub fn name(&self, index: usize) -> &str {
        &self.labels[index]
    }

    /// Index a normalized area maps to: itself if retained, else `others`.
    pub fn map_area(&self, area: &str) -> usize {
        if area == OTHERS {
            return self.others_index;
        }
        self.index_of(area).unwrap_or(self.others_index)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = LabelSpaceFile {
            labels: self.labels.clone(),
            others: self.labels[self.others_index].clone(),
            counts: self.labels.iter().cloned().zip(self.counts.iter().copied()).collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: LabelSpaceFile = serde_json::from_str(json)?;
        let others_index = file
            .labels
            .iter()
            .position(|l| *l == file.others)
            .ok_or_else(|| Error::InvalidArgument(format!("others label {:?} not in labels", file.others)))?;
        let counts = file
            .labels
            .iter()
            .map(|l| file.counts.get(l).copied().unwrap_or(0))
            .collect();
        Ok(Self {
            labels: file.labels,
            others_index,
            counts,
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

#[derive(Serialize, Deserialize)]
struct Record {
    id: String,
    text: String,
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    final_labels: Option<Vec<String>>,
}

/// Reads a JSON Lines corpus. Blank lines are skipped.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        if record.id.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: "empty document id".into(),
            });
        }
        if record.labels.is_empty() {
            return Err(Error::EmptyLabels(record.id));
        }
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id));
        }
        docs.push(Document::new(record.id, record.text, record.labels));
    }
    Ok(docs)
}

/// Reads a finalized corpus and re-attaches final labels from `space`.
///
/// Final labels are recomputed from the raw label heads so a corpus file and
/// its sidecar can never disagree.
pub fn load_finalized(path: impl AsRef<Path>, space: &LabelSpace) -> Result<Vec<Document>> {
    let mut docs = load_corpus(path)?;
    for doc in &mut docs {
        doc.final_labels = doc.areas().iter().map(|a| space.map_area(a)).collect();
    }
    Ok(docs)
}

/// Writes documents as JSON Lines. When `space` is given each record also
/// carries its final label names.
pub fn write_corpus(path: impl AsRef<Path>, docs: &[Document], space: Option<&LabelSpace>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for doc in docs {
        let record = Record {
            id: doc.id.clone(),
            text: doc.text.clone(),
            labels: doc.raw_labels.clone(),
            final_labels: space.map(|s| doc.final_labels.iter().map(|&i| s.name(i).to_string()).collect()),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Rewrites the head of every raw label path to its primary label.
///
/// Sub-label segments are kept verbatim; identical paths within a document
/// collapse to one.
pub fn normalize_labels(docs: &[Document], mapping: &LabelMapping) -> Vec<Document> {
    docs.iter()
        .map(|doc| {
            let mut seen = HashSet::new();
            let raw_labels = doc
                .raw_labels
                .iter()
                .filter_map(|path| {
                    let (head, rest) = split_path(path);
                    let head = normalize_label_name(head);
                    let primary = mapping.resolve(&head);
                    let rewritten = std::iter::once(primary)
                        .chain(rest.iter().map(|s| s.trim()))
                        .collect::<Vec<_>>()
                        .join(PATH_DELIMITER);
                    seen.insert(rewritten.clone()).then_some(rewritten)
                })
                .collect();
            Document {
                raw_labels,
                ..doc.clone()
            }
        })
        .collect()
}

/// Keeps the `top_k` most frequent areas and folds the rest into `others`.
///
/// Frequency is the number of documents carrying the area. Ties are broken by
/// label name so the result is deterministic. Retained labels are ordered by
/// rank; `others` is always last. A raw area literally named `others` is
/// never ranked and always lands in the bucket.
pub fn finalize_label_space(docs: &[Document], top_k: usize) -> Result<(LabelSpace, Vec<Document>)> {
    if top_k == 0 {
        return Err(Error::InvalidArgument("top_k must be at least 1".into()));
    }
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    for doc in docs {
        for area in doc.areas() {
            if area != OTHERS {
                *freq.entry(area).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(top_k);

    let mut labels: Vec<String> = ranked.iter().map(|(l, _)| l.clone()).collect();
    labels.push(OTHERS.to_string());
    let others_index = labels.len() - 1;
    let mut space = LabelSpace {
        counts: vec![0; labels.len()],
        labels,
        others_index,
    };

    let finalized: Vec<Document> = docs
        .iter()
        .map(|doc| {
            let final_labels: BTreeSet<usize> = doc.areas().iter().map(|a| space.map_area(a)).collect();
            Document {
                final_labels,
                ..doc.clone()
            }
        })
        .collect();
    for doc in &finalized {
        for &l in &doc.final_labels {
            space.counts[l] += 1;
        }
    }
    Ok((space, finalized))
}

/// Sub-label phrases observed under each final label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubLabelIndex {
    pub phrases: BTreeMap<usize, BTreeSet<String>>,
}

impl SubLabelIndex {
    pub fn get(&self, label: usize) -> Option<&BTreeSet<String>> {
        self.phrases.get(&label)
    }
}

pub fn build_sublabel_index(docs: &[Document], space: &LabelSpace) -> SubLabelIndex {
    let mut phrases: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for doc in docs {
        for path in &doc.raw_labels {
            let (head, rest) = split_path(path);
            let label = space.map_area(&normalize_label_name(head));
            let slot = phrases.entry(label).or_default();
            for segment in rest {
                let phrase = normalize_phrase(segment);
                if !phrase.is_empty() {
                    slot.insert(phrase);
                }
            }
        }
    }
    SubLabelIndex { phrases }
}

/// Builds the binary gold matrix (docs × labels) from final labels.
pub fn label_matrix(docs: &[Document], space: &LabelSpace) -> Vec<Vec<bool>> {
    docs.iter()
        .map(|d| (0..space.len()).map(|l| d.final_labels.contains(&l)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, labels: &[&str]) -> Document {
        Document::new(id, "", labels.iter().map(|s| s.to_string()).collect())
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_records_in_order() {
        let f = write_tmp(
            "{\"id\":\"j1\",\"text\":\"a\",\"labels\":[\"tort\"]}\n{\"id\":\"j2\",\"text\":\"b\",\"labels\":[\"contract\"]}\n",
        );
        let docs = load_corpus(f.path()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].id, "j1");
        assert_eq!(docs[1].id, "j2");
    }

    #[test]
    fn duplicate_id_is_named() {
        let f = write_tmp(
            "{\"id\":\"j1\",\"text\":\"a\",\"labels\":[\"tort\"]}\n{\"id\":\"j1\",\"text\":\"b\",\"labels\":[\"tort\"]}\n",
        );
        let err = load_corpus(f.path()).unwrap_err();
        assert!(matches!(&err, Error::DuplicateId(id) if id == "j1"));
        assert!(err.to_string().contains("j1"));
    }

    #[test]
    fn empty_labels_rejected() {
        let f = write_tmp("{\"id\":\"j1\",\"text\":\"a\",\"labels\":[]}\n");
        assert!(matches!(load_corpus(f.path()), Err(Error::EmptyLabels(_))));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_tmp("{\"id\":\"j1\",\"text\":\"a\",\"labels\":[\"x\"]}\n{not json\n");
        match load_corpus(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mapping_rejects_shared_alternative() {
        let err = LabelMapping::new([("a", vec!["x"]), ("b", vec!["x"])]);
        assert!(err.is_err());
        let err = LabelMapping::new([("a", vec!["b"]), ("b", vec!["c"])]);
        assert!(err.is_err());
    }

    #[test]
    fn normalizes_alternative_heads() {
        let mapping = LabelMapping::new([("tort_law", vec!["tort", "abuse_of_process"])]).unwrap();
        let docs = vec![
            doc("a", &["tort--negligence--duty of care"]),
            doc("b", &["restitution"]),
            doc("c", &["Tort--x", "tort_law--x"]),
        ];
        let out = normalize_labels(&docs, &mapping);
        assert_eq!(out[0].raw_labels, vec!["tort_law--negligence--duty of care"]);
        assert_eq!(out[0].areas(), BTreeSet::from(["tort_law".to_string()]));
        assert_eq!(out[1].raw_labels, vec!["restitution"]);
        assert_eq!(out[2].raw_labels, vec!["tort_law--x"]);
        assert_eq!(out[2].areas().len(), 1);
    }

    #[test]
    fn whitespace_heads_become_underscored() {
        assert_eq!(normalize_label_name("  Civil  Procedure "), "civil_procedure");
    }

    #[test]
    fn top_k_with_others() {
        let docs = vec![
            doc("1", &["a", "b"]),
            doc("2", &["a"]),
            doc("3", &["c"]),
            doc("4", &["b", "d"]),
        ];
        let (space, out) = finalize_label_space(&docs, 2).unwrap();
        assert_eq!(space.labels, vec!["a", "b", "others"]);
        assert_eq!(space.others_index, 2);
        assert_eq!(space.counts, vec![2, 2, 2]);
        assert_eq!(out[2].final_labels, BTreeSet::from([2]));
        assert_eq!(out[3].final_labels, BTreeSet::from([1, 2]));
    }

    #[test]
    fn fewer_labels_than_k() {
        let docs = vec![doc("1", &["x"]), doc("2", &["y"])];
        let (space, _) = finalize_label_space(&docs, 5).unwrap();
        assert_eq!(space.labels, vec!["x", "y", "others"]);
        assert_eq!(space.counts, vec![1, 1, 0]);
    }

    #[test]
    fn boundary_tie_is_lexicographic() {
        let docs = vec![doc("1", &["zeta"]), doc("2", &["alpha"]), doc("3", &["mid", "zeta"])];
        let (space, _) = finalize_label_space(&docs, 2).unwrap();
        assert_eq!(space.labels, vec!["zeta", "alpha", "others"]);
    }

    #[test]
    fn zero_top_k_rejected() {
        assert!(finalize_label_space(&[doc("1", &["a"])], 0).is_err());
    }

    #[test]
    fn sublabels_collected_per_label() {
        let docs = vec![
            doc("1", &["tort_law--negligence"]),
            doc("2", &["tort_law--Harassment"]),
            doc("3", &["restitution"]),
        ];
        let (space, docs) = finalize_label_space(&docs, 5).unwrap();
        let index = build_sublabel_index(&docs, &space);
        let tort = space.index_of("tort_law").unwrap();
        let rest = space.index_of("restitution").unwrap();
        assert_eq!(
            index.get(tort).unwrap(),
            &BTreeSet::from(["negligence".to_string(), "harassment".to_string()])
        );
        assert!(index.get(rest).unwrap().is_empty());
    }

    // Hand-built 5-doc corpus: with top_k = 2, `rare` is truncated and its
    // sub-label must land under `others`.
    #[test]
    fn truncated_sublabels_attach_to_others() {
        let docs = vec![
            doc("1", &["a--x"]),
            doc("2", &["a--y", "b"]),
            doc("3", &["b--z"]),
            doc("4", &["a", "b"]),
            doc("5", &["rare--hidden  phrase"]),
        ];
        let (space, docs) = finalize_label_space(&docs, 2).unwrap();
        let index = build_sublabel_index(&docs, &space);
        assert_eq!(space.labels, vec!["a", "b", "others"]);
        assert_eq!(
            index.get(space.others_index).unwrap(),
            &BTreeSet::from(["hidden phrase".to_string()])
        );
        assert_eq!(docs[4].final_labels, BTreeSet::from([space.others_index]));
        assert_eq!(
            index.get(0).unwrap(),
            &BTreeSet::from(["x".to_string(), "y".to_string()])
        );
    }

    #[test]
    fn label_space_sidecar_roundtrip() {
        let space = LabelSpace {
            labels: vec!["a".into(), "others".into()],
            others_index: 1,
            counts: vec![3, 0],
        };
        let json = space.to_json().unwrap();
        assert!(json.contains("\"others\": \"others\""));
        assert_eq!(LabelSpace::from_json(&json).unwrap(), space);
    }
}
