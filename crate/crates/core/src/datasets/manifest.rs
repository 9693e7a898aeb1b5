//! CSV manifests listing tensor files with an optional label and domain.
//!
//! Columns: `path,label,domain`. Relative paths resolve against the
//! manifest's directory. A non-empty label overrides the file's labels.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{load_tensor_file, PatternBatch};
use crate::error::{Result, SqhnError};

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    #[serde(default)]
    pub label: Option<u32>,
    #[serde(default)]
    pub domain: Option<String>,
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let mut entry: ManifestEntry = row?;
        if entry.path.is_relative() {
            entry.path = base.join(&entry.path);
        }
        out.push(entry);
    }
    Ok(out)
}

/// Load every listed file and group them into one batch per domain, in order
/// of first appearance. Entries without a domain share one unnamed group.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<(Option<String>, PatternBatch)>> {
    let mut groups: Vec<(Option<String>, Vec<PatternBatch>)> = Vec::new();
    for entry in read_manifest(path)? {
        let mut batch = load_tensor_file(&entry.path)?;
        if let Some(l) = entry.label {
            batch.set_labels(Some(vec![l; batch.len()]))?;
        }
        match groups.iter_mut().find(|(d, _)| *d == entry.domain) {
            Some((_, v)) => v.push(batch),
            None => groups.push((entry.domain, vec![batch])),
        }
    }
    groups
        .into_iter()
        .map(|(d, bs)| Ok((d, concat(bs)?)))
        .collect()
}

fn concat(batches: Vec<PatternBatch>) -> Result<PatternBatch> {
    let shape = batches[0].shape();
    let labelled = batches.iter().all(|b| b.labels().is_some());
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for b in &batches {
        if b.shape() != shape {
            return Err(SqhnError::Format(
                "manifest files have different image shapes".into(),
            ));
        }
        data.extend_from_slice(b.data());
        if let Some(l) = b.labels() {
            labels.extend_from_slice(l);
        }
    }
    PatternBatch::new(shape, data, labelled.then_some(labels))
}
