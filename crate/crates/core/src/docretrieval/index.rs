//! Flat brute-force vector index over page records.
//!
//! Persistence format, one record per line:
//! `source<TAB>page<TAB>f_1 f_2 ... f_d`
//! Floats use Rust's shortest round-trip representation, so a reloaded
//! index ranks every query identically to the original.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::embed::cosine;

#[derive(Debug, Clone, PartialEq)]
pub struct PageRecord {
    pub source: String,
    /// 1-based page index.
    pub page: u32,
    /// Text the vector was computed from (not persisted).
    pub text: String,
    pub vector: Vec<f32>,
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("page {page} of document {doc:?} is already indexed")]
    DuplicatePage { doc: String, page: u32 },
    #[error("vector dimension {got} does not match index dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("document source must not contain tab characters: {0:?}")]
    BadSource(String),
    #[error("persistence file line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Exact cosine scan over all records of one document; no approximation.
#[derive(Debug, Clone, Default)]
pub struct VectorIndex {
    records: Vec<PageRecord>,
}

impl VectorIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[PageRecord] {
        &self.records
    }

    pub fn dim(&self) -> Option<usize> {
        self.records.first().map(|r| r.vector.len())
    }

    pub fn add(&mut self, record: PageRecord) -> Result<(), IndexError> {
        if record.source.contains('\t') {
            return Err(IndexError::BadSource(record.source));
        }
        if let Some(dim) = self.dim() {
            if record.vector.len() != dim {
                return Err(IndexError::DimensionMismatch { expected: dim, got: record.vector.len() });
            }
        }
        if self.records.iter().any(|r| r.source == record.source && r.page == record.page) {
            return Err(IndexError::DuplicatePage { doc: record.source, page: record.page });
        }
        self.records.push(record);
        Ok(())
    }

    pub fn has_source(&self, source: &str) -> bool {
        self.records.iter().any(|r| r.source == source)
    }

    pub fn sources(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.source) {
                out.push(r.source.clone());
            }
        }
        out
    }

    /// Number of indexed pages for a document.
    pub fn page_count(&self, source: &str) -> usize {
        self.records.iter().filter(|r| r.source == source).count()
    }

    /// Top-k pages of `source` by cosine similarity to `query`, in
    /// descending score order; ties break toward the lower page index.
    pub fn query(&self, source: &str, query: &[f32], k: usize) -> Vec<(u32, f32)> {
        let mut scored: Vec<(u32, f32)> = self
            .records
            .iter()
            .filter(|r| r.source == source)
            .map(|r| (r.page, cosine(&r.vector, query)))
            .collect();
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0))
        });
        scored.truncate(k);
        scored
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        let mut out = String::new();
        for r in &self.records {
            let floats: Vec<String> = r.vector.iter().map(|f| format!("{f}")).collect();
            out.push_str(&format!("{}\t{}\t{}\n", r.source, r.page, floats.join(" ")));
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        let content = fs::read_to_string(path)?;
        let mut index = VectorIndex::new();
        for (i, line) in content.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let source = parts
                .next()
                .ok_or_else(|| IndexError::Parse { line: line_no, detail: "missing source".into() })?
                .to_string();
            let page: u32 = parts
                .next()
                .ok_or_else(|| IndexError::Parse { line: line_no, detail: "missing page".into() })?
                .parse()
                .map_err(|e| IndexError::Parse { line: line_no, detail: format!("bad page: {e}") })?;
            let vector = parts
                .next()
                .ok_or_else(|| IndexError::Parse { line: line_no, detail: "missing vector".into() })?
                .split(' ')
                .map(|f| {
                    f.parse::<f32>().map_err(|e| IndexError::Parse {
                        line: line_no,
                        detail: format!("bad float {f:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<f32>, _>>()?;
            index.add(PageRecord { source, page, text: String::new(), vector })?;
        }
        Ok(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docretrieval::embed::{Embedder, HashEmbedder};

    fn sample_index() -> VectorIndex {
        let embedder = HashEmbedder::new(64, 7);
        let texts =
            vec!["alpha beta gamma".to_string(), "delta beta".to_string(), "omega psi chi".to_string()];
        let vectors = embedder.embed(&texts).unwrap();
        let mut index = VectorIndex::new();
        for (i, (text, vector)) in texts.into_iter().zip(vectors).enumerate() {
            index
                .add(PageRecord { source: "doc".into(), page: (i + 1) as u32, text, vector })
                .unwrap();
        }
        index
    }

    #[test]
    fn duplicate_pages_are_rejected() {
        let mut index = sample_index();
        let vector = vec![1.0; 64];
        let err = index
            .add(PageRecord { source: "doc".into(), page: 1, text: String::new(), vector })
            .unwrap_err();
        assert!(matches!(err, IndexError::DuplicatePage { .. }));
    }

    #[test]
    fn query_filters_by_source() {
        let mut index = sample_index();
        index
            .add(PageRecord {
                source: "other".into(),
                page: 1,
                text: String::new(),
                vector: vec![0.1; 64],
            })
            .unwrap();
        let embedder = HashEmbedder::new(64, 7);
        let q = &embedder.embed(&["beta".into()]).unwrap()[0];
        let hits = index.query("doc", q, 10);
        assert_eq!(hits.len(), 3);
        assert!(hits.iter().all(|(p, _)| (1..=3).contains(p)));
    }

    #[test]
    fn textual_match_ranks_first() {
        let index = sample_index();
        let embedder = HashEmbedder::new(64, 7);
        let q = &embedder.embed(&["alpha beta gamma".into()]).unwrap()[0];
        let hits = index.query("doc", q, 3);
        assert_eq!(hits[0].0, 1);
        assert!(hits[0].1 > 0.99);
    }

    #[test]
    fn persistence_preserves_rankings() {
        let index = sample_index();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.tsv");
        index.save(&path).unwrap();
        let reloaded = VectorIndex::load(&path).unwrap();
        let embedder = HashEmbedder::new(64, 7);
        for query in ["beta", "omega", "zzz unrelated"] {
            let q = &embedder.embed(&[query.into()]).unwrap()[0];
            assert_eq!(index.query("doc", q, 5), reloaded.query("doc", q, 5), "query {query:?}");
        }
    }

    #[test]
    fn load_reports_line_accurate_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.tsv");
        std::fs::write(&path, "doc\t1\t0.5 0.5\ndoc\tnope\t0.1 0.1\n").unwrap();
        let err = VectorIndex::load(&path).unwrap_err();
        match err {
            IndexError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
