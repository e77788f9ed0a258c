//! Spatial landmark knowledge base.
//!
//! A flat, two-level store: each landmark description maps to the list of
//! world positions where an instance was observed. New observations merge
//! into the most similar existing description (cosine over text embeddings)
//! or open a new entry. Per-description position lists are deduplicated by a
//! greedy confidence-ordered suppression within a radius.

mod embedding;
mod parser;
mod persist;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::WorldPoint;

pub use embedding::{EmbeddingProvider, EmbeddingVector, NgramEmbedder};
pub use parser::{LandmarkParser, LlmLandmarkParser, RuleLandmarkParser, LANDMARK_PARSER_PROMPT};
pub use persist::KB_FORMAT_VERSION;

pub const DEFAULT_MERGE_THRESHOLD: f64 = 0.90;
pub const DEFAULT_PRUNE_RADIUS: f64 = 20.0;

#[derive(Debug, Error)]
pub enum SlkbError {
    #[error("empty text cannot be embedded")]
    EmptyText,
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),
    #[error("invalid landmark record: {0}")]
    InvalidRecord(String),
    #[error("knowledge base empty")]
    EmptyKnowledgeBase,
    #[error("no instruction landmarks to retrieve")]
    EmptyQuery,
    #[error("merge threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("prune radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported knowledge base version {found} (expected {expected})")]
    Version { found: u64, expected: u64 },
    #[error("file was built with embedding `{file}` but provider is `{provider}`")]
    ProviderMismatch { file: String, provider: String },
    #[error("landmark parser backend failed: {0}")]
    Backend(#[from] crate::llm::BackendError),
    #[error("malformed landmark parser reply: {0}")]
    MalformedReply(String),
}

/// One observed landmark before insertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkRecord {
    pub description: String,
    pub position: WorldPoint,
    pub confidence: f64,
    pub source_id: String,
}

impl LandmarkRecord {
    pub fn new(description: impl Into<String>, position: WorldPoint, confidence: f64) -> Self {
        Self {
            description: description.into(),
            position,
            confidence,
            source_id: String::new(),
        }
    }

    pub fn with_source(mut self, source_id: impl Into<String>) -> Self {
        self.source_id = source_id.into();
        self
    }

    pub fn validate(&self) -> Result<(), SlkbError> {
        if self.description.trim().is_empty() {
            return Err(SlkbError::InvalidRecord("empty description".into()));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(SlkbError::InvalidRecord(format!(
                "confidence {} outside [0, 1]",
                self.confidence
            )));
        }
        if !self.position.is_finite() {
            return Err(SlkbError::InvalidRecord("non-finite position".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredPosition {
    pub position: WorldPoint,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UpsertOutcome {
    Inserted(String),
    Merged { key: String, similarity: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedLandmark {
    pub instruction_landmark: String,
    pub matched_description: String,
    pub similarity: f64,
    pub positions: Vec<WorldPoint>,
}

/// Retrieval result in instruction order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RetrievedLandmarkSet(pub Vec<RetrievedLandmark>);

impl RetrievedLandmarkSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, RetrievedLandmark> {
        self.0.iter()
    }
}

/// Description → positions store with a cached embedding per key.
///
/// Reads (`retrieve`, `positions`) take `&self`; `upsert` and
/// `prune_positions` need `&mut self`, so sharing across threads follows the
/// usual reader/writer rules (e.g. behind an `RwLock`).
#[derive(Clone)]
pub struct KnowledgeBase {
    entries: BTreeMap<String, Vec<ScoredPosition>>,
    embeddings: BTreeMap<String, EmbeddingVector>,
    provider: Arc<dyn EmbeddingProvider>,
}

impl fmt::Debug for KnowledgeBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KnowledgeBase")
            .field("provider", &self.provider.id())
            .field("entries", &self.entries)
            .finish()
    }
}

impl PartialEq for KnowledgeBase {
    fn eq(&self, other: &Self) -> bool {
        self.provider.id() == other.provider.id() && self.entries == other.entries
    }
}

impl Default for KnowledgeBase {
    fn default() -> Self {
        Self::new(Arc::new(NgramEmbedder))
    }
}

impl KnowledgeBase {
    pub fn new(provider: Arc<dyn EmbeddingProvider>) -> Self {
        Self {
            entries: BTreeMap::new(),
            embeddings: BTreeMap::new(),
            provider,
        }
    }

    pub fn provider(&self) -> &Arc<dyn EmbeddingProvider> {
        &self.provider
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn positions(&self, key: &str) -> Option<&[ScoredPosition]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &[ScoredPosition])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn total_positions(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn embed(&self, text: &str) -> Result<EmbeddingVector, SlkbError> {
        self.provider.embed(text)
    }

    /// Key with maximal cosine similarity to `query`; ties go to the
    /// lexicographically smaller key.
    fn best_match(&self, query: &EmbeddingVector) -> Option<(&str, f64)> {
        let mut best: Option<(&str, f64)> = None;
        for (key, emb) in &self.embeddings {
            let sim = query.cosine(emb);
            if best.is_none_or(|(_, b)| sim > b) {
                best = Some((key.as_str(), sim));
            }
        }
        best
    }

    /// Inserts `record`, merging into an existing key when the description
    /// matches exactly or its similarity reaches `merge_threshold`.
    pub fn upsert(
        &mut self,
        record: &LandmarkRecord,
        merge_threshold: f64,
    ) -> Result<UpsertOutcome, SlkbError> {
        record.validate()?;
        if !(merge_threshold > 0.0 && merge_threshold <= 1.0) {
            return Err(SlkbError::InvalidThreshold(merge_threshold));
        }
        let scored = ScoredPosition {
            position: record.position,
            confidence: record.confidence,
        };
        if let Some(list) = self.entries.get_mut(&record.description) {
            list.push(scored);
            return Ok(UpsertOutcome::Merged {
                key: record.description.clone(),
                similarity: 1.0,
            });
        }
        let emb = self.provider.embed(&record.description)?;
        if let Some((key, similarity)) = self.best_match(&emb) {
            if similarity >= merge_threshold {
                let key = key.to_string();
                self.entries.get_mut(&key).expect("cached key").push(scored);
                return Ok(UpsertOutcome::Merged { key, similarity });
            }
        }
        self.entries
            .insert(record.description.clone(), vec![scored]);
        self.embeddings.insert(record.description.clone(), emb);
        Ok(UpsertOutcome::Inserted(record.description.clone()))
    }

    /// Greedy suppression per key: visit positions by descending confidence
    /// (insertion order on ties), keep one and drop every unkept position
    /// within `radius` of it. Returns the number of positions removed.
    pub fn prune_positions(&mut self, radius: f64) -> Result<usize, SlkbError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(SlkbError::InvalidRadius(radius));
        }
        let mut removed = 0;
        for list in self.entries.values_mut() {
            let before = list.len();
            *list = suppress(list, radius);
            removed += before - list.len();
        }
        Ok(removed)
    }

    /// For each instruction landmark, the best-matching key and all of its
    /// positions.
    pub fn retrieve<S: AsRef<str>>(
        &self,
        instruction_landmarks: &[S],
    ) -> Result<RetrievedLandmarkSet, SlkbError> {
        if self.entries.is_empty() {
            return Err(SlkbError::EmptyKnowledgeBase);
        }
        if instruction_landmarks.is_empty() {
            return Err(SlkbError::EmptyQuery);
        }
        let mut out = Vec::with_capacity(instruction_landmarks.len());
        for landmark in instruction_landmarks {
            let landmark = landmark.as_ref();
            let query = self.provider.embed(landmark)?;
            let (key, similarity) = self.best_match(&query).expect("non-empty knowledge base");
            out.push(RetrievedLandmark {
                instruction_landmark: landmark.to_string(),
                matched_description: key.to_string(),
                similarity,
                positions: self.entries[key].iter().map(|p| p.position).collect(),
            });
        }
        Ok(RetrievedLandmarkSet(out))
    }

    pub(crate) fn insert_raw(
        &mut self,
        key: String,
        positions: Vec<ScoredPosition>,
    ) -> Result<(), SlkbError> {
        let emb = self.provider.embed(&key)?;
        self.embeddings.insert(key.clone(), emb);
        self.entries.insert(key, positions);
        Ok(())
    }
}

fn suppress(list: &[ScoredPosition], radius: f64) -> Vec<ScoredPosition> {
    let mut order: Vec<usize> = (0..list.len()).collect();
    order.sort_by(|&a, &b| list[b].confidence.total_cmp(&list[a].confidence));
    let mut kept = vec![false; list.len()];
    let mut suppressed = vec![false; list.len()];
    for &i in &order {
        if suppressed[i] {
            continue;
        }
        kept[i] = true;
        for &j in &order {
            if !kept[j] && !suppressed[j] && list[i].position.distance(&list[j].position) <= radius
            {
                suppressed[j] = true;
            }
        }
    }
    list.iter()
        .zip(kept)
        .filter_map(|(p, k)| k.then_some(*p))
        .collect()
}
