use serde::{Deserialize, Serialize};

use super::SlkbError;

/// Dense text embedding with finite components and nonzero norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector {
    components: Vec<f64>,
    norm: f64,
}

impl EmbeddingVector {
    pub fn new(components: Vec<f64>) -> Result<Self, SlkbError> {
        if components.iter().any(|c| !c.is_finite()) {
            return Err(SlkbError::InvalidEmbedding("non-finite component".into()));
        }
        if components.iter().all(|c| *c == 0.0) {
            return Err(SlkbError::InvalidEmbedding("zero vector".into()));
        }
        let norm = components.iter().map(|c| c * c).sum::<f64>().sqrt();
        Ok(Self { components, norm })
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Cosine similarity clamped to [-1, 1]. Vectors of different length
    /// compare over their common prefix.
    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        let dot: f64 = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a * b)
            .sum();
        (dot / (self.norm * other.norm)).clamp(-1.0, 1.0)
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = SlkbError;

    fn try_from(components: Vec<f64>) -> Result<Self, SlkbError> {
        Self::new(components)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.components
    }
}

/// Source of text embeddings. Implementations must be deterministic.
pub trait EmbeddingProvider: Send + Sync {
    /// Stable identifier written into knowledge-base files.
    fn id(&self) -> &str;

    fn dimension(&self) -> usize;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, SlkbError>;
}

/// Hashed bag of lowercase character trigrams and whitespace tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct NgramEmbedder;

impl NgramEmbedder {
    pub const DIMENSION: usize = 256;
    pub const ID: &'static str = "ngram3-tok-256";
}

fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

impl EmbeddingProvider for NgramEmbedder {
    fn id(&self) -> &str {
        Self::ID
    }

    fn dimension(&self) -> usize {
        Self::DIMENSION
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, SlkbError> {
        let normalized = text
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_lowercase();
        if normalized.is_empty() {
            return Err(SlkbError::EmptyText);
        }
        let mut bag = vec![0.0; Self::DIMENSION];
        let padded: Vec<char> = format!(" {normalized} ").chars().collect();
        for gram in padded.windows(3) {
            let s: String = gram.iter().collect();
            bag[(fnv1a(s.bytes()) % Self::DIMENSION as u64) as usize] += 1.0;
        }
        for token in normalized.split(' ') {
            let h = fnv1a(b"w:".iter().copied().chain(token.bytes()));
            bag[(h % Self::DIMENSION as u64) as usize] += 1.0;
        }
        EmbeddingVector::new(bag)
    }
}
