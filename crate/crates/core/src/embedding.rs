//! Text vectors and cosine similarity.
//!
//! The default provider is signed feature hashing over lowercase word
//! unigrams and bigrams, L2-normalized. It has no model files and is fully
//! deterministic: texts that share vocabulary land closer together, which is
//! all the ranking code relies on. Any sentence encoder can be plugged in
//! through [`EmbeddingProvider`].

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::catalog::{Catalog, FilterSet, Predicate, Schema};
use crate::exec::Execution;

pub const DEFAULT_DIMENSION: usize = 256;

#[derive(Debug, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("vector dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Dense vector with a cached Euclidean norm. A zero norm marks a
/// zero-information vector (e.g. the embedding of empty text).
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    components: Vec<f64>,
    norm: f64,
}

impl Vector {
    pub fn new(components: Vec<f64>) -> Self {
        let norm = components.iter().map(|x| x * x).sum::<f64>().sqrt();
        Self { components, norm }
    }

    pub fn zeros(dimension: usize) -> Self {
        Self {
            components: vec![0.0; dimension],
            norm: 0.0,
        }
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

    pub fn is_zero(&self) -> bool {
        self.norm == 0.0
    }
}

/// Cosine similarity in `[-1, 1]`; 0 when either side is a zero vector.
pub fn cosine_similarity(a: &Vector, b: &Vector) -> Result<f64, EmbeddingError> {
    if a.dimension() != b.dimension() {
        return Err(EmbeddingError::DimensionMismatch {
            left: a.dimension(),
            right: b.dimension(),
        });
    }
    if a.is_zero() || b.is_zero() {
        return Ok(0.0);
    }
    let dot: f64 = a.components.iter().zip(&b.components).map(|(x, y)| x * y).sum();
    Ok((dot / (a.norm * b.norm)).clamp(-1.0, 1.0))
}

/// Same as [`cosine_similarity`] for vectors known to come from one provider.
pub(crate) fn cos(a: &Vector, b: &Vector) -> f64 {
    cosine_similarity(a, b).expect("vectors from one provider share a dimension")
}

pub trait EmbeddingProvider: Send + Sync {
    /// Stable identifier, used to key on-disk caches.
    fn id(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Vector;
}

/// Lowercase alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Signed feature hashing of unigrams and bigrams.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dimension: usize,
    id: String,
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self {
            dimension,
            id: format!("hash-fnv1a-{dimension}"),
        }
    }

    fn add_feature(&self, acc: &mut [f64], feature: &str) {
        let h = fnv1a64(feature.as_bytes());
        let bucket = (h % self.dimension as u64) as usize;
        let sign = if (h >> 32) & 1 == 1 { 1.0 } else { -1.0 };
        acc[bucket] += sign;
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

impl EmbeddingProvider for HashingEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Vector {
        let tokens = tokenize(text);
        let mut acc = vec![0.0; self.dimension];
        for t in &tokens {
            self.add_feature(&mut acc, t);
        }
        for pair in tokens.windows(2) {
            self.add_feature(&mut acc, &format!("{} {}", pair[0], pair[1]));
        }
        let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut acc {
                *x /= norm;
            }
        }
        Vector::new(acc)
    }
}

/// Wraps a provider with a directory of little-endian `f32` vectors, one
/// file per text, keyed by provider id and the SHA-256 of the text.
pub struct CachedProvider<P> {
    inner: P,
    dir: PathBuf,
}

impl<P: EmbeddingProvider> CachedProvider<P> {
    pub fn new(inner: P, dir: impl Into<PathBuf>) -> Self {
        Self {
            inner,
            dir: dir.into(),
        }
    }

    pub fn path_for(&self, text: &str) -> PathBuf {
        let digest = Sha256::digest(text.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest.iter() {
            let _ = write!(hex, "{b:02x}");
        }
        self.dir.join(self.inner.id()).join(format!("{hex}.f32"))
    }

    fn read(&self, text: &str) -> Option<Vector> {
        let bytes = fs::read(self.path_for(text)).ok()?;
        if bytes.len() != self.inner.dimension() * 4 {
            return None;
        }
        let components = bytes
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect();
        Some(Vector::new(components))
    }

    fn write(&self, text: &str, v: &Vector) -> std::io::Result<()> {
        let path = self.path_for(text);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut bytes = Vec::with_capacity(v.dimension() * 4);
        for &x in v.components() {
            bytes.extend_from_slice(&(x as f32).to_le_bytes());
        }
        fs::write(path, bytes)
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedProvider<P> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    /// Returns the cached vector when present, otherwise embeds, stores the
    /// `f32` encoding and returns the decoded value so that the first and
    /// later calls agree.
    fn embed(&self, text: &str) -> Vector {
        if let Some(v) = self.read(text) {
            return v;
        }
        let v = self.inner.embed(text);
        if self.write(text, &v).is_ok() {
            if let Some(stored) = self.read(text) {
                return stored;
            }
        }
        v
    }
}

fn format_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn describe_predicate(pred: &Predicate) -> String {
    match pred {
        Predicate::Equals { value } => value.clone(),
        Predicate::OneOf { values } => values.iter().cloned().collect::<Vec<_>>().join(" or "),
        Predicate::Range { lo: Some(lo), hi: Some(hi) } => {
            format!("{} to {}", format_number(*lo), format_number(*hi))
        }
        Predicate::Range { lo: None, hi: Some(hi) } => format!("under {}", format_number(*hi)),
        Predicate::Range { lo: Some(lo), hi: None } => format!("over {}", format_number(*lo)),
        Predicate::Range { lo: None, hi: None } => "any".to_string(),
    }
}

/// Query text for similarity ranking: `dim: value` pairs in schema order,
/// then `likes: ...`, then `avoids: ...`, each sentence ending with a period.
pub fn build_query_text(
    schema: &Schema,
    filters: &FilterSet,
    liked: &[String],
    disliked: &[String],
) -> String {
    let mut parts: Vec<String> = schema
        .names()
        .filter_map(|d| filters.get(d).map(|p| format!("{d}: {}.", describe_predicate(p))))
        .collect();
    if !liked.is_empty() {
        parts.push(format!("likes: {}.", liked.join(", ")));
    }
    if !disliked.is_empty() {
        parts.push(format!("avoids: {}.", disliked.join(", ")));
    }
    parts.join(" ")
}

/// Description and pros/cons vectors for every catalog item, computed once.
#[derive(Debug, Clone)]
pub struct ItemEmbeddings {
    pub descriptions: Vec<Vector>,
    pub pros: Vec<Vec<Vector>>,
    pub cons: Vec<Vec<Vector>>,
}

impl ItemEmbeddings {
    pub fn build(catalog: &Catalog, provider: &dyn EmbeddingProvider, exec: Execution) -> Self {
        let per_item = exec.map(catalog.items(), |item| {
            (
                provider.embed(&item.description),
                item.pros.iter().map(|p| provider.embed(p)).collect::<Vec<_>>(),
                item.cons.iter().map(|p| provider.embed(p)).collect::<Vec<_>>(),
            )
        });
        let mut descriptions = Vec::with_capacity(per_item.len());
        let mut pros = Vec::with_capacity(per_item.len());
        let mut cons = Vec::with_capacity(per_item.len());
        for (d, p, c) in per_item {
            descriptions.push(d);
            pros.push(p);
            cons.push(c);
        }
        Self {
            descriptions,
            pros,
            cons,
        }
    }
}
