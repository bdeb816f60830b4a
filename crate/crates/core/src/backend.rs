//! Model access traits and the embedding vector type.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompletionError {
    /// Transport failures that survived every retry.
    Transient(String),
    /// Misconfiguration; retrying cannot help (HTTP 4xx, bad profile).
    Fatal(String),
    /// The request violated a precondition before anything was sent.
    InvalidInput(String),
}

impl fmt::Display for CompletionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompletionError::Transient(m) => write!(f, "request failed after retries: {m}"),
            CompletionError::Fatal(m) => write!(f, "fatal endpoint error: {m}"),
            CompletionError::InvalidInput(m) => write!(f, "invalid request: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CompletionError {}

/// A chat-completion backend.
pub trait Completer {
    fn complete(&self, prompt: &str) -> Result<String, CompletionError>;
}

/// An embedding backend. Implementations return one unit vector per input, in order.
pub trait Embedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, CompletionError>;
}

impl<T: Completer + ?Sized> Completer for &T {
    fn complete(&self, prompt: &str) -> Result<String, CompletionError> {
        (**self).complete(prompt)
    }
}

impl<T: Embedder + ?Sized> Embedder for &T {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, CompletionError> {
        (**self).embed(texts)
    }
}

/// Checks the shared `embed` precondition.
pub fn check_embed_input(texts: &[String]) -> Result<(), CompletionError> {
    if texts.is_empty() {
        return Err(CompletionError::InvalidInput("embed called with no texts".into()));
    }
    if let Some(i) = texts.iter().position(|t| t.is_empty()) {
        return Err(CompletionError::InvalidInput(alloc::format!("text {i} is empty")));
    }
    Ok(())
}

/// A unit-length embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorError {
    Empty,
    NonFinite,
    ZeroNorm,
}

impl fmt::Display for VectorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VectorError::Empty => "embedding has no components",
            VectorError::NonFinite => "embedding has a non-finite component",
            VectorError::ZeroNorm => "embedding has zero norm",
        })
    }
}

#[cfg(feature = "std")]
impl std::error::Error for VectorError {}

impl EmbeddingVector {
    /// Normalizes `values` to unit L2 norm.
    pub fn new(mut values: Vec<f64>) -> Result<Self, VectorError> {
        if values.is_empty() {
            return Err(VectorError::Empty);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(VectorError::NonFinite);
        }
        let norm = libm::sqrt(values.iter().map(|v| v * v).sum::<f64>());
        if norm <= 0.0 || !norm.is_finite() {
            return Err(VectorError::ZeroNorm);
        }
        for v in &mut values {
            *v /= norm;
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum::<f64>())
    }

    /// Cosine similarity, clamped to [-1, 1].
    ///
    /// Panics if the dimensions differ.
    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        assert_eq!(self.dimension(), other.dimension(), "embedding dimensions differ");
        let dot: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        dot.clamp(-1.0, 1.0)
    }
}
