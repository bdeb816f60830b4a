use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    /// Builds from precision and recall; f1 is their harmonic mean (0 when both are 0).
    pub fn from_precision_recall(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TooManyPairs {
    pub pairs: usize,
    pub n_predicted: usize,
    pub n_gold: usize,
}

impl fmt::Display for TooManyPairs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} pairs cannot come from {} predicted and {} gold triples",
            self.pairs, self.n_predicted, self.n_gold
        )
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TooManyPairs {}

/// Precision over predictions, recall over gold.
pub fn metrics_from(pairs: usize, n_predicted: usize, n_gold: usize) -> Result<Metrics, TooManyPairs> {
    if pairs > n_predicted || pairs > n_gold {
        return Err(TooManyPairs { pairs, n_predicted, n_gold });
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok(Metrics::from_precision_recall(ratio(pairs, n_predicted), ratio(pairs, n_gold)))
}
