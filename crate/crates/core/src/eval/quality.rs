//! Automated proxies for redundancy and coverage.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use super::matching::{EmbeddingTable, Fields, MatchError};
use crate::backend::Embedder;

pub const DEFAULT_REDUNDANCY_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub enum QualityError {
    NoTriples,
    EmptyGold,
    Embedding(MatchError),
}

impl fmt::Display for QualityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QualityError::NoTriples => f.write_str("redundancy needs at least one triple"),
            QualityError::EmptyGold => f.write_str("coverage needs a non-empty gold set"),
            QualityError::Embedding(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for QualityError {}

/// Fraction of triples with another triple of identical subject and object
/// whose predicate embedding has cosine at least `threshold`.
pub fn redundancy_score<E: Embedder + ?Sized>(
    triples: &[Fields<'_>],
    embedder: &E,
    threshold: f64,
) -> Result<f64, QualityError> {
    if triples.is_empty() {
        return Err(QualityError::NoTriples);
    }
    let mut groups: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for (i, [s, _, o]) in triples.iter().enumerate() {
        groups.entry((s, o)).or_default().push(i);
    }
    let shared: Vec<&Vec<usize>> = groups.values().filter(|g| g.len() > 1).collect();
    if shared.is_empty() {
        return Ok(0.0);
    }
    let predicates: BTreeSet<&str> =
        shared.iter().flat_map(|g| g.iter().map(|&i| triples[i][1])).collect();
    let table = EmbeddingTable::build(predicates.into_iter().collect(), embedder)
        .map_err(QualityError::Embedding)?;
    let mut redundant = 0usize;
    for group in shared {
        for &i in group {
            let hit = group
                .iter()
                .any(|&j| j != i && table.similarity(triples[i][1], triples[j][1]) >= threshold);
            if hit {
                redundant += 1;
            }
        }
    }
    Ok(redundant as f64 / triples.len() as f64)
}

/// Fraction of gold entities (subjects and objects) that appear as a subject
/// or object of some predicted triple.
pub fn coverage_score(predicted: &[Fields<'_>], gold: &[Fields<'_>]) -> Result<f64, QualityError> {
    if gold.is_empty() {
        return Err(QualityError::EmptyGold);
    }
    let gold_entities: BTreeSet<&str> = gold.iter().flat_map(|[s, _, o]| [*s, *o]).collect();
    let mentioned: BTreeSet<&str> = predicted.iter().flat_map(|[s, _, o]| [*s, *o]).collect();
    let covered = gold_entities.iter().filter(|e| mentioned.contains(*e)).count();
    Ok(covered as f64 / gold_entities.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock::MockEmbedder;

    #[test]
    fn distinct_pairs_not_redundant() {
        let t = [["a", "x", "b"], ["a", "x", "c"], ["d", "x", "b"]];
        assert_eq!(redundancy_score(&t, &MockEmbedder, 0.9).unwrap(), 0.0);
    }

    #[test]
    fn single_triple() {
        assert_eq!(redundancy_score(&[["a", "x", "b"]], &MockEmbedder, 0.9).unwrap(), 0.0);
        assert_eq!(redundancy_score(&[], &MockEmbedder, 0.9), Err(QualityError::NoTriples));
    }

    #[test]
    fn coverage_ratio() {
        let gold = [["a", "p", "b"], ["c", "p", "d"]];
        assert_eq!(coverage_score(&[["a", "q", "z"], ["y", "q", "c"]], &gold).unwrap(), 0.5);
        assert_eq!(coverage_score(&gold, &gold).unwrap(), 1.0);
        assert_eq!(coverage_score(&[], &gold).unwrap(), 0.0);
        assert_eq!(coverage_score(&gold, &[]), Err(QualityError::EmptyGold));
    }
}
