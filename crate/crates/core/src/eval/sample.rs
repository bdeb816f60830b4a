//! Random sampling of triples for human annotation.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::extraction::Triple;

pub const DEFAULT_SAMPLE_SIZE: usize = 100;

/// The eight qualitative criteria, scored 1 to 5 by an annotator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualitativeMetric {
    RelationValidation,
    EntityRelationCoherence,
    TripleCompleteness,
    SemanticCorrectness,
    InformationGain,
    Redundancy,
    PredicateDistribution,
    Coverage,
}

impl QualitativeMetric {
    pub const ALL: [QualitativeMetric; 8] = [
        QualitativeMetric::RelationValidation,
        QualitativeMetric::EntityRelationCoherence,
        QualitativeMetric::TripleCompleteness,
        QualitativeMetric::SemanticCorrectness,
        QualitativeMetric::InformationGain,
        QualitativeMetric::Redundancy,
        QualitativeMetric::PredicateDistribution,
        QualitativeMetric::Coverage,
    ];

    pub fn key(self) -> &'static str {
        match self {
            QualitativeMetric::RelationValidation => "relation_validation",
            QualitativeMetric::EntityRelationCoherence => "entity_relation_coherence",
            QualitativeMetric::TripleCompleteness => "triple_completeness",
            QualitativeMetric::SemanticCorrectness => "semantic_correctness",
            QualitativeMetric::InformationGain => "information_gain",
            QualitativeMetric::Redundancy => "redundancy",
            QualitativeMetric::PredicateDistribution => "predicate_distribution",
            QualitativeMetric::Coverage => "coverage",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.key() == key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoreOutOfRange(pub u8);

impl fmt::Display for ScoreOutOfRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "score {} is outside 1..=5", self.0)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ScoreOutOfRange {}

/// One triple under annotation; unscored criteria are `None`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    /// Position of the triple in its run.
    pub run_index: usize,
    pub triple: Triple,
    scores: [Option<u8>; 8],
    pub comment: String,
    pub annotator: String,
}

impl AnnotationRecord {
    pub fn blank(run_index: usize, triple: Triple) -> Self {
        Self { run_index, triple, scores: [None; 8], comment: String::new(), annotator: String::new() }
    }

    pub fn score(&self, metric: QualitativeMetric) -> Option<u8> {
        self.scores[metric as usize]
    }

    pub fn set_score(&mut self, metric: QualitativeMetric, score: u8) -> Result<(), ScoreOutOfRange> {
        if !(1..=5).contains(&score) {
            return Err(ScoreOutOfRange(score));
        }
        self.scores[metric as usize] = Some(score);
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.scores.iter().all(Option::is_some)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmptyRun;

impl fmt::Display for EmptyRun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("cannot sample from a run with no triples")
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EmptyRun {}

/// Uniform sample of `n` triples without replacement, in run order.
pub fn sample_for_annotation(
    triples: &[Triple],
    n: usize,
    seed: u64,
) -> Result<Vec<AnnotationRecord>, EmptyRun> {
    if triples.is_empty() {
        return Err(EmptyRun);
    }
    let picks: Vec<usize> = if n >= triples.len() {
        (0..triples.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = index::sample(&mut rng, triples.len(), n).into_vec();
        v.sort_unstable();
        v
    };
    Ok(picks.into_iter().map(|i| AnnotationRecord::blank(i, triples[i].clone())).collect())
}
