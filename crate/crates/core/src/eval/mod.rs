//! Matching against gold and the automatable quality scores.

pub mod distribution;
pub mod matching;
pub mod metrics;
pub mod quality;
pub mod sample;

pub use distribution::{distribution_divergence, PredicateDistribution};
pub use matching::{match_triples, Assignment, MatchConfig, MatchMode, MatchPair, MatchResult};
pub use metrics::{metrics_from, Metrics};
pub use quality::{coverage_score, redundancy_score};
pub use sample::{sample_for_annotation, AnnotationRecord, QualitativeMetric};
