//! Scores runs against the gold set and writes `eval_report.json`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use triplex_core::eval::matching::{match_triples, Assignment, Fields, MatchConfig, MatchMode};
use triplex_core::eval::{coverage_score, distribution_divergence, metrics_from, redundancy_score, PredicateDistribution};
use triplex_core::{Embedder, GoldSet, PromptVariant, Triple};

use crate::error::{Error, Result};

pub const RECALL_NOTE: &str =
    "recall = matched pairs / |gold|; metrics are corpus-wide over all documents of a run";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalHeader {
    pub recall_denominator: String,
    pub gold_size: usize,
    pub gold_annotator: String,
    pub gold_source_note: String,
    pub tau: f64,
    pub assignment: Assignment,
    pub partial_min_fields: usize,
    pub embedding_model: String,
    pub redundancy_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalEntry {
    pub variant: PromptVariant,
    pub mode: MatchMode,
    pub predicted: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub pairs: usize,
    pub unmatched_predicted: usize,
    pub unmatched_gold: usize,
    pub tau: f64,
    pub assignment: Assignment,
    /// `None` when the run has no triples.
    pub redundancy: Option<f64>,
    pub jsd_to_gold: Option<f64>,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub header: EvalHeader,
    pub entries: Vec<EvalEntry>,
}

impl EvalReport {
    pub fn entry(&self, variant: PromptVariant, mode: MatchMode) -> Option<&EvalEntry> {
        self.entries.iter().find(|e| e.variant == variant && e.mode == mode)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvalSettings {
    pub tau: f64,
    pub partial_min_fields: usize,
    pub assignment: Assignment,
    pub redundancy_threshold: f64,
}

impl EvalSettings {
    fn match_config(&self, mode: MatchMode) -> MatchConfig {
        MatchConfig {
            mode,
            semantic_threshold: self.tau,
            partial_min_fields: self.partial_min_fields,
            assignment: self.assignment,
        }
    }
}

fn fields(t: &Triple) -> Fields<'_> {
    [t.subject.as_str(), t.predicate.as_str(), t.object.as_str()]
}

/// Evaluates each run in all three modes; runs are scored in parallel.
pub fn evaluate(
    runs: &[(PromptVariant, Vec<Triple>)],
    gold: &GoldSet,
    settings: &EvalSettings,
    embedder: &(dyn Embedder + Sync),
    embedding_model: &str,
) -> Result<EvalReport> {
    if gold.is_empty() {
        return Err(Error::Input("gold set is empty".into()));
    }
    let gold_fields: Vec<Fields> =
        gold.triples.iter().map(|g| [g.subject.as_str(), g.predicate.as_str(), g.object.as_str()]).collect();
    let gold_dist = PredicateDistribution::from_predicates(gold_fields.iter().map(|f| f[1]));

    let per_run: Vec<Result<Vec<EvalEntry>>> = runs
        .par_iter()
        .map(|(variant, triples)| {
            let pred: Vec<Fields> = triples.iter().map(fields).collect();
            let redundancy = if pred.is_empty() {
                None
            } else {
                Some(
                    redundancy_score(&pred, embedder, settings.redundancy_threshold)
                        .map_err(|e| Error::Endpoint(e.to_string()))?,
                )
            };
            let dist = PredicateDistribution::from_predicates(pred.iter().map(|f| f[1]));
            let jsd = distribution_divergence(&dist, &gold_dist).ok();
            let coverage = coverage_score(&pred, &gold_fields).map_err(|e| Error::Input(e.to_string()))?;
            MatchMode::ALL
                .into_iter()
                .map(|mode| {
                    let cfg = settings.match_config(mode);
                    let result = match_triples(&pred, &gold_fields, &cfg, Some(embedder))
                        .map_err(|e| Error::Endpoint(e.to_string()))?;
                    assert!(result.is_one_to_one(), "matching produced a non one-to-one result");
                    let m = metrics_from(result.pairs.len(), pred.len(), gold_fields.len())
                        .map_err(|e| Error::Input(e.to_string()))?;
                    Ok(EvalEntry {
                        variant: *variant,
                        mode,
                        predicted: pred.len(),
                        precision: m.precision,
                        recall: m.recall,
                        f1: m.f1,
                        pairs: result.pairs.len(),
                        unmatched_predicted: result.unmatched_predicted.len(),
                        unmatched_gold: result.unmatched_gold.len(),
                        tau: settings.tau,
                        assignment: settings.assignment,
                        redundancy,
                        jsd_to_gold: jsd,
                        coverage,
                    })
                })
                .collect()
        })
        .collect();

    let mut entries = Vec::new();
    for r in per_run {
        entries.extend(r?);
    }
    Ok(EvalReport {
        header: EvalHeader {
            recall_denominator: RECALL_NOTE.to_string(),
            gold_size: gold.len(),
            gold_annotator: gold.annotator.clone(),
            gold_source_note: gold.source_note.clone(),
            tau: settings.tau,
            assignment: settings.assignment,
            partial_min_fields: settings.partial_min_fields,
            embedding_model: embedding_model.to_string(),
            redundancy_threshold: settings.redundancy_threshold,
        },
        entries,
    })
}
