//! Parallel extraction and the `runs/` file formats.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use triplex_core::extraction::{
    assemble_run, extract_chunk, ChunkFailure, ChunkTask, ExtractError, ExtractionSettings,
};
use triplex_core::prompting::prompt_fingerprint;
use triplex_core::{Completer, ExtractionRun, ExtractionStats, PromptVariant, Triple};

use crate::client::LatencySummary;
use crate::error::{read_to_string, write_file, Error, Result};

/// A rejected output line with the chunk it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocatedRejection {
    pub doc_id: String,
    pub article_id: String,
    pub chunk_index: usize,
    pub line_number: usize,
    pub line: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub run: ExtractionRun,
    pub rejections: Vec<LocatedRejection>,
}

/// Extracts every task in parallel; results merge in task order, so output
/// does not depend on scheduling.
pub fn extract_parallel(
    tasks: &[ChunkTask],
    settings: &ExtractionSettings,
    completer: &(dyn Completer + Sync),
    endpoint_fingerprint: String,
) -> Result<RunOutput, ExtractError> {
    let results: Vec<Result<_, ExtractError>> =
        tasks.par_iter().map(|t| extract_chunk(completer, settings, t)).collect();
    let mut outcomes = Vec::with_capacity(results.len());
    let mut rejections = Vec::new();
    for (task, r) in tasks.iter().zip(results) {
        let outcome = r?;
        rejections.extend(outcome.rejections.iter().map(|r| LocatedRejection {
            doc_id: task.doc_id.clone(),
            article_id: task.article_id.clone(),
            chunk_index: task.chunk_index,
            line_number: r.line_number,
            line: r.line.clone(),
            reason: r.reason.clone(),
        }));
        outcomes.push(outcome);
    }
    let prompt_fp = prompt_fingerprint(settings.variant, &settings.bank, &settings.templates);
    let run = assemble_run(settings, outcomes, endpoint_fingerprint, prompt_fp)?;
    Ok(RunOutput { run, rejections })
}

/// Contents of `runs/<variant>.stats.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub variant: PromptVariant,
    pub triples: usize,
    pub endpoint_fingerprint: String,
    pub prompt_fingerprint: String,
    pub stats: ExtractionStats,
    pub failures: Vec<ChunkFailure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency: Option<LatencySummary>,
}

pub fn triples_jsonl(triples: &[Triple]) -> String {
    let mut out = String::new();
    for t in triples {
        out.push_str(&serde_json::to_string(t).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    items.iter().map(|i| serde_json::to_string(i).expect("plain data serializes") + "\n").collect()
}

/// Writes the run, its stats and its rejected lines.
pub fn write_run(runs_dir: &Path, output: &RunOutput, latency: Option<LatencySummary>) -> Result<()> {
    let run = &output.run;
    let name = run.variant.name();
    write_file(&runs_dir.join(format!("{name}.jsonl")), triples_jsonl(&run.triples))?;
    let stats = RunStats {
        variant: run.variant,
        triples: run.triples.len(),
        endpoint_fingerprint: run.endpoint_fingerprint.clone(),
        prompt_fingerprint: run.prompt_fingerprint.clone(),
        stats: run.stats,
        failures: run.failures.clone(),
        latency,
    };
    let mut text = serde_json::to_string_pretty(&stats).expect("plain data serializes");
    text.push('\n');
    write_file(&runs_dir.join(format!("{name}.stats.json")), text)?;
    write_file(&runs_dir.join(format!("{name}.rejections.jsonl")), jsonl(&output.rejections))
}

pub fn read_run(path: &Path) -> Result<Vec<Triple>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let t: Triple = serde_json::from_str(line)
            .map_err(|e| Error::parse(path, format!("line {}: {e}", i + 1)))?;
        out.push(t);
    }
    Ok(out)
}

/// Run files present in `runs_dir`, in variant order.
pub fn discover_runs(runs_dir: &Path) -> Vec<(PromptVariant, PathBuf)> {
    PromptVariant::ALL
        .into_iter()
        .map(|v| (v, runs_dir.join(format!("{}.jsonl", v.name()))))
        .filter(|(_, p)| p.is_file())
        .collect()
}

pub fn load_runs(runs_dir: &Path) -> Result<Vec<(PromptVariant, Vec<Triple>)>> {
    discover_runs(runs_dir)
        .into_iter()
        .map(|(v, p)| {
            let triples = read_run(&p)?;
            if let Some(t) = triples.iter().find(|t| t.variant != v) {
                return Err(Error::parse(&p, format!("contains a {} triple", t.variant)));
            }
            Ok((v, triples))
        })
        .collect()
}
