//! `annotation_sample.csv` for human scoring.

use std::path::Path;

use triplex_core::eval::sample::{sample_for_annotation, QualitativeMetric};
use triplex_core::hash::fnv1a64;
use triplex_core::{PromptVariant, Triple};

use crate::error::{write_file, Error, Result};

/// Seed for one variant, so adding a variant leaves the others unchanged.
pub fn variant_seed(seed: u64, variant: PromptVariant) -> u64 {
    seed ^ fnv1a64(variant.name().as_bytes())
}

pub fn sample_csv(runs: &[(PromptVariant, Vec<Triple>)], n: usize, seed: u64) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = vec!["variant", "run_index", "doc_id", "article_id", "subject", "predicate", "object"];
    header.extend(QualitativeMetric::ALL.iter().map(|m| m.key()));
    header.push("comment");
    w.write_record(&header).map_err(|e| Error::Input(e.to_string()))?;
    for (v, triples) in runs {
        let records = match sample_for_annotation(triples, n, variant_seed(seed, *v)) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{v}: {e}");
                continue;
            }
        };
        for r in records {
            let t = &r.triple;
            let mut row = vec![
                v.name().to_string(),
                r.run_index.to_string(),
                t.doc_id.clone(),
                t.article_id.clone(),
                t.subject.clone(),
                t.predicate.clone(),
                t.object.clone(),
            ];
            row.extend(QualitativeMetric::ALL.iter().map(|m| r.score(*m).map(|s| s.to_string()).unwrap_or_default()));
            row.push(r.comment.clone());
            w.write_record(&row).map_err(|e| Error::Input(e.to_string()))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of UTF-8 fields is UTF-8"))
}

pub fn write_sample(path: &Path, runs: &[(PromptVariant, Vec<Triple>)], n: usize, seed: u64) -> Result<()> {
    write_file(path, sample_csv(runs, n, seed)?)
}
