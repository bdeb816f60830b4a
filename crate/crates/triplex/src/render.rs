//! Writes the `report/` directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use triplex_core::eval::matching::MatchMode;
use triplex_core::eval::{Metrics, PredicateDistribution};
use triplex_core::report::svg::HeatmapSpec;
use triplex_core::report::{frequency_chart, heatmap, MetricsTable};
use triplex_core::{CorpusIndex, PromptVariant, Triple};

use crate::config::{HeatmapAxis, ReportSection};
use crate::error::{write_file, Error, Result};
use crate::evaluate::EvalReport;

#[derive(Debug, Serialize)]
struct ChartInfo {
    variant: PromptVariant,
    file: Option<String>,
    total: u64,
    distinct_predicates: usize,
    top: Vec<(String, u64)>,
}

#[derive(Debug, Serialize)]
struct HeatmapInfo {
    axis: HeatmapAxis,
    file: String,
    spec: HeatmapSpec,
}

#[derive(Debug, Serialize)]
struct ReportBundle<'a> {
    metrics: MetricsTable,
    eval: &'a EvalReport,
    charts: Vec<ChartInfo>,
    heatmap: Option<HeatmapInfo>,
    files: Vec<String>,
}

fn metrics_of(report: &EvalReport, v: PromptVariant, mode: MatchMode) -> Result<Metrics> {
    let e = report
        .entry(v, mode)
        .ok_or_else(|| Error::Input(format!("eval report lacks {} {} entry", v, mode.name())))?;
    Ok(Metrics { precision: e.precision, recall: e.recall, f1: e.f1 })
}

/// Predicate distributions per sector, over every run.
fn sector_columns(runs: &[(PromptVariant, Vec<Triple>)], corpus: &CorpusIndex) -> Vec<(String, PredicateDistribution)> {
    let sectors_of: BTreeMap<&str, &Vec<String>> =
        corpus.documents.iter().map(|d| (d.doc_id.as_str(), &d.sectors)).collect();
    let mut cols: BTreeMap<String, PredicateDistribution> = BTreeMap::new();
    for (_, triples) in runs {
        for t in triples {
            for s in sectors_of.get(t.doc_id.as_str()).into_iter().flat_map(|v| v.iter()) {
                cols.entry(s.clone()).or_default().add(&t.predicate, 1);
            }
        }
    }
    cols.into_iter().collect()
}

/// Renders every artifact into `dir` and returns the written file names.
pub fn render_report(
    report: &EvalReport,
    runs: &[(PromptVariant, Vec<Triple>)],
    corpus: Option<&CorpusIndex>,
    section: &ReportSection,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let write = |name: &str, contents: String, written: &mut Vec<PathBuf>| -> Result<()> {
        let p = dir.join(name);
        write_file(&p, contents)?;
        written.push(p);
        Ok(())
    };

    let entries: Vec<(PromptVariant, Metrics, Metrics)> = runs
        .iter()
        .map(|(v, _)| Ok((*v, metrics_of(report, *v, MatchMode::Exact)?, metrics_of(report, *v, MatchMode::Semantic)?)))
        .collect::<Result<_>>()?;
    let table = MetricsTable::new(&entries).map_err(|e| Error::Input(e.to_string()))?;
    write("metrics.csv", table.to_csv(), &mut written)?;
    write("metrics.txt", table.to_text(), &mut written)?;

    let dists: Vec<(PromptVariant, PredicateDistribution)> = runs
        .iter()
        .map(|(v, ts)| (*v, PredicateDistribution::from_predicates(ts.iter().map(|t| t.predicate.as_str()))))
        .collect();
    let mut charts = Vec::new();
    for (v, d) in &dists {
        let file = match frequency_chart(d, section.chart_top_k, &format!("Predicate frequency: {}", v.label())) {
            Ok(svg) => {
                let name = format!("freq_{}.svg", v.name());
                write(&name, svg, &mut written)?;
                Some(name)
            }
            Err(e) => {
                log::warn!("no chart for {v}: {e}");
                None
            }
        };
        charts.push(ChartInfo {
            variant: *v,
            file,
            total: d.total,
            distinct_predicates: d.counts.len(),
            top: d.ranked().into_iter().take(section.chart_top_k).map(|(p, c)| (p.to_string(), c)).collect(),
        });
    }

    let columns: Vec<(String, PredicateDistribution)> = match section.heatmap_axis {
        HeatmapAxis::Variants => dists.iter().map(|(v, d)| (v.label().to_string(), d.clone())).collect(),
        HeatmapAxis::Sectors => {
            let corpus = corpus.ok_or_else(|| Error::Input("the sectors heatmap needs corpus.jsonl; run ingest first".into()))?;
            sector_columns(runs, corpus)
        }
    };
    let column_refs: Vec<(String, &PredicateDistribution)> = columns.iter().map(|(l, d)| (l.clone(), d)).collect();
    let spec = HeatmapSpec::from_distributions(&column_refs, section.heatmap_top_k);
    let heatmap_info = if spec.rows.is_empty() || spec.columns.is_empty() {
        log::warn!("no predicates to draw a heatmap from");
        None
    } else {
        let title = match section.heatmap_axis {
            HeatmapAxis::Variants => "Predicate share by prompt variant",
            HeatmapAxis::Sectors => "Predicate share by sector",
        };
        let svg = heatmap(&spec, title).map_err(|e| Error::Input(e.to_string()))?;
        write("heatmap.svg", svg, &mut written)?;
        Some(HeatmapInfo { axis: section.heatmap_axis, file: "heatmap.svg".into(), spec })
    };

    let mut files: Vec<String> =
        written.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect();
    files.push("report.json".into());
    let bundle = ReportBundle { metrics: table, eval: report, charts, heatmap: heatmap_info, files };
    let mut json = serde_json::to_string_pretty(&bundle).expect("plain data serializes");
    json.push('\n');
    write("report.json", json, &mut written)?;
    Ok(written)
}
