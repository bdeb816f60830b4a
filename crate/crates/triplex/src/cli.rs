//! Command-line entry points.
//!
//! Exit codes: 0 success, 1 finished with recorded partial failures,
//! 2 fatal configuration or input error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use triplex_core::eval::matching::MatchMode;
use triplex_core::extraction::plan_chunks;
use triplex_core::{CorpusIndex, PromptVariant};

use crate::annotate::write_sample;
use crate::client::Backend;
use crate::config::{BackendKind, HeatmapAxis, Overrides, PipelineConfig, Resolved};
use crate::error::{write_file, Error, Result};
use crate::evaluate::{evaluate, EvalReport, EvalSettings};
use crate::goldcsv::load_gold;
use crate::loader::{load_corpus, preprocess_corpus, read_corpus_cache, write_corpus_cache};
use crate::pipeline::{extract_parallel, load_runs, write_run};
use crate::render::render_report;

#[derive(Debug, Parser)]
#[command(name = "triplex", version, about = "Triple extraction and evaluation over trade agreement texts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Pipeline config file (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Prompt variant name, or `all`.
    #[arg(long, global = true)]
    pub variant: Option<String>,
    /// `live` or `mock`.
    #[arg(long, global = true)]
    pub backend: Option<BackendKind>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Parse and preprocess the corpus into corpus.jsonl.
    Ingest,
    /// Run extraction for one or all prompt variants.
    Extract,
    /// Score every run against the gold set.
    Eval,
    /// Render tables, charts and the heatmap.
    Report,
    /// Draw an annotation sample.
    Sample,
    /// ingest, extract all, eval, report.
    RunAll,
}

/// Whether a command finished cleanly or with recorded failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Clean,
    Partial,
}

impl Outcome {
    fn and(self, other: Outcome) -> Outcome {
        self.max(other)
    }
}

pub fn parse_variants(arg: Option<&str>) -> Result<Vec<PromptVariant>> {
    match arg {
        None | Some("all") => Ok(PromptVariant::ALL.to_vec()),
        Some(s) => s.parse::<PromptVariant>().map(|v| vec![v]).map_err(|e| Error::Input(format!("{e}, all"))),
    }
}

pub struct Session {
    pub config: Resolved,
    pub variants: Vec<PromptVariant>,
}

impl Session {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let variants = parse_variants(cli.variant.as_deref())?;
        let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config <file> is required".into()))?;
        let overrides =
            Overrides { backend: cli.backend, seed: cli.seed, output_dir: cli.out.clone(), endpoint_env: None }.with_env();
        let config = PipelineConfig::load(path, &overrides)?;
        Ok(Self { config, variants })
    }

    fn backend(&self) -> Backend {
        Backend::new(self.config.backend(), self.config.endpoint(), self.config.seed())
    }

    pub fn ingest(&self) -> Result<(CorpusIndex, Outcome)> {
        let c = &self.config;
        let mut corpus = load_corpus(&c.source_dir, c.raw.corpus.limit)?;
        preprocess_corpus(&mut corpus, &c.preprocess);
        write_corpus_cache(&c.corpus_cache(), &corpus)?;
        println!(
            "ingest: {} documents, {} load errors -> {}",
            corpus.documents.len(),
            corpus.load_errors.len(),
            c.corpus_cache().display()
        );
        for e in &corpus.load_errors {
            eprintln!("load error: {}: {}", e.filename, e.reason);
        }
        let outcome = if corpus.load_errors.is_empty() { Outcome::Clean } else { Outcome::Partial };
        Ok((corpus, outcome))
    }

    /// The cached corpus if present, else one parsed in memory.
    fn corpus(&self) -> Result<CorpusIndex> {
        let cache = self.config.corpus_cache();
        if cache.is_file() {
            return read_corpus_cache(&cache);
        }
        let mut corpus = load_corpus(&self.config.source_dir, self.config.raw.corpus.limit)?;
        preprocess_corpus(&mut corpus, &self.config.preprocess);
        Ok(corpus)
    }

    pub fn extract(&self) -> Result<Outcome> {
        let corpus = self.corpus()?;
        let tasks = plan_chunks(&corpus, &self.config.preprocess);
        let backend = self.backend();
        let mut outcome = Outcome::Clean;
        for &v in &self.variants {
            let settings = self.config.extraction_settings(v);
            let out = extract_parallel(&tasks, &settings, backend.completer(), backend.fingerprint())
                .map_err(|e| Error::Endpoint(format!("{v}: {e}")))?;
            write_run(&self.config.runs_dir(), &out, backend.latency_summary())?;
            let s = &out.run.stats;
            println!(
                "extract {v}: {} chunks, {} triples, {} rejected lines, {} failed chunks",
                s.chunks_processed,
                out.run.triples.len(),
                s.lines_rejected,
                s.chunks_failed
            );
            if s.chunks_failed > 0 || s.refine_failures > 0 {
                outcome = Outcome::Partial;
            }
        }
        Ok(outcome)
    }

    fn runs(&self) -> Result<Vec<(PromptVariant, Vec<triplex_core::Triple>)>> {
        let runs = load_runs(&self.config.runs_dir())?;
        if runs.is_empty() {
            return Err(Error::Input(format!("no runs found in {}", self.config.runs_dir().display())));
        }
        Ok(runs)
    }

    pub fn eval(&self) -> Result<Outcome> {
        let gold_path = self
            .config
            .gold_path
            .as_ref()
            .ok_or_else(|| Error::Config("eval.gold_path is not set".into()))?;
        let runs = self.runs()?;
        let (gold, _) = load_gold(gold_path)?;
        let backend = self.backend();
        let e = &self.config.raw.eval;
        let settings = EvalSettings {
            tau: e.semantic_threshold,
            partial_min_fields: e.partial_min_fields,
            assignment: e.assignment,
            redundancy_threshold: e.redundancy_threshold,
        };
        let report = evaluate(&runs, &gold, &settings, backend.embedder(), &backend.embedding_model())?;
        write_file(&self.config.eval_report_path(), report.to_json())?;
        for entry in report.entries.iter().filter(|e| e.mode != MatchMode::Partial) {
            println!(
                "eval {} {}: P={:.2} R={:.2} F1={:.2}",
                entry.variant,
                entry.mode.name(),
                entry.precision,
                entry.recall,
                entry.f1
            );
        }
        Ok(Outcome::Clean)
    }

    pub fn report(&self) -> Result<Outcome> {
        let path = self.config.eval_report_path();
        if !path.is_file() {
            return Err(Error::Input(format!("{} not found; run eval first", path.display())));
        }
        let report: EvalReport = serde_json::from_str(&crate::error::read_to_string(&path)?)
            .map_err(|e| Error::parse(&path, e))?;
        let runs = self.runs()?;
        let corpus = match self.config.raw.report.heatmap_axis {
            HeatmapAxis::Sectors => Some(read_corpus_cache(&self.config.corpus_cache())?),
            HeatmapAxis::Variants => None,
        };
        let files = render_report(&report, &runs, corpus.as_ref(), &self.config.raw.report, &self.config.report_dir())?;
        println!("report: {} files in {}", files.len(), self.config.report_dir().display());
        Ok(Outcome::Clean)
    }

    pub fn sample(&self) -> Result<Outcome> {
        let runs: Vec<_> = self.runs()?.into_iter().filter(|(v, _)| self.variants.contains(v)).collect();
        if runs.is_empty() {
            return Err(Error::Input("no runs found for the requested variant".into()));
        }
        let path = self.config.sample_path();
        write_sample(&path, &runs, self.config.raw.eval.sample_size, self.config.seed())?;
        println!("sample: {}", path.display());
        Ok(Outcome::Clean)
    }

    pub fn run(&self, command: Command) -> Result<Outcome> {
        match command {
            Command::Ingest => self.ingest().map(|r| r.1),
            Command::Extract => self.extract(),
            Command::Eval => self.eval(),
            Command::Report => self.report(),
            Command::Sample => self.sample(),
            Command::RunAll => {
                let (_, a) = self.ingest()?;
                let b = self.extract()?;
                let c = self.eval()?;
                let d = self.report()?;
                Ok(a.and(b).and(c).and(d))
            }
        }
    }
}

pub fn main_with(cli: Cli) -> ExitCode {
    let result = Session::from_cli(&cli).and_then(|s| s.run(cli.command));
    match result {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
