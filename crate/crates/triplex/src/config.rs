//! The single JSON pipeline config.
//!
//! Relative paths resolve against the directory holding the config file.
//! [`PipelineConfig::resolve`] reads and validates every referenced file
//! before any command writes output.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use triplex_core::corpus::{DEFAULT_MAX_CHUNK_CHARS, MIN_CHUNK_CHARS};
use triplex_core::eval::matching::{Assignment, MatchConfig, MatchMode, DEFAULT_SEMANTIC_THRESHOLD};
use triplex_core::eval::quality::DEFAULT_REDUNDANCY_THRESHOLD;
use triplex_core::eval::sample::DEFAULT_SAMPLE_SIZE;
use triplex_core::extraction::{ExtractionSettings, GenericLexicon, DEFAULT_CAP_PER_DOCUMENT};
use triplex_core::prompting::{validate_bank, Templates};
use triplex_core::report::svg::{DEFAULT_CHART_TOP_K, DEFAULT_HEATMAP_TOP_K};
use triplex_core::{ExampleBank, PreprocessConfig, PromptVariant};

use crate::error::{read_to_string, Error, Result};

pub const ENDPOINT_ENV: &str = "TRIPLEX_ENDPOINT";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Live,
    Mock,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "live" => Ok(BackendKind::Live),
            "mock" => Ok(BackendKind::Mock),
            other => Err(format!("unknown backend {other:?}; valid: live, mock")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub source_dir: PathBuf,
    pub limit: Option<usize>,
    /// One word per line; `#` starts a comment. Absent means the built-in list.
    pub stopwords_file: Option<PathBuf>,
    pub filler_terms_file: Option<PathBuf>,
    pub lowercase: bool,
    pub collapse_whitespace: bool,
    pub max_chunk_chars: usize,
}

impl Default for CorpusSection {
    fn default() -> Self {
        Self {
            source_dir: PathBuf::from("corpus"),
            limit: None,
            stopwords_file: None,
            filler_terms_file: None,
            lowercase: false,
            collapse_whitespace: true,
            max_chunk_chars: DEFAULT_MAX_CHUNK_CHARS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProfileStyle {
    /// `/api/chat` and `/api/embeddings` bodies.
    #[default]
    Ollama,
    /// `/v1/chat/completions` and `/v1/embeddings` bodies.
    Openai,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointProfile {
    pub style: ProfileStyle,
    pub chat_path: Option<String>,
    pub embed_path: Option<String>,
    /// Environment variable holding a bearer token, if any.
    pub api_key_env: Option<String>,
    /// Texts per embedding request for the openai style.
    pub embed_batch_size: usize,
}

impl Default for EndpointProfile {
    fn default() -> Self {
        Self { style: ProfileStyle::Ollama, chat_path: None, embed_path: None, api_key_env: None, embed_batch_size: 32 }
    }
}

impl EndpointProfile {
    pub fn chat_path(&self) -> &str {
        self.chat_path.as_deref().unwrap_or(match self.style {
            ProfileStyle::Ollama => "/api/chat",
            ProfileStyle::Openai => "/v1/chat/completions",
        })
    }

    pub fn embed_path(&self) -> &str {
        self.embed_path.as_deref().unwrap_or(match self.style {
            ProfileStyle::Ollama => "/api/embeddings",
            ProfileStyle::Openai => "/v1/embeddings",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_name: String,
    pub embedding_model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_ms: u64,
    pub max_retries: u32,
    /// First retry delay; doubles on each further attempt.
    pub backoff_ms: u64,
    pub max_parallel_requests: usize,
    pub seed: Option<u64>,
    pub profile: EndpointProfile,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:11434".into(),
            model_name: "llama3.1:70b".into(),
            embedding_model: "nomic-embed-text".into(),
            temperature: 0.0,
            max_tokens: 2048,
            timeout_ms: 120_000,
            max_retries: 3,
            backoff_ms: 500,
            max_parallel_requests: 4,
            seed: None,
            profile: EndpointProfile::default(),
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return bad(format!("endpoint.base_url must be an http(s) URL, got {:?}", self.base_url));
        }
        if self.model_name.trim().is_empty() {
            return bad("endpoint.model_name is empty".into());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad(format!("endpoint.temperature must be in [0, 2], got {}", self.temperature));
        }
        if self.max_tokens == 0 || self.timeout_ms == 0 {
            return bad("endpoint.max_tokens and endpoint.timeout_ms must be positive".into());
        }
        if self.max_parallel_requests == 0 {
            return bad("endpoint.max_parallel_requests must be at least 1".into());
        }
        if self.max_retries > 10 {
            return bad(format!("endpoint.max_retries must be at most 10, got {}", self.max_retries));
        }
        if self.profile.embed_batch_size == 0 {
            return bad("endpoint.profile.embed_batch_size must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PromptsSection {
    /// Holds `<variant>.txt` for all four variants.
    pub template_dir: Option<PathBuf>,
    pub examples_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionSection {
    pub cap_per_document: usize,
    pub generic_terms_file: Option<PathBuf>,
}

impl Default for ExtractionSection {
    fn default() -> Self {
        Self { cap_per_document: DEFAULT_CAP_PER_DOCUMENT, generic_terms_file: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub gold_path: Option<PathBuf>,
    pub semantic_threshold: f64,
    pub partial_min_fields: usize,
    pub assignment: Assignment,
    pub sample_size: usize,
    pub redundancy_threshold: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            gold_path: None,
            semantic_threshold: DEFAULT_SEMANTIC_THRESHOLD,
            partial_min_fields: 2,
            assignment: Assignment::Greedy,
            sample_size: DEFAULT_SAMPLE_SIZE,
            redundancy_threshold: DEFAULT_REDUNDANCY_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HeatmapAxis {
    #[default]
    Variants,
    Sectors,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub chart_top_k: usize,
    pub heatmap_top_k: usize,
    pub heatmap_axis: HeatmapAxis,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self { chart_top_k: DEFAULT_CHART_TOP_K, heatmap_top_k: DEFAULT_HEATMAP_TOP_K, heatmap_axis: HeatmapAxis::Variants }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: CorpusSection,
    pub endpoint: EndpointConfig,
    pub prompts: PromptsSection,
    pub extraction: ExtractionSection,
    pub eval: EvalSection,
    pub report: ReportSection,
    pub backend: BackendKind,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: CorpusSection::default(),
            endpoint: EndpointConfig::default(),
            prompts: PromptsSection::default(),
            extraction: ExtractionSection::default(),
            eval: EvalSection::default(),
            report: ReportSection::default(),
            backend: BackendKind::Live,
            output_dir: PathBuf::from("out"),
            seed: DEFAULT_SEED,
        }
    }
}

/// Command-line values that win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub backend: Option<BackendKind>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub endpoint_env: Option<String>,
}

impl Overrides {
    pub fn with_env(mut self) -> Self {
        self.endpoint_env = std::env::var(ENDPOINT_ENV).ok().filter(|v| !v.trim().is_empty());
        self
    }
}

/// A validated config with every referenced file loaded.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub raw: PipelineConfig,
    pub source_dir: PathBuf,
    pub preprocess: PreprocessConfig,
    pub bank: ExampleBank,
    pub templates: Templates,
    pub lexicon: GenericLexicon,
    pub gold_path: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Resolved {
    pub fn backend(&self) -> BackendKind {
        self.raw.backend
    }

    pub fn seed(&self) -> u64 {
        self.raw.seed
    }

    pub fn endpoint(&self) -> &EndpointConfig {
        &self.raw.endpoint
    }

    pub fn match_config(&self, mode: MatchMode) -> MatchConfig {
        MatchConfig {
            mode,
            semantic_threshold: self.raw.eval.semantic_threshold,
            partial_min_fields: self.raw.eval.partial_min_fields,
            assignment: self.raw.eval.assignment,
        }
    }

    pub fn extraction_settings(&self, variant: PromptVariant) -> ExtractionSettings {
        ExtractionSettings {
            variant,
            bank: self.bank.clone(),
            templates: self.templates.clone(),
            lexicon: self.lexicon.clone(),
            cap_per_document: self.raw.extraction.cap_per_document,
        }
    }

    pub fn corpus_cache(&self) -> PathBuf {
        self.output_dir.join("corpus.jsonl")
    }

    pub fn runs_dir(&self) -> PathBuf {
        self.output_dir.join("runs")
    }

    pub fn run_path(&self, variant: PromptVariant) -> PathBuf {
        self.runs_dir().join(format!("{}.jsonl", variant.name()))
    }

    pub fn stats_path(&self, variant: PromptVariant) -> PathBuf {
        self.runs_dir().join(format!("{}.stats.json", variant.name()))
    }

    pub fn eval_report_path(&self) -> PathBuf {
        self.output_dir.join("eval_report.json")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.output_dir.join("report")
    }

    pub fn sample_path(&self) -> PathBuf {
        self.output_dir.join("annotation_sample.csv")
    }
}

fn rel(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Reads a one-term-per-line list; blank lines and `#` comments are skipped.
pub fn read_word_list(path: &Path) -> Result<BTreeSet<String>> {
    Ok(read_to_string(path)?
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

fn require_file(what: &str, path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} {} does not exist", path.display())))
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Reads, overrides, validates and loads referenced files.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Resolved> {
        let text = read_to_string(path)?;
        let raw = Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        raw.resolve(&base, overrides)
    }

    pub fn resolve(mut self, base: &Path, overrides: &Overrides) -> Result<Resolved> {
        if let Some(b) = overrides.backend {
            self.backend = b;
        }
        if let Some(s) = overrides.seed {
            self.seed = s;
        }
        if let Some(url) = &overrides.endpoint_env {
            self.endpoint.base_url = url.trim_end_matches('/').to_string();
        }
        let output_dir = match &overrides.output_dir {
            Some(o) => o.clone(),
            None => rel(base, &self.output_dir),
        };

        self.endpoint.validate()?;
        let c = &self.corpus;
        let source_dir = rel(base, &c.source_dir);
        if !source_dir.is_dir() {
            return Err(Error::Config(format!("corpus directory {} does not exist", source_dir.display())));
        }
        if c.limit == Some(0) {
            return Err(Error::Config("corpus.limit must be positive".into()));
        }
        if c.max_chunk_chars < MIN_CHUNK_CHARS {
            return Err(Error::Config(format!(
                "corpus.max_chunk_chars must be at least {MIN_CHUNK_CHARS}, got {}",
                c.max_chunk_chars
            )));
        }
        let mut preprocess = PreprocessConfig {
            lowercase: c.lowercase,
            collapse_whitespace: c.collapse_whitespace,
            max_chunk_chars: c.max_chunk_chars,
            ..PreprocessConfig::default()
        };
        if let Some(p) = &c.stopwords_file {
            let p = rel(base, p);
            require_file("stopwords file", &p)?;
            preprocess.stopwords = read_word_list(&p)?;
        }
        if let Some(p) = &c.filler_terms_file {
            let p = rel(base, p);
            require_file("filler terms file", &p)?;
            preprocess.domain_filler_terms = read_word_list(&p)?;
        }

        let bank = match &self.prompts.examples_file {
            Some(p) => {
                let p = rel(base, p);
                require_file("examples file", &p)?;
                serde_json::from_str::<ExampleBank>(&read_to_string(&p)?)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => ExampleBank::default(),
        };
        for v in PromptVariant::ALL {
            let missing = validate_bank(&bank, v);
            if !missing.is_empty() {
                let list: Vec<String> = missing.iter().map(|d| d.to_string()).collect();
                return Err(Error::Config(format!("example bank cannot build {v}: {}", list.join(", "))));
            }
        }

        let templates = match &self.prompts.template_dir {
            Some(dir) => {
                let dir = rel(base, dir);
                let mut frames = BTreeMap::new();
                for v in PromptVariant::ALL {
                    let p = dir.join(format!("{}.txt", v.name()));
                    require_file("template", &p)?;
                    frames.insert(v, read_to_string(&p)?);
                }
                Templates::new(frames).map_err(|e| Error::Config(e.to_string()))?
            }
            None => Templates::default(),
        };

        let lexicon = match &self.extraction.generic_terms_file {
            Some(p) => {
                let p = rel(base, p);
                require_file("generic terms file", &p)?;
                GenericLexicon::new(read_word_list(&p)?)
            }
            None => GenericLexicon::default(),
        };
        if self.extraction.cap_per_document == 0 {
            return Err(Error::Config("extraction.cap_per_document must be positive".into()));
        }

        let gold_path = match &self.eval.gold_path {
            Some(p) => {
                let p = rel(base, p);
                require_file("gold file", &p)?;
                Some(p)
            }
            None => None,
        };
        MatchConfig {
            mode: MatchMode::Semantic,
            semantic_threshold: self.eval.semantic_threshold,
            partial_min_fields: self.eval.partial_min_fields,
            assignment: self.eval.assignment,
        }
        .validate()
        .map_err(|e| Error::Config(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.eval.redundancy_threshold) {
            return Err(Error::Config("eval.redundancy_threshold must be in [0, 1]".into()));
        }
        if self.eval.sample_size == 0 {
            return Err(Error::Config("eval.sample_size must be positive".into()));
        }
        if self.report.chart_top_k == 0 || self.report.heatmap_top_k == 0 {
            return Err(Error::Config("report top-k values must be positive".into()));
        }

        Ok(Resolved { raw: self, source_dir, preprocess, bank, templates, lexicon, gold_path, output_dir })
    }
}
