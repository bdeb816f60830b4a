//! From raw model output to normalized, deduplicated, capped triples.
//!
//! The line grammar accepted by [`parse_triples`]:
//!
//! ```text
//! (subject | predicate | object)
//! subject | predicate | object
//! ('subject', 'predicate', 'object')      also with double or curly quotes
//! ```
//!
//! Lines may carry a list marker (`-`, `*`, `•`, `3.`). Anything else is
//! rejected with a reason; the parser is total over arbitrary text.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::backend::{CompletionError, Completer};
use crate::corpus::{chunk_document, CorpusIndex, PreprocessConfig};
use crate::prompting::{
    build_prompt, build_refinement_prompt, ExampleBank, GenericSide, PromptError, PromptVariant,
    Templates,
};

/// Per-document triple cap.
pub const DEFAULT_CAP_PER_DOCUMENT: usize = 1000;

/// Predicates with more tokens than this are counted as complex.
pub const COMPLEX_PREDICATE_TOKENS: usize = 4;

pub const DEFAULT_GENERIC_TERMS: &[&str] = &[
    "parties",
    "the parties",
    "both parties",
    "the agreement",
    "each party",
    "it",
    "they",
    "this",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleCandidate {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub source_line: String,
    pub line_number: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line_number: usize,
    pub line: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub doc_id: String,
    pub article_id: String,
    pub chunk_index: usize,
    pub variant: PromptVariant,
    pub generic_subject: bool,
    pub generic_object: bool,
}

impl Triple {
    pub fn spo(&self) -> (&str, &str, &str) {
        (&self.subject, &self.predicate, &self.object)
    }

    pub fn is_generic(&self) -> bool {
        self.generic_subject || self.generic_object
    }
}

/// Where a triple came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub doc_id: String,
    pub article_id: String,
    pub chunk_index: usize,
    pub variant: PromptVariant,
}

const OPEN_QUOTES: &[char] = &['\'', '"', '\u{2018}', '\u{201c}'];

fn closing_quote(open: char) -> char {
    match open {
        '\u{2018}' => '\u{2019}',
        '\u{201c}' => '\u{201d}',
        c => c,
    }
}

fn strip_list_marker(line: &str) -> &str {
    for marker in ["- ", "* ", "\u{2022} "] {
        if let Some(rest) = line.strip_prefix(marker) {
            return rest.trim_start();
        }
    }
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 && digits <= 4 {
        if let Some(rest) = line[digits..].strip_prefix(". ") {
            return rest.trim_start();
        }
    }
    line
}

fn check_fields(fields: [&str; 3]) -> Result<[String; 3], String> {
    const NAMES: [&str; 3] = ["subject", "predicate", "object"];
    for (value, name) in fields.iter().zip(NAMES) {
        if value.trim().is_empty() {
            return Err(format!("empty {name}"));
        }
    }
    Ok(fields.map(|f| f.trim().to_string()))
}

fn parse_pipe(line: &str) -> Result<[String; 3], String> {
    let body = line.trim_end_matches([',', '.', ';']).trim_end();
    let inner = match (body.strip_prefix('('), body.strip_suffix(')')) {
        (Some(_), Some(_)) if body.len() >= 2 => &body[1..body.len() - 1],
        _ => body,
    };
    let parts: Vec<&str> = inner.split('|').collect();
    if parts.len() != 3 {
        return Err(format!("expected 3 fields, found {}", parts.len()));
    }
    check_fields([parts[0], parts[1], parts[2]])
}

/// Tries `'a', 'b', 'c'` starting at char index `start`; returns fields and the index after.
fn scan_quoted(chars: &[char], start: usize) -> Option<([String; 3], usize)> {
    let mut i = start;
    let mut fields: Vec<String> = Vec::with_capacity(3);
    let skip_ws = |i: &mut usize| {
        while *i < chars.len() && chars[*i].is_whitespace() {
            *i += 1;
        }
    };
    for n in 0..3 {
        skip_ws(&mut i);
        let open = *chars.get(i)?;
        if !OPEN_QUOTES.contains(&open) {
            return None;
        }
        let close = closing_quote(open);
        i += 1;
        let content_start = i;
        // closing quote is one followed by a separator, a bracket or end of line
        let mut end = None;
        let mut j = i;
        while j < chars.len() {
            if chars[j] == close {
                let mut k = j + 1;
                while k < chars.len() && chars[k].is_whitespace() {
                    k += 1;
                }
                let follow = chars.get(k).copied();
                let ok = match follow {
                    None => n == 2,
                    Some(',') => true,
                    Some(')') | Some(']') | Some('.') | Some(';') => n == 2,
                    _ => false,
                };
                if ok {
                    end = Some(j);
                    break;
                }
            }
            j += 1;
        }
        let end = end?;
        fields.push(chars[content_start..end].iter().collect());
        i = end + 1;
        skip_ws(&mut i);
        if n < 2 {
            if chars.get(i) != Some(&',') {
                return None;
            }
            i += 1;
        }
    }
    let [a, b, c]: [String; 3] = fields.try_into().ok()?;
    Some(([a, b, c], i))
}

fn parse_quoted(line: &str) -> Option<Result<[String; 3], String>> {
    let chars: Vec<char> = line.chars().collect();
    let first_quote = chars.iter().position(|c| OPEN_QUOTES.contains(c))?;
    let prefix: String = chars[..first_quote].iter().collect();
    let prefix = prefix.trim().trim_end_matches(['(', '[']).trim_end();
    if !(prefix.is_empty() || prefix.ends_with(':')) {
        return None;
    }
    let (fields, after) = scan_quoted(&chars, first_quote)?;
    let rest: String = chars[after..].iter().collect();
    if !rest.chars().all(|c| c.is_whitespace() || matches!(c, ')' | ']' | ',' | '.' | ';')) {
        return None;
    }
    let [a, b, c] = &fields;
    Some(check_fields([a, b, c]))
}

fn parse_line(line: &str) -> Result<[String; 3], String> {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return Err("empty line".to_string());
    }
    let body = strip_list_marker(trimmed);
    if let Some(result) = parse_quoted(body) {
        return result;
    }
    if body.contains('|') {
        return parse_pipe(body);
    }
    Err("no triple structure".to_string())
}

/// Splits raw model output into triple candidates and rejected lines.
pub fn parse_triples(raw_text: &str) -> (Vec<TripleCandidate>, Vec<Rejection>) {
    let mut candidates = Vec::new();
    let mut rejected = Vec::new();
    for (idx, line) in raw_text.lines().enumerate() {
        let line_number = idx + 1;
        match parse_line(line) {
            Ok([subject, predicate, object]) => candidates.push(TripleCandidate {
                subject,
                predicate,
                object,
                source_line: line.to_string(),
                line_number,
            }),
            Err(reason) => rejected.push(Rejection { line_number, line: line.to_string(), reason }),
        }
    }
    (candidates, rejected)
}

fn is_strippable(c: char) -> bool {
    c.is_whitespace()
        || matches!(
            c,
            '\'' | '"'
                | '`'
                | '\u{2018}'
                | '\u{2019}'
                | '\u{201c}'
                | '\u{201d}'
                | '('
                | ')'
                | '['
                | ']'
                | '{'
                | '}'
                | '<'
                | '>'
                | '.'
                | ','
                | ';'
                | ':'
                | '!'
                | '?'
        )
}

/// Shared normalization for extracted and gold fields: lowercase, single
/// spaces, no wrapping quotes/brackets/punctuation, no pipes.
pub fn normalize_field(field: &str) -> String {
    let lowered = field.to_lowercase().replace('|', " ");
    let stripped = lowered.trim_matches(is_strippable);
    let mut out = String::with_capacity(stripped.len());
    for w in stripped.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(w);
    }
    out
}

/// Terms that do not name a specific entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericLexicon {
    terms: BTreeSet<String>,
}

impl Default for GenericLexicon {
    fn default() -> Self {
        Self::new(DEFAULT_GENERIC_TERMS.iter().copied())
    }
}

impl GenericLexicon {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            terms: terms
                .into_iter()
                .map(|t| normalize_field(t.as_ref()))
                .filter(|t| !t.is_empty())
                .collect(),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    /// True iff the normalized field is a generic term.
    pub fn flag_generic(&self, field: &str) -> bool {
        self.terms.contains(field)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmptyField {
    Subject,
    Predicate,
    Object,
}

impl fmt::Display for EmptyField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmptyField::Subject => "empty subject",
            EmptyField::Predicate => "empty predicate",
            EmptyField::Object => "empty object",
        })
    }
}

/// Normalizes a candidate and attaches provenance and generic flags.
pub fn normalize(
    candidate: &TripleCandidate,
    provenance: &Provenance,
    lexicon: &GenericLexicon,
) -> Result<Triple, EmptyField> {
    let subject = normalize_field(&candidate.subject);
    let predicate = normalize_field(&candidate.predicate);
    let object = normalize_field(&candidate.object);
    if subject.is_empty() {
        return Err(EmptyField::Subject);
    }
    if predicate.is_empty() {
        return Err(EmptyField::Predicate);
    }
    if object.is_empty() {
        return Err(EmptyField::Object);
    }
    Ok(Triple {
        generic_subject: lexicon.flag_generic(&subject),
        generic_object: lexicon.flag_generic(&object),
        subject,
        predicate,
        object,
        doc_id: provenance.doc_id.clone(),
        article_id: provenance.article_id.clone(),
        chunk_index: provenance.chunk_index,
        variant: provenance.variant,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefineOutcome {
    pub triples: Vec<Triple>,
    pub requests: usize,
    pub refined_count: usize,
    pub failures: Vec<String>,
}

/// Asks the model to replace generic subjects/objects using the chunk text.
///
/// One request per flagged triple. A replacement is accepted only if the
/// reply parses and every previously generic field becomes non-generic;
/// otherwise the original triple is kept. Only applies to negative-examples
/// triples; others pass through untouched.
pub fn refine_generic<C: Completer + ?Sized>(
    triples: Vec<Triple>,
    chunk_text: &str,
    completer: &C,
    lexicon: &GenericLexicon,
) -> RefineOutcome {
    let mut out = RefineOutcome { triples: Vec::with_capacity(triples.len()), ..Default::default() };
    for triple in triples {
        if !triple.is_generic() || triple.variant != PromptVariant::NegativeExamples {
            out.triples.push(triple);
            continue;
        }
        let side = match (triple.generic_subject, triple.generic_object) {
            (true, true) => GenericSide::Both,
            (true, false) => GenericSide::Subject,
            _ => GenericSide::Object,
        };
        let prompt = build_refinement_prompt(
            &triple.subject,
            &triple.predicate,
            &triple.object,
            side,
            chunk_text,
        );
        out.requests += 1;
        let reply = match completer.complete(&prompt) {
            Ok(reply) => reply,
            Err(e) => {
                out.failures.push(e.to_string());
                out.triples.push(triple);
                continue;
            }
        };
        match accept_refinement(&triple, &reply, lexicon) {
            Some(refined) => {
                out.refined_count += 1;
                out.triples.push(refined);
            }
            None => out.triples.push(triple),
        }
    }
    out
}

fn accept_refinement(original: &Triple, reply: &str, lexicon: &GenericLexicon) -> Option<Triple> {
    let (candidates, _) = parse_triples(reply);
    let first = candidates.first()?;
    let mut refined = original.clone();
    if original.generic_subject {
        let subject = normalize_field(&first.subject);
        if subject.is_empty() || lexicon.flag_generic(&subject) {
            return None;
        }
        refined.subject = subject;
        refined.generic_subject = false;
    }
    if original.generic_object {
        let object = normalize_field(&first.object);
        if object.is_empty() || lexicon.flag_generic(&object) {
            return None;
        }
        refined.object = object;
        refined.generic_object = false;
    }
    Some(refined)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DedupeCounts {
    pub duplicates_removed: usize,
    pub capped_count: usize,
}

/// Drops repeated `(doc_id, s, p, o)` keeping the first, then keeps at most
/// `cap` triples per document in order.
pub fn dedupe_and_cap(triples: Vec<Triple>, cap: usize) -> (Vec<Triple>, DedupeCounts) {
    let mut seen: BTreeSet<(String, String, String, String)> = BTreeSet::new();
    let mut per_doc: BTreeMap<String, usize> = BTreeMap::new();
    let mut counts = DedupeCounts::default();
    let mut out = Vec::with_capacity(triples.len().min(cap.saturating_mul(4)));
    for t in triples {
        let key = (t.doc_id.clone(), t.subject.clone(), t.predicate.clone(), t.object.clone());
        if !seen.insert(key) {
            counts.duplicates_removed += 1;
            continue;
        }
        let n = per_doc.entry(t.doc_id.clone()).or_insert(0);
        if *n >= cap {
            counts.capped_count += 1;
            continue;
        }
        *n += 1;
        out.push(t);
    }
    (out, counts)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionStats {
    pub chunks_processed: usize,
    pub chunks_failed: usize,
    pub lines_seen: usize,
    pub lines_parsed: usize,
    pub lines_rejected: usize,
    pub duplicates_removed: usize,
    pub capped_count: usize,
    pub generic_flagged: usize,
    pub refined_count: usize,
    pub refine_failures: usize,
    pub complex_predicates: usize,
}

impl ExtractionStats {
    fn absorb(&mut self, other: &ExtractionStats) {
        self.chunks_processed += other.chunks_processed;
        self.chunks_failed += other.chunks_failed;
        self.lines_seen += other.lines_seen;
        self.lines_parsed += other.lines_parsed;
        self.lines_rejected += other.lines_rejected;
        self.duplicates_removed += other.duplicates_removed;
        self.capped_count += other.capped_count;
        self.generic_flagged += other.generic_flagged;
        self.refined_count += other.refined_count;
        self.refine_failures += other.refine_failures;
        self.complex_predicates += other.complex_predicates;
    }
}

/// One unit of extraction work.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkTask {
    pub doc_id: String,
    pub article_id: String,
    pub chunk_index: usize,
    pub text: String,
}

/// Chunk tasks for a corpus, ordered by document, article order, chunk index.
pub fn plan_chunks(corpus: &CorpusIndex, config: &PreprocessConfig) -> Vec<ChunkTask> {
    let mut out = Vec::new();
    for doc in &corpus.documents {
        for chunk in chunk_document(doc, config) {
            out.push(ChunkTask {
                doc_id: doc.doc_id.clone(),
                article_id: chunk.article_id,
                chunk_index: chunk.chunk_index,
                text: chunk.text,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkFailure {
    pub doc_id: String,
    pub article_id: String,
    pub chunk_index: usize,
    pub reason: String,
}

/// Result of extracting one chunk, before the run-level dedupe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkOutcome {
    pub triples: Vec<Triple>,
    pub rejections: Vec<Rejection>,
    pub stats: ExtractionStats,
    pub failure: Option<ChunkFailure>,
}

/// Settings shared by every chunk of a run.
#[derive(Debug, Clone)]
pub struct ExtractionSettings {
    pub variant: PromptVariant,
    pub bank: ExampleBank,
    pub templates: Templates,
    pub lexicon: GenericLexicon,
    pub cap_per_document: usize,
}

impl ExtractionSettings {
    pub fn new(variant: PromptVariant) -> Self {
        Self {
            variant,
            bank: ExampleBank::default(),
            templates: Templates::default(),
            lexicon: GenericLexicon::default(),
            cap_per_document: DEFAULT_CAP_PER_DOCUMENT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtractError {
    Prompt(PromptError),
    /// The endpoint rejected the request as misconfigured.
    Fatal(String),
    /// Every chunk failed.
    AllChunksFailed { chunks: usize, first_reason: String },
}

impl fmt::Display for ExtractError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractError::Prompt(e) => write!(f, "{e}"),
            ExtractError::Fatal(m) => write!(f, "fatal endpoint error: {m}"),
            ExtractError::AllChunksFailed { chunks, first_reason } => {
                write!(f, "all {chunks} chunks failed; first failure: {first_reason}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ExtractError {}

impl From<PromptError> for ExtractError {
    fn from(e: PromptError) -> Self {
        ExtractError::Prompt(e)
    }
}

/// prompt → complete → parse → normalize → refine (negative-examples only).
pub fn extract_chunk<C: Completer + ?Sized>(
    completer: &C,
    settings: &ExtractionSettings,
    task: &ChunkTask,
) -> Result<ChunkOutcome, ExtractError> {
    let prompt = build_prompt(settings.variant, &settings.bank, &settings.templates, &task.text)?;
    let mut stats = ExtractionStats { chunks_processed: 1, ..Default::default() };
    let raw = match completer.complete(&prompt.text) {
        Ok(raw) => raw,
        Err(CompletionError::Fatal(m)) => return Err(ExtractError::Fatal(m)),
        Err(e) => {
            stats.chunks_failed = 1;
            return Ok(ChunkOutcome {
                triples: Vec::new(),
                rejections: Vec::new(),
                stats,
                failure: Some(ChunkFailure {
                    doc_id: task.doc_id.clone(),
                    article_id: task.article_id.clone(),
                    chunk_index: task.chunk_index,
                    reason: e.to_string(),
                }),
            });
        }
    };

    let (candidates, mut rejections) = parse_triples(&raw);
    stats.lines_seen = raw.lines().count();
    let provenance = Provenance {
        doc_id: task.doc_id.clone(),
        article_id: task.article_id.clone(),
        chunk_index: task.chunk_index,
        variant: settings.variant,
    };
    let mut triples = Vec::with_capacity(candidates.len());
    for candidate in &candidates {
        match normalize(candidate, &provenance, &settings.lexicon) {
            Ok(t) => triples.push(t),
            Err(e) => rejections.push(Rejection {
                line_number: candidate.line_number,
                line: candidate.source_line.clone(),
                reason: e.to_string(),
            }),
        }
    }
    rejections.sort_by_key(|r| r.line_number);
    stats.lines_parsed = triples.len();
    stats.lines_rejected = rejections.len();
    stats.generic_flagged = triples.iter().filter(|t| t.is_generic()).count();

    if settings.variant == PromptVariant::NegativeExamples && stats.generic_flagged > 0 {
        let refined = refine_generic(triples, &task.text, completer, &settings.lexicon);
        stats.refined_count = refined.refined_count;
        stats.refine_failures = refined.failures.len();
        triples = refined.triples;
    }
    stats.complex_predicates = triples
        .iter()
        .filter(|t| t.predicate.split(' ').count() > COMPLEX_PREDICATE_TOKENS)
        .count();

    Ok(ChunkOutcome { triples, rejections, stats, failure: None })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionRun {
    pub variant: PromptVariant,
    pub triples: Vec<Triple>,
    pub stats: ExtractionStats,
    pub failures: Vec<ChunkFailure>,
    pub endpoint_fingerprint: String,
    pub prompt_fingerprint: String,
}

/// Merges ordered chunk outcomes into a run and applies dedupe and cap.
pub fn assemble_run(
    settings: &ExtractionSettings,
    outcomes: Vec<ChunkOutcome>,
    endpoint_fingerprint: String,
    prompt_fingerprint: String,
) -> Result<ExtractionRun, ExtractError> {
    let mut stats = ExtractionStats::default();
    let mut failures = Vec::new();
    let mut all = Vec::new();
    for outcome in outcomes {
        stats.absorb(&outcome.stats);
        if let Some(f) = outcome.failure {
            failures.push(f);
        }
        all.extend(outcome.triples);
    }
    if stats.chunks_processed > 0 && stats.chunks_failed == stats.chunks_processed {
        return Err(ExtractError::AllChunksFailed {
            chunks: stats.chunks_processed,
            first_reason: failures.first().map(|f| f.reason.clone()).unwrap_or_default(),
        });
    }
    let (triples, counts) = dedupe_and_cap(all, settings.cap_per_document);
    stats.duplicates_removed = counts.duplicates_removed;
    stats.capped_count = counts.capped_count;
    Ok(ExtractionRun {
        variant: settings.variant,
        triples,
        stats,
        failures,
        endpoint_fingerprint,
        prompt_fingerprint,
    })
}

/// Sequential extraction over planned chunks.
pub fn run_extraction<C: Completer + ?Sized>(
    tasks: &[ChunkTask],
    settings: &ExtractionSettings,
    completer: &C,
    endpoint_fingerprint: String,
) -> Result<ExtractionRun, ExtractError> {
    let prompt_fingerprint = crate::prompting::prompt_fingerprint(
        settings.variant,
        &settings.bank,
        &settings.templates,
    );
    let mut outcomes = Vec::with_capacity(tasks.len());
    for task in tasks {
        outcomes.push(extract_chunk(completer, settings, task)?);
    }
    assemble_run(settings, outcomes, endpoint_fingerprint, prompt_fingerprint)
}
