//! Agreement documents, stopword removal and sentence-boundary chunking.
//!
//! Parsing the XML files themselves lives in the `triplex` crate; this module
//! owns the document model and the pure text transforms applied to it.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Standard English stopwords (the NLTK list).
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've",
    "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself",
    "she", "she's", "her", "hers", "herself", "it", "it's", "its", "itself", "they", "them",
    "their", "theirs", "themselves", "what", "which", "who", "whom", "this", "that", "that'll",
    "these", "those", "am", "is", "are", "was", "were", "be", "been", "being", "have", "has",
    "had", "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if", "or",
    "because", "as", "until", "while", "of", "at", "by", "for", "with", "about", "against",
    "between", "into", "through", "during", "before", "after", "above", "below", "to", "from",
    "up", "down", "in", "out", "on", "off", "over", "under", "again", "further", "then", "once",
    "here", "there", "when", "where", "why", "how", "all", "any", "both", "each", "few", "more",
    "most", "other", "some", "such", "no", "nor", "not", "only", "own", "same", "so", "than",
    "too", "very", "s", "t", "can", "will", "just", "don", "don't", "should", "should've", "now",
    "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't", "didn",
    "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't", "haven", "haven't", "isn",
    "isn't", "ma", "mightn", "mightn't", "mustn", "mustn't", "needn", "needn't", "shan", "shan't",
    "shouldn", "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn",
    "wouldn't",
];

/// Frequent trade-agreement boilerplate dropped alongside stopwords.
pub const DEFAULT_FILLER_TERMS: &[&str] =
    &["agreement", "article", "chapter", "paragraph", "annex", "hereinafter"];

/// Smallest chunk size that still keeps a legal sentence intact.
pub const MIN_CHUNK_CHARS: usize = 200;
pub const DEFAULT_MAX_CHUNK_CHARS: usize = 4000;

/// One chapter/article text unit inside an agreement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleUnit {
    pub article_id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub raw_text: String,
    #[serde(default)]
    pub clean_text: String,
}

impl ArticleUnit {
    pub fn new(article_id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        Self { article_id: article_id.into(), raw_text: raw_text.into(), clean_text: String::new() }
    }
}

/// One parsed agreement file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementDocument {
    pub doc_id: String,
    pub party_a: Option<String>,
    pub party_b: Option<String>,
    #[serde(default)]
    pub sectors: Vec<String>,
    pub articles: Vec<ArticleUnit>,
}

impl AgreementDocument {
    /// Fills every article's `clean_text` from its `raw_text`.
    pub fn preprocess(&mut self, config: &PreprocessConfig) {
        for article in &mut self.articles {
            article.clean_text = preprocess(&article.raw_text, config);
        }
    }
}

/// A file that could not be turned into a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadError {
    pub filename: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub documents: Vec<AgreementDocument>,
    pub source_dir: String,
    pub load_errors: Vec<LoadError>,
}

impl CorpusIndex {
    /// Assembles an index, sorting documents by id and errors by filename.
    ///
    /// Fails if two documents share an id.
    pub fn assemble(
        source_dir: impl Into<String>,
        mut documents: Vec<AgreementDocument>,
        mut load_errors: Vec<LoadError>,
    ) -> Result<Self, CorpusError> {
        documents.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        for pair in documents.windows(2) {
            if pair[0].doc_id == pair[1].doc_id {
                return Err(CorpusError::DuplicateDocId(pair[0].doc_id.clone()));
            }
        }
        if documents.iter().any(|d| d.doc_id.is_empty()) {
            return Err(CorpusError::EmptyDocId);
        }
        load_errors.sort_by(|a, b| a.filename.cmp(&b.filename));
        Ok(Self { documents, source_dir: source_dir.into(), load_errors })
    }

    pub fn scanned(&self) -> usize {
        self.documents.len() + self.load_errors.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusError {
    DuplicateDocId(String),
    EmptyDocId,
    ChunkTooSmall(usize),
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusError::DuplicateDocId(id) => write!(f, "duplicate document id {id:?}"),
            CorpusError::EmptyDocId => f.write_str("document id is empty"),
            CorpusError::ChunkTooSmall(n) => {
                write!(f, "max_chunk_chars must be at least {MIN_CHUNK_CHARS}, got {n}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CorpusError {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub stopwords: BTreeSet<String>,
    pub domain_filler_terms: BTreeSet<String>,
    pub lowercase: bool,
    pub collapse_whitespace: bool,
    pub max_chunk_chars: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
            domain_filler_terms: DEFAULT_FILLER_TERMS.iter().map(|s| s.to_string()).collect(),
            lowercase: false,
            collapse_whitespace: true,
            max_chunk_chars: DEFAULT_MAX_CHUNK_CHARS,
        }
    }
}

impl PreprocessConfig {
    /// A config that removes only the given words and keeps everything else.
    pub fn with_stopwords<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            stopwords: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
            domain_filler_terms: BTreeSet::new(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.max_chunk_chars < MIN_CHUNK_CHARS {
            return Err(CorpusError::ChunkTooSmall(self.max_chunk_chars));
        }
        Ok(())
    }

    fn removes(&self, word_lower: &str) -> bool {
        self.stopwords.contains(word_lower) || self.domain_filler_terms.contains(word_lower)
    }
}

/// A maximal run of word characters or of separator characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment<'a> {
    pub text: &'a str,
    pub is_word: bool,
}

/// Splits text into alternating word and separator segments.
///
/// Word characters are alphanumerics; an apostrophe joins two alphanumerics
/// into one word ("party's", "don't").
pub fn segments(text: &str) -> Vec<Segment<'_>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let is_word_at = |i: usize| -> bool {
        let c = chars[i].1;
        if c.is_alphanumeric() {
            return true;
        }
        if c == '\'' || c == '\u{2019}' {
            return i > 0
                && i + 1 < chars.len()
                && chars[i - 1].1.is_alphanumeric()
                && chars[i + 1].1.is_alphanumeric();
        }
        false
    };
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut current: Option<bool> = None;
    for (i, &(byte, _)) in chars.iter().enumerate() {
        let w = is_word_at(i);
        match current {
            Some(prev) if prev == w => {}
            Some(prev) => {
                out.push(Segment { text: &text[start..byte], is_word: prev });
                start = byte;
                current = Some(w);
            }
            None => current = Some(w),
        }
    }
    if let Some(prev) = current {
        out.push(Segment { text: &text[start..], is_word: prev });
    }
    out
}

/// Word tokens of `text`, in order.
pub fn words(text: &str) -> impl Iterator<Item = &str> {
    segments(text).into_iter().filter(|s| s.is_word).map(|s| s.text)
}

/// Removes stopwords and filler terms, then applies casing and whitespace rules.
pub fn preprocess(text: &str, config: &PreprocessConfig) -> String {
    let mut out = String::with_capacity(text.len());
    for seg in segments(text) {
        if seg.is_word && config.removes(&seg.text.to_lowercase()) {
            continue;
        }
        if config.lowercase {
            out.push_str(&seg.text.to_lowercase());
        } else {
            out.push_str(seg.text);
        }
    }
    if config.collapse_whitespace {
        collapse_whitespace(&out)
    } else {
        out
    }
}

pub fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for w in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(w);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub article_id: String,
    pub chunk_index: usize,
    pub text: String,
}

fn ends_sentence(word: &str) -> bool {
    let trimmed = word.trim_end_matches(['"', '\'', ')', ']', '\u{201d}', '\u{2019}']);
    trimmed.ends_with(['.', '!', '?'])
}

/// Splits whitespace-normalized text into sentences.
pub fn sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for w in text.split_whitespace() {
        if !current.is_empty() {
            current.push(' ');
        }
        current.push_str(w);
        if ends_sentence(w) {
            out.push(core::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Packs `clean_text` into chunks of at most `max_chars` characters.
///
/// Sentences are packed greedily; a sentence longer than the cap is split at
/// word boundaries, and a single word longer than the cap at char boundaries.
pub fn chunk_text(clean_text: &str, max_chars: usize) -> Vec<String> {
    let max_chars = max_chars.max(1);
    let mut pieces: Vec<String> = Vec::new();
    for sentence in sentences(clean_text) {
        if char_len(&sentence) <= max_chars {
            pieces.push(sentence);
            continue;
        }
        for word in sentence.split(' ') {
            if char_len(word) <= max_chars {
                pieces.push(word.to_string());
            } else {
                let chars: Vec<char> = word.chars().collect();
                for part in chars.chunks(max_chars) {
                    pieces.push(part.iter().collect());
                }
            }
        }
    }

    let mut chunks = Vec::new();
    let mut current = String::new();
    let mut current_len = 0usize;
    for piece in pieces {
        let len = char_len(&piece);
        if current_len > 0 && current_len + 1 + len > max_chars {
            chunks.push(core::mem::take(&mut current));
            current_len = 0;
        }
        if current_len > 0 {
            current.push(' ');
            current_len += 1;
        }
        current.push_str(&piece);
        current_len += len;
    }
    if current_len > 0 {
        chunks.push(current);
    }
    chunks
}

/// Chunks every preprocessed article of a document, in article order.
pub fn chunk_document(doc: &AgreementDocument, config: &PreprocessConfig) -> Vec<Chunk> {
    let mut out = Vec::new();
    for article in &doc.articles {
        for (chunk_index, text) in chunk_text(&article.clean_text, config.max_chunk_chars)
            .into_iter()
            .enumerate()
        {
            out.push(Chunk { article_id: article.article_id.clone(), chunk_index, text });
        }
    }
    out
}
