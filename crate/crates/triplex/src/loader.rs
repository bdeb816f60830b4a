//! XML agreement ingestion and the `corpus.jsonl` cache.
//!
//! Any element whose tag contains `article` or `chapter` (case-insensitive)
//! is a text unit. A unit owns the text below it except text inside nested
//! units, so a chapter heading and its articles become separate units.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};
use triplex_core::corpus::LoadError;
use triplex_core::{AgreementDocument, ArticleUnit, CorpusIndex, PreprocessConfig};

use crate::error::{read_to_string, write_file, Error, Result};

const ID_ATTRIBUTES: &[&str] = &["id", "identifier", "num", "number", "n", "name"];

/// Parses every `.xml` file in `dir` (first `limit` by filename if set).
///
/// A missing directory is fatal; a malformed file is recorded and skipped.
pub fn load_corpus(dir: &Path, limit: Option<usize>) -> Result<CorpusIndex> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_xml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("xml"));
        if is_xml && path.is_file() {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if let Some(n) = limit {
        files.truncate(n);
    }
    let parsed: Vec<std::result::Result<AgreementDocument, LoadError>> =
        files.par_iter().map(|p| load_file(p)).collect();
    let mut documents = Vec::new();
    let mut errors = Vec::new();
    for r in parsed {
        match r {
            Ok(d) => documents.push(d),
            Err(e) => {
                log::warn!("skipping {}: {}", e.filename, e.reason);
                errors.push(e);
            }
        }
    }
    CorpusIndex::assemble(dir.display().to_string(), documents, errors)
        .map_err(|e| Error::Input(e.to_string()))
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn load_file(path: &Path) -> std::result::Result<AgreementDocument, LoadError> {
    let filename = file_name(path);
    let fail = |reason: String| LoadError { filename: filename.clone(), reason };
    let bytes = fs::read(path).map_err(|e| fail(e.to_string()))?;
    let text = String::from_utf8(bytes).map_err(|e| fail(format!("not UTF-8: {e}")))?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_agreement(&stem, &text).map_err(fail)
}

/// Builds a document from XML text; `stem` is the filename without extension.
pub fn parse_agreement(stem: &str, xml: &str) -> std::result::Result<AgreementDocument, String> {
    let doc = Document::parse(xml).map_err(|e| e.to_string())?;
    let root = doc.root_element();

    let mut articles = Vec::new();
    collect_units(root, "", &mut articles);
    if articles.is_empty() {
        let text = own_text(root);
        if !text.trim().is_empty() {
            articles.push(ArticleUnit::new("text", text));
        }
    }
    make_ids_unique(&mut articles);

    let (party_a, party_b) = parties(root, stem);
    Ok(AgreementDocument {
        doc_id: stem.to_string(),
        party_a,
        party_b,
        sectors: sectors(root),
        articles,
    })
}

fn tag(node: Node) -> String {
    node.tag_name().name().to_lowercase()
}

fn is_unit(node: Node) -> bool {
    let t = tag(node);
    t.contains("article") || t.contains("chapter")
}

fn is_metadata(node: Node) -> bool {
    let t = tag(node);
    t.starts_with("part") || t.contains("sector")
}

fn collect_units(node: Node, parent_path: &str, out: &mut Vec<ArticleUnit>) {
    let mut positions: Vec<(String, usize)> = Vec::new();
    for child in node.children().filter(Node::is_element) {
        if is_unit(child) {
            let t = tag(child);
            let pos = match positions.iter_mut().find(|(k, _)| *k == t) {
                Some((_, n)) => {
                    *n += 1;
                    *n
                }
                None => {
                    positions.push((t.clone(), 1));
                    1
                }
            };
            let id = ID_ATTRIBUTES
                .iter()
                .find_map(|a| child.attribute(*a).map(str::trim).filter(|v| !v.is_empty()))
                .map(|v| format!("{t}-{v}"))
                .unwrap_or_else(|| format!("{t}-{pos}"));
            let path = if parent_path.is_empty() { id } else { format!("{parent_path}/{id}") };
            let text = own_text(child);
            if !text.trim().is_empty() {
                out.push(ArticleUnit::new(path.clone(), text));
            }
            collect_units(child, &path, out);
        } else if !is_metadata(child) {
            collect_units(child, parent_path, out);
        }
    }
}

/// Text below `node`, skipping nested units and metadata elements.
fn own_text(node: Node) -> String {
    let mut out = String::new();
    push_text(node, &mut out);
    out.trim().to_string()
}

fn push_text(node: Node, out: &mut String) {
    for child in node.children() {
        if child.is_text() {
            let t = child.text().unwrap_or("");
            let joins = out.chars().last().is_some_and(|c| !c.is_whitespace())
                && t.chars().next().is_some_and(|c| !c.is_whitespace());
            if joins {
                out.push(' ');
            }
            out.push_str(t);
        } else if child.is_element() && !is_unit(child) && !is_metadata(child) {
            push_text(child, out);
        }
    }
}

fn make_ids_unique(articles: &mut [ArticleUnit]) {
    let mut seen = BTreeSet::new();
    for a in articles {
        if !seen.insert(a.article_id.clone()) {
            let mut n = 2;
            while !seen.insert(format!("{}~{n}", a.article_id)) {
                n += 1;
            }
            a.article_id = format!("{}~{n}", a.article_id);
        }
    }
}

fn element_text(node: Node) -> String {
    let mut out = String::new();
    for d in node.descendants().filter(|d| d.is_text()) {
        out.push_str(d.text().unwrap_or(""));
        out.push(' ');
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn parties(root: Node, stem: &str) -> (Option<String>, Option<String>) {
    let mut found: Vec<String> = Vec::new();
    for n in root.descendants().filter(|n| n.is_element() && tag(*n).starts_with("party")) {
        let name = element_text(n);
        if !name.is_empty() && !found.iter().any(|f| f.eq_ignore_ascii_case(&name)) {
            found.push(name);
        }
    }
    if found.is_empty() {
        let mut parts = stem.splitn(3, '-');
        if let (Some(a), Some(b)) = (parts.next(), parts.next()) {
            if !a.is_empty() && !b.is_empty() {
                found.push(a.to_string());
                if !a.eq_ignore_ascii_case(b) {
                    found.push(b.to_string());
                }
            }
        }
    }
    let mut it = found.into_iter();
    (it.next(), it.next())
}

fn sectors(root: Node) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for n in root.descendants().filter(|n| n.is_element() && tag(*n).contains("sector")) {
        if n.children().any(|c| c.is_element() && tag(c).contains("sector")) {
            continue;
        }
        for s in element_text(n).split([',', ';']) {
            let s = s.trim().to_lowercase();
            if !s.is_empty() && !out.contains(&s) {
                out.push(s);
            }
        }
    }
    out
}

/// Fills `clean_text` for every article.
pub fn preprocess_corpus(corpus: &mut CorpusIndex, config: &PreprocessConfig) {
    corpus.documents.par_iter_mut().for_each(|d| d.preprocess(config));
}

#[derive(Serialize, Deserialize)]
struct CachedArticle {
    article_id: String,
    clean_text: String,
}

#[derive(Serialize, Deserialize)]
struct CachedDocument {
    doc_id: String,
    party_a: Option<String>,
    party_b: Option<String>,
    sectors: Vec<String>,
    articles: Vec<CachedArticle>,
}

pub fn corpus_cache_string(corpus: &CorpusIndex) -> String {
    let mut out = String::new();
    for d in &corpus.documents {
        let cached = CachedDocument {
            doc_id: d.doc_id.clone(),
            party_a: d.party_a.clone(),
            party_b: d.party_b.clone(),
            sectors: d.sectors.clone(),
            articles: d
                .articles
                .iter()
                .map(|a| CachedArticle { article_id: a.article_id.clone(), clean_text: a.clean_text.clone() })
                .collect(),
        };
        out.push_str(&serde_json::to_string(&cached).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

pub fn write_corpus_cache(path: &Path, corpus: &CorpusIndex) -> Result<()> {
    write_file(path, corpus_cache_string(corpus))
}

/// Reads `corpus.jsonl` back into an index with preprocessed articles.
pub fn read_corpus_cache(path: &Path) -> Result<CorpusIndex> {
    let text = read_to_string(path)?;
    let mut documents = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let c: CachedDocument = serde_json::from_str(line)
            .map_err(|e| Error::parse(path, format!("line {}: {e}", i + 1)))?;
        documents.push(AgreementDocument {
            doc_id: c.doc_id,
            party_a: c.party_a,
            party_b: c.party_b,
            sectors: c.sectors,
            articles: c
                .articles
                .into_iter()
                .map(|a| ArticleUnit { article_id: a.article_id, raw_text: String::new(), clean_text: a.clean_text })
                .collect(),
        });
    }
    CorpusIndex::assemble(path.display().to_string(), documents, Vec::new())
        .map_err(|e| Error::parse(path, e))
}
