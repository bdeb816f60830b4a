//! Deterministic stand-ins for the chat and embedding endpoints.
//!
//! [`MockChat`] is a pure function of `(prompt, seed)`. It pulls verb-centred
//! triples out of the chunk text and renders each line in one of several
//! fixture styles chosen by a stable hash: well-formed pipe lines, bare pipe
//! lines, quoted tuples, lines with a missing field, and generic-subject
//! lines. Two tokens trigger fixed fixtures: `EMPTY_CASE` (prose, no triples)
//! and `JUNK_CASE` (nothing parseable).
//!
//! [`MockEmbedder`] hashes word-bounded character trigrams into 256 buckets.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::backend::{check_embed_input, CompletionError, Completer, Embedder, EmbeddingVector};
use crate::corpus::sentences;
use crate::extraction::{normalize_field, GenericLexicon};
use crate::hash::{fnv1a64, fnv1a64_extend, mix64};
use crate::prompting::{format_triple, REFINE_MARKER, TEXT_MARKER};

pub const MOCK_EMBEDDING_DIM: usize = 256;

pub const EMPTY_CASE: &str = "EMPTY_CASE";
pub const JUNK_CASE: &str = "JUNK_CASE";

/// Inflected verb forms the mock recognizes as predicates.
const VERB_FORMS: &[&str] = &[
    "agree", "agrees", "agreed", "sign", "signs", "signed", "ratify", "ratifies", "ratified",
    "export", "exports", "exported", "import", "imports", "imported", "eliminate", "eliminates",
    "eliminated", "reduce", "reduces", "reduced", "apply", "applies", "applied", "establish",
    "establishes", "established", "cooperate", "cooperates", "promote", "promotes", "grant",
    "grants", "granted", "accord", "accords", "provide", "provides", "maintain", "maintains",
    "adopt", "adopts", "adopted", "notify", "notifies", "ensure", "ensures", "recognize",
    "recognizes", "recognise", "recognises", "consult", "consults", "enter", "enters", "entered",
    "protect", "protects", "facilitate", "facilitates", "encourage", "encourages", "exchange",
    "exchanges", "means", "include", "includes", "publish", "publishes", "prohibit", "prohibits",
    "allow", "allows", "accept", "accepts", "permit", "permits", "develop", "develops",
    "strengthen", "strengthens", "submit", "submits", "invest", "invests", "liberalize",
    "liberalise", "expand", "expands", "remove", "removes", "admit", "admits", "levy", "levies",
    "impose", "imposes", "designate", "designates", "review", "reviews",
];

const MODALS: &[&str] = &["shall", "may", "must", "will", "should", "can", "could", "would"];

fn bare(word: &str) -> String {
    word.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

fn is_verb(word: &str) -> bool {
    VERB_FORMS.contains(&bare(word).as_str())
}

fn is_modal(word: &str) -> bool {
    MODALS.contains(&bare(word).as_str())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MockChat {
    pub seed: u64,
}

impl MockChat {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn line_hash(&self, prompt_hash: u64, line: usize) -> u64 {
        mix64(prompt_hash ^ mix64(self.seed) ^ (line as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    /// Verb-centred (subject, verb, object) guesses from plain text.
    pub fn heuristic_triples(text: &str) -> Vec<(String, String, String)> {
        let mut out = Vec::new();
        for sentence in sentences(text) {
            let words: Vec<&str> = sentence.split_whitespace().collect();
            for (i, w) in words.iter().enumerate() {
                if i == 0 || !is_verb(w) {
                    continue;
                }
                let subject_words: Vec<&str> = words[..i]
                    .iter()
                    .rev()
                    .filter(|w| !is_modal(w))
                    .take(2)
                    .copied()
                    .collect::<Vec<_>>()
                    .into_iter()
                    .rev()
                    .collect();
                let mut object_words = Vec::new();
                for w in &words[i + 1..] {
                    if is_verb(w) || object_words.len() == 3 {
                        break;
                    }
                    object_words.push(*w);
                    if w.ends_with([',', ';', '.', ':']) {
                        break;
                    }
                }
                let clean = |ws: &[&str]| -> String {
                    let joined = ws.join(" ");
                    joined.trim_matches(|c: char| !c.is_alphanumeric()).to_string()
                };
                let subject = clean(&subject_words);
                let object = clean(&object_words);
                let verb = w.trim_matches(|c: char| !c.is_alphanumeric()).to_string();
                if subject.is_empty() || object.is_empty() || verb.is_empty() {
                    continue;
                }
                out.push((subject, verb, object));
            }
        }
        out
    }

    fn extract(&self, prompt: &str) -> String {
        let chunk = chunk_section(prompt);
        let prompt_hash = fnv1a64(prompt.as_bytes());
        let mut lines = vec!["Here are the triples extracted from the text:".to_string(), String::new()];
        for (n, (s, p, o)) in Self::heuristic_triples(chunk).into_iter().enumerate() {
            let line = match self.line_hash(prompt_hash, n) % 10 {
                0..=5 => format_triple(&s, &p, &o),
                6 => format!("{s} | {p} | {o}"),
                7 => format!("('{s}', '{p}', '{o}')"),
                8 => format!("({s} | {p})"),
                _ => format_triple("Parties", &p, &o),
            };
            lines.push(line);
        }
        lines.push(String::new());
        lines.push("These triples cover the main obligations in the text.".to_string());
        lines.join("\n")
    }

    fn refine(&self, prompt: &str) -> String {
        let chunk = chunk_section(prompt);
        let Some((s, p, o)) = quoted_triple(prompt) else {
            return "I cannot tell which entities are meant.".to_string();
        };
        let both = prompt.contains("are generic terms");
        let subject_side = both || prompt.contains("its subject \"");
        let object_side = both || !subject_side;
        let names = named_entities(chunk);
        let replacement = match names.len() {
            0 => return format_triple(&s, &p, &o),
            1 => names[0].clone(),
            _ => format!("{} and {}", names[0], names[1]),
        };
        let s = if subject_side { replacement.clone() } else { s };
        let o = if object_side { replacement } else { o };
        format_triple(&s, &p, &o)
    }
}

impl Completer for MockChat {
    fn complete(&self, prompt: &str) -> Result<String, CompletionError> {
        if prompt.contains(EMPTY_CASE) {
            return Ok("I could not find any subject, predicate and object in this passage.\n\
                       The text contains no trade obligations."
                .to_string());
        }
        if prompt.contains(JUNK_CASE) {
            return Ok("Sure!\n\n- triples: none\n(incomplete | line\n| | |\n]]]".to_string());
        }
        if prompt.starts_with(REFINE_MARKER) {
            return Ok(self.refine(prompt));
        }
        Ok(self.extract(prompt))
    }
}

/// The text after the last `Text:` marker line, or the whole prompt.
fn chunk_section(prompt: &str) -> &str {
    let marker = format!("\n{TEXT_MARKER}\n");
    match prompt.rfind(&marker) {
        Some(pos) => &prompt[pos + marker.len()..],
        None => prompt,
    }
}

fn quoted_triple(prompt: &str) -> Option<(String, String, String)> {
    let start = prompt.find("in the triple (")? + "in the triple (".len();
    let end = start + prompt[start..].find("): its ")?;
    let parts: Vec<&str> = prompt[start..end].split(" | ").collect();
    if parts.len() != 3 {
        return None;
    }
    Some((parts[0].to_string(), parts[1].to_string(), parts[2].to_string()))
}

/// Capitalized words that are neither generic terms, verbs nor modals.
fn named_entities(text: &str) -> Vec<String> {
    let lexicon = GenericLexicon::default();
    let mut out: Vec<String> = Vec::new();
    for raw in text.split_whitespace() {
        let w = raw.trim_matches(|c: char| !c.is_alphanumeric());
        let norm = normalize_field(w);
        let usable = w.chars().next().is_some_and(char::is_uppercase)
            && w.chars().count() >= 3
            && !lexicon.flag_generic(&norm)
            && !lexicon.flag_generic(&format!("the {norm}"))
            && norm != "party"
            && !is_verb(w)
            && !is_modal(w);
        if usable && !out.iter().any(|n| n == w) {
            out.push(w.to_string());
        }
    }
    out
}

/// 256-bucket hashed word-trigram embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MockEmbedder;

impl MockEmbedder {
    /// Raw bucket counts before normalization.
    pub fn trigram_counts(text: &str) -> [f64; MOCK_EMBEDDING_DIM] {
        let mut counts = [0.0; MOCK_EMBEDDING_DIM];
        let lowered = text.to_lowercase();
        let mut tokens: Vec<&str> = lowered.split_whitespace().collect();
        if tokens.is_empty() {
            tokens.push(lowered.as_str());
        }
        for token in tokens {
            let padded: Vec<char> = core::iter::once('#').chain(token.chars()).chain(core::iter::once('#')).collect();
            for window in padded.windows(3) {
                let mut buf = [0u8; 12];
                let mut h = fnv1a64(b"");
                for c in window {
                    h = fnv1a64_extend(h, c.encode_utf8(&mut buf).as_bytes());
                }
                counts[(mix64(h) % MOCK_EMBEDDING_DIM as u64) as usize] += 1.0;
            }
        }
        counts
    }

    pub fn embed_one(text: &str) -> EmbeddingVector {
        EmbeddingVector::new(Self::trigram_counts(text).to_vec())
            .expect("a padded token always yields at least one trigram")
    }
}

impl Embedder for MockEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, CompletionError> {
        check_embed_input(texts)?;
        Ok(texts.iter().map(|t| Self::embed_one(t)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::parse_triples;
    use crate::prompting::{build_prompt, build_refinement_prompt, ExampleBank, GenericSide, PromptVariant, Templates};

    fn prompt_for(chunk: &str) -> String {
        build_prompt(PromptVariant::ZeroShot, &ExampleBank::default(), &Templates::default(), chunk)
            .unwrap()
            .text
    }

    #[test]
    fn deterministic() {
        let p = prompt_for("Japan shall eliminate customs duties on goods. Thailand exports rice.");
        let chat = MockChat::new(42);
        assert_eq!(chat.complete(&p).unwrap(), chat.complete(&p).unwrap());
    }

    #[test]
    fn empty_case_has_no_triples() {
        let out = MockChat::new(1).complete(&prompt_for("EMPTY_CASE Japan exports cars.")).unwrap();
        let (c, _) = parse_triples(&out);
        assert!(c.is_empty());
    }

    #[test]
    fn junk_case_all_rejected() {
        let out = MockChat::new(1).complete(&prompt_for("JUNK_CASE")).unwrap();
        let (c, r) = parse_triples(&out);
        assert!(c.is_empty());
        assert_eq!(r.len(), out.lines().count());
    }

    #[test]
    fn extracts_verb_centred_triples() {
        let t = MockChat::heuristic_triples("Japan shall eliminate customs duties on originating goods.");
        assert_eq!(t, vec![("Japan".to_string(), "eliminate".to_string(), "customs duties on".to_string())]);
    }

    #[test]
    fn refinement_names_both_parties() {
        let chunk = "Japan Thailand, desiring strengthen economic partnership, signed contract.";
        let prompt = build_refinement_prompt("the parties", "signed", "contract", GenericSide::Subject, chunk);
        let reply = MockChat::new(0).complete(&prompt).unwrap();
        assert_eq!(reply, "(Japan and Thailand | signed | contract)");
    }

    #[test]
    fn embedding_is_unit_and_similar_strings_are_closer() {
        let e = MockEmbedder;
        let v = e.embed(&["import tariff".into(), "import tariffs".into(), "dispute settlement".into()]).unwrap();
        assert!((v[0].norm() - 1.0).abs() < 1e-9);
        assert!(v[0].cosine(&v[1]) > v[0].cosine(&v[2]));
        assert_eq!(v[0].dimension(), MOCK_EMBEDDING_DIM);
    }

    #[test]
    fn embed_identical_inputs() {
        let v = MockEmbedder.embed(&["x".into(), "x".into()]).unwrap();
        assert_eq!(v[0], v[1]);
        assert!((v[0].cosine(&v[1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embed_rejects_empty_list() {
        assert!(matches!(MockEmbedder.embed(&[]), Err(CompletionError::InvalidInput(_))));
    }
}
