//! File formats and the repository data files.

use std::fs;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use triplex::config::{BackendKind, Overrides, PipelineConfig};
use triplex::goldcsv::load_gold;
use triplex::loader::{
    corpus_cache_string, load_corpus, preprocess_corpus, read_corpus_cache, write_corpus_cache,
};
use triplex::pipeline::{read_run, triples_jsonl};
use triplex_core::prompting::prompt_fingerprint;
use triplex_core::{ExampleBank, PromptVariant, Templates, Triple};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn mock_overrides(out: &Path) -> Overrides {
    Overrides {
        backend: Some(BackendKind::Mock),
        seed: None,
        output_dir: Some(out.to_path_buf()),
        endpoint_env: None,
    }
}

const SMALL: &str = r#"<agreement><parties><party>Chile</party><party>Korea</party></parties>
<article id="1">Chile and Korea establish a free trade area.</article></agreement>"#;

#[test]
fn truncated_file_is_recorded_and_skipped() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a-b.xml"), SMALL).unwrap();
    fs::write(dir.path().join("c-d.xml"), SMALL).unwrap();
    fs::write(dir.path().join("e-f.xml"), &SMALL[..SMALL.len() / 2]).unwrap();
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let corpus = load_corpus(dir.path(), None).unwrap();
    assert_eq!(corpus.documents.len(), 2);
    assert_eq!(corpus.load_errors.len(), 1);
    assert_eq!(corpus.load_errors[0].filename, "e-f.xml");
    assert!(!corpus.load_errors[0].reason.is_empty());

    let limited = load_corpus(dir.path(), Some(1)).unwrap();
    assert_eq!(limited.documents.len(), 1);
    assert_eq!(limited.documents[0].doc_id, "a-b");
}

#[test]
fn empty_and_missing_directories() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = load_corpus(dir.path(), None).unwrap();
    assert!(corpus.documents.is_empty() && corpus.load_errors.is_empty());

    let missing = dir.path().join("nope");
    let err = load_corpus(&missing, None).unwrap_err().to_string();
    assert!(err.contains("nope"), "{err}");
}

#[test]
fn fixture_corpus_shapes() {
    let out = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig::load(&repo().join("triplex.json"), &mock_overrides(out.path())).unwrap();
    let mut corpus = load_corpus(&cfg.source_dir, None).unwrap();
    assert_eq!(corpus.documents.len(), 4);
    assert!(corpus.load_errors.is_empty());
    let ids: Vec<&str> = corpus.documents.iter().map(|d| d.doc_id.as_str()).collect();
    assert_eq!(
        ids,
        ["australia-singapore-fta", "canada-eu-ceta", "chile-korea-fta", "japan-thailand-epa"]
    );
    for doc in &corpus.documents {
        assert!(doc.party_a.is_some(), "{}", doc.doc_id);
        assert!(!doc.articles.is_empty(), "{}", doc.doc_id);
        let mut ids: Vec<&str> = doc.articles.iter().map(|a| a.article_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), doc.articles.len(), "article ids unique in {}", doc.doc_id);
    }
    preprocess_corpus(&mut corpus, &cfg.preprocess);
    assert!(corpus.documents.iter().flat_map(|d| &d.articles).all(|a| !a.clean_text.is_empty()));

    let cache = out.path().join("corpus.jsonl");
    write_corpus_cache(&cache, &corpus).unwrap();
    let text = fs::read_to_string(&cache).unwrap();
    assert_eq!(text.lines().count(), 4);
    let back = read_corpus_cache(&cache).unwrap();
    assert_eq!(corpus_cache_string(&back), text);
}

#[test]
fn gold_file_loads() {
    let (gold, dups) = load_gold(&repo().join("data/gold.csv")).unwrap();
    assert_eq!(gold.len(), 100);
    assert!(dups.is_empty());
    assert!(!gold.annotator.is_empty());
    assert!(!gold.source_note.is_empty());
}

#[test]
fn gold_errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    fs::write(&path, "subject,object\na,b\n").unwrap();
    let err = load_gold(&path).unwrap_err().to_string();
    assert!(err.contains("g.csv") && err.contains("missing column(s): predicate"), "{err}");
}

#[test]
fn shipped_examples_and_prompts_are_the_defaults() {
    let text = fs::read_to_string(repo().join("data/examples.json")).unwrap();
    let bank: ExampleBank = serde_json::from_str(&text).unwrap();
    assert_eq!(bank, ExampleBank::default());

    let out = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig::load(&repo().join("triplex.json"), &mock_overrides(out.path())).unwrap();
    for v in PromptVariant::ALL {
        assert_eq!(
            prompt_fingerprint(v, &cfg.bank, &cfg.templates),
            prompt_fingerprint(v, &ExampleBank::default(), &Templates::default()),
            "{v}"
        );
    }
}

fn arb_triple() -> impl Strategy<Value = Triple> {
    let field = "[a-zA-Z0-9 ,\"'|()\\\\\u{e9}\u{4e2d}-]{1,20}";
    (field, field, field, "[a-z-]{1,8}", 0usize..5, any::<bool>(), any::<bool>()).prop_map(
        |(s, p, o, doc, chunk, gs, go)| Triple {
            subject: s,
            predicate: p,
            object: o,
            doc_id: doc,
            article_id: format!("article-{chunk}"),
            chunk_index: chunk,
            variant: PromptVariant::FewShot,
            generic_subject: gs,
            generic_object: go,
        },
    )
}

proptest! {
    #[test]
    fn run_files_round_trip(triples in proptest::collection::vec(arb_triple(), 0..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("few-shot.jsonl");
        let text = triples_jsonl(&triples);
        prop_assert_eq!(text.lines().count(), triples.len());
        fs::write(&path, &text).unwrap();
        prop_assert_eq!(read_run(&path).unwrap(), triples);
    }
}
