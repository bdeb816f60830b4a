//! Pure core of the triplex pipeline.
//!
//! Everything in this crate is deterministic and free of IO: text
//! preprocessing and chunking, prompt assembly, parsing and normalizing model
//! output into triples, one-to-one matching against a gold set, metrics, and
//! SVG/CSV rendering. Model access goes through the [`backend::Completer`] and
//! [`backend::Embedder`] traits so the same code runs against a live endpoint
//! (provided by the `triplex` crate) or the [`mock`] backends.
//!
//! The crate is `no_std` with `alloc` when the default `std` feature is off.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod backend;
pub mod corpus;
pub mod eval;
pub mod extraction;
pub mod gold;
pub mod hash;
pub mod mock;
pub mod prompting;
pub mod report;

pub use backend::{CompletionError, Completer, Embedder, EmbeddingVector};
pub use corpus::{AgreementDocument, ArticleUnit, Chunk, CorpusIndex, PreprocessConfig};
pub use extraction::{ExtractionRun, ExtractionStats, Triple, TripleCandidate};
pub use gold::GoldSet;
pub use prompting::{ExampleBank, PromptVariant, RenderedPrompt, Templates};
