//! File formats, HTTP client and command-line pipeline around `triplex-core`.

pub mod annotate;
pub mod cli;
pub mod client;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod goldcsv;
pub mod loader;
pub mod pipeline;
pub mod render;

pub use error::{Error, Result};
