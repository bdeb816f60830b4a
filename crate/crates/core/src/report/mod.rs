//! Deterministic CSV, text and SVG renderers.

pub mod svg;
pub mod table;

pub use svg::{frequency_chart, heatmap, HeatmapSpec};
pub use table::MetricsTable;
