//! The per-variant comparison table: exact rows, then semantic rows.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::eval::Metrics;
use crate::prompting::PromptVariant;

pub const EXACT_SECTION: &str = "Exact Match";
pub const SEMANTIC_SECTION: &str = "Semantic Match (using embeddings)";
const METRIC_NAMES: [&str; 3] = ["Precision", "Recall", "F1 Score"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub variants: Vec<PromptVariant>,
    /// Six rows (exact P, R, F1, semantic P, R, F1), one value per variant.
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableError {
    NoVariants,
    DuplicateVariant(PromptVariant),
    Parse { line: usize, reason: String },
}

impl fmt::Display for TableError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableError::NoVariants => f.write_str("metrics table needs at least one variant"),
            TableError::DuplicateVariant(v) => write!(f, "variant {v} given twice"),
            TableError::Parse { line, reason } => write!(f, "metrics csv line {line}: {reason}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TableError {}

fn round2(v: f64) -> f64 {
    libm::round(v * 100.0) / 100.0
}

fn fmt2(v: f64) -> String {
    format!("{:.2}", round2(v))
}

impl MetricsTable {
    /// Columns follow variant order regardless of input order.
    pub fn new(entries: &[(PromptVariant, Metrics, Metrics)]) -> Result<Self, TableError> {
        if entries.is_empty() {
            return Err(TableError::NoVariants);
        }
        let mut sorted: Vec<&(PromptVariant, Metrics, Metrics)> = entries.iter().collect();
        sorted.sort_by_key(|e| e.0);
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(TableError::DuplicateVariant(w[0].0));
            }
        }
        let mut rows = alloc::vec![Vec::with_capacity(sorted.len()); 6];
        for (_, exact, semantic) in &sorted {
            for (r, m) in [exact, semantic].into_iter().enumerate() {
                rows[r * 3].push(m.precision);
                rows[r * 3 + 1].push(m.recall);
                rows[r * 3 + 2].push(m.f1);
            }
        }
        Ok(Self { variants: sorted.iter().map(|e| e.0).collect(), rows })
    }

    fn row_labels() -> impl Iterator<Item = (&'static str, &'static str)> {
        [EXACT_SECTION, SEMANTIC_SECTION]
            .into_iter()
            .flat_map(|s| METRIC_NAMES.into_iter().map(move |m| (s, m)))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,metric");
        for v in &self.variants {
            out.push(',');
            out.push_str(v.label());
        }
        out.push('\n');
        for ((section, metric), values) in Self::row_labels().zip(&self.rows) {
            out.push_str(section);
            out.push(',');
            out.push_str(metric);
            for v in values {
                out.push(',');
                out.push_str(&fmt2(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Parses what [`MetricsTable::to_csv`] writes.
    pub fn from_csv(text: &str) -> Result<Self, TableError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(TableError::NoVariants)?;
        let mut variants = Vec::new();
        for label in header.split(',').skip(2) {
            let v = PromptVariant::ALL
                .into_iter()
                .find(|v| v.label() == label.trim())
                .ok_or_else(|| TableError::Parse { line: 1, reason: format!("unknown column {label:?}") })?;
            variants.push(v);
        }
        if variants.is_empty() {
            return Err(TableError::NoVariants);
        }
        let mut rows = Vec::new();
        for ((idx, line), (section, metric)) in lines.zip(Self::row_labels()) {
            let cells: Vec<&str> = line.split(',').collect();
            let err = |reason: String| TableError::Parse { line: idx + 1, reason };
            if cells.len() != variants.len() + 2 {
                return Err(err(format!("expected {} cells, found {}", variants.len() + 2, cells.len())));
            }
            if cells[0] != section || cells[1] != metric {
                return Err(err(format!("expected row {section}/{metric}")));
            }
            let values = cells[2..]
                .iter()
                .map(|c| c.trim().parse::<f64>().map_err(|e| err(e.to_string())))
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push(values);
        }
        if rows.len() != 6 {
            return Err(TableError::Parse { line: rows.len() + 2, reason: "expected 6 data rows".into() });
        }
        Ok(Self { variants, rows })
    }

    /// Aligned plain-text rendering with section headings.
    pub fn to_text(&self) -> String {
        let first_width = METRIC_NAMES
            .iter()
            .map(|m| m.len() + 2)
            .chain([EXACT_SECTION.len(), SEMANTIC_SECTION.len(), "Metric".len()])
            .max()
            .unwrap_or(0);
        let widths: Vec<usize> = self.variants.iter().map(|v| v.label().len().max(4)).collect();
        let mut out = String::new();
        push_padded(&mut out, "Metric", first_width, false);
        for (v, w) in self.variants.iter().zip(&widths) {
            out.push_str("  ");
            push_padded(&mut out, v.label(), *w, true);
        }
        out.push('\n');
        for (r, (section, metric)) in Self::row_labels().enumerate() {
            if r % 3 == 0 {
                out.push_str(section);
                out.push('\n');
            }
            push_padded(&mut out, &format!("  {metric}"), first_width, false);
            for (v, w) in self.rows[r].iter().zip(&widths) {
                out.push_str("  ");
                push_padded(&mut out, &fmt2(*v), *w, true);
            }
            out.push('\n');
        }
        out
    }
}

fn push_padded(out: &mut String, s: &str, width: usize, right: bool) {
    let pad = width.saturating_sub(s.chars().count());
    if right {
        out.extend(core::iter::repeat_n(' ', pad));
        out.push_str(s);
    } else {
        out.push_str(s);
        out.extend(core::iter::repeat_n(' ', pad));
    }
}
