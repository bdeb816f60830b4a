//! Hand-written SVG so output bytes depend only on the input values.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write};

use serde::{Deserialize, Serialize};

use crate::eval::distribution::{EmptyDistribution, PredicateDistribution};

pub const DEFAULT_CHART_TOP_K: usize = 20;
pub const DEFAULT_HEATMAP_TOP_K: usize = 15;

const LABEL_W: u64 = 220;
const BAR_MAX: u64 = 360;
const COUNT_W: u64 = 60;
const ROW_H: u64 = 22;
const BAR_H: u64 = 16;
const TOP: u64 = 44;
const BAR_FILL: &str = "#4a6fa5";

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c if (c as u32) < 0x20 && c != '\t' && c != '\n' => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

/// `count / max * BAR_MAX`, rounded half up, in integer arithmetic.
pub fn bar_length(count: u64, max: u64) -> u64 {
    if max == 0 {
        return 0;
    }
    (2 * count * BAR_MAX + max) / (2 * max)
}

/// Horizontal bar chart of the `top_k` most frequent predicates, sorted by
/// descending count; the rest are folded into one `other (n)` bar where `n`
/// is the number of folded predicates.
pub fn frequency_chart(
    dist: &PredicateDistribution,
    top_k: usize,
    title: &str,
) -> Result<String, EmptyDistribution> {
    if dist.is_empty() {
        return Err(EmptyDistribution);
    }
    let ranked = dist.ranked();
    let mut bars: Vec<(String, u64)> =
        ranked.iter().take(top_k).map(|(p, c)| (p.to_string(), *c)).collect();
    if ranked.len() > top_k {
        let rest = &ranked[top_k..];
        bars.push((format!("other ({})", rest.len()), rest.iter().map(|(_, c)| c).sum()));
    }
    let max = bars.iter().map(|b| b.1).max().unwrap_or(0);
    let width = 20 + LABEL_W + BAR_MAX + COUNT_W;
    let height = TOP + bars.len() as u64 * ROW_H + 16;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    let _ = writeln!(
        s,
        "<text x=\"10\" y=\"24\" font-size=\"14\" font-weight=\"bold\">{} (n={})</text>",
        escape(title),
        dist.total
    );
    for (i, (label, count)) in bars.iter().enumerate() {
        let y = TOP + i as u64 * ROW_H;
        let len = bar_length(*count, max);
        let x0 = 10 + LABEL_W;
        let _ = writeln!(
            s,
            "<g class=\"bar\" data-predicate=\"{lab}\" data-count=\"{count}\">\
             <text x=\"{tx}\" y=\"{ty}\" text-anchor=\"end\">{lab}</text>\
             <rect x=\"{x0}\" y=\"{y}\" width=\"{len}\" height=\"{BAR_H}\" fill=\"{BAR_FILL}\"/>\
             <text x=\"{cx}\" y=\"{ty}\">{count}</text></g>",
            lab = escape(label),
            tx = x0 - 6,
            ty = y + 12,
            cx = x0 + len + 6,
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Predicates × columns grid of column-normalized frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSpec {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    /// `cells[row][column]`.
    pub cells: Vec<Vec<f64>>,
    /// Per column, the share of triples whose predicate is not a row.
    pub remainders: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HeatmapError {
    Shape(String),
    BadCell { row: usize, column: usize, value: f64 },
    ColumnSum { column: usize, sum: f64 },
    Empty,
}

impl fmt::Display for HeatmapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeatmapError::Shape(m) => write!(f, "heatmap shape mismatch: {m}"),
            HeatmapError::BadCell { row, column, value } => {
                write!(f, "heatmap cell ({row}, {column}) = {value} is outside [0, 1]")
            }
            HeatmapError::ColumnSum { column, sum } => {
                write!(f, "heatmap column {column} sums to {sum} > 1")
            }
            HeatmapError::Empty => f.write_str("heatmap has no rows or columns"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for HeatmapError {}

impl HeatmapSpec {
    /// Rows are the `k` predicates with the highest count summed over all
    /// columns (ties by name); each column is divided by its own total.
    pub fn from_distributions(columns: &[(String, &PredicateDistribution)], k: usize) -> Self {
        let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
        for (_, d) in columns {
            for (p, c) in &d.counts {
                *totals.entry(p.as_str()).or_insert(0) += c;
            }
        }
        let mut ranked: Vec<(&str, u64)> = totals.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let rows: Vec<String> = ranked.iter().take(k).map(|(p, _)| p.to_string()).collect();
        let cells: Vec<Vec<f64>> = rows
            .iter()
            .map(|p| columns.iter().map(|(_, d)| d.probability(p)).collect())
            .collect();
        let remainders = (0..columns.len())
            .map(|c| {
                if columns[c].1.is_empty() {
                    0.0
                } else {
                    let covered: u64 = rows.iter().map(|p| columns[c].1.count(p)).sum();
                    (columns[c].1.total - covered) as f64 / columns[c].1.total as f64
                }
            })
            .collect();
        Self { rows, columns: columns.iter().map(|(l, _)| l.clone()).collect(), cells, remainders }
    }

    pub fn validate(&self) -> Result<(), HeatmapError> {
        if self.rows.is_empty() || self.columns.is_empty() {
            return Err(HeatmapError::Empty);
        }
        if self.cells.len() != self.rows.len() {
            return Err(HeatmapError::Shape(format!(
                "{} row labels, {} cell rows",
                self.rows.len(),
                self.cells.len()
            )));
        }
        for (r, row) in self.cells.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(HeatmapError::Shape(format!(
                    "row {r} has {} cells for {} columns",
                    row.len(),
                    self.columns.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(HeatmapError::BadCell { row: r, column: c, value: v });
                }
            }
        }
        for c in 0..self.columns.len() {
            let sum: f64 = self.cells.iter().map(|row| row[c]).sum();
            if sum > 1.0 + 1e-9 {
                return Err(HeatmapError::ColumnSum { column: c, sum });
            }
        }
        Ok(())
    }
}

const H_LABEL_W: u64 = 200;
const CELL_W: u64 = 110;
const CELL_H: u64 = 24;
const H_TOP: u64 = 64;
const LEGEND_STEPS: u64 = 10;

/// Grey level for value `v` on a linear scale from 0 (white) to `max` (black).
pub fn grey_level(v: f64, max: f64) -> u8 {
    if max <= 0.0 {
        return 255;
    }
    let t = (v / max).clamp(0.0, 1.0);
    libm::round(255.0 * (1.0 - t)) as u8
}

fn grey(level: u8) -> String {
    format!("#{level:02x}{level:02x}{level:02x}")
}

pub fn heatmap(spec: &HeatmapSpec, title: &str) -> Result<String, HeatmapError> {
    spec.validate()?;
    let max = spec.cells.iter().flatten().copied().fold(0.0f64, f64::max);
    let n_cols = spec.columns.len() as u64;
    let n_rows = spec.rows.len() as u64;
    let grid_x = 10 + H_LABEL_W;
    let legend_x = grid_x + n_cols * CELL_W + 30;
    let width = legend_x + 90;
    let height = (H_TOP + n_rows * CELL_H + 40).max(H_TOP + LEGEND_STEPS * 16 + 40);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    let _ = writeln!(
        s,
        "<text x=\"10\" y=\"24\" font-size=\"14\" font-weight=\"bold\">{}</text>",
        escape(title)
    );
    for (c, label) in spec.columns.iter().enumerate() {
        let cx = grid_x + c as u64 * CELL_W + CELL_W / 2;
        let _ = writeln!(
            s,
            "<text class=\"col\" x=\"{cx}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            H_TOP - 10,
            escape(label)
        );
    }
    for (r, label) in spec.rows.iter().enumerate() {
        let y = H_TOP + r as u64 * CELL_H;
        let _ = writeln!(
            s,
            "<text class=\"row\" x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            grid_x - 6,
            y + 16,
            escape(label)
        );
        for (c, &v) in spec.cells[r].iter().enumerate() {
            let x = grid_x + c as u64 * CELL_W;
            let level = grey_level(v, max);
            let ink = if level < 128 { "#ffffff" } else { "#000000" };
            let _ = writeln!(
                s,
                "<g class=\"cell\" data-row=\"{r}\" data-col=\"{c}\"><rect x=\"{x}\" y=\"{y}\" \
                 width=\"{CELL_W}\" height=\"{CELL_H}\" fill=\"{}\" stroke=\"#cccccc\"/>\
                 <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{ink}\">{:.2}</text></g>",
                grey(level),
                x + CELL_W / 2,
                y + 16,
                v
            );
        }
    }
    // legend: top is max, bottom is 0
    let _ = writeln!(s, "<g class=\"legend\">");
    for i in 0..LEGEND_STEPS {
        let value = max * (LEGEND_STEPS - 1 - i) as f64 / (LEGEND_STEPS - 1) as f64;
        let _ = writeln!(
            s,
            "<rect x=\"{legend_x}\" y=\"{}\" width=\"20\" height=\"16\" fill=\"{}\"/>",
            H_TOP + i * 16,
            grey(grey_level(value, max))
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\">{:.2}</text>\n<text x=\"{}\" y=\"{}\">0.00</text>\n</g>",
        legend_x + 26,
        H_TOP + 12,
        max,
        legend_x + 26,
        H_TOP + LEGEND_STEPS * 16 - 4
    );
    s.push_str("</svg>\n");
    Ok(s)
}
