//! `gold.csv` reader: header `subject,predicate,object`, optional leading
//! `# annotator:` and `# source:` comment lines.

use std::path::Path;

use triplex_core::gold::{DuplicateRow, GoldRow};
use triplex_core::GoldSet;

use crate::error::{read_to_string, Error, Result};

pub fn load_gold(path: &Path) -> Result<(GoldSet, Vec<DuplicateRow>)> {
    parse_gold(&read_to_string(path)?).map_err(|m| Error::parse(path, m))
}

pub fn parse_gold(text: &str) -> Result<(GoldSet, Vec<DuplicateRow>), String> {
    let mut annotator = String::new();
    let mut source_note = String::new();
    for line in text.lines().map(str::trim).take_while(|l| l.is_empty() || l.starts_with('#')) {
        let body = line.trim_start_matches('#').trim();
        if let Some((key, value)) = body.split_once(':') {
            match key.trim().to_lowercase().as_str() {
                "annotator" => annotator = value.trim().to_string(),
                "source" | "note" => source_note = value.trim().to_string(),
                _ => {}
            }
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (s, p, o) = (col("subject"), col("predicate"), col("object"));
    let missing: Vec<&str> = [("subject", s), ("predicate", p), ("object", o)]
        .iter()
        .filter(|(_, c)| c.is_none())
        .map(|(n, _)| *n)
        .collect();
    if !missing.is_empty() {
        return Err(format!("missing column(s): {}", missing.join(", ")));
    }
    let (s, p, o) = (s.unwrap(), p.unwrap(), o.unwrap());

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let r = record.map_err(|e| format!("row {row}: {e}"))?;
        let field = |c: usize| r.get(c).unwrap_or("").to_string();
        rows.push(GoldRow { row, subject: field(s), predicate: field(p), object: field(o) });
    }
    if rows.is_empty() {
        return Err("gold set has no rows".into());
    }
    let (gold, dups) = GoldSet::from_rows(rows, annotator, source_note).map_err(|e| e.to_string())?;
    for d in &dups {
        log::warn!("gold row {} duplicates row {}; collapsed", d.row, d.first_row);
    }
    Ok((gold, dups))
}
