//! Expert-curated benchmark triples.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::extraction::normalize_field;

/// A normalized gold triple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GoldTriple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSet {
    pub triples: Vec<GoldTriple>,
    pub annotator: String,
    pub source_note: String,
}

/// A raw row as read from the CSV, with its 1-based data row number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldRow {
    pub row: usize,
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmptyGoldField {
    pub row: usize,
    pub field: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GoldError {
    EmptyFields(Vec<EmptyGoldField>),
}

impl fmt::Display for GoldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoldError::EmptyFields(rows) => {
                f.write_str("gold set has empty fields: ")?;
                for (i, e) in rows.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "row {} {}", e.row, e.field)?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GoldError {}

/// A duplicate row collapsed into an earlier one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateRow {
    pub row: usize,
    pub first_row: usize,
}

impl GoldSet {
    /// Normalizes rows with the extraction rules and collapses duplicates.
    ///
    /// Every row with an empty field (after normalization) is reported.
    pub fn from_rows(
        rows: Vec<GoldRow>,
        annotator: String,
        source_note: String,
    ) -> Result<(GoldSet, Vec<DuplicateRow>), GoldError> {
        let mut empty = Vec::new();
        let mut triples = Vec::with_capacity(rows.len());
        let mut first_seen: Vec<(GoldTriple, usize)> = Vec::new();
        let mut seen: BTreeSet<GoldTriple> = BTreeSet::new();
        let mut duplicates = Vec::new();
        for row in rows {
            let t = GoldTriple {
                subject: normalize_field(&row.subject),
                predicate: normalize_field(&row.predicate),
                object: normalize_field(&row.object),
            };
            for (value, field) in
                [(&t.subject, "subject"), (&t.predicate, "predicate"), (&t.object, "object")]
            {
                if value.is_empty() {
                    empty.push(EmptyGoldField { row: row.row, field });
                }
            }
            if !empty.is_empty() {
                continue;
            }
            if seen.insert(t.clone()) {
                first_seen.push((t.clone(), row.row));
                triples.push(t);
            } else {
                let first_row = first_seen.iter().find(|(g, _)| *g == t).map(|(_, r)| *r).unwrap_or(0);
                duplicates.push(DuplicateRow { row: row.row, first_row });
            }
        }
        if !empty.is_empty() {
            return Err(GoldError::EmptyFields(empty));
        }
        Ok((GoldSet { triples, annotator, source_note }, duplicates))
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}
