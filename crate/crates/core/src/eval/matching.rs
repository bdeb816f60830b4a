//! One-to-one alignment of predicted triples with gold triples.
//!
//! Scoring produces a [`ScoreMatrix`] of eligible `(predicted, gold)` pairs;
//! an assignment policy then picks a one-to-one subset of them.
//!
//! * Greedy walks eligible pairs by descending score (ties: lower predicted
//!   index, then lower gold index) and takes a pair when both ends are free.
//!   Pairs of equal score form a tier; after the walk over a tier, augmenting
//!   paths inside that tier grow it to a maximum matching. With binary scores
//!   (exact, partial) the whole graph is one tier, so greedy returns a
//!   maximum-cardinality matching.
//! * Optimal maximizes the number of pairs, then the total score (Hungarian
//!   method on `big + score` weights).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::backend::{CompletionError, Embedder, EmbeddingVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Exact,
    Partial,
    Semantic,
}

impl MatchMode {
    pub const ALL: [MatchMode; 3] = [MatchMode::Exact, MatchMode::Partial, MatchMode::Semantic];

    pub fn name(self) -> &'static str {
        match self {
            MatchMode::Exact => "exact",
            MatchMode::Partial => "partial",
            MatchMode::Semantic => "semantic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assignment {
    Greedy,
    Optimal,
}

pub const DEFAULT_SEMANTIC_THRESHOLD: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub mode: MatchMode,
    pub semantic_threshold: f64,
    pub partial_min_fields: usize,
    pub assignment: Assignment,
}

impl MatchConfig {
    pub fn new(mode: MatchMode) -> Self {
        Self {
            mode,
            semantic_threshold: DEFAULT_SEMANTIC_THRESHOLD,
            partial_min_fields: 2,
            assignment: Assignment::Greedy,
        }
    }

    pub fn with_assignment(mut self, assignment: Assignment) -> Self {
        self.assignment = assignment;
        self
    }

    pub fn with_threshold(mut self, tau: f64) -> Self {
        self.semantic_threshold = tau;
        self
    }

    pub fn validate(&self) -> Result<(), MatchError> {
        if !(self.semantic_threshold > 0.0 && self.semantic_threshold <= 1.0) {
            return Err(MatchError::BadThreshold(self.semantic_threshold));
        }
        if self.partial_min_fields != 2 {
            return Err(MatchError::BadPartialFields(self.partial_min_fields));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatchError {
    MissingEmbedder,
    BadThreshold(f64),
    BadPartialFields(usize),
    Embedding(CompletionError),
    EmbeddingCount { expected: usize, got: usize },
}

impl fmt::Display for MatchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchError::MissingEmbedder => f.write_str("semantic matching needs an embedder"),
            MatchError::BadThreshold(t) => write!(f, "semantic threshold {t} is outside (0, 1]"),
            MatchError::BadPartialFields(n) => {
                write!(f, "partial_min_fields must be 2, got {n}")
            }
            MatchError::Embedding(e) => write!(f, "embedding failed: {e}"),
            MatchError::EmbeddingCount { expected, got } => {
                write!(f, "embedder returned {got} vectors for {expected} texts")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MatchError {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub predicted: usize,
    pub gold: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub pairs: Vec<MatchPair>,
    pub unmatched_predicted: Vec<usize>,
    pub unmatched_gold: Vec<usize>,
}

impl MatchResult {
    fn from_pairs(mut pairs: Vec<MatchPair>, n_pred: usize, n_gold: usize) -> Self {
        pairs.sort_by_key(|p| (p.predicted, p.gold));
        let mut pred_used = vec![false; n_pred];
        let mut gold_used = vec![false; n_gold];
        for p in &pairs {
            assert!(!pred_used[p.predicted] && !gold_used[p.gold], "matching is not one-to-one");
            pred_used[p.predicted] = true;
            gold_used[p.gold] = true;
        }
        Self {
            unmatched_predicted: (0..n_pred).filter(|&i| !pred_used[i]).collect(),
            unmatched_gold: (0..n_gold).filter(|&j| !gold_used[j]).collect(),
            pairs,
        }
    }

    pub fn total_score(&self) -> f64 {
        self.pairs.iter().map(|p| p.score).sum()
    }

    /// True when no index appears in two pairs.
    pub fn is_one_to_one(&self) -> bool {
        let mut preds: Vec<usize> = self.pairs.iter().map(|p| p.predicted).collect();
        let mut golds: Vec<usize> = self.pairs.iter().map(|p| p.gold).collect();
        preds.sort_unstable();
        golds.sort_unstable();
        preds.windows(2).all(|w| w[0] != w[1]) && golds.windows(2).all(|w| w[0] != w[1])
    }
}

/// Eligible scores for every `(predicted, gold)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    n_pred: usize,
    n_gold: usize,
    cells: Vec<Option<f64>>,
}

impl ScoreMatrix {
    pub fn from_fn(n_pred: usize, n_gold: usize, mut f: impl FnMut(usize, usize) -> Option<f64>) -> Self {
        let mut cells = Vec::with_capacity(n_pred * n_gold);
        for i in 0..n_pred {
            for j in 0..n_gold {
                cells.push(f(i, j));
            }
        }
        Self { n_pred, n_gold, cells }
    }

    pub fn n_pred(&self) -> usize {
        self.n_pred
    }

    pub fn n_gold(&self) -> usize {
        self.n_gold
    }

    pub fn get(&self, pred: usize, gold: usize) -> Option<f64> {
        self.cells[pred * self.n_gold + gold]
    }
}

/// Three-field view of a triple used by the matchers.
pub type Fields<'a> = [&'a str; 3];

fn unique_strings<'a>(a: &[Fields<'a>], b: &[Fields<'a>]) -> Vec<&'a str> {
    let mut set: BTreeMap<&'a str, ()> = BTreeMap::new();
    for f in a.iter().chain(b) {
        for s in f {
            set.insert(s, ());
        }
    }
    set.into_keys().collect()
}

/// Embeds each distinct string once.
pub struct EmbeddingTable<'a> {
    index: BTreeMap<&'a str, usize>,
    vectors: Vec<EmbeddingVector>,
}

impl<'a> EmbeddingTable<'a> {
    pub fn build<E: Embedder + ?Sized>(strings: Vec<&'a str>, embedder: &E) -> Result<Self, MatchError> {
        let owned: Vec<String> = strings.iter().map(|s| String::from(*s)).collect();
        let vectors = if owned.is_empty() {
            Vec::new()
        } else {
            embedder.embed(&owned).map_err(MatchError::Embedding)?
        };
        if vectors.len() != owned.len() {
            return Err(MatchError::EmbeddingCount { expected: owned.len(), got: vectors.len() });
        }
        let index = strings.into_iter().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(Self { index, vectors })
    }

    pub fn vector(&self, s: &str) -> &EmbeddingVector {
        &self.vectors[self.index[s]]
    }

    /// Cosine of two strings; identical strings score exactly 1.
    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        if a == b {
            1.0
        } else {
            self.vector(a).cosine(self.vector(b))
        }
    }
}

/// Builds the eligibility/score matrix for a mode.
pub fn score_matrix<E: Embedder + ?Sized>(
    predicted: &[Fields<'_>],
    gold: &[Fields<'_>],
    config: &MatchConfig,
    embedder: Option<&E>,
) -> Result<ScoreMatrix, MatchError> {
    config.validate()?;
    let (n, m) = (predicted.len(), gold.len());
    match config.mode {
        MatchMode::Exact => Ok(ScoreMatrix::from_fn(n, m, |i, j| {
            (predicted[i] == gold[j]).then_some(1.0)
        })),
        MatchMode::Partial => Ok(ScoreMatrix::from_fn(n, m, |i, j| {
            let equal = (0..3).filter(|&k| predicted[i][k] == gold[j][k]).count();
            (equal >= config.partial_min_fields).then_some(1.0)
        })),
        MatchMode::Semantic => {
            let embedder = embedder.ok_or(MatchError::MissingEmbedder)?;
            if n == 0 || m == 0 {
                return Ok(ScoreMatrix::from_fn(n, m, |_, _| None));
            }
            let table = EmbeddingTable::build(unique_strings(predicted, gold), embedder)?;
            let tau = config.semantic_threshold;
            Ok(ScoreMatrix::from_fn(n, m, |i, j| {
                let score = (0..3)
                    .map(|k| table.similarity(predicted[i][k], gold[j][k]))
                    .sum::<f64>()
                    / 3.0;
                (score >= tau).then_some(score)
            }))
        }
    }
}

/// Scores and assigns in one step.
pub fn match_triples<E: Embedder + ?Sized>(
    predicted: &[Fields<'_>],
    gold: &[Fields<'_>],
    config: &MatchConfig,
    embedder: Option<&E>,
) -> Result<MatchResult, MatchError> {
    let matrix = score_matrix(predicted, gold, config, embedder)?;
    Ok(assign(&matrix, config.assignment))
}

pub fn assign(matrix: &ScoreMatrix, policy: Assignment) -> MatchResult {
    match policy {
        Assignment::Greedy => greedy(matrix),
        Assignment::Optimal => optimal(matrix),
    }
}

/// Score-ordered greedy with per-tier augmentation.
pub fn greedy(matrix: &ScoreMatrix) -> MatchResult {
    let (n, m) = (matrix.n_pred, matrix.n_gold);
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if let Some(s) = matrix.get(i, j) {
                edges.push((s, i, j));
            }
        }
    }
    edges.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut pred_match: Vec<Option<usize>> = vec![None; n];
    let mut gold_match: Vec<Option<usize>> = vec![None; m];
    let mut start = 0;
    while start < edges.len() {
        let score = edges[start].0;
        let end = start + edges[start..].iter().take_while(|e| e.0 == score).count();
        let tier = &edges[start..end];

        // endpoints matched in earlier tiers are frozen
        let frozen_pred: Vec<bool> = pred_match.iter().map(Option::is_some).collect();
        let frozen_gold: Vec<bool> = gold_match.iter().map(Option::is_some).collect();

        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(_, i, j) in tier {
            if frozen_pred[i] || frozen_gold[j] {
                continue;
            }
            adj.entry(i).or_default().push(j);
            if pred_match[i].is_none() && gold_match[j].is_none() {
                pred_match[i] = Some(j);
                gold_match[j] = Some(i);
            }
        }
        for &i in adj.keys() {
            if pred_match[i].is_some() {
                continue;
            }
            let mut visited = vec![false; m];
            augment(i, &adj, &mut pred_match, &mut gold_match, &mut visited);
        }
        start = end;
    }

    let pairs = pred_match
        .iter()
        .enumerate()
        .filter_map(|(i, g)| g.map(|j| MatchPair { predicted: i, gold: j, score: matrix.get(i, j).unwrap_or(0.0) }))
        .collect();
    MatchResult::from_pairs(pairs, n, m)
}

fn augment(
    i: usize,
    adj: &BTreeMap<usize, Vec<usize>>,
    pred_match: &mut [Option<usize>],
    gold_match: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    let Some(neighbours) = adj.get(&i) else { return false };
    for &j in neighbours {
        if visited[j] {
            continue;
        }
        visited[j] = true;
        let free = match gold_match[j] {
            None => true,
            Some(other) => augment(other, adj, pred_match, gold_match, visited),
        };
        if free {
            pred_match[i] = Some(j);
            gold_match[j] = Some(i);
            return true;
        }
    }
    false
}

/// Maximum pair count, then maximum total score.
pub fn optimal(matrix: &ScoreMatrix) -> MatchResult {
    let (n, m) = (matrix.n_pred, matrix.n_gold);
    if n == 0 || m == 0 {
        return MatchResult::from_pairs(Vec::new(), n, m);
    }
    // any extra pair outweighs the whole score total
    let big = (n.min(m) + 1) as f64;
    let transpose = n > m;
    let (rows, cols) = if transpose { (m, n) } else { (n, m) };
    let weight = |r: usize, c: usize| -> f64 {
        let (i, j) = if transpose { (c, r) } else { (r, c) };
        matrix.get(i, j).map_or(0.0, |s| big + s)
    };
    let row_to_col = hungarian_max(rows, cols, weight);
    let mut pairs = Vec::new();
    for (r, c) in row_to_col.into_iter().enumerate() {
        let (i, j) = if transpose { (c, r) } else { (r, c) };
        if let Some(score) = matrix.get(i, j) {
            pairs.push(MatchPair { predicted: i, gold: j, score });
        }
    }
    MatchResult::from_pairs(pairs, n, m)
}

/// Maximum-weight assignment of every row to a distinct column (`rows <= cols`).
fn hungarian_max(rows: usize, cols: usize, weight: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    debug_assert!(rows <= cols);
    let inf = f64::INFINITY;
    // 1-based potentials; index 0 is the virtual column/row
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; cols + 1];
    let mut way = vec![0usize; cols + 1];
    let mut col_row = vec![0usize; cols + 1];
    for r in 1..=rows {
        col_row[0] = r;
        let mut j0 = 0usize;
        let mut minv = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = col_row[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = -weight(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[col_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_row[j0] = col_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; rows];
    for j in 1..=cols {
        if col_row[j] != 0 {
            row_to_col[col_row[j] - 1] = j - 1;
        }
    }
    row_to_col
}
