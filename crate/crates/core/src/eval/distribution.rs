use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Counts of normalized predicates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateDistribution {
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
}

impl PredicateDistribution {
    pub fn from_predicates<'a, I: IntoIterator<Item = &'a str>>(predicates: I) -> Self {
        let mut d = Self::default();
        for p in predicates {
            d.add(p, 1);
        }
        d
    }

    pub fn add(&mut self, predicate: &str, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(predicate.to_string()).or_insert(0) += n;
        self.total += n;
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn count(&self, predicate: &str) -> u64 {
        self.counts.get(predicate).copied().unwrap_or(0)
    }

    pub fn probability(&self, predicate: &str) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(predicate) as f64 / self.total as f64
        }
    }

    /// Predicates by descending count, ties by name.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<(&str, u64)> = self.counts.iter().map(|(k, &c)| (k.as_str(), c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmptyDistribution;

impl fmt::Display for EmptyDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("empty distribution")
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EmptyDistribution {}

/// Jensen-Shannon divergence in bits over the union support; in [0, 1].
pub fn distribution_divergence(
    p: &PredicateDistribution,
    q: &PredicateDistribution,
) -> Result<f64, EmptyDistribution> {
    if p.is_empty() || q.is_empty() {
        return Err(EmptyDistribution);
    }
    let mut keys: Vec<&str> = p.counts.keys().map(String::as_str).collect();
    keys.extend(q.counts.keys().map(String::as_str).filter(|k| !p.counts.contains_key(*k)));
    let mut js = 0.0;
    for k in keys {
        let pi = p.probability(k);
        let qi = q.probability(k);
        let mi = 0.5 * (pi + qi);
        if pi > 0.0 {
            js += 0.5 * pi * libm::log2(pi / mi);
        }
        if qi > 0.0 {
            js += 0.5 * qi * libm::log2(qi / mi);
        }
    }
    Ok(js.clamp(0.0, 1.0))
}
