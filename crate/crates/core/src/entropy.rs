//! Attribute-level uncertainty over a candidate set.
//!
//! Continuous attributes are tertile-binned before counting, so a price
//! column contributes at most three distinct values. Missing values are left
//! out of both the counts and the total.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::{discretize, AttrValue, AttributeKind, Catalog, CatalogError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueDistribution {
    pub dimension: String,
    pub counts: BTreeMap<String, usize>,
    pub total: usize,
}

impl ValueDistribution {
    pub fn from_counts<I, S>(dimension: &str, counts: I) -> Self
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (value, n) in counts {
            if n > 0 {
                *map.entry(value.into()).or_insert(0) += n;
            }
        }
        let total = map.values().sum();
        Self {
            dimension: dimension.to_string(),
            counts: map,
            total,
        }
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Values by descending share, ties alphabetical.
    pub fn ranked(&self) -> Vec<(&str, usize)> {
        let mut v: Vec<(&str, usize)> = self.counts.iter().map(|(k, n)| (k.as_str(), *n)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }
}

pub fn value_distribution(
    catalog: &Catalog,
    candidates: &[usize],
    dimension: &str,
) -> Result<ValueDistribution, CatalogError> {
    let col = catalog
        .schema()
        .index_of(dimension)
        .ok_or_else(|| CatalogError::UnknownDimension(dimension.to_string()))?;
    match catalog.schema().attributes()[col].kind {
        AttributeKind::Categorical => {
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for &i in candidates {
                if let AttrValue::Categorical(v) = catalog.value(i, col) {
                    *counts.entry(v.clone()).or_insert(0) += 1;
                }
            }
            Ok(ValueDistribution::from_counts(dimension, counts))
        }
        AttributeKind::Continuous => {
            let binning = discretize(catalog, dimension, candidates)?;
            Ok(ValueDistribution::from_counts(
                dimension,
                binning.bins.iter().map(|b| (b.label.clone(), b.count)),
            ))
        }
    }
}

/// Shannon entropy in bits, with `0 log 0 = 0`. Empty counts give 0.
pub fn entropy_of_counts<I: IntoIterator<Item = usize>>(counts: I) -> f64 {
    let counts: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum();
    // A single value yields -1*log2(1) = -0.0.
    h.max(0.0)
}

pub fn shannon_entropy(dist: &ValueDistribution) -> f64 {
    entropy_of_counts(dist.counts.values().copied())
}

/// Entropy divided by `log2(distinct values)`; 0 when fewer than two values.
pub fn normalized_entropy(dist: &ValueDistribution) -> f64 {
    let m = dist.distinct();
    if m < 2 {
        return 0.0;
    }
    (shannon_entropy(dist) / (m as f64).log2()).clamp(0.0, 1.0)
}

/// Which entropy the question threshold compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMode {
    #[default]
    Normalized,
    RawBits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEntropy {
    pub dimension: String,
    pub raw_entropy: f64,
    pub normalized_entropy: f64,
    pub distinct_values: usize,
    pub distribution: ValueDistribution,
}

impl DimensionEntropy {
    pub fn from_distribution(distribution: ValueDistribution) -> Self {
        Self {
            dimension: distribution.dimension.clone(),
            raw_entropy: shannon_entropy(&distribution),
            normalized_entropy: normalized_entropy(&distribution),
            distinct_values: distribution.distinct(),
            distribution,
        }
    }

    pub fn score(&self, mode: EntropyMode) -> f64 {
        match mode {
            EntropyMode::Normalized => self.normalized_entropy,
            EntropyMode::RawBits => self.raw_entropy,
        }
    }
}

/// Per-dimension entropies in schema order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub candidate_count: usize,
    pub dimensions: Vec<DimensionEntropy>,
}

impl EntropyReport {
    pub fn get(&self, dimension: &str) -> Option<&DimensionEntropy> {
        self.dimensions.iter().find(|d| d.dimension == dimension)
    }
}

pub fn entropy_report(catalog: &Catalog, candidates: &[usize]) -> EntropyReport {
    let dimensions = catalog
        .schema()
        .names()
        .map(|d| {
            let dist = value_distribution(catalog, candidates, d)
                .expect("schema dimensions are always valid");
            DimensionEntropy::from_distribution(dist)
        })
        .collect();
    EntropyReport {
        candidate_count: candidates.len(),
        dimensions,
    }
}

/// Highest-scoring dimension outside `specified ∪ asked`, first in schema
/// order on ties. Returns the dimension and its score.
pub fn best_available<'a>(
    report: &'a EntropyReport,
    specified: &[String],
    asked: &[String],
    mode: EntropyMode,
) -> Option<(&'a str, f64)> {
    let mut best: Option<(&str, f64)> = None;
    for d in &report.dimensions {
        let name = d.dimension.as_str();
        if specified.iter().any(|s| s == name) || asked.iter().any(|s| s == name) {
            continue;
        }
        let score = d.score(mode);
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((name, score));
        }
    }
    best
}

/// Next question dimension, or `None` when nothing available clears `tau`.
pub fn select_question_dimension<'a>(
    report: &'a EntropyReport,
    specified: &[String],
    asked: &[String],
    tau: f64,
    mode: EntropyMode,
) -> Option<&'a str> {
    best_available(report, specified, asked, mode)
        .filter(|(_, score)| *score >= tau)
        .map(|(d, _)| d)
}

/// Highest normalized-entropy unspecified dimension over the ranked items;
/// `None` if every unspecified dimension is constant there.
pub fn select_diversification_dimension(
    catalog: &Catalog,
    ranked: &[usize],
    specified: &[String],
) -> Option<String> {
    if ranked.is_empty() {
        return None;
    }
    let report = entropy_report(catalog, ranked);
    best_available(&report, specified, &[], EntropyMode::Normalized)
        .filter(|(_, h)| *h > 0.0)
        .map(|(d, _)| d.to_string())
}
