//! Equal-frequency (tertile) binning of continuous attributes.
//!
//! Cut points are order statistics of the candidate values: with `n` values
//! sorted ascending, the lower cut is the value at rank `ceil(n/3)` and the
//! upper cut the value at rank `ceil(2n/3)`. A value equal to a cut belongs
//! to the lower bin, so the assignment depends only on the multiset of
//! values, never on candidate order. Empty bins are dropped.

use serde::{Deserialize, Serialize};

use super::{AttrValue, AttributeKind, Catalog, CatalogError};

pub const TERTILES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    /// Smallest and largest member value.
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub dimension: String,
    /// Non-empty bins in ascending value order.
    pub bins: Vec<Bin>,
    /// Per candidate (same order as the input), its bin; `None` for missing values.
    pub assignment: Vec<Option<usize>>,
    /// Lower and upper cut values, when at least one value is present.
    pub cuts: Option<(f64, f64)>,
}

impl Binning {
    pub fn label_of(&self, position: usize) -> Option<&str> {
        self.assignment[position].map(|b| self.bins[b].label.as_str())
    }
}

/// Tertile cut points of an ascending-sorted, non-empty slice.
pub fn tertile_cuts(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len();
    debug_assert!(n > 0);
    let lower = n.div_ceil(3).max(1) - 1;
    let upper = (2 * n).div_ceil(3).max(1) - 1;
    (sorted[lower], sorted[upper])
}

fn raw_bin(v: f64, (c1, c2): (f64, f64)) -> usize {
    if v <= c1 {
        0
    } else if v <= c2 {
        1
    } else {
        2
    }
}

pub fn discretize(
    catalog: &Catalog,
    dimension: &str,
    candidates: &[usize],
) -> Result<Binning, CatalogError> {
    let col = catalog
        .schema()
        .index_of(dimension)
        .ok_or_else(|| CatalogError::UnknownDimension(dimension.to_string()))?;
    let attr = &catalog.schema().attributes()[col];
    if attr.kind != AttributeKind::Continuous {
        return Err(CatalogError::NotContinuous(dimension.to_string()));
    }
    let values: Vec<Option<f64>> = candidates
        .iter()
        .map(|&i| match catalog.value(i, col) {
            AttrValue::Continuous(x) => Some(*x),
            _ => None,
        })
        .collect();
    Ok(bin_values(dimension, &values, attr.unit.as_deref()))
}

/// Bins raw values; exposed separately so callers without a catalog
/// (tests, the question generator) share the exact same rule.
pub fn bin_values(dimension: &str, values: &[Option<f64>], unit: Option<&str>) -> Binning {
    let mut sorted: Vec<f64> = values.iter().flatten().copied().collect();
    if sorted.is_empty() {
        return Binning {
            dimension: dimension.to_string(),
            bins: Vec::new(),
            assignment: vec![None; values.len()],
            cuts: None,
        };
    }
    sorted.sort_by(f64::total_cmp);
    let cuts = tertile_cuts(&sorted);

    let mut lo = [f64::INFINITY; TERTILES];
    let mut hi = [f64::NEG_INFINITY; TERTILES];
    let mut count = [0usize; TERTILES];
    for &v in &sorted {
        let b = raw_bin(v, cuts);
        lo[b] = lo[b].min(v);
        hi[b] = hi[b].max(v);
        count[b] += 1;
    }
    let mut remap = [None; TERTILES];
    let mut bins = Vec::new();
    for b in 0..TERTILES {
        if count[b] > 0 {
            remap[b] = Some(bins.len());
            bins.push(Bin {
                lo: lo[b],
                hi: hi[b],
                count: count[b],
                label: range_label(lo[b], hi[b], unit),
            });
        }
    }
    let assignment = values
        .iter()
        .map(|v| v.and_then(|v| remap[raw_bin(v, cuts)]))
        .collect();
    Binning {
        dimension: dimension.to_string(),
        bins,
        assignment,
        cuts: Some(cuts),
    }
}

fn trim_decimal(x: f64) -> String {
    let s = format!("{x:.1}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

fn compact(x: f64) -> String {
    let a = x.abs();
    if a >= 1_000_000.0 {
        format!("{}M", trim_decimal(x / 1_000_000.0))
    } else if a >= 1_000.0 {
        format!("{}K", trim_decimal(x / 1_000.0))
    } else {
        trim_decimal(x)
    }
}

/// Human-readable amount: `$25K`, `45K miles`, or a bare number (years).
pub fn format_amount(x: f64, unit: Option<&str>) -> String {
    match unit {
        Some(u) if super::schema::is_currency_unit(u) => format!("${}", compact(x)),
        Some(u) => format!("{} {u}", compact(x)),
        None => trim_decimal(x),
    }
}

/// `$20K–$30K`, `20K–45K miles`, `2015–2018`; a single value when lo == hi.
pub fn range_label(lo: f64, hi: f64, unit: Option<&str>) -> String {
    if lo == hi {
        return format_amount(lo, unit);
    }
    match unit {
        Some(u) if super::schema::is_currency_unit(u) => {
            format!("${}–${}", compact(lo), compact(hi))
        }
        Some(u) => format!("{}–{} {u}", compact(lo), compact(hi)),
        None => format!("{}–{}", trim_decimal(lo), trim_decimal(hi)),
    }
}
