use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AttrValue, AttributeKind, Catalog, CatalogError, Schema};

/// A single-dimension constraint. Ranges are inclusive; either end may be open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Predicate {
    Equals {
        value: String,
    },
    OneOf {
        values: BTreeSet<String>,
    },
    Range {
        #[serde(default)]
        lo: Option<f64>,
        #[serde(default)]
        hi: Option<f64>,
    },
}

impl Predicate {
    pub fn equals(value: impl Into<String>) -> Self {
        Predicate::Equals {
            value: value.into(),
        }
    }

    pub fn one_of<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Predicate::OneOf {
            values: values.into_iter().map(Into::into).collect(),
        }
    }

    pub fn range(lo: Option<f64>, hi: Option<f64>) -> Self {
        Predicate::Range { lo, hi }
    }

    pub fn at_most(hi: f64) -> Self {
        Predicate::Range { lo: None, hi: Some(hi) }
    }

    pub fn at_least(lo: f64) -> Self {
        Predicate::Range { lo: Some(lo), hi: None }
    }

    /// Missing values never match.
    pub fn matches(&self, value: &AttrValue) -> bool {
        match (self, value) {
            (Predicate::Equals { value: want }, AttrValue::Categorical(got)) => {
                want.eq_ignore_ascii_case(got)
            }
            (Predicate::OneOf { values }, AttrValue::Categorical(got)) => {
                values.iter().any(|v| v.eq_ignore_ascii_case(got))
            }
            (Predicate::Range { lo, hi }, AttrValue::Continuous(x)) => {
                lo.is_none_or(|lo| *x >= lo) && hi.is_none_or(|hi| *x <= hi)
            }
            _ => false,
        }
    }

    fn expected_kind(&self) -> AttributeKind {
        match self {
            Predicate::Range { .. } => AttributeKind::Continuous,
            _ => AttributeKind::Categorical,
        }
    }
}

/// Hard constraints keyed by dimension; at most one predicate per dimension.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FilterSet {
    entries: BTreeMap<String, Predicate>,
}

impl FilterSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, dimension: &str, predicate: Predicate) -> Self {
        self.insert(dimension, predicate);
        self
    }

    /// Replaces any existing predicate on `dimension`.
    pub fn insert(&mut self, dimension: &str, predicate: Predicate) -> Option<Predicate> {
        self.entries.insert(dimension.to_string(), predicate)
    }

    pub fn remove(&mut self, dimension: &str) -> Option<Predicate> {
        self.entries.remove(dimension)
    }

    pub fn get(&self, dimension: &str) -> Option<&Predicate> {
        self.entries.get(dimension)
    }

    pub fn contains(&self, dimension: &str) -> bool {
        self.entries.contains_key(dimension)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Predicate)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn dimensions(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn validate(&self, schema: &Schema) -> Result<(), CatalogError> {
        for (dim, pred) in &self.entries {
            let attr = schema
                .get(dim)
                .ok_or_else(|| CatalogError::UnknownDimension(dim.clone()))?;
            if attr.kind != pred.expected_kind() {
                return Err(CatalogError::PredicateKind {
                    dimension: dim.clone(),
                    kind: attr.kind,
                });
            }
            if let Predicate::Range { lo, hi } = pred {
                if lo.is_some_and(f64::is_nan) || hi.is_some_and(f64::is_nan) {
                    return Err(CatalogError::InvalidSchema(format!(
                        "NaN bound on `{dim}`"
                    )));
                }
            }
        }
        Ok(())
    }

    /// True when `item` satisfies every predicate whose dimension is not in `skip`.
    pub fn admits(&self, catalog: &Catalog, item: usize, skip: &[String]) -> bool {
        self.entries.iter().all(|(dim, pred)| {
            if skip.iter().any(|s| s == dim) {
                return true;
            }
            match catalog.schema().index_of(dim) {
                Some(col) => pred.matches(catalog.value(item, col)),
                None => false,
            }
        })
    }
}

/// Items surviving the current filters, in catalog order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    /// Catalog positions of the members.
    pub members: Vec<usize>,
    pub source_filters: FilterSet,
    /// Dimensions dropped during relaxation, in drop order.
    pub relaxed_dimensions: Vec<String>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn ids<'a>(&self, catalog: &'a Catalog) -> Vec<&'a str> {
        self.members
            .iter()
            .map(|&i| catalog.item(i).id.as_str())
            .collect()
    }
}

/// Exactly the items that satisfy every predicate.
pub fn apply_filters(catalog: &Catalog, filters: &FilterSet) -> CandidateSet {
    let members = (0..catalog.len())
        .filter(|&i| filters.admits(catalog, i, &[]))
        .collect();
    CandidateSet {
        members,
        source_filters: filters.clone(),
        relaxed_dimensions: Vec::new(),
    }
}

/// Drops predicates one at a time, least important first, until something
/// matches. Only meaningful when `apply_filters` came back empty; with an
/// empty catalog every predicate ends up dropped and the result is empty.
pub fn relax_filters(catalog: &Catalog, filters: &FilterSet) -> CandidateSet {
    let schema = catalog.schema();
    let mut order: Vec<&str> = filters.dimensions().collect();
    order.sort_by_key(|d| schema.relaxation_key(d));

    let mut relaxed: Vec<String> = Vec::with_capacity(order.len());
    for dim in order {
        relaxed.push(dim.to_string());
        let members: Vec<usize> = (0..catalog.len())
            .filter(|&i| filters.admits(catalog, i, &relaxed))
            .collect();
        if !members.is_empty() {
            return CandidateSet {
                members,
                source_filters: filters.clone(),
                relaxed_dimensions: relaxed,
            };
        }
    }
    CandidateSet {
        members: (0..catalog.len()).collect(),
        source_filters: filters.clone(),
        relaxed_dimensions: relaxed,
    }
}

/// `apply_filters`, falling back to `relax_filters` on an empty result.
pub fn retrieve(catalog: &Catalog, filters: &FilterSet) -> CandidateSet {
    let direct = apply_filters(catalog, filters);
    if direct.is_empty() && !filters.is_empty() {
        relax_filters(catalog, filters)
    } else {
        direct
    }
}
