//! Item catalog: schema, loading, hard filters, relaxation and binning.

mod discretize;
mod filter;
mod schema;

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use discretize::{bin_values, discretize, format_amount, range_label, tertile_cuts, Bin, Binning};
pub use filter::{apply_filters, relax_filters, retrieve, CandidateSet, FilterSet, Predicate};
pub use schema::{AttributeKind, AttributeSchema, Schema};
pub(crate) use schema::is_currency_unit;

/// Columns with fixed meaning in the catalog file; never schema attributes.
pub const RESERVED_COLUMNS: [&str; 4] = ["id", "description", "pros", "cons"];

const MISSING_MARKERS: [&str; 5] = ["", "na", "n/a", "-", "?"];

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("duplicate attribute `{0}` in schema")]
    DuplicateAttribute(String),
    #[error("column `{0}` is not declared in the schema")]
    UnknownColumn(String),
    #[error("schema attribute `{0}` has no column in the catalog header")]
    MissingColumn(String),
    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("row {row}: duplicate item id {id:?}")]
    DuplicateId { row: usize, id: String },
    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),
    #[error("dimension `{0}` is not continuous")]
    NotContinuous(String),
    #[error("predicate on `{dimension}` does not fit a {kind:?} attribute")]
    PredicateKind {
        dimension: String,
        kind: AttributeKind,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// An attribute value. Serializes as a bare string, number or `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Continuous(f64),
    Categorical(String),
    Missing,
}

impl AttrValue {
    pub fn is_missing(&self) -> bool {
        matches!(self, AttrValue::Missing)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttrValue::Continuous(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            AttrValue::Categorical(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Continuous(x) if x.fract() == 0.0 && x.abs() < 1e15 => {
                write!(f, "{}", *x as i64)
            }
            AttrValue::Continuous(x) => write!(f, "{x}"),
            AttrValue::Categorical(s) => f.write_str(s),
            AttrValue::Missing => f.write_str("unknown"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    /// One value per schema attribute, in schema order.
    pub values: Vec<AttrValue>,
    pub description: String,
    pub pros: Vec<String>,
    pub cons: Vec<String>,
}

/// Immutable item table. Safe to share across sessions behind an `Arc`.
#[derive(Debug, Clone)]
pub struct Catalog {
    schema: Schema,
    items: Vec<Item>,
    by_id: HashMap<String, usize>,
}

impl Catalog {
    pub fn new(schema: Schema, items: Vec<Item>) -> Result<Self, CatalogError> {
        let mut by_id = HashMap::with_capacity(items.len());
        for (row, item) in items.iter().enumerate() {
            if item.values.len() != schema.len() {
                return Err(CatalogError::MalformedRow {
                    row: row + 1,
                    message: format!(
                        "expected {} attribute values, found {}",
                        schema.len(),
                        item.values.len()
                    ),
                });
            }
            for (attr, value) in schema.attributes().iter().zip(&item.values) {
                let ok = match (attr.kind, value) {
                    (_, AttrValue::Missing) => true,
                    (AttributeKind::Categorical, AttrValue::Categorical(_)) => true,
                    (AttributeKind::Continuous, AttrValue::Continuous(x)) => x.is_finite(),
                    _ => false,
                };
                if !ok {
                    return Err(CatalogError::MalformedRow {
                        row: row + 1,
                        message: format!("value {value:?} does not fit attribute `{}`", attr.name),
                    });
                }
            }
            if by_id.insert(item.id.clone(), row).is_some() {
                return Err(CatalogError::DuplicateId {
                    row: row + 1,
                    id: item.id.clone(),
                });
            }
        }
        Ok(Self {
            schema,
            items,
            by_id,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn item(&self, index: usize) -> &Item {
        &self.items[index]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn value(&self, item: usize, column: usize) -> &AttrValue {
        &self.items[item].values[column]
    }

    pub fn value_of(&self, item: usize, dimension: &str) -> Option<&AttrValue> {
        self.schema.index_of(dimension).map(|c| self.value(item, c))
    }

    /// Distinct categorical values of `dimension`, sorted.
    pub fn vocabulary(&self, dimension: &str) -> Vec<String> {
        let Some(col) = self.schema.index_of(dimension) else {
            return Vec::new();
        };
        let mut vals: Vec<String> = self
            .items
            .iter()
            .filter_map(|it| it.values[col].as_str().map(str::to_string))
            .collect();
        vals.sort();
        vals.dedup();
        vals
    }

    /// Attribute map for presentation payloads, in schema order.
    pub fn attribute_map(&self, item: usize) -> Vec<(String, AttrValue)> {
        self.schema
            .names()
            .zip(&self.items[item].values)
            .map(|(n, v)| (n.to_string(), v.clone()))
            .collect()
    }

    pub fn load_files(csv_path: &Path, schema_path: &Path) -> Result<Self, CatalogError> {
        let schema = Schema::from_json_reader(std::fs::File::open(schema_path)?)?;
        load_catalog(std::fs::File::open(csv_path)?, schema)
    }
}

fn synthesize_description(schema: &Schema, values: &[AttrValue]) -> String {
    schema
        .attributes()
        .iter()
        .zip(values)
        .filter(|(_, v)| !v.is_missing())
        .map(|(a, v)| format!("{} {}", a.question_label, v))
        .collect::<Vec<_>>()
        .join(", ")
}

fn parse_continuous(raw: &str, unit: Option<&str>) -> Option<f64> {
    let mut s = raw.trim().to_string();
    if let Some(unit) = unit {
        let lower = s.to_ascii_lowercase();
        let u = unit.to_ascii_lowercase();
        if lower.ends_with(&u) {
            s.truncate(s.len() - u.len());
        }
    }
    let cleaned: String = s
        .trim()
        .trim_start_matches('$')
        .chars()
        .filter(|c| *c != ',' && *c != '_')
        .collect();
    cleaned.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

fn split_phrases(cell: &str) -> Vec<String> {
    cell.split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Loads a comma-separated catalog whose header names schema attributes
/// plus the optional reserved columns `id`, `description`, `pros`, `cons`.
///
/// Row numbers in errors count data rows from 1 (the header is row 0).
pub fn load_catalog<R: Read>(source: R, schema: Schema) -> Result<Catalog, CatalogError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::Headers)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| CatalogError::MalformedRow {
            row: 0,
            message: e.to_string(),
        })?
        .clone();

    let mut column_of_attr = vec![None; schema.len()];
    let (mut id_col, mut desc_col, mut pros_col, mut cons_col) = (None, None, None, None);
    for (i, h) in headers.iter().enumerate() {
        match h {
            "id" => id_col = Some(i),
            "description" => desc_col = Some(i),
            "pros" => pros_col = Some(i),
            "cons" => cons_col = Some(i),
            other => match schema.index_of(other) {
                Some(a) => column_of_attr[a] = Some(i),
                None => return Err(CatalogError::UnknownColumn(other.to_string())),
            },
        }
    }
    if let Some(missing) = column_of_attr.iter().position(Option::is_none) {
        return Err(CatalogError::MissingColumn(
            schema.attributes()[missing].name.clone(),
        ));
    }

    let mut items = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let row = n + 1;
        let record = record.map_err(|e| CatalogError::MalformedRow {
            row,
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(CatalogError::MalformedRow {
                row,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let mut values = Vec::with_capacity(schema.len());
        for (attr, col) in schema.attributes().iter().zip(&column_of_attr) {
            let raw = record[col.expect("checked above")].trim();
            let value = if MISSING_MARKERS.contains(&raw.to_ascii_lowercase().as_str()) {
                AttrValue::Missing
            } else {
                match attr.kind {
                    AttributeKind::Categorical => AttrValue::Categorical(raw.to_string()),
                    AttributeKind::Continuous => parse_continuous(raw, attr.unit.as_deref())
                        .map(AttrValue::Continuous)
                        .ok_or_else(|| CatalogError::BadValue {
                            row,
                            column: attr.name.clone(),
                            value: raw.to_string(),
                        })?,
                }
            };
            values.push(value);
        }
        let id = id_col
            .map(|c| record[c].trim().to_string())
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| format!("item-{row}"));
        let description = desc_col
            .map(|c| record[c].trim().to_string())
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| synthesize_description(&schema, &values));
        let pros = pros_col.map(|c| split_phrases(&record[c])).unwrap_or_default();
        let cons = cons_col.map(|c| split_phrases(&record[c])).unwrap_or_default();
        items.push(Item {
            id,
            values,
            description,
            pros,
            cons,
        });
    }
    Catalog::new(schema, items)
}
