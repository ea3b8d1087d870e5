use std::collections::HashSet;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::CatalogError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Categorical,
    Continuous,
}

/// One column of the catalog.
///
/// `relaxation_rank` orders filter relaxation: the lowest rank is dropped
/// first when a query returns nothing. Ties fall back to the name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default)]
    pub relaxation_rank: u32,
    #[serde(default)]
    pub question_label: String,
}

impl AttributeSchema {
    pub fn categorical(name: &str, relaxation_rank: u32) -> Self {
        Self {
            name: name.to_string(),
            kind: AttributeKind::Categorical,
            unit: None,
            relaxation_rank,
            question_label: default_label(name),
        }
    }

    pub fn continuous(name: &str, unit: Option<&str>, relaxation_rank: u32) -> Self {
        Self {
            name: name.to_string(),
            kind: AttributeKind::Continuous,
            unit: unit.map(str::to_string),
            relaxation_rank,
            question_label: default_label(name),
        }
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.question_label = label.to_string();
        self
    }

    pub fn is_currency(&self) -> bool {
        self.kind == AttributeKind::Continuous
            && matches!(self.unit.as_deref(), Some(u) if is_currency_unit(u))
    }
}

pub(crate) fn is_currency_unit(unit: &str) -> bool {
    matches!(unit.to_ascii_lowercase().as_str(), "usd" | "$" | "dollars")
}

fn default_label(name: &str) -> String {
    name.replace('_', " ")
}

#[derive(Debug, Serialize, Deserialize)]
struct SchemaFile {
    attributes: Vec<AttributeSchema>,
}

/// Ordered, validated attribute schema. Declaration order is significant:
/// it is the tie-break order for every argmax over dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    attributes: Vec<AttributeSchema>,
}

impl Schema {
    pub fn new(mut attributes: Vec<AttributeSchema>) -> Result<Self, CatalogError> {
        let mut seen = HashSet::new();
        for attr in &mut attributes {
            if attr.name.trim().is_empty() {
                return Err(CatalogError::InvalidSchema("empty attribute name".into()));
            }
            if super::RESERVED_COLUMNS.contains(&attr.name.as_str()) {
                return Err(CatalogError::InvalidSchema(format!(
                    "attribute name `{}` is reserved",
                    attr.name
                )));
            }
            if !seen.insert(attr.name.clone()) {
                return Err(CatalogError::DuplicateAttribute(attr.name.clone()));
            }
            if attr.question_label.is_empty() {
                attr.question_label = default_label(&attr.name);
            }
        }
        Ok(Self { attributes })
    }

    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self, CatalogError> {
        let file: SchemaFile = serde_json::from_reader(reader)?;
        Self::new(file.attributes)
    }

    pub fn to_json(&self) -> String {
        let file = SchemaFile {
            attributes: self.attributes.clone(),
        };
        serde_json::to_string_pretty(&file).expect("schema serializes")
    }

    pub fn attributes(&self) -> &[AttributeSchema] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&AttributeSchema> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }

    /// Position of `name` in relaxation order (rank, then name).
    pub fn relaxation_key<'a>(&'a self, name: &'a str) -> (u32, &'a str) {
        let rank = self.get(name).map_or(u32::MAX, |a| a.relaxation_rank);
        (rank, name)
    }

    /// All attribute names, least important first.
    pub fn relaxation_order(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.names().collect();
        names.sort_by_key(|n| self.relaxation_key(n));
        names
    }

    /// The first continuous attribute denominated in a currency.
    pub fn currency_dimension(&self) -> Option<&AttributeSchema> {
        self.attributes.iter().find(|a| a.is_currency())
    }
}
