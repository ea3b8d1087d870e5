//! Turning a user's message into filter changes, phrase preferences and a
//! patience signal.
//!
//! [`ParserAdapter`] is the contract. [`RuleParser`] is the deterministic
//! default; [`ExternalParser`] forwards the JSON request to any
//! [`Transport`] (an LLM endpoint, a recorded fixture) and validates the
//! JSON reply against the schema before the engine sees it.

mod rules;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{AttributeKind, Catalog, FilterSet};

pub use rules::{parse_turn_rule_based, RuleParser};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Patience {
    #[default]
    Patient,
    Impatient,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParsedTurn {
    pub filter_delta: FilterSet,
    #[serde(default)]
    pub liked: Vec<String>,
    #[serde(default)]
    pub disliked: Vec<String>,
    #[serde(default)]
    pub patience: Patience,
}

impl ParsedTurn {
    pub fn is_empty(&self) -> bool {
        self.filter_delta.is_empty() && self.liked.is_empty() && self.disliked.is_empty()
    }

    /// Checks the contract: dimensions exist with the right predicate kind,
    /// phrases are non-empty.
    pub fn validate(&self, schema: &SchemaSummary) -> Result<(), ParseError> {
        for (dim, pred) in self.filter_delta.iter() {
            let d = schema
                .dimension(dim)
                .ok_or_else(|| ParseError::Invalid(format!("unknown dimension `{dim}`")))?;
            let range = matches!(pred, crate::catalog::Predicate::Range { .. });
            if range != (d.kind == AttributeKind::Continuous) {
                return Err(ParseError::Invalid(format!(
                    "predicate kind does not fit dimension `{dim}`"
                )));
            }
        }
        if self
            .liked
            .iter()
            .chain(&self.disliked)
            .any(|p| p.trim().is_empty())
        {
            return Err(ParseError::Invalid("empty preference phrase".into()));
        }
        Ok(())
    }
}

/// True iff the turn carries an impatience signal.
pub fn detect_impatience(parsed: &ParsedTurn) -> bool {
    parsed.patience == Patience::Impatient
}

/// Union by dimension; on a collision the newer predicate replaces the old one.
pub fn merge_filters(existing: &FilterSet, delta: &FilterSet) -> FilterSet {
    let mut merged = existing.clone();
    for (dim, pred) in delta.iter() {
        merged.insert(dim, pred.clone());
    }
    merged
}

/// Appends phrases not already present (exact match).
pub fn merge_phrases(existing: &mut Vec<String>, new: &[String]) {
    for p in new {
        if !existing.contains(p) {
            existing.push(p.clone());
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    Agent,
}

/// One entry of the conversation history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parsed: Option<ParsedTurn>,
    /// Set on agent turns that asked about a dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_dimension: Option<String>,
}

impl Turn {
    pub fn user(text: &str, parsed: ParsedTurn) -> Self {
        Self {
            speaker: Speaker::User,
            text: text.to_string(),
            parsed: Some(parsed),
            question_dimension: None,
        }
    }

    pub fn agent(text: &str, question_dimension: Option<&str>) -> Self {
        Self {
            speaker: Speaker::Agent,
            text: text.to_string(),
            parsed: None,
            question_dimension: question_dimension.map(str::to_string),
        }
    }
}

/// The dimension a pending agent question asked about, if the last turn is one.
pub fn pending_question(history: &[Turn]) -> Option<&str> {
    match history.last() {
        Some(t) if t.speaker == Speaker::Agent => t.question_dimension.as_deref(),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSummary {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    pub label: String,
    /// Known categorical values; empty for continuous dimensions.
    #[serde(default)]
    pub values: Vec<String>,
}

/// What a parser gets to know about the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaSummary {
    pub dimensions: Vec<DimensionSummary>,
}

impl SchemaSummary {
    pub fn from_catalog(catalog: &Catalog) -> Self {
        let dimensions = catalog
            .schema()
            .attributes()
            .iter()
            .map(|a| DimensionSummary {
                name: a.name.clone(),
                kind: a.kind,
                unit: a.unit.clone(),
                label: a.question_label.clone(),
                values: match a.kind {
                    AttributeKind::Categorical => catalog.vocabulary(&a.name),
                    AttributeKind::Continuous => Vec::new(),
                },
            })
            .collect();
        Self { dimensions }
    }

    pub fn dimension(&self, name: &str) -> Option<&DimensionSummary> {
        self.dimensions.iter().find(|d| d.name == name)
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("parser transport failed: {0}")]
    Transport(String),
    #[error("parser reply is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("parser reply violates the schema: {0}")]
    Invalid(String),
}

pub trait ParserAdapter: Send + Sync {
    fn parse(
        &self,
        text: &str,
        schema: &SchemaSummary,
        history: &[Turn],
    ) -> Result<ParsedTurn, ParseError>;
}

/// Request body sent to an external parser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterRequest {
    pub text: String,
    pub schema: SchemaSummary,
    pub history: Vec<Turn>,
}

/// Carries a serialized [`AdapterRequest`] somewhere and returns the raw reply.
pub trait Transport: Send + Sync {
    fn complete(&self, request_json: &str) -> Result<String, String>;
}

impl<F> Transport for F
where
    F: Fn(&str) -> Result<String, String> + Send + Sync,
{
    fn complete(&self, request_json: &str) -> Result<String, String> {
        self(request_json)
    }
}

pub struct ExternalParser<T> {
    transport: T,
}

impl<T: Transport> ExternalParser<T> {
    pub fn new(transport: T) -> Self {
        Self { transport }
    }
}

impl<T: Transport> ParserAdapter for ExternalParser<T> {
    fn parse(
        &self,
        text: &str,
        schema: &SchemaSummary,
        history: &[Turn],
    ) -> Result<ParsedTurn, ParseError> {
        let request = AdapterRequest {
            text: text.to_string(),
            schema: schema.clone(),
            history: history.to_vec(),
        };
        let body = serde_json::to_string(&request)?;
        let reply = self
            .transport
            .complete(&body)
            .map_err(ParseError::Transport)?;
        let parsed: ParsedTurn = serde_json::from_str(&reply)?;
        parsed.validate(schema)?;
        Ok(parsed)
    }
}
