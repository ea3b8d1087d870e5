use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::{CatalogError, FilterSet, Schema};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryType {
    #[default]
    Short,
    Long,
}

impl fmt::Display for QueryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryType::Short => "Short",
            QueryType::Long => "Long",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    #[default]
    Patient,
    Impatient,
}

fn default_fallback() -> String {
    "no preference".to_string()
}

/// A simulated shopper: what they say first, what they secretly require,
/// and how they answer follow-up questions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persona {
    pub persona_id: String,
    #[serde(default)]
    pub query_type: QueryType,
    pub initial_query: String,
    #[serde(default)]
    pub hard_constraints: FilterSet,
    #[serde(default)]
    pub liked_truth: Vec<String>,
    #[serde(default)]
    pub disliked_truth: Vec<String>,
    /// Answer per dimension; anything missing gets `fallback_answer`.
    #[serde(default)]
    pub answer_script: BTreeMap<String, String>,
    #[serde(default = "default_fallback")]
    pub fallback_answer: String,
    #[serde(default)]
    pub style: Style,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_price: Option<f64>,
}

impl Persona {
    pub fn validate(&self, schema: &Schema) -> Result<(), CatalogError> {
        self.hard_constraints.validate(schema)?;
        match self.answer_script.keys().find(|k| schema.index_of(k).is_none()) {
            Some(k) => Err(CatalogError::UnknownDimension(k.clone())),
            None => Ok(()),
        }
    }

    pub fn answer_for(&self, dimension: &str) -> &str {
        self.answer_script
            .get(dimension)
            .map_or(self.fallback_answer.as_str(), String::as_str)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PersonaFile {
    One(Box<Persona>),
    Many(Vec<Persona>),
}

/// Reads every `*.json` file in `dir` (one persona or an array per file),
/// sorted by persona id.
pub fn load_personas(dir: &Path) -> Result<Vec<Persona>, EvalError> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let text = fs::read_to_string(&path)?;
        let parsed: PersonaFile = serde_json::from_str(&text)
            .map_err(|e| EvalError::Persona(format!("{}: {e}", path.display())))?;
        match parsed {
            PersonaFile::One(p) => out.push(*p),
            PersonaFile::Many(ps) => out.extend(ps),
        }
    }
    out.sort_by(|a, b| a.persona_id.cmp(&b.persona_id));
    if let Some(w) = out.windows(2).find(|w| w[0].persona_id == w[1].persona_id) {
        return Err(EvalError::Persona(format!("duplicate persona id `{}`", w[0].persona_id)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::test_fixtures::small_schema;
    use crate::catalog::Predicate;

    #[test]
    fn minimal_record_gets_defaults() {
        let p: Persona = serde_json::from_str(
            r#"{"persona_id":"p1","initial_query":"an SUV","hard_constraints":{"body":{"op":"equals","value":"SUV"}}}"#,
        )
        .unwrap();
        assert_eq!(p.style, Style::Patient);
        assert_eq!(p.query_type, QueryType::Short);
        assert_eq!(p.answer_for("fuel"), "no preference");
        p.validate(&small_schema()).unwrap();
    }

    #[test]
    fn invalid_constraints_are_rejected() {
        let mut p: Persona =
            serde_json::from_str(r#"{"persona_id":"p1","initial_query":"x"}"#).unwrap();
        p.hard_constraints.insert("body", Predicate::at_most(3.0));
        assert!(p.validate(&small_schema()).is_err());
        p.hard_constraints = FilterSet::new();
        p.answer_script.insert("wings".into(), "two".into());
        assert!(p.validate(&small_schema()).is_err());
    }

    #[test]
    fn loads_directory_sorted() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.json"), r#"{"persona_id":"p2","initial_query":"x"}"#).unwrap();
        fs::write(
            dir.path().join("a.json"),
            r#"[{"persona_id":"p3","initial_query":"y"},{"persona_id":"p1","initial_query":"z"}]"#,
        )
        .unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let ps = load_personas(dir.path()).unwrap();
        let ids: Vec<&str> = ps.iter().map(|p| p.persona_id.as_str()).collect();
        assert_eq!(ids, vec!["p1", "p2", "p3"]);

        fs::write(dir.path().join("c.json"), r#"{"persona_id":"p1","initial_query":"dup"}"#).unwrap();
        assert!(load_personas(dir.path()).is_err());
    }
}
