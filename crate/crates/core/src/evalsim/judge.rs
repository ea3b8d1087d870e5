//! Deterministic recommendation judge: checks an item against a persona's
//! hard constraints.

use serde::{Deserialize, Serialize};

use crate::catalog::{AttrValue, Catalog, Predicate};

use super::Persona;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assessment {
    Satisfied,
    NotSatisfied,
    NotMentioned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Satisfied,
    Unsatisfied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeVerdict {
    pub attribute: String,
    pub assessment: Assessment,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub item_id: String,
    pub label: Label,
    pub confidence: f64,
    pub attributes: Vec<AttributeVerdict>,
}

impl JudgeVerdict {
    pub fn is_satisfied(&self) -> bool {
        self.label == Label::Satisfied
    }
}

fn describe(pred: &Predicate) -> String {
    match pred {
        Predicate::Equals { value } => format!("= {value}"),
        Predicate::OneOf { values } => {
            format!("one of {}", values.iter().cloned().collect::<Vec<_>>().join(", "))
        }
        Predicate::Range { lo, hi } => match (lo, hi) {
            (Some(l), Some(h)) => format!("in [{l}, {h}]"),
            (Some(l), None) => format!(">= {l}"),
            (None, Some(h)) => format!("<= {h}"),
            (None, None) => "any".to_string(),
        },
    }
}

/// Scores one item. Every schema attribute gets an assessment; the
/// persona's `max_price` acts as a price ceiling when price itself is
/// unconstrained. Confidence is the satisfied share of mentioned
/// attributes, 1.0 when none are mentioned.
pub fn judge(catalog: &Catalog, persona: &Persona, item: usize) -> JudgeVerdict {
    let currency = catalog.schema().currency_dimension().map(|a| a.name.clone());
    let mut attributes = Vec::with_capacity(catalog.schema().len());
    for (col, attr) in catalog.schema().attributes().iter().enumerate() {
        let ceiling;
        let pred = match persona.hard_constraints.get(&attr.name) {
            Some(p) => Some(p),
            None if currency.as_deref() == Some(attr.name.as_str()) => {
                ceiling = persona.max_price.map(Predicate::at_most);
                ceiling.as_ref()
            }
            None => None,
        };
        let value = catalog.value(item, col);
        let (assessment, rationale) = match pred {
            None => (Assessment::NotMentioned, String::new()),
            Some(p) => {
                let shown = match value {
                    AttrValue::Missing => "missing".to_string(),
                    v => v.to_string(),
                };
                if p.matches(value) {
                    (Assessment::Satisfied, format!("{shown} meets {}", describe(p)))
                } else {
                    (Assessment::NotSatisfied, format!("{shown} fails {}", describe(p)))
                }
            }
        };
        attributes.push(AttributeVerdict {
            attribute: attr.name.clone(),
            assessment,
            rationale,
        });
    }
    let mentioned = attributes
        .iter()
        .filter(|a| a.assessment != Assessment::NotMentioned)
        .count();
    let satisfied = attributes
        .iter()
        .filter(|a| a.assessment == Assessment::Satisfied)
        .count();
    let confidence = if mentioned == 0 {
        1.0
    } else {
        satisfied as f64 / mentioned as f64
    };
    JudgeVerdict {
        item_id: catalog.item(item).id.clone(),
        label: if satisfied == mentioned {
            Label::Satisfied
        } else {
            Label::Unsatisfied
        },
        confidence,
        attributes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{load_catalog, AttributeSchema, FilterSet, Schema};

    fn persona(constraints: FilterSet) -> Persona {
        let mut p: Persona = serde_json::from_str(r#"{"persona_id":"p","initial_query":"q"}"#).unwrap();
        p.hard_constraints = constraints;
        p
    }

    fn catalog() -> Catalog {
        let schema = Schema::new(vec![
            AttributeSchema::continuous("price", Some("USD"), 2),
            AttributeSchema::categorical("body", 1),
        ])
        .unwrap();
        load_catalog("id,price,body\ncheap,25000,SUV\npricey,35000,SUV\n".as_bytes(), schema).unwrap()
    }

    fn assessment(v: &JudgeVerdict, a: &str) -> Assessment {
        v.attributes.iter().find(|x| x.attribute == a).unwrap().assessment
    }

    #[test]
    fn constraint_outcomes() {
        let cat = catalog();
        let p = persona(
            FilterSet::new()
                .with("body", Predicate::equals("SUV"))
                .with("price", Predicate::at_most(30000.0)),
        );
        let ok = judge(&cat, &p, 0);
        assert_eq!(ok.label, Label::Satisfied);
        assert_eq!(ok.confidence, 1.0);

        let bad = judge(&cat, &p, 1);
        assert_eq!(bad.label, Label::Unsatisfied);
        assert_eq!(assessment(&bad, "price"), Assessment::NotSatisfied);
        assert_eq!(assessment(&bad, "body"), Assessment::Satisfied);
        assert_eq!(bad.confidence, 0.5);
    }

    #[test]
    fn no_constraints_is_vacuously_satisfied() {
        let v = judge(&catalog(), &persona(FilterSet::new()), 1);
        assert_eq!(v.label, Label::Satisfied);
        assert_eq!(v.confidence, 1.0);
        assert!(v.attributes.iter().all(|a| a.assessment == Assessment::NotMentioned));
    }

    #[test]
    fn max_price_applies_when_price_unconstrained() {
        let mut p = persona(FilterSet::new());
        p.max_price = Some(30000.0);
        let v = judge(&catalog(), &p, 1);
        assert_eq!(assessment(&v, "price"), Assessment::NotSatisfied);
        p.hard_constraints.insert("price", Predicate::at_most(40000.0));
        assert_eq!(judge(&catalog(), &p, 1).label, Label::Satisfied);
    }
}
