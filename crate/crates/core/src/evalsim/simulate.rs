//! Scripted dialogues between a persona and the engine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dialogue::{Engine, EngineConfig, Phase, QuestionSpec, Recommendations, SessionState, TurnOutcome};
use crate::embedding::fnv1a64;
use crate::parsing::Turn;

use super::{Persona, Style};

/// What an impatient persona says to the first question.
pub const IMPATIENT_REPLY: &str = "just show me what you have";

/// A question as it was asked, with what the agent already knew.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AskedQuestion {
    pub question: QuestionSpec,
    pub prior_asked: Vec<String>,
    pub prior_specified: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub persona_id: String,
    pub seed: u64,
    pub turns: Vec<Turn>,
    pub questions: Vec<AskedQuestion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recommendations: Option<Recommendations>,
    pub final_state: SessionState,
    /// Set when an engine error cut the run short.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Seeded simulated user. With probability `noise` a patient persona gives
/// its fallback answer instead of the scripted one.
pub struct SimulatedUser<'a> {
    persona: &'a Persona,
    rng: ChaCha8Rng,
    noise: f64,
    answered: usize,
}

impl<'a> SimulatedUser<'a> {
    pub fn new(persona: &'a Persona, seed: u64, noise: f64) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a64(persona.persona_id.as_bytes()));
        Self {
            persona,
            rng,
            noise,
            answered: 0,
        }
    }

    pub fn answer(&mut self, question: &QuestionSpec) -> String {
        self.answered += 1;
        if self.persona.style == Style::Impatient {
            return IMPATIENT_REPLY.to_string();
        }
        // Always draw so the stream does not depend on the noise level.
        let roll: f64 = self.rng.random();
        if roll < self.noise {
            self.persona.fallback_answer.clone()
        } else {
            self.persona.answer_for(&question.dimension).to_string()
        }
    }
}

/// Runs one persona to the end of its session.
pub fn simulate(engine: &Engine, persona: &Persona, config: &EngineConfig, seed: u64, noise: f64) -> Transcript {
    let mut state = SessionState::new(&persona.persona_id, config.max_questions);
    let mut user = SimulatedUser::new(persona, seed, noise);
    let mut questions = Vec::new();
    let mut recommendations = None;
    let mut error = None;
    let mut text = persona.initial_query.clone();
    // Each question costs one turn, so this bound is never reached by a
    // well-behaved engine.
    for _ in 0..=config.max_questions + 1 {
        let prior_asked = state.asked_dimensions.clone();
        match engine.advance_turn(&mut state, &text, config) {
            Ok(r) => match r.outcome {
                TurnOutcome::Question(q) => {
                    // The user turn is merged by now; what it specified counts.
                    let prior_specified = state.specified_dimensions();
                    text = user.answer(&q);
                    questions.push(AskedQuestion {
                        question: q,
                        prior_asked,
                        prior_specified,
                    });
                }
                TurnOutcome::Recommendations(rec) => {
                    recommendations = Some(rec);
                    break;
                }
            },
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
        if state.phase == Phase::Done {
            break;
        }
    }
    if recommendations.is_none() && error.is_none() {
        error = Some("session did not reach recommendations".to_string());
    }
    Transcript {
        persona_id: persona.persona_id.clone(),
        seed,
        turns: state.history.clone(),
        questions,
        recommendations,
        final_state: state,
        error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::test_fixtures::small_catalog;
    use std::sync::Arc;

    fn persona(style: Style) -> Persona {
        let mut p: Persona =
            serde_json::from_str(r#"{"persona_id":"p1","initial_query":"I need a car"}"#).unwrap();
        p.style = style;
        p.answer_script.insert("fuel".into(), "hybrid".into());
        p
    }

    #[test]
    fn patient_persona_is_bounded_by_k() {
        let e = Engine::with_defaults(Arc::new(small_catalog()));
        let t = simulate(&e, &persona(Style::Patient), &EngineConfig::default(), 0, 0.0);
        assert!(t.error.is_none());
        assert!(t.questions.len() <= 2);
        assert!(t.recommendations.is_some());
        assert_eq!(t, simulate(&e, &persona(Style::Patient), &EngineConfig::default(), 0, 0.0));
    }

    #[test]
    fn impatient_persona_gets_grid_after_at_most_one_question() {
        let e = Engine::with_defaults(Arc::new(small_catalog()));
        let t = simulate(&e, &persona(Style::Impatient), &EngineConfig::default(), 0, 0.0);
        assert!(t.questions.len() <= 1);
        assert!(t.recommendations.is_some());
    }

    #[test]
    fn noise_uses_the_fallback() {
        let p = persona(Style::Patient);
        let q = QuestionSpec {
            dimension: "fuel".into(),
            distribution_context: String::new(),
            question_text: "?".into(),
        };
        assert_eq!(SimulatedUser::new(&p, 1, 0.0).answer(&q), "hybrid");
        assert_eq!(SimulatedUser::new(&p, 1, 1.0).answer(&q), "no preference");
    }
}
