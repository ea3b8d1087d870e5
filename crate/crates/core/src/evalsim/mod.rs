//! Offline evaluation: personas, a deterministic judge, simulated dialogues
//! and the metric suite.

mod judge;
mod metrics;
mod persona;
mod simulate;
mod suite;
pub mod synth;

use crate::catalog::CatalogError;

pub use judge::{judge, Assessment, AttributeVerdict, JudgeVerdict, Label};
pub use metrics::{
    attr_sat_rate, confidence_filter_and_reassess, confident_only, ild, ndcg_at_k, precision_at_k,
    question_judge, satisfied_count_at_k, AggregatedVerdict, QuestionJudgement, Relevance,
    DEFAULT_CONFIDENCE_TAU,
};
pub use persona::{load_personas, Persona, QueryType, Style};
pub use simulate::{simulate, AskedQuestion, SimulatedUser, Transcript, IMPATIENT_REPLY};
pub use suite::{run_one, run_suite, Ablation, CellReport, MeanStd, RunMetrics, SuiteConfig, SuiteReport};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("persona: {0}")]
    Persona(String),
    #[error("{0}")]
    Contract(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}
