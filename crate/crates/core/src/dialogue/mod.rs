//! The turn loop: parse, retrieve, ask or stop, rank, present.

mod store;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{discretize, retrieve, AttributeKind, Catalog, CatalogError, FilterSet};
use crate::diversify::{present, Grid, DEFAULT_PER_ROW, DEFAULT_ROWS};
use crate::embedding::{EmbeddingProvider, HashingEmbedder, ItemEmbeddings};
use crate::entropy::{
    best_available, entropy_report, select_question_dimension, value_distribution, EntropyMode,
    EntropyReport,
};
use crate::exec::Execution;
use crate::parsing::{
    detect_impatience, merge_filters, merge_phrases, ParseError, ParserAdapter, Patience,
    RuleParser, SchemaSummary, Turn,
};
use crate::ranking::{Ranker, RankingParams, ScoredCandidate, Strategy};

pub use store::{SessionEvent, SessionStore, StoreError};

pub const DEFAULT_MAX_QUESTIONS: usize = 2;
pub const MAX_QUESTIONS_LIMIT: usize = 5;
pub const DEFAULT_TAU_H: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    #[default]
    Interviewing,
    Recommending,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionPolicy {
    /// Highest-entropy unasked, unspecified dimension, gated by the threshold.
    #[default]
    Entropy,
    /// Next unasked dimension in schema order, no threshold (ablation baseline).
    FixedOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub strategy: Strategy,
    pub max_questions: usize,
    pub tau_h: f64,
    pub entropy_mode: EntropyMode,
    pub question_policy: QuestionPolicy,
    pub ranking: RankingParams,
    pub rows: usize,
    pub per_row: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Es,
            max_questions: DEFAULT_MAX_QUESTIONS,
            tau_h: DEFAULT_TAU_H,
            entropy_mode: EntropyMode::Normalized,
            question_policy: QuestionPolicy::Entropy,
            ranking: RankingParams::default(),
            rows: DEFAULT_ROWS,
            per_row: DEFAULT_PER_ROW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub filters: FilterSet,
    pub liked: Vec<String>,
    pub disliked: Vec<String>,
    pub patience: Patience,
    pub asked_dimensions: Vec<String>,
    pub history: Vec<Turn>,
    pub questions_asked: usize,
    pub max_questions: usize,
    pub phase: Phase,
}

impl SessionState {
    pub fn new(session_id: &str, max_questions: usize) -> Self {
        Self {
            session_id: session_id.to_string(),
            filters: FilterSet::new(),
            liked: Vec::new(),
            disliked: Vec::new(),
            patience: Patience::Patient,
            asked_dimensions: Vec::new(),
            history: Vec::new(),
            questions_asked: 0,
            max_questions,
            phase: Phase::Interviewing,
        }
    }

    pub fn specified_dimensions(&self) -> Vec<String> {
        self.filters.dimensions().map(str::to_string).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSpec {
    pub dimension: String,
    pub distribution_context: String,
    pub question_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendations {
    pub grid: Grid,
    pub relaxed_dimensions: Vec<String>,
    pub candidate_count: usize,
    pub ranked: Vec<ScoredCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TurnOutcome {
    Question(QuestionSpec),
    Recommendations(Recommendations),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnResult {
    pub outcome: TurnOutcome,
    /// Entropy over the candidate set this turn was decided on.
    pub entropy: EntropyReport,
}

#[derive(Debug, Error)]
pub enum DialogueError {
    #[error("message text is empty")]
    EmptyText,
    #[error("session is finished")]
    SessionDone,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// True iff the interview should end now.
pub fn should_stop(
    state: &SessionState,
    report: &EntropyReport,
    tau_h: f64,
    k: usize,
    mode: EntropyMode,
) -> bool {
    if state.questions_asked >= k || state.patience == Patience::Impatient {
        return true;
    }
    let specified = state.specified_dimensions();
    select_question_dimension(report, &specified, &state.asked_dimensions, tau_h, mode).is_none()
}

fn percent(count: usize, total: usize) -> i64 {
    (count as f64 * 100.0 / total as f64).round() as i64
}

/// Deterministic question text for `dimension` over `candidates`.
pub fn generate_question_template(
    catalog: &Catalog,
    dimension: &str,
    candidates: &[usize],
    history: &[Turn],
) -> Result<QuestionSpec, CatalogError> {
    let attr = catalog
        .schema()
        .get(dimension)
        .ok_or_else(|| CatalogError::UnknownDimension(dimension.to_string()))?;
    let label = &attr.question_label;
    let follow_up = history.iter().any(|t| t.question_dimension.is_some());
    let lead = if follow_up { "One more thing. " } else { "" };

    let (context, question) = match attr.kind {
        AttributeKind::Categorical => {
            let dist = value_distribution(catalog, candidates, dimension)?;
            let context = dist
                .ranked()
                .into_iter()
                .take(3)
                .map(|(v, c)| format!("{}% {v}", percent(c, dist.total)))
                .collect::<Vec<_>>()
                .join(", ");
            let q = if context.is_empty() {
                format!("Do you have a preference for {label}?")
            } else {
                format!("Do you have a preference for {label}? Options here are {context}.")
            };
            (context, q)
        }
        AttributeKind::Continuous => {
            let binning = discretize(catalog, dimension, candidates)?;
            let unit = attr.unit.as_deref();
            let context = match binning.cuts {
                Some((a, b)) if a < b => format!(
                    "Most options fall between {} and {}",
                    crate::catalog::format_amount(a, unit),
                    crate::catalog::format_amount(b, unit)
                ),
                Some((a, _)) => format!("Most options are around {}", crate::catalog::format_amount(a, unit)),
                None => String::new(),
            };
            let ask = if attr.is_currency() {
                "What's your budget?".to_string()
            } else {
                format!("What range of {label} works for you?")
            };
            let q = if context.is_empty() { ask } else { format!("{ask} {context}.") };
            (context, q)
        }
    };
    Ok(QuestionSpec {
        dimension: dimension.to_string(),
        distribution_context: context,
        question_text: format!("{lead}{question}"),
    })
}

/// Shared, read-only engine: catalog, item embeddings, parser.
#[derive(Clone)]
pub struct Engine {
    catalog: Arc<Catalog>,
    embeddings: Arc<ItemEmbeddings>,
    provider: Arc<dyn EmbeddingProvider>,
    parser: Arc<dyn ParserAdapter>,
    summary: Arc<SchemaSummary>,
    exec: Execution,
}

impl Engine {
    pub fn new(
        catalog: Arc<Catalog>,
        provider: Arc<dyn EmbeddingProvider>,
        parser: Arc<dyn ParserAdapter>,
        exec: Execution,
    ) -> Self {
        let embeddings = Arc::new(ItemEmbeddings::build(&catalog, provider.as_ref(), exec));
        let summary = Arc::new(SchemaSummary::from_catalog(&catalog));
        Self {
            catalog,
            embeddings,
            provider,
            parser,
            summary,
            exec,
        }
    }

    /// Hashing embedder, rule parser, parallel execution.
    pub fn with_defaults(catalog: Arc<Catalog>) -> Self {
        Self::new(
            catalog,
            Arc::new(HashingEmbedder::default()),
            Arc::new(RuleParser),
            Execution::default(),
        )
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn embeddings(&self) -> &ItemEmbeddings {
        &self.embeddings
    }

    pub fn provider(&self) -> &dyn EmbeddingProvider {
        self.provider.as_ref()
    }

    pub fn schema_summary(&self) -> &SchemaSummary {
        &self.summary
    }

    pub fn exec(&self) -> Execution {
        self.exec
    }

    pub fn ranker(&self) -> Ranker<'_> {
        Ranker {
            catalog: &self.catalog,
            embeddings: &self.embeddings,
            provider: self.provider.as_ref(),
            exec: self.exec,
        }
    }

    fn next_dimension(
        &self,
        state: &SessionState,
        report: &EntropyReport,
        config: &EngineConfig,
    ) -> Option<String> {
        if state.questions_asked >= config.max_questions || state.patience == Patience::Impatient {
            return None;
        }
        match config.question_policy {
            QuestionPolicy::Entropy => {
                let specified = state.specified_dimensions();
                best_available(report, &specified, &state.asked_dimensions, config.entropy_mode)
                    .filter(|(_, s)| *s >= config.tau_h)
                    .map(|(d, _)| d.to_string())
            }
            QuestionPolicy::FixedOrder => self
                .catalog
                .schema()
                .names()
                .find(|d| !state.asked_dimensions.iter().any(|a| a == d))
                .map(str::to_string),
        }
    }

    /// Runs one user turn. On error `state` is left exactly as it was.
    pub fn advance_turn(
        &self,
        state: &mut SessionState,
        user_text: &str,
        config: &EngineConfig,
    ) -> Result<TurnResult, DialogueError> {
        if state.phase == Phase::Done {
            return Err(DialogueError::SessionDone);
        }
        if user_text.trim().is_empty() {
            return Err(DialogueError::EmptyText);
        }
        let mut next = state.clone();
        let parsed = self.parser.parse(user_text, &self.summary, &next.history)?;
        let filters = merge_filters(&next.filters, &parsed.filter_delta);
        filters.validate(self.catalog.schema())?;
        next.filters = filters;
        merge_phrases(&mut next.liked, &parsed.liked);
        merge_phrases(&mut next.disliked, &parsed.disliked);
        if detect_impatience(&parsed) {
            next.patience = Patience::Impatient;
        }
        next.history.push(Turn::user(user_text, parsed));

        let candidates = retrieve(&self.catalog, &next.filters);
        let report = entropy_report(&self.catalog, &candidates.members);

        if let Some(dimension) = self.next_dimension(&next, &report, config) {
            let spec =
                generate_question_template(&self.catalog, &dimension, &candidates.members, &next.history)?;
            next.asked_dimensions.push(dimension.clone());
            next.questions_asked = next.asked_dimensions.len();
            next.history.push(Turn::agent(&spec.question_text, Some(&dimension)));
            *state = next;
            return Ok(TurnResult {
                outcome: TurnOutcome::Question(spec),
                entropy: report,
            });
        }

        next.phase = Phase::Recommending;
        let ranked = self.ranker().rank(
            config.strategy,
            &next.filters,
            &next.liked,
            &next.disliked,
            &candidates.members,
            &config.ranking,
        );
        let grid = present(
            &self.catalog,
            &next.specified_dimensions(),
            &ranked,
            config.rows,
            config.per_row,
        );
        let mut text = format!("Here are {} matches.", grid.len());
        if !candidates.relaxed_dimensions.is_empty() {
            text.push_str(&format!(
                " Nothing matched everything, so I relaxed: {}.",
                candidates.relaxed_dimensions.join(", ")
            ));
        }
        next.history.push(Turn::agent(&text, None));
        next.phase = Phase::Done;
        *state = next;
        Ok(TurnResult {
            outcome: TurnOutcome::Recommendations(Recommendations {
                grid,
                relaxed_dimensions: candidates.relaxed_dimensions,
                candidate_count: candidates.members.len(),
                ranked,
            }),
            entropy: report,
        })
    }
}
