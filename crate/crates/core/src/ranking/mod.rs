//! Final ordering of the candidate set.
//!
//! Two strategies share one entry point, [`Ranker::rank`]:
//! embedding similarity with MMR (`Es`), and coverage-risk greedy
//! selection over pros/cons phrase alignments (`Cr`).

mod coverage;
mod mmr;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, FilterSet};
use crate::embedding::{build_query_text, cos, EmbeddingProvider, ItemEmbeddings};
use crate::exec::Execution;

pub use coverage::{
    coverage_risk_greedy, greedy_select, hinge, phrase_alignment, AlignmentTable, MarginalState,
    GAIN_TIE_EPSILON,
};
pub use mmr::{mmr_score, mmr_select_by};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Es,
    Cr,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Es => "ES",
            Strategy::Cr => "CR",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "es" => Ok(Strategy::Es),
            "cr" => Ok(Strategy::Cr),
            other => Err(format!("unknown strategy `{other}` (expected es or cr)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankingParams {
    /// Relevance weight in MMR; 1.0 disables diversification.
    pub mmr_lambda: f64,
    /// Risk weight in the coverage-risk objective.
    pub risk_lambda: f64,
    /// Hinge threshold for phrase matches.
    pub match_tau: f64,
    /// Length of the ranked list handed to the grid; the grid then keeps
    /// the best few per partition.
    pub top_k: usize,
}

impl Default for RankingParams {
    fn default() -> Self {
        Self {
            mmr_lambda: 0.85,
            risk_lambda: 0.5,
            match_tau: 0.6,
            top_k: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    /// Catalog position.
    pub item: usize,
    pub item_id: String,
    /// MMR score (ES) or marginal objective gain (CR) at the time of selection.
    pub relevance: f64,
    /// 1-based pick order.
    pub selection_rank: usize,
}

/// Borrowed view of everything ranking needs. Cheap to construct per call.
#[derive(Clone, Copy)]
pub struct Ranker<'a> {
    pub catalog: &'a Catalog,
    pub embeddings: &'a ItemEmbeddings,
    pub provider: &'a dyn EmbeddingProvider,
    pub exec: Execution,
}

impl<'a> Ranker<'a> {
    fn scored(&self, candidates: &[usize], picks: Vec<(usize, f64)>) -> Vec<ScoredCandidate> {
        picks
            .into_iter()
            .enumerate()
            .map(|(rank, (local, score))| {
                let item = candidates[local];
                ScoredCandidate {
                    item,
                    item_id: self.catalog.item(item).id.clone(),
                    relevance: score,
                    selection_rank: rank + 1,
                }
            })
            .collect()
    }

    fn description_similarity(&self, candidates: &[usize], a: usize, b: usize) -> f64 {
        let d = &self.embeddings.descriptions;
        cos(&d[candidates[a]], &d[candidates[b]])
    }

    /// Query similarity of every candidate, in candidate order.
    pub fn relevance(&self, query_text: &str, candidates: &[usize]) -> Vec<f64> {
        let q = self.provider.embed(query_text);
        self.exec
            .map(candidates, |&c| cos(&q, &self.embeddings.descriptions[c]))
    }

    /// MMR over candidate descriptions. An empty query leaves the candidates
    /// in their incoming (filter) order.
    pub fn mmr_select(
        &self,
        query_text: &str,
        candidates: &[usize],
        k: usize,
        lambda: f64,
    ) -> Vec<ScoredCandidate> {
        if query_text.trim().is_empty() {
            let picks = (0..k.min(candidates.len())).map(|i| (i, 0.0)).collect();
            return self.scored(candidates, picks);
        }
        let rel = self.relevance(query_text, candidates);
        let picks = mmr_select_by(
            &rel,
            |a, b| self.description_similarity(candidates, a, b),
            k,
            lambda,
        );
        self.scored(candidates, picks)
    }

    /// Pos/Neg alignment of every candidate against the phrase preferences.
    pub fn alignment_table(
        &self,
        liked: &[String],
        disliked: &[String],
        candidates: &[usize],
        tau: f64,
    ) -> AlignmentTable {
        let liked_v: Vec<_> = liked.iter().map(|p| self.provider.embed(p)).collect();
        let disliked_v: Vec<_> = disliked.iter().map(|p| self.provider.embed(p)).collect();
        let columns = self.exec.map(candidates, |&c| {
            let pros = &self.embeddings.pros[c];
            let cons = &self.embeddings.cons[c];
            (
                liked_v.iter().map(|f| phrase_alignment(f, pros, tau)).collect(),
                disliked_v.iter().map(|f| phrase_alignment(f, cons, tau)).collect(),
            )
        });
        AlignmentTable::from_columns(columns, liked.len(), disliked.len())
    }

    /// Coverage-risk greedy; exact gain ties fall to the MMR score of the
    /// tied candidates against the query text, then to candidate order.
    /// Falls back to [`Ranker::mmr_select`] when there are no phrase
    /// preferences, since the objective is identically zero there.
    pub fn coverage_risk(
        &self,
        query_text: &str,
        liked: &[String],
        disliked: &[String],
        candidates: &[usize],
        params: &RankingParams,
    ) -> Vec<ScoredCandidate> {
        if liked.is_empty() && disliked.is_empty() {
            return self.mmr_select(query_text, candidates, params.top_k, params.mmr_lambda);
        }
        let table = self.alignment_table(liked, disliked, candidates, params.match_tau);
        let rel = if query_text.trim().is_empty() {
            vec![0.0; candidates.len()]
        } else {
            self.relevance(query_text, candidates)
        };
        let lambda = params.mmr_lambda;
        let picks = greedy_select(&table, params.top_k, params.risk_lambda, |v, picked| {
            let redundancy = picked
                .iter()
                .map(|&u| self.description_similarity(candidates, v, u))
                .fold(f64::NEG_INFINITY, f64::max);
            let redundancy = if redundancy.is_finite() { redundancy } else { 0.0 };
            mmr_score(lambda, rel[v], redundancy)
        });
        self.scored(candidates, picks)
    }

    pub fn rank(
        &self,
        strategy: Strategy,
        filters: &FilterSet,
        liked: &[String],
        disliked: &[String],
        candidates: &[usize],
        params: &RankingParams,
    ) -> Vec<ScoredCandidate> {
        let query = build_query_text(self.catalog.schema(), filters, liked, disliked);
        match strategy {
            Strategy::Es => self.mmr_select(&query, candidates, params.top_k, params.mmr_lambda),
            Strategy::Cr => self.coverage_risk(&query, liked, disliked, candidates, params),
        }
    }
}
