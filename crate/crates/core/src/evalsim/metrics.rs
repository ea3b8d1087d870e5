//! Top-k quality, diversity, attribute satisfaction and question checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::Schema;
use crate::dialogue::QuestionSpec;
use crate::embedding::{cos, Vector};

use super::{Assessment, EvalError, JudgeVerdict, Label};

/// Anything with a binary relevance.
pub trait Relevance {
    fn relevant(&self) -> bool;
}

impl Relevance for bool {
    fn relevant(&self) -> bool {
        *self
    }
}

impl Relevance for JudgeVerdict {
    fn relevant(&self) -> bool {
        self.is_satisfied()
    }
}

fn check_k(k: usize) -> Result<(), EvalError> {
    if k == 0 {
        Err(EvalError::Contract("k must be positive".into()))
    } else {
        Ok(())
    }
}

pub fn satisfied_count_at_k<R: Relevance>(list: &[R], k: usize) -> Result<usize, EvalError> {
    check_k(k)?;
    Ok(list.iter().take(k).filter(|r| r.relevant()).count())
}

/// Lists shorter than `k` count the missing slots as irrelevant.
pub fn precision_at_k<R: Relevance>(list: &[R], k: usize) -> Result<f64, EvalError> {
    Ok(satisfied_count_at_k(list, k)? as f64 / k as f64)
}

fn dcg(rel: impl Iterator<Item = bool>) -> f64 {
    rel.enumerate()
        .filter(|(_, r)| *r)
        .map(|(i, _)| 1.0 / ((i + 2) as f64).log2())
        .sum()
}

/// Binary-relevance nDCG; 0 when nothing is relevant.
pub fn ndcg_at_k<R: Relevance>(list: &[R], k: usize) -> Result<f64, EvalError> {
    check_k(k)?;
    let actual = dcg(list.iter().take(k).map(Relevance::relevant));
    let relevant = list.iter().filter(|r| r.relevant()).count();
    let ideal = dcg((0..k).map(|i| i < relevant));
    Ok(if ideal == 0.0 { 0.0 } else { actual / ideal })
}

/// Mean pairwise `1 − cos` over the list, clamped to [0, 1]; 0 for fewer
/// than two items.
pub fn ild(vectors: &[&Vector]) -> f64 {
    let n = vectors.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += 1.0 - cos(vectors[i], vectors[j]);
        }
    }
    (total / (n * (n - 1) / 2) as f64).clamp(0.0, 1.0)
}

/// Satisfied share of the assessed (mentioned) judgments per attribute.
pub fn attr_sat_rate(verdicts: &[JudgeVerdict]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for a in verdicts.iter().flat_map(|v| &v.attributes) {
        if a.assessment == Assessment::NotMentioned {
            continue;
        }
        let e = counts.entry(a.attribute.clone()).or_default();
        e.1 += 1;
        if a.assessment == Assessment::Satisfied {
            e.0 += 1;
        }
    }
    counts
        .into_iter()
        .map(|(k, (s, n))| (k, s as f64 / n as f64))
        .collect()
}

pub const DEFAULT_CONFIDENCE_TAU: f64 = 0.51;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedVerdict {
    pub item_id: String,
    pub label: Label,
    /// Mean confidence of the runs that agree with `label`.
    pub confidence: f64,
    /// `confidence >= τ`.
    pub confident: bool,
}

impl Relevance for AggregatedVerdict {
    fn relevant(&self) -> bool {
        self.label == Label::Satisfied
    }
}

/// Majority vote per item across judge runs; a tied vote goes to the label
/// whose runs are more confident on average, and to `Unsatisfied` if that
/// ties too.
pub fn confidence_filter_and_reassess(
    runs: &[Vec<JudgeVerdict>],
    tau: f64,
) -> Result<Vec<AggregatedVerdict>, EvalError> {
    let Some(first) = runs.first() else {
        return Ok(Vec::new());
    };
    for run in runs {
        let same = run.len() == first.len() && run.iter().zip(first).all(|(a, b)| a.item_id == b.item_id);
        if !same {
            return Err(EvalError::Contract("judge runs cover different items".into()));
        }
    }
    let mean = |xs: &[f64]| {
        if xs.is_empty() {
            0.0
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    };
    Ok((0..first.len())
        .map(|i| {
            let (sat, unsat): (Vec<&JudgeVerdict>, Vec<&JudgeVerdict>) =
                runs.iter().map(|r| &r[i]).partition(|v| v.is_satisfied());
            let sat_c: Vec<f64> = sat.iter().map(|v| v.confidence).collect();
            let unsat_c: Vec<f64> = unsat.iter().map(|v| v.confidence).collect();
            let satisfied = match sat.len().cmp(&unsat.len()) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => mean(&sat_c) > mean(&unsat_c),
            };
            let (label, confidence) = if satisfied {
                (Label::Satisfied, mean(&sat_c))
            } else {
                (Label::Unsatisfied, mean(&unsat_c))
            };
            AggregatedVerdict {
                item_id: first[i].item_id.clone(),
                label,
                confidence,
                confident: confidence >= tau,
            }
        })
        .collect())
}

/// Aggregated verdicts that clear the confidence threshold, in list order.
pub fn confident_only(aggregated: &[AggregatedVerdict]) -> Vec<AggregatedVerdict> {
    aggregated.iter().filter(|v| v.confident).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionJudgement {
    pub relevance: bool,
    pub newness: bool,
}

/// A question is new unless it targets a dimension already asked or already
/// constrained by the user; it is relevant if the dimension exists.
pub fn question_judge(
    question: &QuestionSpec,
    prior_asked: &[String],
    prior_specified: &[String],
    schema: &Schema,
) -> QuestionJudgement {
    let d = &question.dimension;
    QuestionJudgement {
        relevance: schema.index_of(d).is_some(),
        newness: !prior_asked.contains(d) && !prior_specified.contains(d),
    }
}
