//! The ablation matrix: query type × strategy × configuration, repeated
//! over seeds and summarized as mean ± sample standard deviation.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dialogue::{Engine, EngineConfig, QuestionPolicy};
use crate::exec::Execution;
use crate::ranking::{phrase_alignment, Strategy};

use super::metrics::{
    attr_sat_rate, confidence_filter_and_reassess, confident_only, ild, ndcg_at_k, precision_at_k,
    question_judge, satisfied_count_at_k, DEFAULT_CONFIDENCE_TAU,
};
use super::{judge, simulate, JudgeVerdict, Persona, QueryType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    Full,
    NoMmr,
    NoEntropyQ,
    NoMmrNoEntropyQ,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [
        Ablation::Full,
        Ablation::NoMmr,
        Ablation::NoEntropyQ,
        Ablation::NoMmrNoEntropyQ,
    ];

    pub fn disables_mmr(self) -> bool {
        matches!(self, Ablation::NoMmr | Ablation::NoMmrNoEntropyQ)
    }

    pub fn disables_entropy_q(self) -> bool {
        matches!(self, Ablation::NoEntropyQ | Ablation::NoMmrNoEntropyQ)
    }

    /// `base` with this ablation applied.
    pub fn apply(self, base: &EngineConfig) -> EngineConfig {
        let mut cfg = base.clone();
        if self.disables_mmr() {
            cfg.ranking.mmr_lambda = 1.0;
        }
        if self.disables_entropy_q() {
            cfg.question_policy = QuestionPolicy::FixedOrder;
        }
        cfg
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ablation::Full => "Full",
            Ablation::NoMmr => "-MMR",
            Ablation::NoEntropyQ => "-EntropyQ",
            Ablation::NoMmrNoEntropyQ => "-MMR and EntropyQ",
        })
    }
}

impl FromStr for Ablation {
    type Err = String;

    /// Accepts the CLI spellings `none`, `mmr`, `entropyq` and `both`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "full" => Ok(Ablation::Full),
            "mmr" => Ok(Ablation::NoMmr),
            "entropyq" => Ok(Ablation::NoEntropyQ),
            "both" => Ok(Ablation::NoMmrNoEntropyQ),
            other => Err(format!("unknown ablation `{other}` (expected none, mmr, entropyq or both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub strategies: Vec<Strategy>,
    pub ablations: Vec<Ablation>,
    pub seeds: Vec<u64>,
    pub engine: EngineConfig,
    /// Chance that a patient persona gives its fallback answer.
    pub answer_noise: f64,
    /// Cutoff for the top-k metrics.
    pub k: usize,
    pub confidence_tau: f64,
    pub exec: Execution,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            strategies: vec![Strategy::Es, Strategy::Cr],
            ablations: Ablation::ALL.to_vec(),
            seeds: vec![0, 1, 2],
            engine: EngineConfig::default(),
            answer_noise: 0.2,
            k: 9,
            confidence_tau: DEFAULT_CONFIDENCE_TAU,
            exec: Execution::default(),
        }
    }
}

/// Per-run measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub precision: f64,
    pub ndcg: f64,
    pub satisfied_count: usize,
    /// Precision over the confidence-filtered list.
    pub sat_filtered: f64,
    pub ild: f64,
    pub questions: usize,
    /// Pass rates over this run's questions; `None` when none were asked.
    pub relevance: Option<f64>,
    pub newness: Option<f64>,
    /// Liked phrases matched by some recommended item's pros.
    pub preference_echo: usize,
    pub relaxed: bool,
    pub failed: bool,
    #[serde(skip)]
    pub verdicts: Vec<JudgeVerdict>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Sample standard deviation; 0 for fewer than two values.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: 0.0, std: 0.0 };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { mean, std }
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub query_type: QueryType,
    pub strategy: Strategy,
    pub ablation: Ablation,
    pub personas: usize,
    /// Metric name → mean ± std of the per-seed means.
    pub metrics: BTreeMap<String, MeanStd>,
    /// Pooled over all runs in the cell.
    pub attr_sat: BTreeMap<String, f64>,
    pub failed_runs: usize,
}

impl CellReport {
    pub fn metric(&self, name: &str) -> MeanStd {
        self.metrics.get(name).copied().unwrap_or(MeanStd { mean: 0.0, std: 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seeds: Vec<u64>,
    pub k: usize,
    pub persona_count: usize,
    pub cells: Vec<CellReport>,
}

impl SuiteReport {
    pub fn cell(&self, q: QueryType, s: Strategy, a: Ablation) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.query_type == q && c.strategy == s && c.ablation == a)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Two tables: recommendation quality and question quality.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "| Query | Method | Config | Prec@{k} | NDCG@{k} | Sat@{k} | ILD |", k = self.k);
        out.push_str("|---|---|---|---|---|---|---|\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} |",
                c.query_type,
                c.strategy,
                c.ablation,
                c.metric("precision"),
                c.metric("ndcg"),
                c.metric("sat_filtered"),
                c.metric("ild"),
            );
        }
        out.push('\n');
        out.push_str("| Query | Method | Config | Relevance | Newness | Questions |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} |",
                c.query_type,
                c.strategy,
                c.ablation,
                c.metric("relevance"),
                c.metric("newness"),
                c.metric("questions"),
            );
        }
        out
    }
}

/// Simulates and scores one persona under one configuration.
pub fn run_one(engine: &Engine, persona: &Persona, config: &EngineConfig, seed: u64, suite: &SuiteConfig) -> RunMetrics {
    let t = simulate(engine, persona, config, seed, suite.answer_noise);
    let catalog = engine.catalog();
    let (items, relaxed) = match &t.recommendations {
        Some(rec) => (
            rec.grid
                .flatten()
                .iter()
                .filter_map(|g| catalog.position(&g.id))
                .collect::<Vec<_>>(),
            !rec.relaxed_dimensions.is_empty(),
        ),
        None => (Vec::new(), false),
    };
    let verdicts: Vec<JudgeVerdict> = items.iter().map(|&i| judge(catalog, persona, i)).collect();
    let aggregated = confidence_filter_and_reassess(std::slice::from_ref(&verdicts), suite.confidence_tau)
        .expect("single run is consistent");
    let k = suite.k;
    let vectors: Vec<_> = items
        .iter()
        .take(k)
        .map(|&i| &engine.embeddings().descriptions[i])
        .collect();

    let judgements: Vec<_> = t
        .questions
        .iter()
        .map(|q| question_judge(&q.question, &q.prior_asked, &q.prior_specified, catalog.schema()))
        .collect();
    let rate = |f: fn(&super::metrics::QuestionJudgement) -> bool| {
        (!judgements.is_empty())
            .then(|| judgements.iter().filter(|j| f(j)).count() as f64 / judgements.len() as f64)
    };

    let liked: Vec<_> = persona.liked_truth.iter().map(|p| engine.provider().embed(p)).collect();
    let tau = config.ranking.match_tau;
    let preference_echo = liked
        .iter()
        .filter(|f| {
            items
                .iter()
                .any(|&i| phrase_alignment(f, &engine.embeddings().pros[i], tau) > 0.0)
        })
        .count();

    RunMetrics {
        precision: precision_at_k(&verdicts, k).expect("k > 0"),
        ndcg: ndcg_at_k(&verdicts, k).expect("k > 0"),
        satisfied_count: satisfied_count_at_k(&verdicts, k).expect("k > 0"),
        sat_filtered: precision_at_k(&confident_only(&aggregated), k).expect("k > 0"),
        ild: ild(&vectors),
        questions: t.questions.len(),
        relevance: rate(|j| j.relevance),
        newness: rate(|j| j.newness),
        preference_echo,
        relaxed,
        failed: t.error.is_some(),
        verdicts,
    }
}

fn mean_of(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Runs the whole matrix. Output is independent of thread scheduling.
pub fn run_suite(engine: &Engine, personas: &[Persona], suite: &SuiteConfig) -> SuiteReport {
    let mut query_types: Vec<QueryType> = personas.iter().map(|p| p.query_type).collect();
    query_types.sort();
    query_types.dedup();

    struct Job<'a> {
        cell: usize,
        seed: u64,
        persona: &'a Persona,
        config: EngineConfig,
    }
    let mut cells = Vec::new();
    let mut jobs = Vec::new();
    for &q in &query_types {
        for &s in &suite.strategies {
            for &a in &suite.ablations {
                let mut config = a.apply(&suite.engine);
                config.strategy = s;
                let members: Vec<&Persona> = personas.iter().filter(|p| p.query_type == q).collect();
                for &seed in &suite.seeds {
                    for p in &members {
                        jobs.push(Job {
                            cell: cells.len(),
                            seed,
                            persona: p,
                            config: config.clone(),
                        });
                    }
                }
                cells.push((q, s, a, members.len()));
            }
        }
    }

    let results = suite
        .exec
        .map(&jobs, |j| run_one(engine, j.persona, &j.config, j.seed, suite));

    let mut reports = Vec::with_capacity(cells.len());
    for (idx, &(query_type, strategy, ablation, n)) in cells.iter().enumerate() {
        let runs: Vec<(&Job, &RunMetrics)> = jobs
            .iter()
            .zip(&results)
            .filter(|(j, _)| j.cell == idx)
            .collect();
        let mut per_seed: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for &seed in &suite.seeds {
            let of_seed: Vec<&RunMetrics> = runs.iter().filter(|(j, _)| j.seed == seed).map(|(_, r)| *r).collect();
            let series: [(&str, Option<f64>); 10] = [
                ("precision", mean_of(of_seed.iter().map(|r| r.precision))),
                ("ndcg", mean_of(of_seed.iter().map(|r| r.ndcg))),
                ("satisfied_count", mean_of(of_seed.iter().map(|r| r.satisfied_count as f64))),
                ("sat_filtered", mean_of(of_seed.iter().map(|r| r.sat_filtered))),
                ("ild", mean_of(of_seed.iter().map(|r| r.ild))),
                ("questions", mean_of(of_seed.iter().map(|r| r.questions as f64))),
                ("relevance", mean_of(of_seed.iter().filter_map(|r| r.relevance))),
                ("newness", mean_of(of_seed.iter().filter_map(|r| r.newness))),
                ("preference_echo", mean_of(of_seed.iter().map(|r| r.preference_echo as f64))),
                ("relaxed_share", mean_of(of_seed.iter().map(|r| if r.relaxed { 1.0 } else { 0.0 }))),
            ];
            for (name, v) in series {
                if let Some(v) = v {
                    per_seed.entry(name).or_default().push(v);
                }
            }
        }
        let all_verdicts: Vec<JudgeVerdict> = runs.iter().flat_map(|(_, r)| r.verdicts.iter().cloned()).collect();
        reports.push(CellReport {
            query_type,
            strategy,
            ablation,
            personas: n,
            metrics: per_seed
                .into_iter()
                .map(|(k, xs)| (k.to_string(), MeanStd::of(&xs)))
                .collect(),
            attr_sat: attr_sat_rate(&all_verdicts),
            failed_runs: runs.iter().filter(|(_, r)| r.failed).count(),
        });
    }
    SuiteReport {
        seeds: suite.seeds.clone(),
        k: suite.k,
        persona_count: personas.len(),
        cells: reports,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[1.0, 2.0, 3.0]);
        assert_eq!(m.mean, 2.0);
        assert_eq!(m.std, 1.0);
        assert_eq!(MeanStd::of(&[5.0]).std, 0.0);
        assert_eq!(format!("{}", MeanStd::of(&[0.5, 0.5])), "0.500 ± 0.000");
    }

    #[test]
    fn ablation_flags() {
        let base = EngineConfig::default();
        assert_eq!(Ablation::Full.apply(&base), base);
        let both = Ablation::NoMmrNoEntropyQ.apply(&base);
        assert_eq!(both.ranking.mmr_lambda, 1.0);
        assert_eq!(both.question_policy, QuestionPolicy::FixedOrder);
        assert_eq!("both".parse::<Ablation>(), Ok(Ablation::NoMmrNoEntropyQ));
        assert!("zz".parse::<Ablation>().is_err());
    }

    #[test]
    fn no_personas_no_cells() {
        let cat = crate::catalog::test_fixtures::small_catalog();
        let e = Engine::with_defaults(std::sync::Arc::new(cat));
        let r = run_suite(&e, &[], &SuiteConfig::default());
        assert!(r.cells.is_empty());
        assert_eq!(r.to_markdown().lines().count(), 5);
    }
}
