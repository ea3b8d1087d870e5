//! Coverage-risk set selection over phrase alignments.
//!
//! Each liked feature is aligned against an item's pros phrases and each
//! disliked feature against its cons; weak matches below the threshold are
//! zeroed by a hinge. The set objective sums, per feature, the best
//! alignment over the set: coverage for liked features minus `λ` times risk
//! for disliked ones. Selection is greedy on the marginal gain.

use crate::embedding::{cos, Vector};

/// Hinge `max(0, t − τ)`.
pub fn hinge(t: f64, tau: f64) -> f64 {
    (t - tau).max(0.0)
}

/// Best hinged cosine between a feature and any of an item's phrases;
/// 0 when the item has no phrases.
pub fn phrase_alignment(feature: &Vector, phrases: &[Vector], tau: f64) -> f64 {
    phrases
        .iter()
        .map(|p| hinge(cos(feature, p), tau))
        .fold(0.0, f64::max)
}

/// Alignment scores indexed `[feature][candidate]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignmentTable {
    pub pos: Vec<Vec<f64>>,
    pub neg: Vec<Vec<f64>>,
}

impl AlignmentTable {
    pub fn candidates(&self) -> usize {
        self.pos
            .first()
            .or(self.neg.first())
            .map_or(0, Vec::len)
    }

    /// Builds a table from per-candidate columns `(pos per liked, neg per disliked)`.
    pub fn from_columns(columns: Vec<(Vec<f64>, Vec<f64>)>, liked: usize, disliked: usize) -> Self {
        let mut pos = vec![Vec::with_capacity(columns.len()); liked];
        let mut neg = vec![Vec::with_capacity(columns.len()); disliked];
        for (p, n) in columns {
            for (row, v) in pos.iter_mut().zip(p) {
                row.push(v);
            }
            for (row, v) in neg.iter_mut().zip(n) {
                row.push(v);
            }
        }
        Self { pos, neg }
    }

    /// Coverage and risk of a set of candidate indices.
    pub fn coverage_and_risk(&self, set: &[usize]) -> (f64, f64) {
        let best = |rows: &[Vec<f64>]| -> f64 {
            rows.iter()
                .map(|row| set.iter().map(|&v| row[v]).fold(0.0, f64::max))
                .sum()
        };
        (best(&self.pos), best(&self.neg))
    }

    pub fn objective(&self, set: &[usize], lambda: f64) -> f64 {
        let (cov, risk) = self.coverage_and_risk(set);
        cov - lambda * risk
    }
}

/// Running state of the greedy: best alignment reached so far per feature.
#[derive(Debug, Clone)]
pub struct MarginalState<'a> {
    table: &'a AlignmentTable,
    best_pos: Vec<f64>,
    best_neg: Vec<f64>,
}

impl<'a> MarginalState<'a> {
    pub fn new(table: &'a AlignmentTable) -> Self {
        Self {
            table,
            best_pos: vec![0.0; table.pos.len()],
            best_neg: vec![0.0; table.neg.len()],
        }
    }

    pub fn delta_coverage(&self, v: usize) -> f64 {
        self.table
            .pos
            .iter()
            .zip(&self.best_pos)
            .map(|(row, b)| (row[v] - b).max(0.0))
            .sum()
    }

    pub fn delta_risk(&self, v: usize) -> f64 {
        self.table
            .neg
            .iter()
            .zip(&self.best_neg)
            .map(|(row, b)| (row[v] - b).max(0.0))
            .sum()
    }

    pub fn gain(&self, v: usize, lambda: f64) -> f64 {
        self.delta_coverage(v) - lambda * self.delta_risk(v)
    }

    pub fn add(&mut self, v: usize) {
        for (row, b) in self.table.pos.iter().zip(self.best_pos.iter_mut()) {
            *b = b.max(row[v]);
        }
        for (row, b) in self.table.neg.iter().zip(self.best_neg.iter_mut()) {
            *b = b.max(row[v]);
        }
    }
}

/// Gains closer than this are treated as tied.
pub const GAIN_TIE_EPSILON: f64 = 1e-12;

/// Greedy marginal-gain selection of `min(k, n)` candidates.
///
/// Picks with negative gain are still taken to fill `k`. Ties go to
/// `tie_break` (higher wins; it sees the candidate and the picks so far)
/// and then to the lower index. Returns `(index, gain)` in pick order.
pub fn greedy_select<T>(table: &AlignmentTable, k: usize, lambda: f64, mut tie_break: T) -> Vec<(usize, f64)>
where
    T: FnMut(usize, &[usize]) -> f64,
{
    let n = table.candidates();
    let k = k.min(n);
    let mut state = MarginalState::new(table);
    let mut taken = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let mut best: Option<(usize, f64, Option<f64>)> = None;
        for v in (0..n).filter(|&v| !taken[v]) {
            let g = state.gain(v, lambda);
            best = match best {
                None => Some((v, g, None)),
                Some((bv, bg, bt)) => {
                    if g > bg + GAIN_TIE_EPSILON {
                        Some((v, g, None))
                    } else if g >= bg - GAIN_TIE_EPSILON {
                        let bt = bt.unwrap_or_else(|| tie_break(bv, &order));
                        let t = tie_break(v, &order);
                        if t > bt {
                            Some((v, g, Some(t)))
                        } else {
                            Some((bv, bg, Some(bt)))
                        }
                    } else {
                        Some((bv, bg, bt))
                    }
                }
            };
        }
        let (v, g, _) = best.expect("k <= n leaves a candidate");
        taken[v] = true;
        state.add(v);
        order.push(v);
        out.push((v, g));
    }
    out
}

/// Greedy coverage-risk selection with ties broken by index only.
pub fn coverage_risk_greedy(table: &AlignmentTable, k: usize, lambda: f64) -> Vec<(usize, f64)> {
    greedy_select(table, k, lambda, |_, _| 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(pos: Vec<Vec<f64>>, neg: Vec<Vec<f64>>) -> AlignmentTable {
        AlignmentTable { pos, neg }
    }

    #[test]
    fn hinge_values() {
        assert_eq!(hinge(0.5, 0.6), 0.0);
        assert!((hinge(0.8, 0.6) - 0.2).abs() < 1e-12);
        assert!((hinge(1.0, 0.6) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn alignment_against_phrases() {
        let f = Vector::new(vec![1.0, 0.0]);
        let exact = Vector::new(vec![2.0, 0.0]);
        let weak = Vector::new(vec![1.0, 1.0]); // cos = 0.7071
        assert!((phrase_alignment(&f, &[weak.clone(), exact], 0.6) - 0.4).abs() < 1e-12);
        assert!((phrase_alignment(&f, &[weak], 0.6) - (0.5f64.sqrt() - 0.6)).abs() < 1e-12);
        assert_eq!(phrase_alignment(&f, &[], 0.6), 0.0);
    }

    #[test]
    fn single_feature_picks_best() {
        let t = table(vec![vec![0.3, 0.1]], vec![]);
        let out = coverage_risk_greedy(&t, 1, 0.5);
        assert_eq!(out, vec![(0, 0.3)]);
        assert!((t.objective(&[0], 0.5) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn uniform_risk_does_not_change_order() {
        let pos = vec![vec![0.1, 0.4, 0.2, 0.3]];
        let with_risk = table(pos.clone(), vec![vec![0.25; 4]]);
        let without = table(pos, vec![]);
        let a: Vec<usize> = coverage_risk_greedy(&with_risk, 4, 0.5).iter().map(|p| p.0).collect();
        let b: Vec<usize> = coverage_risk_greedy(&without, 4, 0.5).iter().map(|p| p.0).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn negative_gains_fill_k() {
        let t = table(vec![vec![0.0, 0.0]], vec![vec![0.2, 0.3]]);
        let out = coverage_risk_greedy(&t, 2, 0.5);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].0, 0);
        assert!((out[0].1 + 0.1).abs() < 1e-12);
        // Second pick only raises the max risk from 0.2 to 0.3.
        assert!((out[1].1 + 0.05).abs() < 1e-12);
    }

    #[test]
    fn gains_telescope_to_objective() {
        let t = table(
            vec![vec![0.3, 0.0, 0.2, 0.1], vec![0.0, 0.35, 0.1, 0.2]],
            vec![vec![0.1, 0.0, 0.3, 0.0]],
        );
        let out = coverage_risk_greedy(&t, 3, 0.5);
        let set: Vec<usize> = out.iter().map(|p| p.0).collect();
        let total: f64 = out.iter().map(|p| p.1).sum();
        assert!((total - t.objective(&set, 0.5)).abs() < 1e-12);
    }

    #[test]
    fn tie_break_hook_decides_between_equal_gains() {
        let t = table(vec![vec![0.2, 0.2, 0.2]], vec![]);
        let out = greedy_select(&t, 1, 0.5, |v, _| v as f64);
        assert_eq!(out[0].0, 2);
        let out = coverage_risk_greedy(&t, 1, 0.5);
        assert_eq!(out[0].0, 0);
    }
}
