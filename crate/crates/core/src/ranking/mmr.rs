//! Maximal marginal relevance selection.

/// `λ·sim(q,c) − (1−λ)·redundancy`, where redundancy is the highest
/// similarity between `c` and anything already selected.
pub fn mmr_score(lambda: f64, relevance: f64, redundancy: f64) -> f64 {
    lambda * relevance - (1.0 - lambda) * redundancy
}

/// Greedy MMR over abstract scores.
///
/// `relevance[i]` is the query similarity of candidate `i`; `similarity(i, j)`
/// the similarity between two candidates. The first pick is the most
/// relevant candidate; every later pick maximizes [`mmr_score`] against the
/// picks so far. Ties go to the lower index. Returns `(index, score)` pairs in
/// selection order, `min(k, n)` of them; the first pick's score uses zero
/// redundancy.
pub fn mmr_select_by<F>(relevance: &[f64], similarity: F, k: usize, lambda: f64) -> Vec<(usize, f64)>
where
    F: Fn(usize, usize) -> f64,
{
    let n = relevance.len();
    let k = k.min(n);
    let mut picked = Vec::with_capacity(k);
    if k == 0 {
        return picked;
    }
    let mut taken = vec![false; n];
    let mut redundancy = vec![f64::NEG_INFINITY; n];

    let mut first = 0;
    for i in 1..n {
        if relevance[i] > relevance[first] {
            first = i;
        }
    }
    picked.push((first, mmr_score(lambda, relevance[first], 0.0)));
    taken[first] = true;
    let mut last = first;

    while picked.len() < k {
        for i in 0..n {
            if !taken[i] {
                redundancy[i] = redundancy[i].max(similarity(i, last));
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !taken[i]) {
            let s = mmr_score(lambda, relevance[i], redundancy[i]);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        let (i, s) = best.expect("k <= n leaves a candidate");
        picked.push((i, s));
        taken[i] = true;
        last = i;
    }
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_arithmetic() {
        // 0.85 * 0.9 - 0.15 * 0.8 = 0.765 - 0.12 = 0.645
        assert!((mmr_score(0.85, 0.9, 0.8) - 0.645).abs() < 1e-12);
    }

    #[test]
    fn lambda_one_sorts_by_relevance() {
        let rel = [0.2, 0.9, 0.5, 0.9, 0.1];
        let out = mmr_select_by(&rel, |_, _| 1.0, 5, 1.0);
        let order: Vec<usize> = out.iter().map(|p| p.0).collect();
        assert_eq!(order, vec![1, 3, 2, 0, 4]);
    }

    #[test]
    fn near_duplicates_are_separated() {
        // 0 and 1 are near-identical and both highly relevant; 2 is distinct.
        let rel = [0.90, 0.89, 0.70];
        let sim = |a: usize, b: usize| {
            let m = [[1.0, 0.99, 0.1], [0.99, 1.0, 0.1], [0.1, 0.1, 1.0]];
            m[a][b]
        };
        let out = mmr_select_by(&rel, sim, 2, 0.5);
        assert_eq!(out[0].0, 0);
        assert_eq!(out[1].0, 2);
    }

    #[test]
    fn k_is_clamped() {
        assert_eq!(mmr_select_by(&[0.1, 0.2], |_, _| 0.0, 10, 0.85).len(), 2);
        assert!(mmr_select_by(&[], |_, _| 0.0, 3, 0.85).is_empty());
    }
}
