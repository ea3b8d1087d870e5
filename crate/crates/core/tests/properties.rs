use std::sync::OnceLock;

use elicit_core::catalog::{apply_filters, relax_filters, retrieve, Catalog, FilterSet, Predicate};
use elicit_core::diversify::present;
use elicit_core::embedding::Vector;
use elicit_core::entropy::{normalized_entropy, shannon_entropy, ValueDistribution};
use elicit_core::evalsim::ild;
use elicit_core::evalsim::synth::generate_catalog;
use elicit_core::parsing::{merge_filters, parse_turn_rule_based, SchemaSummary};
use elicit_core::ranking::ScoredCandidate;
use proptest::prelude::*;

fn catalog() -> &'static Catalog {
    static CAT: OnceLock<Catalog> = OnceLock::new();
    CAT.get_or_init(|| generate_catalog(150, 21))
}

fn predicate(dim: &'static str) -> BoxedStrategy<(String, Predicate)> {
    let cat = catalog();
    if ["price", "mileage", "year"].contains(&dim) {
        let hi = match dim {
            "price" => 90000.0,
            "mileage" => 200000.0,
            _ => 2026.0,
        };
        let lo = if dim == "year" { 2010.0 } else { 0.0 };
        (prop::option::of(lo..hi), prop::option::of(lo..hi))
            .prop_map(move |(a, b)| (dim.to_string(), Predicate::range(a, b)))
            .boxed()
    } else {
        let vocab = cat.vocabulary(dim);
        prop::sample::subsequence(vocab, 1..=2)
            .prop_map(move |vs| {
                let p = if vs.len() == 1 { Predicate::equals(vs[0].clone()) } else { Predicate::one_of(vs) };
                (dim.to_string(), p)
            })
            .boxed()
    }
}

fn filter_set() -> impl Strategy<Value = FilterSet> {
    let dims = ["price", "mileage", "year", "condition", "body", "fuel", "make", "drivetrain", "exterior_color"];
    prop::sample::subsequence(dims.to_vec(), 0..=5)
        .prop_flat_map(|ds| ds.into_iter().map(predicate).collect::<Vec<_>>())
        .prop_map(|preds| {
            let mut f = FilterSet::new();
            for (d, p) in preds {
                f.insert(&d, p);
            }
            f
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn filtering_matches_brute_force(f in filter_set()) {
        let cat = catalog();
        let got = apply_filters(cat, &f).members;
        let want: Vec<usize> = (0..cat.len())
            .filter(|&i| f.iter().all(|(d, p)| p.matches(cat.value_of(i, d).unwrap())))
            .collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn relaxation_drops_least_important_first(f in filter_set()) {
        let cat = catalog();
        let r = retrieve(cat, &f);
        prop_assert!(!r.is_empty());
        if apply_filters(cat, &f).is_empty() {
            let relaxed = relax_filters(cat, &f);
            prop_assert_eq!(&r, &relaxed);
            prop_assert!(!r.relaxed_dimensions.is_empty());
            let ranks: Vec<_> = r.relaxed_dimensions.iter().map(|d| cat.schema().relaxation_key(d)).collect();
            prop_assert!(ranks.windows(2).all(|w| w[0] <= w[1]));
            // Minimal: keeping the last dropped predicate gives nothing.
            let mut fewer = f.clone();
            for d in &r.relaxed_dimensions[..r.relaxed_dimensions.len() - 1] {
                fewer.remove(d);
            }
            prop_assert!(apply_filters(cat, &fewer).is_empty());
            let mut kept = f.clone();
            for d in &r.relaxed_dimensions {
                kept.remove(d);
            }
            prop_assert_eq!(apply_filters(cat, &kept).members, r.members);
        } else {
            prop_assert!(r.relaxed_dimensions.is_empty());
        }
    }

    #[test]
    fn merge_is_associative_and_idempotent(a in filter_set(), b in filter_set(), c in filter_set()) {
        prop_assert_eq!(merge_filters(&merge_filters(&a, &b), &c), merge_filters(&a, &merge_filters(&b, &c)));
        prop_assert_eq!(merge_filters(&a, &a), a.clone());
        prop_assert_eq!(merge_filters(&merge_filters(&a, &b), &b), merge_filters(&a, &b));
    }

    #[test]
    fn parser_never_leaves_the_schema(text in "[ a-zA-Z0-9$,.!?'-]{0,80}") {
        let summary = SchemaSummary::from_catalog(catalog());
        let parsed = parse_turn_rule_based(&text, &summary, &[]);
        prop_assert!(parsed.validate(&summary).is_ok());
        prop_assert!(parsed.filter_delta.validate(catalog().schema()).is_ok());
    }

    #[test]
    fn parser_on_catalog_words(words in prop::collection::vec(prop::sample::select(vocabulary_words()), 0..8)) {
        let summary = SchemaSummary::from_catalog(catalog());
        let parsed = parse_turn_rule_based(&words.join(" "), &summary, &[]);
        prop_assert!(parsed.validate(&summary).is_ok());
    }

    #[test]
    fn entropy_bounds(counts in prop::collection::vec(0usize..40, 1..10)) {
        let dist = ValueDistribution::from_counts("d", counts.iter().enumerate().map(|(i, &c)| (i.to_string(), c)));
        let h = shannon_entropy(&dist);
        let n = normalized_entropy(&dist);
        prop_assert!(h >= 0.0);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&n));
        prop_assert!(h <= (dist.distinct().max(1) as f64).log2() + 1e-12);
    }

    #[test]
    fn ild_ignores_order(vs in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 8), 0..7), seed in any::<u64>()) {
        let vectors: Vec<Vector> = vs.into_iter().map(Vector::new).collect();
        let refs: Vec<&Vector> = vectors.iter().collect();
        let mut shuffled = refs.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            shuffled.swap(i, (seed as usize ^ i.wrapping_mul(2654435761)) % (i + 1));
        }
        let (a, b) = (ild(&refs), ild(&shuffled));
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn grid_respects_shape_and_rank_order(n in 0usize..40, rows in 1usize..4, per_row in 1usize..4, specified in prop::sample::subsequence(vec!["body", "fuel", "make", "price"], 0..3)) {
        let cat = catalog();
        let ranked: Vec<ScoredCandidate> = (0..n)
            .map(|i| ScoredCandidate { item: i * 3, item_id: cat.item(i * 3).id.clone(), relevance: 1.0 - i as f64 / 100.0, selection_rank: i + 1 })
            .collect();
        let specified: Vec<String> = specified.into_iter().map(String::from).collect();
        let grid = present(cat, &specified, &ranked, rows, per_row);
        prop_assert!(grid.rows.len() <= rows);
        prop_assert!(grid.rows.iter().all(|r| r.items.len() <= per_row && !r.items.is_empty() || n == 0));
        prop_assert_eq!(grid.len(), grid.item_ids().len());
        if let Some(d) = &grid.dimension {
            prop_assert!(!specified.contains(d));
        }
        for row in &grid.rows {
            prop_assert!(row.items.windows(2).all(|w| w[0].selection_rank < w[1].selection_rank));
        }
        let mut ids = grid.item_ids();
        ids.sort();
        ids.dedup();
        prop_assert_eq!(ids.len(), grid.len());
        if n > 0 {
            prop_assert!(!grid.is_empty());
        }
    }
}

fn vocabulary_words() -> Vec<String> {
    let cat = catalog();
    let mut words: Vec<String> = cat.schema().names().flat_map(|d| cat.vocabulary(d)).collect();
    words.extend(
        ["under", "over", "$20k", "not", "no", "love", "hate", "but", "and", "between", "15000", "2019", "miles", "skip", "whatever", "newer", "cheap"]
            .iter()
            .map(|s| s.to_string()),
    );
    words
}
