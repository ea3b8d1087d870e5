use elicit_core::catalog::{load_catalog, AttributeSchema, Catalog, FilterSet, Predicate, Schema};
use elicit_core::diversify::{bucket_grid, present};
use elicit_core::embedding::{build_query_text, cosine_similarity, EmbeddingProvider, HashingEmbedder};
use elicit_core::ranking::{
    coverage_risk_greedy, hinge, mmr_score, mmr_select_by, phrase_alignment, AlignmentTable, ScoredCandidate,
};

#[test]
fn embedding_examples() {
    let e = HashingEmbedder::default();
    let a = e.embed("hybrid SUV with heated seats");
    assert_eq!(a, e.embed("hybrid SUV with heated seats"));
    let h = e.embed("hybrid SUV");
    assert!((cosine_similarity(&h, &h).unwrap() - 1.0).abs() < 1e-12);
    let econ = e.embed("fuel economy");
    let eff = e.embed("fuel efficiency");
    let seats = e.embed("leather seats");
    assert!(cosine_similarity(&econ, &eff).unwrap() > cosine_similarity(&econ, &seats).unwrap());
}

#[test]
fn query_text_layout() {
    let schema = Schema::new(vec![
        AttributeSchema::continuous("price", Some("USD"), 2),
        AttributeSchema::categorical("body", 1),
    ])
    .unwrap();
    let f = FilterSet::new()
        .with("body", Predicate::equals("SUV"))
        .with("price", Predicate::at_most(30000.0));
    let text = build_query_text(&schema, &f, &["fuel economy".into()], &["road noise".into()]);
    assert!(text.starts_with("price: "), "{text}");
    assert!(text.contains("body: SUV."), "{text}");
    assert!(text.ends_with("likes: fuel economy. avoids: road noise."), "{text}");
    assert_eq!(build_query_text(&schema, &FilterSet::new(), &[], &[]), "");
}

#[test]
fn mmr_examples() {
    assert!((mmr_score(0.85, 0.9, 0.8) - 0.645).abs() < 1e-12);

    // λ = 1 reduces to a relevance sort.
    let rel = [0.2, 0.9, 0.5, 0.7, 0.1];
    let order: Vec<usize> = mmr_select_by(&rel, |_, _| 1.0, 5, 1.0).into_iter().map(|(i, _)| i).collect();
    assert_eq!(order, vec![1, 3, 2, 0, 4]);

    // Two near-duplicates and a distinct item: the duplicate penalty outweighs
    // the small relevance gap.
    let rel = [0.90, 0.89, 0.80];
    let sim = |i: usize, j: usize| if i.min(j) == 0 && i.max(j) == 1 { 0.99 } else { 0.1 };
    let top2: Vec<usize> = mmr_select_by(&rel, sim, 2, 0.85).into_iter().map(|(i, _)| i).collect();
    assert_eq!(top2, vec![0, 2]);
}

#[test]
fn hinge_examples() {
    assert_eq!(hinge(0.5, 0.6), 0.0);
    assert!((hinge(0.8, 0.6) - 0.2).abs() < 1e-12);
    let e = HashingEmbedder::default();
    let f = e.embed("smooth ride");
    let pros = [e.embed("smooth ride"), e.embed("big trunk")];
    assert!((phrase_alignment(&f, &pros, 0.6) - 0.4).abs() < 1e-12);
    assert_eq!(phrase_alignment(&f, &[], 0.6), 0.0);
}

fn subsets_of_two(n: usize) -> Vec<Vec<usize>> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| vec![a, b])).collect()
}

#[test]
fn coverage_risk_examples() {
    // 2 liked features, 1 disliked, 4 items.
    let table = AlignmentTable {
        pos: vec![vec![0.4, 0.0, 0.3, 0.1], vec![0.0, 0.35, 0.3, 0.1]],
        neg: vec![vec![0.0, 0.0, 0.2, 0.4]],
    };
    let picks: Vec<usize> = coverage_risk_greedy(&table, 2, 0.5).into_iter().map(|(i, _)| i).collect();
    let opt = subsets_of_two(4).iter().map(|s| table.objective(s, 0.5)).fold(f64::MIN, f64::max);
    let got = table.objective(&picks, 0.5);
    assert!(got >= (1.0 - (-1.0f64).exp()) * opt - 1e-12);
    // Greedy takes the item covering both features first and misses the optimum {0, 1}.
    assert_eq!(picks, vec![2, 0]);
    assert!((opt - 0.75).abs() < 1e-12 && (got - 0.6).abs() < 1e-12);

    // A disliked feature hitting every item equally leaves the coverage order.
    let flat = AlignmentTable { neg: vec![vec![0.3; 4]], ..table.clone() };
    let no_risk = AlignmentTable { neg: vec![], ..table };
    let a: Vec<usize> = coverage_risk_greedy(&flat, 3, 0.5).into_iter().map(|(i, _)| i).collect();
    let b: Vec<usize> = coverage_risk_greedy(&no_risk, 3, 0.5).into_iter().map(|(i, _)| i).collect();
    assert_eq!(a, b);
}

fn fuel_catalog(fuels: &[&str]) -> Catalog {
    let schema = Schema::new(vec![
        AttributeSchema::categorical("fuel", 1),
        AttributeSchema::continuous("price", Some("USD"), 0),
    ])
    .unwrap();
    let mut csv = String::from("id,fuel,price\n");
    for (i, f) in fuels.iter().enumerate() {
        csv.push_str(&format!("c{i},{f},20000\n"));
    }
    load_catalog(csv.as_bytes(), schema).unwrap()
}

fn ranked(cat: &Catalog) -> Vec<ScoredCandidate> {
    (0..cat.len())
        .map(|i| ScoredCandidate {
            item: i,
            item_id: cat.items()[i].id.clone(),
            relevance: 1.0 - i as f64 / 100.0,
            selection_rank: i + 1,
        })
        .collect()
}

#[test]
fn grid_examples() {
    let fuels = ["hybrid", "gasoline", "hybrid", "electric", "gasoline", "hybrid", "gasoline", "electric", "hybrid"];
    let cat = fuel_catalog(&fuels);
    let r = ranked(&cat);
    let grid = bucket_grid(&cat, &r, Some("fuel"), 3, 3);
    let shape: Vec<(&str, usize)> = grid.rows.iter().map(|row| (row.label.as_str(), row.items.len())).collect();
    assert_eq!(shape, vec![("Hybrid", 3), ("Gasoline", 3), ("Electric", 2)]);
    // Rows keep rank order: the fourth hybrid is the one dropped.
    assert_eq!(grid.rows[0].items.iter().map(|i| i.id.as_str()).collect::<Vec<_>>(), vec!["c0", "c2", "c5"]);

    let same = fuel_catalog(&["hybrid"; 6]);
    assert_eq!(bucket_grid(&same, &ranked(&same), Some("fuel"), 3, 3).rows.len(), 1);

    let five = fuel_catalog(&["a", "b", "b", "c", "c", "c", "d", "e", "e", "e", "e"]);
    let g = bucket_grid(&five, &ranked(&five), Some("fuel"), 3, 3);
    assert_eq!(g.rows.iter().map(|r| r.label.as_str()).collect::<Vec<_>>(), vec!["E", "C", "B"]);

    let g = present(&cat, &[], &r, 3, 3);
    assert_eq!(g.dimension.as_deref(), Some("fuel"));
    let g = present(&cat, &["fuel".into(), "price".into()], &r, 3, 3);
    assert_eq!(g.dimension, None);
    assert_eq!(g.rows.len(), 1);
    assert_eq!(g.len(), 9);
}
