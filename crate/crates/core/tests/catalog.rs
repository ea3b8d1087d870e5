use elicit_core::catalog::{
    apply_filters, bin_values, load_catalog, relax_filters, AttrValue, AttributeSchema, Catalog, CatalogError, FilterSet,
    Predicate, Schema,
};
use elicit_core::evalsim::synth::generate_catalog;

fn schema() -> Schema {
    Schema::new(vec![
        AttributeSchema::continuous("price", Some("USD"), 9),
        AttributeSchema::categorical("fuel", 4),
        AttributeSchema::categorical("body", 5),
        AttributeSchema::categorical("color", 0),
    ])
    .unwrap()
}

const CSV: &str = "\
id,price,fuel,body,color
a,25000,hybrid,SUV,red
b,31000,gasoline,sedan,blue
c,29000,gasoline,SUV,white
";

#[test]
fn loads_three_rows() {
    let schema = Schema::new(vec![
        AttributeSchema::continuous("price", Some("USD"), 2),
        AttributeSchema::categorical("fuel", 1),
        AttributeSchema::categorical("body", 0),
    ])
    .unwrap();
    let cat = load_catalog("price,fuel,body\n20000,gas,SUV\n$25000,hybrid,sedan\n30000,electric,SUV\n".as_bytes(), schema).unwrap();
    assert_eq!(cat.len(), 3);
    assert_eq!(cat.value_of(1, "price"), Some(&AttrValue::Continuous(25000.0)));
    assert!(cat.items().iter().all(|i| i.pros.is_empty() && i.cons.is_empty()));
}

#[test]
fn bad_number_cites_row_and_column() {
    let csv = "id,price,fuel,body,color\na,25000,hybrid,SUV,red\nb,abc,gasoline,sedan,blue\n";
    match load_catalog(csv.as_bytes(), schema()) {
        Err(CatalogError::BadValue { row, column, value }) => {
            assert_eq!((row, column.as_str(), value.as_str()), (2, "price", "abc"));
        }
        other => panic!("expected a bad value error, got {other:?}"),
    }
}

#[test]
fn shipped_catalog_row_count_matches_line_count() {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let cat = Catalog::load_files(&dir.join("catalog.csv"), &dir.join("schema.json")).unwrap();
    let lines = std::fs::read_to_string(dir.join("catalog.csv")).unwrap().lines().count();
    assert_eq!(cat.len(), lines - 1);
    for dim in cat.schema().names() {
        assert!(cat.items().iter().all(|i| !i.values[cat.schema().index_of(dim).unwrap()].is_missing()));
    }
}

#[test]
fn filter_examples() {
    let cat = load_catalog(CSV.as_bytes(), schema()).unwrap();
    assert_eq!(apply_filters(&cat, &FilterSet::new()).len(), 3);
    assert!(apply_filters(&cat, &FilterSet::new().with("fuel", Predicate::equals("electric"))).is_empty());

    let big = generate_catalog(1000, 3);
    let f = FilterSet::new()
        .with("price", Predicate::at_most(30000.0))
        .with("body", Predicate::equals("SUV"));
    let got = apply_filters(&big, &f).members;
    let want: Vec<usize> = (0..big.len())
        .filter(|&i| {
            big.value_of(i, "price").and_then(AttrValue::as_f64).unwrap() <= 30000.0
                && big.value_of(i, "body").and_then(AttrValue::as_str) == Some("SUV")
        })
        .collect();
    assert!(!want.is_empty());
    assert_eq!(got, want);
}

#[test]
fn relaxation_examples() {
    let csv = "id,price,fuel,body,color\na,25000,hybrid,SUV,red\nb,31000,gasoline,sedan,purple\nc,29000,gasoline,SUV,white\n";
    let cat = load_catalog(csv.as_bytes(), schema()).unwrap();
    let f = FilterSet::new()
        .with("color", Predicate::equals("purple"))
        .with("body", Predicate::equals("SUV"));
    assert!(apply_filters(&cat, &f).is_empty());
    let r = relax_filters(&cat, &f);
    assert_eq!(r.relaxed_dimensions, vec!["color"]);
    assert_eq!(r.ids(&cat), vec!["a", "c"]);

    let single = FilterSet::new().with("fuel", Predicate::equals("diesel"));
    let r = relax_filters(&cat, &single);
    assert_eq!(r.relaxed_dimensions, vec!["fuel"]);
    assert_eq!(r.len(), 3);
}

#[test]
fn tertile_examples() {
    let values: Vec<Option<f64>> = (1..=9).map(|x| Some(x as f64)).collect();
    let b = bin_values("x", &values, None);
    assert_eq!(b.bins.iter().map(|b| (b.lo, b.hi, b.count)).collect::<Vec<_>>(), vec![(1.0, 3.0, 3), (4.0, 6.0, 3), (7.0, 9.0, 3)]);

    let b = bin_values("x", &[Some(5.0); 9], None);
    assert_eq!(b.bins.len(), 1);
    assert_eq!(b.bins[0].count, 9);

    let skewed = [1.0, 1.0, 1.0, 1.0, 2.0, 3.0, 100.0, 200.0, 300.0];
    let b = bin_values("x", &skewed.map(Some), None);
    // Sort-and-split oracle: thirds of the sorted sample, ties kept together.
    let counts: Vec<usize> = b.bins.iter().map(|b| b.count).collect();
    assert_eq!(counts.iter().sum::<usize>(), 9);
    assert_eq!(b.bins.last().unwrap().count, 3);
    assert_eq!(b.bins.last().unwrap().lo, 100.0);
    assert!(b.bins[0].lo == 1.0 && b.bins[0].count >= 3);
}
