//! Seeded generator for the bundled car catalog and persona suite.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{AttrValue, AttributeSchema, Catalog, FilterSet, Item, Predicate, Schema, RESERVED_COLUMNS};

use super::{EvalError, Persona, QueryType, Style};

const CURRENT_YEAR: i64 = 2025;

/// Car schema; lower relaxation rank is dropped first.
pub fn car_schema() -> Schema {
    Schema::new(vec![
        AttributeSchema::continuous("price", Some("USD"), 10),
        AttributeSchema::continuous("mileage", Some("miles"), 9),
        AttributeSchema::continuous("year", None, 8),
        AttributeSchema::categorical("condition", 7),
        AttributeSchema::categorical("body", 6).with_label("body style"),
        AttributeSchema::categorical("fuel", 5).with_label("fuel type"),
        AttributeSchema::categorical("make", 4),
        AttributeSchema::categorical("drivetrain", 3),
        AttributeSchema::categorical("transmission", 2),
        AttributeSchema::categorical("interior_color", 1).with_label("interior color"),
        AttributeSchema::categorical("exterior_color", 0).with_label("exterior color"),
    ])
    .expect("static schema is valid")
}

struct Model {
    make: &'static str,
    name: &'static str,
    body: &'static str,
    fuels: &'static [&'static str],
    base: f64,
}

const fn m(
    make: &'static str,
    name: &'static str,
    body: &'static str,
    fuels: &'static [&'static str],
    base: f64,
) -> Model {
    Model { make, name, body, fuels, base }
}

const G: &[&str] = &["gasoline"];
const GH: &[&str] = &["gasoline", "hybrid"];
const H: &[&str] = &["hybrid"];
const E: &[&str] = &["electric"];
const GD: &[&str] = &["gasoline", "diesel"];

const MODELS: &[Model] = &[
    m("Toyota", "Camry", "sedan", GH, 27000.0),
    m("Toyota", "Corolla", "sedan", GH, 22000.0),
    m("Toyota", "RAV4", "SUV", GH, 30000.0),
    m("Toyota", "Highlander", "SUV", GH, 39000.0),
    m("Toyota", "Tacoma", "pickup", G, 33000.0),
    m("Toyota", "Prius", "hatchback", H, 28000.0),
    m("Toyota", "Sienna", "minivan", H, 38000.0),
    m("Honda", "Civic", "sedan", G, 24000.0),
    m("Honda", "Accord", "sedan", GH, 28000.0),
    m("Honda", "CR-V", "SUV", GH, 31000.0),
    m("Honda", "Pilot", "SUV", G, 40000.0),
    m("Honda", "Odyssey", "minivan", G, 38000.0),
    m("Honda", "Fit", "hatchback", G, 18000.0),
    m("Ford", "F-150", "pickup", &["gasoline", "hybrid", "diesel"], 42000.0),
    m("Ford", "Escape", "SUV", GH, 29000.0),
    m("Ford", "Explorer", "SUV", G, 38000.0),
    m("Ford", "Mustang", "coupe", G, 32000.0),
    m("Ford", "Maverick", "pickup", GH, 25000.0),
    m("Ford", "Mustang Mach-E", "SUV", E, 45000.0),
    m("Chevrolet", "Malibu", "sedan", G, 25000.0),
    m("Chevrolet", "Equinox", "SUV", G, 28000.0),
    m("Chevrolet", "Silverado", "pickup", GD, 40000.0),
    m("Chevrolet", "Bolt", "hatchback", E, 28000.0),
    m("Chevrolet", "Camaro", "coupe", G, 30000.0),
    m("Chevrolet", "Tahoe", "SUV", GD, 55000.0),
    m("Tesla", "Model 3", "sedan", E, 42000.0),
    m("Tesla", "Model Y", "SUV", E, 48000.0),
    m("Tesla", "Model S", "sedan", E, 80000.0),
    m("BMW", "3 Series", "sedan", G, 44000.0),
    m("BMW", "X3", "SUV", G, 48000.0),
    m("BMW", "X5", "SUV", GH, 63000.0),
    m("BMW", "i4", "sedan", E, 55000.0),
    m("BMW", "4 Series", "coupe", G, 50000.0),
    m("Subaru", "Outback", "wagon", G, 30000.0),
    m("Subaru", "Forester", "SUV", G, 29000.0),
    m("Subaru", "Crosstrek", "SUV", GH, 26000.0),
    m("Subaru", "WRX", "sedan", G, 32000.0),
    m("Hyundai", "Elantra", "sedan", GH, 22000.0),
    m("Hyundai", "Tucson", "SUV", GH, 29000.0),
    m("Hyundai", "Ioniq 5", "SUV", E, 43000.0),
    m("Hyundai", "Santa Fe", "SUV", GH, 33000.0),
    m("Kia", "Forte", "sedan", G, 21000.0),
    m("Kia", "Sportage", "SUV", GH, 28000.0),
    m("Kia", "EV6", "SUV", E, 44000.0),
    m("Kia", "Telluride", "SUV", G, 38000.0),
    m("Kia", "Carnival", "minivan", G, 36000.0),
    m("Mazda", "Mazda3", "hatchback", G, 24000.0),
    m("Mazda", "CX-5", "SUV", G, 29000.0),
    m("Mazda", "MX-5 Miata", "coupe", G, 30000.0),
    m("Volkswagen", "Jetta", "sedan", G, 22000.0),
    m("Volkswagen", "Tiguan", "SUV", G, 29000.0),
    m("Volkswagen", "Golf", "hatchback", G, 25000.0),
    m("Volkswagen", "ID.4", "SUV", E, 40000.0),
    m("Volkswagen", "Passat", "wagon", GD, 27000.0),
    m("Nissan", "Altima", "sedan", G, 26000.0),
    m("Nissan", "Rogue", "SUV", G, 29000.0),
    m("Nissan", "Leaf", "hatchback", E, 29000.0),
    m("Nissan", "Frontier", "pickup", G, 31000.0),
];

const EXTERIOR: &[&str] = &["black", "white", "silver", "gray", "red", "blue", "green"];
const INTERIOR: &[&str] = &["black", "beige", "gray", "brown"];

fn body_phrases(body: &str) -> (&'static [&'static str], &'static [&'static str]) {
    match body {
        "SUV" => (
            &["spacious cargo area", "high driving position", "comfortable ride"],
            &["road noise", "mediocre fuel economy", "firm ride"],
        ),
        "sedan" => (
            &["smooth ride", "comfortable seats", "easy to park"],
            &["limited rear headroom", "small trunk", "bland styling"],
        ),
        "hatchback" => (
            &["easy to park", "versatile cargo space", "nimble handling"],
            &["road noise", "cramped rear seats", "weak acceleration"],
        ),
        "pickup" => (
            &["strong towing capacity", "durable bed", "powerful engine"],
            &["poor fuel economy", "stiff ride", "hard to park"],
        ),
        "coupe" => (
            &["sporty handling", "quick acceleration", "stylish design"],
            &["cramped rear seats", "small trunk", "stiff ride"],
        ),
        "minivan" => (
            &["roomy third row", "sliding doors", "family friendly cabin"],
            &["bland styling", "road noise", "large turning circle"],
        ),
        _ => (
            &["versatile cargo space", "comfortable ride", "confident handling in snow"],
            &["modest power", "road noise"],
        ),
    }
}

fn fuel_phrases(fuel: &str) -> (&'static [&'static str], &'static [&'static str]) {
    match fuel {
        "hybrid" => (&["excellent fuel economy", "quiet cabin"], &["higher purchase price", "sluggish acceleration"]),
        "electric" => (
            &["instant acceleration", "quiet cabin", "low running costs"],
            &["limited range", "long charging times"],
        ),
        "diesel" => (&["excellent towing torque", "long highway range"], &["noisy engine", "expensive maintenance"]),
        _ => (&["quick refueling", "responsive engine"], &["mediocre fuel economy", "high fuel costs"]),
    }
}

fn make_phrases(make: &str) -> (&'static [&'static str], &'static [&'static str]) {
    match make {
        "BMW" | "Tesla" => (&["premium interior", "advanced driver assistance"], &["expensive maintenance"]),
        "Toyota" | "Honda" | "Mazda" => (&["excellent reliability", "strong resale value"], &[]),
        "Subaru" => (&["confident handling in snow"], &[]),
        _ => (&["good value for money"], &[]),
    }
}

fn pick_phrases(rng: &mut ChaCha8Rng, pools: &[&[&'static str]], n: usize) -> Vec<String> {
    let mut all: Vec<&str> = Vec::new();
    for pool in pools {
        for p in *pool {
            if !all.contains(p) {
                all.push(p);
            }
        }
    }
    let n = n.min(all.len());
    all.choose_multiple(rng, n).map(|s| s.to_string()).collect()
}

fn grouped(n: f64) -> String {
    let s = format!("{}", n.round() as i64);
    let mut out = String::new();
    for (i, c) in s.chars().enumerate() {
        if i > 0 && (s.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

/// `n` synthetic cars.
pub fn generate_catalog(n: usize, seed: u64) -> Catalog {
    let schema = car_schema();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(n);
    for i in 0..n {
        let model = &MODELS[rng.random_range(0..MODELS.len())];
        let fuel = *model.fuels.choose(&mut rng).expect("non-empty");
        let condition = match rng.random_range(0..100) {
            0..30 => "new",
            30..85 => "used",
            _ => "certified",
        };
        let year: i64 = if condition == "new" {
            rng.random_range(CURRENT_YEAR - 1..=CURRENT_YEAR)
        } else {
            rng.random_range(2012..CURRENT_YEAR)
        };
        let age = (CURRENT_YEAR - year) as f64;
        let mileage: f64 = if condition == "new" {
            rng.random_range(5..60) as f64
        } else {
            (age.max(0.5) * rng.random_range(7000.0..15000.0) / 100.0).round() * 100.0
        };
        let mut price = model.base * 0.87f64.powf(age) * rng.random_range(0.92..1.08);
        if fuel == "hybrid" {
            price *= 1.08;
        }
        if condition == "certified" {
            price *= 1.07;
        }
        let price = (price / 100.0).round() * 100.0;
        let drivetrain = match (model.make, model.body) {
            ("Subaru", _) => "AWD",
            ("Tesla", _) => *["RWD", "AWD"].choose(&mut rng).unwrap(),
            (_, "pickup") => *["RWD", "4WD", "4WD"].choose(&mut rng).unwrap(),
            (_, "SUV") => *["FWD", "AWD", "AWD"].choose(&mut rng).unwrap(),
            (_, "coupe") => "RWD",
            ("BMW", _) => *["RWD", "AWD"].choose(&mut rng).unwrap(),
            _ => *["FWD", "FWD", "AWD"].choose(&mut rng).unwrap(),
        };
        let manual_ok = fuel == "gasoline" && matches!(model.body, "coupe" | "sedan" | "hatchback");
        let transmission = if manual_ok && rng.random_bool(0.2) { "manual" } else { "automatic" };
        let exterior = *EXTERIOR.choose(&mut rng).unwrap();
        let interior = *INTERIOR.choose(&mut rng).unwrap();

        let (bp, bc) = body_phrases(model.body);
        let (fp, fc) = fuel_phrases(fuel);
        let (mp, mc) = make_phrases(model.make);
        let n_pros = rng.random_range(2..=4);
        let n_cons = rng.random_range(1..=2);
        let pros = pick_phrases(&mut rng, &[bp, fp, mp], n_pros);
        let cons = pick_phrases(&mut rng, &[bc, fc, mc], n_cons);

        let cond_text = if condition == "certified" { "certified pre-owned" } else { condition };
        let description = match rng.random_range(0..3) {
            0 => format!(
                "{year} {} {}, a {cond_text} {fuel} {} in {exterior} with {} miles. {} and {}.",
                model.make,
                model.name,
                model.body,
                grouped(mileage),
                capitalize(&pros[0]),
                pros[1]
            ),
            1 => format!(
                "{} {year} {} {} {}. {} powertrain, {drivetrain}, {transmission} transmission. Owners mention {}, though some note {}.",
                capitalize(cond_text),
                model.make,
                model.name,
                model.body,
                capitalize(fuel),
                pros[0],
                cons[0]
            ),
            _ => format!(
                "This {exterior} {} {} is a {} with {drivetrain} and a {fuel} engine. {} miles, {cond_text}. Known for {}.",
                model.make,
                model.name,
                model.body,
                grouped(mileage),
                pros[0]
            ),
        };

        let cat = |s: &str| AttrValue::Categorical(s.to_string());
        items.push(Item {
            id: format!("car-{:04}", i + 1),
            values: vec![
                AttrValue::Continuous(price),
                AttrValue::Continuous(mileage),
                AttrValue::Continuous(year as f64),
                cat(condition),
                cat(model.body),
                cat(fuel),
                cat(model.make),
                cat(drivetrain),
                cat(transmission),
                cat(interior),
                cat(exterior),
            ],
            description,
            pros,
            cons,
        });
    }
    Catalog::new(schema, items).expect("generated items fit the schema")
}

/// Writes `catalog` in the format `load_catalog` reads.
pub fn write_catalog_csv<W: Write>(catalog: &Catalog, out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = vec![RESERVED_COLUMNS[0]];
    header.extend(catalog.schema().names());
    header.extend(&RESERVED_COLUMNS[1..]);
    w.write_record(&header).map_err(|e| EvalError::Io(e.into()))?;
    for item in catalog.items() {
        let mut row = vec![item.id.clone()];
        row.extend(item.values.iter().map(|v| match v {
            AttrValue::Missing => String::new(),
            v => v.to_string(),
        }));
        row.push(item.description.clone());
        row.push(item.pros.join("|"));
        row.push(item.cons.join("|"));
        w.write_record(&row).map_err(|e| EvalError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

fn ceil_to(x: f64, step: f64) -> f64 {
    (x / step).ceil() * step
}

fn money(x: f64) -> String {
    if x % 1000.0 == 0.0 {
        format!("${}k", x / 1000.0)
    } else {
        format!("${}", grouped(x))
    }
}

/// One stated or latent requirement, with how the persona says it.
struct Requirement {
    dimension: &'static str,
    predicate: Predicate,
    phrase: String,
}

fn requirement(item: &Item, dim: &'static str, schema: &Schema, rng: &mut ChaCha8Rng) -> Requirement {
    let col = schema.index_of(dim).expect("known dimension");
    let value = &item.values[col];
    match dim {
        "price" => {
            let hi = ceil_to(value.as_f64().unwrap() * rng.random_range(1.0..1.15), 1000.0);
            Requirement { dimension: dim, predicate: Predicate::at_most(hi), phrase: format!("under {}", money(hi)) }
        }
        "mileage" => {
            let hi = ceil_to(value.as_f64().unwrap().max(1.0), 10000.0);
            Requirement {
                dimension: dim,
                predicate: Predicate::at_most(hi),
                phrase: format!("under {} miles", grouped(hi)),
            }
        }
        "year" => {
            let lo = value.as_f64().unwrap() - rng.random_range(0..3) as f64;
            Requirement { dimension: dim, predicate: Predicate::at_least(lo), phrase: format!("{lo} or newer") }
        }
        _ => {
            let v = value.as_str().unwrap().to_string();
            let phrase = match dim {
                "drivetrain" => format!("{v} drivetrain"),
                "transmission" => format!("{v} transmission"),
                "interior_color" => format!("{v} interior"),
                "exterior_color" => format!("{v} exterior"),
                _ => v.clone(),
            };
            Requirement { dimension: dim, predicate: Predicate::equals(v), phrase }
        }
    }
}

fn short_query(stated: &[Requirement]) -> String {
    let get = |d: &str| stated.iter().find(|r| r.dimension == d).map(|r| r.phrase.clone());
    let mut words = vec!["Looking for a".to_string()];
    for d in ["condition", "fuel", "make"] {
        words.extend(get(d));
    }
    words.push(get("body").unwrap_or_else(|| "car".to_string()));
    for d in ["price", "year", "mileage"] {
        words.extend(get(d));
    }
    words.join(" ")
}

fn long_query(stated: &[Requirement], liked: &[String], disliked: &[String]) -> String {
    let get = |d: &str| stated.iter().find(|r| r.dimension == d).map(|r| r.phrase.clone());
    let mut head = vec!["I'm shopping for a".to_string()];
    for d in ["condition", "fuel", "make"] {
        head.extend(get(d));
    }
    head.push(get("body").unwrap_or_else(|| "car".to_string()));
    let mut s = head.join(" ");
    let extras: Vec<String> = ["price", "year", "mileage", "drivetrain", "transmission", "exterior_color"]
        .iter()
        .filter_map(|d| get(d))
        .collect();
    if !extras.is_empty() {
        s.push_str(&format!(", ideally {}", extras.join(", ")));
    }
    s.push('.');
    if !liked.is_empty() {
        s.push_str(&format!(" I love {}", liked.join(" and ")));
        if !disliked.is_empty() {
            s.push_str(&format!(" but I hate {}", disliked.join(" and ")));
        }
        s.push('.');
    }
    s
}

/// `n` personas anchored on catalog items, so every persona's hard
/// constraints are satisfiable. The first half write short queries.
pub fn generate_personas(catalog: &Catalog, n: usize, seed: u64) -> Vec<Persona> {
    let schema = catalog.schema();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_9e75);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let anchor = catalog.item(rng.random_range(0..catalog.len()));
        let query_type = if i < n.div_ceil(2) { QueryType::Short } else { QueryType::Long };
        let style = if i % 5 == 4 { Style::Impatient } else { Style::Patient };

        let (stated_pool, stated_n): (&[&'static str], usize) = match query_type {
            QueryType::Short => (&["body", "price", "condition", "fuel", "make"], 2),
            QueryType::Long => (&["body", "price", "condition", "fuel", "make", "year", "mileage", "drivetrain"], 4),
        };
        let mut stated_dims: Vec<&'static str> = stated_pool.choose_multiple(&mut rng, stated_n).copied().collect();
        stated_dims.sort_by_key(|d| schema.index_of(d));
        let latent_pool: Vec<&'static str> = ["body", "fuel", "condition", "year", "drivetrain", "exterior_color", "price"]
            .into_iter()
            .filter(|d| !stated_dims.contains(d))
            .collect();
        let latent_dim = *latent_pool.choose(&mut rng).expect("non-empty");

        let stated: Vec<Requirement> = stated_dims
            .iter()
            .map(|d| requirement(anchor, d, schema, &mut rng))
            .collect();
        let latent = requirement(anchor, latent_dim, schema, &mut rng);

        let (liked, disliked) = if query_type == QueryType::Long {
            let liked: Vec<String> = anchor.pros.choose_multiple(&mut rng, 2).cloned().collect();
            let pool = ["road noise", "poor fuel economy", "limited range", "cramped rear seats", "expensive maintenance", "stiff ride"];
            let disliked = pool
                .iter()
                .filter(|p| !anchor.cons.iter().any(|c| c == *p))
                .copied()
                .collect::<Vec<_>>()
                .choose(&mut rng)
                .map(|s| vec![s.to_string()])
                .unwrap_or_default();
            (liked, disliked)
        } else {
            (Vec::new(), Vec::new())
        };

        let initial_query = match query_type {
            QueryType::Short => short_query(&stated),
            QueryType::Long => long_query(&stated, &liked, &disliked),
        };
        let mut hard_constraints = FilterSet::new();
        let mut answer_script = BTreeMap::new();
        for r in stated.iter().chain(std::iter::once(&latent)) {
            hard_constraints.insert(r.dimension, r.predicate.clone());
            answer_script.insert(r.dimension.to_string(), r.phrase.clone());
        }
        let anchor_price = anchor.values[schema.index_of("price").unwrap()].as_f64().unwrap();
        out.push(Persona {
            persona_id: format!("p{:03}", i + 1),
            query_type,
            initial_query,
            hard_constraints,
            liked_truth: liked,
            disliked_truth: disliked,
            answer_script,
            fallback_answer: "no preference".to_string(),
            style,
            max_price: Some(ceil_to(anchor_price * 1.2, 1000.0)),
        });
    }
    out
}

pub const DEFAULT_SEED: u64 = 20250117;
pub const DEFAULT_ITEMS: usize = 1000;
pub const DEFAULT_PERSONAS: usize = 50;

/// Writes `catalog.csv`, `schema.json` and `personas/pNNN.json` under `dir`.
pub fn write_dataset(dir: &Path, items: usize, personas: usize, seed: u64) -> Result<(), EvalError> {
    let catalog = generate_catalog(items, seed);
    let people = generate_personas(&catalog, personas, seed);
    fs::create_dir_all(dir.join("personas"))?;
    write_catalog_csv(&catalog, fs::File::create(dir.join("catalog.csv"))?)?;
    fs::write(dir.join("schema.json"), catalog.schema().to_json() + "\n")?;
    for p in &people {
        let json = serde_json::to_string_pretty(p).map_err(|e| EvalError::Persona(e.to_string()))?;
        fs::write(dir.join("personas").join(format!("{}.json", p.persona_id)), json + "\n")?;
    }
    Ok(())
}
