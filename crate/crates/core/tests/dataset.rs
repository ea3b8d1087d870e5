use std::fs;
use std::path::{Path, PathBuf};

use elicit_core::catalog::{apply_filters, Catalog};
use elicit_core::evalsim::synth::{write_dataset, DEFAULT_ITEMS, DEFAULT_PERSONAS, DEFAULT_SEED};
use elicit_core::evalsim::{load_personas, QueryType, Style};

fn shipped() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = walk(dir).into_iter().map(|p| p.strip_prefix(dir).unwrap().to_path_buf()).collect();
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}

#[test]
fn shipped_data_matches_the_generator() {
    let tmp = tempfile::tempdir().unwrap();
    write_dataset(tmp.path(), DEFAULT_ITEMS, DEFAULT_PERSONAS, DEFAULT_SEED).unwrap();
    let (want, got) = (files(tmp.path()), files(&shipped()));
    assert_eq!(want, got);
    for rel in want {
        let a = fs::read(tmp.path().join(&rel)).unwrap();
        let b = fs::read(shipped().join(&rel)).unwrap();
        assert!(a == b, "{} differs from the generator output; rerun `elicit generate`", rel.display());
    }
}

#[test]
fn shipped_personas_are_consistent() {
    let dir = shipped();
    let catalog = Catalog::load_files(&dir.join("catalog.csv"), &dir.join("schema.json")).unwrap();
    assert_eq!(catalog.len(), 1000);
    let personas = load_personas(&dir.join("personas")).unwrap();
    assert_eq!(personas.len(), 50);
    assert_eq!(personas.iter().filter(|p| p.query_type == QueryType::Short).count(), 25);
    assert_eq!(personas.iter().filter(|p| p.style == Style::Impatient).count(), 10);
    for p in &personas {
        p.validate(catalog.schema()).unwrap();
        assert!(!apply_filters(&catalog, &p.hard_constraints).is_empty(), "{} is unsatisfiable", p.persona_id);
    }
}
