//! Entropy-bucketed result grid.
//!
//! The ranked list is partitioned by the unspecified dimension with the
//! highest normalized entropy. Partitions are ordered by size (largest
//! first, then by their best-ranked member, then by value) and each row
//! shows the top `n` members of one partition, keeping the ranked order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::{discretize, AttrValue, AttributeKind, Catalog};
use crate::entropy::select_diversification_dimension;
use crate::ranking::ScoredCandidate;

pub const DEFAULT_ROWS: usize = 3;
pub const DEFAULT_PER_ROW: usize = 3;

const MISSING_LABEL: &str = "Not listed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridItem {
    pub id: String,
    pub attributes: BTreeMap<String, AttrValue>,
    pub score: f64,
    pub selection_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub label: String,
    pub items: Vec<GridItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dimension: Option<String>,
    pub rows: Vec<GridRow>,
}

impl Grid {
    /// Row-major flattening: the list that top-k metrics are computed on.
    pub fn flatten(&self) -> Vec<&GridItem> {
        self.rows.iter().flat_map(|r| r.items.iter()).collect()
    }

    pub fn item_ids(&self) -> Vec<&str> {
        self.flatten().into_iter().map(|i| i.id.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(|r| r.items.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn grid_item(catalog: &Catalog, c: &ScoredCandidate) -> GridItem {
    GridItem {
        id: c.item_id.clone(),
        attributes: catalog.attribute_map(c.item).into_iter().collect(),
        score: c.relevance,
        selection_rank: c.selection_rank,
    }
}

fn display_label(value: &str) -> String {
    let mut chars = value.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Partitions `ranked` on `dimension` into at most `rows` rows of at most
/// `per_row` items. With no dimension, returns one unlabeled row holding the
/// top `rows * per_row` items.
pub fn bucket_grid(
    catalog: &Catalog,
    ranked: &[ScoredCandidate],
    dimension: Option<&str>,
    rows: usize,
    per_row: usize,
) -> Grid {
    let col = dimension.and_then(|d| catalog.schema().index_of(d));
    let (Some(dimension), Some(col)) = (dimension, col) else {
        let items = ranked
            .iter()
            .take(rows * per_row)
            .map(|c| grid_item(catalog, c))
            .collect();
        return Grid {
            dimension: None,
            rows: vec![GridRow {
                label: String::new(),
                items,
            }],
        };
    };

    // (key, label) per ranked position.
    let keys: Vec<(String, String)> = match catalog.schema().attributes()[col].kind {
        AttributeKind::Categorical => ranked
            .iter()
            .map(|c| match catalog.value(c.item, col) {
                AttrValue::Categorical(v) => (v.clone(), display_label(v)),
                _ => (String::new(), MISSING_LABEL.to_string()),
            })
            .collect(),
        AttributeKind::Continuous => {
            let members: Vec<usize> = ranked.iter().map(|c| c.item).collect();
            let binning = discretize(catalog, dimension, &members).expect("continuous dimension");
            (0..ranked.len())
                .map(|i| match binning.assignment[i] {
                    // Zero-padded bin index keeps value order in the key.
                    Some(b) => (format!("{b:02}"), binning.bins[b].label.clone()),
                    None => (String::new(), MISSING_LABEL.to_string()),
                })
                .collect()
        }
    };

    struct Partition<'a> {
        key: &'a str,
        label: &'a str,
        members: Vec<usize>,
    }
    let mut partitions: Vec<Partition> = Vec::new();
    for (pos, (key, label)) in keys.iter().enumerate() {
        match partitions.iter_mut().find(|p| p.key == key) {
            Some(p) => p.members.push(pos),
            None => partitions.push(Partition {
                key,
                label,
                members: vec![pos],
            }),
        }
    }
    // Partitions were created in order of their best-ranked member, so a
    // stable sort on (size desc, key) only needs the first-member tie-break
    // made explicit.
    partitions.sort_by(|a, b| {
        b.members
            .len()
            .cmp(&a.members.len())
            .then_with(|| a.members[0].cmp(&b.members[0]))
            .then_with(|| a.key.cmp(b.key))
    });

    let rows = partitions
        .into_iter()
        .take(rows)
        .map(|p| GridRow {
            label: p.label.to_string(),
            items: p
                .members
                .iter()
                .take(per_row)
                .map(|&pos| grid_item(catalog, &ranked[pos]))
                .collect(),
        })
        .collect();
    Grid {
        dimension: Some(dimension.to_string()),
        rows,
    }
}

/// Chooses the diversification dimension for `ranked` and buckets it.
pub fn present(
    catalog: &Catalog,
    specified: &[String],
    ranked: &[ScoredCandidate],
    rows: usize,
    per_row: usize,
) -> Grid {
    let members: Vec<usize> = ranked.iter().map(|c| c.item).collect();
    let dimension = select_diversification_dimension(catalog, &members, specified);
    bucket_grid(catalog, ranked, dimension.as_deref(), rows, per_row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{load_catalog, AttributeSchema, Schema};

    fn fuel_catalog(fuels: &[&str]) -> Catalog {
        let schema = Schema::new(vec![
            AttributeSchema::categorical("fuel", 0),
            AttributeSchema::continuous("price", Some("USD"), 1),
        ])
        .unwrap();
        let mut csv = String::from("id,fuel,price\n");
        for (i, f) in fuels.iter().enumerate() {
            csv.push_str(&format!("i{i},{f},{}\n", 10000 + 1000 * i));
        }
        load_catalog(csv.as_bytes(), schema).unwrap()
    }

    fn ranked_all(cat: &Catalog) -> Vec<ScoredCandidate> {
        (0..cat.len())
            .map(|i| ScoredCandidate {
                item: i,
                item_id: cat.item(i).id.clone(),
                relevance: 1.0 - i as f64 / 100.0,
                selection_rank: i + 1,
            })
            .collect()
    }

    #[test]
    fn partitions_by_size_then_rank() {
        let cat = fuel_catalog(&[
            "gas", "hybrid", "electric", "hybrid", "gas", "hybrid", "gas", "electric", "hybrid",
        ]);
        let ranked = ranked_all(&cat);
        let grid = bucket_grid(&cat, &ranked, Some("fuel"), 3, 3);
        let shape: Vec<(&str, usize)> = grid.rows.iter().map(|r| (r.label.as_str(), r.items.len())).collect();
        assert_eq!(shape, vec![("Hybrid", 3), ("Gas", 3), ("Electric", 2)]);
        assert_eq!(
            grid.rows[0].items.iter().map(|i| i.id.as_str()).collect::<Vec<_>>(),
            vec!["i1", "i3", "i5"]
        );
    }

    #[test]
    fn single_value_gives_one_row() {
        let cat = fuel_catalog(&["gas"; 5]);
        let grid = bucket_grid(&cat, &ranked_all(&cat), Some("fuel"), 3, 3);
        assert_eq!(grid.rows.len(), 1);
        assert_eq!(grid.rows[0].items.len(), 3);
    }

    #[test]
    fn only_largest_partitions_shown() {
        let cat = fuel_catalog(&["a", "b", "c", "d", "e", "a", "b"]);
        let grid = bucket_grid(&cat, &ranked_all(&cat), Some("fuel"), 3, 3);
        let labels: Vec<&str> = grid.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, vec!["A", "B", "C"]);
    }

    #[test]
    fn continuous_rows_use_bin_labels() {
        let cat = fuel_catalog(&["gas"; 9]);
        let grid = bucket_grid(&cat, &ranked_all(&cat), Some("price"), 3, 3);
        let labels: Vec<&str> = grid.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, vec!["$10K–$12K", "$13K–$15K", "$16K–$18K"]);
    }

    #[test]
    fn flat_fallback() {
        let cat = fuel_catalog(&["gas"; 12]);
        let ranked = ranked_all(&cat);
        let grid = bucket_grid(&cat, &ranked, None, 3, 3);
        assert_eq!(grid.dimension, None);
        assert_eq!(grid.rows.len(), 1);
        assert_eq!(grid.len(), 9);
        let all: Vec<String> = cat.schema().names().map(str::to_string).collect();
        let grid = present(&cat, &all, &ranked, 3, 3);
        assert_eq!(grid.dimension, None);
        assert_eq!(grid.len(), 9);
    }

    #[test]
    fn present_picks_high_entropy_dimension() {
        let cat = fuel_catalog(&["hybrid", "electric", "hybrid", "electric"]);
        // price is also spread; specify it so fuel is the only candidate.
        let grid = present(&cat, &["price".into()], &ranked_all(&cat), 3, 3);
        assert_eq!(grid.dimension.as_deref(), Some("fuel"));
        assert_eq!(grid.rows.len(), 2);
    }

    #[test]
    fn grid_json_round_trip() {
        let cat = fuel_catalog(&["hybrid", "electric", "gas"]);
        let grid = bucket_grid(&cat, &ranked_all(&cat), Some("fuel"), 3, 3);
        let json = serde_json::to_string(&grid).unwrap();
        let back: Grid = serde_json::from_str(&json).unwrap();
        assert_eq!(back, grid);
    }
}
