//! The table of combinatorial types of tropical cubic surfaces, shipped as data, and
//! field-by-field comparison of computed statistics against its rows.

use serde::{Deserialize, Serialize};

use crate::polyhedra::SurfaceStats;
use crate::{Error, Result};

const TABLE: &str = include_str!("../data/table1.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenRow {
    #[serde(rename = "type")]
    pub name: String,
    pub cones_in_moduli: usize,
    pub vertices: usize,
    pub edges: usize,
    pub rays: usize,
    pub triangles: usize,
    pub squares: usize,
    pub flaps: usize,
    pub cones: usize,
}

/// One differing field: name, produced value, expected value.
pub type FieldDiff = (&'static str, usize, usize);

pub fn table1() -> Vec<GoldenRow> {
    serde_json::from_str(TABLE).expect("bundled table parses")
}

pub fn row(name: &str) -> Result<GoldenRow> {
    table1()
        .into_iter()
        .find(|r| r.name == name)
        .ok_or_else(|| Error::Lookup(format!("no table row named {name}")))
}

/// Exact comparison over the seven counted fields; bounded 2-cells other than triangles and
/// quadrilaterals never occur in the table, so a nonzero count is reported as a difference.
pub fn golden_compare(s: &SurfaceStats, r: &GoldenRow) -> Vec<FieldDiff> {
    let pairs = [
        ("vertices", s.vertices, r.vertices),
        ("edges", s.bounded_edges, r.edges),
        ("rays", s.rays, r.rays),
        ("triangles", s.triangles, r.triangles),
        ("squares", s.squares, r.squares),
        ("other_bounded", s.other_bounded_2cells, 0),
        ("flaps", s.flaps, r.flaps),
        ("cones", s.cones, r.cones),
    ];
    pairs.into_iter().filter(|(_, a, b)| a != b).collect()
}

/// Names of all rows the statistics match exactly.
pub fn matching_rows(s: &SurfaceStats) -> Vec<String> {
    table1().into_iter().filter(|r| golden_compare(s, r).is_empty()).map(|r| r.name).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shape() {
        let t = table1();
        assert_eq!(t.len(), 24);
        assert!(t.iter().all(|r| r.cones == 135));
        // the bounded part is contractible: V - E + F = 1
        for r in &t {
            assert_eq!(r.vertices + r.triangles + r.squares, r.edges + 1, "{}", r.name);
        }
    }

    #[test]
    fn rows_differ() {
        let a = row("a").unwrap();
        let b = row("b").unwrap();
        let sb = SurfaceStats::from_tuple((12, 21, 81, 10, 0, 0, 54, 135));
        assert!(golden_compare(&sb, &b).is_empty());
        assert_eq!(golden_compare(&sb, &a).len(), 5);
        assert_eq!(matching_rows(&sb), vec!["b".to_string()]);
        assert!(row("zz").is_err());
    }
}
