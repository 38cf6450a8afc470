//! Rational polyhedral complexes of dimension at most two: cells with recession rays,
//! cell classification, links, balancing and the seven-counter statistics.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::graph::Graph;
use crate::num::{self, fmt_q, parse_q, primitive, QVec, ZVec, Q};
use crate::{Error, Result};

/// A cell given by vertex indices into the ambient complex and primitive recession rays.
///
/// For an unbounded 2-cell the vertices form a path; `rays[0]` leaves the first vertex and
/// `rays[last]` leaves the last one (a single ray means both sides are parallel). Bounded
/// 2-cells list their vertices in cyclic order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub dim: usize,
    pub verts: Vec<usize>,
    pub rays: Vec<ZVec>,
    pub weight: i64,
}

/// Classes of cells used by the statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellTag {
    Vertex,
    BoundedEdge,
    Ray,
    Triangle,
    Square,
    OtherBounded,
    Flap,
    Cone,
    OtherUnbounded,
}

/// A one-dimensional face, keyed canonically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKey {
    Seg(usize, usize),
    Ray(usize, ZVec),
}

impl EdgeKey {
    pub fn seg(a: usize, b: usize) -> Self {
        if a < b {
            EdgeKey::Seg(a, b)
        } else {
            EdgeKey::Seg(b, a)
        }
    }

    pub fn contains_vertex(&self, v: usize) -> bool {
        match self {
            EdgeKey::Seg(a, b) => *a == v || *b == v,
            EdgeKey::Ray(a, _) => *a == v,
        }
    }
}

/// Seven counters of a tropical surface plus the count of bounded 2-cells that are neither
/// triangles nor quadrilaterals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SurfaceStats {
    pub vertices: usize,
    pub bounded_edges: usize,
    pub rays: usize,
    pub triangles: usize,
    pub squares: usize,
    pub other_bounded_2cells: usize,
    pub flaps: usize,
    pub cones: usize,
}

impl SurfaceStats {
    pub fn bounded_2cells(&self) -> usize {
        self.triangles + self.squares + self.other_bounded_2cells
    }

    pub fn as_tuple(&self) -> (usize, usize, usize, usize, usize, usize, usize, usize) {
        (
            self.vertices,
            self.bounded_edges,
            self.rays,
            self.triangles,
            self.squares,
            self.other_bounded_2cells,
            self.flaps,
            self.cones,
        )
    }

    pub fn from_tuple(t: (usize, usize, usize, usize, usize, usize, usize, usize)) -> Self {
        SurfaceStats {
            vertices: t.0,
            bounded_edges: t.1,
            rays: t.2,
            triangles: t.3,
            squares: t.4,
            other_bounded_2cells: t.5,
            flaps: t.6,
            cones: t.7,
        }
    }
}

impl std::fmt::Display for SurfaceStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "vertices={} bounded_edges={} rays={} triangles={} squares={} other_bounded={} flaps={} cones={}",
            self.vertices,
            self.bounded_edges,
            self.rays,
            self.triangles,
            self.squares,
            self.other_bounded_2cells,
            self.flaps,
            self.cones
        )
    }
}

/// A balancing failure at a codimension-one face.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub face: String,
    pub residual: Vec<String>,
}

/// A rational polyhedral complex of dimension at most two in `Q^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyComplex {
    pub ambient_dim: usize,
    pub vertices: Vec<QVec>,
    pub cells: Vec<Cell>,
}

/// Classifies a single cell by its vertex and recession data.
pub fn classify_cell(c: &Cell) -> Result<CellTag> {
    let nv = c.verts.len();
    let distinct_rays: BTreeSet<&ZVec> = c.rays.iter().collect();
    match c.dim {
        0 => {
            if nv == 1 && c.rays.is_empty() {
                Ok(CellTag::Vertex)
            } else {
                Err(Error::Structural(format!("0-cell with {nv} vertices and {} rays", c.rays.len())))
            }
        }
        1 => match (nv, c.rays.len()) {
            (2, 0) => Ok(CellTag::BoundedEdge),
            (1, 1) => Ok(CellTag::Ray),
            _ => Err(Error::Structural(format!("1-cell with {nv} vertices and {} rays", c.rays.len()))),
        },
        2 => {
            if c.rays.is_empty() {
                match nv {
                    0..=2 => Err(Error::Structural(format!("bounded 2-cell with {nv} vertices"))),
                    3 => Ok(CellTag::Triangle),
                    4 => Ok(CellTag::Square),
                    _ => Ok(CellTag::OtherBounded),
                }
            } else if nv == 0 {
                Err(Error::Structural("unbounded 2-cell without vertices".into()))
            } else if nv == 2 && distinct_rays.len() == 1 {
                Ok(CellTag::Flap)
            } else if nv == 1 && distinct_rays.len() == 2 {
                Ok(CellTag::Cone)
            } else if nv == 1 {
                Err(Error::Structural("2-cell with one vertex needs two rays".into()))
            } else {
                Ok(CellTag::OtherUnbounded)
            }
        }
        d => Err(Error::Structural(format!("cells of dimension {d} are not supported"))),
    }
}

/// Boundary one-faces of a 2-cell.
pub fn cell_edges(c: &Cell) -> Vec<EdgeKey> {
    let m = c.verts.len();
    let mut out = Vec::new();
    if c.rays.is_empty() {
        for i in 0..m {
            out.push(EdgeKey::seg(c.verts[i], c.verts[(i + 1) % m]));
        }
    } else {
        for i in 0..m.saturating_sub(1) {
            out.push(EdgeKey::seg(c.verts[i], c.verts[i + 1]));
        }
        let first = c.rays[0].clone();
        let last = c.rays[c.rays.len() - 1].clone();
        out.push(EdgeKey::Ray(c.verts[0], first));
        out.push(EdgeKey::Ray(c.verts[m - 1], last));
    }
    out
}

/// The primitive lattice normal of an edge with primitive direction `e` inside the plane
/// spanned by `e` and an inward integer direction `u`.
pub fn lattice_normal(e: &[i64], u: &[i64]) -> ZVec {
    // index of Z e + Z u inside its saturation
    let mut g = 0i64;
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            g = num::gcd_i64(g, e[i] * u[j] - e[j] * u[i]);
        }
    }
    assert!(g > 0, "edge direction and inward direction are parallel");
    for a in 0..g {
        let w: Vec<i64> = u.iter().zip(e).map(|(x, y)| x - a * y).collect();
        if w.iter().all(|x| x % g == 0) {
            return w.iter().map(|x| x / g).collect();
        }
    }
    unreachable!("saturation shift not found")
}

impl PolyComplex {
    pub fn new(ambient_dim: usize) -> Self {
        PolyComplex { ambient_dim, vertices: Vec::new(), cells: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.cells.iter().map(|c| c.dim).max().unwrap_or(0)
    }

    pub fn top_cells(&self) -> impl Iterator<Item = &Cell> {
        let d = self.dim();
        self.cells.iter().filter(move |c| c.dim == d)
    }

    /// Every one-face of the complex: explicit 1-cells together with boundaries of 2-cells.
    pub fn edge_keys(&self) -> BTreeSet<EdgeKey> {
        let mut out = BTreeSet::new();
        for c in &self.cells {
            match c.dim {
                1 => {
                    if c.rays.is_empty() {
                        out.insert(EdgeKey::seg(c.verts[0], c.verts[1]));
                    } else {
                        out.insert(EdgeKey::Ray(c.verts[0], c.rays[0].clone()));
                    }
                }
                2 => out.extend(cell_edges(c)),
                _ => {}
            }
        }
        out
    }

    pub fn vertex_set(&self) -> BTreeSet<usize> {
        self.cells.iter().flat_map(|c| c.verts.iter().copied()).collect()
    }

    /// Exact cell counts per class.
    pub fn stats(&self) -> Result<SurfaceStats> {
        let mut s = SurfaceStats { vertices: self.vertex_set().len(), ..Default::default() };
        for e in self.edge_keys() {
            match e {
                EdgeKey::Seg(..) => s.bounded_edges += 1,
                EdgeKey::Ray(..) => s.rays += 1,
            }
        }
        for c in self.cells.iter().filter(|c| c.dim == 2) {
            match classify_cell(c)? {
                CellTag::Triangle => s.triangles += 1,
                CellTag::Square => s.squares += 1,
                CellTag::OtherBounded => s.other_bounded_2cells += 1,
                CellTag::Flap => s.flaps += 1,
                CellTag::Cone => s.cones += 1,
                CellTag::OtherUnbounded => {
                    return Err(Error::NonGeneric("unbounded 2-cell that is neither a flap nor a cone".into()))
                }
                _ => unreachable!(),
            }
        }
        Ok(s)
    }

    /// Per-class tags of the 2-cells, reporting `other_unbounded` instead of failing.
    pub fn tags(&self) -> Result<Vec<CellTag>> {
        self.cells.iter().map(classify_cell).collect()
    }

    /// Link of a vertex: nodes are the 1-faces at `v`, edges the 2-cells at `v`.
    pub fn link_at_vertex(&self, v: usize) -> Result<Graph> {
        if !self.vertex_set().contains(&v) {
            return Err(Error::Lookup(format!("{v} is not a vertex")));
        }
        let faces: Vec<EdgeKey> = self.edge_keys().into_iter().filter(|e| e.contains_vertex(v)).collect();
        let index: BTreeMap<&EdgeKey, usize> = faces.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let names = faces
            .iter()
            .map(|e| match e {
                EdgeKey::Seg(a, b) => format!("s{}", if *a == v { b } else { a }),
                EdgeKey::Ray(_, r) => format!("r{r:?}"),
            })
            .collect();
        let mut g = Graph::new(names);
        for c in self.cells.iter().filter(|c| c.dim == 2 && c.verts.contains(&v)) {
            let at: Vec<usize> = cell_edges(c)
                .iter()
                .filter(|e| e.contains_vertex(v))
                .map(|e| index[e])
                .collect();
            if at.len() != 2 {
                return Err(Error::Structural(format!("2-cell meets vertex {v} in {} faces", at.len())));
            }
            g.add_edge(at[0], at[1]);
        }
        Ok(g)
    }

    fn direction_of(&self, e: &EdgeKey) -> ZVec {
        match e {
            EdgeKey::Seg(a, b) => num::primitive_of_q(&num::vsub(&self.vertices[*b], &self.vertices[*a])),
            EdgeKey::Ray(_, r) => r.clone(),
        }
    }

    /// An integer direction from the edge `e` into the 2-cell `c`.
    fn inward(&self, c: &Cell, e: &EdgeKey) -> ZVec {
        let base = match e {
            EdgeKey::Seg(a, _) | EdgeKey::Ray(a, _) => self.vertices[*a].clone(),
        };
        let edir: QVec = num::qz(&self.direction_of(e));
        for &w in &c.verts {
            let d = num::vsub(&self.vertices[w], &base);
            if num::parallel_factor(&d, &edir).is_none() && d.iter().any(|x| !x.is_zero()) {
                return num::primitive_of_q(&d);
            }
        }
        for r in &c.rays {
            let d = num::qz(r);
            if num::parallel_factor(&d, &edir).is_none() {
                return r.clone();
            }
        }
        panic!("degenerate 2-cell")
    }

    /// Checks the balancing condition at every codimension-one face.
    pub fn check_balanced(&self) -> (bool, Vec<Violation>) {
        let mut violations = Vec::new();
        match self.dim() {
            2 => {
                let mut incident: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
                for (i, c) in self.cells.iter().enumerate().filter(|(_, c)| c.dim == 2) {
                    for e in cell_edges(c) {
                        incident.entry(e).or_default().push(i);
                    }
                }
                for (e, cells) in &incident {
                    let dir = self.direction_of(e);
                    let mut sum = vec![0i64; self.ambient_dim];
                    for &ci in cells {
                        let c = &self.cells[ci];
                        let n = lattice_normal(&dir, &self.inward(c, e));
                        for (s, x) in sum.iter_mut().zip(&n) {
                            *s += c.weight * x;
                        }
                    }
                    let ok = sum.iter().all(|x| *x == 0) || num::parallel_factor(&num::qz(&sum), &num::qz(&dir)).is_some();
                    if !ok {
                        violations.push(Violation {
                            face: format!("{e:?}"),
                            residual: sum.iter().map(|x| x.to_string()).collect(),
                        });
                    }
                }
            }
            1 => {
                let mut at: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
                for c in self.cells.iter().filter(|c| c.dim == 1) {
                    if c.rays.is_empty() {
                        let (a, b) = (c.verts[0], c.verts[1]);
                        let d = num::primitive_of_q(&num::vsub(&self.vertices[b], &self.vertices[a]));
                        for (v, s) in [(a, 1i64), (b, -1i64)] {
                            let entry = at.entry(v).or_insert_with(|| vec![0; self.ambient_dim]);
                            for (x, y) in entry.iter_mut().zip(&d) {
                                *x += s * c.weight * y;
                            }
                        }
                    } else {
                        let entry = at.entry(c.verts[0]).or_insert_with(|| vec![0; self.ambient_dim]);
                        for (x, y) in entry.iter_mut().zip(&c.rays[0]) {
                            *x += c.weight * y;
                        }
                    }
                }
                for (v, sum) in at {
                    if sum.iter().any(|x| *x != 0) {
                        violations.push(Violation {
                            face: format!("vertex {v}"),
                            residual: sum.iter().map(|x| x.to_string()).collect(),
                        });
                    }
                }
            }
            _ => {}
        }
        (violations.is_empty(), violations)
    }

    /// Renumbers vertices lexicographically and sorts cells, giving a canonical byte form.
    pub fn canonicalize(&mut self) {
        let mut order: Vec<usize> = (0..self.vertices.len()).collect();
        order.sort_by(|&a, &b| num::cmp_qvec(&self.vertices[a], &self.vertices[b]));
        let mut new_index = vec![usize::MAX; self.vertices.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        self.vertices = order.iter().map(|&i| self.vertices[i].clone()).collect();
        for c in &mut self.cells {
            for v in &mut c.verts {
                *v = new_index[*v];
            }
            canonical_cell_order(c);
        }
        self.cells.sort();
        self.cells.dedup();
    }

    pub fn to_json(&self) -> serde_json::Value {
        let verts: Vec<Vec<String>> = self.vertices.iter().map(|v| v.iter().map(fmt_q).collect()).collect();
        let cells: Vec<serde_json::Value> = self
            .cells
            .iter()
            .map(|c| {
                serde_json::json!({
                    "dim": c.dim,
                    "verts": c.verts,
                    "rays": c.rays,
                    "weight": c.weight,
                })
            })
            .collect();
        serde_json::json!({ "ambient_dim": self.ambient_dim, "vertices": verts, "cells": cells })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct CellJ {
            dim: usize,
            verts: Vec<usize>,
            #[serde(default)]
            rays: Vec<ZVec>,
            #[serde(default = "one")]
            weight: i64,
        }
        fn one() -> i64 {
            1
        }
        #[derive(Deserialize)]
        struct PcJ {
            ambient_dim: usize,
            vertices: Vec<Vec<String>>,
            cells: Vec<CellJ>,
        }
        let pc: PcJ = serde_json::from_value(v.clone())?;
        let vertices = pc
            .vertices
            .iter()
            .map(|row| row.iter().map(|s| parse_q(s)).collect::<Result<QVec>>())
            .collect::<Result<Vec<_>>>()?;
        for row in &vertices {
            if row.len() != pc.ambient_dim {
                return Err(Error::Structural("vertex coordinate count differs from ambient dimension".into()));
            }
        }
        let cells = pc
            .cells
            .into_iter()
            .map(|c| Cell { dim: c.dim, verts: c.verts, rays: c.rays, weight: c.weight })
            .collect::<Vec<_>>();
        for c in &cells {
            if c.verts.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Structural("cell refers to a missing vertex".into()));
            }
        }
        Ok(PolyComplex { ambient_dim: pc.ambient_dim, vertices, cells })
    }

    /// Applies `x ↦ A x + b` with an integer matrix `A` (rows) to every vertex and ray.
    pub fn map_affine(&self, a: &[ZVec], b: &[Q]) -> PolyComplex {
        let apply = |v: &QVec| -> QVec {
            a.iter().zip(b).map(|(row, bi)| num::dot_zq(row, v) + bi).collect()
        };
        let applyz = |r: &ZVec| -> ZVec {
            primitive(&a.iter().map(|row| row.iter().zip(r).map(|(x, y)| x * y).sum()).collect::<Vec<i64>>())
        };
        PolyComplex {
            ambient_dim: a.len(),
            vertices: self.vertices.iter().map(apply).collect(),
            cells: self
                .cells
                .iter()
                .map(|c| Cell { dim: c.dim, verts: c.verts.clone(), rays: c.rays.iter().map(applyz).collect(), weight: c.weight })
                .collect(),
        }
    }
}

/// Rotates/reflects the vertex list of a 2-cell into a canonical position.
fn canonical_cell_order(c: &mut Cell) {
    if c.dim != 2 || c.verts.len() < 2 {
        if c.dim == 2 && c.rays.len() == 2 && c.rays[0] > c.rays[1] {
            c.rays.swap(0, 1);
        }
        return;
    }
    if c.rays.is_empty() {
        let m = c.verts.len();
        let start = (0..m).min_by_key(|&i| c.verts[i]).unwrap();
        let fwd: Vec<usize> = (0..m).map(|k| c.verts[(start + k) % m]).collect();
        let bwd: Vec<usize> = (0..m).map(|k| c.verts[(start + m - k) % m]).collect();
        c.verts = fwd.min(bwd);
    } else {
        let first = c.verts[0];
        let last = *c.verts.last().unwrap();
        if last < first {
            c.verts.reverse();
            c.rays.reverse();
        }
    }
}

/// Inner angle test at a vertex: whether `b` turns left of `a` (positive cross product).
pub fn turns_left(a: &[Q], b: &[Q]) -> bool {
    num::cross2(a, b).is_positive()
}

/// Rays and two-dimensional cones of a pure 2-dimensional fan, cones as index pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fan2 {
    pub rays: Vec<ZVec>,
    pub cones: BTreeSet<(usize, usize)>,
}

impl Fan2 {
    /// The fan of a complex whose cells are cones at one apex.
    pub fn of_complex(c: &PolyComplex) -> Result<Fan2> {
        let mut rays: Vec<ZVec> = Vec::new();
        let index = |r: &ZVec, rays: &mut Vec<ZVec>| match rays.iter().position(|x| x == r) {
            Some(i) => i,
            None => {
                rays.push(r.clone());
                rays.len() - 1
            }
        };
        let mut cones = BTreeSet::new();
        for cell in c.cells.iter().filter(|x| x.dim == 2) {
            if classify_cell(cell)? != CellTag::Cone {
                return Err(Error::Structural("complex is not a fan".into()));
            }
            let (a, b) = (index(&cell.rays[0], &mut rays), index(&cell.rays[1], &mut rays));
            cones.insert((a.min(b), a.max(b)));
        }
        Ok(Fan2 { rays, cones })
    }
}

/// An integer matrix `M` with `det M = ±1` carrying the rays of `a` bijectively onto the rays
/// of `b` and cones onto cones, if one exists. Both fans must have full-rank rays in the same
/// ambient dimension.
pub fn unimodular_fan_map(a: &Fan2, b: &Fan2) -> Option<Vec<ZVec>> {
    let n = a.rays.first()?.len();
    if a.rays.len() != b.rays.len() || a.cones.len() != b.cones.len() || b.rays.iter().any(|r| r.len() != n) {
        return None;
    }
    // a basis of the rays of a, chosen greedily
    let mut basis: Vec<usize> = Vec::new();
    for i in 0..a.rays.len() {
        let mut rows: Vec<QVec> = basis.iter().map(|&j| num::qz(&a.rays[j])).collect();
        rows.push(num::qz(&a.rays[i]));
        if num::rank(&rows) == rows.len() {
            basis.push(i);
        }
    }
    if basis.len() != n {
        return None;
    }
    let adj = |f: &Fan2, x: usize, y: usize| f.cones.contains(&(x.min(y), x.max(y)));
    let m = a.rays.len();
    let mut phi: Vec<usize> = Vec::new();
    let mut used = vec![false; m];
    fn search(
        a: &Fan2,
        b: &Fan2,
        basis: &[usize],
        phi: &mut Vec<usize>,
        used: &mut [bool],
        adj: &dyn Fn(&Fan2, usize, usize) -> bool,
    ) -> Option<Vec<ZVec>> {
        let i = phi.len();
        if i == a.rays.len() {
            return matrix_for(a, b, basis, phi);
        }
        for j in 0..b.rays.len() {
            if used[j] || (0..i).any(|k| adj(a, k, i) != adj(b, phi[k], j)) {
                continue;
            }
            used[j] = true;
            phi.push(j);
            if let Some(mat) = search(a, b, basis, phi, used, adj) {
                return Some(mat);
            }
            phi.pop();
            used[j] = false;
        }
        None
    }
    search(a, b, &basis, &mut phi, &mut used, &adj)
}

fn matrix_for(a: &Fan2, b: &Fan2, basis: &[usize], phi: &[usize]) -> Option<Vec<ZVec>> {
    let n = basis.len();
    let rows: Vec<QVec> = basis.iter().map(|&i| num::qz(&a.rays[i])).collect();
    let mut mat: Vec<ZVec> = Vec::with_capacity(n);
    for k in 0..n {
        let rhs: Vec<Q> = basis.iter().map(|&i| num::q(b.rays[phi[i]][k])).collect();
        let (x, _) = num::solve_linear(&rows, &rhs)?;
        mat.push(x.iter().map(num::to_i64).collect::<Option<ZVec>>()?);
    }
    let det = num::det_q(&mat.iter().map(|r| num::qz(r)).collect::<Vec<_>>());
    if det.abs() != num::q(1) {
        return None;
    }
    for (i, r) in a.rays.iter().enumerate() {
        let img: ZVec = mat.iter().map(|row| row.iter().zip(r).map(|(x, y)| x * y).sum()).collect();
        if img != b.rays[phi[i]] {
            return None;
        }
    }
    Some(mat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{qz, q};

    fn cell2(verts: Vec<usize>, rays: Vec<ZVec>) -> Cell {
        Cell { dim: 2, verts, rays, weight: 1 }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_cell(&cell2(vec![0], vec![vec![1, 0], vec![0, 1]])).unwrap(), CellTag::Cone);
        assert_eq!(classify_cell(&cell2(vec![0, 1], vec![vec![0, 1]])).unwrap(), CellTag::Flap);
        assert_eq!(classify_cell(&cell2(vec![0, 1, 2], vec![])).unwrap(), CellTag::Triangle);
        assert!(classify_cell(&Cell { dim: 1, verts: vec![0, 1, 2], rays: vec![], weight: 1 }).is_err());
    }

    fn standard_line(with_all: bool) -> PolyComplex {
        let mut pc = PolyComplex::new(2);
        pc.vertices.push(qz(&[0, 0]));
        let mut rays = vec![vec![-1, 0], vec![0, -1], vec![1, 1]];
        if !with_all {
            rays.pop();
        }
        for r in rays {
            pc.cells.push(Cell { dim: 1, verts: vec![0], rays: vec![r], weight: 1 });
        }
        pc
    }

    #[test]
    fn balancing_of_tropical_line() {
        assert!(standard_line(true).check_balanced().0);
        let (ok, v) = standard_line(false).check_balanced();
        assert!(!ok);
        assert_eq!(v.len(), 1);
    }

    #[test]
    fn balanced_plane_quadrants() {
        let mut pc = PolyComplex::new(2);
        pc.vertices.push(qz(&[0, 0]));
        let dirs = [vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1]];
        for i in 0..4 {
            pc.cells.push(cell2(vec![0], vec![dirs[i].clone(), dirs[(i + 1) % 4].clone()]));
        }
        assert!(pc.check_balanced().0);
        let link = pc.link_at_vertex(0).unwrap();
        assert_eq!(link.n(), 4);
        assert_eq!(link.edges.len(), 4);
        let s = pc.stats().unwrap();
        assert_eq!(s.as_tuple(), (1, 0, 4, 0, 0, 0, 0, 4));
    }

    #[test]
    fn lattice_normal_in_skew_plane() {
        // plane spanned by (1,0,1) and (0,1,1) contains the edge direction (1,0,1)
        let n = lattice_normal(&[1, 0, 1], &[0, 2, 2]);
        assert_eq!(n, vec![0, 1, 1]);
        let n = lattice_normal(&[1, 1], &[1, -1]);
        assert!(n == vec![1, 0] || n == vec![0, -1]);
        let _ = q(0);
    }

    #[test]
    fn json_round_trip() {
        let mut pc = standard_line(true);
        pc.vertices[0] = vec![num::qf(1, 2), q(-3)];
        let j = pc.to_json();
        let back = PolyComplex::from_json(&j).unwrap();
        assert_eq!(back, pc);
    }

    #[test]
    fn fan_maps_respect_the_lattice() {
        let quad = |rays: Vec<ZVec>| Fan2 { rays, cones: [(0, 1), (1, 2), (2, 3), (0, 3)].into_iter().collect() };
        let std = quad(vec![vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1]]);
        let sheared = quad(vec![vec![1, 1], vec![0, 1], vec![-1, -1], vec![0, -1]]);
        let doubled = quad(vec![vec![1, 1], vec![-1, 1], vec![-1, -1], vec![1, -1]]);
        assert!(unimodular_fan_map(&std, &sheared).is_some());
        assert!(unimodular_fan_map(&std, &doubled).is_none());
    }
}
