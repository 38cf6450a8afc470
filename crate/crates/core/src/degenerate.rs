//! Degenerate tropical cubic surfaces built directly from root-system data: the cone over
//! the Schläfli graph and the two stable fibers over the rays of type (a) and (b).
//!
//! Every complex lives in `R^27 / R^7`, the space of line coordinates modulo the Picard
//! torus. That quotient is identified with `Z^20` by killing the coordinates of the seven
//! lines `E1..E6, F12`, whose classes form a lattice basis of the Picard group. The bounded
//! part is placed by balancing along the rays: an edge carrying the flap of a line `L` at a
//! vertex `v` points along minus the sum of the rays that bound a cone with `L` at `v`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::Zero;

use crate::coxideal::{grade, Var};
use crate::modification::{DelPezzoSurface, Surface};
use crate::num::{self, q, to_i64, QVec, ZVec, Q};
use crate::polyhedra::{Cell, PolyComplex};
use crate::rootsys::{
    a2_cubed_systems, canonical_a2_cubed, double_six, lines, lines_meet, orthogonal_lines, root_of_line, A2Block,
    LineLabel, RootSystem, RootVector,
};
use crate::trees::MetricTree;
use crate::{Error, Result};

/// Which degenerate surface to build, with the root data it needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DegenerateSpec {
    Zero,
    /// A positive root of E6.
    A(RootVector),
    /// Three mutually orthogonal A2 blocks of E6.
    B([A2Block; 3]),
}

impl DegenerateSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            DegenerateSpec::Zero => "0",
            DegenerateSpec::A(_) => "a",
            DegenerateSpec::B(_) => "b",
        }
    }

    pub fn build(&self) -> Result<DelPezzoSurface> {
        match self {
            DegenerateSpec::Zero => build_type_zero(),
            DegenerateSpec::A(r) => build_type_a(r),
            DegenerateSpec::B(s) => build_type_b(s),
        }
    }
}

const BASIS: [LineLabel; 7] = [
    LineLabel::E(1),
    LineLabel::E(2),
    LineLabel::E(3),
    LineLabel::E(4),
    LineLabel::E(5),
    LineLabel::E(6),
    LineLabel::F(1, 2),
];

/// Images of the 27 coordinate directions in `Z^20 = Z^27 / (Picard lattice)`.
pub fn line_rays() -> Result<BTreeMap<LineLabel, ZVec>> {
    let all = lines(3)?;
    let class = |l: LineLabel| grade(Var::L(l), 3);
    let free: Vec<LineLabel> = all.iter().copied().filter(|l| !BASIS.contains(l)).collect();
    let rows: Vec<QVec> = BASIS.iter().map(|b| class(*b).map(|c| num::qz(&c))).collect::<Result<_>>()?;
    let mut out = BTreeMap::new();
    for l in &all {
        let v: ZVec = if let Some(k) = BASIS.iter().position(|b| b == l) {
            // y with <y, class(b)> = delta_{kb}; the representative e_l - A^T y has no basis entries
            let rhs: Vec<Q> = (0..BASIS.len()).map(|i| q((i == k) as i64)).collect();
            let (y, free_dim) = num::solve_linear(&rows, &rhs).ok_or_else(|| Error::Consistency("line basis is singular".into()))?;
            if free_dim != 0 {
                return Err(Error::Consistency("line basis is singular".into()));
            }
            free.iter()
                .map(|n| {
                    let c = class(*n)?;
                    let x = -num::dot_zq(&c, &y);
                    to_i64(&x).ok_or_else(|| Error::Consistency("line basis is not unimodular".into()))
                })
                .collect::<Result<_>>()?
        } else {
            free.iter().map(|n| (n == l) as i64).collect()
        };
        out.insert(*l, v);
    }
    Ok(out)
}

/// Combinatorial input: vertex names, bounded edges, triangles and the lines whose rays
/// leave each vertex.
struct Layout {
    names: Vec<String>,
    edges: Vec<(usize, usize)>,
    triangles: Vec<[usize; 3]>,
    rays_at: Vec<Vec<LineLabel>>,
}

fn add(a: &mut [Q], b: &[i64], s: i64) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += q(s * y);
    }
}

fn realize(layout: &Layout) -> Result<DelPezzoSurface> {
    let rays = line_rays()?;
    let n = layout.names.len();
    let dim = 20;
    let meets = |a: LineLabel, b: LineLabel| a != b && lines_meet(a, b, 3);

    let mut cone_pairs: BTreeMap<(LineLabel, LineLabel), usize> = BTreeMap::new();
    for (v, ls) in layout.rays_at.iter().enumerate() {
        for (i, a) in ls.iter().enumerate() {
            for b in &ls[i + 1..] {
                if meets(*a, *b) {
                    let key = if a < b { (*a, *b) } else { (*b, *a) };
                    if cone_pairs.insert(key, v).is_some() {
                        return Err(Error::Consistency(format!("lines {a} and {b} span cones at two vertices")));
                    }
                }
            }
        }
    }
    let flaps: Vec<(usize, usize, LineLabel)> = layout
        .edges
        .iter()
        .flat_map(|&(u, v)| {
            layout.rays_at[u].iter().filter(move |l| layout.rays_at[v].contains(l)).map(move |l| (u, v, *l))
        })
        .collect();

    // direction of a flap edge seen from vertex v for the line l
    let step = |v: usize, l: LineLabel| -> QVec {
        let mut d = vec![Q::zero(); dim];
        for m in &layout.rays_at[v] {
            if meets(l, *m) {
                add(&mut d, &rays[m], -1);
            }
        }
        d
    };
    let single = |v: usize, l: LineLabel| flaps.iter().filter(|(a, b, m)| *m == l && (*a == v || *b == v)).count() == 1;
    let mut pos: Vec<Option<QVec>> = vec![None; n];
    pos[0] = Some(vec![Q::zero(); dim]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for &(a, b, l) in &flaps {
            let u = if a == v {
                b
            } else if b == v {
                a
            } else {
                continue;
            };
            if pos[u].is_some() {
                continue;
            }
            let here = pos[v].as_ref().unwrap();
            if single(v, l) {
                pos[u] = Some(num::vadd(here, &step(v, l)));
            } else if single(u, l) {
                pos[u] = Some(num::vsub(here, &step(u, l)));
            } else {
                continue;
            }
            queue.push_back(u);
        }
    }
    let vertices: Vec<QVec> = pos
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| Error::Realization(format!("vertex {} is not placed by flap edges", layout.names[i]))))
        .collect::<Result<_>>()?;
    // balancing along every ray, flaps at both ends included
    for (v, ls) in layout.rays_at.iter().enumerate() {
        for l in ls {
            let mut sum = num::vscale(&step(v, *l), &q(-1));
            for &(a, b, m) in &flaps {
                if m == *l && (a == v || b == v) {
                    let u = if a == v { b } else { a };
                    sum = num::vadd(&sum, &num::vsub(&vertices[u], &vertices[v]));
                }
            }
            if sum.iter().any(|x| !x.is_zero()) && num::parallel_factor(&sum, &num::qz(&rays[l])).is_none() {
                return Err(Error::Realization(format!("the ray of {l} at {} is not balanced", layout.names[v])));
            }
        }
    }

    let mut complex = PolyComplex::new(dim);
    complex.vertices = vertices.clone();
    for v in 0..n {
        complex.cells.push(Cell { dim: 0, verts: vec![v], rays: vec![], weight: 1 });
        for l in &layout.rays_at[v] {
            complex.cells.push(Cell { dim: 1, verts: vec![v], rays: vec![rays[l].clone()], weight: 1 });
        }
    }
    for &(u, v) in &layout.edges {
        complex.cells.push(Cell { dim: 1, verts: vec![u, v], rays: vec![], weight: 1 });
    }
    for t in &layout.triangles {
        complex.cells.push(Cell { dim: 2, verts: t.to_vec(), rays: vec![], weight: 1 });
    }
    for (u, v, l) in &flaps {
        complex.cells.push(Cell { dim: 2, verts: vec![*u, *v], rays: vec![rays[l].clone()], weight: 1 });
    }
    for ((a, b), v) in &cone_pairs {
        complex.cells.push(Cell { dim: 2, verts: vec![*v], rays: vec![rays[a].clone(), rays[b].clone()], weight: 1 });
    }
    complex.canonicalize();
    let stats = complex.stats()?;

    let mut trees = BTreeMap::new();
    for l in lines(3)? {
        let mut t = MetricTree::default();
        let mut node: BTreeMap<usize, usize> = BTreeMap::new();
        for (v, ls) in layout.rays_at.iter().enumerate() {
            if ls.contains(&l) {
                node.insert(v, t.add_internal());
            }
        }
        for (u, v, m) in &flaps {
            if *m == l {
                t.add_edge(node[u], node[v], Some(edge_length(&vertices[*u], &vertices[*v])));
            }
        }
        for ((a, b), v) in &cone_pairs {
            let other = if *a == l {
                *b
            } else if *b == l {
                *a
            } else {
                continue;
            };
            let leaf = t.add_leaf(other);
            t.add_edge(node[v], leaf, None);
        }
        t.suppress_degree_two();
        trees.insert(l, t);
    }
    Ok(DelPezzoSurface {
        degree: 3,
        p5: None,
        p6: None,
        scale: 1,
        surface: Surface::empty(dim),
        complex,
        ray_labels: rays,
        trees,
        curve_trees: BTreeMap::new(),
        stats,
    })
}

/// Lattice length of the segment `uv`.
fn edge_length(u: &[Q], v: &[Q]) -> Q {
    let d = num::vsub(v, u);
    let p = num::primitive_of_q(&d);
    let i = p.iter().position(|x| *x != 0).expect("edge of positive length");
    &d[i] / q(p[i])
}

/// The cone over the Schläfli graph: one vertex and a 2-cone for each pair of meeting lines.
pub fn build_type_zero() -> Result<DelPezzoSurface> {
    let layout = Layout {
        names: vec!["O".into()],
        edges: vec![],
        triangles: vec![],
        rays_at: vec![lines(3)?],
    };
    realize(&layout)
}

fn check_root(r: &RootVector) -> Result<RootVector> {
    let e6 = RootSystem::e6();
    if r.m() != 6 || !e6.is_root(r) {
        return Err(Error::Domain(format!("{r} is not a root of E6")));
    }
    Ok(r.positive())
}

fn orthogonal(a: LineLabel, b: LineLabel) -> Result<bool> {
    Ok(root_of_line(a)?.ip(&root_of_line(b)?) == Some(0))
}

/// Vertex ray sets of the type (a) fiber: `P`, `Q`, then one outer vertex per double-six pair.
pub fn type_a_rays(r: &RootVector) -> Result<Vec<(String, Vec<LineLabel>)>> {
    let r = check_root(r)?;
    let pairs = double_six(&r)?;
    let orth = orthogonal_lines(&r);
    let mut out = vec![
        ("P".to_string(), orth.clone()),
        ("Q".to_string(), pairs.iter().flat_map(|(a, b)| [*a, *b]).collect::<BTreeSet<_>>().into_iter().collect()),
    ];
    for (a, b) in &pairs {
        let mut ls = vec![*a, *b];
        for l in lines(3)? {
            if l != *a && l != *b && orthogonal(l, *a)? && orthogonal(l, *b)? {
                ls.push(l);
            }
        }
        if ls.len() != 7 {
            return Err(Error::Consistency(format!("outer vertex {a},{b} has {} rays", ls.len())));
        }
        out.push((format!("{a},{b}"), ls));
    }
    Ok(out)
}

/// Six triangles `PQV` on the edge `PQ`, one per double-six pair of `r`.
pub fn build_type_a(r: &RootVector) -> Result<DelPezzoSurface> {
    let verts = type_a_rays(r)?;
    let k = verts.len();
    let mut edges = vec![(0, 1)];
    let mut triangles = Vec::new();
    for v in 2..k {
        edges.push((0, v));
        edges.push((1, v));
        triangles.push([0, 1, v]);
    }
    let (names, rays_at) = verts.into_iter().unzip();
    realize(&Layout { names, edges, triangles, rays_at })
}

fn check_system(s: &[A2Block; 3]) -> Result<[A2Block; 3]> {
    let c = canonical_a2_cubed(s);
    if !a2_cubed_systems().contains(&c) {
        return Err(Error::Domain("not three mutually orthogonal A2 blocks of E6".into()));
    }
    Ok(c)
}

/// Vertex ray sets of the type (b) fiber: `P1, P2, P3`, then the pendant vertex of each root
/// of block `i`, attached to the edge opposite `P_i`.
pub fn type_b_rays(s: &[A2Block; 3]) -> Result<Vec<(String, Vec<LineLabel>)>> {
    let s = check_system(s)?;
    let roots: Vec<(LineLabel, RootVector)> = crate::rootsys::line_roots();
    let orth_all = |rs: &[RootVector]| -> Vec<LineLabel> {
        roots
            .iter()
            .filter(|(_, a)| rs.iter().all(|r| a.ip(&r.widen(7)) == Some(0)))
            .map(|(l, _)| *l)
            .collect()
    };
    let mut out = Vec::new();
    for (i, b) in s.iter().enumerate() {
        out.push((format!("P{}", i + 1), orth_all(b)));
    }
    for b in &s {
        for (j, r) in b.iter().enumerate() {
            let others: Vec<RootVector> = (0..3).filter(|x| *x != j).map(|x| b[x].widen(7)).collect();
            let ls: Vec<LineLabel> = roots
                .iter()
                .filter(|(_, a)| a.ip(&r.widen(7)) == Some(0) && others.iter().all(|o| a.ip(o) != Some(0)))
                .map(|(l, _)| *l)
                .collect();
            out.push((r.to_string(), ls));
        }
    }
    Ok(out)
}

/// A central triangle `P1P2P3` with three triangles on each edge.
pub fn build_type_b(s: &[A2Block; 3]) -> Result<DelPezzoSurface> {
    let verts = type_b_rays(s)?;
    let mut edges = vec![(0, 1), (0, 2), (1, 2)];
    let mut triangles = vec![[0, 1, 2]];
    for i in 0..3 {
        let (x, y) = ((i + 1) % 3, (i + 2) % 3);
        for j in 0..3 {
            let w = 3 + 3 * i + j;
            edges.push((x, w));
            edges.push((y, w));
            triangles.push([x, y, w]);
        }
    }
    let (names, rays_at) = verts.into_iter().unzip();
    realize(&Layout { names, edges, triangles, rays_at })
}

/// Sizes of the groups of leaves hanging at a common internal node, largest first.
pub fn leaf_partition(t: &MetricTree) -> Vec<usize> {
    let mut sizes: Vec<usize> = t
        .internal_nodes()
        .into_iter()
        .map(|v| {
            t.edges
                .iter()
                .filter(|(a, b, _)| (*a == v && t.is_leaf(*b)) || (*b == v && t.is_leaf(*a)))
                .count()
        })
        .filter(|c| *c > 0)
        .collect();
    sizes.sort_by(|a, b| b.cmp(a));
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::schlafli;
    use crate::rootsys::{line_of_root, reflect, simple_roots};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ray_sets(s: &DelPezzoSurface) -> Vec<BTreeSet<LineLabel>> {
        let label: BTreeMap<&ZVec, LineLabel> = s.ray_labels.iter().map(|(l, v)| (v, *l)).collect();
        let mut at: BTreeMap<usize, BTreeSet<LineLabel>> = BTreeMap::new();
        for c in s.complex.cells.iter().filter(|c| c.dim == 1 && !c.rays.is_empty()) {
            at.entry(c.verts[0]).or_default().insert(label[&c.rays[0]]);
        }
        let mut v: Vec<_> = at.into_values().collect();
        v.sort();
        v
    }

    #[test]
    fn quotient_rays_kill_the_picard_torus() {
        let rays = line_rays().unwrap();
        // the pairing with [L] is a lineality vector: -e_L plus the indicator of the neighbours
        for l in lines(3).unwrap() {
            let mut sum = vec![0i64; 20];
            for m in lines(3).unwrap() {
                if m != l && lines_meet(l, m, 3) {
                    for (x, y) in sum.iter_mut().zip(&rays[&m]) {
                        *x += y;
                    }
                }
            }
            assert_eq!(sum, rays[&l], "{l}");
        }
        let distinct: BTreeSet<&ZVec> = rays.values().collect();
        assert_eq!(distinct.len(), 27);
    }

    #[test]
    fn type_zero_is_the_cone_over_the_schlafli_graph() {
        let s = build_type_zero().unwrap();
        assert_eq!(s.stats.as_tuple(), (1, 0, 27, 0, 0, 0, 0, 135));
        assert!(s.complex.check_balanced().0);
        assert!(s.complex.link_at_vertex(0).unwrap().is_isomorphic(&schlafli()));
        for (l, t) in &s.trees {
            assert_eq!(t.internal_nodes().len(), 1, "{l}");
            assert_eq!(t.leaves().len(), 10);
        }
    }

    #[test]
    fn type_a_example() {
        let r = RootVector::parse("d1+d3+d5", 6).unwrap();
        let s = build_type_a(&r).unwrap();
        assert_eq!(s.stats.as_tuple(), (8, 13, 69, 6, 0, 0, 42, 135));
        assert!(s.complex.check_balanced().0);
        let verts = type_a_rays(&r).unwrap();
        let p = |x: &str| LineLabel::parse(x).unwrap();
        let expected: BTreeSet<LineLabel> =
            ["E1", "F35", "E3", "F15", "E5", "F13", "F24", "G6", "F26", "G4", "F46", "G2"].iter().map(|x| p(x)).collect();
        assert_eq!(verts[1].1.iter().copied().collect::<BTreeSet<_>>(), expected);
        assert_eq!(verts[0].1.len(), 15);
        let mut shapes: BTreeMap<String, usize> = BTreeMap::new();
        for t in s.trees.values() {
            *shapes.entry(t.shape()).or_default() += 1;
            assert!(t.internal_lengths().iter().all(|x| *x == q(1)));
        }
        let mut counts: Vec<usize> = shapes.into_values().collect();
        counts.sort();
        assert_eq!(counts, vec![12, 15]);
    }

    #[test]
    fn type_a_outputs_are_weyl_related() {
        let e6 = RootSystem::e6();
        let simple: Vec<RootVector> = simple_roots(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = RootVector::parse("d1+d3+d5", 6).unwrap();
        let base_sets = ray_sets(&build_type_a(&base).unwrap());
        for _ in 0..3 {
            let target = e6.positive[rng.gen_range(0..e6.positive.len())].clone();
            // breadth-first search for a word carrying base to ±target
            let mut seen: BTreeMap<RootVector, Vec<usize>> = BTreeMap::from([(base.clone(), vec![])]);
            let mut queue = VecDeque::from([base.clone()]);
            while let Some(x) = queue.pop_front() {
                for (i, s) in simple.iter().enumerate() {
                    let y = reflect(s, &x).unwrap();
                    if !seen.contains_key(&y) {
                        let mut w = seen[&x].clone();
                        w.push(i);
                        seen.insert(y.clone(), w);
                        queue.push_back(y);
                    }
                }
            }
            let word = seen.get(&target).or_else(|| seen.get(&target.neg())).unwrap().clone();
            let act = |l: LineLabel| {
                let mut v = root_of_line(l).unwrap();
                for i in &word {
                    v = reflect(&simple[*i].widen(7), &v).unwrap();
                }
                line_of_root(&v).unwrap()
            };
            let mut moved: Vec<BTreeSet<LineLabel>> =
                base_sets.iter().map(|set| set.iter().map(|l| act(*l)).collect()).collect();
            moved.sort();
            let s = build_type_a(&target).unwrap();
            assert_eq!(s.stats.as_tuple(), (8, 13, 69, 6, 0, 0, 42, 135));
            assert_eq!(moved, ray_sets(&s), "{target}");
        }
    }

    #[test]
    fn type_b_all_systems() {
        for sys in a2_cubed_systems() {
            let s = build_type_b(&sys).unwrap();
            assert_eq!(s.stats.as_tuple(), (12, 21, 81, 10, 0, 0, 54, 135));
            assert!(s.complex.check_balanced().0);
            let shapes: BTreeSet<String> = s.trees.values().map(|t| t.shape()).collect();
            assert_eq!(shapes.len(), 1);
            for t in s.trees.values() {
                assert_eq!(leaf_partition(t), vec![4, 3, 3]);
            }
        }
    }

    #[test]
    fn type_b_trees_hang_on_two_edges_at_a_central_vertex() {
        let sys = a2_cubed_systems()[7].clone();
        let s = build_type_b(&sys).unwrap();
        let label: BTreeMap<&ZVec, LineLabel> = s.ray_labels.iter().map(|(l, v)| (v, *l)).collect();
        let centre: BTreeSet<usize> = (0..s.complex.vertices.len())
            .filter(|v| s.complex.cells.iter().filter(|c| c.dim == 1 && !c.rays.is_empty() && c.verts[0] == *v).count() == 9)
            .collect();
        assert_eq!(centre.len(), 3);
        for l in lines(3).unwrap() {
            let flaps: Vec<&Cell> = s
                .complex
                .cells
                .iter()
                .filter(|c| c.dim == 2 && c.verts.len() == 2 && label[&c.rays[0]] == l)
                .collect();
            assert_eq!(flaps.len(), 2, "{l}");
            let common: Vec<usize> = flaps[0].verts.iter().copied().filter(|v| flaps[1].verts.contains(v)).collect();
            assert_eq!(common.len(), 1);
            assert!(centre.contains(&common[0]));
        }
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(build_type_a(&RootVector(vec![1, 1, 0, 0, 0, 0])).is_err());
        let mut sys = a2_cubed_systems()[0].clone();
        sys[1] = sys[0].clone();
        assert!(build_type_b(&sys).is_err());
    }
}
