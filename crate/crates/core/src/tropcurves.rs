//! Tropical plane curves, stable intersections and tropical triangles (max convention).

use num_traits::{Signed, Zero};
use serde::Serialize;
use std::collections::BTreeSet;

use crate::num::{fmt_q, primitive, q, Q};
use crate::{Error, Result};

/// A point of the tropical projective plane in homogeneous coordinates; `None` is `-∞`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TropPoint2 {
    pub c: [Option<Q>; 3],
}

impl TropPoint2 {
    /// The point `(0 : x : y)`.
    pub fn affine(x: Q, y: Q) -> Self {
        TropPoint2 { c: [Some(q(0)), Some(x), Some(y)] }
    }

    /// Coordinate points `P1, P2, P3` and `P4 = (0:0:0)`.
    pub fn standard(i: u8) -> Result<Self> {
        let z = || Some(q(0));
        Ok(match i {
            1 => TropPoint2 { c: [z(), None, None] },
            2 => TropPoint2 { c: [None, z(), None] },
            3 => TropPoint2 { c: [None, None, z()] },
            4 => TropPoint2 { c: [z(), z(), z()] },
            _ => return Err(Error::Domain(format!("no standard point P{i}"))),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_some())
    }

    /// Affine coordinates `(x1 - x0, x2 - x0)` of a finite point.
    pub fn xy(&self) -> Option<[Q; 2]> {
        match &self.c {
            [Some(a), Some(b), Some(c)] => Some([b - a, c - a]),
            _ => None,
        }
    }
}

/// Value of the monomial `x0^(d-i-j) x1^i x2^j` at a point; `None` is `-∞`.
fn monomial_at(p: &TropPoint2, d: i64, e: (i64, i64)) -> Option<Q> {
    let ex = [d - e.0 - e.1, e.0, e.1];
    let mut s = q(0);
    for k in 0..3 {
        if ex[k] == 0 {
            continue;
        }
        s += q(ex[k]) * p.c[k].as_ref()?;
    }
    Some(s)
}

/// An edge of a plane curve: the segment `[a, b]` or the ray from `a` along `dir`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CurveEdge {
    #[serde(serialize_with = "ser_pt")]
    pub a: [Q; 2],
    #[serde(serialize_with = "ser_opt_pt")]
    pub b: Option<[Q; 2]>,
    pub dir: [i64; 2],
    pub weight: i64,
    /// Exponents attaining the maximum along the edge.
    pub dual: Vec<(i64, i64)>,
}

fn ser_pt<S: serde::Serializer>(p: &[Q; 2], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    [fmt_q(&p[0]), fmt_q(&p[1])].serialize(s)
}

fn ser_opt_pt<S: serde::Serializer>(p: &Option<[Q; 2]>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    p.as_ref().map(|p| [fmt_q(&p[0]), fmt_q(&p[1])]).serialize(s)
}

/// A tropical plane curve of degree `d` with coefficients on the lattice points of its
/// Newton polygon (exponents of `x1, x2`); absent monomials are `-∞`.
#[derive(Debug, Clone)]
pub struct PlaneCurve {
    pub degree: i64,
    pub terms: Vec<((i64, i64), Q)>,
    pub edges: Vec<CurveEdge>,
}

impl PlaneCurve {
    pub fn new(degree: i64, terms: Vec<((i64, i64), Q)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Domain("a tropical polynomial needs a term".into()));
        }
        let edges = curve_edges(&terms);
        Ok(PlaneCurve { degree, terms, edges })
    }

    /// Value of the tropical polynomial and the number of maximal terms.
    pub fn eval(&self, p: &TropPoint2) -> (Option<Q>, usize) {
        let mut best: Option<Q> = None;
        let mut count = 0;
        for (e, c) in &self.terms {
            if let Some(v) = monomial_at(p, self.degree, *e) {
                let v = v + c;
                match &best {
                    None => {
                        best = Some(v);
                        count = 1;
                    }
                    Some(b) if v > *b => {
                        best = Some(v);
                        count = 1;
                    }
                    Some(b) if v == *b => count += 1,
                    _ => {}
                }
            }
        }
        (best, count)
    }

    /// Membership: the maximum is attained twice, or no term survives.
    pub fn contains(&self, p: &TropPoint2) -> bool {
        let (v, n) = self.eval(p);
        v.is_none() || n >= 2
    }

    /// Balancing at every finite vertex.
    pub fn is_balanced(&self) -> bool {
        let mut verts: Vec<[Q; 2]> = Vec::new();
        for e in &self.edges {
            verts.push(e.a.clone());
            if let Some(b) = &e.b {
                verts.push(b.clone());
            }
        }
        verts.sort();
        verts.dedup();
        verts.iter().all(|v| {
            let mut s = [0i64, 0];
            for e in &self.edges {
                let w = e.weight;
                if e.a == *v {
                    s[0] += w * e.dir[0];
                    s[1] += w * e.dir[1];
                }
                if e.b.as_ref() == Some(v) {
                    s[0] -= w * e.dir[0];
                    s[1] -= w * e.dir[1];
                }
            }
            s == [0, 0]
        })
    }

    pub fn bounded_edges(&self) -> Vec<&CurveEdge> {
        self.edges.iter().filter(|e| e.b.is_some()).collect()
    }

    pub fn newton(&self) -> Vec<(i64, i64)> {
        self.terms.iter().map(|(e, _)| *e).collect()
    }
}

/// The 1-dimensional cells of the curve, one per set of terms tying along a segment or ray.
fn curve_edges(terms: &[((i64, i64), Q)]) -> Vec<CurveEdge> {
    let mut seen: BTreeSet<Vec<(i64, i64)>> = BTreeSet::new();
    let mut out = Vec::new();
    let val = |k: usize, x: &[Q; 2]| -> Q { &terms[k].1 + q(terms[k].0 .0) * &x[0] + q(terms[k].0 .1) * &x[1] };
    for i in 0..terms.len() {
        for j in i + 1..terms.len() {
            let (ei, ej) = (terms[i].0, terms[j].0);
            let m = [ei.0 - ej.0, ei.1 - ej.1];
            // line (ci - cj) + m.x = 0
            let u = primitive(&[-m[1], m[0]]);
            let x0: [Q; 2] = if m[0] != 0 {
                [-(&terms[i].1 - &terms[j].1) / q(m[0]), q(0)]
            } else {
                [q(0), -(&terms[i].1 - &terms[j].1) / q(m[1])]
            };
            let mut lo: Option<Q> = None;
            let mut hi: Option<Q> = None;
            let mut empty = false;
            for k in 0..terms.len() {
                if k == i || k == j {
                    continue;
                }
                // val_k(x0 + t u) <= val_i(x0 + t u)
                let ek = terms[k].0;
                let g0 = val(i, &x0) - val(k, &x0);
                let g1 = q((ei.0 - ek.0) * u[0] + (ei.1 - ek.1) * u[1]);
                if g1.is_zero() {
                    if g0.is_negative() {
                        empty = true;
                    }
                } else {
                    let t = -&g0 / &g1;
                    if g1.is_positive() {
                        if lo.as_ref().map_or(true, |l| t > *l) {
                            lo = Some(t);
                        }
                    } else if hi.as_ref().map_or(true, |h| t < *h) {
                        hi = Some(t);
                    }
                }
            }
            if empty {
                continue;
            }
            if let (Some(l), Some(h)) = (&lo, &hi) {
                if h <= l {
                    continue;
                }
            }
            let mid: Q = match (&lo, &hi) {
                (Some(l), Some(h)) => (l + h) / q(2),
                (Some(l), None) => l + q(1),
                (None, Some(h)) => h - q(1),
                (None, None) => q(0),
            };
            let at = |t: &Q| -> [Q; 2] { [&x0[0] + t * q(u[0]), &x0[1] + t * q(u[1])] };
            let pm = at(&mid);
            let top = val(i, &pm);
            let mut dual: Vec<(i64, i64)> = (0..terms.len()).filter(|&k| val(k, &pm) == top).map(|k| terms[k].0).collect();
            dual.sort();
            if !seen.insert(dual.clone()) {
                continue;
            }
            let d0 = dual[0];
            let d1 = *dual.last().unwrap();
            let weight = crate::num::gcd_i64((d1.0 - d0.0).abs(), (d1.1 - d0.1).abs());
            match (&lo, &hi) {
                (Some(l), Some(h)) => out.push(CurveEdge { a: at(l), b: Some(at(h)), dir: [u[0], u[1]], weight, dual }),
                (Some(l), None) => out.push(CurveEdge { a: at(l), b: None, dir: [u[0], u[1]], weight, dual }),
                (None, Some(h)) => out.push(CurveEdge { a: at(h), b: None, dir: [-u[0], -u[1]], weight, dual }),
                (None, None) => {
                    out.push(CurveEdge { a: x0.clone(), b: None, dir: [u[0], u[1]], weight, dual: dual.clone() });
                    out.push(CurveEdge { a: x0.clone(), b: None, dir: [-u[0], -u[1]], weight, dual });
                }
            }
        }
    }
    out
}

/// Tropical determinant (max-plus permanent) with the number of optimal permutations.
fn tdet(m: &[Vec<Option<Q>>]) -> (Option<Q>, usize) {
    let n = m.len();
    let mut best: Option<Q> = None;
    let mut count = 0;
    let mut perm: Vec<usize> = (0..n).collect();
    fn rec(k: usize, perm: &mut Vec<usize>, m: &[Vec<Option<Q>>], acc: Q, best: &mut Option<Q>, count: &mut usize) {
        let n = perm.len();
        if k == n {
            match best {
                Some(b) if acc < *b => {}
                Some(b) if acc == *b => *count += 1,
                _ => {
                    *best = Some(acc);
                    *count = 1;
                }
            }
            return;
        }
        for i in k..n {
            perm.swap(k, i);
            if let Some(v) = &m[k][perm[k]] {
                rec(k + 1, perm, m, &acc + v, best, count);
            }
            perm.swap(k, i);
        }
    }
    rec(0, &mut perm, m, q(0), &mut best, &mut count);
    (best, count)
}

/// The stable curve with the given Newton lattice points through `#newton - 1` points, by
/// tropical Cramer's rule. Every maximal minor must have a unique optimal permutation.
pub fn curve_through(points: &[TropPoint2], degree: i64, newton: &[(i64, i64)]) -> Result<PlaneCurve> {
    if points.len() + 1 != newton.len() {
        return Err(Error::Domain(format!("{} points for {} monomials", points.len(), newton.len())));
    }
    let rows: Vec<Vec<Option<Q>>> = points.iter().map(|p| newton.iter().map(|&e| monomial_at(p, degree, e)).collect()).collect();
    let mut terms = Vec::new();
    for (k, &e) in newton.iter().enumerate() {
        let minor: Vec<Vec<Option<Q>>> = rows.iter().map(|r| r.iter().enumerate().filter(|(c, _)| *c != k).map(|(_, x)| x.clone()).collect()).collect();
        let (v, n) = tdet(&minor);
        if let Some(v) = v {
            if n > 1 {
                return Err(Error::NonGeneric(format!("tropical minor without monomial {e:?} is attained {n} times")));
            }
            terms.push((e, v));
        }
    }
    let c = PlaneCurve::new(degree, terms)?;
    for p in points {
        if !c.contains(p) {
            return Err(Error::Consistency("Cramer solution misses an input point".into()));
        }
    }
    Ok(c)
}

/// Newton lattice points of all plane curves of degree `d`.
pub fn full_newton(d: i64) -> Vec<(i64, i64)> {
    let mut v = Vec::new();
    for i in 0..=d {
        for j in 0..=d - i {
            v.push((i, j));
        }
    }
    v
}

/// Twice the area of a lattice polygon given by a finite point set.
fn twice_area_hull(pts: &[(i64, i64)]) -> i64 {
    let mut p: Vec<(i64, i64)> = pts.to_vec();
    p.sort();
    p.dedup();
    if p.len() < 3 {
        return 0;
    }
    let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let it: Vec<(i64, i64)> = if pass == 0 { p.clone() } else { p.iter().rev().cloned().collect() };
        for x in it {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], x) <= 0 {
                hull.pop();
            }
            hull.push(x);
        }
        hull.pop();
    }
    let n = hull.len();
    (0..n).map(|i| hull[i].0 * hull[(i + 1) % n].1 - hull[(i + 1) % n].0 * hull[i].1).sum::<i64>().abs()
}

/// Mixed area of two lattice polygons (the Bernstein count of intersection points).
pub fn mixed_volume(a: &[(i64, i64)], b: &[(i64, i64)]) -> i64 {
    let sum: Vec<(i64, i64)> = a.iter().flat_map(|x| b.iter().map(move |y| (x.0 + y.0, x.1 + y.1))).collect();
    (twice_area_hull(&sum) - twice_area_hull(a) - twice_area_hull(b)) / 2
}

/// Number `a + b ε` with `ε` an infinitesimal, ordered lexicographically.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Eps(Q, Q);

/// Stable intersection: intersect with a generic infinitesimal translate of the second curve.
pub fn stable_intersect(c1: &PlaneCurve, c2: &PlaneCurve) -> Result<Vec<([Q; 2], i64)>> {
    let mut t1 = c1.terms.clone();
    let mut t2 = c2.terms.clone();
    t1.sort();
    t2.sort();
    if t1 == t2 && c1.degree == c2.degree {
        return Err(Error::Domain("stable self-intersection is not defined here".into()));
    }
    let v = [q(7), q(3)];
    let mut out: Vec<([Q; 2], i64)> = Vec::new();
    for e in &c1.edges {
        for f in &c2.edges {
            let det = e.dir[0] * f.dir[1] - e.dir[1] * f.dir[0];
            if det == 0 {
                continue;
            }
            // e.a + s e.dir = f.a + ε v + t f.dir
            let solve = |r: [Q; 2]| -> (Q, Q) {
                let s = (&r[0] * q(f.dir[1]) - &r[1] * q(f.dir[0])) / q(det);
                let t = (&r[0] * q(e.dir[1]) - &r[1] * q(e.dir[0])) / q(det);
                (s, t)
            };
            let (s0, t0) = solve([&f.a[0] - &e.a[0], &f.a[1] - &e.a[1]]);
            let (s1, t1) = solve(v.clone());
            let s = Eps(s0, s1);
            let t = Eps(t0, t1);
            let within = |x: &Eps, ed: &CurveEdge| -> bool {
                let zero = Eps(q(0), q(0));
                if *x <= zero {
                    return false;
                }
                match &ed.b {
                    None => true,
                    Some(b) => {
                        let len = if ed.dir[0] != 0 { (&b[0] - &ed.a[0]) / q(ed.dir[0]) } else { (&b[1] - &ed.a[1]) / q(ed.dir[1]) };
                        *x < Eps(len, q(0))
                    }
                }
            };
            if within(&s, e) && within(&t, f) {
                let p = [&e.a[0] + &s.0 * q(e.dir[0]), &e.a[1] + &s.0 * q(e.dir[1])];
                let m = e.weight * f.weight * det.abs();
                match out.iter_mut().find(|(x, _)| *x == p) {
                    Some(slot) => slot.1 += m,
                    None => out.push((p, m)),
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Shape of the 2-cell of a tropical triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TriangleShape {
    Triangle3,
    Parallelogram4,
    Trapezoid4,
    Pentagon5,
    Hexagon6,
    Degenerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct TropTriangleCell {
    #[serde(skip)]
    pub vertices: Vec<[Q; 2]>,
    pub shape: TriangleShape,
}

/// The 2-cell of the max-plus convex hull of three finite points, as the region where the
/// three points have distinct singleton types.
pub fn trop_triangle(p: &[TropPoint2; 3]) -> Result<TropTriangleCell> {
    let v: Vec<[Q; 3]> = p
        .iter()
        .map(|x| x.xy().map(|a| [q(0), a[0].clone(), a[1].clone()]))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Domain("tropical triangle needs finite points".into()))?;
    if v[0] == v[1] || v[1] == v[2] || v[0] == v[2] {
        return Ok(TropTriangleCell { vertices: vec![], shape: TriangleShape::Degenerate });
    }
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut found: Vec<Vec<[Q; 2]>> = Vec::new();
    for s in perms {
        // x_{s(k)} - v_k[s(k)] <= x_j - v_k[j], in the chart x0 = 0, as a.x <= b
        let mut hs: Vec<([Q; 2], Q)> = Vec::new();
        for k in 0..3 {
            for j in 0..3 {
                if j == s[k] {
                    continue;
                }
                let mut a = [q(0), q(0), q(0)];
                a[s[k]] += q(1);
                a[j] -= q(1);
                let b = &v[k][s[k]] - &v[k][j];
                hs.push(([a[1].clone(), a[2].clone()], b));
            }
        }
        let poly = halfplane_polygon(&hs);
        if poly.len() >= 3 {
            found.push(poly);
        }
    }
    match found.len() {
        0 => Ok(TropTriangleCell { vertices: vec![], shape: TriangleShape::Degenerate }),
        1 => {
            let vs = found.pop().unwrap();
            let shape = shape_of(&vs);
            Ok(TropTriangleCell { vertices: vs, shape })
        }
        n => Err(Error::Consistency(format!("tropical triangle with {n} two-cells"))),
    }
}

/// Vertices (counterclockwise, no repeats, no straight angles) of a bounded intersection of
/// half-planes `a.x <= b`; empty if the region has no interior.
fn halfplane_polygon(hs: &[([Q; 2], Q)]) -> Vec<[Q; 2]> {
    let mut pts: Vec<[Q; 2]> = Vec::new();
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            let (a, b) = (&hs[i].0, &hs[j].0);
            let det = &a[0] * &b[1] - &a[1] * &b[0];
            if det.is_zero() {
                continue;
            }
            let x = [(&hs[i].1 * &b[1] - &a[1] * &hs[j].1) / &det, (&a[0] * &hs[j].1 - &hs[i].1 * &b[0]) / &det];
            if hs.iter().all(|(c, d)| &c[0] * &x[0] + &c[1] * &x[1] <= *d) && !pts.contains(&x) {
                pts.push(x);
            }
        }
    }
    if pts.len() < 3 {
        return vec![];
    }
    convex_order(pts)
}

fn convex_order(mut pts: Vec<[Q; 2]>) -> Vec<[Q; 2]> {
    pts.sort();
    let cross = |o: &[Q; 2], a: &[Q; 2], b: &[Q; 2]| (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0]);
    let mut hull: Vec<[Q; 2]> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let it: Vec<[Q; 2]> = if pass == 0 { pts.clone() } else { pts.iter().rev().cloned().collect() };
        for x in it {
            while hull.len() >= start + 2 && !cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &x).is_positive() {
                hull.pop();
            }
            hull.push(x);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return vec![];
    }
    hull
}

fn shape_of(vs: &[[Q; 2]]) -> TriangleShape {
    match vs.len() {
        3 => TriangleShape::Triangle3,
        4 => {
            let e = |i: usize| [&vs[(i + 1) % 4][0] - &vs[i][0], &vs[(i + 1) % 4][1] - &vs[i][1]];
            let par = |a: [Q; 2], b: [Q; 2]| (&a[0] * &b[1] - &a[1] * &b[0]).is_zero();
            if par(e(0), e(2)) && par(e(1), e(3)) {
                TriangleShape::Parallelogram4
            } else {
                TriangleShape::Trapezoid4
            }
        }
        5 => TriangleShape::Pentagon5,
        6 => TriangleShape::Hexagon6,
        _ => TriangleShape::Degenerate,
    }
}

/// Membership in the max-plus convex hull of finitely many finite points.
pub fn in_tropical_hull(x: &[Q; 2], pts: &[[Q; 2]]) -> bool {
    let xx = [q(0), x[0].clone(), x[1].clone()];
    let mut covered = [false; 3];
    for p in pts {
        let pp = [q(0), p[0].clone(), p[1].clone()];
        let d: Vec<Q> = (0..3).map(|i| &xx[i] - &pp[i]).collect();
        let m = d.iter().min().unwrap().clone();
        for i in 0..3 {
            if d[i] == m {
                covered[i] = true;
            }
        }
    }
    covered.iter().all(|&c| c)
}

/// Generic cubic surface types distinguished by the tropical triangle of `P4, P5, P6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceType {
    TypeParallelogram,
    TypeOther,
    NonGeneric,
}

impl std::fmt::Display for SurfaceType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SurfaceType::TypeParallelogram => "type_parallelogram",
            SurfaceType::TypeOther => "type_other",
            SurfaceType::NonGeneric => "non_generic",
        })
    }
}

/// The conic through `P2, ..., P6`.
pub fn conic_g1(p5: &TropPoint2, p6: &TropPoint2) -> Result<PlaneCurve> {
    // the Newton square already excludes x1^2 and x2^2, which is passing through P2 and P3
    let pts = [TropPoint2::standard(4)?, p5.clone(), p6.clone()];
    curve_through(&pts, 2, &[(0, 0), (1, 0), (0, 1), (1, 1)])
}

/// Verdict from the marked conic: the bounded edge of `G1` has slope `-1` and contains one of
/// `P4, P5, P6`, or slope `1`, contains one of them, and the other two lie on opposite sides
/// of its line.
pub fn conic_criterion(p5: &TropPoint2, p6: &TropPoint2) -> Result<bool> {
    let g = conic_g1(p5, p6)?;
    let b = g.bounded_edges();
    if b.len() != 1 {
        return Err(Error::NonGeneric(format!("conic G1 has {} bounded edges", b.len())));
    }
    let e = b[0];
    let pts: Vec<[Q; 2]> = [TropPoint2::standard(4)?, p5.clone(), p6.clone()].iter().map(|p| p.xy().unwrap()).collect();
    let end = e.b.clone().unwrap();
    let on: Vec<usize> = (0..3)
        .filter(|&k| {
            let d = [&pts[k][0] - &e.a[0], &pts[k][1] - &e.a[1]];
            let cr = &d[0] * q(e.dir[1]) - &d[1] * q(e.dir[0]);
            let t = if e.dir[0] != 0 { &d[0] / q(e.dir[0]) } else { &d[1] / q(e.dir[1]) };
            let len = if e.dir[0] != 0 { (&end[0] - &e.a[0]) / q(e.dir[0]) } else { (&end[1] - &e.a[1]) / q(e.dir[1]) };
            cr.is_zero() && !t.is_negative() && t <= len
        })
        .collect();
    if on.len() > 1 {
        return Err(Error::NonGeneric("two marked points on the bounded edge of G1".into()));
    }
    let slope_minus = e.dir[0] * e.dir[1] < 0;
    let slope_plus = e.dir[0] * e.dir[1] > 0;
    if on.is_empty() {
        return Ok(false);
    }
    if slope_minus {
        return Ok(true);
    }
    if !slope_plus {
        return Err(Error::NonGeneric("bounded edge of G1 is axis-parallel".into()));
    }
    let side = |k: usize| {
        let d = [&pts[k][0] - &e.a[0], &pts[k][1] - &e.a[1]];
        (&d[0] * q(e.dir[1]) - &d[1] * q(e.dir[0])).signum()
    };
    let others: Vec<usize> = (0..3).filter(|k| *k != on[0]).collect();
    let (s1, s2) = (side(others[0]), side(others[1]));
    if s1.is_zero() || s2.is_zero() {
        return Err(Error::NonGeneric("marked point on the line of the bounded edge".into()));
    }
    Ok(s1 != s2)
}

/// Type of the generic cubic surface from the positions of `P5, P6`: the parallelogram test,
/// cross-checked against the marked conic.
pub fn classify_type(p5: &TropPoint2, p6: &TropPoint2) -> Result<(SurfaceType, TropTriangleCell)> {
    let p4 = TropPoint2::standard(4)?;
    let cell = trop_triangle(&[p4, p5.clone(), p6.clone()])?;
    if cell.shape == TriangleShape::Degenerate {
        return Ok((SurfaceType::NonGeneric, cell));
    }
    let tri = cell.shape == TriangleShape::Parallelogram4;
    let conic = match conic_criterion(p5, p6) {
        Ok(c) => c,
        Err(Error::NonGeneric(_)) => return Ok((SurfaceType::NonGeneric, cell)),
        Err(e) => return Err(e),
    };
    if tri != conic {
        return Err(Error::Consistency(format!(
            "parallelogram test says {tri} but the conic criterion says {conic}"
        )));
    }
    Ok((if tri { SurfaceType::TypeParallelogram } else { SurfaceType::TypeOther }, cell))
}

/// Minimal SVG drawing of curves (edges clipped to a box) and optional marked points.
pub fn to_svg(curves: &[PlaneCurve], points: &[[Q; 2]], half_width: i64) -> String {
    let w = half_width as f64;
    let sc = 200.0 / w;
    let f = |x: &Q| crate::num::to_f64(x);
    let tr = |p: [f64; 2]| ((p[0] + w) * sc, (w - p[1]) * sc);
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\">\n");
    for c in curves {
        for e in &c.edges {
            let a = [f(&e.a[0]), f(&e.a[1])];
            let b = match &e.b {
                Some(b) => [f(&b[0]), f(&b[1])],
                None => [a[0] + 4.0 * w * e.dir[0] as f64, a[1] + 4.0 * w * e.dir[1] as f64],
            };
            let (x1, y1) = tr(a);
            let (x2, y2) = tr(b);
            s += &format!(
                "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"black\" stroke-width=\"{}\"/>\n",
                e.weight
            );
        }
    }
    for p in points {
        let (x, y) = tr([f(&p[0]), f(&p[1])]);
        s += &format!("<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"red\"/>\n");
    }
    s + "</svg>\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: i64, y: i64) -> TropPoint2 {
        TropPoint2::affine(q(x), q(y))
    }

    #[test]
    fn line_through_two_points() {
        let c = curve_through(&[pt(0, 0), pt(2, 1)], 1, &full_newton(1)).unwrap();
        assert!(c.is_balanced());
        assert_eq!(c.edges.len(), 3);
        assert!(c.contains(&pt(0, 0)) && c.contains(&pt(2, 1)));
        let d = curve_through(&[pt(1, -3), pt(-1, 2)], 1, &full_newton(1)).unwrap();
        let x = stable_intersect(&c, &d).unwrap();
        assert_eq!(x.iter().map(|p| p.1).sum::<i64>(), 1);
        // a line meets itself shifted along its own edge: still one stable point
        let e = curve_through(&[pt(0, 0), pt(5, 1)], 1, &full_newton(1)).unwrap();
        assert_eq!(stable_intersect(&c, &e).unwrap().iter().map(|p| p.1).sum::<i64>(), 1);
    }

    #[test]
    fn conic_through_the_pipeline_points_is_an_inverted_line() {
        let pts = [
            TropPoint2::standard(1).unwrap(),
            TropPoint2::standard(2).unwrap(),
            TropPoint2::standard(3).unwrap(),
            pt(0, 0),
            pt(3, 1),
        ];
        let c = curve_through(&pts, 2, &full_newton(2)).unwrap();
        assert!(c.is_balanced());
        // rays point in the directions of P1, P2, P3
        let mut rays: Vec<[i64; 2]> = c.edges.iter().filter(|e| e.b.is_none()).map(|e| e.dir).collect();
        rays.sort();
        rays.dedup();
        assert_eq!(rays, vec![[-1, -1], [0, 1], [1, 0]]);
        assert_eq!(c.newton().len(), 3);
    }

    #[test]
    fn mixed_areas() {
        assert_eq!(mixed_volume(&full_newton(1), &full_newton(1)), 1);
        assert_eq!(mixed_volume(&full_newton(2), &full_newton(1)), 2);
        let sq = [(0, 0), (1, 0), (0, 1), (1, 1)];
        assert_eq!(mixed_volume(&sq, &full_newton(1)), 2);
    }

    #[test]
    fn triangles() {
        let c = trop_triangle(&[pt(0, 0), pt(1, 1), pt(2, 2)]).unwrap();
        assert_eq!(c.shape, TriangleShape::Degenerate);
        let c = trop_triangle(&[pt(0, 0), pt(3, 1), pt(1, 3)]).unwrap();
        // every vertex lies in the hull
        let raw = [[q(0), q(0)], [q(3), q(1)], [q(1), q(3)]];
        for v in &c.vertices {
            assert!(in_tropical_hull(v, &raw));
        }
        assert_eq!(c.shape, TriangleShape::Hexagon6);
    }

    /// Independent oracle: integer points of the closed 2-cell found by membership tests of
    /// nearby generic offsets, then their convex hull.
    fn oracle_cell(raw: &[[i64; 2]; 3]) -> Vec<[Q; 2]> {
        let pts: Vec<[Q; 2]> = raw.iter().map(|p| [q(4 * p[0]), q(4 * p[1])]).collect();
        let lo = raw.iter().flat_map(|p| p.iter()).min().unwrap() * 4 - 4;
        let hi = raw.iter().flat_map(|p| p.iter()).max().unwrap() * 4 + 4;
        let offs = [(3, 1), (1, 3), (-1, 3), (-3, 1), (-3, -1), (-1, -3), (1, -3), (3, -1)];
        let mut s = Vec::new();
        for x in lo..=hi {
            for y in lo..=hi {
                let ok = offs.iter().any(|&(a, b)| {
                    let z = [q(x) + crate::num::qf(a, 64), q(y) + crate::num::qf(b, 64)];
                    in_tropical_hull(&z, &pts)
                });
                if ok {
                    s.push([q(x), q(y)]);
                }
            }
        }
        convex_order(s).into_iter().map(|v| [&v[0] / q(4), &v[1] / q(4)]).collect()
    }

    #[test]
    fn triangle_cells_match_the_grid_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut shapes = std::collections::BTreeSet::new();
        let mut cases = vec![[[0, 0], [3, 1], [1, 3]]];
        for _ in 0..60 {
            cases.push([[0, 0], [rng.gen_range(-6..=6), rng.gen_range(-6..=6)], [rng.gen_range(-6..=6), rng.gen_range(-6..=6)]]);
        }
        for c in cases {
            let cell = trop_triangle(&[pt(c[0][0], c[0][1]), pt(c[1][0], c[1][1]), pt(c[2][0], c[2][1])]).unwrap();
            let o = oracle_cell(&c);
            if cell.shape == TriangleShape::Degenerate {
                assert!(o.len() < 3, "{c:?}");
                continue;
            }
            let mut a = cell.vertices.clone();
            a.sort();
            let mut b = o.clone();
            b.sort();
            assert_eq!(a, b, "{c:?}");
            shapes.insert(format!("{:?}", cell.shape));
        }
        assert_eq!(shapes.len(), 5, "{shapes:?}");
    }
}
