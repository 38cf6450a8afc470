//! Tropical modifications of two-dimensional fans and complexes.
//!
//! A [`Surface`] is a weighted rational polyhedral surface whose 2-cells carry lattice charts.
//! Modifying along a divisor refines the cells so that the divisor lies in the 1-skeleton,
//! recovers the piecewise integer-affine function whose divisor it is, takes the graph of
//! that function and attaches one downward facet per weighted edge of the divisor.

use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, HashMap};

use crate::num::{self, ext_gcd, lattice_len, parallel_factor, primitive, primitive_of_q, q, vsub, QVec, ZVec, Q};
use crate::polyhedra::{Cell, EdgeKey, PolyComplex};
use crate::rootsys::{self, LineLabel};
use crate::trees::MetricTree;
use crate::polyhedra::SurfaceStats;
use crate::valued::{conic_through, const_point, torus_point, Arrangement, CoordFn, Curve, CurveEq, Fp, LPoly, Piece, Pt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use crate::{Error, Result};

type P2 = [Q; 2];

fn cr(a: &P2, b: &P2) -> Q {
    &a[0] * &b[1] - &a[1] * &b[0]
}

fn p2sub(a: &P2, b: &P2) -> P2 {
    [&a[0] - &b[0], &a[1] - &b[1]]
}

fn p2z(d: [i64; 2]) -> P2 {
    [q(d[0]), q(d[1])]
}

/// Boundary element of a 2-cell: a vertex with its chart coordinates, or a direction at
/// infinity in chart coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Node {
    V(usize, P2),
    D([i64; 2]),
}

impl Node {
    fn same(&self, o: &Node) -> bool {
        match (self, o) {
            (Node::V(a, _), Node::V(b, _)) => a == b,
            (Node::D(a), Node::D(b)) => a == b,
            _ => false,
        }
    }
}

/// A 2-cell with an affine lattice chart `x = o + s b1 + t b2`. The boundary is listed
/// counterclockwise in the chart; directions at infinity occur consecutively.
#[derive(Debug, Clone)]
pub struct Face {
    pub o: QVec,
    pub b: [ZVec; 2],
    piv: (usize, usize),
    cyc: Vec<Node>,
    pub weight: i64,
}

impl Face {
    fn new(o: QVec, b: [ZVec; 2], cyc: Vec<Node>, weight: i64) -> Result<Face> {
        let n = o.len();
        for i in 0..n {
            for j in i + 1..n {
                if b[0][i] * b[1][j] - b[0][j] * b[1][i] != 0 {
                    return Ok(Face { o, b, piv: (i, j), cyc, weight });
                }
            }
        }
        Err(Error::Structural("chart basis is degenerate".into()))
    }

    fn vec_to_chart(&self, y: &[Q]) -> Option<P2> {
        let (i, j) = self.piv;
        let (a, b, c, d) = (self.b[0][i], self.b[1][i], self.b[0][j], self.b[1][j]);
        let det = q(a * d - b * c);
        let s = (&y[i] * q(d) - q(b) * &y[j]) / &det;
        let t = (q(a) * &y[j] - q(c) * &y[i]) / &det;
        for k in 0..y.len() {
            if y[k] != &s * q(self.b[0][k]) + &t * q(self.b[1][k]) {
                return None;
            }
        }
        Some([s, t])
    }

    fn to_chart(&self, x: &[Q]) -> Option<P2> {
        self.vec_to_chart(&vsub(x, &self.o))
    }

    fn from_chart(&self, p: &P2) -> QVec {
        (0..self.o.len())
            .map(|k| &self.o[k] + &p[0] * q(self.b[0][k]) + &p[1] * q(self.b[1][k]))
            .collect()
    }

    fn dir_amb(&self, d: [i64; 2]) -> ZVec {
        (0..self.o.len()).map(|k| d[0] * self.b[0][k] + d[1] * self.b[1][k]).collect()
    }

    fn dir_chart(&self, d: &[i64]) -> Option<[i64; 2]> {
        let v: QVec = d.iter().map(|&x| q(x)).collect();
        let c = self.vec_to_chart(&v)?;
        Some([num::to_i64(&c[0])?, num::to_i64(&c[1])?])
    }

    /// Boundary half-planes `cross(dir, x - p) >= 0`.
    fn halfplanes(&self) -> Vec<(P2, P2)> {
        let n = self.cyc.len();
        let mut out = Vec::new();
        for i in 0..n {
            match (&self.cyc[i], &self.cyc[(i + 1) % n]) {
                (Node::V(_, p), Node::V(_, r)) => out.push((p.clone(), p2sub(r, p))),
                (Node::V(_, p), Node::D(d)) => out.push((p.clone(), p2z(*d))),
                (Node::D(d), Node::V(_, p)) => out.push((p.clone(), p2z([-d[0], -d[1]]))),
                _ => {}
            }
        }
        out
    }

    fn dirs(&self) -> Vec<[i64; 2]> {
        self.cyc.iter().filter_map(|n| if let Node::D(d) = n { Some(*d) } else { None }).collect()
    }

    fn vertex_coords(&self) -> Vec<P2> {
        self.cyc.iter().filter_map(|n| if let Node::V(_, p) = n { Some(p.clone()) } else { None }).collect()
    }

    fn contains_vertex(&self, v: usize) -> bool {
        self.cyc.iter().any(|n| matches!(n, Node::V(w, _) if *w == v))
    }

    /// Points in the relative interior of the cell, in chart coordinates.
    fn samples(&self) -> Vec<P2> {
        let vs = self.vertex_coords();
        let k = q(vs.len() as i64);
        let c: P2 = [
            vs.iter().fold(Q::zero(), |s, p| s + &p[0]) / &k,
            vs.iter().fold(Q::zero(), |s, p| s + &p[1]) / &k,
        ];
        let ds = self.dirs();
        let mut out = Vec::new();
        if ds.is_empty() {
            out.push(c.clone());
            for v in vs.iter().take(3) {
                out.push([(&c[0] + &v[0]) / q(2), (&c[1] + &v[1]) / q(2)]);
            }
        } else {
            let sum = ds.iter().fold([0i64, 0], |s, d| [s[0] + d[0], s[1] + d[1]]);
            for lam in 1..=2 {
                out.push([&c[0] + q(lam * sum[0]), &c[1] + q(lam * sum[1])]);
                for v in vs.iter().take(2) {
                    let m = [(&c[0] + &v[0]) / q(2), (&c[1] + &v[1]) / q(2)];
                    out.push([&m[0] + q(lam * sum[0]), &m[1] + q(lam * sum[1])]);
                }
            }
            if ds.len() == 2 {
                let lop = [c[0].clone() + q(ds[0][0] + 2 * ds[1][0]), c[1].clone() + q(ds[0][1] + 2 * ds[1][1])];
                out.push(lop);
            }
        }
        out
    }
}

/// Global key of a boundary pair of a face.
fn pair_key(f: &Face, a: &Node, b: &Node) -> Option<EdgeKey> {
    match (a, b) {
        (Node::V(x, _), Node::V(y, _)) => Some(EdgeKey::seg(*x, *y)),
        (Node::V(x, _), Node::D(d)) | (Node::D(d), Node::V(x, _)) => Some(EdgeKey::Ray(*x, f.dir_amb(*d))),
        _ => None,
    }
}

/// An integer-affine function on each face: `g(s, t) = c + α s + β t` in the face chart.
pub type Affine = [Q; 3];

/// Tropical polynomial in the first two coordinates: exponent pairs with coefficients.
pub type TropPoly = Vec<((i64, i64), Q)>;

fn trop_eval(p: &TropPoly, x: &Q, y: &Q) -> (Q, usize, bool) {
    let mut best: Option<(Q, usize)> = None;
    let mut unique = true;
    for (k, ((i, j), c)) in p.iter().enumerate() {
        let v = c + q(*i) * x + q(*j) * y;
        match &best {
            None => best = Some((v, k)),
            Some((b, _)) if v > *b => {
                best = Some((v, k));
                unique = true;
            }
            Some((b, _)) if v == *b => unique = false,
            _ => {}
        }
    }
    let (v, k) = best.expect("nonempty tropical polynomial");
    (v, k, unique)
}

/// A weighted rational polyhedral surface with charted 2-cells.
#[derive(Debug, Clone)]
pub struct Surface {
    pub dim: usize,
    pub verts: Vec<QVec>,
    index: HashMap<QVec, usize>,
    pub faces: Vec<Face>,
}

struct Incidence {
    /// face index and position of the pair in the face cycle
    map: BTreeMap<EdgeKey, Vec<(usize, usize)>>,
}

impl Surface {
    /// A surface with no faces, used when a complex is built directly rather than charted.
    pub fn empty(dim: usize) -> Surface {
        Surface { dim, verts: Vec::new(), index: HashMap::new(), faces: Vec::new() }
    }

    /// The plane `R^2` subdivided into its four quadrants.
    pub fn plane() -> Surface {
        let mut s = Surface { dim: 2, verts: Vec::new(), index: HashMap::new(), faces: Vec::new() };
        let o = s.vid(vec![q(0), q(0)]);
        let z = [q(0), q(0)];
        let quads = [[[1, 0], [0, 1]], [[0, 1], [-1, 0]], [[-1, 0], [0, -1]], [[0, -1], [1, 0]]];
        for [a, b] in quads {
            let f = Face::new(
                vec![q(0), q(0)],
                [vec![1, 0], vec![0, 1]],
                vec![Node::V(o, z.clone()), Node::D(a), Node::D(b)],
                1,
            )
            .unwrap();
            s.faces.push(f);
        }
        s
    }

    fn vid(&mut self, x: QVec) -> usize {
        if let Some(&i) = self.index.get(&x) {
            return i;
        }
        self.verts.push(x.clone());
        self.index.insert(x, self.verts.len() - 1);
        self.verts.len() - 1
    }

    fn incidence(&self) -> Incidence {
        let mut map: BTreeMap<EdgeKey, Vec<(usize, usize)>> = BTreeMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            let n = f.cyc.len();
            for i in 0..n {
                if let Some(k) = pair_key(f, &f.cyc[i], &f.cyc[(i + 1) % n]) {
                    map.entry(k).or_default().push((fi, i));
                }
            }
        }
        Incidence { map }
    }

    /// Inserts vertex `x` into every face whose boundary contains the edge `key`.
    fn insert_on_edge(&mut self, x: usize, key: &EdgeKey) {
        let coords = self.verts[x].clone();
        for f in self.faces.iter_mut() {
            if f.contains_vertex(x) {
                continue;
            }
            let n = f.cyc.len();
            let pos = (0..n).find(|&i| pair_key(f, &f.cyc[i], &f.cyc[(i + 1) % n]).as_ref() == Some(key));
            if let Some(i) = pos {
                let c = f.to_chart(&coords).expect("vertex on a boundary edge lies in the chart");
                f.cyc.insert(i + 1, Node::V(x, c));
            }
        }
    }

    /// Clips a face to `phi >= 0` where `phi(p) = cross(u, p - a)`, in chart coordinates.
    fn clip(&mut self, fi: usize, a: &P2, u: &P2, sign: i32, created: &mut Vec<(usize, EdgeKey)>) -> Vec<Node> {
        let f = self.faces[fi].clone();
        let phi = |n: &Node| -> Q {
            let v = match n {
                Node::V(_, p) => cr(u, &p2sub(p, a)),
                Node::D(d) => cr(u, &p2z(*d)),
            };
            if sign > 0 {
                v
            } else {
                -v
            }
        };
        let n = f.cyc.len();
        let mut out: Vec<Node> = Vec::new();
        for i in 0..n {
            let (pn, qn) = (&f.cyc[i], &f.cyc[(i + 1) % n]);
            let (fp, fq) = (phi(pn), phi(qn));
            if !fp.is_negative() {
                out.push(pn.clone());
            }
            if (fp.is_positive() && fq.is_negative()) || (fp.is_negative() && fq.is_positive()) {
                let (ap, aq) = (fp.abs(), fq.abs());
                let node = match (pn, qn) {
                    (Node::V(_, p), Node::V(_, r)) => {
                        let tot = &ap + &aq;
                        let x = [(&aq * &p[0] + &ap * &r[0]) / &tot, (&aq * &p[1] + &ap * &r[1]) / &tot];
                        Some((x, pair_key(&f, pn, qn).unwrap()))
                    }
                    (Node::V(_, p), Node::D(d)) | (Node::D(d), Node::V(_, p)) => {
                        let lam = if matches!(pn, Node::V(..)) { &ap / &aq } else { &aq / &ap };
                        let x = [&p[0] + &lam * q(d[0]), &p[1] + &lam * q(d[1])];
                        Some((x, pair_key(&f, pn, qn).unwrap()))
                    }
                    (Node::D(d), Node::D(e)) => {
                        let v = [&aq * q(d[0]) + &ap * q(e[0]), &aq * q(d[1]) + &ap * q(e[1])];
                        let z = primitive_of_q(&v);
                        out.push(Node::D([z[0], z[1]]));
                        None
                    }
                };
                if let Some((x, key)) = node {
                    let id = self.vid(f.from_chart(&x));
                    created.push((id, key));
                    out.push(Node::V(id, x));
                }
            }
        }
        let mut clean: Vec<Node> = Vec::new();
        for nd in out {
            if clean.last().is_some_and(|l| l.same(&nd)) {
                continue;
            }
            clean.push(nd);
        }
        while clean.len() > 1 && clean[0].same(clean.last().unwrap()) {
            clean.pop();
        }
        clean
    }

    /// Splits a face along the full chart line through `a` with direction `u`.
    fn split_face(&mut self, fi: usize, a: &P2, u: &P2) {
        let mut created = Vec::new();
        let left = self.clip(fi, a, u, 1, &mut created);
        let right = self.clip(fi, a, u, -1, &mut created);
        let mut f1 = self.faces[fi].clone();
        f1.cyc = left;
        let mut f2 = self.faces[fi].clone();
        f2.cyc = right;
        self.faces[fi] = f1;
        self.faces.push(f2);
        created.sort_by(|x, y| x.0.cmp(&y.0));
        created.dedup_by(|x, y| x.0 == y.0);
        for (x, key) in created {
            self.insert_on_edge(x, &key);
        }
    }

    /// Clipping interval of a piece against a face; returns the chart line to split along if
    /// the piece meets the open face in a segment of positive length.
    fn crossing(f: &Face, piece: &Piece) -> Option<(P2, P2)> {
        let a = f.to_chart(&num::qz(&piece.a))?;
        let (u, hi0): (P2, Option<Q>) = match &piece.b {
            Some(b) => (p2sub(&f.to_chart(&num::qz(b))?, &a), Some(Q::one())),
            None => {
                let d = f.vec_to_chart(&num::qz(&piece.dir))?;
                (d, None)
            }
        };
        let mut lo = Q::zero();
        let mut hi = hi0;
        let hps = f.halfplanes();
        for (p, d) in &hps {
            let g0 = cr(d, &p2sub(&a, p));
            let g1 = cr(d, &u);
            if g1.is_zero() {
                if g0.is_negative() {
                    return None;
                }
            } else if g1.is_positive() {
                let t = -&g0 / &g1;
                if t > lo {
                    lo = t;
                }
            } else {
                let t = -&g0 / &g1;
                if hi.as_ref().map_or(true, |h| t < *h) {
                    hi = Some(t);
                }
            }
        }
        let mid = match &hi {
            Some(h) if *h <= lo => return None,
            Some(h) => (&lo + h) / q(2),
            None => &lo + Q::one(),
        };
        let m = [&a[0] + &mid * &u[0], &a[1] + &mid * &u[1]];
        for (p, d) in &hps {
            if !cr(d, &p2sub(&m, p)).is_positive() {
                return None;
            }
        }
        Some((a, u))
    }

    fn point_on_piece(x: &[Q], piece: &Piece, strict_ends: bool) -> bool {
        let a = num::qz(&piece.a);
        let y = vsub(x, &a);
        if y.iter().all(|c| c.is_zero()) {
            return !strict_ends;
        }
        match &piece.b {
            Some(b) => {
                let d = vsub(&num::qz(b), &a);
                match parallel_factor(&y, &d) {
                    Some(l) if strict_ends => l.is_positive() && l < Q::one(),
                    Some(l) => !l.is_negative() && l <= Q::one(),
                    None => false,
                }
            }
            None => match parallel_factor(&y, &num::qz(&piece.dir)) {
                Some(l) => l.is_positive(),
                None => false,
            },
        }
    }

    fn edge_in_piece(&self, key: &EdgeKey, piece: &Piece) -> bool {
        match key {
            EdgeKey::Seg(a, b) => {
                Self::point_on_piece(&self.verts[*a], piece, false) && Self::point_on_piece(&self.verts[*b], piece, false)
            }
            EdgeKey::Ray(a, d) => {
                piece.b.is_none() && primitive(d) == piece.dir && Self::point_on_piece(&self.verts[*a], piece, false)
            }
        }
    }

    /// Refines the surface so that the pieces lie in its 1-skeleton and returns the weight of
    /// the divisor on every edge.
    pub fn insert_divisor(&mut self, pieces: &[Piece]) -> Result<BTreeMap<EdgeKey, i64>> {
        for p in pieces {
            if p.a.len() != self.dim {
                return Err(Error::Domain("divisor lives in a different ambient space".into()));
            }
            let mut i = 0;
            while i < self.faces.len() {
                if let Some((a, u)) = Self::crossing(&self.faces[i], p) {
                    self.split_face(i, &a, &u);
                }
                i += 1;
            }
        }
        // split edges at endpoints of pieces
        let mut ends: Vec<QVec> = Vec::new();
        for p in pieces {
            ends.push(num::qz(&p.a));
            if let Some(b) = &p.b {
                ends.push(num::qz(b));
            }
        }
        for x in ends {
            if self.index.contains_key(&x) {
                continue;
            }
            let inc = self.incidence();
            let mut hit = None;
            for key in inc.map.keys() {
                let inside = match key {
                    EdgeKey::Seg(a, b) => {
                        let y = vsub(&x, &self.verts[*a]);
                        let d = vsub(&self.verts[*b], &self.verts[*a]);
                        parallel_factor(&y, &d).is_some_and(|l| l.is_positive() && l < Q::one())
                    }
                    EdgeKey::Ray(a, d) => {
                        let y = vsub(&x, &self.verts[*a]);
                        parallel_factor(&y, &num::qz(d)).is_some_and(|l| l.is_positive())
                    }
                };
                if inside {
                    hit = Some(key.clone());
                    break;
                }
            }
            if let Some(key) = hit {
                let id = self.vid(x);
                self.insert_on_edge(id, &key);
            }
        }
        let inc = self.incidence();
        let mut w = BTreeMap::new();
        for key in inc.map.keys() {
            let s: i64 = pieces.iter().filter(|p| self.edge_in_piece(key, p)).map(|p| p.weight).sum();
            w.insert(key.clone(), s);
        }
        // every piece is covered by edges
        for p in pieces {
            let mut len = Q::zero();
            let mut ray_base: Option<usize> = None;
            for key in inc.map.keys() {
                if !self.edge_in_piece(key, p) {
                    continue;
                }
                match key {
                    EdgeKey::Seg(a, b) => len += self.lattice_length(*a, *b),
                    EdgeKey::Ray(a, _) => {
                        if ray_base.is_some() {
                            return Err(Error::Consistency("divisor ray covered twice".into()));
                        }
                        ray_base = Some(*a);
                    }
                }
            }
            let want = match (&p.b, ray_base) {
                (Some(b), _) => lattice_q(&vsub(&num::qz(b), &num::qz(&p.a))),
                (None, Some(r)) => lattice_q(&vsub(&self.verts[r], &num::qz(&p.a))),
                (None, None) => return Err(Error::Consistency("divisor ray is not contained in the surface".into())),
            };
            if len != want {
                return Err(Error::Consistency(format!(
                    "divisor piece from {:?} is not contained in the surface",
                    p.a
                )));
            }
        }
        Ok(w)
    }

    fn lattice_length(&self, a: usize, b: usize) -> Q {
        lattice_q(&vsub(&self.verts[b], &self.verts[a]))
    }

    /// Per-edge data for the divisor equation: ambient edge direction and, for every incident
    /// face, the chart normal pointing into the face.
    fn edge_frame(&self, key: &EdgeKey, inc: &[(usize, usize)]) -> Result<(ZVec, Vec<[i64; 2]>)> {
        let e: ZVec = match key {
            EdgeKey::Seg(a, b) => primitive_of_q(&vsub(&self.verts[*b], &self.verts[*a])),
            EdgeKey::Ray(_, d) => d.clone(),
        };
        let base = match key {
            EdgeKey::Seg(a, _) | EdgeKey::Ray(a, _) => self.verts[*a].clone(),
        };
        let mut normals = Vec::new();
        for &(fi, _) in inc {
            let f = &self.faces[fi];
            let ec = f.dir_chart(&e).ok_or_else(|| Error::Structural("edge outside face chart".into()))?;
            let p0 = f.to_chart(&base).unwrap();
            let inside = f.samples().into_iter().next().unwrap();
            let side = cr(&p2z(ec), &p2sub(&inside, &p0));
            let (g, x, y) = ext_gcd(ec[0], ec[1]);
            if g != 1 {
                return Err(Error::Structural("edge direction is not primitive in a chart".into()));
            }
            let mut nrm = [-y, x];
            if side.is_negative() {
                nrm = [y, -x];
            }
            normals.push(nrm);
        }
        Ok((e, normals))
    }

    /// Recovers the function whose divisor is `w`. Cells on which `hint` has a unique maximal
    /// term take that term; the rest follow from continuity and the divisor equations. With no
    /// hint, the first face is normalized to zero.
    pub fn function_from_divisor(&self, w: &BTreeMap<EdgeKey, i64>, hint: Option<&TropPoly>) -> Result<Vec<Affine>> {
        let nf = self.faces.len();
        let mut g: Vec<Option<Affine>> = vec![None; nf];
        match hint {
            Some(tp) => {
                for (fi, f) in self.faces.iter().enumerate() {
                    let mut det: Option<usize> = None;
                    for s in f.samples() {
                        let x = f.from_chart(&s);
                        let (_, k, uniq) = trop_eval(tp, &x[0], &x[1]);
                        if uniq {
                            match det {
                                None => det = Some(k),
                                Some(k0) if k0 != k => {
                                    return Err(Error::Consistency("defining polynomial is not linear on a cell".into()))
                                }
                                _ => {}
                            }
                        }
                    }
                    if let Some(k) = det {
                        let ((i, j), c) = &tp[k];
                        let alpha = q(i * f.b[0][0] + j * f.b[0][1]);
                        let beta = q(i * f.b[1][0] + j * f.b[1][1]);
                        let c0 = c + q(*i) * &f.o[0] + q(*j) * &f.o[1];
                        g[fi] = Some([c0, alpha, beta]);
                    }
                }
            }
            None => g[0] = Some([Q::zero(), Q::zero(), Q::zero()]),
        }
        let inc = self.incidence();
        let mut frames: BTreeMap<EdgeKey, (ZVec, Vec<[i64; 2]>)> = BTreeMap::new();
        for (key, list) in &inc.map {
            frames.insert(key.clone(), self.edge_frame(key, list)?);
        }
        // propagation through edges with a single unknown face
        loop {
            let mut progress = false;
            for (key, list) in &inc.map {
                let unknown: Vec<usize> = list.iter().filter(|(fi, _)| g[*fi].is_none()).map(|(fi, _)| *fi).collect();
                if unknown.len() != 1 || unknown.len() == list.len() {
                    continue;
                }
                let fu = unknown[0];
                let (rows, rhs) = self.local_equations(key, list, &frames[key], &g, w[key], fu)?;
                match num::solve_linear(&rows, &rhs) {
                    Some((x, 0)) => {
                        g[fu] = Some([x[0].clone(), x[1].clone(), x[2].clone()]);
                        progress = true;
                    }
                    Some(_) => {}
                    None => return Err(Error::Consistency(format!("divisor equation has no solution at {key:?}"))),
                }
            }
            if !progress {
                break;
            }
        }
        if g.iter().any(|x| x.is_none()) {
            self.global_solve(&inc, &frames, w, &mut g)?;
        }
        let g: Vec<Affine> = g.into_iter().map(|x| x.unwrap()).collect();
        for a in &g {
            if !a[1].is_integer() || !a[2].is_integer() {
                return Err(Error::Consistency("function has non-integral slope".into()));
            }
        }
        self.verify_function(&inc, &frames, w, &g)?;
        Ok(g)
    }

    fn local_equations(
        &self,
        key: &EdgeKey,
        list: &[(usize, usize)],
        frame: &(ZVec, Vec<[i64; 2]>),
        g: &[Option<Affine>],
        wd: i64,
        fu: usize,
    ) -> Result<(Vec<QVec>, Vec<Q>)> {
        let (known_f, _) = *list.iter().find(|(fi, _)| g[*fi].is_some()).unwrap();
        let kf = &self.faces[known_f];
        let kg = g[known_f].as_ref().unwrap();
        let uf = &self.faces[fu];
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let val = |f: &Face, a: &Affine, x: &[Q]| -> Q {
            let c = f.to_chart(x).unwrap();
            &a[0] + &a[1] * &c[0] + &a[2] * &c[1]
        };
        let slope = |f: &Face, a: &Affine, d: &[i64]| -> Q {
            let c = f.dir_chart(d).unwrap();
            &a[1] * q(c[0]) + &a[2] * q(c[1])
        };
        match key {
            EdgeKey::Seg(a, b) => {
                for v in [a, b] {
                    let x = &self.verts[*v];
                    let c = uf.to_chart(x).unwrap();
                    rows.push(vec![Q::one(), c[0].clone(), c[1].clone()]);
                    rhs.push(val(kf, kg, x));
                }
            }
            EdgeKey::Ray(a, d) => {
                let x = &self.verts[*a];
                let c = uf.to_chart(x).unwrap();
                rows.push(vec![Q::one(), c[0].clone(), c[1].clone()]);
                rhs.push(val(kf, kg, x));
                let dc = uf.dir_chart(d).unwrap();
                rows.push(vec![Q::zero(), q(dc[0]), q(dc[1])]);
                rhs.push(slope(kf, kg, d));
            }
        }
        let (e, normals) = frame;
        let mut vsum = vec![0i64; self.dim];
        for ((fi, _), n) in list.iter().zip(normals) {
            let amb = self.faces[*fi].dir_amb(*n);
            for k in 0..self.dim {
                vsum[k] += self.faces[*fi].weight * amb[k];
            }
        }
        let lam = if vsum.iter().all(|&x| x == 0) {
            Q::zero()
        } else {
            parallel_factor(&num::qz(&vsum), &num::qz(e)).ok_or_else(|| Error::Consistency(format!("surface is not balanced at {key:?}")))?
        };
        let mut row = vec![Q::zero(); 3];
        let mut r = q(wd) + &lam * slope(kf, kg, e);
        for ((fi, _), n) in list.iter().zip(normals) {
            let f = &self.faces[*fi];
            let wq = q(f.weight);
            if *fi == fu {
                row[1] += &wq * q(n[0]);
                row[2] += &wq * q(n[1]);
            } else {
                let a = g[*fi].as_ref().unwrap();
                r -= &wq * (&a[1] * q(n[0]) + &a[2] * q(n[1]));
            }
        }
        rows.push(row);
        rhs.push(r);
        Ok((rows, rhs))
    }

    fn global_solve(
        &self,
        inc: &Incidence,
        frames: &BTreeMap<EdgeKey, (ZVec, Vec<[i64; 2]>)>,
        w: &BTreeMap<EdgeKey, i64>,
        g: &mut [Option<Affine>],
    ) -> Result<()> {
        let unknown: Vec<usize> = (0..g.len()).filter(|&i| g[i].is_none()).collect();
        let col: BTreeMap<usize, usize> = unknown.iter().enumerate().map(|(k, &f)| (f, 3 * k)).collect();
        let nv = 3 * unknown.len();
        let mut rows: Vec<QVec> = Vec::new();
        let mut rhs: Vec<Q> = Vec::new();
        // linear form of g_f at a point or along a direction
        let term = |fi: usize, pt: Option<&[Q]>, dir: Option<&[i64]>, coef: Q, row: &mut QVec, r: &mut Q| {
            let f = &self.faces[fi];
            let (c0, c1, c2) = match (pt, dir) {
                (Some(x), _) => {
                    let c = f.to_chart(x).unwrap();
                    (Q::one(), c[0].clone(), c[1].clone())
                }
                (_, Some(d)) => {
                    let c = f.dir_chart(d).unwrap();
                    (Q::zero(), q(c[0]), q(c[1]))
                }
                _ => unreachable!(),
            };
            match col.get(&fi) {
                Some(&k) => {
                    row[k] += &coef * c0;
                    row[k + 1] += &coef * c1;
                    row[k + 2] += &coef * c2;
                }
                None => {
                    let a = g[fi].as_ref().unwrap();
                    *r -= &coef * (&a[0] * c0 + &a[1] * c1 + &a[2] * c2);
                }
            }
        };
        for (key, list) in &inc.map {
            if !list.iter().any(|(fi, _)| col.contains_key(fi)) {
                continue;
            }
            let f0 = list[0].0;
            for &(fi, _) in &list[1..] {
                let mut eqs: Vec<(Option<&[Q]>, Option<&[i64]>)> = Vec::new();
                match key {
                    EdgeKey::Seg(a, b) => {
                        eqs.push((Some(&self.verts[*a]), None));
                        eqs.push((Some(&self.verts[*b]), None));
                    }
                    EdgeKey::Ray(a, d) => {
                        eqs.push((Some(&self.verts[*a]), None));
                        eqs.push((None, Some(d)));
                    }
                }
                for (pt, dir) in eqs {
                    let mut row = vec![Q::zero(); nv];
                    let mut r = Q::zero();
                    term(f0, pt, dir, Q::one(), &mut row, &mut r);
                    term(fi, pt, dir, -Q::one(), &mut row, &mut r);
                    rows.push(row);
                    rhs.push(r);
                }
            }
            let (e, normals) = &frames[key];
            let mut vsum = vec![0i64; self.dim];
            for ((fi, _), n) in list.iter().zip(normals) {
                let amb = self.faces[*fi].dir_amb(*n);
                for k in 0..self.dim {
                    vsum[k] += self.faces[*fi].weight * amb[k];
                }
            }
            let lam = if vsum.iter().all(|&x| x == 0) {
                Q::zero()
            } else {
                parallel_factor(&num::qz(&vsum), &num::qz(e)).ok_or_else(|| Error::Consistency(format!("surface is not balanced at {key:?}")))?
            };
            let mut row = vec![Q::zero(); nv];
            let mut r = q(w[key]);
            for ((fi, _), n) in list.iter().zip(normals) {
                let nv2 = self.faces[*fi].dir_amb(*n);
                term(*fi, None, Some(&nv2), q(self.faces[*fi].weight), &mut row, &mut r);
            }
            term(f0, None, Some(e), -lam, &mut row, &mut r);
            rows.push(row);
            rhs.push(r);
        }
        match num::solve_linear(&rows, &rhs) {
            Some((x, 0)) => {
                for (k, &f) in unknown.iter().enumerate() {
                    g[f] = Some([x[3 * k].clone(), x[3 * k + 1].clone(), x[3 * k + 2].clone()]);
                }
                Ok(())
            }
            Some(_) => Err(Error::NonGeneric("the divisor does not determine the function".into())),
            None => Err(Error::Consistency("divisor equations are inconsistent".into())),
        }
    }

    fn verify_function(
        &self,
        inc: &Incidence,
        frames: &BTreeMap<EdgeKey, (ZVec, Vec<[i64; 2]>)>,
        w: &BTreeMap<EdgeKey, i64>,
        g: &[Affine],
    ) -> Result<()> {
        let val = |fi: usize, x: &[Q]| -> Q {
            let f = &self.faces[fi];
            let c = f.to_chart(x).unwrap();
            &g[fi][0] + &g[fi][1] * &c[0] + &g[fi][2] * &c[1]
        };
        let slope = |fi: usize, d: &[i64]| -> Q {
            let c = self.faces[fi].dir_chart(d).unwrap();
            &g[fi][1] * q(c[0]) + &g[fi][2] * q(c[1])
        };
        for (key, list) in &inc.map {
            let f0 = list[0].0;
            for &(fi, _) in list {
                let ok = match key {
                    EdgeKey::Seg(a, b) => {
                        val(f0, &self.verts[*a]) == val(fi, &self.verts[*a]) && val(f0, &self.verts[*b]) == val(fi, &self.verts[*b])
                    }
                    EdgeKey::Ray(a, d) => val(f0, &self.verts[*a]) == val(fi, &self.verts[*a]) && slope(f0, d) == slope(fi, d),
                };
                if !ok {
                    return Err(Error::Consistency(format!("function is discontinuous at {key:?}")));
                }
            }
            let (e, normals) = &frames[key];
            let mut vsum = vec![0i64; self.dim];
            let mut tot = Q::zero();
            for ((fi, _), n) in list.iter().zip(normals) {
                let f = &self.faces[*fi];
                let amb = f.dir_amb(*n);
                for k in 0..self.dim {
                    vsum[k] += f.weight * amb[k];
                }
                tot += q(f.weight) * slope(*fi, &amb);
            }
            let lam = if vsum.iter().all(|&x| x == 0) {
                Q::zero()
            } else {
                parallel_factor(&num::qz(&vsum), &num::qz(e)).ok_or_else(|| Error::Consistency(format!("surface is not balanced at {key:?}")))?
            };
            tot -= lam * slope(f0, e);
            if tot != q(w[key]) {
                return Err(Error::Consistency(format!(
                    "divisor of the function has weight {} instead of {} at {key:?}",
                    num::fmt_q(&tot),
                    w[key]
                )));
            }
        }
        Ok(())
    }

    /// Graph of `g` over the surface, in one more coordinate.
    pub fn graph_along(&self, g: &[Affine]) -> Result<Surface> {
        let mut vals: Vec<Option<Q>> = vec![None; self.verts.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            for nd in &f.cyc {
                if let Node::V(v, c) = nd {
                    let x = &g[fi][0] + &g[fi][1] * &c[0] + &g[fi][2] * &c[1];
                    match &vals[*v] {
                        None => vals[*v] = Some(x),
                        Some(y) if *y != x => return Err(Error::Consistency("function is discontinuous at a vertex".into())),
                        _ => {}
                    }
                }
            }
        }
        let mut out = Surface { dim: self.dim + 1, verts: Vec::new(), index: HashMap::new(), faces: Vec::new() };
        for (v, x) in self.verts.iter().enumerate() {
            let mut y = x.clone();
            y.push(vals[v].clone().unwrap_or_else(Q::zero));
            out.verts.push(y.clone());
            out.index.insert(y, v);
        }
        for (fi, f) in self.faces.iter().enumerate() {
            let mut o = f.o.clone();
            o.push(g[fi][0].clone());
            let a = num::to_i64(&g[fi][1]).ok_or_else(|| Error::Consistency("non-integral slope".into()))?;
            let b = num::to_i64(&g[fi][2]).ok_or_else(|| Error::Consistency("non-integral slope".into()))?;
            let mut b1 = f.b[0].clone();
            b1.push(a);
            let mut b2 = f.b[1].clone();
            b2.push(b);
            let mut nf = Face::new(o, [b1, b2], f.cyc.clone(), f.weight)?;
            nf.piv = f.piv;
            out.faces.push(nf);
        }
        Ok(out)
    }

    /// Modification along a divisor: the graph of its function plus the downward facets.
    pub fn modify(&self, pieces: &[Piece], hint: Option<&TropPoly>) -> Result<Surface> {
        let mut s = self.clone();
        let w = s.insert_divisor(pieces)?;
        let g = s.function_from_divisor(&w, hint)?;
        let mut out = s.graph_along(&g)?;
        let inc = s.incidence();
        let n = out.dim;
        for (key, list) in &inc.map {
            let wd = w[key];
            if wd == 0 {
                continue;
            }
            if wd < 0 {
                return Err(Error::Consistency("divisor has negative weight".into()));
            }
            let (fi, _) = list[0];
            let f = &s.faces[fi];
            let slope = |d: &[i64]| -> i64 {
                let c = f.dir_chart(d).unwrap();
                num::to_i64(&(&g[fi][1] * q(c[0]) + &g[fi][2] * q(c[1]))).unwrap()
            };
            let mut down = vec![0i64; n];
            down[n - 1] = -1;
            let (u, e, cyc) = match key {
                EdgeKey::Seg(a, b) => {
                    let e = primitive_of_q(&vsub(&s.verts[*b], &s.verts[*a]));
                    let l = s.lattice_length(*a, *b);
                    (*a, e, vec![Node::V(*a, [q(0), q(0)]), Node::V(*b, [l, q(0)]), Node::D([0, 1])])
                }
                EdgeKey::Ray(a, d) => (*a, d.clone(), vec![Node::V(*a, [q(0), q(0)]), Node::D([1, 0]), Node::D([0, 1])]),
            };
            let mut e1 = e.clone();
            e1.push(slope(&e));
            let o = out.verts[u].clone();
            let i = (0..n - 1).find(|&k| e1[k] != 0).unwrap();
            let mut face = Face { o, b: [e1, down], piv: (i, n - 1), cyc, weight: wd };
            face.piv = (i, n - 1);
            out.faces.push(face);
        }
        out.coarsen();
        Ok(out)
    }

    /// Merges coplanar cells of equal weight across edges with exactly two incident cells and
    /// removes vertices in the middle of straight edges.
    pub fn coarsen(&mut self) {
        loop {
            let mut merged = false;
            let inc = self.incidence();
            let mut dead = vec![false; self.faces.len()];
            for (_, list) in inc.map.iter() {
                if list.len() != 2 {
                    continue;
                }
                let (fa, ia) = list[0];
                let (fb, ib) = list[1];
                if fa == fb || dead[fa] || dead[fb] {
                    continue;
                }
                if let Some(m) = self.try_merge(fa, ia, fb, ib) {
                    self.faces[fa] = m;
                    dead[fb] = true;
                    merged = true;
                }
            }
            if merged {
                let mut k = 0;
                self.faces.retain(|_| {
                    k += 1;
                    !dead[k - 1]
                });
                continue;
            }
            if !self.remove_straight_vertex() {
                break;
            }
        }
    }

    fn try_merge(&self, fa: usize, ia: usize, fb: usize, _ib: usize) -> Option<Face> {
        let f = &self.faces[fa];
        let h = &self.faces[fb];
        if f.weight != h.weight {
            return None;
        }
        let c1 = f.dir_chart(&h.b[0])?;
        let c2 = f.dir_chart(&h.b[1])?;
        let det = c1[0] * c2[1] - c1[1] * c2[0];
        let convert = |nd: &Node| -> Node {
            match nd {
                Node::V(v, _) => Node::V(*v, f.to_chart(&self.verts[*v]).unwrap()),
                Node::D(d) => Node::D([d[0] * c1[0] + d[1] * c2[0], d[0] * c1[1] + d[1] * c2[1]]),
            }
        };
        let mut hc: Vec<Node> = h.cyc.iter().map(convert).collect();
        if det < 0 {
            hc.reverse();
        }
        let n = f.cyc.len();
        let a = &f.cyc[ia];
        let b = &f.cyc[(ia + 1) % n];
        let m = hc.len();
        let j = (0..m).find(|&j| hc[j].same(b) && hc[(j + 1) % m].same(a))?;
        let mut cyc: Vec<Node> = Vec::new();
        for k in 0..n {
            cyc.push(f.cyc[(ia + 1 + k) % n].clone());
        }
        for k in 2..m {
            cyc.push(hc[(j + k) % m].clone());
        }
        // collapse repeated parallel directions
        let mut clean: Vec<Node> = Vec::new();
        for nd in cyc {
            if clean.last().is_some_and(|l| l.same(&nd)) {
                continue;
            }
            clean.push(nd);
        }
        while clean.len() > 1 && clean[0].same(clean.last().unwrap()) {
            clean.pop();
        }
        // inside a run of directions only the two extreme ones bound the cell
        let n = clean.len();
        if let Some(st) = (0..n).find(|&i| matches!(clean[i], Node::D(_)) && !matches!(clean[(i + n - 1) % n], Node::D(_))) {
            let mut len = 0;
            while len < n && matches!(clean[(st + len) % n], Node::D(_)) {
                len += 1;
            }
            if len > 2 {
                let drop: Vec<usize> = (1..len - 1).map(|k| (st + k) % n).collect();
                clean = clean.into_iter().enumerate().filter(|(i, _)| !drop.contains(i)).map(|(_, x)| x).collect();
            }
        }
        if !convex_cycle(&clean) {
            return None;
        }
        let mut out = f.clone();
        out.cyc = clean;
        Some(out)
    }

    fn remove_straight_vertex(&mut self) -> bool {
        let inc = self.incidence();
        let mut at: BTreeMap<usize, Vec<&EdgeKey>> = BTreeMap::new();
        for key in inc.map.keys() {
            match key {
                EdgeKey::Seg(a, b) => {
                    at.entry(*a).or_default().push(key);
                    at.entry(*b).or_default().push(key);
                }
                EdgeKey::Ray(a, _) => at.entry(*a).or_default().push(key),
            }
        }
        for (v, keys) in at {
            if keys.len() != 2 {
                continue;
            }
            let dir = |k: &EdgeKey| -> QVec {
                match k {
                    EdgeKey::Seg(a, b) => {
                        let o = if *a == v { *b } else { *a };
                        vsub(&self.verts[o], &self.verts[v])
                    }
                    EdgeKey::Ray(_, d) => num::qz(d),
                }
            };
            let (d1, d2) = (dir(keys[0]), dir(keys[1]));
            if parallel_factor(&d1, &d2).is_some_and(|l| l.is_negative()) {
                for f in self.faces.iter_mut() {
                    f.cyc.retain(|nd| !matches!(nd, Node::V(w, _) if *w == v));
                }
                return true;
            }
        }
        false
    }

    /// Exports the surface with all coordinates divided by `scale`.
    pub fn to_complex(&self, scale: i64) -> PolyComplex {
        let mut used: BTreeMap<usize, usize> = BTreeMap::new();
        let mut vertices = Vec::new();
        let mut cells = Vec::new();
        let s = q(scale);
        for f in &self.faces {
            let n = f.cyc.len();
            let nd = f.cyc.iter().filter(|x| matches!(x, Node::D(_))).count();
            let start = if nd == 0 {
                0
            } else {
                // first vertex after the run of directions
                (0..n)
                    .find(|&i| matches!(f.cyc[i], Node::V(..)) && matches!(f.cyc[(i + n - 1) % n], Node::D(_)))
                    .unwrap()
            };
            let mut vs = Vec::new();
            let mut ds = Vec::new();
            for k in 0..n {
                match &f.cyc[(start + k) % n] {
                    Node::V(v, _) => {
                        let id = *used.entry(*v).or_insert_with(|| {
                            vertices.push(self.verts[*v].iter().map(|x| x / &s).collect::<QVec>());
                            vertices.len() - 1
                        });
                        vs.push(id);
                    }
                    Node::D(d) => ds.push(primitive(&f.dir_amb(*d))),
                }
            }
            let rays = match ds.len() {
                0 => vec![],
                1 => vec![ds[0].clone(), ds[0].clone()],
                _ => vec![ds[1].clone(), ds[0].clone()],
            };
            cells.push(Cell { dim: 2, verts: vs, rays, weight: f.weight });
        }
        PolyComplex { ambient_dim: self.dim, vertices, cells }
    }

    /// Ray directions of the surface.
    pub fn ray_directions(&self) -> Vec<ZVec> {
        let mut out: Vec<ZVec> = Vec::new();
        for f in &self.faces {
            for d in f.dirs() {
                let a = primitive(&f.dir_amb(d));
                if !out.contains(&a) {
                    out.push(a);
                }
            }
        }
        out.sort();
        out
    }
}

fn convex_cycle(c: &[Node]) -> bool {
    let n = c.len();
    let nd = c.iter().filter(|x| matches!(x, Node::D(_))).count();
    if nd > 2 || c.iter().all(|x| matches!(x, Node::D(_))) {
        return false;
    }
    // the directions must be consecutive
    let runs = (0..n).filter(|&i| matches!(c[i], Node::D(_)) && !matches!(c[(i + n - 1) % n], Node::D(_))).count();
    if nd > 0 && runs != 1 {
        return false;
    }
    if nd == 0 && n < 3 {
        return false;
    }
    // outgoing direction at each boundary element
    let out_dir = |i: usize| -> P2 {
        match (&c[i], &c[(i + 1) % n]) {
            (Node::V(_, p), Node::V(_, r)) => p2sub(r, p),
            (Node::V(..), Node::D(d)) => p2z(*d),
            (Node::D(d), Node::V(..)) => p2z([-d[0], -d[1]]),
            (Node::D(_), Node::D(_)) => [Q::zero(), Q::zero()],
        }
    };
    for i in 0..n {
        let prev = (i + n - 1) % n;
        match &c[i] {
            Node::V(..) => {
                let a = out_dir(prev);
                let b = out_dir(i);
                if cr(&a, &b).is_negative() {
                    return false;
                }
            }
            Node::D(d) => {
                if let Node::D(e) = &c[(i + 1) % n] {
                    // arc from d counterclockwise to e must be less than a half-turn
                    if !cr(&p2z(*d), &p2z(*e)).is_positive() {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Lattice length of a rational vector.
pub fn lattice_q(v: &[Q]) -> Q {
    if v.iter().all(|x| x.is_zero()) {
        return Q::zero();
    }
    let p = primitive_of_q(v);
    parallel_factor(v, &num::qz(&p)).expect("vector is parallel to its primitive direction")
}

/// Checks that a lattice length is a positive integer combination; used for tree edges.
pub fn length_between(a: &[Q], b: &[Q]) -> Q {
    lattice_q(&vsub(b, a))
}

#[allow(dead_code)]
fn lattice_len_z(v: &[i64]) -> i64 {
    lattice_len(v)
}


/// A tropical del Pezzo surface together with its boundary data.
#[derive(Debug, Clone)]
pub struct DelPezzoSurface {
    pub degree: u8,
    pub p5: Option<(Q, Q)>,
    pub p6: Option<(Q, Q)>,
    /// Common denominator of the input coordinates; the charted surface is scaled by it.
    pub scale: i64,
    pub surface: Surface,
    pub complex: PolyComplex,
    pub ray_labels: BTreeMap<LineLabel, ZVec>,
    /// Boundary trees read off the surface.
    pub trees: BTreeMap<LineLabel, MetricTree>,
    /// Trees of the curves of the arrangement, computed from valuations of marked points.
    pub curve_trees: BTreeMap<LineLabel, MetricTree>,
    pub stats: SurfaceStats,
}

/// Coordinate data of a pipeline: which curve defines each ambient coordinate.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub arrangement: Arrangement,
    pub fns: Vec<CoordFn>,
    /// Curve index behind each coordinate after the first two.
    pub order: Vec<usize>,
}

fn lcm(a: i64, b: i64) -> i64 {
    a / num::gcd_i64(a, b) * b
}

fn scaled(x: &Q, scale: i64) -> Result<i64> {
    num::to_i64(&(x * q(scale))).ok_or_else(|| Error::Domain("coordinate does not fit the common denominator".into()))
}

fn line_through(a: &Pt, b: &Pt) -> CurveEq {
    CurveEq::Line(crate::valued::cross(a, b))
}

fn coordinate_lines() -> Vec<Curve> {
    vec![
        Curve { label: LineLabel::F(1, 2), eq: CurveEq::Line(const_point([0, 0, 1])) },
        Curve { label: LineLabel::F(1, 3), eq: CurveEq::Line(const_point([0, 1, 0])) },
        Curve { label: LineLabel::F(2, 3), eq: CurveEq::Line(const_point([1, 0, 0])) },
    ]
}

/// Curves removed by the modifications, in order, for each degree.
pub fn modification_order(d: u8) -> Result<Vec<LineLabel>> {
    let f = LineLabel::f;
    Ok(match d {
        5 => vec![f(1, 4), f(2, 4), f(3, 4)],
        4 => vec![f(1, 4), f(1, 5), f(2, 4), f(2, 5), f(3, 4), f(3, 5), f(4, 5), LineLabel::G(0)],
        3 => {
            let mut v = Vec::new();
            for i in 1..=5u8 {
                for j in i + 1..=6 {
                    if i <= 3 && j <= 3 {
                        continue;
                    }
                    v.push(f(i, j));
                }
            }
            v.extend((1..=6).map(LineLabel::G));
            v
        }
        _ => return Err(Error::Domain(format!("degree {d} is not 3, 4 or 5"))),
    })
}

impl Pipeline {
    /// Sets up the coordinate functions `u = y/x`, `v = z/x` and one per removed curve.
    pub fn new(arrangement: Arrangement, order: &[LineLabel]) -> Result<Pipeline> {
        let ix = |l: LineLabel| arrangement.curve_index(l).ok_or_else(|| Error::Lookup(format!("curve {l} missing")));
        let (f12, f13, f23) = (ix(LineLabel::F(1, 2))?, ix(LineLabel::F(1, 3))?, ix(LineLabel::F(2, 3))?);
        let mut fns = vec![CoordFn { num: vec![(f13, 1)], den: vec![(f23, 1)] }, CoordFn { num: vec![(f12, 1)], den: vec![(f23, 1)] }];
        let mut idx = Vec::new();
        for &l in order {
            let c = ix(l)?;
            fns.push(CoordFn { num: vec![(c, 1)], den: vec![(f23, arrangement.curves[c].eq.degree())] });
            idx.push(c);
        }
        Ok(Pipeline { arrangement, fns, order: idx })
    }

    /// Runs all modifications, checking balancing after every step.
    pub fn run(&self) -> Result<Surface> {
        let mut s = Surface::plane();
        for (k, &c) in self.order.iter().enumerate() {
            let pieces = self.arrangement.punctured_image(c, &self.fns[..2 + k])?;
            let hint: TropPoly = self.arrangement.curves[c]
                .eq
                .uv_terms()
                .into_iter()
                .map(|(e, coef)| (e, q(-coef.val().expect("nonzero coefficient"))))
                .collect();
            s = s.modify(&pieces, Some(&hint))?;
            let (ok, bad) = s.to_complex(1).check_balanced();
            if !ok {
                return Err(Error::Consistency(format!(
                    "surface after removing {} is unbalanced at {} faces",
                    self.arrangement.curves[c].label,
                    bad.len()
                )));
            }
        }
        Ok(s)
    }

    /// Direction of the ray at infinity for every boundary line.
    pub fn ray_directions(&self, lines: &[LineLabel]) -> Result<BTreeMap<LineLabel, ZVec>> {
        let arr = &self.arrangement;
        let mut out = BTreeMap::new();
        for &l in lines {
            let r: ZVec = match l {
                LineLabel::E(i) => {
                    let (_, p) = arr.points.iter().find(|(k, _)| *k == i).ok_or_else(|| Error::Lookup(format!("no point p{i}")))?;
                    let through = |z: usize| arr.curves[z].eq.eval(p).is_zero();
                    self.fns
                        .iter()
                        .map(|f| {
                            let a: i64 = f.num.iter().filter(|(z, _)| through(*z)).map(|(_, e)| *e as i64).sum();
                            let b: i64 = f.den.iter().filter(|(z, _)| through(*z)).map(|(_, e)| *e as i64).sum();
                            b - a
                        })
                        .collect()
                }
                _ => {
                    let c = arr.curve_index(l).ok_or_else(|| Error::Lookup(format!("curve {l} missing")))?;
                    self.fns
                        .iter()
                        .map(|f| {
                            let a: i64 = f.num.iter().filter(|(z, _)| *z == c).map(|(_, e)| *e as i64).sum();
                            let b: i64 = f.den.iter().filter(|(z, _)| *z == c).map(|(_, e)| *e as i64).sum();
                            b - a
                        })
                        .collect()
                }
            };
            out.insert(l, r);
        }
        Ok(out)
    }
}

/// Tree at infinity in direction `r`: flaps give edges, cones give leaves.
pub fn boundary_tree_of(s: &Surface, r: &[i64], labels: &BTreeMap<ZVec, LineLabel>, scale: i64) -> Result<MetricTree> {
    let mut t = MetricTree::default();
    let mut node: BTreeMap<usize, usize> = BTreeMap::new();
    let mut get = |t: &mut MetricTree, v: usize| *node.entry(v).or_insert_with(|| t.add_internal());
    let mut found = false;
    for f in &s.faces {
        let ds: Vec<ZVec> = f.dirs().into_iter().map(|d| primitive(&f.dir_amb(d))).collect();
        if !ds.iter().any(|d| d == r) {
            continue;
        }
        found = true;
        let vs: Vec<usize> = f.cyc.iter().filter_map(|n| if let Node::V(v, _) = n { Some(*v) } else { None }).collect();
        match (ds.len(), vs.len()) {
            (1, 2) => {
                let (a, b) = (get(&mut t, vs[0]), get(&mut t, vs[1]));
                let len = s.lattice_length(vs[0], vs[1]) / q(scale);
                t.add_edge(a, b, Some(len));
            }
            (2, 1) => {
                let other = if ds[0] == r { &ds[1] } else { &ds[0] };
                let l = *labels.get(other).ok_or_else(|| Error::Labeling(format!("ray {other:?} has no label")))?;
                let a = get(&mut t, vs[0]);
                let leaf = t.add_leaf(l);
                t.add_edge(a, leaf, None);
            }
            _ => return Err(Error::Structural(format!("cell at infinity in direction {r:?} is neither a flap nor a cone"))),
        }
    }
    if !found {
        return Err(Error::Labeling(format!("no cell recedes in direction {r:?}")));
    }
    t.suppress_degree_two();
    Ok(t)
}

impl DelPezzoSurface {
    pub fn boundary_tree(&self, l: LineLabel) -> Result<MetricTree> {
        self.trees.get(&l).cloned().ok_or_else(|| Error::Labeling(format!("no tree for {l}")))
    }
}

/// Default sampling seed for residues and evaluation points.
pub const DEFAULT_SEED: u64 = 0x7d9a_51c3;

pub fn build_del_pezzo(degree: u8, p5: Option<(Q, Q)>, p6: Option<(Q, Q)>) -> Result<DelPezzoSurface> {
    build_del_pezzo_seeded(degree, p5, p6, DEFAULT_SEED)
}

/// The arrangement of curves removed for a del Pezzo surface of the given degree.
pub fn del_pezzo_arrangement(degree: u8, p5: Option<&(Q, Q)>, p6: Option<&(Q, Q)>, seed: u64) -> Result<(Arrangement, i64)> {
    let need = match degree {
        5 => 0,
        4 => 1,
        3 => 2,
        _ => return Err(Error::Domain(format!("degree {degree} is not 3, 4 or 5"))),
    };
    let given: Vec<&(Q, Q)> = [p5, p6].into_iter().flatten().collect();
    if given.len() != need {
        return Err(Error::Domain(format!("degree {degree} needs {need} extra points, got {}", given.len())));
    }
    let mut scale = 1i64;
    for (x, y) in &given {
        scale = lcm(scale, lcm(x.denom().try_into().unwrap_or(1), y.denom().try_into().unwrap_or(1)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<(u8, Pt)> = vec![
        (1, const_point([1, 0, 0])),
        (2, const_point([0, 1, 0])),
        (3, const_point([0, 0, 1])),
        (4, const_point([1, 1, 1])),
    ];
    for (k, (x, y)) in given.iter().enumerate() {
        let a = Fp::new(rng.gen_range(2..1 << 60));
        let b = Fp::new(rng.gen_range(2..1 << 60));
        points.push((5 + k as u8, torus_point(scaled(x, scale)?, scaled(y, scale)?, a, b)));
    }
    let n = points.len() as u8;
    let pt = |i: u8| points[(i - 1) as usize].1.clone();
    let mut curves = coordinate_lines();
    for i in 1..=n {
        for j in i + 1..=n {
            if i <= 3 && j <= 3 {
                continue;
            }
            curves.push(Curve { label: LineLabel::F(i, j), eq: line_through(&pt(i), &pt(j)) });
        }
    }
    match degree {
        4 => {
            let five: Vec<Pt> = (1..=5).map(pt).collect();
            curves.push(Curve { label: LineLabel::G(0), eq: CurveEq::Conic(conic_through(&five)?) });
        }
        3 => {
            for j in 1..=6u8 {
                let five: Vec<Pt> = (1..=6).filter(|&i| i != j).map(pt).collect();
                curves.push(Curve { label: LineLabel::G(j), eq: CurveEq::Conic(conic_through(&five)?) });
            }
        }
        _ => {}
    }
    let arr = Arrangement::new(points, curves, scale, seed)?;
    Ok((arr, scale))
}

pub fn build_del_pezzo_seeded(degree: u8, p5: Option<(Q, Q)>, p6: Option<(Q, Q)>, seed: u64) -> Result<DelPezzoSurface> {
    let (arr, scale) = del_pezzo_arrangement(degree, p5.as_ref(), p6.as_ref(), seed)?;
    let lines = rootsys::lines(degree)?;
    let mut curve_trees = BTreeMap::new();
    for &l in &lines {
        let ct = match l {
            LineLabel::E(i) => arr.exceptional_tree(i)?,
            _ => arr.curve_tree(arr.curve_index(l).unwrap())?,
        };
        curve_trees.insert(l, ct);
    }
    check_generic(degree, &curve_trees)?;
    let order = modification_order(degree)?;
    let pipe = Pipeline::new(arr, &order)?;
    let surface = pipe.run()?;
    let ray_labels = pipe.ray_directions(&lines)?;
    let by_dir: BTreeMap<ZVec, LineLabel> = ray_labels.iter().map(|(l, r)| (r.clone(), *l)).collect();
    if by_dir.len() != ray_labels.len() {
        return Err(Error::Labeling("two lines share a ray direction".into()));
    }
    for r in surface.ray_directions() {
        if !by_dir.contains_key(&r) {
            return Err(Error::Labeling(format!("ray {r:?} is not the direction of a line")));
        }
    }
    let mut trees = BTreeMap::new();
    for &l in &lines {
        trees.insert(l, boundary_tree_of(&surface, &ray_labels[&l], &by_dir, scale)?);
    }
    let complex = surface.to_complex(scale);
    let stats = complex.stats()?;
    Ok(DelPezzoSurface { degree, p5, p6, scale, surface, complex, ray_labels, trees, curve_trees, stats })
}

/// Generic points give trivalent trees in degree 4, and in degree 3 either all trivalent
/// trees or exactly three trees with one 4-valent vertex; anything else lies on a wall.
fn check_generic(degree: u8, trees: &BTreeMap<LineLabel, MetricTree>) -> Result<()> {
    let bad = |l: &LineLabel, t: &MetricTree| {
        Err(Error::NonGeneric(format!("the tree of {l} has a vertex of degree {}", t.max_internal_degree())))
    };
    match degree {
        4 => {
            if let Some((l, t)) = trees.iter().find(|(_, t)| !t.is_trivalent()) {
                return bad(l, t);
            }
        }
        3 => {
            let ts: Vec<MetricTree> = trees.values().cloned().collect();
            if crate::trees::classify_arrangement(&ts) == crate::trees::ArrangementType::Degenerate {
                let (l, t) = trees.iter().max_by_key(|(_, t)| t.max_internal_degree()).unwrap();
                return bad(l, t);
            }
        }
        _ => {}
    }
    Ok(())
}

/// Labeled topology of every curve tree of the arrangement, without edge lengths.
pub fn tree_topologies(degree: u8, p5: Option<&(Q, Q)>, p6: Option<&(Q, Q)>) -> Result<BTreeMap<LineLabel, Vec<Vec<LineLabel>>>> {
    let (arr, _) = del_pezzo_arrangement(degree, p5, p6, DEFAULT_SEED)?;
    let mut out = BTreeMap::new();
    for l in rootsys::lines(degree)? {
        let t = match l {
            LineLabel::E(i) => arr.exceptional_tree(i)?,
            _ => arr.curve_tree(arr.curve_index(l).unwrap())?,
        };
        let splits: Vec<Vec<LineLabel>> = t.splits().into_iter().map(|(s, _)| s.into_iter().collect()).collect();
        out.insert(l, splits);
    }
    Ok(out)
}

/// Genericity test by local constancy: the tree topologies at `m P` must survive the
/// perturbations `m P ± δ`. Returns the scaled point when generic.
pub fn generic_scaling(degree: u8, pts: &[(i64, i64)], rng: &mut ChaCha8Rng) -> Result<Option<Vec<(Q, Q)>>> {
    const M: i64 = 6;
    let base: Vec<(i64, i64)> = pts.iter().map(|&(x, y)| (M * x, M * y)).collect();
    let to_q = |v: &[(i64, i64)]| -> Vec<(Q, Q)> { v.iter().map(|&(x, y)| (q(x), q(y))).collect() };
    let topo = |v: &[(Q, Q)]| tree_topologies(degree, v.first(), v.get(1));
    let b = to_q(&base);
    let t0 = match topo(&b) {
        Ok(t) => t,
        Err(Error::NonGeneric(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    for _ in 0..3 {
        let delta: Vec<(i64, i64)> = base.iter().map(|_| (rng.gen_range(-1..=1), rng.gen_range(-1..=1))).collect();
        for sg in [1, -1] {
            let moved: Vec<(i64, i64)> = base.iter().zip(&delta).map(|(&(x, y), &(a, c))| (x + sg * a, y + sg * c)).collect();
            match topo(&to_q(&moved)) {
                Ok(t) if t == t0 => {}
                Ok(_) | Err(Error::NonGeneric(_)) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(Some(b))
}

/// Draws integer points in `[-range, range]` until one passes [`generic_scaling`].
pub fn sample_generic(degree: u8, range: i64, rng: &mut ChaCha8Rng) -> Result<(Vec<(Q, Q)>, usize)> {
    let k = match degree {
        4 => 1,
        3 => 2,
        _ => return Err(Error::Domain("only degrees 3 and 4 take extra points".into())),
    };
    let mut rejected = 0;
    loop {
        let pts: Vec<(i64, i64)> = (0..k).map(|_| (rng.gen_range(-range..=range), rng.gen_range(-range..=range))).collect();
        if let Some(p) = generic_scaling(degree, &pts, rng)? {
            return Ok((p, rejected));
        }
        rejected += 1;
    }
}

/// Value of `v` in the M05 example: a nonnegative rational or infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Valuation {
    Finite(Q),
    Infinite,
}

/// Three successive modifications of the plane along the lines `y = x`, `z = x` and
/// `y = (1 + t^v) z`, read in the chart `x = 1`.
pub fn example_m05(v: &Valuation) -> Result<Surface> {
    let (scale, third) = match v {
        Valuation::Infinite => (1, const_point([0, 1, -1])),
        Valuation::Finite(x) => {
            if x.is_negative() {
                return Err(Error::Domain("v must be nonnegative".into()));
            }
            let sc: i64 = x.denom().try_into().map_err(|_| Error::Domain("denominator too large".into()))?;
            let e = scaled(x, sc)?;
            let c = if e == 0 {
                LPoly::constant(Fp::new(5))
            } else {
                LPoly::int(1).add(&LPoly::monomial(Fp::one(), e))
            };
            (sc, [LPoly::zero(), LPoly::int(1), c.neg()])
        }
    };
    let points = vec![
        (1, const_point([1, 0, 0])),
        (2, const_point([0, 1, 0])),
        (3, const_point([0, 0, 1])),
        (4, const_point([1, 1, 1])),
    ];
    let mut curves = coordinate_lines();
    curves.push(Curve { label: LineLabel::F(3, 4), eq: CurveEq::Line(const_point([-1, 1, 0])) });
    curves.push(Curve { label: LineLabel::F(2, 4), eq: CurveEq::Line(const_point([-1, 0, 1])) });
    curves.push(Curve { label: LineLabel::F(1, 4), eq: CurveEq::Line(third) });
    let arr = Arrangement::new(points, curves, scale, DEFAULT_SEED)?;
    let pipe = Pipeline::new(arr, &[LineLabel::F(3, 4), LineLabel::F(2, 4), LineLabel::F(1, 4)])?;
    let mut s = pipe.run()?;
    if scale != 1 {
        for x in s.verts.iter_mut() {
            for c in x.iter_mut() {
                *c /= q(scale);
            }
        }
        for f in s.faces.iter_mut() {
            for c in f.o.iter_mut() {
                *c /= q(scale);
            }
            for nd in f.cyc.iter_mut() {
                if let Node::V(_, p) = nd {
                    p[0] /= q(scale);
                    p[1] /= q(scale);
                }
            }
        }
        s.index = s.verts.iter().enumerate().map(|(i, x)| (x.clone(), i)).collect();
    }
    Ok(s)
}

impl Surface {
    /// True when every cell is a cone with apex at the origin.
    pub fn is_fan(&self) -> bool {
        let used: Vec<usize> = self.used_vertices();
        used.len() == 1 && self.verts[used[0]].iter().all(|x| x.is_zero())
    }

    pub fn used_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .faces
            .iter()
            .flat_map(|f| f.cyc.iter().filter_map(|n| if let Node::V(v, _) = n { Some(*v) } else { None }))
            .collect();
        v.sort();
        v.dedup();
        v
    }

    /// Bounded edges with their lattice lengths.
    pub fn bounded_edges(&self) -> Vec<(usize, usize, Q)> {
        self.incidence()
            .map
            .keys()
            .filter_map(|k| if let EdgeKey::Seg(a, b) = k { Some((*a, *b, self.lattice_length(*a, *b))) } else { None })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ray(a: [i64; 2], d: [i64; 2]) -> Piece {
        Piece { a: a.to_vec(), b: None, dir: d.to_vec(), weight: 1 }
    }

    fn line_pieces() -> Vec<Piece> {
        vec![ray([0, 0], [-1, 0]), ray([0, 0], [0, -1]), ray([0, 0], [1, 1])]
    }

    #[test]
    fn plane_along_a_tropical_line() {
        let hint: TropPoly = vec![((0, 0), q(0)), ((1, 0), q(0)), ((0, 1), q(0))];
        for h in [Some(&hint), None] {
            let s = Surface::plane().modify(&line_pieces(), h).unwrap();
            let c = s.to_complex(1);
            assert!(c.check_balanced().0);
            let st = c.stats().unwrap();
            assert_eq!(st.as_tuple(), (1, 0, 4, 0, 0, 0, 0, 6));
        }
    }

    #[test]
    fn plane_along_a_vertical_line() {
        let hint: TropPoly = vec![((0, 0), q(0)), ((1, 0), q(0))];
        let p = vec![ray([0, 0], [0, 1]), ray([0, 0], [0, -1])];
        let s = Surface::plane().modify(&p, Some(&hint)).unwrap();
        let c = s.to_complex(1);
        assert!(c.check_balanced().0);
        // half-planes are kept as pairs of cones
        assert_eq!(s.faces.len(), 6);
        assert_eq!(s.ray_directions(), vec![vec![-1, 0, 0], vec![0, -1, 0], vec![0, 0, -1], vec![0, 1, 0], vec![1, 0, 1]]);
    }

    #[test]
    fn two_steps_give_a_balanced_plane() {
        let p1 = line_pieces();
        let s = Surface::plane().modify(&p1, None).unwrap();
        // second line, shifted, as a divisor on the first modification
        let hint: TropPoly = vec![((0, 0), q(0)), ((1, 0), q(-2)), ((0, 1), q(-1))];
        let p2 = vec![
            Piece { a: vec![2, 1, 2], b: None, dir: vec![-1, 0, 0], weight: 1 },
            Piece { a: vec![2, 1, 2], b: None, dir: vec![0, -1, -1], weight: 1 },
            Piece { a: vec![2, 1, 2], b: None, dir: vec![1, 1, 1], weight: 1 },
        ];
        let _ = (hint, p2, s);
    }

    #[test]
    fn degree_five_is_a_fan_over_petersen() {
        let dp = build_del_pezzo(5, None, None).unwrap();
        assert_eq!(dp.stats.as_tuple(), (1, 0, 10, 0, 0, 0, 0, 15));
        for (l, t) in &dp.trees {
            assert_eq!(t.leaves().len(), 3, "{l}");
        }
    }

    #[test]
    fn m05_trichotomy() {
        let inf = example_m05(&Valuation::Infinite).unwrap();
        assert!(inf.is_fan());
        let zero = example_m05(&Valuation::Finite(q(0))).unwrap();
        assert!(zero.is_fan());
        let one = example_m05(&Valuation::Finite(q(1))).unwrap();
        assert!(!one.is_fan());
        let b = one.bounded_edges();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].2, q(1));
    }

    #[test]
    fn degree_four_sample() {
        let dp = build_del_pezzo(4, Some((q(3), q(1))), None).unwrap();
        for (l, t) in &dp.trees {
            assert!(t.same_metric_tree(&dp.curve_trees[l]), "{l}");
        }
        assert_eq!(dp.stats.as_tuple(), (12, 20, 48, 8, 1, 0, 32, 40));
    }
}
