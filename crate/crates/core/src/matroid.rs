//! Vector matroids, their circuits and flats, Bergman-fan membership and symmetric
//! enumeration of Bergman-fan cones.
//!
//! Membership uses the min convention: `w` lies in the Bergman fan when the minimum of `w`
//! on every circuit is attained at least twice. The modification engine works with the
//! max convention; negating a vector passes between the two.
//!
//! Linear algebra runs modulo the prime `2^61 - 1` whenever a Hadamard bound shows that no
//! minor of the (integer-scaled) configuration can reach the prime, so zero patterns of
//! minors, and with them the matroid, are computed exactly. Larger inputs fall back to
//! exact rationals.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::num::{q, QVec, ZVec, Q};
use crate::rootsys::RootSystem;
use crate::valued::Fp;
use crate::{Error, Result};

trait Field: Clone {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn inv(&self) -> Self;
}

impl Field for Fp {
    fn zero() -> Self {
        Fp::zero()
    }
    fn is_zero(&self) -> bool {
        Fp::is_zero(*self)
    }
    fn add(&self, o: &Self) -> Self {
        Fp::add(*self, *o)
    }
    fn sub(&self, o: &Self) -> Self {
        Fp::sub(*self, *o)
    }
    fn mul(&self, o: &Self) -> Self {
        Fp::mul(*self, *o)
    }
    fn inv(&self) -> Self {
        Fp::inv(*self)
    }
}

impl Field for Q {
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn inv(&self) -> Self {
        self.recip()
    }
}

/// Incremental echelon basis that remembers how each row combines the inserted vectors.
#[derive(Clone)]
struct Span<F> {
    rows: Vec<(usize, Vec<F>, Vec<F>)>,
    inserted: usize,
}

impl<F: Field> Span<F> {
    fn new() -> Self {
        Span { rows: Vec::new(), inserted: 0 }
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    /// Returns `(r, c)` with `v = r + Σ c_k · inserted_k`, where `r` vanishes on all pivots.
    fn reduce(&self, v: &[F]) -> (Vec<F>, Vec<F>) {
        let mut r = v.to_vec();
        let mut c = vec![F::zero(); self.inserted];
        for (p, row, combo) in &self.rows {
            if r[*p].is_zero() {
                continue;
            }
            let f = r[*p].clone();
            for (x, y) in r.iter_mut().zip(row) {
                *x = x.sub(&f.mul(y));
            }
            for (x, y) in c.iter_mut().zip(combo) {
                *x = x.add(&f.mul(y));
            }
        }
        (r, c)
    }

    fn contains(&self, v: &[F]) -> bool {
        let mut r = v.to_vec();
        for (p, row, _) in &self.rows {
            if r[*p].is_zero() {
                continue;
            }
            let f = r[*p].clone();
            for (x, y) in r.iter_mut().zip(row) {
                *x = x.sub(&f.mul(y));
            }
        }
        r.iter().all(|x| x.is_zero())
    }

    /// Inserts `v`; returns false (and changes nothing) when `v` is already in the span.
    fn push(&mut self, v: &[F]) -> bool {
        let (r, c) = self.reduce(v);
        let Some(p) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = r[p].inv();
        let row: Vec<F> = r.iter().map(|x| x.mul(&inv)).collect();
        let mut combo: Vec<F> = c.iter().map(|x| F::zero().sub(x).mul(&inv)).collect();
        combo.push(inv);
        self.rows.push((p, row, combo));
        self.inserted += 1;
        true
    }
}

#[derive(Debug, Clone)]
enum Kernel {
    Modular(Vec<Vec<Fp>>),
    Exact(Vec<QVec>),
}

/// Scales a rational vector to a primitive-free integer vector with the same span.
fn integer_row(v: &[Q]) -> Vec<num_bigint::BigInt> {
    let l = v.iter().fold(num_bigint::BigInt::one(), |acc, x| acc.lcm(x.denom()));
    v.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect()
}

fn choose_kernel(vectors: &[QVec], dim: usize) -> Kernel {
    let ints: Vec<Vec<num_bigint::BigInt>> = vectors.iter().map(|v| integer_row(v)).collect();
    // log2 of the Hadamard bound: the product of the `dim` largest column norms.
    let mut logs: Vec<f64> = ints
        .iter()
        .map(|v| {
            let s: f64 = v.iter().map(|x| x.to_f64().unwrap_or(f64::INFINITY).powi(2)).sum();
            0.5 * s.max(1.0).log2()
        })
        .collect();
    logs.sort_by(|a, b| b.partial_cmp(a).expect("finite norms"));
    let bound: f64 = logs.iter().take(dim).sum();
    if bound < 60.0 {
        let rows = ints
            .iter()
            .map(|v| v.iter().map(|x| Fp::from_i64(x.to_i64().expect("bounded entry"))).collect())
            .collect();
        Kernel::Modular(rows)
    } else {
        Kernel::Exact(vectors.to_vec())
    }
}

/// A finite configuration of rational vectors and its matroid.
#[derive(Debug, Clone)]
pub struct VectorMatroid {
    pub labels: Vec<String>,
    pub vectors: Vec<QVec>,
    /// Minimal dependent sets of size at least two; filled by [`VectorMatroid::compute_circuits`].
    pub circuits: Vec<Vec<usize>>,
    pub rank: usize,
    pub warnings: Vec<String>,
    kernel: Kernel,
}

impl VectorMatroid {
    pub fn new(labels: Vec<String>, vectors: Vec<QVec>) -> Result<Self> {
        if labels.len() != vectors.len() {
            return Err(Error::Structural(format!("{} labels for {} vectors", labels.len(), vectors.len())));
        }
        let dim = vectors.first().map_or(0, |v| v.len());
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Structural("vectors of different lengths".into()));
        }
        let kernel = choose_kernel(&vectors, dim);
        let mut m = VectorMatroid { labels, vectors, circuits: Vec::new(), rank: 0, warnings: Vec::new(), kernel };
        m.rank = m.rank_of(&(0..m.len()).collect::<Vec<_>>());
        Ok(m)
    }

    pub fn from_integer(labels: Vec<String>, vectors: &[ZVec]) -> Result<Self> {
        VectorMatroid::new(labels, vectors.iter().map(|v| v.iter().map(|&x| q(x)).collect()).collect())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Whether ranks are computed modulo a prime (exact by the Hadamard guard).
    pub fn is_modular(&self) -> bool {
        matches!(self.kernel, Kernel::Modular(_))
    }

    pub fn rank_of(&self, set: &[usize]) -> usize {
        match &self.kernel {
            Kernel::Modular(rows) => rank_in(rows, set),
            Kernel::Exact(rows) => rank_in(rows, set),
        }
    }

    pub fn closure(&self, set: &[usize]) -> Vec<usize> {
        match &self.kernel {
            Kernel::Modular(rows) => closure_in(rows, set),
            Kernel::Exact(rows) => closure_in(rows, set),
        }
    }

    /// All circuits of size at most `max_size` (default `rank + 1`, i.e. all of them).
    /// Loops are reported in `warnings` rather than as circuits.
    pub fn compute_circuits(&mut self, max_size: Option<usize>) -> &[Vec<usize>] {
        let cap = max_size.unwrap_or(self.rank + 1);
        let (mut circuits, loops) = match &self.kernel {
            Kernel::Modular(rows) => circuits_in(rows, cap),
            Kernel::Exact(rows) => circuits_in(rows, cap),
        };
        self.warnings.retain(|w| !w.starts_with("loop"));
        if self.rank == 0 {
            self.warnings.push("rank-0 configuration: no circuits of size at least two".into());
        }
        for l in loops {
            self.warnings.push(format!("loop {} ignored", self.labels[l]));
        }
        circuits.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        self.circuits = circuits;
        &self.circuits
    }

    /// A uniformly random basis order followed by one fundamental circuit.
    pub fn random_circuit<R: Rng>(&self, rng: &mut R) -> Option<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(rng);
        match &self.kernel {
            Kernel::Modular(rows) => fundamental_from_order(rows, &order),
            Kernel::Exact(rows) => fundamental_from_order(rows, &order),
        }
    }

    /// A random circuit of exactly `k` elements: random independent `(k-1)`-sets are tried
    /// until one spans another element with full support.
    pub fn random_circuit_of_size<R: Rng>(&self, k: usize, tries: usize, rng: &mut R) -> Option<Vec<usize>> {
        if k < 2 || k > self.rank + 1 {
            return None;
        }
        for _ in 0..tries {
            let mut order: Vec<usize> = (0..self.len()).collect();
            order.shuffle(rng);
            let found = match &self.kernel {
                Kernel::Modular(rows) => circuit_of_size_from_order(rows, &order, k),
                Kernel::Exact(rows) => circuit_of_size_from_order(rows, &order, k),
            };
            if found.is_some() {
                return found;
            }
        }
        None
    }

    /// Whether `set` is a circuit: dependent, and every proper subset obtained by deleting
    /// one element is independent.
    pub fn is_circuit(&self, set: &[usize]) -> bool {
        let k = set.len();
        if self.rank_of(set) != k - 1 {
            return false;
        }
        (0..k).all(|i| {
            let sub: Vec<usize> = set.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x).collect();
            self.rank_of(&sub) == k - 1
        })
    }

    /// Bergman-fan membership through the stored circuits.
    pub fn in_bergman(&self, w: &[Q]) -> Result<bool> {
        if w.len() != self.len() {
            return Err(Error::Structural(format!("vector of length {} for {} elements", w.len(), self.len())));
        }
        if self.circuits.is_empty() && self.rank > 0 && self.rank < self.len() {
            return Err(Error::Structural("circuits have not been computed".into()));
        }
        in_bergman(w, &self.circuits)
    }

    /// Bergman-fan membership through flats: `w` fails exactly when some element lies in
    /// the closure of the elements of strictly larger weight. Needs no circuit list.
    pub fn contains(&self, w: &[Q]) -> Result<bool> {
        if w.len() != self.len() {
            return Err(Error::Structural(format!("vector of length {} for {} elements", w.len(), self.len())));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| w[b].cmp(&w[a]));
        let levels = group_levels(&order, |a, b| w[a] == w[b]);
        Ok(match &self.kernel {
            Kernel::Modular(rows) => levels_ok(rows, &levels),
            Kernel::Exact(rows) => levels_ok(rows, &levels),
        })
    }

    /// Integer version of [`VectorMatroid::contains`].
    pub fn contains_z(&self, w: &[i64]) -> bool {
        debug_assert_eq!(w.len(), self.len());
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| w[b].cmp(&w[a]));
        let levels = group_levels(&order, |a, b| w[a] == w[b]);
        match &self.kernel {
            Kernel::Modular(rows) => levels_ok(rows, &levels),
            Kernel::Exact(rows) => levels_ok(rows, &levels),
        }
    }

    /// All flats of rank `1..rank-1`, ordered by rank and then lexicographically.
    pub fn proper_flats(&self) -> Vec<Vec<usize>> {
        let bottom = self.closure(&[]);
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut layer = vec![bottom];
        let mut out = Vec::new();
        for _ in 1..self.rank {
            let mut next: Vec<Vec<usize>> = Vec::new();
            for f in &layer {
                let mut covered: Vec<bool> = vec![false; self.len()];
                for &x in f {
                    covered[x] = true;
                }
                for e in 0..self.len() {
                    if covered[e] {
                        continue;
                    }
                    let mut s = f.clone();
                    s.push(e);
                    let g = self.closure(&s);
                    for &x in &g {
                        covered[x] = true;
                    }
                    if seen.insert(g.clone()) {
                        next.push(g);
                    }
                }
            }
            next.sort();
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    /// Connectedness of the restriction to `set`, from the fundamental circuits of a basis.
    pub fn is_connected_set(&self, set: &[usize]) -> bool {
        match &self.kernel {
            Kernel::Modular(rows) => connected_in(rows, set),
            Kernel::Exact(rows) => connected_in(rows, set),
        }
    }

    /// Indicator vectors of the proper flats selected by `source`.
    pub fn flat_rays(&self, source: RaySource) -> Vec<ZVec> {
        self.proper_flats()
            .into_iter()
            .filter(|f| source == RaySource::AllFlats || self.is_connected_set(f))
            .map(|f| {
                let mut v = vec![0i64; self.len()];
                for x in f {
                    v[x] = 1;
                }
                v
            })
            .collect()
    }
}

fn rank_in<F: Field>(rows: &[Vec<F>], set: &[usize]) -> usize {
    let mut s = Span::new();
    for &i in set {
        s.push(&rows[i]);
    }
    s.len()
}

fn closure_in<F: Field>(rows: &[Vec<F>], set: &[usize]) -> Vec<usize> {
    let mut s = Span::new();
    for &i in set {
        s.push(&rows[i]);
    }
    (0..rows.len()).filter(|&e| s.contains(&rows[e])).collect()
}

fn circuits_in<F: Field>(rows: &[Vec<F>], max_size: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
    fn rec<F: Field>(
        rows: &[Vec<F>],
        start: usize,
        set: &mut Vec<usize>,
        span: &Span<F>,
        max_size: usize,
        out: &mut Vec<Vec<usize>>,
        loops: &mut Vec<usize>,
    ) {
        for e in start..rows.len() {
            let (r, c) = span.reduce(&rows[e]);
            if r.iter().all(|x| x.is_zero()) {
                if set.is_empty() {
                    loops.push(e);
                } else if set.len() < max_size && c.iter().all(|x| !x.is_zero()) {
                    let mut circ = set.clone();
                    circ.push(e);
                    out.push(circ);
                }
            } else if set.len() + 1 < max_size {
                let mut next = span.clone();
                next.push(&rows[e]);
                set.push(e);
                rec(rows, e + 1, set, &next, max_size, out, loops);
                set.pop();
            }
        }
    }
    let mut out = Vec::new();
    let mut loops = Vec::new();
    rec(rows, 0, &mut Vec::new(), &Span::new(), max_size, &mut out, &mut loops);
    (out, loops)
}

fn fundamental_from_order<F: Field>(rows: &[Vec<F>], order: &[usize]) -> Option<Vec<usize>> {
    let mut span = Span::new();
    let mut basis = Vec::new();
    let mut rest = Vec::new();
    for &e in order {
        if span.push(&rows[e]) {
            basis.push(e);
        } else {
            rest.push(e);
        }
    }
    let &e = rest.first()?;
    let (_, c) = span.reduce(&rows[e]);
    let mut circ: Vec<usize> = basis.iter().zip(&c).filter(|(_, x)| !x.is_zero()).map(|(&b, _)| b).collect();
    circ.push(e);
    circ.sort();
    Some(circ)
}

fn circuit_of_size_from_order<F: Field>(rows: &[Vec<F>], order: &[usize], k: usize) -> Option<Vec<usize>> {
    let mut span = Span::new();
    let mut set = Vec::new();
    for &e in order {
        if set.len() == k - 1 {
            break;
        }
        if span.push(&rows[e]) {
            set.push(e);
        }
    }
    if set.len() != k - 1 {
        return None;
    }
    for &e in order {
        if set.contains(&e) {
            continue;
        }
        let (r, c) = span.reduce(&rows[e]);
        if r.iter().all(|x| x.is_zero()) && c.iter().all(|x| !x.is_zero()) {
            let mut circ = set.clone();
            circ.push(e);
            circ.sort();
            return Some(circ);
        }
    }
    None
}

fn connected_in<F: Field>(rows: &[Vec<F>], set: &[usize]) -> bool {
    if set.len() <= 1 {
        return true;
    }
    let mut span = Span::new();
    let mut basis = Vec::new();
    let mut rest = Vec::new();
    for &e in set {
        if span.push(&rows[e]) {
            basis.push(e);
        } else {
            rest.push(e);
        }
    }
    // Union-find over positions in `set`; components of the matroid are the components of
    // the graph joining each non-basis element to its fundamental circuit.
    let pos: HashMap<usize, usize> = set.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let mut parent: Vec<usize> = (0..set.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let n = p[y];
            p[y] = r;
            y = n;
        }
        r
    }
    for &e in &rest {
        let (_, c) = span.reduce(&rows[e]);
        for (&b, x) in basis.iter().zip(&c) {
            if !x.is_zero() {
                let (ra, rb) = (find(&mut parent, pos[&e]), find(&mut parent, pos[&b]));
                parent[ra] = rb;
            }
        }
    }
    let r0 = find(&mut parent, 0);
    (1..set.len()).all(|i| find(&mut parent, i) == r0)
}

fn group_levels(order: &[usize], same: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut levels: Vec<Vec<usize>> = Vec::new();
    for &e in order {
        match levels.last_mut() {
            Some(l) if same(l[0], e) => l.push(e),
            _ => levels.push(vec![e]),
        }
    }
    levels
}

/// Levels sorted by decreasing weight: each element must leave the span of all heavier ones.
fn levels_ok<F: Field>(rows: &[Vec<F>], levels: &[Vec<usize>]) -> bool {
    let mut span: Span<F> = Span::new();
    let full = rows.first().map_or(0, |r| r.len());
    for level in levels {
        if span.len() == full {
            return false;
        }
        if level.iter().any(|&e| span.contains(&rows[e])) {
            return false;
        }
        for &e in level {
            span.push(&rows[e]);
        }
    }
    true
}

/// Membership by circuits: on every circuit the minimum of `w` is attained at least twice.
pub fn in_bergman(w: &[Q], circuits: &[Vec<usize>]) -> Result<bool> {
    for c in circuits {
        if let Some(&bad) = c.iter().find(|&&i| i >= w.len()) {
            return Err(Error::Structural(format!("circuit element {bad} outside a vector of length {}", w.len())));
        }
        let min = c.iter().map(|&i| &w[i]).min().expect("nonempty circuit");
        if c.iter().filter(|&&i| &w[i] == min).count() < 2 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Which flats supply the rays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RaySource {
    ConnectedFlats,
    AllFlats,
}

/// Cones of a fan with rays given by index; `cones` maps a dimension (as a string key, two
/// and up) to sorted ray-index sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanRecord {
    pub rays: Vec<ZVec>,
    pub cones: BTreeMap<String, Vec<Vec<usize>>>,
    /// Number of cones by dimension, starting with the apex (lineality space) in position 0.
    pub f_vector: Vec<usize>,
    /// Number of symmetry orbits by dimension, aligned with `f_vector`.
    pub orbit_f_vector: Vec<usize>,
    pub complete: bool,
}

impl FanRecord {
    pub fn cones_of_dim(&self, d: usize) -> Vec<Vec<usize>> {
        if d == 1 {
            return (0..self.rays.len()).map(|i| vec![i]).collect();
        }
        self.cones.get(&d.to_string()).cloned().unwrap_or_default()
    }

    pub fn max_dim(&self) -> usize {
        self.f_vector.len().saturating_sub(1)
    }

    /// Sum of the rays of a cone, a point of its relative interior.
    pub fn barycenter(&self, cone: &[usize]) -> ZVec {
        let n = self.rays.first().map_or(0, |r| r.len());
        let mut s = vec![0i64; n];
        for &i in cone {
            for (x, y) in s.iter_mut().zip(&self.rays[i]) {
                *x += y;
            }
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EnumOptions {
    pub max_dim: usize,
    /// Total number of cones after which enumeration stops with `complete = false`.
    pub cone_cap: usize,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions { max_dim: usize::MAX, cone_cap: 5_000_000 }
    }
}

/// The permutation of ray indices induced by a ground-set permutation (`i ↦ sigma[i]`).
fn ray_permutation(rays: &[ZVec], index: &HashMap<ZVec, u32>, sigma: &[usize]) -> Result<Vec<u32>> {
    rays.iter()
        .map(|r| {
            let mut img = vec![0i64; r.len()];
            for (i, &x) in r.iter().enumerate() {
                img[sigma[i]] = x;
            }
            index
                .get(&img)
                .copied()
                .ok_or_else(|| Error::Structural("symmetry does not preserve the ray set".into()))
        })
        .collect()
}

/// Whether the rays of `cone` together with the all-ones vector are linearly independent.
fn independent_mod_ones(rays: &[ZVec], cone: &[u32]) -> bool {
    let n = rays[0].len();
    let mut span: Span<Fp> = Span::new();
    span.push(&vec![Fp::one(); n]);
    cone.iter().all(|&i| span.push(&rays[i as usize].iter().map(|&x| Fp::from_i64(x)).collect::<Vec<_>>()))
}

/// Whether no ray outside `cone` lies in the closed cone it spans (modulo the all-ones line).
/// A modular span test filters the candidates before the exact solve.
fn cone_is_empty(rays: &[ZVec], cone: &[u32]) -> bool {
    let n = rays[0].len();
    let fp = |r: &ZVec| r.iter().map(|&x| Fp::from_i64(x)).collect::<Vec<_>>();
    let mut span: Span<Fp> = Span::new();
    span.push(&vec![Fp::one(); n]);
    for &i in cone {
        span.push(&fp(&rays[i as usize]));
    }
    let gens: Vec<&ZVec> = cone.iter().map(|&i| &rays[i as usize]).collect();
    rays.iter().enumerate().all(|(j, r)| {
        cone.contains(&(j as u32))
            || !span.contains(&fp(r))
            || !in_cone_mod_lineality(&r.iter().map(|&x| q(x)).collect::<QVec>(), &gens)
    })
}

fn orbit_of(seed: Vec<u32>, perms: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(seed.clone());
    queue.push_back(seed);
    while let Some(c) = queue.pop_front() {
        for p in perms {
            let mut img: Vec<u32> = c.iter().map(|&i| p[i as usize]).collect();
            img.sort_unstable();
            if seen.insert(img.clone()) {
                queue.push_back(img);
            }
        }
    }
    seen.into_iter().collect()
}

/// Enumerates the cones spanned by subsets of `rays` whose ray sums lie in the Bergman fan,
/// one dimension at a time: every orbit representative is extended by each further ray,
/// the candidate is kept when all its facets are known cones and its ray sum passes the
/// membership test, and each new cone is expanded to its full orbit under `symmetry`, whose
/// lexicographically smallest member becomes the representative.
pub fn enumerate_bergman(
    m: &VectorMatroid,
    rays: Vec<ZVec>,
    symmetry: &[Vec<usize>],
    opts: EnumOptions,
) -> Result<FanRecord> {
    let n = m.len();
    if rays.iter().any(|r| r.len() != n) {
        return Err(Error::Structural("ray length differs from the ground set".into()));
    }
    if symmetry.iter().any(|s| s.len() != n) {
        return Err(Error::Structural("symmetry of the wrong size".into()));
    }
    let index: HashMap<ZVec, u32> = rays.iter().cloned().enumerate().map(|(i, r)| (r, i as u32)).collect();
    if index.len() != rays.len() {
        return Err(Error::Structural("repeated ray".into()));
    }
    let perms: Vec<Vec<u32>> = symmetry.iter().map(|s| ray_permutation(&rays, &index, s)).collect::<Result<_>>()?;
    for (i, r) in rays.iter().enumerate() {
        if !m.contains_z(r) {
            return Err(Error::Domain(format!("ray {i} is not in the Bergman fan")));
        }
    }

    let mut f_vector = vec![1, rays.len()];
    let mut orbit_f = vec![1];
    let mut cones: BTreeMap<String, Vec<Vec<usize>>> = BTreeMap::new();
    let mut all: HashSet<Vec<u32>> = (0..rays.len() as u32).map(|i| vec![i]).collect();
    let mut reps: Vec<Vec<u32>> = Vec::new();
    {
        let mut done: HashSet<u32> = HashSet::new();
        for i in 0..rays.len() as u32 {
            if done.contains(&i) {
                continue;
            }
            let orbit = orbit_of(vec![i], &perms);
            for c in &orbit {
                done.insert(c[0]);
            }
            reps.push(orbit.into_iter().min().expect("nonempty orbit"));
        }
        orbit_f.push(reps.len());
    }
    let mut total = rays.len();
    let mut complete = true;
    let mut dim = 1;
    while dim < opts.max_dim && !reps.is_empty() {
        let mut next: HashSet<Vec<u32>> = HashSet::new();
        let mut next_reps: Vec<Vec<u32>> = Vec::new();
        'reps: for rep in &reps {
            let mut sum = vec![0i64; n];
            for &i in rep {
                for (x, y) in sum.iter_mut().zip(&rays[i as usize]) {
                    *x += y;
                }
            }
            for j in 0..rays.len() as u32 {
                if rep.contains(&j) {
                    continue;
                }
                let mut cand = rep.clone();
                cand.push(j);
                cand.sort_unstable();
                if next.contains(&cand) {
                    continue;
                }
                let faces_known = (0..cand.len()).all(|k| {
                    let mut f = cand.clone();
                    f.remove(k);
                    all.contains(&f)
                });
                if !faces_known {
                    continue;
                }
                let point: ZVec = sum.iter().zip(&rays[j as usize]).map(|(a, b)| a + b).collect();
                if !m.contains_z(&point) || !independent_mod_ones(&rays, &cand) {
                    continue;
                }
                if !cone_is_empty(&rays, &cand) {
                    continue;
                }
                let orbit = orbit_of(cand, &perms);
                total += orbit.len();
                next_reps.push(orbit.iter().min().expect("nonempty orbit").clone());
                next.extend(orbit);
                if total > opts.cone_cap {
                    complete = false;
                    break 'reps;
                }
            }
        }
        if next.is_empty() {
            break;
        }
        dim += 1;
        next_reps.sort();
        f_vector.push(next.len());
        orbit_f.push(next_reps.len());
        let mut list: Vec<Vec<usize>> = next.iter().map(|c| c.iter().map(|&i| i as usize).collect()).collect();
        list.sort();
        cones.insert(dim.to_string(), list);
        all.extend(next);
        reps = next_reps;
        if !complete {
            break;
        }
    }
    Ok(FanRecord { rays, cones, f_vector, orbit_f_vector: orbit_f, complete })
}

/// Coarse merge for fans with nonnegative rays (flat indicators). A ray that is the exact
/// sum of two or more neighbours, all of whose partial sums lie in the Bergman fan, sits
/// inside a larger cone of the support and only subdivides it; such rays are dropped and
/// the cones are enumerated again from the remaining rays.
pub fn coarsen(m: &VectorMatroid, fine: &FanRecord, symmetry: &[Vec<usize>], opts: EnumOptions) -> Result<FanRecord> {
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); fine.rays.len()];
    for c in fine.cones_of_dim(2) {
        nbrs[c[0]].push(c[1]);
        nbrs[c[1]].push(c[0]);
    }
    let kept: Vec<ZVec> = fine
        .rays
        .iter()
        .enumerate()
        .filter(|&(i, r)| {
            let parts: Vec<&ZVec> =
                nbrs[i].iter().map(|&j| &fine.rays[j]).filter(|n| n.iter().zip(r).all(|(a, b)| a <= b)).collect();
            !splits_into(m, r, &parts)
        })
        .map(|(_, r)| r.clone())
        .collect();
    enumerate_bergman(m, kept, symmetry, opts)
}

/// Whether `target` is the sum of at least two of `parts` such that every partial sum of a
/// subset of the chosen parts passes the membership test.
fn splits_into(m: &VectorMatroid, target: &[i64], parts: &[&ZVec]) -> bool {
    fn rec(m: &VectorMatroid, target: &[i64], parts: &[&ZVec], from: usize, chosen: &mut Vec<usize>) -> bool {
        let sum = |set: &[usize]| -> ZVec {
            let mut s = vec![0i64; target.len()];
            for &k in set {
                for (x, y) in s.iter_mut().zip(parts[k]) {
                    *x += y;
                }
            }
            s
        };
        let current = sum(chosen);
        if current == target {
            return chosen.len() >= 2;
        }
        for k in from..parts.len() {
            let fits = current.iter().zip(parts[k]).zip(target).all(|((c, p), t)| c + p <= *t);
            if !fits {
                continue;
            }
            chosen.push(k);
            // Every subset containing the new part must have a member sum.
            let closed = (0u32..1 << (chosen.len() - 1)).all(|mask| {
                let mut sub: Vec<usize> = (0..chosen.len() - 1).filter(|b| mask >> b & 1 == 1).map(|b| chosen[b]).collect();
                sub.push(k);
                m.contains_z(&sum(&sub))
            });
            if closed && rec(m, target, parts, k + 1, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    rec(m, target, parts, 0, &mut Vec::new())
}

/// The graphic matroid of `K4` with edges `12, 13, 14, 23, 24, 34` and the symmetric group
/// acting on the vertices.
pub fn k4() -> (VectorMatroid, Vec<Vec<usize>>) {
    let edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let labels = edges.iter().map(|(a, b)| format!("{}{}", a + 1, b + 1)).collect();
    let vectors: Vec<ZVec> = edges
        .iter()
        .map(|&(a, b)| {
            let mut v = vec![0i64; 4];
            v[a] = 1;
            v[b] = -1;
            v
        })
        .collect();
    let m = VectorMatroid::from_integer(labels, &vectors).expect("K4");
    let vertex_swaps = [[1, 0, 2, 3], [0, 2, 1, 3], [0, 1, 3, 2]];
    let sym = vertex_swaps
        .iter()
        .map(|s| {
            edges
                .iter()
                .map(|&(a, b)| {
                    let (x, y) = (s[a].min(s[b]), s[a].max(s[b]));
                    edges.iter().position(|&e| e == (x, y)).expect("edge")
                })
                .collect()
        })
        .collect();
    (m, sym)
}

/// The uniform matroid `U_{2,n}` from the vectors `(1, i)`, with the cyclic shift and one
/// transposition, which generate its full symmetry group.
pub fn uniform_rank2(n: usize) -> (VectorMatroid, Vec<Vec<usize>>) {
    let labels = (0..n).map(|i| i.to_string()).collect();
    let vectors: Vec<ZVec> = (0..n).map(|i| vec![1, i as i64]).collect();
    let m = VectorMatroid::from_integer(labels, &vectors).expect("uniform");
    let shift: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
    let mut swap: Vec<usize> = (0..n).collect();
    if n >= 2 {
        swap.swap(0, 1);
    }
    (m, vec![shift, swap])
}

/// The matroid of the positive roots of E6 or E7 with the simple reflections as symmetry.
pub fn root_matroid(rs: &RootSystem) -> (VectorMatroid, Vec<Vec<usize>>) {
    let labels = rs.positive.iter().map(|r| r.to_string()).collect();
    let vectors: Vec<ZVec> = rs.positive.iter().map(|r| r.0.clone()).collect();
    let m = VectorMatroid::from_integer(labels, &vectors).expect("root matroid");
    let sym = rs.generators.iter().map(|g| g.perm.iter().map(|&i| i as usize).collect()).collect();
    (m, sym)
}

/// Splits a family of sorted ground-set subsets into orbits under `symmetry`; returns the
/// lexicographically smallest member of each orbit with the orbit size. Every orbit must
/// lie inside the family.
pub fn orbit_representatives(sets: &[Vec<usize>], symmetry: &[Vec<usize>]) -> Vec<(Vec<usize>, usize)> {
    let perms: Vec<Vec<u32>> = symmetry.iter().map(|s| s.iter().map(|&i| i as u32).collect()).collect();
    let mut done: HashSet<Vec<u32>> = HashSet::new();
    let mut out = Vec::new();
    for s in sets {
        let key: Vec<u32> = s.iter().map(|&i| i as u32).collect();
        if done.contains(&key) {
            continue;
        }
        let orbit = orbit_of(key, &perms);
        let rep = orbit.iter().min().expect("nonempty orbit").iter().map(|&i| i as usize).collect();
        out.push((rep, orbit.len()));
        done.extend(orbit);
    }
    out.sort();
    out
}

/// Acts on a weight vector by a ground-set permutation.
pub fn permute_weights<T: Clone>(w: &[T], sigma: &[usize]) -> Vec<T> {
    let mut out = w.to_vec();
    for (i, x) in w.iter().enumerate() {
        out[sigma[i]] = x.clone();
    }
    out
}

/// Whether `w` lies in the cone of `rays` plus the line spanned by the all-ones vector.
pub fn in_cone_mod_lineality(w: &[Q], rays: &[&ZVec]) -> bool {
    let n = w.len();
    let k = rays.len();
    // Columns: rays, then the all-ones vector.
    let a: Vec<QVec> = (0..n)
        .map(|i| {
            let mut row: QVec = rays.iter().map(|r| q(r[i])).collect();
            row.push(q(1));
            row
        })
        .collect();
    match crate::num::solve_linear(&a, w) {
        Some((x, free)) => {
            debug_assert_eq!(free, 0, "rays and lineality must be independent");
            x[..k].iter().all(|c| !c.is_negative())
        }
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{petersen, Graph};
    use crate::num::qz;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute_circuits(m: &VectorMatroid) -> Vec<Vec<usize>> {
        let n = m.len();
        let dependent = |mask: u32| {
            let rows: Vec<QVec> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| m.vectors[i].clone()).collect();
            crate::num::rank(&rows) < rows.len()
        };
        let mut out = Vec::new();
        for mask in 1u32..(1 << n) {
            if dependent(mask) && (0..n).filter(|i| mask >> i & 1 == 1).all(|i| !dependent(mask & !(1 << i))) {
                out.push((0..n).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>());
            }
        }
        out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        out
    }

    #[test]
    fn k4_has_four_triangles_and_three_quadrilaterals() {
        let (mut m, _) = k4();
        assert!(m.is_modular());
        assert_eq!(m.rank, 3);
        let c = m.compute_circuits(None).to_vec();
        assert_eq!(c.len(), 7);
        assert_eq!(c.iter().filter(|x| x.len() == 3).count(), 4);
        assert_eq!(c.iter().filter(|x| x.len() == 4).count(), 3);
        assert_eq!(c, brute_circuits(&m));
    }

    #[test]
    fn u23_has_one_circuit() {
        let (mut m, _) = uniform_rank2(3);
        assert_eq!(m.compute_circuits(None), &[vec![0, 1, 2]]);
    }

    #[test]
    fn rational_and_large_inputs_agree() {
        let vectors = vec![qz(&[1, 0]), vec![q(0), crate::num::qf(1, 3)], qz(&[1, 1])];
        let mut m = VectorMatroid::new(vec!["a".into(), "b".into(), "c".into()], vectors).unwrap();
        assert_eq!(m.compute_circuits(None), &[vec![0, 1, 2]]);
        let big = 1i64 << 40;
        let vectors = vec![qz(&[big, 1]), qz(&[1, big]), qz(&[big + 1, big + 1]), qz(&[big, 1])];
        let mut m = VectorMatroid::new((0..4).map(|i| i.to_string()).collect(), vectors).unwrap();
        assert!(!m.is_modular());
        let c = m.compute_circuits(None).to_vec();
        assert_eq!(c, brute_circuits(&m));
        assert_eq!(c[0], vec![0, 3]);
    }

    #[test]
    fn rank_zero_gives_no_circuits_and_a_warning() {
        let mut m = VectorMatroid::from_integer(vec!["a".into(), "b".into()], &[vec![0, 0], vec![0, 0]]).unwrap();
        assert!(m.compute_circuits(None).is_empty());
        assert!(m.warnings.iter().any(|w| w.contains("rank-0")));
    }

    #[test]
    fn membership_examples() {
        let (mut m, _) = k4();
        m.compute_circuits(None);
        let mut tri = vec![q(0); 6];
        for i in [0, 1, 3] {
            tri[i] = q(1);
        }
        assert!(m.in_bergman(&vec![q(0); 6]).unwrap());
        assert!(m.in_bergman(&tri).unwrap());
        let mut w = vec![q(0); 6];
        w[0] = q(1);
        w[1] = q(-1);
        assert!(!m.in_bergman(&w).unwrap());
        assert!(matches!(m.in_bergman(&[q(0)]), Err(Error::Structural(_))));
    }

    #[test]
    fn membership_tests_agree_with_brute_force_on_k4() {
        let (mut m, _) = k4();
        let brute = brute_circuits(&m);
        m.compute_circuits(None);
        for pattern in 0..3usize.pow(6) {
            let w: QVec = (0..6).map(|i| q((pattern / 3usize.pow(i)) as i64 % 3 - 1)).collect();
            let a = m.in_bergman(&w).unwrap();
            assert_eq!(a, in_bergman(&w, &brute).unwrap());
            assert_eq!(a, m.contains(&w).unwrap(), "{w:?}");
        }
    }

    #[test]
    fn k4_connected_flats_give_the_petersen_fan() {
        let (m, sym) = k4();
        let rays = m.flat_rays(RaySource::ConnectedFlats);
        assert_eq!(rays.len(), 10);
        let fan = enumerate_bergman(&m, rays, &sym, EnumOptions::default()).unwrap();
        assert_eq!(fan.f_vector, vec![1, 10, 15]);
        assert!(fan.complete);
        let mut g = Graph::unnamed(10);
        for c in fan.cones_of_dim(2) {
            g.add_edge(c[0], c[1]);
        }
        assert!(g.is_isomorphic(&petersen()));
        let coarse = coarsen(&m, &fan, &sym, EnumOptions::default()).unwrap();
        assert_eq!(coarse.f_vector, fan.f_vector);
    }

    #[test]
    fn k4_all_flats_coarsen_to_the_petersen_fan() {
        let (m, sym) = k4();
        let rays = m.flat_rays(RaySource::AllFlats);
        assert_eq!(rays.len(), 13);
        let fine = enumerate_bergman(&m, rays, &sym, EnumOptions::default()).unwrap();
        assert_eq!(fine.f_vector, vec![1, 13, 18]);
        let coarse = coarsen(&m, &fine, &sym, EnumOptions::default()).unwrap();
        assert_eq!(coarse.f_vector, vec![1, 10, 15]);
    }

    /// Every membership-tested point of a small grid lies in an enumerated cone (modulo the
    /// all-ones line), and every cone's ray sum passes the circuit test.
    fn check_against_grid(m: &mut VectorMatroid, sym: &[Vec<usize>], range: i64) {
        let fan = enumerate_bergman(m, m.flat_rays(RaySource::ConnectedFlats), sym, EnumOptions::default()).unwrap();
        m.compute_circuits(None);
        for d in 1..=fan.max_dim() {
            for c in fan.cones_of_dim(d) {
                let b: QVec = fan.barycenter(&c).iter().map(|&x| q(x)).collect();
                assert!(m.in_bergman(&b).unwrap());
            }
        }
        let n = m.len();
        let side = (2 * range + 1) as usize;
        let top = fan.cones_of_dim(fan.max_dim());
        for idx in 0..side.pow(n as u32) {
            let w: QVec = (0..n).map(|i| q((idx / side.pow(i as u32) % side) as i64 - range)).collect();
            if !m.in_bergman(&w).unwrap() {
                continue;
            }
            let covered = w.iter().all(|x| x == &w[0])
                || top.iter().any(|c| {
                    let rs: Vec<&ZVec> = c.iter().map(|&i| &fan.rays[i]).collect();
                    in_cone_mod_lineality(&w, &rs)
                });
            assert!(covered, "{w:?} is in the Bergman fan but in no cone");
        }
    }

    #[test]
    fn enumeration_matches_a_grid_on_k4_and_u24() {
        let (mut m, sym) = k4();
        check_against_grid(&mut m, &sym, 2);
        let (mut m, sym) = uniform_rank2(4);
        let fan = enumerate_bergman(&m, m.flat_rays(RaySource::ConnectedFlats), &sym, EnumOptions::default()).unwrap();
        assert_eq!(fan.f_vector, vec![1, 4]);
        check_against_grid(&mut m, &sym, 3);
    }

    #[test]
    fn e6_fan_has_the_expected_f_vector() {
        let rs = RootSystem::e6();
        let (mut m, sym) = root_matroid(&rs);
        let fan = enumerate_bergman(&m, m.flat_rays(RaySource::ConnectedFlats), &sym, EnumOptions::default()).unwrap();
        assert!(fan.complete);
        assert_eq!(fan.f_vector, vec![1, 750, 17679, 105930, 219240, 142560]);
        let top = fan.cones_of_dim(5);
        assert!(top.iter().all(|c| m.contains_z(&fan.barycenter(c))));
        m.compute_circuits(None);
        let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
        for c in &m.circuits {
            *sizes.entry(c.len()).or_default() += 1;
        }
        assert_eq!(sizes, BTreeMap::from([(3, 120), (4, 810), (5, 5832), (6, 41040), (7, 233280)]));
        let orbits = orbit_representatives(&m.circuits, &sym);
        assert_eq!(orbits.iter().map(|(_, n)| n).sum::<usize>(), m.circuits.len());
        for c in top.iter().step_by(997) {
            let b: QVec = fan.barycenter(c).iter().map(|&x| q(x)).collect();
            assert!(m.in_bergman(&b).unwrap());
        }
    }

    #[test]
    fn e6_has_750_connected_flats() {
        let rs = RootSystem::e6();
        let (m, _) = root_matroid(&rs);
        assert_eq!(m.rank, 6);
        let flats = m.proper_flats();
        let connected: Vec<&Vec<usize>> = flats.iter().filter(|f| m.is_connected_set(f)).collect();
        assert_eq!(connected.len(), 750);
        let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
        for f in connected {
            *sizes.entry(f.len()).or_default() += 1;
        }
        // Irreducible parabolic subsystems: A1, A2, A3, A4 and D4 (12 roots each), A5, D5.
        assert_eq!(sizes, BTreeMap::from([(1, 36), (3, 120), (6, 270), (10, 216), (12, 45), (15, 36), (20, 27)]));
    }

    #[test]
    fn e7_sampled_circuits_have_sizes_three_to_eight() {
        let rs = RootSystem::e7();
        let (m, _) = root_matroid(&rs);
        assert_eq!(m.rank, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut sizes = std::collections::BTreeSet::new();
        for _ in 0..300 {
            let c = m.random_circuit(&mut rng).unwrap();
            assert!(m.is_circuit(&c));
            sizes.insert(c.len());
        }
        for k in 3..=8 {
            let c = m.random_circuit_of_size(k, 2000, &mut rng).unwrap_or_else(|| panic!("no circuit of size {k}"));
            assert!(m.is_circuit(&c));
            sizes.insert(c.len());
        }
        assert_eq!(sizes.into_iter().collect::<Vec<_>>(), vec![3, 4, 5, 6, 7, 8]);
        assert!(m.random_circuit_of_size(2, 50, &mut rng).is_none());
        assert!(m.random_circuit_of_size(9, 50, &mut rng).is_none());
    }

    #[test]
    fn fan_record_round_trips_through_json() {
        let (m, sym) = k4();
        let fan = enumerate_bergman(&m, m.flat_rays(RaySource::ConnectedFlats), &sym, EnumOptions::default()).unwrap();
        let s = fan.to_json().unwrap();
        assert!(s.contains("\"cones\":{\"2\":"));
        assert_eq!(FanRecord::from_json(&s).unwrap(), fan);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn lineality_invariance(w in proptest::collection::vec(-3i64..=3, 6), c in -5i64..=5) {
                let (mut m, _) = k4();
                m.compute_circuits(None);
                let a: QVec = w.iter().map(|&x| q(x)).collect();
                let b: QVec = w.iter().map(|&x| q(x + c)).collect();
                prop_assert_eq!(m.in_bergman(&a).unwrap(), m.in_bergman(&b).unwrap());
            }

            #[test]
            fn symmetry_invariance_on_e6(w in proptest::collection::vec(-2i64..=2, 36), g in 0usize..6) {
                let rs = RootSystem::e6();
                let (m, sym) = root_matroid(&rs);
                let moved = permute_weights(&w, &sym[g]);
                prop_assert_eq!(m.contains_z(&w), m.contains_z(&moved));
            }

            #[test]
            fn rank_and_circuit_tests_agree_on_u25(w in proptest::collection::vec(-2i64..=2, 5)) {
                let (mut m, _) = uniform_rank2(5);
                m.compute_circuits(None);
                let a: QVec = w.iter().map(|&x| q(x)).collect();
                prop_assert_eq!(m.in_bergman(&a).unwrap(), m.contains(&a).unwrap());
            }
        }
    }
}
