//! Plane curves over the valued field `F_p(t)` and the tropical data they induce.
//!
//! Points of `P^2` have Laurent-polynomial coordinates, curves are lines and conics, and
//! every marked point on a curve is rational over the ground field, so valuations of
//! parameter differences can be computed exactly. From those valuations one reads off
//! the metric tree of a marked curve and the tropical image of a punctured curve under a
//! list of coordinate functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use crate::num::{qf, ZVec};
use crate::rootsys::LineLabel;
use crate::trees::MetricTree;
use crate::{Error, Result};

/// The Mersenne prime `2^61 - 1`.
pub const P: u64 = (1u64 << 61) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Fp(pub u64);

impl Fp {
    pub fn new(x: u64) -> Fp {
        Fp(x % P)
    }

    pub fn from_i64(x: i64) -> Fp {
        if x >= 0 {
            Fp::new(x as u64)
        } else {
            Fp::new((-(x as i128)) as u64).neg()
        }
    }

    pub fn zero() -> Fp {
        Fp(0)
    }

    pub fn one() -> Fp {
        Fp(1)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn add(self, o: Fp) -> Fp {
        let s = self.0 + o.0;
        Fp(if s >= P { s - P } else { s })
    }

    pub fn sub(self, o: Fp) -> Fp {
        if self.0 >= o.0 {
            Fp(self.0 - o.0)
        } else {
            Fp(self.0 + P - o.0)
        }
    }

    pub fn neg(self) -> Fp {
        if self.0 == 0 {
            self
        } else {
            Fp(P - self.0)
        }
    }

    pub fn mul(self, o: Fp) -> Fp {
        reduce128((self.0 as u128) * (o.0 as u128))
    }

    pub fn pow(self, mut e: u64) -> Fp {
        let mut b = self;
        let mut r = Fp::one();
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(b);
            }
            b = b.mul(b);
            e >>= 1;
        }
        r
    }

    pub fn inv(self) -> Fp {
        assert!(!self.is_zero(), "inverse of zero");
        self.pow(P - 2)
    }
}

fn reduce128(x: u128) -> Fp {
    let lo = (x as u64) & P;
    let hi = (x >> 61) as u64;
    let mut s = lo + (hi & P) + (hi >> 61);
    while s >= P {
        s -= P;
    }
    Fp(s)
}

/// A Laurent polynomial `Σ c_i t^(low + i)` over `F_p`, normalized so that the first and last
/// coefficients are nonzero (the zero polynomial has no coefficients).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LPoly {
    low: i64,
    c: Vec<Fp>,
}

impl LPoly {
    pub fn zero() -> Self {
        LPoly::default()
    }

    pub fn constant(a: Fp) -> Self {
        LPoly::monomial(a, 0)
    }

    pub fn int(a: i64) -> Self {
        LPoly::constant(Fp::from_i64(a))
    }

    pub fn monomial(a: Fp, e: i64) -> Self {
        if a.is_zero() {
            LPoly::zero()
        } else {
            LPoly { low: e, c: vec![a] }
        }
    }

    fn normalize(mut self) -> Self {
        while self.c.last().is_some_and(|x| x.is_zero()) {
            self.c.pop();
        }
        let lead = self.c.iter().position(|x| !x.is_zero());
        match lead {
            None => LPoly::zero(),
            Some(k) => {
                self.c.drain(..k);
                self.low += k as i64;
                self
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Order of vanishing at `t = 0`; `None` for zero.
    pub fn val(&self) -> Option<i64> {
        (!self.is_zero()).then_some(self.low)
    }

    /// Coefficient of the lowest term.
    pub fn lead(&self) -> Fp {
        self.c.first().copied().unwrap_or_default()
    }

    pub fn add(&self, o: &LPoly) -> LPoly {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let low = self.low.min(o.low);
        let high = (self.low + self.c.len() as i64).max(o.low + o.c.len() as i64);
        let mut c = vec![Fp::zero(); (high - low) as usize];
        for (i, x) in self.c.iter().enumerate() {
            let k = (self.low - low) as usize + i;
            c[k] = c[k].add(*x);
        }
        for (i, x) in o.c.iter().enumerate() {
            let k = (o.low - low) as usize + i;
            c[k] = c[k].add(*x);
        }
        LPoly { low, c }.normalize()
    }

    pub fn neg(&self) -> LPoly {
        LPoly { low: self.low, c: self.c.iter().map(|x| x.neg()).collect() }
    }

    pub fn sub(&self, o: &LPoly) -> LPoly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &LPoly) -> LPoly {
        if self.is_zero() || o.is_zero() {
            return LPoly::zero();
        }
        let n = self.c.len() + o.c.len() - 1;
        let mut acc = vec![0u128; n];
        let mut c = vec![Fp::zero(); n];
        // accumulate up to 60 products before reducing
        for (i, x) in self.c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in o.c.iter().enumerate() {
                acc[i + j] += (x.0 as u128) * (y.0 as u128);
            }
            if i % 60 == 59 {
                for k in 0..n {
                    c[k] = c[k].add(reduce128(acc[k]));
                    acc[k] = 0;
                }
            }
        }
        for k in 0..n {
            c[k] = c[k].add(reduce128(acc[k]));
        }
        LPoly { low: self.low + o.low, c }.normalize()
    }

    pub fn scale(&self, a: Fp) -> LPoly {
        LPoly { low: self.low, c: self.c.iter().map(|x| x.mul(a)).collect() }.normalize()
    }

    pub fn pow(&self, e: u32) -> LPoly {
        let mut r = LPoly::int(1);
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }
}

/// A fraction of Laurent polynomials, kept unreduced; only valuations are read from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frac {
    pub n: LPoly,
    pub d: LPoly,
}

impl Frac {
    pub fn val(&self) -> Option<i64> {
        Some(self.n.val()? - self.d.val().expect("nonzero denominator"))
    }

    pub fn sub(&self, o: &Frac) -> Frac {
        Frac { n: self.n.mul(&o.d).sub(&o.n.mul(&self.d)), d: self.d.mul(&o.d) }
    }

    pub fn constant(a: Fp) -> Frac {
        Frac { n: LPoly::constant(a), d: LPoly::int(1) }
    }
}

pub type Pt = [LPoly; 3];

pub fn cross(a: &Pt, b: &Pt) -> Pt {
    [
        a[1].mul(&b[2]).sub(&a[2].mul(&b[1])),
        a[2].mul(&b[0]).sub(&a[0].mul(&b[2])),
        a[0].mul(&b[1]).sub(&a[1].mul(&b[0])),
    ]
}

pub fn is_zero_vec(a: &Pt) -> bool {
    a.iter().all(|x| x.is_zero())
}

pub fn proj_eq(a: &Pt, b: &Pt) -> bool {
    is_zero_vec(&cross(a, b))
}

fn lin(a: &LPoly, p: &Pt, b: &LPoly, q: &Pt) -> Pt {
    [
        a.mul(&p[0]).add(&b.mul(&q[0])),
        a.mul(&p[1]).add(&b.mul(&q[1])),
        a.mul(&p[2]).add(&b.mul(&q[2])),
    ]
}

/// Position of `q` in the pencil spanned by `a` (parameter 0) and `b` (parameter ∞):
/// `q ∝ a + s b`. Returns `None` for `s = ∞`.
pub fn pencil_param(a: &Pt, b: &Pt, q: &Pt) -> Result<Option<Frac>> {
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let m = a[i].mul(&b[j]).sub(&a[j].mul(&b[i]));
        if m.is_zero() {
            continue;
        }
        let num = a[i].mul(&q[j]).sub(&a[j].mul(&q[i]));
        let den = q[i].mul(&b[j]).sub(&q[j].mul(&b[i]));
        if den.is_zero() {
            return Ok(None);
        }
        return Ok(Some(Frac { n: num, d: den }));
    }
    Err(Error::NonGeneric("pencil spanned by proportional vectors".into()))
}

/// Defining equation of a plane curve; conic coefficients are ordered
/// `x², y², z², xy, xz, yz`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CurveEq {
    Line(Pt),
    Conic([LPoly; 6]),
}

impl CurveEq {
    pub fn degree(&self) -> u32 {
        match self {
            CurveEq::Line(_) => 1,
            CurveEq::Conic(_) => 2,
        }
    }

    pub fn eval(&self, p: &Pt) -> LPoly {
        match self {
            CurveEq::Line(l) => l[0].mul(&p[0]).add(&l[1].mul(&p[1])).add(&l[2].mul(&p[2])),
            CurveEq::Conic(c) => {
                let m = conic_monomials(p);
                let mut s = LPoly::zero();
                for (ci, mi) in c.iter().zip(&m) {
                    s = s.add(&ci.mul(mi));
                }
                s
            }
        }
    }

    /// Polarization `B(a,b) = Q(a+b) - Q(a) - Q(b)` for conics.
    pub fn polar(&self, a: &Pt, b: &Pt) -> LPoly {
        let ab = [a[0].add(&b[0]), a[1].add(&b[1]), a[2].add(&b[2])];
        self.eval(&ab).sub(&self.eval(a)).sub(&self.eval(b))
    }

    /// Tangent line of a conic at a point.
    pub fn tangent(&self, p: &Pt) -> Result<Pt> {
        match self {
            CurveEq::Conic(c) => {
                let two = LPoly::int(2);
                Ok([
                    two.mul(&c[0]).mul(&p[0]).add(&c[3].mul(&p[1])).add(&c[4].mul(&p[2])),
                    two.mul(&c[1]).mul(&p[1]).add(&c[3].mul(&p[0])).add(&c[5].mul(&p[2])),
                    two.mul(&c[2]).mul(&p[2]).add(&c[4].mul(&p[0])).add(&c[5].mul(&p[1])),
                ])
            }
            CurveEq::Line(l) => Ok(l.clone()),
        }
    }

    /// Coefficients of the dehomogenized polynomial in `u = y/x`, `v = z/x`, keyed by the
    /// exponent of `(u, v)`.
    pub fn uv_terms(&self) -> Vec<((i64, i64), LPoly)> {
        let raw: Vec<((i64, i64), LPoly)> = match self {
            CurveEq::Line(l) => vec![((0, 0), l[0].clone()), ((1, 0), l[1].clone()), ((0, 1), l[2].clone())],
            CurveEq::Conic(c) => vec![
                ((0, 0), c[0].clone()),
                ((2, 0), c[1].clone()),
                ((0, 2), c[2].clone()),
                ((1, 0), c[3].clone()),
                ((0, 1), c[4].clone()),
                ((1, 1), c[5].clone()),
            ],
        };
        raw.into_iter().filter(|(_, c)| !c.is_zero()).collect()
    }
}

fn conic_monomials(p: &Pt) -> [LPoly; 6] {
    [
        p[0].mul(&p[0]),
        p[1].mul(&p[1]),
        p[2].mul(&p[2]),
        p[0].mul(&p[1]),
        p[0].mul(&p[2]),
        p[1].mul(&p[2]),
    ]
}

/// The conic through five points, by signed maximal minors.
pub fn conic_through(points: &[Pt]) -> Result<[LPoly; 6]> {
    if points.len() != 5 {
        return Err(Error::Domain("a conic needs five points".into()));
    }
    let rows: Vec<[LPoly; 6]> = points.iter().map(conic_monomials).collect();
    // det of rows r.. restricted to column subset, by expansion along the first row
    let mut memo: BTreeMap<(usize, u8), LPoly> = BTreeMap::new();
    fn det(rows: &[[LPoly; 6]], r: usize, cols: u8, memo: &mut BTreeMap<(usize, u8), LPoly>) -> LPoly {
        if r == rows.len() {
            return LPoly::int(1);
        }
        if let Some(v) = memo.get(&(r, cols)) {
            return v.clone();
        }
        let mut acc = LPoly::zero();
        let mut sign = 1;
        for j in 0..6 {
            if cols & (1 << j) == 0 {
                continue;
            }
            let sub = det(rows, r + 1, cols & !(1 << j), memo);
            let term = rows[r][j].mul(&sub);
            acc = if sign > 0 { acc.add(&term) } else { acc.sub(&term) };
            sign = -sign;
        }
        memo.insert((r, cols), acc.clone());
        acc
    }
    let mut out: [LPoly; 6] = Default::default();
    for (j, slot) in out.iter_mut().enumerate() {
        let m = det(&rows, 0, 0b111111 & !(1 << j), &mut memo);
        *slot = if j % 2 == 0 { m } else { m.neg() };
    }
    if out.iter().all(|c| c.is_zero()) {
        return Err(Error::NonGeneric("five points do not determine a unique conic".into()));
    }
    Ok(out)
}

/// A named curve of an arrangement.
#[derive(Debug, Clone)]
pub struct Curve {
    pub label: LineLabel,
    pub eq: CurveEq,
}

/// A marked point on a curve: where other curves (or a blown-up point) meet it.
#[derive(Debug, Clone)]
pub struct MarkedPoint {
    pub pt: Pt,
    /// Blown-up point index when the marked point is one of the `p_i`.
    pub special: Option<u8>,
    /// Other curves of the arrangement through the point.
    pub on: Vec<usize>,
    /// Parameter on the curve; `None` is the point at infinity of the parametrization.
    pub s: Option<Frac>,
}

impl MarkedPoint {
    /// Labels of the boundary lines meeting the curve here.
    pub fn labels(&self, curves: &[Curve]) -> Vec<LineLabel> {
        match self.special {
            Some(i) => vec![LineLabel::E(i)],
            None => self.on.iter().map(|&j| curves[j].label).collect(),
        }
    }
}

/// A curve with its rational parametrization and all its marked points.
#[derive(Debug, Clone)]
pub struct MarkedCurve {
    pub index: usize,
    pub marked: Vec<MarkedPoint>,
    /// Parameter value `ξ` used to fix leading constants.
    pub xi: Fp,
    param: Param,
}

#[derive(Debug, Clone)]
enum Param {
    Line { a: Pt, b: Pt },
    Conic { p0: Pt, c: Pt, d: Pt },
}

/// Points, curves and incidences of a configuration of plane curves over `F_p(t)`.
#[derive(Debug, Clone)]
pub struct Arrangement {
    pub points: Vec<(u8, Pt)>,
    pub curves: Vec<Curve>,
    pub marked: Vec<MarkedCurve>,
    /// Every valuation is scaled by this positive integer.
    pub scale: i64,
}

/// Tropical point data of one marked point, relative to a list of coordinate functions.
#[derive(Debug, Clone)]
pub struct CoordFn {
    /// Curves in the numerator with multiplicities.
    pub num: Vec<(usize, u32)>,
    pub den: Vec<(usize, u32)>,
}

impl Arrangement {
    /// Builds all marked points. `scale` is the common denominator used for exponents.
    pub fn new(points: Vec<(u8, Pt)>, curves: Vec<Curve>, scale: i64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut marked = Vec::new();
        for ci in 0..curves.len() {
            let xi = Fp::new(rng.gen_range(2..P - 1));
            marked.push(mark_curve(&points, &curves, ci, xi)?);
        }
        Ok(Arrangement { points, curves, marked, scale })
    }

    pub fn curve_index(&self, l: LineLabel) -> Option<usize> {
        self.curves.iter().position(|c| c.label == l)
    }

    /// Order of a coordinate function at a marked point.
    pub fn order(&self, f: &CoordFn, m: &MarkedPoint) -> i64 {
        let mut o = 0;
        for &(z, e) in &f.num {
            if m.on.contains(&z) {
                o += e as i64;
            }
        }
        for &(z, e) in &f.den {
            if m.on.contains(&z) {
                o -= e as i64;
            }
        }
        o
    }

    fn point_at(&self, mc: &MarkedCurve, s: Fp) -> Pt {
        let sp = LPoly::constant(s);
        match &mc.param {
            Param::Line { a, b } => lin(&LPoly::int(1), a, &sp, b),
            Param::Conic { p0, c, d } => {
                let eq = &self.curves[mc.index].eq;
                let qv = lin(&LPoly::int(1), c, &sp, d);
                let a = eq.eval(&qv);
                let b = eq.polar(p0, &qv);
                lin(&a, p0, &b.neg(), &qv)
            }
        }
    }

    /// Valuation of the leading constant `c` in `f∘φ(s) = c Π (s - s_j)^{m_j}`.
    fn leading_val(&self, mc: &MarkedCurve, f: &CoordFn, orders: &[i64]) -> Result<i64> {
        let pt = self.point_at(mc, mc.xi);
        let mut v = 0i64;
        for &(z, e) in &f.num {
            let x = self.curves[z].eq.eval(&pt).val().ok_or_else(|| Error::NonGeneric("sample point on a curve".into()))?;
            v += e as i64 * x;
        }
        for &(z, e) in &f.den {
            let x = self.curves[z].eq.eval(&pt).val().ok_or_else(|| Error::NonGeneric("sample point on a curve".into()))?;
            v -= e as i64 * x;
        }
        let xi = Frac::constant(mc.xi);
        for (m, &o) in mc.marked.iter().zip(orders) {
            if o == 0 {
                continue;
            }
            if let Some(s) = &m.s {
                let dv = xi.sub(s).val().ok_or_else(|| Error::NonGeneric("sample parameter is marked".into()))?;
                v -= o * dv;
            }
        }
        Ok(v)
    }

    /// Pairwise valuations `val(s_i - s_j)` of the finite marked parameters.
    fn pair_vals(&self, mc: &MarkedCurve) -> Result<Vec<Vec<Option<i64>>>> {
        let n = mc.marked.len();
        let mut out = vec![vec![None; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                if let (Some(a), Some(b)) = (&mc.marked[i].s, &mc.marked[j].s) {
                    let v = a
                        .sub(b)
                        .val()
                        .ok_or_else(|| Error::NonGeneric("two marked points coincide".into()))?;
                    out[i][j] = Some(v);
                    out[j][i] = Some(v);
                }
            }
        }
        Ok(out)
    }

    /// The metric tree of a curve with all its marked points, lengths divided by `scale`.
    pub fn curve_tree(&self, ci: usize) -> Result<MetricTree> {
        let mc = &self.marked[ci];
        let labels: Vec<LineLabel> = mc
            .marked
            .iter()
            .map(|m| {
                let ls = m.labels(&self.curves);
                if ls.len() == 1 {
                    Ok(ls[0])
                } else {
                    Err(Error::NonGeneric(format!("{} marked point lies on {} lines", self.curves[ci].label, ls.len())))
                }
            })
            .collect::<Result<_>>()?;
        let finite: Vec<usize> = (0..mc.marked.len()).filter(|&i| mc.marked[i].s.is_some()).collect();
        let inf: Vec<usize> = (0..mc.marked.len()).filter(|&i| mc.marked[i].s.is_none()).collect();
        let pv = self.pair_vals(mc)?;
        cluster_tree(&finite, &inf, &pv, &labels, self.scale)
    }

    /// The metric tree of the exceptional curve over the blown-up point `p_i`: tangent
    /// directions of the curves through it.
    pub fn exceptional_tree(&self, i: u8) -> Result<MetricTree> {
        let (_, p) = self.points.iter().find(|(k, _)| *k == i).ok_or_else(|| Error::Lookup(format!("no point p{i}")))?;
        let mut dirs: Vec<(LineLabel, Pt)> = Vec::new();
        for c in &self.curves {
            if c.eq.eval(p).is_zero() {
                dirs.push((c.label, c.eq.tangent(p)?));
            }
        }
        if dirs.len() < 2 {
            return Err(Error::Domain(format!("fewer than two curves through p{i}")));
        }
        let a = dirs[0].1.clone();
        let b = dirs[1].1.clone();
        let mut pars = Vec::new();
        for (_, l) in &dirs {
            pars.push(pencil_param(&a, &b, l)?);
        }
        let n = dirs.len();
        let mut pv = vec![vec![None; n]; n];
        for x in 0..n {
            for y in x + 1..n {
                if let (Some(s), Some(t)) = (&pars[x], &pars[y]) {
                    let v = s.sub(t).val().ok_or_else(|| Error::NonGeneric(format!("two curves are tangent at p{i}")))?;
                    pv[x][y] = Some(v);
                    pv[y][x] = Some(v);
                }
            }
        }
        let finite: Vec<usize> = (0..n).filter(|&x| pars[x].is_some()).collect();
        let inf: Vec<usize> = (0..n).filter(|&x| pars[x].is_none()).collect();
        let labels: Vec<LineLabel> = dirs.iter().map(|(l, _)| *l).collect();
        cluster_tree(&finite, &inf, &pv, &labels, self.scale)
    }

    /// Tropicalization of the curve `ci` punctured where the given coordinate functions
    /// have zeros or poles, as weighted pieces in the scaled coordinates.
    pub fn punctured_image(&self, ci: usize, fns: &[CoordFn]) -> Result<Vec<Piece>> {
        let mc = &self.marked[ci];
        let n = mc.marked.len();
        let orders: Vec<Vec<i64>> = fns.iter().map(|f| mc.marked.iter().map(|m| self.order(f, m)).collect()).collect();
        let mut lead = Vec::new();
        for (f, o) in fns.iter().zip(&orders) {
            lead.push(self.leading_val(mc, f, o)?);
        }
        let pv = self.pair_vals(mc)?;
        let active: Vec<bool> = (0..n).map(|i| orders.iter().any(|o| o[i] != 0)).collect();
        let finite: Vec<usize> = (0..n).filter(|&i| active[i] && mc.marked[i].s.is_some()).collect();
        let dir_at = |i: usize| -> ZVec { orders.iter().map(|o| -o[i]).collect() };
        let inf_dir: ZVec = (0..fns.len())
            .map(|k| finite.iter().map(|&i| orders[k][i]).sum::<i64>())
            .collect();
        // image of the ball of radius rho around marked point a
        let image = |a: usize, rho: i64| -> ZVec {
            (0..fns.len())
                .map(|k| {
                    let mut v = lead[k];
                    for &j in &finite {
                        let m = orders[k][j];
                        if m == 0 {
                            continue;
                        }
                        let d = if j == a { rho } else { pv[a][j].expect("finite pair").min(rho) };
                        v += m * d;
                    }
                    -v
                })
                .collect()
        };
        let mut pieces = Vec::new();
        let push_ray = |pieces: &mut Vec<Piece>, base: &ZVec, d: &ZVec| {
            let g = crate::num::lattice_len(d);
            if g != 0 {
                pieces.push(Piece { a: base.clone(), b: None, dir: crate::num::primitive(d), weight: g });
            }
        };
        if finite.is_empty() {
            return Err(Error::Consistency(format!("{} has no finite punctures", self.curves[ci].label)));
        }
        if finite.len() == 1 {
            let x0 = image(finite[0], 0);
            push_ray(&mut pieces, &x0, &dir_at(finite[0]));
            push_ray(&mut pieces, &x0, &inf_dir);
            return Ok(pieces);
        }
        // clusters: recursive split by ultrametric level
        fn build(
            set: &[usize],
            pv: &[Vec<Option<i64>>],
            out: &mut Vec<(usize, i64, Option<usize>)>,
            parent: Option<usize>,
            leaves: &mut Vec<(usize, usize)>,
        ) {
            let rho = set
                .iter()
                .flat_map(|&i| set.iter().filter(move |&&j| j != i).map(move |&j| pv[i][j].unwrap()))
                .min()
                .unwrap();
            let id = out.len();
            out.push((set[0], rho, parent));
            let mut classes: Vec<Vec<usize>> = Vec::new();
            for &i in set {
                match classes.iter_mut().find(|c| pv[c[0]][i].unwrap() > rho) {
                    Some(c) => c.push(i),
                    None => classes.push(vec![i]),
                }
            }
            for c in classes {
                if c.len() == 1 {
                    leaves.push((c[0], id));
                } else {
                    build(&c, pv, out, Some(id), leaves);
                }
            }
        }
        let mut nodes = Vec::new();
        let mut leaves = Vec::new();
        build(&finite, &pv, &mut nodes, None, &mut leaves);
        let imgs: Vec<ZVec> = nodes.iter().map(|&(a, rho, _)| image(a, rho)).collect();
        for (k, &(_, rho, parent)) in nodes.iter().enumerate() {
            if let Some(p) = parent {
                let drho = rho - nodes[p].1;
                let delta: ZVec = imgs[k].iter().zip(&imgs[p]).map(|(x, y)| x - y).collect();
                if delta.iter().any(|x| x % drho != 0) {
                    return Err(Error::Consistency("non-integral slope on a curve edge".into()));
                }
                let slope: ZVec = delta.iter().map(|x| x / drho).collect();
                let g = crate::num::lattice_len(&slope);
                if g != 0 {
                    pieces.push(Piece { a: imgs[p].clone(), b: Some(imgs[k].clone()), dir: crate::num::primitive(&slope), weight: g });
                }
            }
        }
        for &(i, node) in &leaves {
            push_ray(&mut pieces, &imgs[node], &dir_at(i));
        }
        push_ray(&mut pieces, &imgs[0], &inf_dir);
        Ok(pieces)
    }
}

/// A weighted piece of a tropical curve: the segment `[a, b]` or the ray from `a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub a: ZVec,
    pub b: Option<ZVec>,
    pub dir: ZVec,
    pub weight: i64,
}

/// Metric tree from an ultrametric on finite parameters, with the points at infinity
/// attached to the root.
fn cluster_tree(
    finite: &[usize],
    inf: &[usize],
    pv: &[Vec<Option<i64>>],
    labels: &[LineLabel],
    scale: i64,
) -> Result<MetricTree> {
    let mut t = MetricTree::default();
    fn build(set: &[usize], pv: &[Vec<Option<i64>>], labels: &[LineLabel], t: &mut MetricTree, scale: i64) -> (usize, i64) {
        if set.len() == 1 {
            return (t.add_leaf(labels[set[0]]), i64::MAX);
        }
        let rho = set
            .iter()
            .flat_map(|&i| set.iter().filter(move |&&j| j != i).map(move |&j| pv[i][j].unwrap()))
            .min()
            .unwrap();
        let node = t.add_internal();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for &i in set {
            match classes.iter_mut().find(|c| pv[c[0]][i].unwrap() > rho) {
                Some(c) => c.push(i),
                None => classes.push(vec![i]),
            }
        }
        for c in classes {
            let (child, crho) = build(&c, pv, labels, t, scale);
            if crho == i64::MAX {
                t.add_edge(node, child, None);
            } else {
                t.add_edge(node, child, Some(qf(crho - rho, scale)));
            }
        }
        (node, rho)
    }
    if finite.is_empty() {
        return Err(Error::Domain("no finite marked points".into()));
    }
    let (root, _) = build(finite, pv, labels, &mut t, scale);
    for &i in inf {
        let leaf = t.add_leaf(labels[i]);
        if t.is_leaf(root) {
            // two-point curve: the root is itself a leaf
            let mid = t.add_internal();
            t.add_edge(mid, root, None);
            t.add_edge(mid, leaf, None);
        } else {
            t.add_edge(root, leaf, None);
        }
    }
    t.suppress_degree_two();
    Ok(t)
}

fn mark_curve(points: &[(u8, Pt)], curves: &[Curve], ci: usize, xi: Fp) -> Result<MarkedCurve> {
    let c = &curves[ci];
    let mut found: Vec<(Pt, Option<u8>)> = Vec::new();
    let add = |found: &mut Vec<(Pt, Option<u8>)>, p: Pt, sp: Option<u8>| {
        if let Some(slot) = found.iter_mut().find(|(q, _)| proj_eq(q, &p)) {
            if slot.1.is_none() {
                slot.1 = sp;
            }
        } else {
            found.push((p, sp));
        }
    };
    let on_c: Vec<&(u8, Pt)> = points.iter().filter(|(_, p)| c.eq.eval(p).is_zero()).collect();
    for (i, p) in &on_c {
        add(&mut found, p.clone(), Some(*i));
    }
    for (zi, z) in curves.iter().enumerate() {
        if zi == ci {
            continue;
        }
        let common: Vec<&Pt> = on_c.iter().filter(|(_, p)| z.eq.eval(p).is_zero()).map(|(_, p)| p).collect();
        let total = c.eq.degree() * z.eq.degree();
        let rest = total as i64 - common.len() as i64;
        if rest <= 0 {
            continue;
        }
        let pt = match (&c.eq, &z.eq) {
            (CurveEq::Line(a), CurveEq::Line(b)) => cross(a, b),
            (CurveEq::Line(l), conic @ CurveEq::Conic(_)) | (conic @ CurveEq::Conic(_), CurveEq::Line(l)) if rest == 1 => {
                let p0 = common[0].clone();
                let w = other_point_on_line(l, &p0);
                let qa = conic.eval(&w);
                let qb = conic.polar(&p0, &w);
                lin(&qa, &p0, &qb.neg(), &w)
            }
            _ => {
                return Err(Error::Unsupported(format!(
                    "intersection of {} and {} is not rational over the ground field",
                    c.label, z.label
                )))
            }
        };
        if is_zero_vec(&pt) {
            return Err(Error::NonGeneric(format!("{} and {} coincide", c.label, z.label)));
        }
        add(&mut found, pt, None);
    }
    let mut marked: Vec<MarkedPoint> = found
        .into_iter()
        .map(|(pt, special)| {
            let on = curves
                .iter()
                .enumerate()
                .filter(|(zi, z)| *zi != ci && z.eq.eval(&pt).is_zero())
                .map(|(zi, _)| zi)
                .collect();
            MarkedPoint { pt, special, on, s: None }
        })
        .collect();
    for (zi, z) in curves.iter().enumerate() {
        if zi == ci {
            continue;
        }
        let count = marked.iter().filter(|m| m.on.contains(&zi)).count() as u32;
        if count != c.eq.degree() * z.eq.degree() {
            return Err(Error::NonGeneric(format!("{} and {} do not meet transversally", c.label, z.label)));
        }
    }
    if marked.len() < 3 && matches!(c.eq, CurveEq::Conic(_)) || marked.len() < 2 {
        return Err(Error::Domain(format!("{} carries too few marked points", c.label)));
    }
    let param = match &c.eq {
        CurveEq::Line(_) => Param::Line { a: marked[0].pt.clone(), b: marked[1].pt.clone() },
        CurveEq::Conic(_) => Param::Conic { p0: marked[0].pt.clone(), c: marked[1].pt.clone(), d: marked[2].pt.clone() },
    };
    for m in marked.iter_mut() {
        m.s = match &param {
            Param::Line { a, b } => pencil_param(a, b, &m.pt)?,
            Param::Conic { p0, c: cc, d } => {
                let line = if proj_eq(&m.pt, p0) { c.eq.tangent(p0)? } else { cross(p0, &m.pt) };
                let qv = cross(&line, &cross(cc, d));
                pencil_param(cc, d, &qv)?
            }
        };
    }
    Ok(MarkedCurve { index: ci, marked, xi, param })
}

fn other_point_on_line(l: &Pt, p: &Pt) -> Pt {
    for e in 0..3 {
        let mut v: Pt = Default::default();
        v[e] = LPoly::int(1);
        let w = cross(l, &v);
        if !is_zero_vec(&w) && !proj_eq(&w, p) {
            return w;
        }
    }
    unreachable!("a line has at least two coordinate intersections")
}

/// The point `[1 : a t^(-X) : b t^(-Y)]` with scaled integer exponents.
pub fn torus_point(x: i64, y: i64, a: Fp, b: Fp) -> Pt {
    [LPoly::int(1), LPoly::monomial(a, -x), LPoly::monomial(b, -y)]
}

pub fn const_point(v: [i64; 3]) -> Pt {
    [LPoly::int(v[0]), LPoly::int(v[1]), LPoly::int(v[2])]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_arithmetic() {
        let a = Fp::new(123456789);
        assert_eq!(a.mul(a.inv()), Fp::one());
        assert_eq!(Fp::from_i64(-1).add(Fp::one()), Fp::zero());
        let big = Fp(P - 1);
        assert_eq!(big.mul(big), Fp::one());
    }

    #[test]
    fn laurent_products_and_valuations() {
        let x = LPoly::monomial(Fp::new(3), -2).add(&LPoly::monomial(Fp::new(1), 1));
        let y = LPoly::monomial(Fp::new(2), 3);
        assert_eq!(x.mul(&y).val(), Some(1));
        assert!(x.sub(&x).is_zero());
        assert_eq!(x.pow(3).val(), Some(-6));
    }

    #[test]
    fn conic_through_five_points_vanishes() {
        let pts = vec![
            const_point([1, 0, 0]),
            const_point([0, 1, 0]),
            const_point([0, 0, 1]),
            const_point([1, 1, 1]),
            torus_point(2, -1, Fp::new(5), Fp::new(7)),
        ];
        let c = CurveEq::Conic(conic_through(&pts).unwrap());
        for p in &pts {
            assert!(c.eval(p).is_zero());
        }
        let off = torus_point(1, 1, Fp::new(11), Fp::new(13));
        assert!(!c.eval(&off).is_zero());
    }

    #[test]
    fn pencil_parameter_of_a_combination() {
        let a = const_point([1, 0, 0]);
        let b = const_point([0, 1, 0]);
        let q = [LPoly::int(2), LPoly::monomial(Fp::new(6), 4), LPoly::zero()];
        let s = pencil_param(&a, &b, &q).unwrap().unwrap();
        assert_eq!(s.val(), Some(4));
        assert!(pencil_param(&a, &b, &b).unwrap().is_none());
    }
}
