//! Root systems E6 and E7 in d-coordinates, Weyl reflections and orbits, the root/line
//! dictionary and the intersection graphs of the lines on del Pezzo surfaces.
//!
//! The d-coordinates carry the bilinear form `<x, y> = x·y - (Σx)(Σy)/9`, under which every
//! listed root has norm 2 and the 27 lines of a cubic surface sit in E7 as the roots with a
//! nonzero d7 coefficient.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::hash::Hash;

use crate::graph::Graph;
use crate::{Error, Result};

/// An integer vector in d-coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RootVector(pub Vec<i64>);

impl RootVector {
    pub fn m(&self) -> usize {
        self.0.len()
    }

    pub fn neg(&self) -> RootVector {
        RootVector(self.0.iter().map(|x| -x).collect())
    }

    /// Nine times the bilinear form, always an integer.
    pub fn form9(&self, other: &RootVector) -> i64 {
        let dot: i64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        let sa: i64 = self.0.iter().sum();
        let sb: i64 = other.0.iter().sum();
        9 * dot - sa * sb
    }

    /// The bilinear form; `None` when it is not an integer.
    pub fn ip(&self, other: &RootVector) -> Option<i64> {
        let f = self.form9(other);
        (f % 9 == 0).then_some(f / 9)
    }

    /// Positive representative of `±self`: first nonzero coordinate positive.
    pub fn positive(&self) -> RootVector {
        match self.0.iter().find(|&&x| x != 0) {
            Some(&x) if x < 0 => self.neg(),
            _ => self.clone(),
        }
    }

    pub fn is_positive(&self) -> bool {
        self.0.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
    }

    /// Extends by zeros to `m` coordinates.
    pub fn widen(&self, m: usize) -> RootVector {
        let mut v = self.0.clone();
        v.resize(m, 0);
        RootVector(v)
    }

    /// Parses forms such as `d1-d3`, `d1+d3+d5`, `-d2+d4` or
    /// `d1+d2+d3+d4+d5+d6+d7-d2` into a vector with `m` coordinates.
    pub fn parse(s: &str, m: usize) -> Result<RootVector> {
        let bad = || Error::Parse(format!("not a root expression: {s:?}"));
        let mut v = vec![0i64; m];
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let t = t.replace('−', "-");
        if t.is_empty() {
            return Err(bad());
        }
        let bytes: Vec<char> = t.chars().collect();
        let mut i = 0;
        while i < bytes.len() {
            let mut sign = 1;
            if bytes[i] == '+' || bytes[i] == '-' {
                if bytes[i] == '-' {
                    sign = -1;
                }
                i += 1;
            } else if i != 0 {
                return Err(bad());
            }
            if i >= bytes.len() || bytes[i] != 'd' {
                return Err(bad());
            }
            i += 1;
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let idx: usize = bytes[start..i].iter().collect::<String>().parse().map_err(|_| bad())?;
            if idx == 0 || idx > m {
                return Err(bad());
            }
            v[idx - 1] += sign;
        }
        Ok(RootVector(v))
    }
}

impl fmt::Display for RootVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.0.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let sign = if c < 0 { "-" } else if first { "" } else { "+" };
            let mag = if c.abs() == 1 { String::new() } else { c.abs().to_string() };
            write!(f, "{sign}{mag}d{}", i + 1)?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// The positive roots of E6 (`m = 6`) or E7 (`m = 7`) in a fixed order: differences, then
/// three-term sums, then six-term sums, each block lexicographic.
pub fn roots(m: usize) -> Result<Vec<RootVector>> {
    if m != 6 && m != 7 {
        return Err(Error::Unsupported(format!("no root system for m = {m}")));
    }
    let unit = |idx: &[usize], signs: &[i64]| {
        let mut v = vec![0i64; m];
        for (&i, &s) in idx.iter().zip(signs) {
            v[i] += s;
        }
        RootVector(v)
    };
    let mut out = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            out.push(unit(&[i, j], &[1, -1]));
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                out.push(unit(&[i, j, k], &[1, 1, 1]));
            }
        }
    }
    if m == 6 {
        out.push(RootVector(vec![1; 6]));
    } else {
        for skip in (0..7).rev() {
            let mut v = vec![1i64; 7];
            v[skip] = 0;
            out.push(RootVector(v));
        }
    }
    Ok(out)
}

/// Simple roots generating the Weyl group by reflections.
pub fn simple_roots(m: usize) -> Result<Vec<RootVector>> {
    if m != 6 && m != 7 {
        return Err(Error::Unsupported(format!("no root system for m = {m}")));
    }
    let mut out = Vec::new();
    for i in 0..m - 1 {
        let mut v = vec![0i64; m];
        v[i] = 1;
        v[i + 1] = -1;
        out.push(RootVector(v));
    }
    let mut v = vec![0i64; m];
    v[0] = 1;
    v[1] = 1;
    v[2] = 1;
    out.push(RootVector(v));
    Ok(out)
}

/// Reflection `v ↦ v - 2<v,r>/<r,r> r`, exact over the integers.
pub fn reflect(r: &RootVector, v: &RootVector) -> Result<RootVector> {
    let num = 2 * v.form9(r);
    let den = r.form9(r);
    if den == 0 || num % den != 0 {
        return Err(Error::Domain(format!("reflection of {v} in {r} leaves the lattice")));
    }
    let c = num / den;
    Ok(RootVector(v.0.iter().zip(&r.0).map(|(a, b)| a - c * b).collect()))
}

/// A reflection as a linear map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reflection {
    pub root: RootVector,
}

impl Reflection {
    pub fn apply(&self, v: &RootVector) -> RootVector {
        reflect(&self.root, v).expect("reflection of a lattice vector")
    }
}

/// Breadth-first orbit closure under a list of generators, sorted at the end.
pub fn weyl_orbit<T, F>(seed: T, generators: &[F], cap: usize) -> Result<Vec<T>>
where
    T: Clone + Ord + Hash,
    F: Fn(&T) -> T,
{
    let mut seen: HashSet<T> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(seed.clone());
    queue.push_back(seed);
    while let Some(x) = queue.pop_front() {
        for g in generators {
            let y = g(&x);
            if !seen.contains(&y) {
                if seen.len() >= cap {
                    return Err(Error::Resource(format!("orbit exceeds cap {cap}")));
                }
                seen.insert(y.clone());
                queue.push_back(y);
            }
        }
    }
    let mut out: Vec<T> = seen.into_iter().collect();
    out.sort();
    Ok(out)
}

/// A Weyl group element as a signed permutation of the positive roots: root `i` goes to
/// `sign * root[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedPerm {
    pub perm: Vec<u16>,
    pub sign: Vec<i8>,
}

impl SignedPerm {
    pub fn identity(n: usize) -> Self {
        SignedPerm { perm: (0..n as u16).collect(), sign: vec![1; n] }
    }

    /// `self ∘ other`: apply `other`, then `self`.
    pub fn compose(&self, other: &SignedPerm) -> SignedPerm {
        let n = self.perm.len();
        let mut perm = vec![0u16; n];
        let mut sign = vec![0i8; n];
        for i in 0..n {
            let j = other.perm[i] as usize;
            perm[i] = self.perm[j];
            sign[i] = other.sign[i] * self.sign[j];
        }
        SignedPerm { perm, sign }
    }
}

/// A root system with its positive roots, index lookup and simple reflections as signed
/// permutations.
#[derive(Debug, Clone)]
pub struct RootSystem {
    pub m: usize,
    pub positive: Vec<RootVector>,
    pub simple: Vec<RootVector>,
    pub generators: Vec<SignedPerm>,
    index: std::collections::HashMap<RootVector, usize>,
}

impl RootSystem {
    pub fn new(m: usize) -> Result<Self> {
        let positive = roots(m)?;
        let simple = simple_roots(m)?;
        let index: std::collections::HashMap<RootVector, usize> =
            positive.iter().cloned().enumerate().map(|(i, r)| (r, i)).collect();
        let mut rs = RootSystem { m, positive, simple: simple.clone(), generators: Vec::new(), index };
        rs.generators = simple.iter().map(|s| rs.perm_of_reflection(s)).collect::<Result<_>>()?;
        Ok(rs)
    }

    pub fn e6() -> Self {
        RootSystem::new(6).expect("E6")
    }

    pub fn e7() -> Self {
        RootSystem::new(7).expect("E7")
    }

    /// Index and sign of `±r` among the positive roots.
    pub fn locate(&self, r: &RootVector) -> Option<(usize, i8)> {
        if let Some(&i) = self.index.get(r) {
            return Some((i, 1));
        }
        self.index.get(&r.neg()).map(|&i| (i, -1))
    }

    pub fn is_root(&self, r: &RootVector) -> bool {
        self.locate(r).is_some()
    }

    pub fn perm_of_reflection(&self, s: &RootVector) -> Result<SignedPerm> {
        let n = self.positive.len();
        let mut perm = vec![0u16; n];
        let mut sign = vec![0i8; n];
        for (i, r) in self.positive.iter().enumerate() {
            let img = reflect(s, r)?;
            let (j, sg) = self
                .locate(&img)
                .ok_or_else(|| Error::Consistency(format!("reflection of {r} in {s} is not a root")))?;
            perm[i] = j as u16;
            sign[i] = sg;
        }
        Ok(SignedPerm { perm, sign })
    }

    /// Applies a group element to an arbitrary vector in the span of the roots, by writing
    /// it through simple reflections would be costly; instead reflections are applied
    /// directly for generator words.
    pub fn apply_word(&self, word: &[usize], v: &RootVector) -> RootVector {
        let mut x = v.clone();
        for &g in word.iter().rev() {
            x = reflect(&self.simple[g], &x).expect("lattice vector");
        }
        x
    }

    /// Enumerates the whole Weyl group as signed permutations (used for E6 only).
    pub fn group_elements(&self, cap: usize) -> Result<Vec<SignedPerm>> {
        let gens = self.generators.clone();
        let fs: Vec<Box<dyn Fn(&SignedPerm) -> SignedPerm>> = gens
            .into_iter()
            .map(|g| Box::new(move |x: &SignedPerm| g.compose(x)) as Box<dyn Fn(&SignedPerm) -> SignedPerm>)
            .collect();
        weyl_orbit(SignedPerm::identity(self.positive.len()), &fs, cap)
    }

    /// Orbit of a root (as a signed vector) under the simple reflections.
    pub fn root_orbit(&self, r: &RootVector) -> Result<Vec<RootVector>> {
        let simple = self.simple.clone();
        let fs: Vec<Box<dyn Fn(&RootVector) -> RootVector>> = simple
            .into_iter()
            .map(|s| Box::new(move |x: &RootVector| reflect(&s, x).expect("lattice")) as Box<dyn Fn(&RootVector) -> RootVector>)
            .collect();
        weyl_orbit(r.clone(), &fs, 10_000)
    }
}

/// A (-1)-curve label in the degree context 3, 4 or 5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LineLabel {
    E(u8),
    F(u8, u8),
    /// `G(0)` is the single conic of the degree-4 context.
    G(u8),
}

impl LineLabel {
    pub fn f(i: u8, j: u8) -> LineLabel {
        if i < j {
            LineLabel::F(i, j)
        } else {
            LineLabel::F(j, i)
        }
    }

    pub fn parse(s: &str) -> Result<LineLabel> {
        let bad = || Error::Parse(format!("not a line label: {s:?}"));
        let s = s.trim();
        let mut chars = s.chars();
        let kind = chars.next().ok_or_else(bad)?;
        let digits: Vec<u8> = chars.map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(bad)).collect::<Result<_>>()?;
        match (kind, digits.as_slice()) {
            ('E', [i]) if *i >= 1 => Ok(LineLabel::E(*i)),
            ('F', [i, j]) if *i >= 1 && *j >= 1 && i != j => Ok(LineLabel::f(*i, *j)),
            ('G', [i]) if *i >= 1 => Ok(LineLabel::G(*i)),
            ('G', []) => Ok(LineLabel::G(0)),
            _ => Err(bad()),
        }
    }

    /// Index set touched by the label.
    pub fn indices(&self) -> Vec<u8> {
        match *self {
            LineLabel::E(i) => vec![i],
            LineLabel::F(i, j) => vec![i, j],
            LineLabel::G(0) => vec![],
            LineLabel::G(i) => vec![i],
        }
    }
}

impl fmt::Display for LineLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LineLabel::E(i) => write!(f, "E{i}"),
            LineLabel::F(i, j) => write!(f, "F{i}{j}"),
            LineLabel::G(0) => write!(f, "G"),
            LineLabel::G(i) => write!(f, "G{i}"),
        }
    }
}

/// All lines of the degree-`d` del Pezzo surface in canonical order (E, then F, then G).
pub fn lines(d: u8) -> Result<Vec<LineLabel>> {
    let n = match d {
        3 => 6u8,
        4 => 5,
        5 => 4,
        _ => return Err(Error::Unsupported(format!("degree {d}"))),
    };
    let mut out: Vec<LineLabel> = (1..=n).map(LineLabel::E).collect();
    for i in 1..=n {
        for j in i + 1..=n {
            out.push(LineLabel::F(i, j));
        }
    }
    match d {
        3 => out.extend((1..=6).map(LineLabel::G)),
        4 => out.push(LineLabel::G(0)),
        _ => {}
    }
    Ok(out)
}

/// Plücker name of a degree-5 line: `E_i = p_{i5}` and `F_ij = p_kl` with `{k,l}` the
/// complement of `{i,j}` in `{1,2,3,4}`.
pub fn plucker_name(l: LineLabel) -> Result<(u8, u8)> {
    match l {
        LineLabel::E(i) if (1..=4).contains(&i) => Ok((i, 5)),
        LineLabel::F(i, j) if j <= 4 => {
            let rest: Vec<u8> = (1..=4).filter(|x| *x != i && *x != j).collect();
            Ok((rest[0], rest[1]))
        }
        _ => Err(Error::Domain(format!("{l} is not a degree-5 line"))),
    }
}

/// Whether two distinct lines meet, by the combinatorial rules of each degree.
pub fn lines_meet(a: LineLabel, b: LineLabel, d: u8) -> bool {
    use LineLabel::*;
    if a == b {
        return false;
    }
    let disjoint = |x: &[u8], y: &[u8]| x.iter().all(|i| !y.contains(i));
    match (a, b) {
        (E(i), F(j, k)) | (F(j, k), E(i)) => i == j || i == k,
        (E(i), G(j)) | (G(j), E(i)) => {
            if d == 4 {
                true
            } else {
                i != j
            }
        }
        (F(i, j), F(k, l)) => disjoint(&[i, j], &[k, l]),
        (F(i, j), G(k)) | (G(k), F(i, j)) => d == 3 && (k == i || k == j),
        _ => false,
    }
}

/// Intersection graph of the lines for degree `d ∈ {3,4,5}`.
pub fn intersection_graph(d: u8) -> Result<Graph> {
    let ls = lines(d)?;
    let mut g = Graph::new(ls.iter().map(|l| l.to_string()).collect());
    for i in 0..ls.len() {
        for j in i + 1..ls.len() {
            if lines_meet(ls[i], ls[j], d) {
                g.add_edge(i, j);
            }
        }
    }
    Ok(g)
}

/// Lines meeting `l` in degree `d`, in canonical order.
pub fn neighbors(l: LineLabel, d: u8) -> Result<Vec<LineLabel>> {
    Ok(lines(d)?.into_iter().filter(|&x| lines_meet(l, x, d)).collect())
}

/// Root of E7 attached to a line of the cubic surface.
pub fn root_of_line(l: LineLabel) -> Result<RootVector> {
    let mut v = vec![0i64; 7];
    match l {
        LineLabel::E(i) if (1..=6).contains(&i) => {
            v[i as usize - 1] = 1;
            v[6] = -1;
        }
        LineLabel::F(i, j) if j <= 6 => {
            v[i as usize - 1] = 1;
            v[j as usize - 1] = 1;
            v[6] = 1;
        }
        LineLabel::G(j) if (1..=6).contains(&j) => {
            v = vec![1; 7];
            v[j as usize - 1] = 0;
        }
        _ => return Err(Error::Domain(format!("{l} is not a line of the cubic surface"))),
    }
    Ok(RootVector(v))
}

/// Inverse of [`root_of_line`], accepting either sign.
pub fn line_of_root(r: &RootVector) -> Result<LineLabel> {
    if r.m() != 7 {
        return Err(Error::Domain(format!("{r} is not an E7 vector")));
    }
    let v = if r.0[6] < 0 && r.0.iter().filter(|x| **x != 0).count() != 2 { r.neg() } else { r.clone() };
    let v = if v.0[6] > 0 && v.0.iter().filter(|x| **x != 0).count() == 2 && v.0.iter().any(|x| *x < 0) {
        v.neg()
    } else {
        v
    };
    let l = match v.0[6] {
        0 => return Err(Error::Domain(format!("{r} lies in E6 and is not a line root"))),
        -1 if v.0.iter().filter(|x| **x != 0).count() == 2 => {
            let i = v.0[..6].iter().position(|x| *x == 1).ok_or_else(|| Error::Domain(format!("{r}")))?;
            LineLabel::E(i as u8 + 1)
        }
        1 => {
            let support: Vec<usize> = v.0[..6].iter().enumerate().filter(|(_, x)| **x != 0).map(|(i, _)| i).collect();
            match support.len() {
                2 => LineLabel::F(support[0] as u8 + 1, support[1] as u8 + 1),
                5 => {
                    let j = (0..6).find(|i| !support.contains(i)).unwrap();
                    LineLabel::G(j as u8 + 1)
                }
                _ => return Err(Error::Domain(format!("{r} is not a line root"))),
            }
        }
        _ => return Err(Error::Domain(format!("{r} is not a line root"))),
    };
    if root_of_line(l)? != v {
        return Err(Error::Domain(format!("{r} is not a line root")));
    }
    Ok(l)
}

/// Root of E6 attached to a line of the degree-4 surface (the d6-substitution).
pub fn root_of_line_d4(l: LineLabel) -> Result<RootVector> {
    let mut v = vec![0i64; 6];
    match l {
        LineLabel::E(i) if (1..=5).contains(&i) => {
            v[i as usize - 1] = 1;
            v[5] = -1;
        }
        LineLabel::F(i, j) if j <= 5 => {
            v[i as usize - 1] = 1;
            v[j as usize - 1] = 1;
            v[5] = 1;
        }
        LineLabel::G(0) => v = vec![1; 6],
        _ => return Err(Error::Domain(format!("{l} is not a line of the degree-4 surface"))),
    }
    Ok(RootVector(v))
}

/// The 27 line roots in canonical line order.
pub fn line_roots() -> Vec<(LineLabel, RootVector)> {
    lines(3).unwrap().into_iter().map(|l| (l, root_of_line(l).unwrap())).collect()
}

/// Lines not orthogonal to a positive E6 root, paired by the reflection in that root.
pub fn double_six(r: &RootVector) -> Result<Vec<(LineLabel, LineLabel)>> {
    let e6 = RootSystem::e6();
    if r.m() != 6 || !e6.is_root(r) {
        return Err(Error::Domain(format!("{r} is not a root of E6")));
    }
    let r7 = r.widen(7);
    let mut pairs = BTreeSet::new();
    for (l, a) in line_roots() {
        if a.ip(&r7) != Some(0) {
            let b = line_of_root(&reflect(&r7, &a)?)?;
            pairs.insert(if l < b { (l, b) } else { (b, l) });
        }
    }
    Ok(pairs.into_iter().collect())
}

/// Lines orthogonal to a root of E6.
pub fn orthogonal_lines(r: &RootVector) -> Vec<LineLabel> {
    let r7 = r.widen(7);
    line_roots().into_iter().filter(|(_, a)| a.ip(&r7) == Some(0)).map(|(l, _)| l).collect()
}

/// An A2 block: three positive roots `α, β, γ` with `γ = ±α ± β`.
pub type A2Block = [RootVector; 3];

/// All A2 subsystems of E6 given by their positive roots (sorted).
pub fn a2_subsystems() -> Vec<A2Block> {
    let e6 = RootSystem::e6();
    let pos = &e6.positive;
    let mut out = BTreeSet::new();
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            if pos[i].ip(&pos[j]).map(|x| x.abs()) == Some(1) {
                let c = reflect(&pos[i], &pos[j]).unwrap().positive();
                let mut b = [pos[i].clone(), pos[j].clone(), c];
                b.sort();
                out.insert(b);
            }
        }
    }
    out.into_iter().collect()
}

/// The 40 triples of mutually orthogonal A2 subsystems of E6.
pub fn a2_cubed_systems() -> Vec<[A2Block; 3]> {
    let blocks = a2_subsystems();
    let orth = |a: &A2Block, b: &A2Block| a.iter().all(|x| b.iter().all(|y| x.ip(y) == Some(0)));
    let mut out = Vec::new();
    for i in 0..blocks.len() {
        for j in i + 1..blocks.len() {
            if !orth(&blocks[i], &blocks[j]) {
                continue;
            }
            for k in j + 1..blocks.len() {
                if orth(&blocks[i], &blocks[k]) && orth(&blocks[j], &blocks[k]) {
                    out.push([blocks[i].clone(), blocks[j].clone(), blocks[k].clone()]);
                }
            }
        }
    }
    out
}

/// Canonical form of an A2×3 system given as roots in any order within and among blocks.
pub fn canonical_a2_cubed(blocks: &[[RootVector; 3]; 3]) -> [A2Block; 3] {
    let mut bs: Vec<A2Block> = blocks
        .iter()
        .map(|b| {
            let mut x = [b[0].positive(), b[1].positive(), b[2].positive()];
            x.sort();
            x
        })
        .collect();
    bs.sort();
    [bs[0].clone(), bs[1].clone(), bs[2].clone()]
}

/// The sixteen vertices of the D5 demicube as ±1 vectors with an even number of minus signs,
/// generated from one vertex by the reflections of D5.
pub fn demicube_orbit(seed: [i64; 5]) -> Result<Vec<[i64; 5]>> {
    let mut gens: Vec<Box<dyn Fn(&[i64; 5]) -> [i64; 5]>> = Vec::new();
    for i in 0..4 {
        gens.push(Box::new(move |x: &[i64; 5]| {
            let mut y = *x;
            y.swap(i, i + 1);
            y
        }));
    }
    gens.push(Box::new(|x: &[i64; 5]| {
        let mut y = *x;
        let (a, b) = (y[3], y[4]);
        y[3] = -b;
        y[4] = -a;
        y
    }));
    weyl_orbit(seed, &gens, 64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rv(s: &str, m: usize) -> RootVector {
        RootVector::parse(s, m).unwrap()
    }

    #[test]
    fn root_counts_and_norms() {
        let r6 = roots(6).unwrap();
        let r7 = roots(7).unwrap();
        assert_eq!(r6.len(), 36);
        assert_eq!(r7.len(), 63);
        assert!(r6.contains(&rv("d1-d2", 6)));
        for r in r6.iter().chain(&r7) {
            assert_eq!(r.ip(r), Some(2), "{r}");
        }
        assert!(roots(5).is_err());
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(rv("d1+d3+d5", 6).to_string(), "d1+d3+d5");
        assert_eq!(rv("d1-d3", 6).0, vec![1, 0, -1, 0, 0, 0]);
        assert_eq!(rv("d1+d2+d3+d4+d5+d6+d7-d2", 7).to_string(), "d1+d3+d4+d5+d6+d7");
        assert!(RootVector::parse("d8", 7).is_err());
        assert!(RootVector::parse("x1", 7).is_err());
    }

    #[test]
    fn reflections_fix_and_negate() {
        for r in roots(6).unwrap() {
            assert_eq!(reflect(&r, &r).unwrap(), r.neg());
        }
        let r = rv("d1-d2", 6);
        let v = rv("d3-d4", 6);
        assert_eq!(reflect(&r, &v).unwrap(), v);
    }

    #[test]
    fn orbit_sizes_by_independent_closure() {
        let e6 = RootSystem::e6();
        assert_eq!(e6.root_orbit(&rv("d1+d3+d5", 6)).unwrap().len(), 72);
        let e7 = RootSystem::e7();
        assert_eq!(e7.root_orbit(&rv("d1-d7", 7)).unwrap().len(), 126);
    }

    #[test]
    fn line_dictionary() {
        assert_eq!(line_of_root(&rv("d1-d7", 7)).unwrap(), LineLabel::E(1));
        assert_eq!(line_of_root(&rv("d1+d2+d7", 7)).unwrap(), LineLabel::F(1, 2));
        assert_eq!(line_of_root(&rv("d1+d2+d3+d4+d5+d6+d7-d2", 7)).unwrap(), LineLabel::G(2));
        assert!(line_of_root(&rv("d1-d2", 7)).is_err());
        for l in lines(3).unwrap() {
            assert_eq!(line_of_root(&root_of_line(l).unwrap()).unwrap(), l);
        }
    }

    #[test]
    fn intersection_graphs() {
        let g3 = intersection_graph(3).unwrap();
        assert_eq!((g3.n(), g3.regular_degree()), (27, Some(10)));
        assert!(g3.is_isomorphic(&crate::graph::schlafli()));
        let g4 = intersection_graph(4).unwrap();
        assert_eq!((g4.n(), g4.regular_degree()), (16, Some(5)));
        assert!(g4.is_isomorphic(&crate::graph::clebsch()));
        let g5 = intersection_graph(5).unwrap();
        assert_eq!((g5.n(), g5.regular_degree()), (10, Some(3)));
        assert!(g5.is_isomorphic(&crate::graph::petersen()));
        let n = neighbors(LineLabel::G(1), 3).unwrap();
        let names: Vec<String> = n.iter().map(|l| l.to_string()).collect();
        assert_eq!(names, ["E2", "E3", "E4", "E5", "E6", "F12", "F13", "F14", "F15", "F16"]);
    }

    #[test]
    fn meeting_lines_are_orthogonal_roots() {
        let lr = line_roots();
        for (a, ra) in &lr {
            for (b, rb) in &lr {
                if a != b {
                    assert_eq!(lines_meet(*a, *b, 3), ra.ip(rb) == Some(0), "{a} {b}");
                }
            }
        }
        for l in lines(4).unwrap() {
            for k in lines(4).unwrap() {
                if l != k {
                    let (x, y) = (root_of_line_d4(l).unwrap(), root_of_line_d4(k).unwrap());
                    assert_eq!(lines_meet(l, k, 4), x.ip(&y) == Some(0), "{l} {k}");
                }
            }
        }
    }

    #[test]
    fn double_six_example() {
        let ds = double_six(&rv("d1+d3+d5", 6)).unwrap();
        let mut got: Vec<String> = ds.iter().map(|(a, b)| format!("{a},{b}")).collect();
        got.sort();
        let mut want: Vec<String> = ["E1,F35", "E3,F15", "E5,F13", "F24,G6", "F26,G4", "F46,G2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        want.sort();
        assert_eq!(got, want);
        for r in roots(6).unwrap() {
            assert_eq!(double_six(&r).unwrap().len(), 6);
            assert_eq!(orthogonal_lines(&r).len(), 15);
        }
    }

    #[test]
    fn a2_cubed_count_and_example() {
        assert_eq!(a2_subsystems().len(), 120);
        let sys = a2_cubed_systems();
        assert_eq!(sys.len(), 40);
        let ex = [
            [rv("d1-d3", 6), rv("d1+d2+d5", 6), rv("d2+d3+d5", 6)],
            [rv("d2-d5", 6), rv("d2+d4+d6", 6), rv("d4+d5+d6", 6)],
            [rv("d4-d6", 6), rv("d1+d3+d4", 6), rv("d1+d3+d6", 6)],
        ];
        assert!(sys.contains(&canonical_a2_cubed(&ex)));
    }

    #[test]
    fn demicube_has_sixteen_vertices() {
        assert_eq!(demicube_orbit([1, -1, -1, -1, -1]).unwrap().len(), 16);
    }
}
