//! Cox ideal data: Plücker relations, the universal trinomial systems of degree 4 and 3,
//! Picard gradings, line involutions and the tropical min-twice test on trinomials.
//!
//! Coefficients of the degree-3 system are kept as formal products of positive E6 roots,
//! so the Weyl group acts on them by signed permutations and the orbit of the ten
//! relations of one line can be computed exactly.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::num::Q;
use crate::rootsys::{lines, lines_meet, neighbors, plucker_name, reflect, root_of_line, LineLabel, RootSystem, RootVector};
use crate::{Error, Result};

/// The involution pairing the ten lines that meet `l` on a cubic surface: each pair spans
/// a tritangent plane together with `l`.
pub fn line_involution(l: LineLabel) -> Result<BTreeMap<LineLabel, LineLabel>> {
    let nb = neighbors(l, 3)?;
    let mut out = BTreeMap::new();
    for &a in &nb {
        let partner: Vec<LineLabel> = nb.iter().copied().filter(|&b| b != a && lines_meet(a, b, 3)).collect();
        if partner.len() != 1 {
            return Err(Error::Structural(format!("{a} has {} partners on {l}", partner.len())));
        }
        out.insert(a, partner[0]);
    }
    Ok(out)
}

/// A variable of a Cox ring: a Plücker coordinate of the base or a line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    P(u8, u8),
    L(LineLabel),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::P(i, j) => write!(f, "p{i}{j}"),
            Var::L(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Term {
    pub sign: i8,
    /// Positive roots, sorted; their product is the coefficient.
    pub coeff: Vec<RootVector>,
    pub mono: BTreeMap<Var, u32>,
    /// Variable order for display only; empty means the sorted order.
    pub written: Vec<Var>,
}

impl PartialEq for Term {
    fn eq(&self, o: &Self) -> bool {
        (self.sign, &self.coeff, &self.mono) == (o.sign, &o.coeff, &o.mono)
    }
}

impl Eq for Term {}

impl PartialOrd for Term {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Term {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        (self.sign, &self.coeff, &self.mono).cmp(&(o.sign, &o.coeff, &o.mono))
    }
}

impl std::hash::Hash for Term {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        (self.sign, &self.coeff, &self.mono).hash(h)
    }
}

impl Term {
    fn display_vars(&self) -> Vec<String> {
        if self.written.is_empty() {
            self.mono.iter().flat_map(|(v, e)| std::iter::repeat_n(v.to_string(), *e as usize)).collect()
        } else {
            self.written.iter().map(|v| v.to_string()).collect()
        }
    }

    fn key(&self) -> (Vec<(Var, u32)>, Vec<RootVector>) {
        (self.mono.iter().map(|(v, e)| (*v, *e)).collect(), self.coeff.clone())
    }
}

/// Three signed terms in the degree context 3, 4 or 5.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Trinomial {
    pub context: u8,
    pub terms: Vec<Term>,
}

impl Trinomial {
    /// Terms sorted by monomial, with the first carrying `+`.
    pub fn canonical(&self) -> Trinomial {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|t| t.key());
        if terms[0].sign < 0 {
            for t in &mut terms {
                t.sign = -t.sign;
            }
        }
        Trinomial { context: self.context, terms }
    }

    pub fn variables(&self) -> BTreeSet<Var> {
        self.terms.iter().flat_map(|t| t.mono.keys().copied()).collect()
    }

    pub fn line_support(&self) -> BTreeSet<LineLabel> {
        self.variables()
            .into_iter()
            .filter_map(|v| match v {
                Var::L(l) => Some(l),
                Var::P(..) => None,
            })
            .collect()
    }

    /// Picard degrees of the three terms.
    pub fn term_degrees(&self) -> Result<Vec<Vec<i64>>> {
        self.terms
            .iter()
            .map(|t| {
                let mut deg = vec![0i64; picard_rank(self.context)?];
                for (v, e) in &t.mono {
                    for (x, y) in deg.iter_mut().zip(grade(*v, self.context)?) {
                        *x += *e as i64 * y;
                    }
                }
                Ok(deg)
            })
            .collect()
    }

    pub fn degree(&self) -> Result<Vec<i64>> {
        let d = self.term_degrees()?;
        if d.iter().any(|x| x != &d[0]) {
            return Err(Error::Consistency(format!("{self} is not homogeneous")));
        }
        Ok(d[0].clone())
    }

    pub fn is_homogeneous(&self) -> Result<bool> {
        let d = self.term_degrees()?;
        Ok(d.iter().all(|x| x == &d[0]))
    }

    /// Renames line variables (coefficients are untouched).
    pub fn substitute(&self, map: &BTreeMap<LineLabel, LineLabel>) -> Trinomial {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                sign: t.sign,
                coeff: t.coeff.clone(),
                written: t
                    .written
                    .iter()
                    .map(|v| match v {
                        Var::L(l) => Var::L(*map.get(l).unwrap_or(l)),
                        p => *p,
                    })
                    .collect(),
                mono: t
                    .mono
                    .iter()
                    .map(|(v, e)| match v {
                        Var::L(l) => (Var::L(*map.get(l).unwrap_or(l)), *e),
                        p => (*p, *e),
                    })
                    .collect(),
            })
            .collect();
        Trinomial { context: self.context, terms }
    }
}

impl fmt::Display for Trinomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.context == 3 { "" } else { " " };
        for (k, t) in self.terms.iter().enumerate() {
            match (k, t.sign) {
                (0, s) if s < 0 => write!(f, "-")?,
                (0, _) => {}
                (_, s) if s < 0 => write!(f, " - ")?,
                _ => write!(f, " + ")?,
            }
            for r in &t.coeff {
                write!(f, "({r})")?;
            }
            write!(f, "{}", t.display_vars().join(sep))?;
        }
        Ok(())
    }
}

fn picard_rank(context: u8) -> Result<usize> {
    match context {
        5 => Ok(5),
        4 => Ok(6),
        3 => Ok(7),
        d => Err(Error::Unsupported(format!("degree context {d}"))),
    }
}

/// Picard degree of a variable. Degree 5: `deg p_ij = e_i + e_j` (lines through their
/// Plücker names). Degree 4: the demicube vertices, with the `p_ij` of degree 0. Degree 3:
/// the class in the basis `(H, E1, ..., E6)`, so `F_ij = H - E_i - E_j` and
/// `G_j = 2H - ΣE + E_j`.
pub fn grade(v: Var, context: u8) -> Result<Vec<i64>> {
    let unknown = || Error::Lookup(format!("{v} is not a variable in degree context {context}"));
    match context {
        5 => {
            let (i, j) = match v {
                Var::P(i, j) if i < j && j <= 5 && i >= 1 => (i, j),
                Var::L(l) => plucker_name(l).map_err(|_| unknown())?,
                _ => return Err(unknown()),
            };
            let mut d = vec![0i64; 5];
            d[i as usize - 1] += 1;
            d[j as usize - 1] += 1;
            Ok(d)
        }
        4 => match v {
            Var::P(i, j) if i >= 1 && i < j && j <= 5 => Ok(vec![0; 6]),
            Var::L(LineLabel::E(i)) if (1..=5).contains(&i) => {
                let mut d = vec![1, 0, 0, 0, 0, 0];
                d[i as usize] = 1;
                Ok(d)
            }
            Var::L(LineLabel::F(i, j)) if j <= 5 => {
                let mut d = vec![1; 6];
                d[i as usize] = 0;
                d[j as usize] = 0;
                Ok(d)
            }
            Var::L(LineLabel::G(0)) => Ok(vec![1; 6]),
            _ => Err(unknown()),
        },
        3 => match v {
            Var::L(LineLabel::E(i)) if (1..=6).contains(&i) => {
                let mut d = vec![0i64; 7];
                d[i as usize] = 1;
                Ok(d)
            }
            Var::L(LineLabel::F(i, j)) if j <= 6 => {
                let mut d = vec![0i64; 7];
                d[0] = 1;
                d[i as usize] = -1;
                d[j as usize] = -1;
                Ok(d)
            }
            Var::L(LineLabel::G(j)) if (1..=6).contains(&j) => {
                let mut d = vec![2, -1, -1, -1, -1, -1, -1];
                d[j as usize] = 0;
                Ok(d)
            }
            _ => Err(unknown()),
        },
        _ => Err(Error::Unsupported(format!("degree context {context}"))),
    }
}

/// Intersection number of two degree-3 classes in the basis `(H, E1, ..., E6)`.
pub fn picard_pairing(a: &[i64], b: &[i64]) -> i64 {
    a[0] * b[0] - a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<i64>()
}

fn parse_var(chars: &[char], i: &mut usize, context: u8) -> Result<Var> {
    let at = *i;
    let bad = || Error::Parse(format!("bad variable at {:?}", chars[at..].iter().collect::<String>()));
    let kind = chars[*i];
    *i += 1;
    let mut digits = Vec::new();
    let want = match kind {
        'p' | 'F' => 2,
        'E' => 1,
        'G' if context == 3 => 1,
        'G' => 0,
        _ => return Err(bad()),
    };
    while digits.len() < want {
        let d = chars.get(*i).and_then(|c| c.to_digit(10)).ok_or_else(bad)?;
        digits.push(d as u8);
        *i += 1;
    }
    Ok(match kind {
        'p' if digits[0] < digits[1] => Var::P(digits[0], digits[1]),
        'p' => return Err(bad()),
        'E' => Var::L(LineLabel::E(digits[0])),
        'F' if digits[0] < digits[1] => Var::L(LineLabel::F(digits[0], digits[1])),
        'F' => return Err(bad()),
        _ => Var::L(LineLabel::G(digits.first().copied().unwrap_or(0))),
    })
}

/// Parses `(d3-d4)(d1+d3+d4)E2F12 - ...` (degree 3) or `p23 p45 F24 F35 - ... - G E1`
/// (degrees 4 and 5). Coefficient roots written with a negative leading coordinate are
/// normalized to positive roots with the sign moved to the term.
pub fn parse_trinomial(s: &str, context: u8) -> Result<Trinomial> {
    let chars: Vec<char> = s.replace('−', "-").chars().filter(|c| !c.is_whitespace()).collect();
    let mut terms = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let mut sign = 1i8;
        if chars[i] == '+' || chars[i] == '-' {
            if chars[i] == '-' {
                sign = -1;
            }
            i += 1;
        } else if !terms.is_empty() {
            return Err(Error::Parse(format!("missing sign in {s:?}")));
        }
        let mut coeff = Vec::new();
        let mut mono: BTreeMap<Var, u32> = BTreeMap::new();
        let mut written = Vec::new();
        while i < chars.len() && chars[i] != '+' && chars[i] != '-' {
            if chars[i] == '(' {
                if context != 3 {
                    return Err(Error::Parse(format!("root coefficient in degree context {context}")));
                }
                let close = chars[i..].iter().position(|&c| c == ')').ok_or_else(|| Error::Parse(s.into()))? + i;
                let r = RootVector::parse(&chars[i + 1..close].iter().collect::<String>(), 6)?;
                if !r.is_positive() {
                    sign = -sign;
                }
                coeff.push(r.positive());
                i = close + 1;
            } else {
                let v = parse_var(&chars, &mut i, context)?;
                *mono.entry(v).or_default() += 1;
                written.push(v);
            }
        }
        if mono.is_empty() {
            return Err(Error::Parse(format!("term without variables in {s:?}")));
        }
        coeff.sort();
        terms.push(Term { sign, coeff, mono, written });
    }
    if terms.len() != 3 {
        return Err(Error::Structural(format!("{} terms in {s:?}", terms.len())));
    }
    let t = Trinomial { context, terms };
    for v in t.variables() {
        grade(v, context)?;
    }
    Ok(t)
}

/// A named group of trinomials sharing one Picard degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoxGroup {
    pub name: String,
    pub degree: Vec<i64>,
    pub trinomials: Vec<Trinomial>,
}

#[derive(Serialize, Deserialize)]
struct CoxGroupRepr {
    name: String,
    context: u8,
    degree: Vec<i64>,
    trinomials: Vec<String>,
}

impl Serialize for CoxGroup {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let context = self.trinomials.first().map_or(0, |t| t.context);
        CoxGroupRepr {
            name: self.name.clone(),
            context,
            degree: self.degree.clone(),
            trinomials: self.trinomials.iter().map(|t| t.to_string()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoxGroup {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = CoxGroupRepr::deserialize(d)?;
        let trinomials = r
            .trinomials
            .iter()
            .map(|t| parse_trinomial(t, r.context))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        Ok(CoxGroup { name: r.name, degree: r.degree, trinomials })
    }
}

impl CoxGroup {
    fn from_texts(name: &str, context: u8, texts: &[&str]) -> Result<CoxGroup> {
        let trinomials = texts.iter().map(|t| parse_trinomial(t, context)).collect::<Result<Vec<_>>>()?;
        let degree = trinomials[0].degree()?;
        for t in &trinomials {
            if t.degree()? != degree {
                return Err(Error::Consistency(format!("{t} differs in degree from its group {name}")));
            }
        }
        Ok(CoxGroup { name: name.to_string(), degree, trinomials })
    }

    pub fn canonical_set(&self) -> BTreeSet<String> {
        self.trinomials.iter().map(|t| t.canonical().to_string()).collect()
    }
}

/// The five Plücker relations `p_ij p_kl - p_ik p_jl + p_il p_jk`, `i < j < k < l ≤ 5`.
pub fn plucker_d5() -> Vec<Trinomial> {
    let mut out = Vec::new();
    for i in 1..=5u8 {
        for j in i + 1..=5 {
            for k in j + 1..=5 {
                for l in k + 1..=5 {
                    let term = |sign: i8, a: Var, b: Var| Term {
                        sign,
                        coeff: Vec::new(),
                        mono: BTreeMap::from([(a, 1), (b, 1)]),
                        written: vec![a, b],
                    };
                    out.push(Trinomial {
                        context: 5,
                        terms: vec![
                            term(1, Var::P(i, j), Var::P(k, l)),
                            term(-1, Var::P(i, k), Var::P(j, l)),
                            term(1, Var::P(i, l), Var::P(j, k)),
                        ],
                    });
                }
            }
        }
    }
    out
}

const COX_D4: [(&str, [&str; 5]); 11] = [
    (
        "Base",
        [
            "p12 p34 - p13 p24 + p14 p23",
            "p12 p35 - p13 p25 + p15 p23",
            "p12 p45 - p14 p25 + p15 p24",
            "p13 p45 - p14 p35 + p15 p34",
            "p23 p45 - p24 p35 + p25 p34",
        ],
    ),
    (
        "1",
        [
            "F23 F45 - F24 F35 + F25 F34",
            "p23 p45 F24 F35 - p24 p35 F23 F45 - G E1",
            "p23 p45 F25 F34 - p25 p34 F23 F45 - G E1",
            "p24 p35 F25 F34 - p25 p34 F24 F35 - G E1",
            "",
        ],
    ),
    (
        "2",
        [
            "F13 F45 - F14 F35 + F15 F34",
            "p13 p45 F14 F35 - p14 p35 F13 F45 - G E2",
            "p13 p45 F15 F34 - p15 p34 F13 F45 - G E2",
            "p14 p35 F15 F34 - p15 p34 F14 F35 - G E2",
            "",
        ],
    ),
    (
        "3",
        [
            "F12 F45 - F14 F25 + F15 F24",
            "p12 p45 F14 F25 - p14 p25 F12 F45 - G E3",
            "p12 p45 F15 F24 - p15 p24 F12 F45 - G E3",
            "p14 p25 F15 F24 - p15 p24 F14 F25 - G E3",
            "",
        ],
    ),
    (
        "4",
        [
            "F12 F35 - F13 F25 + F15 F23",
            "p12 p35 F13 F25 - p13 p25 F12 F35 - G E4",
            "p12 p35 F15 F23 - p15 p23 F12 F35 - G E4",
            "p13 p25 F15 F23 - p15 p23 F13 F25 - G E4",
            "",
        ],
    ),
    (
        "5",
        [
            "F12 F34 - F13 F24 + F14 F23",
            "p12 p34 F13 F24 - p13 p24 F12 F34 - G E5",
            "p12 p34 F14 F23 - p14 p23 F12 F34 - G E5",
            "p13 p24 F14 F23 - p14 p23 F13 F24 - G E5",
            "",
        ],
    ),
    (
        "1'",
        [
            "p25 F12 E2 - p35 F13 E3 + p45 F14 E4",
            "p24 F12 E2 - p34 F13 E3 + p45 F15 E5",
            "p23 F12 E2 - p34 F14 E4 + p35 F15 E5",
            "p23 F13 E3 - p24 F14 E4 + p25 F15 E5",
            "",
        ],
    ),
    (
        "2'",
        [
            "p15 F12 E1 - p35 F23 E3 + p45 F24 E4",
            "p14 F12 E1 - p34 F23 E3 + p45 F25 E5",
            "p13 F12 E1 - p34 F24 E4 + p35 F25 E5",
            "p13 F23 E3 - p14 F24 E4 + p15 F25 E5",
            "",
        ],
    ),
    (
        "3'",
        [
            "p15 F13 E1 - p25 F23 E2 + p45 F34 E4",
            "p14 F13 E1 - p24 F23 E2 + p45 F35 E5",
            "p12 F13 E1 - p24 F34 E4 + p25 F35 E5",
            "p12 F23 E2 - p14 F34 E4 + p15 F35 E5",
            "",
        ],
    ),
    (
        "4'",
        [
            "p15 F14 E1 - p25 F24 E2 + p35 F34 E3",
            "p13 F14 E1 - p23 F24 E2 + p35 F45 E5",
            "p12 F14 E1 - p23 F34 E3 + p25 F45 E5",
            "p12 F24 E2 - p13 F34 E3 + p15 F45 E5",
            "",
        ],
    ),
    (
        "5'",
        [
            "p14 F15 E1 - p24 F25 E2 + p34 F35 E3",
            "p13 F15 E1 - p23 F25 E2 + p34 F45 E4",
            "p12 F15 E1 - p23 F35 E3 + p24 F45 E4",
            "p12 F25 E2 - p13 F35 E3 + p14 F45 E4",
            "",
        ],
    ),
];

const COX_D3_G1: [&str; 10] = [
    "(d3-d4)(d1+d3+d4)E2F12 - (d2-d4)(d1+d2+d4)E3F13 + (d2-d3)(d1+d2+d3)E4F14",
    "(d3-d5)(d1+d3+d5)E2F12 - (d2-d5)(d1+d2+d5)E3F13 + (d2-d3)(d1+d2+d3)E5F15",
    "(d3-d6)(d1+d3+d6)E2F12 - (d2-d6)(d1+d2+d6)E3F13 + (d2-d3)(d1+d2+d3)E6F16",
    "(d4-d5)(d1+d4+d5)E2F12 - (d2-d5)(d1+d2+d5)E4F14 + (d2-d4)(d1+d2+d4)E5F15",
    "(d4-d6)(d1+d4+d6)E2F12 - (d2-d6)(d1+d2+d6)E4F14 + (d2-d4)(d1+d2+d4)E6F16",
    "(d5-d6)(d1+d5+d6)E2F12 - (d2-d6)(d1+d2+d6)E5F15 + (d2-d5)(d1+d2+d5)E6F16",
    "(d4-d5)(d1+d4+d5)E3F13 - (d3-d5)(d1+d3+d5)E4F14 + (d3-d4)(d1+d3+d4)E5F15",
    "(d4-d6)(d1+d4+d6)E3F13 - (d3-d6)(d1+d3+d6)E4F14 + (d3-d4)(d1+d3+d4)E6F16",
    "(d5-d6)(d1+d5+d6)E3F13 - (d3-d6)(d1+d3+d6)E5F15 + (d3-d5)(d1+d3+d5)E6F16",
    "(d5-d6)(d1+d5+d6)E4F14 - (d4-d6)(d1+d4+d6)E5F15 + (d4-d5)(d1+d4+d5)E6F16",
];

/// The 45 trinomials of the universal degree-4 Cox ideal in eleven named groups
/// (`Base`, `1`..`5`, `1'`..`5'`), each group of one Picard degree (the Base group has
/// degree 0 in this grading).
pub fn universal_cox_d4() -> Result<Vec<CoxGroup>> {
    COX_D4
        .iter()
        .map(|(name, texts)| {
            let texts: Vec<&str> = texts.iter().copied().filter(|t| !t.is_empty()).collect();
            CoxGroup::from_texts(name, 4, &texts)
        })
        .collect()
}

/// The ten relations of the group of `G1`.
pub fn cox_d3_seed() -> Result<CoxGroup> {
    CoxGroup::from_texts("G1", 3, &COX_D3_G1)
}

/// The image of a degree-3 trinomial under the reflection in the E6 root `s`: coefficient
/// roots and line roots (through the E7 dictionary) move together, and signs are collected.
pub fn reflect_trinomial(t: &Trinomial, s: &RootVector) -> Result<Trinomial> {
    let line_of: HashMap<RootVector, LineLabel> =
        lines(3)?.into_iter().map(|l| (root_of_line(l).expect("line root"), l)).collect();
    let s7 = s.widen(7);
    let mut terms = Vec::new();
    for term in &t.terms {
        let mut sign = term.sign;
        let mut coeff = Vec::new();
        for r in &term.coeff {
            let img = reflect(s, r)?;
            if !img.is_positive() {
                sign = -sign;
            }
            coeff.push(img.positive());
        }
        coeff.sort();
        let mut mono = BTreeMap::new();
        let mut rename = BTreeMap::new();
        for (v, e) in &term.mono {
            let Var::L(l) = v else {
                return Err(Error::Domain(format!("{v} in a degree-3 trinomial")));
            };
            let img = reflect(&s7, &root_of_line(*l)?)?;
            let (l2, sg) = match (line_of.get(&img), line_of.get(&img.neg())) {
                (Some(&l2), _) => (l2, 1),
                (None, Some(&l2)) => (l2, -1),
                _ => return Err(Error::Consistency(format!("reflection of {l} is not a line"))),
            };
            if sg < 0 && e % 2 == 1 {
                sign = -sign;
            }
            mono.insert(Var::L(l2), *e);
            rename.insert(*v, Var::L(l2));
        }
        let written = term.written.iter().map(|v| rename[v]).collect();
        terms.push(Term { sign, coeff, mono, written });
    }
    Ok(Trinomial { context: 3, terms }.canonical())
}

/// The line whose group a set of degree-3 relations forms: the unique line whose ten
/// neighbours are exactly the lines in the support.
fn group_line(support: &BTreeSet<LineLabel>) -> Result<LineLabel> {
    let found: Vec<LineLabel> = lines(3)?
        .into_iter()
        .filter(|&l| neighbors(l, 3).map(|n| n.into_iter().collect::<BTreeSet<_>>() == *support).unwrap_or(false))
        .collect();
    match found.as_slice() {
        [l] => Ok(*l),
        _ => Err(Error::Consistency(format!("support {support:?} is not a neighbourhood"))),
    }
}

/// The 270 trinomials of the universal cubic Cox ideal as the W(E6)-orbit of the ten `G1`
/// relations, in 27 groups keyed by line (by canonical line order).
pub fn universal_cox_d3() -> Result<Vec<(LineLabel, CoxGroup)>> {
    let rs = RootSystem::e6();
    let seed = cox_d3_seed()?;
    let canon = |g: &[Trinomial]| -> BTreeSet<Trinomial> { g.iter().map(|t| t.canonical()).collect::<BTreeSet<_>>() };
    let mut groups: BTreeMap<LineLabel, BTreeSet<Trinomial>> = BTreeMap::new();
    groups.insert(LineLabel::G(1), canon(&seed.trinomials));
    let mut queue = vec![LineLabel::G(1)];
    while let Some(l) = queue.pop() {
        let group: Vec<Trinomial> = groups[&l].iter().cloned().collect();
        for s in &rs.simple {
            let img: BTreeSet<Trinomial> = group.iter().map(|t| reflect_trinomial(t, s)).collect::<Result<_>>()?;
            let support: BTreeSet<LineLabel> = img.iter().flat_map(|t| t.line_support()).collect();
            let l2 = group_line(&support)?;
            match groups.get(&l2) {
                Some(existing) if *existing != img => {
                    return Err(Error::Consistency(format!("two different relation groups for {l2}")));
                }
                Some(_) => {}
                None => {
                    groups.insert(l2, img);
                    queue.push(l2);
                }
            }
        }
    }
    let total: usize = groups.values().map(|g| g.len()).sum();
    if groups.len() != 27 || total != 270 {
        return Err(Error::Consistency(format!("orbit has {} groups and {total} trinomials", groups.len())));
    }
    let order = lines(3)?;
    order
        .into_iter()
        .map(|l| {
            let mut ts: Vec<Trinomial> = groups[&l].iter().cloned().collect();
            ts.sort_by_key(|t| t.to_string());
            let degree = ts[0].degree()?;
            for t in &ts {
                if t.degree()? != degree {
                    return Err(Error::Consistency(format!("{t} is not of the degree of group {l}")));
                }
            }
            Ok((l, CoxGroup { name: l.to_string(), degree, trinomials: ts }))
        })
        .collect()
}

/// Valuations of the root linear forms in the coefficients.
#[derive(Debug, Clone)]
pub enum Dval {
    Trivial,
    Values(BTreeMap<RootVector, Q>),
}

/// Min-twice test: the minimum over the terms of (coefficient valuation + weight of the
/// monomial) must be attained at least twice. Missing variables have weight zero.
pub fn trop_eval(t: &Trinomial, w: &BTreeMap<Var, Q>, dval: &Dval) -> Result<bool> {
    let vals: Vec<Q> = t
        .terms
        .iter()
        .map(|term| {
            let mut v = Q::from_integer(0.into());
            if let Dval::Values(m) = dval {
                for r in &term.coeff {
                    v += m.get(r).ok_or_else(|| Error::Domain(format!("no valuation for ({r})")))?;
                }
            }
            for (x, e) in &term.mono {
                if let Some(wx) = w.get(x) {
                    v += wx * Q::from_integer((*e).into());
                }
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let min = vals.iter().min().expect("three terms");
    Ok(vals.iter().filter(|v| *v == min).count() >= 2)
}

/// Whether the involution of `l` maps the group of `l` to itself up to signs.
pub fn involution_fixes_group(l: LineLabel, groups: &[(LineLabel, CoxGroup)]) -> Result<bool> {
    let sigma = line_involution(l)?;
    let (_, g) = groups.iter().find(|(m, _)| *m == l).ok_or_else(|| Error::Lookup(format!("no group for {l}")))?;
    let before: BTreeSet<Trinomial> = g.trinomials.iter().map(|t| t.canonical()).collect();
    let after: BTreeSet<Trinomial> = g.trinomials.iter().map(|t| t.substitute(&sigma).canonical()).collect();
    Ok(before == after)
}

/// Whether every unit vector `e_L` passes the min-twice test on all given degree-3
/// relations at trivial valuation.
pub fn schlafli_rays_pass(groups: &[(LineLabel, CoxGroup)]) -> Result<bool> {
    for l in lines(3)? {
        let w = BTreeMap::from([(Var::L(l), Q::from_integer(1.into()))]);
        for (_, g) in groups {
            for t in &g.trinomials {
                if !trop_eval(t, &w, &Dval::Trivial)? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::q;

    /// The degree-4 groups rebuilt from their combinatorial pattern: Base and the groups
    /// `i` are Plücker-type relations on the complement of `i`, the groups `i'` run over
    /// triples of that complement.
    fn cox_d4_by_pattern() -> Vec<(String, Vec<String>)> {
        let mut out = vec![("Base".to_string(), plucker_d5().iter().map(|t| t.to_string()).collect())];
        let p = |a: u8, b: u8| format!("p{}{}", a.min(b), a.max(b));
        let f = |a: u8, b: u8| format!("F{}{}", a.min(b), a.max(b));
        for i in 1..=5u8 {
            let c: Vec<u8> = (1..=5).filter(|&x| x != i).collect();
            let (a, b, cc, d) = (c[0], c[1], c[2], c[3]);
            let pairs = [((a, b), (cc, d)), ((a, cc), (b, d)), ((a, d), (b, cc))];
            let mut g = vec![format!(
                "{} {} - {} {} + {} {}",
                f(a, b),
                f(cc, d),
                f(a, cc),
                f(b, d),
                f(a, d),
                f(b, cc)
            )];
            for (k, l) in [(0, 1), (0, 2), (1, 2)] {
                let (pk, pl) = (pairs[k], pairs[l]);
                g.push(format!(
                    "{} {} {} {} - {} {} {} {} - G E{i}",
                    p(pk.0 .0, pk.0 .1),
                    p(pk.1 .0, pk.1 .1),
                    f(pl.0 .0, pl.0 .1),
                    f(pl.1 .0, pl.1 .1),
                    p(pl.0 .0, pl.0 .1),
                    p(pl.1 .0, pl.1 .1),
                    f(pk.0 .0, pk.0 .1),
                    f(pk.1 .0, pk.1 .1)
                ));
            }
            out.push((i.to_string(), g));
        }
        for i in 1..=5u8 {
            let c: Vec<u8> = (1..=5).filter(|&x| x != i).collect();
            let mut g = Vec::new();
            for skip in (0..4).rev() {
                let d = c[skip];
                let t: Vec<u8> = c.iter().copied().filter(|&x| x != d).collect();
                g.push(format!(
                    "{} {} E{} - {} {} E{} + {} {} E{}",
                    p(t[0], d),
                    f(i, t[0]),
                    t[0],
                    p(t[1], d),
                    f(i, t[1]),
                    t[1],
                    p(t[2], d),
                    f(i, t[2]),
                    t[2]
                ));
            }
            out.push((format!("{i}'"), g));
        }
        out
    }

    #[test]
    fn plucker_relations() {
        let ps = plucker_d5();
        assert_eq!(ps.len(), 5);
        assert_eq!(ps[0].to_string(), "p12 p34 - p13 p24 + p14 p23");
        for t in &ps {
            assert!(t.is_homogeneous().unwrap());
        }
        assert_eq!(grade(Var::L(LineLabel::E(1)), 5).unwrap(), vec![1, 0, 0, 0, 1]);
    }

    #[test]
    fn degree_four_system_matches_its_pattern() {
        let groups = universal_cox_d4().unwrap();
        assert_eq!(groups.iter().map(|g| g.trinomials.len()).sum::<usize>(), 45);
        let pattern = cox_d4_by_pattern();
        for (g, (name, texts)) in groups.iter().zip(&pattern) {
            assert_eq!(&g.name, name);
            let printed: Vec<String> = g.trinomials.iter().map(|t| t.to_string()).collect();
            let rebuilt: Vec<String> = texts.iter().map(|t| parse_trinomial(t, 4).unwrap().to_string()).collect();
            assert_eq!(printed, rebuilt, "group {name}");
        }
        assert_eq!(groups[1].trinomials[0].to_string(), "F23 F45 - F24 F35 + F25 F34");
        assert_eq!(groups[6].trinomials[0].to_string(), "p25 F12 E2 - p35 F13 E3 + p45 F14 E4");
        assert_eq!(groups[1].degree, vec![2, 2, 1, 1, 1, 1]);
        let base: Vec<String> = plucker_d5().iter().map(|t| t.to_string()).collect();
        assert_eq!(groups[0].trinomials.iter().map(|t| t.to_string()).collect::<Vec<_>>(), base);
    }

    #[test]
    fn demicube_grading() {
        assert_eq!(grade(Var::L(LineLabel::E(1)), 4).unwrap(), vec![1, 1, 0, 0, 0, 0]);
        assert_eq!(grade(Var::L(LineLabel::G(0)), 4).unwrap(), vec![1; 6]);
        assert_eq!(grade(Var::L(LineLabel::F(1, 2)), 4).unwrap(), vec![1, 0, 0, 1, 1, 1]);
        assert_eq!(grade(Var::L(LineLabel::F(4, 5)), 4).unwrap(), vec![1, 1, 1, 1, 0, 0]);
        for l in lines(4).unwrap() {
            let d = grade(Var::L(l), 4).unwrap();
            assert_eq!(d[1..].iter().sum::<i64>() % 2, 1, "{l}");
        }
        assert!(grade(Var::L(LineLabel::G(1)), 4).is_err());
    }

    #[test]
    fn cubic_classes_reproduce_the_intersection_graph() {
        let ls = lines(3).unwrap();
        for &a in &ls {
            let da = grade(Var::L(a), 3).unwrap();
            assert_eq!(picard_pairing(&da, &da), -1);
            for &b in &ls {
                if a != b {
                    let expect = if lines_meet(a, b, 3) { 1 } else { 0 };
                    assert_eq!(picard_pairing(&da, &grade(Var::L(b), 3).unwrap()), expect, "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn seed_group_matches_its_pattern() {
        let seed = cox_d3_seed().unwrap();
        let mut k = 0;
        for a in 2..=6u8 {
            for b in a + 1..=6 {
                for c in b + 1..=6 {
                    let text = format!(
                        "(d{b}-d{c})(d1+d{b}+d{c})E{a}F1{a} - (d{a}-d{c})(d1+d{a}+d{c})E{b}F1{b} + (d{a}-d{b})(d1+d{a}+d{b})E{c}F1{c}"
                    );
                    assert!(seed.trinomials.contains(&parse_trinomial(&text, 3).unwrap()), "{text}");
                    k += 1;
                }
            }
        }
        assert_eq!(k, 10);
        assert_eq!(seed.trinomials[0].to_string(), COX_D3_G1[0]);
        let support: BTreeSet<LineLabel> = seed.trinomials.iter().flat_map(|t| t.line_support()).collect();
        assert_eq!(support, neighbors(LineLabel::G(1), 3).unwrap().into_iter().collect());
    }

    #[test]
    fn cubic_system_is_a_weyl_orbit() {
        let groups = universal_cox_d3().unwrap();
        assert_eq!(groups.len(), 27);
        let all: BTreeSet<Trinomial> =
            groups.iter().flat_map(|(_, g)| g.trinomials.iter().map(|t| t.canonical())).collect();
        assert_eq!(all.len(), 270);
        let rs = RootSystem::e6();
        for t in &all {
            for s in &rs.simple {
                assert!(all.contains(&reflect_trinomial(t, s).unwrap()));
            }
        }
        let seed = cox_d3_seed().unwrap();
        let g1 = &groups.iter().find(|(l, _)| *l == LineLabel::G(1)).unwrap().1;
        assert_eq!(g1.canonical_set(), seed.canonical_set());
        for (l, g) in &groups {
            let support: BTreeSet<LineLabel> = g.trinomials.iter().flat_map(|t| t.line_support()).collect();
            assert_eq!(support, neighbors(*l, 3).unwrap().into_iter().collect(), "{l}");
            // The group of L has the class -K - L.
            let mut expect = vec![3i64, -1, -1, -1, -1, -1, -1];
            for (x, y) in expect.iter_mut().zip(grade(Var::L(*l), 3).unwrap()) {
                *x -= y;
            }
            assert_eq!(g.degree, expect, "{l}");
            assert!(involution_fixes_group(*l, &groups).unwrap(), "{l}");
        }
        assert!(schlafli_rays_pass(&groups).unwrap());
    }

    #[test]
    fn trop_eval_examples() {
        let groups = universal_cox_d3().unwrap();
        let zero = BTreeMap::new();
        let e2 = BTreeMap::from([(Var::L(LineLabel::E(2)), q(1))]);
        for (_, g) in &groups {
            for t in &g.trinomials {
                assert!(trop_eval(t, &zero, &Dval::Trivial).unwrap());
                assert!(trop_eval(t, &e2, &Dval::Trivial).unwrap());
            }
        }
        let first = parse_trinomial(COX_D3_G1[0], 3).unwrap();
        let w = BTreeMap::from([(Var::L(LineLabel::E(2)), q(1)), (Var::L(LineLabel::E(3)), q(-1))]);
        assert!(!trop_eval(&first, &w, &Dval::Trivial).unwrap());
        assert!(matches!(trop_eval(&first, &zero, &Dval::Values(BTreeMap::new())), Err(Error::Domain(_))));
    }

    #[test]
    fn groups_round_trip_through_json() {
        let groups = universal_cox_d4().unwrap();
        let s = serde_json::to_string(&groups).unwrap();
        let back: Vec<CoxGroup> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, groups);
        let g3 = universal_cox_d3().unwrap();
        let s = serde_json::to_string(&g3[0].1).unwrap();
        assert!(s.contains("(d"));
        assert_eq!(serde_json::from_str::<CoxGroup>(&s).unwrap(), g3[0].1);
    }

    #[test]
    fn parser_rejects_malformed_input() {
        assert!(parse_trinomial("p12 p34 - p13 p24", 4).is_err());
        assert!(parse_trinomial("p21 p34 - p13 p24 + p14 p23", 4).is_err());
        assert!(parse_trinomial("(d1-d2)E1F12 - E2F12 + E3F13", 4).is_err());
        let t = parse_trinomial("(d4-d3)(d1+d3+d4)E2F12 - (d2-d4)(d1+d2+d4)E3F13 + (d2-d3)(d1+d2+d3)E4F14", 3).unwrap();
        assert_eq!(t.terms[0].sign, -1);
    }
}
