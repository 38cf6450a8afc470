//! Exact rational scalars, integer vectors and their text forms.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;

use crate::{Error, Result};

/// Exact rational scalar used for all geometry.
pub type Q = BigRational;

/// A point of `Q^n`.
pub type QVec = Vec<Q>;

/// An integer vector (ray directions, lattice bases, exponents).
pub type ZVec = Vec<i64>;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn q0() -> Q {
    Q::zero()
}

pub fn qz(v: &[i64]) -> QVec {
    v.iter().map(|&x| q(x)).collect()
}

/// Formats a rational as `p/q`, or `p` when integral.
pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `p/q` or an integer.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().map_err(|_| bad())?;
        let d: BigInt = b.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Q::new(n, d))
    } else {
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Q::from_integer(n))
    }
}

/// Parses a comma separated pair `x,y` of rationals.
pub fn parse_pair(s: &str) -> Result<(Q, Q)> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Parse(format!("expected x,y but got {s:?}")));
    }
    Ok((parse_q(parts[0])?, parse_q(parts[1])?))
}

pub fn to_i64(x: &Q) -> Option<i64> {
    if x.is_integer() {
        x.numer().to_i64()
    } else {
        None
    }
}

pub fn gcd_i64(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

/// Divides an integer vector by the gcd of its entries.
pub fn primitive(v: &[i64]) -> ZVec {
    let g = v.iter().fold(0i64, |g, &x| g.gcd(&x));
    if g == 0 {
        return v.to_vec();
    }
    v.iter().map(|&x| x / g).collect()
}

/// Lattice index of an integer vector, its gcd.
pub fn lattice_len(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

/// Scales a rational direction to the primitive integer vector with the same direction.
pub fn primitive_of_q(v: &[Q]) -> ZVec {
    let l = v
        .iter()
        .fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    ints.iter()
        .map(|x| {
            let y = if g.is_zero() { x.clone() } else { x / &g };
            y.to_i64().expect("direction entry overflows i64")
        })
        .collect()
}

/// Ratio `a = c * b` for parallel vectors; `None` when not parallel or `b = 0`.
pub fn parallel_factor(a: &[Q], b: &[Q]) -> Option<Q> {
    let mut c: Option<Q> = None;
    for (x, y) in a.iter().zip(b) {
        if y.is_zero() {
            if !x.is_zero() {
                return None;
            }
        } else {
            let r = x / y;
            match &c {
                None => c = Some(r),
                Some(c0) if *c0 != r => return None,
                _ => {}
            }
        }
    }
    c
}

pub fn vsub(a: &[Q], b: &[Q]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vadd(a: &[Q], b: &[Q]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vscale(a: &[Q], c: &Q) -> QVec {
    a.iter().map(|x| x * c).collect()
}

pub fn vz(a: &[i64]) -> QVec {
    qz(a)
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |s, (x, y)| s + x * y)
}

pub fn dot_zq(a: &[i64], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |s, (x, y)| s + q(*x) * y)
}

pub fn cross2(a: &[Q], b: &[Q]) -> Q {
    &a[0] * &b[1] - &a[1] * &b[0]
}

pub fn sign(x: &Q) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

/// Lexicographic comparison of rational vectors.
pub fn cmp_qvec(a: &[Q], b: &[Q]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Rank of a rational matrix given by rows.
pub fn rank(rows: &[QVec]) -> usize {
    row_echelon(rows.to_vec()).len()
}

/// Reduced row echelon form; returns the nonzero rows.
pub fn row_echelon(mut m: Vec<QVec>) -> Vec<QVec> {
    if m.is_empty() {
        return m;
    }
    let ncols = m[0].len();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                let row_r = m[r].clone();
                for (x, y) in m[i].iter_mut().zip(row_r.iter()) {
                    *x = &*x - &f * y;
                }
            }
        }
        r += 1;
    }
    m.truncate(r);
    m
}

/// Solves `A x = b` exactly; returns `None` if inconsistent, and the solution plus the
/// dimension of the solution space otherwise (free variables set to zero).
pub fn solve_linear(a: &[QVec], b: &[Q]) -> Option<(QVec, usize)> {
    let n = if a.is_empty() { 0 } else { a[0].len() };
    let aug: Vec<QVec> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let ech = row_echelon(aug);
    let mut x = vec![Q::zero(); n];
    let mut pivots = 0;
    for row in &ech {
        let Some(c) = row.iter().position(|v| !v.is_zero()) else {
            continue;
        };
        if c == n {
            return None;
        }
        x[c] = row[n].clone();
        pivots += 1;
    }
    Some((x, n - pivots))
}

/// Integer determinant of a small square matrix (Bareiss-free cofactor expansion for n ≤ 3,
/// fraction-free elimination otherwise).
pub fn det_q(m: &[QVec]) -> Q {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= &a[c][c];
        let inv = a[c][c].recip();
        for i in c + 1..n {
            if !a[i][c].is_zero() {
                let f = &a[i][c] * &inv;
                let row_c = a[c].clone();
                for (x, y) in a[i].iter_mut().zip(row_c.iter()) {
                    *x = &*x - &f * y;
                }
            }
        }
    }
    det
}

/// Extended gcd: returns `(g, x, y)` with `a x + b y = g ≥ 0`.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        // a = q b + r with r = a.rem_euclid(b)
        let qv = (a - a.rem_euclid(b)) / b;
        (g, y, x - qv * y)
    }
}

pub fn abs_q(x: &Q) -> Q {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["0", "-3", "7/2", "-5/6"] {
            assert_eq!(fmt_q(&parse_q(s).unwrap()), s);
        }
        assert_eq!(fmt_q(&parse_q("4/2").unwrap()), "2");
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }

    #[test]
    fn primitive_scaling() {
        assert_eq!(primitive(&[2, -4, 6]), vec![1, -2, 3]);
        assert_eq!(primitive_of_q(&[qf(1, 2), qf(-1, 3)]), vec![3, -2]);
    }

    #[test]
    fn ext_gcd_identity() {
        for (a, b) in [(3, 5), (-4, 6), (0, 7), (12, -18), (1, 0)] {
            let (g, x, y) = ext_gcd(a, b);
            assert_eq!(a * x + b * y, g);
            assert_eq!(g, gcd_i64(a, b));
        }
    }

    #[test]
    fn linear_solve_and_rank() {
        let a = vec![qz(&[1, 1]), qz(&[1, -1])];
        let (x, free) = solve_linear(&a, &[q(3), q(1)]).unwrap();
        assert_eq!(x, qz(&[2, 1]));
        assert_eq!(free, 0);
        assert_eq!(rank(&[qz(&[1, 2, 3]), qz(&[2, 4, 6])]), 1);
        assert!(solve_linear(&[qz(&[1, 1]), qz(&[2, 2])], &[q(1), q(3)]).is_none());
        assert_eq!(det_q(&[qz(&[2, 1]), qz(&[1, 1])]), q(1));
    }
}

pub fn to_f64(x: &Q) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}
