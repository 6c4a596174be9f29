//! Exact scalars: arbitrary-precision rationals and elements of cyclotomic
//! fields written as rational combinations of roots of unity.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Representative of `x mod 1` in `[0, 1)`.
pub fn frac(x: &Q) -> Q {
    x - x.floor()
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn to_i64(x: &BigInt) -> Result<i64> {
    x.to_i64().ok_or(Error::Overflow)
}

/// Parses `"3"`, `"-3/7"` or `" 12 / 5 "`.
pub fn parse_rational(s: &str) -> Option<Q> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Q::new(n, d))
            }
        }
        None => Some(Q::from_integer(s.parse().ok()?)),
    }
}

pub fn fmt_rational(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

fn lcm_denominators<'a>(xs: impl Iterator<Item = &'a Q>) -> BigInt {
    xs.fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// An element of a cyclotomic field, `sum_j c_j * exp(2 pi i t_j)` with
/// rational `c_j` and rational turns `t_j` in `[0, 1)`.
///
/// The term map is not a canonical form (roots of unity satisfy linear
/// relations); equality reduces modulo the cyclotomic polynomial.
#[derive(Clone, Debug, Default)]
pub struct Cyclo {
    terms: BTreeMap<Q, Q>,
}

impl Cyclo {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn rational(c: Q) -> Self {
        Self::root(c, Q::zero())
    }

    pub fn integer(n: i64) -> Self {
        Self::rational(q(n))
    }

    /// `c * exp(2 pi i turns)`.
    pub fn root(c: Q, turns: Q) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(frac(&turns), c);
        }
        Self { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Q, &Q)> {
        self.terms.iter()
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = Self::zero();
        for (t, a) in &self.terms {
            out.push(t.clone(), a * c);
        }
        out
    }

    fn push(&mut self, turns: Q, c: Q) {
        let t = frac(&turns);
        let entry = self.terms.entry(t.clone()).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&t);
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        self.terms
            .iter()
            .map(|(t, c)| Complex64::from_polar(to_f64(c), 2.0 * std::f64::consts::PI * to_f64(t)))
            .sum()
    }

    /// Exact zero test: reduce the polynomial in `zeta_N` modulo `Phi_N`.
    pub fn is_zero(&self) -> bool {
        if self.terms.is_empty() {
            return true;
        }
        let n = lcm_denominators(self.terms.keys());
        let n = match n.to_usize() {
            Some(n) => n,
            None => return false,
        };
        let mut poly = vec![Q::zero(); n];
        for (t, c) in &self.terms {
            let e = (t * Q::from_integer(BigInt::from(n))).to_integer();
            let e = e.to_usize().expect("exponent below modulus");
            poly[e] += c;
        }
        let phi = cyclotomic_polynomial(n);
        poly_rem(&poly, &phi).iter().all(Zero::is_zero)
    }

    /// Returns the value as a rational when it is one.
    ///
    /// A rational value equals its normalized field trace, and the trace of
    /// `zeta_N^a` is the Ramanujan sum `c_N(a)`.
    pub fn as_rational(&self) -> Option<Q> {
        if self.terms.is_empty() {
            return Some(Q::zero());
        }
        let n = lcm_denominators(self.terms.keys()).to_u64()?;
        let phi_n = totient(n);
        let mut cand = Q::zero();
        for (t, c) in &self.terms {
            let a = (t * Q::from_integer(BigInt::from(n))).to_integer().to_u64()?;
            cand += c * q(ramanujan_sum(n, a)) / q(phi_n as i64);
        }
        let mut diff = self.clone();
        diff.push(Q::zero(), -cand.clone());
        diff.is_zero().then_some(cand)
    }
}

fn totient(n: u64) -> u64 {
    (1..=n).filter(|k| k.gcd(&n) == 1).count() as u64
}

fn mobius(mut n: u64) -> i64 {
    let mut out = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            out = -out;
        }
        p += 1;
    }
    if n > 1 {
        out = -out;
    }
    out
}

fn ramanujan_sum(n: u64, a: u64) -> i64 {
    let g = a.gcd(&n);
    let m = n / g;
    mobius(m) * (totient(n) / totient(m)) as i64
}

impl PartialEq for Cyclo {
    fn eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).is_zero()
    }
}

impl Add for Cyclo {
    type Output = Cyclo;
    fn add(mut self, rhs: Cyclo) -> Cyclo {
        for (t, c) in rhs.terms {
            self.push(t, c);
        }
        self
    }
}

impl Neg for Cyclo {
    type Output = Cyclo;
    fn neg(self) -> Cyclo {
        self.scale(&-Q::one())
    }
}

impl Sub for Cyclo {
    type Output = Cyclo;
    fn sub(self, rhs: Cyclo) -> Cyclo {
        self + (-rhs)
    }
}

impl Mul for &Cyclo {
    type Output = Cyclo;
    fn mul(self, rhs: &Cyclo) -> Cyclo {
        let mut out = Cyclo::zero();
        for (ta, ca) in &self.terms {
            for (tb, cb) in &rhs.terms {
                out.push(ta + tb, ca * cb);
            }
        }
        out
    }
}

impl std::iter::Sum for Cyclo {
    fn sum<I: Iterator<Item = Cyclo>>(iter: I) -> Cyclo {
        iter.fold(Cyclo::zero(), |a, b| a + b)
    }
}

impl fmt::Display for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.as_rational() {
            return write!(f, "{}", fmt_rational(&r));
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(t, c)| {
                if t.is_zero() {
                    fmt_rational(c)
                } else {
                    format!("{}*e(2pi i*{})", fmt_rational(c), fmt_rational(t))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Coefficients (constant term first) of the `n`-th cyclotomic polynomial.
pub fn cyclotomic_polynomial(n: usize) -> Vec<Q> {
    assert!(n >= 1);
    // x^n - 1 divided by Phi_d for every proper divisor d
    let mut num = vec![Q::zero(); n + 1];
    num[0] = -Q::one();
    num[n] = Q::one();
    for d in 1..n {
        if n % d == 0 {
            num = poly_div_exact(&num, &cyclotomic_polynomial(d));
        }
    }
    num
}

fn trim(p: &mut Vec<Q>) {
    while p.len() > 1 && p.last().map(Zero::is_zero).unwrap_or(false) {
        p.pop();
    }
}

fn poly_div_exact(num: &[Q], den: &[Q]) -> Vec<Q> {
    let (quot, rem) = poly_divmod(num, den);
    debug_assert!(rem.iter().all(Zero::is_zero));
    quot
}

fn poly_rem(num: &[Q], den: &[Q]) -> Vec<Q> {
    poly_divmod(num, den).1
}

fn poly_divmod(num: &[Q], den: &[Q]) -> (Vec<Q>, Vec<Q>) {
    let mut rem = num.to_vec();
    let mut den = den.to_vec();
    trim(&mut rem);
    trim(&mut den);
    let dd = den.len() - 1;
    let lead = den[dd].clone();
    if rem.len() < den.len() {
        return (vec![Q::zero()], rem);
    }
    let mut quot = vec![Q::zero(); rem.len() - dd];
    for i in (0..quot.len()).rev() {
        let c = &rem[i + dd] / &lead;
        if !c.is_zero() {
            for (j, dj) in den.iter().enumerate() {
                rem[i + j] -= &c * dj;
            }
        }
        quot[i] = c;
    }
    rem.truncate(dd.max(1));
    (quot, rem)
}

/// Sign of a nonzero rational as +1/-1.
pub fn sign(x: &Q) -> i64 {
    if x.is_negative() {
        -1
    } else {
        1
    }
}
