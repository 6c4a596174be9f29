//! Real numbers as exact rational combinations of declared generators
//! `1, α_1, .., α_s`, which are taken to be linearly independent over `Q`.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{fmt_rational, q, to_f64, to_i64, Q};
use crate::lattice::{common_denominator, IntMat};

/// A declared irrational generator with a floating-point value used only
/// for numerical embeddings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Generator {
    pub name: String,
    pub approx: f64,
}

/// An ordered set of generators shared by every symbolic value of a scenario.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Generators(pub Vec<Generator>);

impl Generators {
    pub fn new(gens: Vec<Generator>) -> Self {
        Self(gens)
    }

    pub fn none() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.0.iter().map(|g| g.name.clone()).collect()
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|g| g.name == name)
    }

    /// Parses a linear combination such as `"1/2 + 3*alpha - tau/4"`.
    pub fn parse(&self, src: &str) -> Result<Symbolic> {
        ExprParser { src, pos: 0, gens: self }.parse()
    }
}

/// `c_0 + Σ c_i α_i`, stored as the coefficient vector `(c_0, .., c_s)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Symbolic {
    coeffs: Vec<Q>,
}

impl Symbolic {
    pub fn zero(generator_count: usize) -> Self {
        Self { coeffs: vec![Q::zero(); generator_count + 1] }
    }

    pub fn rational(value: Q, generator_count: usize) -> Self {
        let mut s = Self::zero(generator_count);
        s.coeffs[0] = value;
        s
    }

    pub fn from_coeffs(coeffs: Vec<Q>) -> Self {
        assert!(!coeffs.is_empty());
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn generator_count(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn is_rational(&self) -> bool {
        self.coeffs[1..].iter().all(Zero::is_zero)
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self { coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn to_f64(&self, gens: &Generators) -> f64 {
        let mut acc = to_f64(&self.coeffs[0]);
        for (c, g) in self.coeffs[1..].iter().zip(&gens.0) {
            acc += to_f64(c) * g.approx;
        }
        acc
    }

    pub fn render(&self, gens: &Generators) -> String {
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let body = match i {
                0 => fmt_rational(c),
                _ => {
                    let name = gens.0.get(i - 1).map(|g| g.name.as_str()).unwrap_or("?");
                    if c.is_one() {
                        name.to_string()
                    } else if *c == -Q::one() {
                        format!("-{name}")
                    } else {
                        format!("{}*{name}", fmt_rational(c))
                    }
                }
            };
            parts.push(body);
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ").replace("+ -", "- ")
        }
    }
}

impl Add for &Symbolic {
    type Output = Symbolic;
    fn add(self, rhs: &Symbolic) -> Symbolic {
        assert_eq!(self.coeffs.len(), rhs.coeffs.len(), "generator sets differ");
        Symbolic { coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Symbolic {
    type Output = Symbolic;
    fn sub(self, rhs: &Symbolic) -> Symbolic {
        self + &(-rhs)
    }
}

impl Neg for &Symbolic {
    type Output = Symbolic;
    fn neg(self) -> Symbolic {
        Symbolic { coeffs: self.coeffs.iter().map(|a| -a).collect() }
    }
}

/// A vector in `R^n` with symbolic entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicFrequency {
    entries: Vec<Symbolic>,
    generators: Generators,
}

impl SymbolicFrequency {
    pub fn new(entries: Vec<Symbolic>, generators: Generators) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Symbolic("a frequency needs at least one entry".into()));
        }
        if entries.iter().any(|e| e.generator_count() != generators.len()) {
            return Err(Error::GeneratorMismatch("entry written over a different generator set".into()));
        }
        Ok(Self { entries, generators })
    }

    /// Convenience constructor from expression strings.
    pub fn parse(exprs: &[&str], generators: &Generators) -> Result<Self> {
        let entries = exprs.iter().map(|e| generators.parse(e)).collect::<Result<_>>()?;
        Self::new(entries, generators.clone())
    }

    pub fn rational(values: &[Q]) -> Self {
        let entries = values.iter().map(|v| Symbolic::rational(v.clone(), 0)).collect();
        Self { entries, generators: Generators::none() }
    }

    pub fn ambient_dim(&self) -> usize {
        self.entries.len()
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &Generators {
        &self.generators
    }

    pub fn entries(&self) -> &[Symbolic] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &Symbolic {
        &self.entries[i]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Symbolic::is_zero)
    }

    pub fn concat(&self, other: &SymbolicFrequency) -> Result<SymbolicFrequency> {
        if self.generators.labels() != other.generators.labels() {
            return Err(Error::GeneratorMismatch(format!(
                "[{}] vs [{}]",
                self.generators.labels().join(", "),
                other.generators.labels().join(", ")
            )));
        }
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        Ok(Self { entries, generators: self.generators.clone() })
    }

    pub fn restrict(&self, coords: &[usize]) -> SymbolicFrequency {
        Self { entries: coords.iter().map(|&i| self.entries[i].clone()).collect(), generators: self.generators.clone() }
    }

    /// `m · v` for an integer vector `m`.
    pub fn dot(&self, m: &[i64]) -> Symbolic {
        let mut acc = Symbolic::zero(self.generator_count());
        for (mi, e) in m.iter().zip(&self.entries) {
            if *mi != 0 {
                acc = &acc + &e.scale(&q(*mi));
            }
        }
        acc
    }

    /// `A v` for an integer matrix `A`.
    pub fn apply(&self, a: &IntMat) -> SymbolicFrequency {
        Self { entries: a.iter().map(|row| self.dot(row)).collect(), generators: self.generators.clone() }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.to_f64(&self.generators)).collect()
    }

    pub fn norm_sq_f64(&self) -> f64 {
        self.to_f64().iter().map(|x| x * x).sum()
    }

    /// The `n x (1+s)` coefficient matrix with each column scaled to clear
    /// denominators. `m · v = 0` iff `m` lies in its left kernel.
    pub fn integer_coefficients(&self) -> Result<IntMat> {
        let cols = self.generator_count() + 1;
        let mut out = vec![vec![0i64; cols]; self.ambient_dim()];
        for j in 0..cols {
            let col: Vec<Q> = self.entries.iter().map(|e| e.coeffs[j].clone()).collect();
            let den = common_denominator(&col);
            for (i, c) in col.iter().enumerate() {
                let scaled: BigInt = (c * Q::from_integer(den.clone())).to_integer();
                out[i][j] = to_i64(&scaled)?;
            }
        }
        Ok(out)
    }

    pub fn render(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.render(&self.generators)).collect()
    }
}

impl fmt::Display for SymbolicFrequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.render().join(", "))
    }
}

struct ExprParser<'a> {
    src: &'a str,
    pos: usize,
    gens: &'a Generators,
}

enum Atom {
    Number(BigInt),
    Symbol(usize),
}

impl ExprParser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Symbolic(format!("{msg} at column {} in {:?}", self.pos + 1, self.src))
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn parse(mut self) -> Result<Symbolic> {
        let mut acc = Symbolic::zero(self.gens.len());
        let mut first = true;
        loop {
            let sign = match self.peek() {
                None if first => return Err(self.err("empty expression")),
                None => break,
                Some('+') => {
                    self.pos += 1;
                    q(1)
                }
                Some('-') => {
                    self.pos += 1;
                    q(-1)
                }
                Some(_) if first => q(1),
                Some(_) => return Err(self.err("expected '+' or '-'")),
            };
            first = false;
            let term = self.term()?;
            acc = &acc + &term.scale(&sign);
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Symbolic> {
        let mut coeff = q(1);
        let mut symbol: Option<usize> = None;
        let mut take = |atom: Atom, divide: bool, me: &Self| -> Result<()> {
            match atom {
                Atom::Number(n) if divide => {
                    if n.is_zero() {
                        return Err(me.err("division by zero"));
                    }
                    coeff = &coeff / Q::from_integer(n);
                }
                Atom::Number(n) => coeff = &coeff * Q::from_integer(n),
                Atom::Symbol(_) if divide => return Err(me.err("cannot divide by a generator")),
                Atom::Symbol(i) => {
                    if symbol.replace(i).is_some() {
                        return Err(me.err("products of generators are not linear"));
                    }
                }
            }
            Ok(())
        };
        let a = self.atom()?;
        take(a, false, self)?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    let a = self.atom()?;
                    take(a, false, self)?;
                }
                Some('/') => {
                    self.pos += 1;
                    let a = self.atom()?;
                    take(a, true, self)?;
                }
                _ => break,
            }
        }
        let mut s = Symbolic::zero(self.gens.len());
        match symbol {
            Some(i) => s.coeffs[i + 1] = coeff,
            None => s.coeffs[0] = coeff,
        }
        Ok(s)
    }

    fn atom(&mut self) -> Result<Atom> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let digits: String = rest.chars().take_while(char::is_ascii_digit).collect();
        if !digits.is_empty() {
            self.pos += digits.len();
            return Ok(Atom::Number(digits.parse().expect("digits")));
        }
        let ident: String = rest
            .chars()
            .enumerate()
            .take_while(|(i, c)| c.is_ascii_alphabetic() || *c == '_' || (*i > 0 && c.is_ascii_alphanumeric()))
            .map(|(_, c)| c)
            .collect();
        if ident.is_empty() {
            return Err(self.err("expected a number or generator name"));
        }
        let idx = self.gens.index_of(&ident).ok_or_else(|| self.err(&format!("undeclared generator {ident:?}")))?;
        self.pos += ident.len();
        Ok(Atom::Symbol(idx))
    }
}

/// `true` when all 2x2 minors `m_i v_j - m_j v_i` vanish, i.e. `m ∥ v`.
pub fn parallel_to(m: &[i64], v: &SymbolicFrequency) -> bool {
    let n = m.len();
    for i in 0..n {
        for j in i + 1..n {
            let lhs = v.entry(j).scale(&q(m[i]));
            let rhs = v.entry(i).scale(&q(m[j]));
            if lhs != rhs {
                return false;
            }
        }
    }
    true
}

/// Sign of a symbolic number using its numerical embedding, or exactly when rational.
pub fn symbolic_sign(s: &Symbolic, gens: &Generators) -> i32 {
    if s.is_rational() {
        if s.coeffs[0].is_zero() {
            0
        } else if s.coeffs[0].is_positive() {
            1
        } else {
            -1
        }
    } else if s.to_f64(gens) > 0.0 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q_frac;

    fn gens() -> Generators {
        Generators::new(vec![
            Generator { name: "alpha".into(), approx: std::f64::consts::SQRT_2 },
            Generator { name: "tau".into(), approx: std::f64::consts::PI },
        ])
    }

    #[test]
    fn parses_linear_combinations() {
        let g = gens();
        let s = g.parse("1/2 + 3*alpha - tau/4").unwrap();
        assert_eq!(s.coeffs(), &[q_frac(1, 2), q(3), q_frac(-1, 4)]);
        let s = g.parse("-alpha").unwrap();
        assert_eq!(s.coeffs(), &[q(0), q(-1), q(0)]);
        let s = g.parse(" -3/7 ").unwrap();
        assert_eq!(s.coeffs(), &[q_frac(-3, 7), q(0), q(0)]);
        assert!(g.parse("alpha*tau").is_err());
        assert!(g.parse("beta").is_err());
        assert!(g.parse("").is_err());
        assert!(g.parse("1/0").is_err());
    }

    #[test]
    fn dot_and_zero_test() {
        let g = gens();
        let v = SymbolicFrequency::parse(&["0", "1", "alpha"], &g).unwrap();
        assert!(v.dot(&[5, 0, 0]).is_zero());
        assert!(!v.dot(&[0, 1, 0]).is_zero());
        let m = v.integer_coefficients().unwrap();
        assert_eq!(m, vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0]]);
        assert_eq!(g.parse("2*alpha - 1").unwrap().render(&g), "-1 + 2*alpha");
        assert_eq!(g.parse("1 - tau").unwrap().render(&g), "1 - tau");
    }

    #[test]
    fn parallel_check() {
        let g = gens();
        let v = SymbolicFrequency::parse(&["0", "0", "1"], &g).unwrap();
        assert!(parallel_to(&[0, 0, 3], &v));
        assert!(!parallel_to(&[1, 0, 3], &v));
        let w = SymbolicFrequency::parse(&["1", "alpha"], &g).unwrap();
        assert!(parallel_to(&[0, 0], &w));
        assert!(!parallel_to(&[1, 1], &w));
    }
}
