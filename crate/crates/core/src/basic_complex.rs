//! Fourier-mode model of the basic complex on a flat torus. Sections are
//! sums of `e^{2πi m·x} e_I` where `e_I` runs over wedge products of an
//! orthonormal frame of `H* = ker i_T`. Every operator is block diagonal
//! over modes.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::Q;
use crate::lattice::common_denominator;
use crate::symbolic::{parallel_to, Symbolic, SymbolicFrequency};

const TAU: f64 = std::f64::consts::TAU;
const PRUNE: f64 = 1e-14;

/// The unit covector along the flow and an orthonormal frame of its complement.
#[derive(Clone, Debug)]
pub struct HStarFrame {
    theta: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl HStarFrame {
    pub fn new(v: &SymbolicFrequency) -> Self {
        let vf = v.to_f64();
        let norm = vf.iter().map(|x| x * x).sum::<f64>().sqrt();
        let theta: Vec<f64> = vf.iter().map(|x| x / norm).collect();
        let n = theta.len();
        let mut span = vec![theta.clone()];
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            for _ in 0..2 {
                for s in &span {
                    let c: f64 = s.iter().zip(&e).map(|(a, b)| a * b).sum();
                    e.iter_mut().zip(s).for_each(|(x, y)| *x -= c * y);
                }
            }
            let len = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            if len > 1e-6 && span.len() < n {
                span.push(e.into_iter().map(|x| x / len).collect());
            }
        }
        let basis = span.split_off(1);
        Self { theta, basis }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Frame components of a covector.
    pub fn components(&self, m: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|e| e.iter().zip(m).map(|(a, b)| a * b).sum()).collect()
    }

    /// `F_{ba} = <e_b, M e_a>`, the matrix of a linear map preserving `H*`.
    pub fn compress(&self, m: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let image: Vec<Vec<f64>> = self
            .basis
            .iter()
            .map(|e| m.iter().map(|row| row.iter().zip(e).map(|(a, b)| a * b).sum()).collect())
            .collect();
        (0..self.rank()).map(|b| (0..self.rank()).map(|a| self.basis[b].iter().zip(&image[a]).map(|(x, y)| x * y).sum()).collect()).collect()
    }
}

/// Fourier mode and frame multi-index (strictly increasing).
pub type Slot = (Vec<i64>, Vec<usize>);

#[derive(Clone, Debug, PartialEq)]
pub struct BasicForm {
    degree: usize,
    cutoff: i64,
    coeffs: BTreeMap<Slot, Complex64>,
    basic: bool,
}

impl BasicForm {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    pub fn is_basic(&self) -> bool {
        self.basic
    }

    pub fn coeffs(&self) -> &BTreeMap<Slot, Complex64> {
        &self.coeffs
    }

    pub fn coefficient(&self, m: &[i64], idx: &[usize]) -> Complex64 {
        self.coeffs.get(&(m.to_vec(), idx.to_vec())).copied().unwrap_or_default()
    }

    pub fn modes(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.coeffs.keys().map(|(m, _)| m)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> BasicForm {
        let mut out = self.clone();
        out.coeffs.values_mut().for_each(|x| *x *= c);
        out.prune();
        out
    }

    pub fn sub(&self, other: &BasicForm) -> BasicForm {
        assert_eq!(self.degree, other.degree);
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            *out.coeffs.entry(k.clone()).or_default() -= v;
        }
        out.basic = self.basic && other.basic;
        out.prune();
        out
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, c| c.norm() >= PRUNE);
    }

    /// `L²` inner product for the unit-volume flat metric.
    pub fn inner(&self, other: &BasicForm) -> Complex64 {
        self.coeffs.iter().filter_map(|(k, a)| other.coeffs.get(k).map(|b| a * b.conj())).sum()
    }
}

/// Decides `m · v = σ` exactly with integer arithmetic.
#[derive(Clone, Debug)]
struct ModeTest {
    columns: Vec<(Vec<i64>, i64)>,
}

impl ModeTest {
    fn new(v: &SymbolicFrequency, sigma: &Symbolic) -> Result<Self> {
        let mut columns = Vec::new();
        for j in 0..=v.generator_count() {
            let mut col: Vec<Q> = v.entries().iter().map(|e| e.coeffs()[j].clone()).collect();
            col.push(sigma.coeffs()[j].clone());
            let den = Q::from_integer(common_denominator(&col));
            let ints: Vec<i64> = col
                .iter()
                .map(|c| crate::exact::to_i64(&(c * &den).to_integer()))
                .collect::<Result<_>>()?;
            let rhs = *ints.last().unwrap();
            columns.push((ints[..ints.len() - 1].to_vec(), rhs));
        }
        Ok(Self { columns })
    }

    fn holds(&self, m: &[i64]) -> bool {
        self.columns.iter().all(|(c, rhs)| c.iter().zip(m).map(|(a, b)| a * b).sum::<i64>() == *rhs)
    }
}

fn subsets(n: usize, q: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, q, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, q, &mut Vec::new(), &mut out);
    out
}

/// Multi-indices of degree `q` over a frame of rank `r`, in lexicographic order.
pub fn multi_indices(r: usize, q: usize) -> Vec<Vec<usize>> {
    subsets(r, q)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// All modes with `|m|∞ ≤ cutoff`, in lexicographic order.
pub fn modes_within(n: usize, cutoff: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|m: Vec<i64>| {
                (-cutoff..=cutoff).map(move |x| {
                    let mut m2 = m.clone();
                    m2.push(x);
                    m2
                })
            })
            .collect();
    }
    out
}

/// Sign and position for inserting `a` into the increasing index list `idx`.
fn insert_sign(idx: &[usize], a: usize) -> Option<(f64, Vec<usize>)> {
    if idx.contains(&a) {
        return None;
    }
    let pos = idx.iter().filter(|&&i| i < a).count();
    let mut out = idx.to_vec();
    out.insert(pos, a);
    Some((if pos % 2 == 0 { 1.0 } else { -1.0 }, out))
}

/// The truncated space of `Λ^• H*`-valued sections for a flow and an optional
/// line-bundle twist of weight `σ` (basic means `m · v = σ`).
#[derive(Clone, Debug)]
pub struct FormSpace {
    v: SymbolicFrequency,
    sigma: Symbolic,
    frame: HStarFrame,
    cutoff: i64,
    test: ModeTest,
    vnorm: f64,
}

impl FormSpace {
    pub fn new(v: &SymbolicFrequency, twist: Option<&Symbolic>, cutoff: i64) -> Result<Self> {
        let sigma = match twist {
            Some(s) => {
                if s.generator_count() != v.generator_count() {
                    return Err(Error::GeneratorMismatch("twist weight and flow use different generators".into()));
                }
                s.clone()
            }
            None => Symbolic::zero(v.generator_count()),
        };
        let test = ModeTest::new(v, &sigma)?;
        Ok(Self { frame: HStarFrame::new(v), vnorm: v.norm_sq_f64().sqrt(), v: v.clone(), sigma, cutoff, test })
    }

    pub fn n(&self) -> usize {
        self.v.ambient_dim()
    }

    /// Top degree, the rank of `H*`.
    pub fn top(&self) -> usize {
        self.frame.rank()
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    pub fn frame(&self) -> &HStarFrame {
        &self.frame
    }

    pub fn flow(&self) -> &SymbolicFrequency {
        &self.v
    }

    pub fn twist(&self) -> &Symbolic {
        &self.sigma
    }

    pub fn with_cutoff(&self, cutoff: i64) -> Self {
        Self { cutoff, ..self.clone() }
    }

    pub fn is_basic_mode(&self, m: &[i64]) -> bool {
        self.test.holds(m)
    }

    /// `π(m) = 0` and `m · v = σ`.
    pub fn is_harmonic_mode(&self, m: &[i64]) -> bool {
        self.is_basic_mode(m) && parallel_to(m, &self.v)
    }

    pub fn modes(&self) -> Vec<Vec<i64>> {
        modes_within(self.n(), self.cutoff)
    }

    pub fn basic_modes(&self) -> Vec<Vec<i64>> {
        self.modes().into_par_iter().filter(|m| self.is_basic_mode(m)).collect()
    }

    pub fn harmonic_modes(&self) -> Vec<Vec<i64>> {
        self.basic_modes().into_iter().filter(|m| parallel_to(m, &self.v)).collect()
    }

    pub fn form(&self, degree: usize, coeffs: impl IntoIterator<Item = (Slot, Complex64)>) -> Result<BasicForm> {
        if degree > self.top() {
            return Err(Error::DegreeOverflow { degree, top: self.top() });
        }
        let mut map = BTreeMap::new();
        for ((m, idx), c) in coeffs {
            if m.len() != self.n() || idx.len() != degree || idx.windows(2).any(|w| w[0] >= w[1]) || idx.iter().any(|&i| i >= self.top()) {
                return Err(Error::Unsupported(format!("slot {m:?} {idx:?} does not fit degree {degree}")));
            }
            *map.entry((m, idx)).or_insert_with(Complex64::zero) += c;
        }
        let mut out = BasicForm { degree, cutoff: self.cutoff, coeffs: map, basic: true };
        out.prune();
        out.basic = out.coeffs.keys().all(|(m, _)| self.is_basic_mode(m));
        Ok(out)
    }

    pub fn zero(&self, degree: usize) -> BasicForm {
        BasicForm { degree, cutoff: self.cutoff, coeffs: BTreeMap::new(), basic: true }
    }

    fn rebuild(&self, degree: usize, coeffs: BTreeMap<Slot, Complex64>) -> BasicForm {
        let mut out = BasicForm { degree, cutoff: self.cutoff, coeffs, basic: true };
        out.prune();
        out.basic = out.coeffs.keys().all(|(m, _)| self.is_basic_mode(m));
        out
    }

    /// `H*` part of `2πi m` in frame components.
    pub fn symbol(&self, m: &[i64]) -> Vec<Complex64> {
        let mf: Vec<f64> = m.iter().map(|&x| x as f64).collect();
        self.frame.components(&mf).into_iter().map(|x| Complex64::new(0.0, TAU * x)).collect()
    }

    /// Normalized flow frequency `m·v̂ - σ̂`.
    pub fn flow_frequency(&self, m: &[i64]) -> f64 {
        let mv: f64 = m.iter().zip(self.v.to_f64()).map(|(&a, b)| a as f64 * b).sum();
        (mv - self.sigma.to_f64(self.v.generators())) / self.vnorm
    }

    pub fn apply_d(&self, u: &BasicForm) -> Result<BasicForm> {
        if u.degree >= self.top() {
            return Err(Error::DegreeOverflow { degree: u.degree, top: self.top() });
        }
        let mut out: BTreeMap<Slot, Complex64> = BTreeMap::new();
        for ((m, idx), c) in &u.coeffs {
            let xi = self.symbol(m);
            for (a, xa) in xi.iter().enumerate() {
                if let Some((sign, j)) = insert_sign(idx, a) {
                    *out.entry((m.clone(), j)).or_default() += xa * c * sign;
                }
            }
        }
        Ok(self.rebuild(u.degree + 1, out))
    }

    /// Formal `L²` adjoint of `D`, contraction with the conjugate symbol.
    pub fn apply_d_adjoint(&self, u: &BasicForm) -> Result<BasicForm> {
        if u.degree == 0 {
            return Err(Error::DegreeOverflow { degree: 0, top: self.top() });
        }
        let mut out: BTreeMap<Slot, Complex64> = BTreeMap::new();
        for ((m, idx), c) in &u.coeffs {
            let xi = self.symbol(m);
            for (pos, &a) in idx.iter().enumerate() {
                let mut j = idx.clone();
                j.remove(pos);
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                *out.entry((m.clone(), j)).or_default() += xi[a].conj() * c * sign;
            }
        }
        Ok(self.rebuild(u.degree - 1, out))
    }

    pub fn apply_lie(&self, u: &BasicForm) -> BasicForm {
        let coeffs = u.coeffs.iter().map(|(k, c)| (k.clone(), c * Complex64::new(0.0, TAU * self.flow_frequency(&k.0)))).collect();
        self.rebuild(u.degree, coeffs)
    }

    /// `4π²(|π(m)|² + (m·v̂ - σ̂)²)`.
    pub fn p_eigenvalue(&self, m: &[i64]) -> f64 {
        let pm: f64 = self.symbol(m).iter().map(|x| x.norm_sqr()).sum();
        let mu = TAU * self.flow_frequency(m);
        pm + mu * mu
    }

    /// Closed-form `P = D*D + DD* - L²`, diagonal in modes.
    pub fn apply_p(&self, u: &BasicForm) -> BasicForm {
        let coeffs = u.coeffs.iter().map(|(k, c)| (k.clone(), c * self.p_eigenvalue(&k.0))).collect();
        self.rebuild(u.degree, coeffs)
    }

    /// `P` by composing `D`, `D*` and `L`, for cross-checks.
    pub fn apply_p_composed(&self, u: &BasicForm) -> Result<BasicForm> {
        let mut acc = self.zero(u.degree);
        if u.degree < self.top() {
            acc = acc.sub(&self.apply_d_adjoint(&self.apply_d(u)?)?.scale(Complex64::new(-1.0, 0.0)));
        }
        if u.degree > 0 {
            acc = acc.sub(&self.apply_d(&self.apply_d_adjoint(u)?)?.scale(Complex64::new(-1.0, 0.0)));
        }
        let ll = self.apply_lie(&self.apply_lie(u));
        Ok(acc.sub(&ll))
    }

    /// Orthonormal basis of `ker P ∩ ker L` within the truncation.
    pub fn harmonic_basis(&self, degree: usize) -> Result<Vec<BasicForm>> {
        if degree > self.top() {
            return Err(Error::DegreeOverflow { degree, top: self.top() });
        }
        let mut out = Vec::new();
        for m in self.harmonic_modes() {
            for idx in multi_indices(self.top(), degree) {
                out.push(self.form(degree, [((m.clone(), idx), Complex64::new(1.0, 0.0))])?);
            }
        }
        Ok(out)
    }

    /// Matrix of `D` on one mode from degree `q` to `q + 1` in the
    /// lexicographic multi-index bases.
    pub fn mode_d_matrix(&self, m: &[i64], degree: usize) -> DMatrix<Complex64> {
        let r = self.top();
        let src = multi_indices(r, degree);
        let dst = multi_indices(r, degree + 1);
        let xi = self.symbol(m);
        let mut mat = DMatrix::zeros(dst.len(), src.len());
        for (col, idx) in src.iter().enumerate() {
            for (a, xa) in xi.iter().enumerate() {
                if let Some((sign, j)) = insert_sign(idx, a) {
                    let row = dst.iter().position(|d| *d == j).unwrap();
                    mat[(row, col)] += xa * sign;
                }
            }
        }
        mat
    }

    /// Cohomology dimensions of the complex `(Λ^• H*, D)` restricted to one mode.
    pub fn mode_cohomology(&self, m: &[i64]) -> Vec<usize> {
        let r = self.top();
        let ranks: Vec<usize> = (0..r).map(|q| self.mode_d_matrix(m, q).rank(1e-9)).collect();
        (0..=r)
            .map(|q| {
                let incoming = if q > 0 { ranks[q - 1] } else { 0 };
                let outgoing = if q < r { ranks[q] } else { 0 };
                binomial(r, q) - incoming - outgoing
            })
            .collect()
    }

    /// Basic-mode eigenvalues of `P` on degree `q` with multiplicities, ascending.
    pub fn spectrum(&self, degree: usize) -> Vec<(f64, usize)> {
        let mult = binomial(self.top(), degree);
        let mut vals: Vec<f64> = self.basic_modes().iter().map(|m| self.p_eigenvalue(m)).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut out: Vec<(f64, usize)> = Vec::new();
        for x in vals {
            match out.last_mut() {
                Some((y, k)) if (x - *y).abs() <= 1e-9 * (1.0 + y.abs()) => *k += mult,
                _ => out.push((x, mult)),
            }
        }
        out
    }

    pub fn harmonic_dimensions(&self) -> Vec<usize> {
        let h = self.harmonic_modes().len();
        (0..=self.top()).map(|q| h * binomial(self.top(), q)).collect()
    }

    /// Smallest nonzero `|m|²` over nonzero untwisted basic modes, exact.
    pub fn min_basic_norm_sq(&self) -> Option<i64> {
        self.basic_modes().iter().map(|m| m.iter().map(|x| x * x).sum::<i64>()).filter(|&s| s > 0).min()
    }

    /// Point values of a section, one entry per multi-index of its degree.
    pub fn evaluate(&self, u: &BasicForm, x: &[f64]) -> Vec<Complex64> {
        let idxs = multi_indices(self.top(), u.degree());
        let mut out = vec![Complex64::zero(); idxs.len()];
        for ((m, idx), c) in u.coeffs() {
            let phase: f64 = m.iter().zip(x).map(|(&a, b)| a as f64 * b).sum();
            let slot = idxs.iter().position(|i| i == idx).expect("multi-index of the right degree");
            out[slot] += c * Complex64::from_polar(1.0, TAU * phase);
        }
        out
    }

    pub fn flow_dot(&self, m: &[i64]) -> Symbolic {
        &self.v.dot(m) - &self.sigma
    }
}

/// Test helper: a random form on basic (or arbitrary) modes within the cutoff.
pub fn random_form(space: &FormSpace, degree: usize, terms: usize, basic_only: bool, rng: &mut impl rand::Rng) -> Result<BasicForm> {
    let pool = if basic_only { space.basic_modes() } else { space.modes() };
    let idxs = multi_indices(space.top(), degree);
    let mut coeffs = Vec::new();
    if pool.is_empty() {
        return Ok(space.zero(degree));
    }
    for _ in 0..terms {
        let m = pool[rng.gen_range(0..pool.len())].clone();
        let idx = idxs[rng.gen_range(0..idxs.len())].clone();
        coeffs.push(((m, idx), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
    }
    space.form(degree, coeffs)
}
