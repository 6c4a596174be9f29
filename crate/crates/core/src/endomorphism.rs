//! Equivariant maps, the geometric endomorphisms they induce on basic
//! forms, and the cohomological side of the Lefschetz number.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::basic_complex::{multi_indices, BasicForm, FormSpace};
use crate::error::{Error, Result};
use crate::exact::{fmt_rational, frac, q, to_f64, Cyclo, Q};
use crate::geometry::{Model, SpherePoint};
use crate::lattice::{self, IntMat};
use crate::symbolic::Symbolic;

const TAU: f64 = std::f64::consts::TAU;

/// `x ↦ A x + c` on `T^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub matrix: IntMat,
    pub translation: Vec<Q>,
}

impl AffineMap {
    pub fn new(matrix: IntMat, translation: Vec<Q>) -> Self {
        let translation = translation.iter().map(frac).collect();
        Self { matrix, translation }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(lattice::identity(n), vec![Q::zero(); n])
    }

    pub fn translation_by(g: &[Q]) -> Self {
        Self::new(lattice::identity(g.len()), g.to_vec())
    }

    pub fn n(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, p: &[Q]) -> Vec<Q> {
        self.matrix
            .iter()
            .zip(&self.translation)
            .map(|(row, c)| frac(&(row.iter().zip(p).map(|(&a, x)| q(a) * x).sum::<Q>() + c)))
            .collect()
    }

    pub fn apply_f64(&self, p: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.translation)
            .map(|(row, c)| row.iter().zip(p).map(|(&a, x)| a as f64 * x).sum::<f64>() + to_f64(c))
            .collect()
    }

    /// `𝔞_g ∘ f`.
    pub fn then_translate(&self, g: &[Q]) -> Self {
        let c = self.translation.iter().zip(g).map(|(a, b)| a + b).collect();
        Self::new(self.matrix.clone(), c)
    }

    pub fn transpose(&self) -> IntMat {
        lattice::transpose(&self.matrix, self.n())
    }
}

/// `z_j ↦ e^{2πi γ_j} z_j` on `S^{2k-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseMap {
    pub turns: Vec<Q>,
}

impl PhaseMap {
    pub fn new(turns: Vec<Q>) -> Self {
        Self { turns: turns.iter().map(frac).collect() }
    }

    pub fn apply(&self, z: &SpherePoint) -> SpherePoint {
        z.translate(&self.turns)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EquivariantMap {
    Affine(AffineMap),
    Phase(PhaseMap),
}

/// Fiber action of `φ`, `modulus · e^{2πi turns}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Phi {
    pub modulus: Q,
    pub turns: Q,
}

impl Phi {
    pub fn one() -> Self {
        Self { modulus: Q::one(), turns: Q::zero() }
    }

    pub fn exact(&self) -> Cyclo {
        Cyclo::root(self.modulus.clone(), self.turns.clone())
    }

    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(to_f64(&self.modulus), TAU * to_f64(&self.turns))
    }
}

/// Flat line bundle on which the flow acts by `e^{2πi σ t}`, with scalar `φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Twist {
    pub weight: Symbolic,
    pub phi: Phi,
}

impl Twist {
    pub fn trivial(generator_count: usize) -> Self {
        Self { weight: Symbolic::zero(generator_count), phi: Phi::one() }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EquivarianceCertificate {
    pub flow_preserved: String,
    /// `D Φ = Φ D` on basic sections.
    pub cochain_on_basic: bool,
    /// `D Φ = Φ D` on all sections, which needs `f*θ = θ`.
    pub cochain_on_all: bool,
}

fn render_vec(v: &[String]) -> String {
    format!("({})", v.join(", "))
}

pub fn validate_equivariance(model: &Model, f: &EquivariantMap, twist: Option<&Twist>) -> Result<EquivarianceCertificate> {
    match (model, f) {
        (Model::FlatTorus(m), EquivariantMap::Affine(a)) => {
            let n = m.n();
            if a.matrix.len() != n || a.matrix.iter().any(|r| r.len() != n) || a.translation.len() != n {
                return Err(Error::NotEquivariant(format!("map acts on dimension {} but the torus has dimension {n}", a.matrix.len())));
            }
            let v = m.flow();
            let av = v.apply(&a.matrix);
            if av != *v {
                let bad: Vec<String> = (0..n)
                    .filter(|&i| av.entry(i) != v.entry(i))
                    .map(|i| format!("(A v)_{} = {} but v_{} = {}", i + 1, av.render()[i], i + 1, v.render()[i]))
                    .collect();
                return Err(Error::NotEquivariant(format!("A v != v: {}", bad.join("; "))));
            }
            let atv = v.apply(&a.transpose());
            let cochain_on_all = atv == *v;
            if let Some(t) = twist {
                if !t.weight.is_zero() && !cochain_on_all {
                    return Err(Error::NotEquivariant(format!(
                        "twisted sections need A^T v = v for the pull-back to commute with D, but A^T v = {}",
                        render_vec(&atv.render())
                    )));
                }
            }
            Ok(EquivarianceCertificate {
                flow_preserved: format!("A v = v = {}", render_vec(&v.render())),
                cochain_on_basic: true,
                cochain_on_all,
            })
        }
        (Model::WeightedSphere(m), EquivariantMap::Phase(p)) => {
            if p.turns.len() != m.k() {
                return Err(Error::NotEquivariant(format!("phase map has {} entries but the sphere lives in C^{}", p.turns.len(), m.k())));
            }
            Ok(EquivarianceCertificate {
                flow_preserved: "diagonal phases commute with the weighted rotation".into(),
                cochain_on_basic: true,
                cochain_on_all: true,
            })
        }
        _ => Err(Error::Unsupported(format!("map type does not match the {} model", model.kind()))),
    }
}

fn minor(f: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> f64 {
    if rows.is_empty() {
        return 1.0;
    }
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| f[rows[i]][cols[j]]).determinant()
}

/// `Φ = φ ∘ f*` on one form space.
#[derive(Clone, Debug)]
pub struct Endomorphism {
    space: FormSpace,
    map: AffineMap,
    transpose: IntMat,
    phi: Phi,
    frame_matrix: Vec<Vec<f64>>,
}

/// Induced action on harmonic forms and the resulting Lefschetz number.
#[derive(Clone, Debug)]
pub struct CohomologyAction {
    pub matrices: Vec<DMatrix<Complex64>>,
    pub traces: Vec<Cyclo>,
    pub lefschetz: Cyclo,
}

impl Endomorphism {
    pub fn new(space: FormSpace, map: AffineMap, phi: Phi) -> Self {
        let transpose = map.transpose();
        let at: Vec<Vec<f64>> = transpose.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
        let frame_matrix = space.frame().compress(&at);
        Self { space, map, transpose, phi, frame_matrix }
    }

    pub fn space(&self) -> &FormSpace {
        &self.space
    }

    pub fn map(&self) -> &AffineMap {
        &self.map
    }

    /// Matrix of `Aᵀ` on `H*` in the orthonormal frame.
    pub fn frame_matrix(&self) -> &[Vec<f64>] {
        &self.frame_matrix
    }

    pub fn mode_image(&self, m: &[i64]) -> Vec<i64> {
        lattice::mat_vec(&self.transpose, m)
    }

    fn mode_phase(&self, m: &[i64]) -> Complex64 {
        let t: Q = m.iter().zip(&self.map.translation).map(|(&a, c)| q(a) * c).sum();
        Complex64::from_polar(1.0, TAU * to_f64(&frac(&t))) * self.phi.value()
    }

    /// Pull-back on arbitrary sections; no basic check.
    pub fn pullback_any(&self, u: &BasicForm) -> Result<BasicForm> {
        let r = self.space.top();
        let targets = multi_indices(r, u.degree());
        let mut out: BTreeMap<(Vec<i64>, Vec<usize>), Complex64> = BTreeMap::new();
        for ((m, idx), c) in u.coeffs() {
            let image = self.mode_image(m);
            let factor = c * self.mode_phase(m);
            for j in &targets {
                let w = minor(&self.frame_matrix, j, idx);
                if w != 0.0 {
                    *out.entry((image.clone(), j.clone())).or_default() += factor * w;
                }
            }
        }
        self.space.form(u.degree(), out)
    }

    pub fn pullback_on_forms(&self, u: &BasicForm) -> Result<BasicForm> {
        if !u.is_basic() {
            return Err(Error::NotBasic("pull-back is defined on sections with m·v = σ".into()));
        }
        let out = self.pullback_any(u)?;
        debug_assert!(out.is_basic());
        Ok(out)
    }

    /// Exact `tr Λ^q(Aᵀ|H*)` from principal minors of `A`, using that `Aᵀ`
    /// acts trivially on `R^n / H*`.
    pub fn exterior_traces(&self) -> Result<Vec<i64>> {
        let ea = lattice::principal_minor_sums(&self.map.matrix)?;
        let r = self.space.top();
        let mut eh = vec![0i64; r + 1];
        for k in 0..=r {
            eh[k] = ea[k] - if k > 0 { eh[k - 1] } else { 0 };
        }
        Ok(eh)
    }

    /// Harmonic modes fixed by `Aᵀ` with their exact phase `φ e^{2πi m·c}`.
    fn fixed_harmonic_phases(&self) -> Vec<(Vec<i64>, Cyclo)> {
        self.space
            .harmonic_modes()
            .into_iter()
            .filter(|m| self.mode_image(m) == *m)
            .map(|m| {
                let t: Q = m.iter().zip(&self.map.translation).map(|(&a, c)| q(a) * c).sum();
                let ph = &Cyclo::root(Q::one(), t) * &self.phi.exact();
                (m, ph)
            })
            .collect()
    }

    pub fn cohomology_action(&self) -> Result<CohomologyAction> {
        let eh = self.exterior_traces()?;
        let phases: Cyclo = self.fixed_harmonic_phases().into_iter().map(|(_, p)| p).sum();
        let mut matrices = Vec::new();
        let mut traces = Vec::new();
        let mut lefschetz = Cyclo::zero();
        for (deg, &e) in eh.iter().enumerate() {
            let basis = self.space.harmonic_basis(deg)?;
            let mut mat = DMatrix::zeros(basis.len(), basis.len());
            for (i, b) in basis.iter().enumerate() {
                let image = self.pullback_on_forms(b)?;
                for (j, c) in basis.iter().enumerate() {
                    mat[(j, i)] = image.inner(c);
                }
            }
            matrices.push(mat);
            let tr = phases.scale(&q(e));
            lefschetz = if deg % 2 == 0 { lefschetz + tr.clone() } else { lefschetz - tr.clone() };
            traces.push(tr);
        }
        Ok(CohomologyAction { matrices, traces, lefschetz })
    }

    /// `Σ_λ tr(Π_λ Φ^q Π_λ) e^{-sλ}` over basic modes within the cutoff.
    pub fn heat_damped_traces(&self, s: f64) -> Result<Vec<Complex64>> {
        if s <= 0.0 {
            return Err(Error::Unsupported("heat time must be positive".into()));
        }
        let r = self.space.top();
        let lambda: Vec<Complex64> = (0..=r)
            .map(|deg| multi_indices(r, deg).iter().map(|i| Complex64::new(minor(&self.frame_matrix, i, i), 0.0)).sum())
            .collect();
        let mut out = vec![Complex64::zero(); r + 1];
        for m in self.space.basic_modes() {
            if self.mode_image(&m) != m {
                continue;
            }
            let damp = (-s * self.space.p_eigenvalue(&m)).exp();
            let ph = self.mode_phase(&m) * damp;
            for deg in 0..=r {
                out[deg] += ph * lambda[deg];
            }
        }
        Ok(out)
    }

    pub fn heat_alternating(&self, s: f64) -> Result<Complex64> {
        Ok(self
            .heat_damped_traces(s)?
            .iter()
            .enumerate()
            .map(|(deg, t)| if deg % 2 == 0 { *t } else { -*t })
            .sum())
    }
}

pub fn render_rational_vec(v: &[Q]) -> String {
    format!("({})", v.iter().map(fmt_rational).collect::<Vec<_>>().join(", "))
}
