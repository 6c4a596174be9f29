//! Model manifolds with isometric flows: flat tori with a linear flow and
//! odd spheres with a diagonal weighted rotation.

use num_complex::Complex64;
use num_traits::{Signed, Zero};

use crate::endomorphism::AffineMap;
use crate::error::{Error, Result};
use crate::exact::{fmt_rational, frac, q, to_f64, Q};
use crate::lattice::{self, IntMat};
use crate::symbolic::SymbolicFrequency;
use crate::torus_group::{closure_of, relation_lattice, ClosedSubgroup, IsotropyDescriptor, SubtorusGroup};

const TAU: f64 = std::f64::consts::TAU;

/// `T^n` with the flat metric and the flow `t ↦ x + t v`.
#[derive(Clone, Debug)]
pub struct FlatTorusModel {
    v: SymbolicFrequency,
    group: SubtorusGroup,
    section: IntMat,
}

impl FlatTorusModel {
    pub fn new(v: SymbolicFrequency) -> Result<Self> {
        if v.is_zero() {
            return Err(Error::Symbolic("the flow direction vanishes".into()));
        }
        let group = closure_of(&v)?;
        let section = lattice::right_inverse(group.relation_lattice(), v.ambient_dim())?;
        Ok(Self { v, group, section })
    }

    pub fn n(&self) -> usize {
        self.v.ambient_dim()
    }

    pub fn flow(&self) -> &SymbolicFrequency {
        &self.v
    }

    pub fn group(&self) -> &SubtorusGroup {
        &self.group
    }

    /// Rows map `T^n` onto the orbit space `B = T^r`.
    pub fn base_projection(&self) -> &IntMat {
        self.group.relation_lattice()
    }

    pub fn base_dim(&self) -> usize {
        self.base_projection().len()
    }

    pub fn project(&self, p: &[Q]) -> Vec<Q> {
        self.base_projection().iter().map(|row| frac(&row.iter().zip(p).map(|(&c, x)| q(c) * x).sum::<Q>())).collect()
    }

    /// Integer right inverse of the base projection.
    pub fn section(&self) -> &IntMat {
        &self.section
    }

    /// The canonical point of the orbit with base coordinates `b`.
    pub fn lift_base(&self, b: &[Q]) -> Vec<Q> {
        self.section.iter().map(|row| frac(&row.iter().zip(b).map(|(&c, x)| q(c) * x).sum::<Q>())).collect()
    }

    pub fn orbit_through(&self, p: &[Q]) -> Result<ClosedOrbit> {
        let n = self.n();
        if p.len() != n {
            return Err(Error::OffManifold(format!("expected {n} torus coordinates, got {}", p.len())));
        }
        let base_point = self.lift_base(&self.project(p));
        let trivial = ClosedSubgroup::trivial(n);
        let conormal = self.base_projection().clone();
        Ok(ClosedOrbit {
            base_point: OrbitPoint::Torus(base_point),
            dim: self.group.dim(),
            isotropy: trivial.descriptor()?,
            isotropy_group: trivial,
            conormal_basis: conormal.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect(),
            conormal_exact: Some(conormal),
        })
    }

    /// The map induced on `B` in base coordinates, `b ↦ Ā b + c̄`.
    pub fn induced_base_map(&self, f: &AffineMap) -> Result<(IntMat, Vec<Q>)> {
        let l = self.base_projection();
        let r = self.base_dim();
        let la = lattice::mat_mul(l, &f.matrix, self.n())?;
        let bar = lattice::mat_mul(&la, &self.section, r)?;
        Ok((bar, self.project(&f.translation)))
    }
}

/// A point of `S^{2k-1} ⊂ C^k` with `z_j = sqrt(modulus_sq_j) e^{2πi phase_j}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpherePoint {
    pub modulus_sq: Vec<Q>,
    pub phase: Vec<Q>,
}

impl SpherePoint {
    pub fn new(modulus_sq: Vec<Q>, phase: Vec<Q>) -> Self {
        let phase = phase.iter().map(frac).collect();
        Self { modulus_sq, phase }
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.modulus_sq.len()).filter(|&j| !self.modulus_sq[j].is_zero()).collect()
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.modulus_sq
            .iter()
            .zip(&self.phase)
            .map(|(m, p)| Complex64::from_polar(to_f64(m).sqrt(), TAU * to_f64(p)))
            .collect()
    }

    /// Real coordinates `(Re z_1, Im z_1, Re z_2, ...)`.
    pub fn to_real(&self) -> Vec<f64> {
        self.to_complex().iter().flat_map(|z| [z.re, z.im]).collect()
    }

    pub fn translate(&self, g: &[Q]) -> Self {
        let phase = self.phase.iter().zip(g).map(|(p, t)| p + t).collect();
        Self::new(self.modulus_sq.clone(), phase)
    }
}

/// `S^{2k-1}` with the round metric and the flow `z_j ↦ e^{i w_j t} z_j`.
#[derive(Clone, Debug)]
pub struct WeightedSphereModel {
    weights: SymbolicFrequency,
    group: SubtorusGroup,
}

impl WeightedSphereModel {
    pub fn new(weights: SymbolicFrequency) -> Result<Self> {
        if weights.is_zero() {
            return Err(Error::Symbolic("all weights vanish".into()));
        }
        let group = closure_of(&weights)?;
        Ok(Self { weights, group })
    }

    pub fn k(&self) -> usize {
        self.weights.ambient_dim()
    }

    pub fn weights(&self) -> &SymbolicFrequency {
        &self.weights
    }

    pub fn group(&self) -> &SubtorusGroup {
        &self.group
    }

    /// Isotropy of the points with the given support: elements of `G` whose
    /// phases vanish on the support.
    pub fn isotropy_for_support(&self, support: &[usize]) -> Result<ClosedSubgroup> {
        let k = self.k();
        let mut rows = self.group.relation_lattice().clone();
        for &j in support {
            let mut e = vec![0; k];
            e[j] = 1;
            rows.push(e);
        }
        ClosedSubgroup::new(k, &rows)
    }

    /// Relations of the restricted weight flow on the support coordinates.
    pub fn support_relations(&self, support: &[usize]) -> Result<IntMat> {
        relation_lattice(&self.weights.restrict(support))
    }

    pub fn orbit_through(&self, z: &SpherePoint) -> Result<ClosedOrbit> {
        let k = self.k();
        if z.modulus_sq.len() != k || z.phase.len() != k {
            return Err(Error::OffManifold(format!("expected {k} complex coordinates")));
        }
        if z.modulus_sq.iter().any(Signed::is_negative) {
            return Err(Error::OffManifold("negative squared modulus".into()));
        }
        let total: Q = z.modulus_sq.iter().sum();
        if total != q(1) {
            return Err(Error::OffManifold(format!("|z|^2 = {} instead of 1", fmt_rational(&total))));
        }
        let support = z.support();
        let rel = self.support_relations(&support)?;
        let section = lattice::right_inverse(&rel, support.len())?;
        let phases: Vec<Q> = support.iter().map(|&j| z.phase[j].clone()).collect();
        let coords: Vec<Q> = rel.iter().map(|row| row.iter().zip(&phases).map(|(&c, p)| q(c) * p).sum()).collect();
        let mut canonical = vec![Q::zero(); k];
        for (idx, &j) in support.iter().enumerate() {
            canonical[j] = frac(&section[idx].iter().zip(&coords).map(|(&c, x)| q(c) * x).sum::<Q>());
        }
        let base = SpherePoint::new(z.modulus_sq.clone(), canonical);
        let iso = self.isotropy_for_support(&support)?;
        let dim = self.group.dim() - iso.dim();
        let conormal = self.conormal_at(&base)?;
        if conormal.len() + dim + 1 != 2 * k {
            return Err(Error::Lattice("orbit tangent rank disagrees with the isotropy dimension".into()));
        }
        Ok(ClosedOrbit {
            base_point: OrbitPoint::Sphere(base),
            dim,
            isotropy: iso.descriptor()?,
            isotropy_group: iso,
            conormal_basis: conormal,
            conormal_exact: None,
        })
    }

    /// Velocity at `z` of the one-parameter subgroup with integer direction `d`.
    pub fn orbit_tangent(&self, z: &SpherePoint, d: &[i64]) -> Vec<f64> {
        z.to_complex()
            .iter()
            .zip(d)
            .flat_map(|(zj, &dj)| {
                let t = Complex64::new(0.0, TAU * dj as f64) * zj;
                [t.re, t.im]
            })
            .collect()
    }

    /// Orthonormal covectors (via the metric) on `T_z S` annihilating the orbit.
    pub fn conormal_at(&self, z: &SpherePoint) -> Result<Vec<Vec<f64>>> {
        let dim = 2 * self.k();
        let mut span: Vec<Vec<f64>> = Vec::new();
        absorb(&mut span, z.to_real());
        for d in self.group.basis()? {
            absorb(&mut span, self.orbit_tangent(z, &d));
        }
        let fixed = span.len();
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            absorb(&mut span, e);
        }
        Ok(span.split_off(fixed))
    }
}

fn absorb(span: &mut Vec<Vec<f64>>, mut x: Vec<f64>) {
    for _ in 0..2 {
        for s in span.iter() {
            let c: f64 = s.iter().zip(&x).map(|(a, b)| a * b).sum();
            x.iter_mut().zip(s).for_each(|(xi, si)| *xi -= c * si);
        }
    }
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 1e-9 {
        span.push(x.into_iter().map(|a| a / norm).collect());
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum OrbitPoint {
    Torus(Vec<Q>),
    Sphere(SpherePoint),
}

impl OrbitPoint {
    pub fn label(&self) -> String {
        let fmt = |v: &[Q]| v.iter().map(fmt_rational).collect::<Vec<_>>().join(", ");
        match self {
            OrbitPoint::Torus(x) => format!("({})", fmt(x)),
            OrbitPoint::Sphere(z) => format!("|z|^2=({}) arg=({})", fmt(&z.modulus_sq), fmt(&z.phase)),
        }
    }
}

/// Closure of a flow orbit, a single orbit of the closure group.
#[derive(Clone, Debug)]
pub struct ClosedOrbit {
    pub base_point: OrbitPoint,
    pub dim: usize,
    pub isotropy: IsotropyDescriptor,
    pub isotropy_group: ClosedSubgroup,
    /// Orthonormal (sphere) or integer (torus) covectors spanning the conormal space.
    pub conormal_basis: Vec<Vec<f64>>,
    pub conormal_exact: Option<IntMat>,
}

#[derive(Clone, Debug)]
pub enum Model {
    FlatTorus(FlatTorusModel),
    WeightedSphere(WeightedSphereModel),
}

impl Model {
    pub fn group(&self) -> &SubtorusGroup {
        match self {
            Model::FlatTorus(m) => m.group(),
            Model::WeightedSphere(m) => m.group(),
        }
    }

    pub fn flow(&self) -> &SymbolicFrequency {
        match self {
            Model::FlatTorus(m) => m.flow(),
            Model::WeightedSphere(m) => m.weights(),
        }
    }

    pub fn orbit_through(&self, p: &OrbitPoint) -> Result<ClosedOrbit> {
        match (self, p) {
            (Model::FlatTorus(m), OrbitPoint::Torus(x)) => m.orbit_through(x),
            (Model::WeightedSphere(m), OrbitPoint::Sphere(z)) => m.orbit_through(z),
            _ => Err(Error::OffManifold("point type does not match the model".into())),
        }
    }

    pub fn isotropy_group(&self, orbit: &ClosedOrbit) -> IsotropyDescriptor {
        orbit.isotropy.clone()
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::FlatTorus(_) => "flat_torus",
            Model::WeightedSphere(_) => "weighted_sphere",
        }
    }
}
