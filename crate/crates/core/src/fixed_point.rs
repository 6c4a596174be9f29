//! Fixed orbits of the induced map on the orbit space, the determinant
//! transversality test, and the per-orbit contributions to the Lefschetz number.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::endomorphism::{AffineMap, EquivariantMap, PhaseMap, Twist};
use crate::error::{Error, Result};
use crate::exact::{fmt_rational, frac, q, to_f64, Cyclo, Q};
use crate::geometry::{ClosedOrbit, FlatTorusModel, Model, OrbitPoint, SpherePoint, WeightedSphereModel};
use crate::lattice::{self, IntMat};
use crate::symbolic::SymbolicFrequency;
use crate::torus_group::{closure_group, haar_quadrature, transverse_complement, transverse_splitting, ClosedSubgroup, SubtorusGroup};

const TAU: f64 = std::f64::consts::TAU;
const SOLUTION_LIMIT: usize = 1 << 20;

/// Alternative valid choices that must not change any contribution.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RhsOptions {
    /// Shift of the lifted `ĝ0` by the `i`-th component representative of `𝒥` (mod count).
    pub g0_shift: usize,
    /// `0` for the canonical complement, `t > 0` for `t c_1 + j_1`.
    pub complement_twist: i64,
    /// Evaluate the isotropy integral by Haar quadrature at this resolution.
    pub quadrature: Option<usize>,
    /// Only the degree-0 scalar term.
    pub scalar_only: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ComponentDeterminant {
    pub representative: Vec<String>,
    pub det: f64,
    pub det_exact: Option<i64>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TransversalityCertificate {
    pub g0: Vec<String>,
    pub conormal_dim: usize,
    pub components: Vec<ComponentDeterminant>,
}

#[derive(Clone, Debug)]
pub struct DegreeTerm {
    pub degree: usize,
    pub trace_value: Complex64,
    pub det_value: f64,
    pub haar_factor: Q,
    pub sheets: u64,
    pub isotropy_integral: Complex64,
    pub integral_exact: Option<Cyclo>,
    pub lifted_dim: usize,
    pub jay_components: u64,
}

impl DegreeTerm {
    pub fn weight(&self) -> Q {
        &self.haar_factor / q(self.sheets as i64)
    }
}

#[derive(Clone, Debug)]
pub struct OrbitContribution {
    pub orbit: ClosedOrbit,
    pub g0: Vec<Q>,
    pub certificate: TransversalityCertificate,
    pub per_degree: Vec<DegreeTerm>,
    pub total: Complex64,
    pub total_exact: Option<Cyclo>,
}

#[derive(Clone, Debug)]
pub struct RhsResult {
    pub orbits: Vec<OrbitContribution>,
    pub value: Complex64,
    pub exact: Option<Cyclo>,
}

fn qs(v: &[Q]) -> Vec<String> {
    v.iter().map(fmt_rational).collect()
}

fn torus_parts<'a>(model: &'a Model, f: &'a EquivariantMap) -> Result<(&'a FlatTorusModel, &'a AffineMap)> {
    match (model, f) {
        (Model::FlatTorus(m), EquivariantMap::Affine(a)) => Ok((m, a)),
        _ => Err(Error::Unsupported("expected an affine map on a flat torus".into())),
    }
}

fn sphere_parts<'a>(model: &'a Model, f: &'a EquivariantMap) -> Result<(&'a WeightedSphereModel, &'a PhaseMap)> {
    match (model, f) {
        (Model::WeightedSphere(m), EquivariantMap::Phase(p)) => Ok((m, p)),
        _ => Err(Error::Unsupported("expected a phase map on a weighted sphere".into())),
    }
}

pub fn find_fixed_orbits(model: &Model, f: &EquivariantMap) -> Result<Vec<ClosedOrbit>> {
    match model {
        Model::FlatTorus(m) => {
            let (_, a) = torus_parts(model, f)?;
            let (bar, c) = m.induced_base_map(a)?;
            let r = m.base_dim();
            if r == 0 {
                return Ok(vec![m.orbit_through(&vec![Q::zero(); m.n()])?]);
            }
            let shifted: IntMat = (0..r).map(|i| (0..r).map(|j| bar[i][j] - i64::from(i == j)).collect()).collect();
            let rhs: Vec<Q> = c.iter().map(|x| -x).collect();
            let Some(sol) = lattice::solve_congruence(&shifted, r, r, &rhs, SOLUTION_LIMIT)? else {
                return Ok(Vec::new());
            };
            if !sol.is_discrete() {
                return Err(Error::InfiniteFixedSet(format!(
                    "det(Ā - I) = 0 and the induced map fixes a {}-dimensional family of orbits",
                    sol.free_directions.len()
                )));
            }
            sol.solutions.iter().map(|b| m.orbit_through(&m.lift_base(b))).collect()
        }
        Model::WeightedSphere(m) => {
            let (_, p) = sphere_parts(model, f)?;
            let k = m.k();
            let mut out = Vec::new();
            for mask in 1u32..(1 << k) {
                let support: Vec<usize> = (0..k).filter(|j| mask & (1 << j) != 0).collect();
                let rel = m.support_relations(&support)?;
                let gamma: Vec<Q> = support.iter().map(|&j| p.turns[j].clone()).collect();
                let fixed = rel.iter().all(|row| row.iter().zip(&gamma).map(|(&c, g)| q(c) * g).sum::<Q>().is_integer());
                if !fixed {
                    continue;
                }
                let stratum_dim = support.len() - 1 + rel.len();
                if stratum_dim > 0 {
                    return Err(Error::InfiniteFixedSet(format!(
                        "every orbit with support {:?} is fixed ({stratum_dim}-dimensional family)",
                        support.iter().map(|j| j + 1).collect::<Vec<_>>()
                    )));
                }
                let mut modulus = vec![Q::zero(); k];
                modulus[support[0]] = Q::one();
                out.push(m.orbit_through(&SpherePoint::new(modulus, vec![Q::zero(); k]))?);
            }
            Ok(out)
        }
    }
}

/// `g0 ∈ G` with `𝔞_{g0} ∘ f` fixing the sphere orbit pointwise.
fn sphere_g0(m: &WeightedSphereModel, p: &PhaseMap, z: &SpherePoint) -> Result<Vec<Q>> {
    let support = z.support();
    let basis = m.group().basis()?;
    let d = basis.len();
    let mat: IntMat = support.iter().map(|&j| basis.iter().map(|row| row[j]).collect()).collect();
    let rhs: Vec<Q> = support.iter().map(|&j| -p.turns[j].clone()).collect();
    let sol = lattice::solve_congruence(&mat, support.len(), d, &rhs, SOLUTION_LIMIT)?
        .ok_or_else(|| Error::Lattice("the orbit is not fixed by the map".into()))?;
    Ok(m.group().point(&basis, &sol.solutions[0]))
}

/// Normal Jacobian `det[(𝔞_h ∘ f)* - I]` on the conormal space of a sphere orbit,
/// where `h` is the total phase rotation applied by `𝔞_h ∘ f`.
fn sphere_normal_det(conormal: &[Vec<f64>], total_turns: &[Q]) -> f64 {
    let c = conormal.len();
    let rotate = |x: &[f64]| -> Vec<f64> {
        // Uᵀ on covectors: the inverse rotation on each complex coordinate
        let mut out = vec![0.0; x.len()];
        for (j, t) in total_turns.iter().enumerate() {
            let (s, co) = (TAU * to_f64(t)).sin_cos();
            let (re, im) = (x[2 * j], x[2 * j + 1]);
            out[2 * j] = co * re + s * im;
            out[2 * j + 1] = -s * re + co * im;
        }
        out
    };
    let images: Vec<Vec<f64>> = conormal.iter().map(|n| rotate(n)).collect();
    let mat = DMatrix::from_fn(c, c, |a, b| {
        conormal[a].iter().zip(&images[b]).map(|(x, y)| x * y).sum::<f64>() - if a == b { 1.0 } else { 0.0 }
    });
    if c == 0 {
        1.0
    } else {
        mat.determinant()
    }
}

/// The `2k-2` normal directions of the coordinate circle through `e_j`
/// contribute `Π_{i≠j} (2 - 2cos 2πθ_i)`.
pub fn circle_normal_det(j: usize, total_turns: &[Q]) -> f64 {
    total_turns
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != j)
        .map(|(_, t)| 2.0 - 2.0 * (TAU * to_f64(t)).cos())
        .product()
}

pub fn check_transversality(model: &Model, orbit: &ClosedOrbit, f: &EquivariantMap) -> Result<TransversalityCertificate> {
    let label = orbit.base_point.label();
    match (model, &orbit.base_point) {
        (Model::FlatTorus(m), OrbitPoint::Torus(p0)) => {
            let (_, a) = torus_parts(model, f)?;
            let fp = a.apply(p0);
            let g0: Vec<Q> = p0.iter().zip(&fp).map(|(x, y)| frac(&(x - y))).collect();
            if !m.group().contains(&g0) {
                return Err(Error::Lattice(format!("orbit {label} is not fixed by the map")));
            }
            let (bar, _) = m.induced_base_map(a)?;
            let r = bar.len();
            let shifted: IntMat = (0..r).map(|i| (0..r).map(|j| bar[i][j] - i64::from(i == j)).collect()).collect();
            let det = if r == 0 { 1 } else { lattice::det(&shifted)? };
            if det == 0 {
                return Err(Error::NonTransverse { orbit: label, detail: "det[(𝔞_g0 ∘ f)* - I] = 0 on the conormal space".into() });
            }
            Ok(TransversalityCertificate {
                g0: qs(&g0),
                conormal_dim: r,
                components: vec![ComponentDeterminant { representative: qs(&vec![Q::zero(); m.n()]), det: det as f64, det_exact: Some(det) }],
            })
        }
        (Model::WeightedSphere(m), OrbitPoint::Sphere(z)) => {
            let (_, p) = sphere_parts(model, f)?;
            let g0 = sphere_g0(m, p, z)?;
            let support = z.support();
            for dir in orbit.isotropy.identity_component.basis()? {
                if (0..m.k()).any(|i| !support.contains(&i) && dir[i] != 0) {
                    return Err(Error::NonTransverse {
                        orbit: label,
                        detail: "the identity component of the isotropy rotates a normal direction".into(),
                    });
                }
            }
            let mut components = Vec::new();
            for h in &orbit.isotropy.component_reps {
                let turns: Vec<Q> = (0..m.k()).map(|i| &g0[i] + &h[i] + &p.turns[i]).collect();
                let det = sphere_normal_det(&orbit.conormal_basis, &turns);
                if det.abs() < 1e-9 {
                    return Err(Error::NonTransverse {
                        orbit: label,
                        detail: format!("det[(𝔞_h𝔞_g0 ∘ f)* - I] = 0 for isotropy component ({})", qs(h).join(", ")),
                    });
                }
                components.push(ComponentDeterminant { representative: qs(h), det, det_exact: None });
            }
            Ok(TransversalityCertificate { g0: qs(&g0), conormal_dim: orbit.conormal_basis.len(), components })
        }
        _ => Err(Error::Unsupported("orbit does not belong to this model".into())),
    }
}

/// Lifted group, `℘` and the lift of `g0` for one bundle weight.
struct LiftData {
    lifted: SubtorusGroup,
    jay: ClosedSubgroup,
    lifted_g0: Vec<Q>,
    n: usize,
}

fn lift_data(flow: &SymbolicFrequency, twist: &Twist, isotropy: &ClosedSubgroup, g0: &[Q], shift: usize) -> Result<LiftData> {
    let n = flow.ambient_dim();
    let weight = if twist.weight.is_zero() {
        None
    } else {
        Some(SymbolicFrequency::new(vec![twist.weight.clone()], flow.generators().clone())?)
    };
    let (lifted, hom) = closure_group(flow, weight.as_ref())?;
    let jay = isotropy.preimage_in(&lifted)?;
    let mut lifted_g0 = hom.lift(g0)?;
    if shift > 0 {
        let reps = jay.component_reps()?;
        let rep = &reps[shift % reps.len()];
        lifted_g0 = lifted_g0.iter().zip(rep).map(|(a, b)| frac(&(a + b))).collect();
    }
    Ok(LiftData { lifted, jay, lifted_g0, n })
}

impl LiftData {
    fn twist_turns(&self, h: &[Q]) -> Q {
        if h.len() > self.n {
            &h[self.n] - &self.lifted_g0[self.n]
        } else {
            Q::zero()
        }
    }

    /// Whether the fiber character is trivial on the identity component of `𝒥`.
    fn character_trivial_on_identity(&self) -> Result<bool> {
        Ok(self.jay.identity_component()?.basis()?.iter().all(|row| row.len() <= self.n || row[self.n] == 0))
    }

    fn projected_is_constant(&self) -> Result<bool> {
        Ok(self.jay.identity_component()?.basis()?.iter().all(|row| row[..self.n].iter().all(|&x| x == 0)))
    }
}

/// Degree-`q` term given the fiber trace `trace(h)` and `|det|` as functions
/// of the isotropy element `℘(ĥ)`.
fn degree_term(
    degree: usize,
    lift: &LiftData,
    twist: &Twist,
    opts: &RhsOptions,
    trace: i64,
    abs_det: &(dyn Fn(&[Q]) -> f64 + Sync),
    exact_det: Option<i64>,
    identity_det: f64,
) -> Result<DegreeTerm> {
    let complement = transverse_complement(&lift.lifted, &lift.jay, opts.complement_twist)?;
    let split = transverse_splitting(&lift.lifted, &lift.jay, &complement)?;
    let reps = lift.jay.component_reps()?;
    let c_j = reps.len() as i64;
    let lambda = twist.phi.value();
    let n = lift.n;
    let integrand = |h: &[Q]| -> Complex64 {
        let ph = Complex64::from_polar(1.0, TAU * to_f64(&frac(&lift.twist_turns(h))));
        let g: Vec<Q> = (0..n).map(|i| frac(&(&lift.lifted_g0[i] + &h[i]))).collect();
        lambda * ph * trace as f64 / abs_det(&g)
    };
    let exact_path = opts.quadrature.is_none() && lift.projected_is_constant()?;
    let (integral, integral_exact) = if exact_path {
        if !lift.character_trivial_on_identity()? {
            (Complex64::zero(), Some(Cyclo::zero()))
        } else {
            let value: Complex64 = reps.iter().map(|h| integrand(h)).sum::<Complex64>() / c_j as f64;
            let exact = exact_det.map(|d| {
                reps.iter()
                    .map(|h| {
                        let ph = Cyclo::root(Q::one(), lift.twist_turns(h));
                        (&ph * &twist.phi.exact()).scale(&(q(trace) / q(d.abs() * c_j)))
                    })
                    .sum()
            });
            (value, exact)
        }
    } else {
        let resolution = opts.quadrature.unwrap_or(64);
        let j0 = lift.jay.identity_component()?;
        let grid = haar_quadrature(&j0, resolution)?;
        let total: Complex64 = reps
            .par_iter()
            .map(|rep| {
                grid.iter()
                    .map(|(x, w)| {
                        let h: Vec<Q> = rep.iter().zip(x).map(|(a, b)| frac(&(a + b))).collect();
                        integrand(&h) * to_f64(w)
                    })
                    .sum::<Complex64>()
            })
            .sum();
        (total / c_j as f64, None)
    };
    Ok(DegreeTerm {
        degree,
        trace_value: lambda * trace as f64,
        det_value: identity_det,
        haar_factor: split.haar_factor,
        sheets: split.sheets,
        isotropy_integral: integral,
        integral_exact,
        lifted_dim: lift.lifted.dim(),
        jay_components: split.jay_components,
    })
}

fn assemble(orbit: &ClosedOrbit, g0: Vec<Q>, certificate: TransversalityCertificate, per_degree: Vec<DegreeTerm>) -> OrbitContribution {
    let mut total = Complex64::zero();
    let mut exact = Some(Cyclo::zero());
    for t in &per_degree {
        let sign = if t.degree % 2 == 0 { 1.0 } else { -1.0 };
        let w = t.weight();
        total += t.isotropy_integral * sign * to_f64(&w);
        exact = match (exact, &t.integral_exact) {
            (Some(acc), Some(e)) => {
                let term = e.scale(&w);
                Some(if t.degree % 2 == 0 { acc + term } else { acc - term })
            }
            _ => None,
        };
    }
    OrbitContribution { orbit: orbit.clone(), g0, certificate, per_degree, total, total_exact: exact }
}

/// Theorem-B contribution of one fixed orbit. Torus bundles are `Λ^q H*`
/// tensored with at most one twist; sphere bundles are one twist per degree.
pub fn orbit_contribution(model: &Model, orbit: &ClosedOrbit, f: &EquivariantMap, bundles: &[Twist], opts: &RhsOptions) -> Result<OrbitContribution> {
    let certificate = check_transversality(model, orbit, f)?;
    match (model, &orbit.base_point) {
        (Model::FlatTorus(m), OrbitPoint::Torus(p0)) => {
            let (_, a) = torus_parts(model, f)?;
            if bundles.len() > 1 {
                return Err(Error::Unsupported("torus scenarios take a single twist".into()));
            }
            let twist = bundles.first().cloned().unwrap_or_else(|| Twist::trivial(m.flow().generator_count()));
            let g0: Vec<Q> = p0.iter().zip(a.apply(p0)).map(|(x, y)| frac(&(x - y))).collect();
            let lift = lift_data(m.flow(), &twist, &orbit.isotropy_group, &g0, opts.g0_shift)?;
            let det = certificate.components[0].det_exact.expect("torus determinants are exact");
            let ea = lattice::principal_minor_sums(&a.matrix)?;
            let top = m.n() - 1;
            let mut eh = vec![0i64; top + 1];
            for k in 0..=top {
                eh[k] = ea[k] - if k > 0 { eh[k - 1] } else { 0 };
            }
            let degrees = if opts.scalar_only { 0..=0 } else { 0..=top };
            let abs_det = |_: &[Q]| det.abs() as f64;
            let per_degree = degrees
                .map(|deg| degree_term(deg, &lift, &twist, opts, eh[deg], &abs_det, Some(det), det as f64))
                .collect::<Result<Vec<_>>>()?;
            Ok(assemble(orbit, g0, certificate, per_degree))
        }
        (Model::WeightedSphere(m), OrbitPoint::Sphere(z)) => {
            let (_, p) = sphere_parts(model, f)?;
            let g0 = sphere_g0(m, p, z)?;
            let default = [Twist::trivial(m.weights().generator_count())];
            let bundles = if bundles.is_empty() { &default[..] } else { bundles };
            let conormal = orbit.conormal_basis.clone();
            let abs_det = |g: &[Q]| {
                let turns: Vec<Q> = (0..m.k()).map(|i| &g[i] + &p.turns[i]).collect();
                sphere_normal_det(&conormal, &turns).abs()
            };
            let identity_det = certificate.components[0].det;
            let count = if opts.scalar_only { 1 } else { bundles.len() };
            let per_degree = bundles[..count]
                .iter()
                .enumerate()
                .map(|(deg, twist)| {
                    let lift = lift_data(m.weights(), twist, &orbit.isotropy_group, &g0, opts.g0_shift)?;
                    degree_term(deg, &lift, twist, opts, 1, &abs_det, None, identity_det)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(assemble(orbit, g0, certificate, per_degree))
        }
        _ => Err(Error::Unsupported("orbit does not belong to this model".into())),
    }
}

pub fn lefschetz_rhs(model: &Model, f: &EquivariantMap, bundles: &[Twist], opts: &RhsOptions) -> Result<RhsResult> {
    let orbits = find_fixed_orbits(model, f)?;
    let contributions = orbits.iter().map(|o| orbit_contribution(model, o, f, bundles, opts)).collect::<Result<Vec<_>>>()?;
    let value = contributions.iter().map(|c| c.total).sum();
    let exact = contributions.iter().try_fold(Cyclo::zero(), |acc, c| c.total_exact.clone().map(|e| acc + e));
    Ok(RhsResult { orbits: contributions, value, exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endomorphism::Phi;
    use crate::exact::q_frac;
    use crate::symbolic::{Generator, Generators, Symbolic};

    fn gens() -> Generators {
        Generators::new(vec![
            Generator { name: "alpha".into(), approx: std::f64::consts::SQRT_2 },
            Generator { name: "tau".into(), approx: std::f64::consts::PI },
        ])
    }

    fn torus(exprs: &[&str]) -> Model {
        Model::FlatTorus(FlatTorusModel::new(SymbolicFrequency::parse(exprs, &gens()).unwrap()).unwrap())
    }

    fn affine(m: IntMat, c: Vec<Q>) -> EquivariantMap {
        EquivariantMap::Affine(AffineMap::new(m, c))
    }

    fn cat() -> IntMat {
        vec![vec![2, 1, 0], vec![1, 1, 0], vec![0, 0, 1]]
    }

    fn doubling() -> IntMat {
        vec![vec![2, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]
    }

    #[test]
    fn classical_scenario() {
        let m = torus(&["0", "0", "1"]);
        let f = affine(cat(), vec![q(0); 3]);
        let orbits = find_fixed_orbits(&m, &f).unwrap();
        assert_eq!(orbits.len(), 1);
        assert_eq!(orbits[0].base_point, OrbitPoint::Torus(vec![q(0); 3]));
        let rhs = lefschetz_rhs(&m, &f, &[], &RhsOptions::default()).unwrap();
        assert_eq!(rhs.exact.unwrap().as_rational(), Some(q(-1)));
        let c = &rhs.orbits[0];
        assert!(c.per_degree.iter().all(|t| t.sheets == 1 && t.haar_factor == q(1)));
    }

    #[test]
    fn doubling_and_identity() {
        let m = torus(&["0", "1", "alpha"]);
        let f = affine(doubling(), vec![q(0); 3]);
        let orbits = find_fixed_orbits(&m, &f).unwrap();
        assert_eq!(orbits.len(), 1);
        let cert = check_transversality(&m, &orbits[0], &f).unwrap();
        assert_eq!(cert.components[0].det_exact, Some(1));
        assert!(lefschetz_rhs(&m, &f, &[], &RhsOptions::default()).unwrap().exact.unwrap().is_zero());

        let m = torus(&["1", "alpha"]);
        let f = affine(lattice::identity(2), vec![q(0); 2]);
        let rhs = lefschetz_rhs(&m, &f, &[], &RhsOptions::default()).unwrap();
        assert_eq!(rhs.orbits.len(), 1);
        assert_eq!(rhs.orbits[0].certificate.conormal_dim, 0);
        assert!(rhs.exact.unwrap().is_zero());
        // translations on a fully irrational torus: the base is a point
        let t = affine(lattice::identity(2), vec![q_frac(1, 3), q_frac(1, 5)]);
        assert_eq!(find_fixed_orbits(&m, &t).unwrap().len(), 1);
    }

    #[test]
    fn fixed_orbit_count_matches_determinant() {
        let m = torus(&["0", "0", "1"]);
        for a in [vec![vec![2, 1], vec![1, 1]], vec![vec![3, 1], vec![1, 2]], vec![vec![0, 1], vec![-1, 3]], vec![vec![-2, 0], vec![0, 3]]] {
            let mut full = vec![vec![0; 3]; 3];
            for i in 0..2 {
                for j in 0..2 {
                    full[i][j] = a[i][j];
                }
            }
            full[2][2] = 1;
            let f = affine(full, vec![q_frac(1, 3), q(0), q(0)]);
            let det = (a[0][0] - 1) * (a[1][1] - 1) - a[0][1] * a[1][0];
            let orbits = find_fixed_orbits(&m, &f).unwrap();
            assert_eq!(orbits.len() as i64, det.abs());
            // fixed points have denominators dividing 3|det|
            let n = 3 * det.abs();
            let mut brute = 0;
            for x in 0..n {
                for y in 0..n {
                    let fx = (a[0][0] * x + a[0][1] * y + n / 3 - x).rem_euclid(n);
                    let fy = (a[1][0] * x + a[1][1] * y - y).rem_euclid(n);
                    if fx == 0 && fy == 0 {
                        brute += 1;
                    }
                }
            }
            assert_eq!(brute, det.abs());
        }
    }

    #[test]
    fn translations_with_a_base_are_gated() {
        let m = torus(&["0", "0", "1"]);
        let f = affine(lattice::identity(3), vec![q(0), q(0), q_frac(1, 3)]);
        assert!(matches!(find_fixed_orbits(&m, &f), Err(Error::InfiniteFixedSet(_))));
        let shift = affine(lattice::identity(3), vec![q_frac(1, 4), q(0), q(0)]);
        assert!(find_fixed_orbits(&m, &shift).unwrap().is_empty());
    }

    #[test]
    fn twisted_classical_scenario() {
        let m = torus(&["0", "0", "1"]);
        let f = affine(cat(), vec![q(0), q(0), q_frac(1, 3)]);
        let phi = Phi { modulus: q(3), turns: q_frac(1, 5) };
        let twist = Twist { weight: Symbolic::rational(q(1), 2), phi: phi.clone() };
        let rhs = lefschetz_rhs(&m, &f, &[twist], &RhsOptions::default()).unwrap();
        let expect = -(&phi.exact() * &Cyclo::root(q(1), q_frac(1, 3)));
        assert_eq!(rhs.exact.unwrap(), expect);

        let half = Twist { weight: Symbolic::rational(q_frac(1, 2), 2), phi };
        let rhs = lefschetz_rhs(&m, &f, &[half], &RhsOptions::default()).unwrap();
        assert!(rhs.exact.unwrap().is_zero());
        assert!(rhs.orbits[0].per_degree.iter().all(|t| t.jay_components == 2 && t.weight() == q(1)));
    }

    fn sphere(weights: &[&str]) -> Model {
        Model::WeightedSphere(WeightedSphereModel::new(SymbolicFrequency::parse(weights, &gens()).unwrap()).unwrap())
    }

    #[test]
    fn s5_phase_map_is_not_transverse() {
        let m = sphere(&["tau", "1", "2"]);
        let f = EquivariantMap::Phase(PhaseMap::new(vec![q(0), q(0), q_frac(1, 5)]));
        assert!(matches!(find_fixed_orbits(&m, &f), Err(Error::InfiniteFixedSet(_))));
        let Model::WeightedSphere(s) = &m else { unreachable!() };
        let z = SpherePoint::new(vec![q_frac(1, 2), q_frac(1, 2), q(0)], vec![q(0), q_frac(1, 3), q(0)]);
        let orbit = s.orbit_through(&z).unwrap();
        assert_eq!(orbit.conormal_basis.len(), 3);
        match check_transversality(&m, &orbit, &f) {
            Err(Error::NonTransverse { detail, .. }) => assert!(detail.contains("= 0")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sphere_circle_orbits() {
        let m = sphere(&["1", "2"]);
        let gamma = vec![q_frac(1, 5), q_frac(1, 3)];
        let f = EquivariantMap::Phase(PhaseMap::new(gamma.clone()));
        let orbits = find_fixed_orbits(&m, &f).unwrap();
        assert_eq!(orbits.len(), 2);
        let counts: Vec<usize> = orbits.iter().map(|o| o.isotropy.component_count()).collect();
        assert_eq!(counts, vec![1, 2]);
        for o in &orbits {
            let cert = check_transversality(&m, o, &f).unwrap();
            let OrbitPoint::Sphere(z) = &o.base_point else { unreachable!() };
            let j = z.support()[0];
            let Model::WeightedSphere(s) = &m else { unreachable!() };
            let g0 = sphere_g0(s, match &f {
                EquivariantMap::Phase(p) => p,
                _ => unreachable!(),
            }, z)
            .unwrap();
            for (c, h) in cert.components.iter().zip(&o.isotropy.component_reps) {
                let turns: Vec<Q> = (0..2).map(|i| &g0[i] + &h[i] + &gamma[i]).collect();
                assert!((c.det - circle_normal_det(j, &turns)).abs() < 1e-10, "{} vs {}", c.det, circle_normal_det(j, &turns));
            }
        }
        let rhs = lefschetz_rhs(&m, &f, &[], &RhsOptions::default()).unwrap();
        let quad = lefschetz_rhs(&m, &f, &[], &RhsOptions { quadrature: Some(8), ..Default::default() }).unwrap();
        assert!((rhs.value - quad.value).norm() < 1e-12);
        assert!(rhs.value.norm() > 0.0);
    }

    #[test]
    fn sphere_choice_invariance() {
        let m = sphere(&["1", "2"]);
        let f = EquivariantMap::Phase(PhaseMap::new(vec![q_frac(1, 5), q_frac(1, 3)]));
        let bundles = vec![
            Twist::trivial(2),
            Twist { weight: Symbolic::rational(q(1), 2), phi: Phi { modulus: q(2), turns: q_frac(1, 7) } },
            Twist { weight: gens().parse("alpha").unwrap(), phi: Phi::one() },
            Twist { weight: Symbolic::rational(q_frac(1, 2), 2), phi: Phi::one() },
        ];
        let base = lefschetz_rhs(&m, &f, &bundles, &RhsOptions::default()).unwrap();
        for opts in [
            RhsOptions { g0_shift: 1, ..Default::default() },
            RhsOptions { complement_twist: 2, ..Default::default() },
            RhsOptions { g0_shift: 1, complement_twist: 3, quadrature: Some(6), scalar_only: false },
        ] {
            let other = lefschetz_rhs(&m, &f, &bundles, &opts).unwrap();
            for (a, b) in base.orbits.iter().zip(&other.orbits) {
                assert!((a.total - b.total).norm() <= 1e-10, "{opts:?}: {} vs {}", a.total, b.total);
                for (x, y) in a.per_degree.iter().zip(&b.per_degree) {
                    assert!((x.isotropy_integral * to_f64(&x.weight()) - y.isotropy_integral * to_f64(&y.weight())).norm() <= 1e-10);
                }
            }
        }
    }
}
