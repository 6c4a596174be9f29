//! Compact abelian groups inside tori `T^n = R^n / Z^n`, written additively
//! in turns. A closed subgroup is the annihilator of an integer lattice of
//! characters; it is connected exactly when that lattice is saturated.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{fmt_rational, frac, q, to_f64, Q};
use crate::lattice::{self, IntMat};
use crate::symbolic::SymbolicFrequency;

fn rows_times_point(rows: &IntMat, x: &[Q]) -> Vec<Q> {
    rows.iter().map(|r| r.iter().zip(x).map(|(&c, xi)| q(c) * xi).sum()).collect()
}

/// A closed, possibly disconnected subgroup `{x : M x ∈ Z^k}` of `T^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClosedSubgroup {
    ambient_dim: usize,
    annihilator: IntMat,
}

impl ClosedSubgroup {
    pub fn new(ambient_dim: usize, annihilator: &IntMat) -> Result<Self> {
        let annihilator = lattice::hnf(annihilator)?;
        Ok(Self { ambient_dim, annihilator })
    }

    pub fn trivial(ambient_dim: usize) -> Self {
        Self { ambient_dim, annihilator: lattice::identity(ambient_dim) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn annihilator(&self) -> &IntMat {
        &self.annihilator
    }

    pub fn dim(&self) -> usize {
        self.ambient_dim - self.annihilator.len()
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        rows_times_point(&self.annihilator, x).iter().all(|v| v.is_integer())
    }

    fn smith(&self) -> Result<lattice::Smith> {
        lattice::smith(&self.annihilator, self.annihilator.len(), self.ambient_dim)
    }

    /// Order of the component group, the index of the annihilator in its saturation.
    pub fn component_count(&self) -> Result<u64> {
        Ok(self.smith()?.diag.iter().map(|&d| d as u64).product())
    }

    pub fn identity_component(&self) -> Result<SubtorusGroup> {
        SubtorusGroup::from_relations(self.ambient_dim, &lattice::saturate(&self.annihilator, self.ambient_dim)?)
    }

    /// One rational representative per connected component, the identity first.
    pub fn component_reps(&self) -> Result<Vec<Vec<Q>>> {
        let s = self.smith()?;
        let n = self.ambient_dim;
        let mut ys: Vec<Vec<Q>> = vec![vec![Q::zero(); n]];
        for (i, &d) in s.diag.iter().enumerate() {
            let mut next = Vec::new();
            for y in &ys {
                for t in 0..d {
                    let mut y2 = y.clone();
                    y2[i] = Q::new(t.into(), d.into());
                    next.push(y2);
                }
            }
            ys = next;
        }
        Ok(ys
            .into_iter()
            .map(|y| (0..n).map(|i| frac(&s.v[i].iter().zip(&y).map(|(&c, yi)| q(c) * yi).sum::<Q>())).collect())
            .collect())
    }

    pub fn descriptor(&self) -> Result<IsotropyDescriptor> {
        Ok(IsotropyDescriptor { identity_component: self.identity_component()?, component_reps: self.component_reps()? })
    }

    pub fn intersect(&self, other: &ClosedSubgroup) -> Result<ClosedSubgroup> {
        assert_eq!(self.ambient_dim, other.ambient_dim);
        let mut rows = self.annihilator.clone();
        rows.extend(other.annihilator.iter().cloned());
        Self::new(self.ambient_dim, &rows)
    }

    /// The subgroup of parameters `θ ∈ T^d` with `θ B_H ∈ self`, where `B_H`
    /// is the integer basis of the subtorus `h`.
    pub fn pull_back_to(&self, h: &SubtorusGroup) -> Result<ClosedSubgroup> {
        let basis = h.basis()?;
        let bt = lattice::transpose(&basis, self.ambient_dim);
        let rows = lattice::mat_mul(&self.annihilator, &bt, h.dim())?;
        ClosedSubgroup::new(h.dim(), &rows)
    }

    /// Preimage under the coordinate projection `T^{n+r} → T^n`, intersected with `lifted`.
    pub fn preimage_in(&self, lifted: &SubtorusGroup) -> Result<ClosedSubgroup> {
        let r = lifted.ambient_dim() - self.ambient_dim;
        let mut rows: IntMat = self
            .annihilator
            .iter()
            .map(|row| row.iter().copied().chain(std::iter::repeat(0).take(r)).collect())
            .collect();
        rows.extend(lifted.relation_lattice().iter().cloned());
        ClosedSubgroup::new(lifted.ambient_dim(), &rows)
    }
}

/// A closed connected subgroup (a subtorus), represented canonically by the
/// HNF basis of its saturated relation lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubtorusGroup {
    ambient_dim: usize,
    relation_lattice: IntMat,
    haar_normalization: Q,
}

impl SubtorusGroup {
    pub fn from_relations(ambient_dim: usize, relations: &IntMat) -> Result<Self> {
        let relation_lattice = lattice::hnf(relations)?;
        if lattice::saturate(&relation_lattice, ambient_dim)? != relation_lattice {
            return Err(Error::Lattice("relation lattice of a subtorus must be saturated".into()));
        }
        Ok(Self { ambient_dim, relation_lattice, haar_normalization: Q::one() })
    }

    /// The subtorus swept by the integer directions `basis` (rows).
    pub fn from_basis(ambient_dim: usize, basis: &IntMat) -> Result<Self> {
        let rel = lattice::right_kernel(basis, ambient_dim)?;
        Self::from_relations(ambient_dim, &rel)
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self { ambient_dim, relation_lattice: Vec::new(), haar_normalization: Q::one() }
    }

    pub fn with_normalization(mut self, mass: Q) -> Self {
        assert!(mass > Q::zero());
        self.haar_normalization = mass;
        self
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn relation_lattice(&self) -> &IntMat {
        &self.relation_lattice
    }

    pub fn haar_normalization(&self) -> &Q {
        &self.haar_normalization
    }

    pub fn dim(&self) -> usize {
        self.ambient_dim - self.relation_lattice.len()
    }

    /// Integer basis (rows) of the direction lattice; `θ ↦ θ B mod 1` is an
    /// isomorphism `T^dim → G`.
    pub fn basis(&self) -> Result<IntMat> {
        lattice::right_kernel(&self.relation_lattice, self.ambient_dim)
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        rows_times_point(&self.relation_lattice, x).iter().all(|v| v.is_integer())
    }

    pub fn contains_direction(&self, d: &[i64]) -> bool {
        lattice::mat_vec(&self.relation_lattice, d).iter().all(|&x| x == 0)
    }

    pub fn as_closed(&self) -> ClosedSubgroup {
        ClosedSubgroup { ambient_dim: self.ambient_dim, annihilator: self.relation_lattice.clone() }
    }

    /// Point with parameters `θ` (turns).
    pub fn point(&self, basis: &IntMat, theta: &[Q]) -> Vec<Q> {
        (0..self.ambient_dim)
            .map(|j| frac(&theta.iter().zip(basis).map(|(t, row)| t * q(row[j])).sum::<Q>()))
            .collect()
    }

    /// Parameters of a group element, `θ` with `θ B ≡ x`.
    pub fn coordinates(&self, x: &[Q]) -> Result<Vec<Q>> {
        let basis = self.basis()?;
        let bt = lattice::transpose(&basis, self.ambient_dim);
        let r = lattice::right_inverse(&lattice::transpose(&bt, self.dim()), self.ambient_dim)?;
        // B R = I, so θ = x R
        Ok((0..self.dim()).map(|j| frac(&x.iter().zip(&r).map(|(xi, row)| xi * q(row[j])).sum::<Q>())).collect())
    }

    pub fn summary(&self) -> GroupSummary {
        GroupSummary {
            ambient_dim: self.ambient_dim,
            dim: self.dim(),
            relation_lattice: self.relation_lattice.clone(),
            haar_normalization: fmt_rational(&self.haar_normalization),
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GroupSummary {
    pub ambient_dim: usize,
    pub dim: usize,
    pub relation_lattice: IntMat,
    pub haar_normalization: String,
}

/// The projection `℘ : Ĝ → G` onto the first `n` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupHomomorphism {
    pub source: SubtorusGroup,
    pub target: SubtorusGroup,
}

impl GroupHomomorphism {
    pub fn is_identity(&self) -> bool {
        self.source == self.target
    }

    pub fn extra_dims(&self) -> usize {
        self.source.ambient_dim() - self.target.ambient_dim()
    }

    pub fn project(&self, x: &[Q]) -> Vec<Q> {
        x[..self.target.ambient_dim()].to_vec()
    }

    /// Some `ĝ ∈ Ĝ` with `℘(ĝ) = g`.
    pub fn lift(&self, g: &[Q]) -> Result<Vec<Q>> {
        let n = self.target.ambient_dim();
        let r = self.extra_dims();
        if !self.target.contains(g) {
            return Err(Error::Lattice("element to lift is not in the target group".into()));
        }
        if r == 0 {
            return Ok(g.iter().map(frac).collect());
        }
        let rel = self.source.relation_lattice();
        let tail: IntMat = rel.iter().map(|row| row[n..].to_vec()).collect();
        let head: IntMat = rel.iter().map(|row| row[..n].to_vec()).collect();
        let rhs: Vec<Q> = rows_times_point(&head, g).into_iter().map(|v| -v).collect();
        let sol = lattice::solve_congruence(&tail, rel.len(), r, &rhs, 1 << 16)?
            .ok_or_else(|| Error::Lattice("projection is not surjective".into()))?;
        let mut out: Vec<Q> = g.iter().map(frac).collect();
        out.extend(sol.solutions[0].iter().cloned());
        Ok(out)
    }

    /// `ker ℘` as a closed subgroup of `Ĝ`.
    pub fn kernel(&self) -> Result<ClosedSubgroup> {
        ClosedSubgroup::trivial(self.target.ambient_dim()).preimage_in(&self.source)
    }
}

/// Isotropy group: identity component plus one representative per component.
#[derive(Clone, Debug, PartialEq)]
pub struct IsotropyDescriptor {
    pub identity_component: SubtorusGroup,
    pub component_reps: Vec<Vec<Q>>,
}

impl IsotropyDescriptor {
    pub fn component_count(&self) -> usize {
        self.component_reps.len()
    }
}

/// `{m ∈ Z^n : m · v = 0}` in Hermite normal form.
pub fn relation_lattice(v: &SymbolicFrequency) -> Result<IntMat> {
    let coeffs = v.integer_coefficients()?;
    lattice::left_kernel(&coeffs, v.ambient_dim(), v.generator_count() + 1)
}

/// Closure of `t ↦ t v` in `T^n`.
pub fn closure_of(v: &SymbolicFrequency) -> Result<SubtorusGroup> {
    SubtorusGroup::from_relations(v.ambient_dim(), &relation_lattice(v)?)
}

/// Closure `Ĝ` of `t ↦ (t v, t σ)` in `T^{n+r}` together with `℘`.
pub fn closure_group(v: &SymbolicFrequency, bundle_weights: Option<&SymbolicFrequency>) -> Result<(SubtorusGroup, GroupHomomorphism)> {
    let target = closure_of(v)?;
    let source = match bundle_weights {
        None => target.clone(),
        Some(w) => closure_of(&v.concat(w)?)?,
    };
    let hom = GroupHomomorphism { source: source.clone(), target: target.clone() };
    check_surjective(&hom)?;
    Ok((source, hom))
}

fn check_surjective(hom: &GroupHomomorphism) -> Result<()> {
    let n = hom.target.ambient_dim();
    let projected: IntMat = hom.source.basis()?.iter().map(|row| row[..n].to_vec()).collect();
    let image = lattice::saturate(&projected, n)?;
    let target = lattice::saturate(&hom.target.basis()?, n)?;
    if image != target {
        return Err(Error::Lattice("℘ is not onto its target".into()));
    }
    Ok(())
}

/// `N^dim` equally spaced group elements with equal weights summing to the
/// Haar normalization.
pub fn haar_quadrature(g: &SubtorusGroup, resolution: usize) -> Result<Vec<(Vec<Q>, Q)>> {
    assert!(resolution >= 1);
    let basis = g.basis()?;
    let d = g.dim();
    let count = resolution.checked_pow(d as u32).ok_or(Error::Overflow)?;
    let weight = g.haar_normalization() / q(count as i64);
    let n = Q::from_integer((resolution as i64).into());
    let mut out = Vec::with_capacity(count);
    let mut idx = vec![0usize; d];
    for _ in 0..count {
        let theta: Vec<Q> = idx.iter().map(|&i| q(i as i64) / &n).collect();
        out.push((g.point(&basis, &theta), weight.clone()));
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < resolution {
                break;
            }
            *slot = 0;
        }
    }
    Ok(out)
}

/// Floating-point Haar grid, `(points, weight)`, for numerical integrands.
pub fn haar_grid_f64(g: &SubtorusGroup, resolution: usize) -> Result<(Vec<Vec<f64>>, f64)> {
    let basis = g.basis()?;
    let d = g.dim();
    let n = g.ambient_dim();
    let count = resolution.checked_pow(d as u32).ok_or(Error::Overflow)?;
    let mut pts = Vec::with_capacity(count);
    let mut idx = vec![0usize; d];
    for _ in 0..count {
        let mut x = vec![0.0; n];
        for (i, row) in idx.iter().zip(&basis) {
            let t = *i as f64 / resolution as f64;
            for j in 0..n {
                x[j] += t * row[j] as f64;
            }
        }
        pts.push(x.into_iter().map(|v| v - v.floor()).collect());
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < resolution {
                break;
            }
            *slot = 0;
        }
    }
    Ok((pts, to_f64(g.haar_normalization()) / count as f64))
}

/// Cardinality of `{θ ∈ T^dim(h) : θ B_h ∈ k}`, or `None` when positive-dimensional.
pub fn intersection_count(h: &SubtorusGroup, k: &ClosedSubgroup) -> Result<Option<u64>> {
    let pulled = k.pull_back_to(h)?;
    if pulled.dim() > 0 {
        return Ok(None);
    }
    Ok(Some(pulled.component_count()?))
}

/// Number of sheets of `G0 → orbit`, `ĝ ↦ a_{℘(ĝ)}(p)`: the order of `G0 ∩ ℘⁻¹(I)`.
pub fn sheet_count(g0: &SubtorusGroup, lifted: &SubtorusGroup, isotropy: &ClosedSubgroup, orbit_dim: usize) -> Result<u64> {
    for row in g0.basis()? {
        if !lifted.contains_direction(&row) {
            return Err(Error::Lattice("G0 is not a subgroup of the lifted group".into()));
        }
    }
    if g0.dim() != orbit_dim {
        return Err(Error::NotTransversal(format!("dim G0 = {} but the orbit has dimension {orbit_dim}", g0.dim())));
    }
    let jay = isotropy.preimage_in(lifted)?;
    intersection_count(g0, &jay)?
        .ok_or_else(|| Error::NotTransversal("G0 meets the isotropy preimage in a positive-dimensional set".into()))
}

/// A choice of compact connected subgroup of `Ĝ` transverse to `𝒥`, with the
/// Haar mass induced by `μ_Ĝ = μ_𝒥 ⊗ μ_{Ĝ_Y}` near the identity and its sheet count.
#[derive(Clone, Debug, PartialEq)]
pub struct TransverseSplitting {
    pub complement: SubtorusGroup,
    pub haar_factor: Q,
    pub sheets: u64,
    /// `|det [J; C]|` in the lattice coordinates of `Ĝ`.
    pub volume_ratio: u64,
    pub jay_components: u64,
}

impl TransverseSplitting {
    pub fn weight(&self) -> Q {
        &self.haar_factor / q(self.sheets as i64)
    }
}

/// Canonical complement: completes the identity component of `𝒥` to a
/// unimodular basis of `Ĝ`'s lattice. `twist` > 0 selects the alternative
/// complement `twist * c_1 + j_1` (when `𝒥` has positive dimension).
pub fn transverse_complement(lifted: &SubtorusGroup, jay: &ClosedSubgroup, twist: i64) -> Result<SubtorusGroup> {
    let n = lifted.ambient_dim();
    let lb = lifted.basis()?;
    let big = lifted.dim();
    let j0 = jay.identity_component()?;
    let jb = j0.basis()?;
    let dj = jb.len();
    let coords = lattice_coordinates(&lb, n, &jb)?;
    // unimodular completion via Smith: j = U^{-1} [I|0] V^{-1}
    let complement_coords: IntMat = if dj == 0 {
        lattice::identity(big)
    } else {
        let s = lattice::smith(&coords, dj, big)?;
        let vinv = lattice::right_inverse(&s.v, big)?;
        let vinv = lattice::transpose(&lattice::transpose(&vinv, big), big);
        vinv[dj..].to_vec()
    };
    let mut complement_rows = lattice::mat_mul(&complement_coords, &lb, n)?;
    if twist > 0 && dj > 0 && !complement_rows.is_empty() {
        for k in 0..n {
            complement_rows[0][k] = twist * complement_rows[0][k] + jb[0][k];
        }
    }
    SubtorusGroup::from_basis(n, &complement_rows)
}

/// Express rows of `rows` (vectors in the lattice spanned by `basis`) in that basis.
fn lattice_coordinates(basis: &IntMat, n: usize, rows: &IntMat) -> Result<IntMat> {
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let bt = lattice::transpose(basis, n);
    // B has a right inverse R with B R = I; coordinates are y R.
    let r = lattice::right_inverse(&lattice::transpose(&bt, basis.len()), n)?;
    let coords = lattice::mat_mul(rows, &r, basis.len())?;
    let back = lattice::mat_mul(&coords, basis, n)?;
    if &back != rows {
        return Err(Error::Lattice("vector is not in the lattice of the group".into()));
    }
    Ok(coords)
}

pub fn transverse_splitting(lifted: &SubtorusGroup, jay: &ClosedSubgroup, complement: &SubtorusGroup) -> Result<TransverseSplitting> {
    let n = lifted.ambient_dim();
    let lb = lifted.basis()?;
    let jb = jay.identity_component()?.basis()?;
    let cb = complement.basis()?;
    if jb.len() + cb.len() != lifted.dim() {
        return Err(Error::NotTransversal(format!(
            "complement of dimension {} does not match codimension {} of the isotropy preimage",
            cb.len(),
            lifted.dim() - jb.len()
        )));
    }
    let mut stacked = lattice_coordinates(&lb, n, &jb)?;
    stacked.extend(lattice_coordinates(&lb, n, &cb)?);
    let volume_ratio = lattice::det(&stacked)?.unsigned_abs();
    if volume_ratio == 0 {
        return Err(Error::NotTransversal("complement is not transverse to the isotropy preimage".into()));
    }
    let jay_components = jay.component_count()?;
    let sheets = intersection_count(complement, jay)?
        .ok_or_else(|| Error::NotTransversal("complement meets the isotropy preimage in positive dimension".into()))?;
    Ok(TransverseSplitting {
        complement: complement.clone(),
        haar_factor: q((jay_components * volume_ratio) as i64),
        sheets,
        volume_ratio,
        jay_components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q_frac;
    use crate::symbolic::{Generator, Generators};

    fn gens(names: &[&str]) -> Generators {
        Generators::new(
            names
                .iter()
                .enumerate()
                .map(|(i, n)| Generator { name: n.to_string(), approx: std::f64::consts::PI + i as f64 * std::f64::consts::E })
                .collect(),
        )
    }

    #[test]
    fn relation_lattice_examples() {
        let g = gens(&["alpha"]);
        let v = SymbolicFrequency::parse(&["1", "alpha"], &g).unwrap();
        assert!(relation_lattice(&v).unwrap().is_empty());
        assert_eq!(closure_of(&v).unwrap().dim(), 2);

        let v = SymbolicFrequency::parse(&["0", "1", "alpha"], &g).unwrap();
        assert_eq!(relation_lattice(&v).unwrap(), vec![vec![1, 0, 0]]);
        assert_eq!(closure_of(&v).unwrap().dim(), 2);

        let g = gens(&["tau"]);
        let w = SymbolicFrequency::parse(&["tau", "1", "2"], &g).unwrap();
        let rel = relation_lattice(&w).unwrap();
        assert_eq!(rel.len(), 1);
        // spans (0, -2, 1)
        assert_eq!(lattice::hnf(&vec![vec![0, -2, 1]]).unwrap(), rel);
        assert_eq!(closure_of(&w).unwrap().dim(), 2);
    }

    #[test]
    fn lifted_closure_examples() {
        let g = gens(&["tau", "s1", "s2", "s3"]);
        let v = SymbolicFrequency::parse(&["tau", "1", "2"], &g).unwrap();
        let sigma = SymbolicFrequency::parse(&["s1", "s2", "s3"], &g).unwrap();
        let (lifted, hom) = closure_group(&v, Some(&sigma)).unwrap();
        assert_eq!(lifted.ambient_dim(), 6);
        assert_eq!(lifted.dim(), 5);
        assert_eq!(hom.target.dim(), 2);

        let (same, hom) = closure_group(&v, None).unwrap();
        assert!(hom.is_identity());
        assert_eq!(same, hom.target);

        let v = SymbolicFrequency::rational(&[q(0), q(1)]);
        let sigma = SymbolicFrequency::rational(&[q(1)]);
        let (lifted, _) = closure_group(&v, Some(&sigma)).unwrap();
        assert_eq!(lifted.dim(), 1);
        assert_eq!(lifted.relation_lattice(), &lattice::hnf(&vec![vec![1, 0, 0], vec![0, 1, -1]]).unwrap());

        let other = gens(&["beta"]);
        let bad = SymbolicFrequency::parse(&["beta"], &other).unwrap();
        let v = SymbolicFrequency::parse(&["tau", "1", "2"], &g).unwrap();
        assert!(matches!(closure_group(&v, Some(&bad)), Err(Error::GeneratorMismatch(_))));
    }

    #[test]
    fn haar_quadrature_weights() {
        let g = SubtorusGroup::from_basis(3, &vec![vec![0, 1, 2]]).unwrap();
        let pts = haar_quadrature(&g, 4).unwrap();
        assert_eq!(pts.len(), 4);
        assert!(pts.iter().all(|(_, w)| *w == q_frac(1, 4)));
        assert_eq!(pts.iter().map(|(_, w)| w.clone()).sum::<Q>(), q(1));
        assert!(pts.iter().all(|(x, _)| g.contains(x)));
    }

    #[test]
    fn haar_character_sums_vanish() {
        // G = {(s, 2s)} in T^2; the character m = (1, 0) is nontrivial on G
        let g = SubtorusGroup::from_basis(2, &vec![vec![1, 2]]).unwrap();
        for m in [[1i64, 0], [0, 1], [3, -1]] {
            let order = (m[0] + 2 * m[1]).unsigned_abs() as usize;
            let pts = haar_quadrature(&g, order + 1).unwrap();
            let sum: num_complex::Complex64 = pts
                .iter()
                .map(|(x, w)| {
                    let ph = 2.0 * std::f64::consts::PI * (m[0] as f64 * to_f64(&x[0]) + m[1] as f64 * to_f64(&x[1]));
                    num_complex::Complex64::from_polar(to_f64(w), ph)
                })
                .sum();
            assert!(sum.norm() < 1e-12, "{m:?}: {sum}");
        }
    }

    #[test]
    fn isotropy_components_on_weighted_sphere() {
        // G = closure of (tau, 1, 2); isotropy at (0, 0, z3) fixes the third phase
        let g = gens(&["tau"]);
        let w = SymbolicFrequency::parse(&["tau", "1", "2"], &g).unwrap();
        let group = closure_of(&w).unwrap();
        let mut rows = group.relation_lattice().clone();
        rows.push(vec![0, 0, 1]);
        let iso = ClosedSubgroup::new(3, &rows).unwrap();
        assert_eq!(iso.dim(), 1);
        assert_eq!(iso.component_count().unwrap(), 2);
        let reps = iso.component_reps().unwrap();
        assert!(reps.iter().any(|r| r[1] == q_frac(1, 2)));
        assert!(reps.iter().all(|r| iso.contains(r)));
    }

    #[test]
    fn sheets_of_the_s5_example() {
        let g = gens(&["tau", "s1", "s2", "s3"]);
        let v = SymbolicFrequency::parse(&["tau", "1", "2"], &g).unwrap();
        let sigma = SymbolicFrequency::parse(&["s1", "s2", "s3"], &g).unwrap();
        let (lifted, hom) = closure_group(&v, Some(&sigma)).unwrap();
        let mut rows = hom.target.relation_lattice().clone();
        rows.push(vec![0, 0, 1]);
        let iso = ClosedSubgroup::new(3, &rows).unwrap();
        for dir in [vec![0, 1, 2, 0, 0, 0], vec![1, 1, 2, 0, 0, 0], vec![0, 1, 2, 1, 0, 3], vec![5, -1, -2, 0, 2, 0]] {
            let g0 = SubtorusGroup::from_basis(6, &vec![dir.clone()]).unwrap();
            assert_eq!(sheet_count(&g0, &lifted, &iso, 1).unwrap(), 2, "{dir:?}");
        }
        // a direction inside the isotropy preimage is not transversal
        let inside = SubtorusGroup::from_basis(6, &vec![vec![1, 0, 0, 0, 0, 0]]).unwrap();
        assert!(matches!(sheet_count(&inside, &lifted, &iso, 1), Err(Error::NotTransversal(_))));
    }

    #[test]
    fn free_and_doubled_sheets() {
        // free orbit, G0 = G: one sheet
        let g = SubtorusGroup::from_basis(3, &vec![vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        assert_eq!(sheet_count(&g, &g, &ClosedSubgroup::trivial(3), 2).unwrap(), 1);
        // circle with weight 2 lifted by a weight-1 bundle: t ↦ e^{2it} has two sheets
        let v = SymbolicFrequency::rational(&[q(2)]);
        let s = SymbolicFrequency::rational(&[q(1)]);
        let (lifted, _) = closure_group(&v, Some(&s)).unwrap();
        assert_eq!(sheet_count(&lifted, &lifted, &ClosedSubgroup::trivial(1), 1).unwrap(), 2);
    }

    #[test]
    fn lift_and_kernel() {
        let v = SymbolicFrequency::rational(&[q(0), q(0), q(1)]);
        let s = SymbolicFrequency::rational(&[q_frac(1, 2)]);
        let (lifted, hom) = closure_group(&v, Some(&s)).unwrap();
        let g = vec![q(0), q(0), q_frac(1, 3)];
        let lift = hom.lift(&g).unwrap();
        assert!(lifted.contains(&lift));
        assert_eq!(hom.project(&lift), g);
        let ker = hom.kernel().unwrap();
        assert_eq!(ker.dim(), 0);
        assert_eq!(ker.component_count().unwrap(), 2);
    }

    #[test]
    fn splitting_ratio_is_choice_independent() {
        let g = gens(&["s"]);
        let v = SymbolicFrequency::parse(&["1", "2"], &g).unwrap();
        let sigma = SymbolicFrequency::parse(&["s"], &g).unwrap();
        let (lifted, hom) = closure_group(&v, Some(&sigma)).unwrap();
        // isotropy of G = {(s, 2s)} at e_2 is {2s ≡ 0}
        let mut rows = hom.target.relation_lattice().clone();
        rows.push(vec![0, 1]);
        let iso = ClosedSubgroup::new(2, &rows).unwrap();
        let jay = iso.preimage_in(&lifted).unwrap();
        assert_eq!(jay.dim(), 1);
        let mut weights = Vec::new();
        for twist in [0, 2, 3] {
            let c = transverse_complement(&lifted, &jay, twist).unwrap();
            let split = transverse_splitting(&lifted, &jay, &c).unwrap();
            weights.push(split.weight());
        }
        assert!(weights.iter().all(|w| *w == q(1)), "{weights:?}");
    }

    #[test]
    fn coordinates_round_trip() {
        let g = SubtorusGroup::from_basis(3, &vec![vec![1, 1, 0], vec![0, 1, 2]]).unwrap();
        let basis = g.basis().unwrap();
        let theta = vec![q_frac(1, 3), q_frac(2, 7)];
        let x = g.point(&basis, &theta);
        let back = g.coordinates(&x).unwrap();
        assert_eq!(g.point(&basis, &back), x);
    }
}
