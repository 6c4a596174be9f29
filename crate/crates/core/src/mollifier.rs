//! Kernel approximants of `f*` on two-dimensional tori, paired against the
//! diagonal after averaging, and their convergence to the scalar Lefschetz number.

use rayon::prelude::*;
use serde::Serialize;

use crate::endomorphism::{AffineMap, EquivariantMap};
use crate::error::{Error, Result};
use crate::fixed_point::{lefschetz_rhs, RhsOptions};
use crate::geometry::{FlatTorusModel, Model};
use crate::torus_group::haar_grid_f64;

pub const DEFAULT_RADIUS: f64 = 0.25;
pub const DEFAULT_GRID: usize = 2048;
const ERROR_FLOOR: f64 = 1e-6;
/// Cells across the kernel support used by convergence studies.
const STUDY_CELLS: f64 = 128.0;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct MollifierConfig {
    pub k: u32,
    pub radius: f64,
    pub grid: usize,
    /// `c` with `∫_{R²} c χ₀(|x|) dx = 1`.
    pub normalization: f64,
    pub normalization_residual: f64,
}

/// `exp(-1 / (1 - (ρ/r)²))` on `|ρ| < r`, zero outside.
pub fn bump(rho: f64, radius: f64) -> f64 {
    let t = rho / radius;
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

fn radial_simpson(radius: f64, intervals: usize) -> f64 {
    let h = radius / intervals as f64;
    let f = |i: usize| {
        let rho = i as f64 * h;
        bump(rho, radius) * rho
    };
    let inner: f64 = (1..intervals).map(|i| if i % 2 == 1 { 4.0 * f(i) } else { 2.0 * f(i) }).sum();
    std::f64::consts::TAU * h / 3.0 * (f(0) + inner + f(intervals))
}

impl MollifierConfig {
    pub fn new(k: u32, grid: usize, radius: f64) -> Result<Self> {
        if k == 0 || grid == 0 || !(radius > 0.0 && radius <= 0.5) {
            return Err(Error::Unsupported(format!("mollifier needs k ≥ 1, grid ≥ 1 and 0 < r ≤ 1/2 (k = {k}, grid = {grid}, r = {radius})")));
        }
        let fine = radial_simpson(radius, 1 << 14);
        let coarse = radial_simpson(radius, 1 << 13);
        Ok(Self { k, radius, grid, normalization: 1.0 / fine, normalization_residual: (1.0 / fine - 1.0 / coarse).abs() })
    }

    pub fn with_k(&self, k: u32) -> Self {
        Self { k, ..self.clone() }
    }

    /// The configured grid, refined to a power of two resolving the support of `K_k`.
    pub fn study_grid(&self) -> usize {
        let needed = (STUDY_CELLS * self.k as f64 / (2.0 * self.radius)).ceil() as usize;
        self.grid.max(needed.next_power_of_two())
    }

    /// Number of grid cells spanned by the kernel support.
    pub fn cells_across_support(&self, grid: usize) -> f64 {
        2.0 * self.radius / self.k as f64 * grid as f64
    }

    /// `K(x) = k² c χ₀(k |wrap x|)` for a displacement `x` on `T²`.
    pub fn kernel(&self, x: &[f64]) -> f64 {
        let k = self.k as f64;
        let reach = self.radius / k;
        let mut norm_sq = 0.0;
        for v in x {
            let w = v - v.round();
            if w.abs() >= reach {
                return 0.0;
            }
            norm_sq += w * w;
        }
        k * k * self.normalization * bump(k * norm_sq.sqrt(), self.radius)
    }

    fn check_grid(&self, grid: usize) -> Result<()> {
        let cells = self.cells_across_support(grid);
        if cells < 4.0 {
            return Err(Error::GridTooCoarse(format!("kernel support spans {cells:.3} cells at grid {grid} and k = {}", self.k)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PairingValue {
    pub value: f64,
    pub quadrature_error: f64,
    pub grid: usize,
}

fn torus_parts<'a>(model: &'a Model, f: &'a EquivariantMap) -> Result<(&'a FlatTorusModel, &'a AffineMap)> {
    match (model, f) {
        (Model::FlatTorus(m), EquivariantMap::Affine(a)) if m.n() == 2 => Ok((m, a)),
        _ => Err(Error::Unsupported("the mollifier lab runs on two-dimensional flat tori with affine maps".into())),
    }
}

/// `∬ K(p - f(p) + g) dμ(g) dm(p)`, using that the displacement is constant on
/// `G`-orbits: `p` runs over a section of the base and `g` over a Haar grid of `G`.
fn pairing_at(m: &FlatTorusModel, a: &AffineMap, config: &MollifierConfig, grid: usize) -> Result<f64> {
    let r = m.base_dim();
    let n = m.n();
    let section: Vec<Vec<f64>> = (0..r).map(|i| m.section().iter().map(|row| row[i] as f64).collect()).collect();
    let (group_grid, group_weight) = haar_grid_f64(m.group(), grid)?;
    let base_points = grid.pow(r as u32);
    let base_weight = 1.0 / base_points as f64;
    let rows: Vec<f64> = (0..base_points)
        .into_par_iter()
        .map(|idx| {
            let mut p = vec![0.0; n];
            let mut rest = idx;
            for col in &section {
                let b = (rest % grid) as f64 / grid as f64;
                rest /= grid;
                for (x, s) in p.iter_mut().zip(col) {
                    *x += b * s;
                }
            }
            let fp = a.apply_f64(&p);
            let d: Vec<f64> = p.iter().zip(&fp).map(|(x, y)| x - y).collect();
            let mut shifted = vec![0.0; n];
            group_grid
                .iter()
                .map(|g| {
                    for i in 0..n {
                        shifted[i] = d[i] + g[i];
                    }
                    config.kernel(&shifted)
                })
                .sum::<f64>()
                * group_weight
        })
        .collect();
    Ok(rows.iter().sum::<f64>() * base_weight)
}

/// `⟨ι*_Δ K_{Φ∘Av,k}, 1⟩` for scalar functions, with the error estimate
/// `|Q_N − Q_{N/2}|` whenever the half grid still resolves the kernel.
pub fn kernel_pairing(model: &Model, f: &EquivariantMap, config: &MollifierConfig) -> Result<PairingValue> {
    let (m, a) = torus_parts(model, f)?;
    crate::endomorphism::validate_equivariance(model, f, None)?;
    config.check_grid(config.grid)?;
    let value = pairing_at(m, a, config, config.grid)?;
    let half = config.grid / 2;
    let quadrature_error = if config.cells_across_support(half) >= 4.0 {
        (value - pairing_at(m, a, config, half)?).abs()
    } else {
        f64::NAN
    };
    Ok(PairingValue { value, quadrature_error, grid: config.grid })
}

/// Mass of `K` over `T²` with `f` and `Av` replaced by the identity.
pub fn mollifier_mass(config: &MollifierConfig, grid: usize) -> Result<f64> {
    config.check_grid(grid)?;
    let h = 1.0 / grid as f64;
    let rows: Vec<f64> = (0..grid)
        .into_par_iter()
        .map(|i| (0..grid).map(|j| config.kernel(&[i as f64 * h, j as f64 * h])).sum())
        .collect();
    Ok(rows.iter().sum::<f64>() * h * h)
}

/// Degree-0 Lefschetz number from the fixed-orbit formula.
pub fn scalar_closed_form(model: &Model, f: &EquivariantMap) -> Result<f64> {
    let rhs = lefschetz_rhs(model, f, &[], &RhsOptions { scalar_only: true, ..Default::default() })?;
    Ok(rhs.value.re)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ConvergenceRow {
    pub k: u32,
    pub grid: usize,
    pub value: f64,
    pub error: f64,
    pub quadrature_error: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ConvergenceStudy {
    pub closed_form: f64,
    pub tolerance: f64,
    pub rows: Vec<ConvergenceRow>,
    /// `max(error, 1e-6)` is nonincreasing in `k`.
    pub monotone: bool,
    pub converged: bool,
}

impl ConvergenceStudy {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,grid,value,error,quadrature_error\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:.12e},{:.12e},{:.12e}\n", r.k, r.grid, r.value, r.error, r.quadrature_error));
        }
        out
    }
}

pub fn convergence_study(model: &Model, f: &EquivariantMap, config: &MollifierConfig, ks: &[u32], tolerance: f64) -> Result<ConvergenceStudy> {
    torus_parts(model, f)?;
    let closed_form = scalar_closed_form(model, f)?;
    let rows = ks
        .iter()
        .map(|&k| {
            let mut at_k = config.with_k(k);
            at_k.grid = at_k.study_grid();
            let p = kernel_pairing(model, f, &at_k)?;
            Ok(ConvergenceRow { k, grid: at_k.grid, value: p.value, error: (p.value - closed_form).abs(), quadrature_error: p.quadrature_error })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = rows.windows(2).all(|w| w[1].error.max(ERROR_FLOOR) <= w[0].error.max(ERROR_FLOOR));
    let converged = monotone && rows.last().is_some_and(|r| r.error <= tolerance);
    Ok(ConvergenceStudy { closed_form, tolerance, rows, monotone, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q, q_frac, Q};
    use crate::lattice::IntMat;
    use crate::symbolic::{Generator, Generators, SymbolicFrequency};

    fn torus(exprs: &[&str]) -> Model {
        let gens = Generators::new(vec![Generator { name: "alpha".into(), approx: std::f64::consts::SQRT_2 }]);
        Model::FlatTorus(FlatTorusModel::new(SymbolicFrequency::parse(exprs, &gens).unwrap()).unwrap())
    }

    fn affine(m: IntMat, c: Vec<Q>) -> EquivariantMap {
        EquivariantMap::Affine(AffineMap::new(m, c))
    }

    #[test]
    fn bump_profile() {
        assert!(bump(0.0, 0.25) > 0.0);
        assert_eq!(bump(0.25, 0.25), 0.0);
        assert_eq!(bump(-0.3, 0.25), 0.0);
        let c = MollifierConfig::new(8, 256, DEFAULT_RADIUS).unwrap();
        assert!(c.normalization_residual < 1e-9);
    }

    #[test]
    fn mass_is_one() {
        let c = MollifierConfig::new(8, 256, DEFAULT_RADIUS).unwrap();
        assert!((mollifier_mass(&c, 256).unwrap() - 1.0).abs() < 1e-3);
        assert!(matches!(mollifier_mass(&c.with_k(64), 256), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn closed_forms() {
        let m = torus(&["0", "1"]);
        let double = affine(vec![vec![2, 0], vec![0, 1]], vec![q(0); 2]);
        let triple = affine(vec![vec![3, 0], vec![0, 1]], vec![q(0); 2]);
        let shift = affine(vec![vec![1, 0], vec![0, 1]], vec![q_frac(1, 4), q(0)]);
        assert_eq!(scalar_closed_form(&m, &double).unwrap(), 1.0);
        assert_eq!(scalar_closed_form(&m, &triple).unwrap(), 1.0);
        assert_eq!(scalar_closed_form(&m, &shift).unwrap(), 0.0);
        let irr = torus(&["1", "alpha"]);
        let t = affine(vec![vec![1, 0], vec![0, 1]], vec![q_frac(1, 3), q_frac(2, 7)]);
        assert_eq!(scalar_closed_form(&irr, &t).unwrap(), 1.0);
    }

    #[test]
    fn pairing_examples() {
        let m = torus(&["0", "1"]);
        let c = MollifierConfig::new(64, 1024, DEFAULT_RADIUS).unwrap();
        let double = affine(vec![vec![2, 0], vec![0, 1]], vec![q(0); 2]);
        assert!((kernel_pairing(&m, &double, &c).unwrap().value - 1.0).abs() < 0.05);
        let triple = affine(vec![vec![3, 0], vec![0, 1]], vec![q(0); 2]);
        assert!((kernel_pairing(&m, &triple, &c).unwrap().value - 1.0).abs() < 0.05);
        let shift = affine(vec![vec![1, 0], vec![0, 1]], vec![q_frac(1, 4), q(0)]);
        assert_eq!(kernel_pairing(&m, &shift, &c).unwrap().value, 0.0);
        assert!(matches!(kernel_pairing(&m, &double, &MollifierConfig::new(64, 64, DEFAULT_RADIUS).unwrap()), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn group_translation_invariance() {
        let m = torus(&["0", "1"]);
        let c = MollifierConfig::new(16, 512, DEFAULT_RADIUS).unwrap();
        let base = kernel_pairing(&m, &affine(vec![vec![2, 0], vec![0, 1]], vec![q(0); 2]), &c).unwrap().value;
        for j in [1, 37, 300] {
            let g = affine(vec![vec![2, 0], vec![0, 1]], vec![q(0), q_frac(j, 512)]);
            assert!((kernel_pairing(&m, &g, &c).unwrap().value - base).abs() <= 1e-8);
        }
    }

    #[test]
    fn studies() {
        let m = torus(&["0", "1"]);
        let c = MollifierConfig::new(8, 1024, DEFAULT_RADIUS).unwrap();
        let double = affine(vec![vec![2, 0], vec![0, 1]], vec![q(0); 2]);
        let s = convergence_study(&m, &double, &c, &[8, 16, 32, 64], 0.05).unwrap();
        assert!(s.monotone && s.converged, "{s:?}");
        assert!(s.to_csv().lines().count() == 5);
        let irr = torus(&["1", "alpha"]);
        let t = affine(vec![vec![1, 0], vec![0, 1]], vec![q_frac(1, 3), q_frac(2, 7)]);
        let s = convergence_study(&irr, &t, &MollifierConfig::new(8, 512, DEFAULT_RADIUS).unwrap(), &[8, 16, 32], 0.05).unwrap();
        assert!(s.rows.iter().all(|r| (r.value - 1.0).abs() < 1e-3), "{s:?}");
        let id = affine(vec![vec![1, 0], vec![0, 1]], vec![q(0); 2]);
        assert!(convergence_study(&m, &id, &c, &[8], 0.05).unwrap_err().is_transversality_failure());
    }
}
