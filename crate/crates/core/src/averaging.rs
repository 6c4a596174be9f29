//! The averaging operator `Av`, as a spectral filter and as Haar quadrature
//! over the lifted group.

use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::basic_complex::{random_form, BasicForm, FormSpace};
use crate::endomorphism::{AffineMap, Endomorphism, Phi};
use crate::error::Result;
use crate::exact::Q;
use crate::torus_group::{haar_grid_f64, SubtorusGroup};

const TAU: f64 = std::f64::consts::TAU;

/// Keeps exactly the modes with `m · v = σ`.
pub fn average_modes(space: &FormSpace, u: &BasicForm) -> BasicForm {
    let kept = u.coeffs().iter().filter(|((m, _), _)| space.is_basic_mode(m)).map(|(k, c)| (k.clone(), *c));
    space.form(u.degree(), kept).expect("same degree as the input")
}

/// `∫_Ĝ 𝔄_ĝ u(𝔞_{℘(ĝ)⁻¹} p) dĝ` on an `N^dim` Haar grid, at each sample point.
/// A lifted group of ambient dimension `n + 1` carries the twist in its last coordinate.
pub fn average_quadrature(
    space: &FormSpace,
    lifted: &SubtorusGroup,
    u: &BasicForm,
    resolution: usize,
    points: &[Vec<f64>],
) -> Result<Vec<Vec<Complex64>>> {
    let n = space.n();
    let (grid, weight) = haar_grid_f64(lifted, resolution)?;
    let twisted = lifted.ambient_dim() > n;
    Ok(points
        .par_iter()
        .map(|p| {
            let mut acc: Option<Vec<Complex64>> = None;
            for g in &grid {
                let shifted: Vec<f64> = p.iter().zip(g).map(|(a, b)| a - b).collect();
                let fiber = if twisted { Complex64::from_polar(1.0, TAU * g[n]) } else { Complex64::new(1.0, 0.0) };
                let vals = space.evaluate(u, &shifted);
                let acc = acc.get_or_insert_with(|| vec![Complex64::zero(); vals.len()]);
                for (a, v) in acc.iter_mut().zip(vals) {
                    *a += v * fiber * weight;
                }
            }
            acc.unwrap_or_default()
        })
        .collect())
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ProjectorReport {
    pub sections: usize,
    pub idempotence: f64,
    pub self_adjointness: f64,
    pub lie_kernel: bool,
    pub commutes_with_d: f64,
    pub equivariance: f64,
    pub quadrature_agreement: f64,
    pub resolution: usize,
    pub sample_points: usize,
}

/// Random-section checks of `Av` as an orthogonal projection onto `ker L`.
pub fn projector_suite(
    space: &FormSpace,
    lifted: &SubtorusGroup,
    sections: usize,
    seed: u64,
    resolution: usize,
    sample_points: usize,
) -> Result<ProjectorReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = space.top();
    let mut report = ProjectorReport {
        sections,
        idempotence: 0.0,
        self_adjointness: 0.0,
        lie_kernel: true,
        commutes_with_d: 0.0,
        equivariance: 0.0,
        quadrature_agreement: 0.0,
        resolution,
        sample_points,
    };
    let small = space.with_cutoff(space.cutoff().min(3));
    for i in 0..sections {
        let deg = i % (top + 1);
        let u = random_form(space, deg, 8, false, &mut rng)?;
        let w = random_form(space, deg, 8, false, &mut rng)?;
        let au = average_modes(space, &u);
        report.idempotence = report.idempotence.max(average_modes(space, &au).sub(&au).max_abs());
        let lhs = au.inner(&w);
        let rhs = u.inner(&average_modes(space, &w));
        report.self_adjointness = report.self_adjointness.max((lhs - rhs).norm());
        report.lie_kernel &= au.is_basic() && space.apply_lie(&au).max_abs() <= 1e-12;
        if deg < top {
            let a = space.apply_d(&au)?;
            let b = average_modes(space, &space.apply_d(&u)?);
            report.commutes_with_d = report.commutes_with_d.max(a.sub(&b).max_abs());
        }
        let g: Vec<Q> = (0..space.n()).map(|_| Q::new(rng.gen_range(0..12).into(), 12.into())).collect();
        let shift = Endomorphism::new(space.clone(), AffineMap::translation_by(&g), Phi::one());
        let a = average_modes(space, &shift.pullback_any(&u)?);
        let b = shift.pullback_any(&au)?;
        report.equivariance = report.equivariance.max(a.sub(&b).max_abs());

        if i < 5 {
            let v = random_form(&small, deg, 5, false, &mut rng)?;
            let pts: Vec<Vec<f64>> = (0..sample_points).map(|_| (0..space.n()).map(|_| rng.gen::<f64>()).collect()).collect();
            let quad = average_quadrature(space, lifted, &v, resolution, &pts)?;
            let exact = average_modes(space, &v);
            for (p, vals) in pts.iter().zip(&quad) {
                for (x, y) in space.evaluate(&exact, p).iter().zip(vals) {
                    report.quadrature_agreement = report.quadrature_agreement.max((x - y).norm());
                }
            }
        }
    }
    Ok(report)
}
