//! The nine acceptance criteria, one pass/fail line each.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use equilef_core::averaging::projector_suite;
use equilef_core::basic_complex::FormSpace;
use equilef_core::endomorphism::{AffineMap, Endomorphism, EquivariantMap, PhaseMap, Phi, Twist};
use equilef_core::exact::{q, q_frac, to_f64, Cyclo, Q};
use equilef_core::fixed_point::{check_transversality, find_fixed_orbits, lefschetz_rhs, RhsOptions, RhsResult};
use equilef_core::geometry::{FlatTorusModel, Model, SpherePoint, WeightedSphereModel};
use equilef_core::lattice::IntMat;
use equilef_core::mollifier::{convergence_study, MollifierConfig, DEFAULT_RADIUS};
use equilef_core::symbolic::{Generator, Generators, Symbolic, SymbolicFrequency};
use equilef_core::torus_group::{closure_group, closure_of, intersection_count, sheet_count, ClosedSubgroup, SubtorusGroup};
use equilef_core::Error;

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn gens() -> Generators {
    Generators::new(vec![
        Generator { name: "alpha".into(), approx: std::f64::consts::SQRT_2 },
        Generator { name: "tau".into(), approx: std::f64::consts::PI },
    ])
}

fn freq(exprs: &[&str]) -> SymbolicFrequency {
    SymbolicFrequency::parse(exprs, &gens()).unwrap()
}

fn block(b: [[i64; 2]; 2]) -> IntMat {
    vec![vec![b[0][0], b[0][1], 0], vec![b[1][0], b[1][1], 0], vec![0, 0, 1]]
}

struct TorusFixture {
    name: &'static str,
    v: Vec<&'static str>,
    matrix: IntMat,
    translation: Vec<Q>,
    twist: Option<Twist>,
    expected: Option<Cyclo>,
}

impl TorusFixture {
    fn model(&self) -> Model {
        Model::FlatTorus(FlatTorusModel::new(freq(&self.v)).unwrap())
    }

    fn map(&self) -> AffineMap {
        AffineMap::new(self.matrix.clone(), self.translation.clone())
    }

    fn endomorphism(&self, cutoff: i64) -> Endomorphism {
        let weight = self.twist.as_ref().map(|t| &t.weight);
        let space = FormSpace::new(&freq(&self.v), weight, cutoff).unwrap();
        let phi = self.twist.as_ref().map(|t| t.phi.clone()).unwrap_or_else(Phi::one);
        Endomorphism::new(space, self.map(), phi)
    }

    fn rhs(&self, opts: &RhsOptions) -> Result<RhsResult, Error> {
        let bundles: Vec<Twist> = self.twist.iter().cloned().collect();
        lefschetz_rhs(&self.model(), &EquivariantMap::Affine(self.map()), &bundles, opts)
    }
}

fn lambda() -> Phi {
    Phi { modulus: q(3), turns: q_frac(1, 5) }
}

fn torus_fixtures() -> Vec<TorusFixture> {
    let zero3 = vec![q(0); 3];
    vec![
        TorusFixture {
            name: "cat map on T^3",
            v: vec!["0", "0", "1"],
            matrix: block([[2, 1], [1, 1]]),
            translation: zero3.clone(),
            twist: None,
            expected: Some(Cyclo::integer(-1)),
        },
        TorusFixture {
            name: "doubling on T^3",
            v: vec!["0", "1", "alpha"],
            matrix: vec![vec![2, 0, 0], vec![0, 1, 0], vec![0, 0, 1]],
            translation: zero3.clone(),
            twist: None,
            expected: Some(Cyclo::zero()),
        },
        TorusFixture {
            name: "identity on irrational T^2",
            v: vec!["1", "alpha"],
            matrix: vec![vec![1, 0], vec![0, 1]],
            translation: vec![q(0); 2],
            twist: None,
            expected: Some(Cyclo::zero()),
        },
        TorusFixture {
            name: "shifted [[3,1],[1,2]] on T^3",
            v: vec!["0", "0", "1"],
            matrix: block([[3, 1], [1, 2]]),
            translation: vec![q_frac(1, 3), q(0), q_frac(2, 5)],
            twist: None,
            expected: None,
        },
        TorusFixture {
            name: "six fixed orbits on T^3",
            v: vec!["0", "0", "1"],
            matrix: block([[-2, 0], [0, 3]]),
            translation: vec![q(0), q_frac(1, 2), q(0)],
            twist: None,
            expected: None,
        },
        TorusFixture {
            name: "twisted cat map, weight 1",
            v: vec!["0", "0", "1"],
            matrix: block([[2, 1], [1, 1]]),
            translation: vec![q(0), q(0), q_frac(1, 3)],
            twist: Some(Twist { weight: Symbolic::rational(q(1), 2), phi: lambda() }),
            // -λ e^{2πi c_3}
            expected: Some(-(&lambda().exact() * &Cyclo::root(q(1), q_frac(1, 3)))),
        },
        TorusFixture {
            name: "twisted cat map, weight 1/2",
            v: vec!["0", "0", "1"],
            matrix: block([[2, 1], [1, 1]]),
            translation: vec![q(0), q(0), q_frac(1, 3)],
            twist: Some(Twist { weight: Symbolic::rational(q_frac(1, 2), 2), phi: lambda() }),
            expected: Some(Cyclo::zero()),
        },
        TorusFixture {
            name: "twisted cat map, irrational weight",
            v: vec!["0", "0", "1"],
            matrix: block([[2, 1], [1, 1]]),
            translation: vec![q(0), q(0), q_frac(1, 4)],
            twist: Some(Twist { weight: gens().parse("alpha").unwrap(), phi: lambda() }),
            expected: Some(Cyclo::zero()),
        },
    ]
}

fn criterion_1() -> Check {
    let fixtures = torus_fixtures();
    ensure!(fixtures.len() >= 5, "too few fixtures");
    for f in &fixtures {
        let lhs = f.endomorphism(8).cohomology_action().map_err(|e| format!("{}: {e}", f.name))?.lefschetz;
        let rhs = f.rhs(&RhsOptions::default()).map_err(|e| format!("{}: {e}", f.name))?;
        let exact = rhs.exact.ok_or_else(|| format!("{}: RHS is not exact", f.name))?;
        ensure!(lhs == exact, "{}: LHS {lhs} != RHS {exact}", f.name);
        if let Some(expected) = &f.expected {
            ensure!(lhs == *expected, "{}: L = {lhs}, expected {expected}", f.name);
        }
    }
    Ok(())
}

/// Fixed points of `x ↦ Bx + c` on `T²`, by exhaustive search on the grid
/// that contains all of them.
fn brute_force_fixed_points(b: [[i64; 2]; 2], c: [(i64, i64); 2]) -> usize {
    let det = ((b[0][0] - 1) * (b[1][1] - 1) - b[0][1] * b[1][0]).abs();
    let n = det * c[0].1 * c[1].1;
    let mut count = 0;
    for x in 0..n {
        for y in 0..n {
            let fx = b[0][0] * x + b[0][1] * y + c[0].0 * n / c[0].1 - x;
            let fy = b[1][0] * x + b[1][1] * y + c[1].0 * n / c[1].1 - y;
            if fx.rem_euclid(n) == 0 && fy.rem_euclid(n) == 0 {
                count += 1;
            }
        }
    }
    count
}

fn criterion_2() -> Check {
    let cases: [([[i64; 2]; 2], [(i64, i64); 2]); 6] = [
        ([[2, 1], [1, 1]], [(0, 1), (0, 1)]),
        ([[3, 1], [1, 2]], [(1, 3), (1, 5)]),
        ([[0, 1], [-1, 3]], [(1, 2), (0, 1)]),
        ([[-2, 0], [0, 3]], [(0, 1), (1, 2)]),
        ([[1, 1], [1, 2]], [(2, 7), (0, 1)]),
        ([[0, -1], [1, 0]], [(1, 4), (3, 4)]),
    ];
    for (b, c) in cases {
        // det(I - B) and sign det(I - dA), written out for 2×2 blocks
        let det_i_minus_b = (1 - b[0][0]) * (1 - b[1][1]) - b[0][1] * b[1][0];
        let sign = det_i_minus_b.signum();
        let points = brute_force_fixed_points(b, c);
        let classical_rhs = points as i64 * sign;

        let fixture = TorusFixture {
            name: "T^2 x S^1",
            v: vec!["0", "0", "1"],
            matrix: block(b),
            translation: vec![q_frac(c[0].0, c[0].1), q_frac(c[1].0, c[1].1), q(0)],
            twist: None,
            expected: None,
        };
        let lhs = fixture.endomorphism(6).cohomology_action().map_err(|e| e.to_string())?.lefschetz;
        ensure!(lhs == Cyclo::integer(det_i_minus_b), "{b:?}: LHS {lhs} != det(I - A) = {det_i_minus_b}");
        let rhs = fixture.rhs(&RhsOptions::default()).map_err(|e| e.to_string())?;
        ensure!(rhs.orbits.len() == points, "{b:?}: {} fixed orbits, brute force finds {points}", rhs.orbits.len());
        ensure!(rhs.exact == Some(Cyclo::integer(classical_rhs)), "{b:?}: RHS {:?} != {classical_rhs}", rhs.exact);
        ensure!(points as i64 == det_i_minus_b.abs(), "{b:?}: {points} fixed points but |det| = {}", det_i_minus_b.abs());
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn criterion_3() -> Check {
    for v in [vec!["1", "alpha"], vec!["1", "alpha", "tau"], vec!["alpha", "1/3", "tau - 2"]] {
        let n = v.len();
        let expected: Vec<usize> = (0..n).map(|q| binomial(n - 1, q)).collect();
        for cutoff in [4, 8, 16] {
            let dims = FormSpace::new(&freq(&v), None, cutoff).map_err(|e| e.to_string())?.harmonic_dimensions();
            ensure!(dims == expected, "v = {v:?}, cutoff {cutoff}: {dims:?} != {expected:?}");
        }
    }
    Ok(())
}

fn criterion_4() -> Check {
    for f in torus_fixtures() {
        let e = f.endomorphism(8);
        let l = e.cohomology_action().map_err(|e| e.to_string())?.lefschetz.to_complex();
        for s in [0.1, 1.0, 10.0] {
            let h = e.heat_alternating(s).map_err(|e| e.to_string())?;
            ensure!((h - l).norm() <= 1e-8, "{} at s = {s}: {h} vs {l}", f.name);
        }
    }
    Ok(())
}

fn criterion_5() -> Check {
    let v = freq(&["0", "1", "alpha"]);
    let space = FormSpace::new(&v, None, 4).map_err(|e| e.to_string())?;
    let g = closure_of(&v).map_err(|e| e.to_string())?;
    let r = projector_suite(&space, &g, 50, 2024, 16, 20).map_err(|e| e.to_string())?;
    ensure!(r.sections == 50, "ran {} sections", r.sections);
    ensure!(r.idempotence <= 1e-10, "Av^2 - Av = {}", r.idempotence);
    ensure!(r.self_adjointness <= 1e-10, "self-adjointness defect {}", r.self_adjointness);
    ensure!(r.quadrature_agreement <= 1e-6, "filter vs quadrature {}", r.quadrature_agreement);

    let v = freq(&["0", "0", "1"]);
    let sigma = Symbolic::rational(q_frac(1, 2), 2);
    let space = FormSpace::new(&v, Some(&sigma), 4).map_err(|e| e.to_string())?;
    let (lifted, _) = closure_group(&v, Some(&SymbolicFrequency::new(vec![sigma], gens()).unwrap())).map_err(|e| e.to_string())?;
    let r = projector_suite(&space, &lifted, 50, 7, 16, 20).map_err(|e| e.to_string())?;
    ensure!(r.idempotence <= 1e-10 && r.self_adjointness <= 1e-10, "twisted projector defects {r:?}");
    ensure!(r.quadrature_agreement <= 1e-6, "twisted filter vs quadrature {}", r.quadrature_agreement);
    Ok(())
}

fn criterion_6() -> Check {
    let weights = freq(&["tau", "1", "2"]);
    let sphere = WeightedSphereModel::new(weights.clone()).map_err(|e| e.to_string())?;
    ensure!(sphere.group().dim() == 2, "closure group has dimension {}", sphere.group().dim());
    let orbit = sphere
        .orbit_through(&SpherePoint::new(vec![q(0), q(0), q(1)], vec![q(0), q(0), q_frac(1, 7)]))
        .map_err(|e| e.to_string())?;
    let components = orbit.isotropy.component_count();
    ensure!(components == 2, "isotropy at (0, 0, z3) has {components} components");
    let transversal = SubtorusGroup::from_basis(3, &vec![vec![0, 1, 2]]).map_err(|e| e.to_string())?;
    let count = intersection_count(&transversal, &orbit.isotropy_group).map_err(|e| e.to_string())?;
    ensure!(count == Some(2), "transversal circle meets the isotropy in {count:?} points");

    // the same count as sheets of the parametrizing covering for a lifted group
    let g = Generators::new(vec![
        Generator { name: "tau".into(), approx: std::f64::consts::PI },
        Generator { name: "s".into(), approx: std::f64::consts::E },
    ]);
    let v = SymbolicFrequency::parse(&["tau", "1", "2"], &g).unwrap();
    let sigma = SymbolicFrequency::parse(&["s"], &g).unwrap();
    let (lifted, hom) = closure_group(&v, Some(&sigma)).map_err(|e| e.to_string())?;
    let mut rows = hom.target.relation_lattice().clone();
    rows.push(vec![0, 0, 1]);
    let iso = ClosedSubgroup::new(3, &rows).map_err(|e| e.to_string())?;
    let circle = SubtorusGroup::from_basis(4, &vec![vec![0, 1, 2, 0]]).map_err(|e| e.to_string())?;
    let sheets = sheet_count(&circle, &lifted, &iso, 1).map_err(|e| e.to_string())?;
    ensure!(sheets == 2, "{sheets} sheets");
    Ok(())
}

fn criterion_7() -> Check {
    let t3 = Model::FlatTorus(FlatTorusModel::new(freq(&["0", "0", "1"])).unwrap());
    let t3_irr = Model::FlatTorus(FlatTorusModel::new(freq(&["0", "1", "alpha"])).unwrap());
    let translations = [
        (&t3, vec![q(0), q(0), q_frac(1, 3)]),
        (&t3, vec![q(0); 3]),
        (&t3_irr, vec![q(0), q_frac(1, 5), q_frac(2, 3)]),
        (&t3_irr, vec![q(0); 3]),
    ];
    for (model, c) in translations {
        let f = EquivariantMap::Affine(AffineMap::translation_by(&c));
        match lefschetz_rhs(model, &f, &[], &RhsOptions::default()) {
            Err(e) if e.is_transversality_failure() => {}
            Err(e) => return Err(format!("translation {c:?}: unexpected error {e}")),
            Ok(r) => return Err(format!("translation {c:?} produced RHS {}", r.value)),
        }
    }
    let sphere = WeightedSphereModel::new(freq(&["tau", "1", "2"])).unwrap();
    let f = EquivariantMap::Phase(PhaseMap::new(vec![q(0), q(0), q_frac(1, 5)]));
    let model = Model::WeightedSphere(sphere.clone());
    match lefschetz_rhs(&model, &f, &[], &RhsOptions::default()) {
        Err(e) if e.is_transversality_failure() => {}
        other => return Err(format!("S^5 phase map: {:?}", other.map(|r| r.value))),
    }
    ensure!(find_fixed_orbits(&model, &f).is_err(), "S^5 fixed orbits were enumerated");
    // the orbit through a point of the fixed stratum has a fixed radial normal direction
    let orbit = sphere
        .orbit_through(&SpherePoint::new(vec![q_frac(1, 3), q_frac(2, 3), q(0)], vec![q(0), q_frac(1, 4), q(0)]))
        .unwrap();
    match check_transversality(&model, &orbit, &f) {
        Err(Error::NonTransverse { .. }) => Ok(()),
        other => Err(format!("S^5 stratum orbit: {other:?}")),
    }
}

/// `Σ_{x: (a-1)x ≡ 0} 1/|a-1|` for `x ↦ a x` on the base circle.
fn scalar_oracle(a: i64) -> f64 {
    let d = (a - 1).abs();
    let fixed = (0..d).filter(|x| ((a - 1) * x).rem_euclid(d) == 0).count();
    fixed as f64 / d as f64
}

fn criterion_8() -> Check {
    let model = Model::FlatTorus(FlatTorusModel::new(freq(&["0", "1"])).unwrap());
    let config = MollifierConfig::new(8, 2048, DEFAULT_RADIUS).map_err(|e| e.to_string())?;
    for a in [2, 3] {
        let f = EquivariantMap::Affine(AffineMap::new(vec![vec![a, 0], vec![0, 1]], vec![q(0); 2]));
        let study = convergence_study(&model, &f, &config, &[8, 16, 32, 64], 0.05).map_err(|e| e.to_string())?;
        let oracle = scalar_oracle(a);
        ensure!((study.closed_form - oracle).abs() < 1e-12, "a = {a}: closed form {} vs oracle {oracle}", study.closed_form);
        let last = study.rows.last().unwrap();
        ensure!((last.value - oracle).abs() <= 0.05, "a = {a}: k = 64 pairing {}", last.value);
        ensure!(study.monotone, "a = {a}: error envelope not monotone: {:?}", study.rows);
    }
    Ok(())
}

fn criterion_9() -> Check {
    let variants = [
        RhsOptions { g0_shift: 1, ..Default::default() },
        RhsOptions { complement_twist: 2, ..Default::default() },
        RhsOptions { g0_shift: 1, complement_twist: 3, ..Default::default() },
    ];
    let compare = |name: &str, base: &RhsResult, other: &RhsResult| -> Check {
        ensure!(base.orbits.len() == other.orbits.len(), "{name}: orbit count changed");
        for (a, b) in base.orbits.iter().zip(&other.orbits) {
            ensure!((a.total - b.total).norm() <= 1e-10, "{name}: contribution {} vs {}", a.total, b.total);
            for (x, y) in a.per_degree.iter().zip(&b.per_degree) {
                let wx = x.isotropy_integral * to_f64(&x.weight());
                let wy = y.isotropy_integral * to_f64(&y.weight());
                ensure!((wx - wy).norm() <= 1e-10, "{name}: degree {} term {wx} vs {wy}", x.degree);
            }
        }
        Ok(())
    };
    for f in torus_fixtures() {
        let base = f.rhs(&RhsOptions::default()).map_err(|e| e.to_string())?;
        for opts in &variants {
            compare(f.name, &base, &f.rhs(opts).map_err(|e| e.to_string())?)?;
        }
    }
    let sphere = Model::WeightedSphere(WeightedSphereModel::new(freq(&["1", "2"])).unwrap());
    let f = EquivariantMap::Phase(PhaseMap::new(vec![q_frac(1, 5), q_frac(1, 3)]));
    let bundles = vec![
        Twist::trivial(2),
        Twist { weight: Symbolic::rational(q(1), 2), phi: Phi { modulus: q(2), turns: q_frac(1, 7) } },
        Twist { weight: gens().parse("alpha").unwrap(), phi: Phi::one() },
        Twist { weight: Symbolic::rational(q_frac(1, 2), 2), phi: lambda() },
    ];
    let base = lefschetz_rhs(&sphere, &f, &bundles, &RhsOptions::default()).map_err(|e| e.to_string())?;
    for opts in &variants {
        compare("S^3 weights (1, 2)", &base, &lefschetz_rhs(&sphere, &f, &bundles, opts).map_err(|e| e.to_string())?)?;
    }
    Ok(())
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("exact agreement of both sides on torus fixtures", criterion_1),
        ("classical reduction on T^2 x S^1", criterion_2),
        ("harmonic dimensions C(n-1, q), stable across cutoffs", criterion_3),
        ("heat-damped trace independent of s", criterion_4),
        ("averaging operator is an orthogonal projector", criterion_5),
        ("S^5 closure group, isotropy and sheet facts", criterion_6),
        ("transversality gating", criterion_7),
        ("mollifier convergence on doubling and tripling", criterion_8),
        ("choice invariance of orbit contributions", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("criterion {}: pass  {name} ({secs:.1}s)", i + 1),
            Err(msg) => {
                failures += 1;
                println!("criterion {}: FAIL  {name} ({secs:.1}s): {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
