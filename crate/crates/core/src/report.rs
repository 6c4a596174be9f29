//! Verification reports, rendered as JSON and as aligned text tables from one structure.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::averaging::projector_suite;
use crate::basic_complex::FormSpace;
use crate::endomorphism::{validate_equivariance, EquivarianceCertificate, EquivariantMap, Endomorphism};
use crate::error::{Error, Result};
use crate::exact::{fmt_rational, Cyclo};
use crate::fixed_point::{lefschetz_rhs, RhsOptions, RhsResult};
use crate::geometry::Model;
use crate::mollifier::{convergence_study, MollifierConfig};
use crate::scenario::{MollifierSpec, Resolved, Scenario};
use crate::symbolic::SymbolicFrequency;
use crate::torus_group::closure_group;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const SPECTRUM_ROWS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Validate,
    Lhs,
    Rhs,
    Verify,
    Spectrum,
    Avcheck,
    Mollifier,
}

impl Command {
    pub const ALL: [Command; 7] =
        [Command::Validate, Command::Lhs, Command::Rhs, Command::Verify, Command::Spectrum, Command::Avcheck, Command::Mollifier];

    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Lhs => "lhs",
            Command::Rhs => "rhs",
            Command::Verify => "verify",
            Command::Spectrum => "spectrum",
            Command::Avcheck => "avcheck",
            Command::Mollifier => "mollifier",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Command-line overrides of scenario settings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub cutoff: Option<i64>,
    pub grid: Option<usize>,
    pub tolerance: Option<f64>,
}

/// Twelve significant digits.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    format!("{x:.11e}")
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ComplexValue {
    pub re: String,
    pub im: String,
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        Self { re: num(z.re), im: num(z.im) }
    }
}

impl ComplexValue {
    fn short(&self) -> String {
        if self.im == "0" {
            self.re.clone()
        } else {
            format!("{} {}i", self.re, if self.im.starts_with('-') { self.im.clone() } else { format!("+{}", self.im) })
        }
    }
}

fn exact_string(c: &Cyclo) -> String {
    c.as_rational().map(|x| fmt_rational(&x)).unwrap_or_else(|| c.to_string())
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct HarmonicRow {
    pub cutoff: i64,
    pub dimensions: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TraceRow {
    pub degree: usize,
    pub exact: String,
    pub value: ComplexValue,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LhsSection {
    pub cutoff: i64,
    pub traces: Vec<TraceRow>,
    pub exact: String,
    pub value: ComplexValue,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct DegreeRow {
    pub degree: usize,
    pub sheets: u64,
    pub haar_factor: String,
    pub det: String,
    pub trace: ComplexValue,
    pub isotropy_integral: ComplexValue,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct OrbitRow {
    pub id: usize,
    pub base_point: String,
    pub g0: Vec<String>,
    pub isotropy_components: usize,
    pub conormal_dim: usize,
    pub component_dets: Vec<String>,
    pub per_degree: Vec<DegreeRow>,
    pub contribution: ComplexValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contribution_exact: Option<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RhsSection {
    pub orbits: Vec<OrbitRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    pub value: ComplexValue,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Discrepancy {
    pub value: String,
    pub tolerance: String,
    pub exact_equal: Option<bool>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct HeatRow {
    pub s: String,
    pub value: ComplexValue,
    pub deviation: String,
    pub tolerance: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EigenRow {
    pub eigenvalue: String,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SpectrumSection {
    pub cutoff: i64,
    pub degrees: Vec<Vec<EigenRow>>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct AveragingSection {
    pub sections: usize,
    pub idempotence: String,
    pub self_adjointness: String,
    pub lie_kernel: bool,
    pub commutes_with_d: String,
    pub equivariance: String,
    pub quadrature_agreement: String,
    pub quadrature_tolerance: String,
    pub resolution: usize,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct MollifierRow {
    pub k: u32,
    pub grid: usize,
    pub value: String,
    pub error: String,
    pub quadrature_error: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct MollifierSection {
    pub closed_form: String,
    pub tolerance: String,
    pub normalization: String,
    pub normalization_residual: String,
    pub rows: Vec<MollifierRow>,
    pub monotone: bool,
    pub csv: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Report {
    pub version: String,
    pub command: String,
    pub scenario: Scenario,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equivariance: Option<EquivarianceCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub harmonic_dimensions: Option<Vec<HarmonicRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs: Option<LhsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs: Option<RhsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<Discrepancy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heat: Option<Vec<HeatRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub averaging: Option<AveragingSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mollifier: Option<MollifierSection>,
    pub verdicts: BTreeMap<String, String>,
    pub verdict: String,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

fn verdict(ok: bool) -> String {
    if ok { "pass" } else { "fail" }.into()
}

fn torus_space(r: &Resolved, cutoff: i64) -> Result<FormSpace> {
    let weight = r.twist.as_ref().map(|t| &t.weight).filter(|w| !w.is_zero());
    FormSpace::new(r.model.flow(), weight, cutoff)
}

fn endomorphism(r: &Resolved, space: FormSpace) -> Result<Endomorphism> {
    let EquivariantMap::Affine(a) = &r.map else {
        return Err(Error::Unsupported("the basic complex is implemented for flat tori".into()));
    };
    let phi = r.twist.as_ref().map(|t| t.phi.clone()).unwrap_or_else(crate::endomorphism::Phi::one);
    Ok(Endomorphism::new(space, a.clone(), phi))
}

fn require_torus(r: &Resolved, what: &str) -> Result<()> {
    match r.model {
        Model::FlatTorus(_) => Ok(()),
        Model::WeightedSphere(_) => Err(Error::Unsupported(format!("{what} is implemented for flat_torus scenarios only"))),
    }
}

fn rhs_section(rhs: &RhsResult) -> RhsSection {
    let orbits = rhs
        .orbits
        .iter()
        .enumerate()
        .map(|(i, c)| OrbitRow {
            id: i + 1,
            base_point: c.orbit.base_point.label(),
            g0: c.g0.iter().map(fmt_rational).collect(),
            isotropy_components: c.orbit.isotropy.component_count(),
            conormal_dim: c.certificate.conormal_dim,
            component_dets: c
                .certificate
                .components
                .iter()
                .map(|d| d.det_exact.map(|x| x.to_string()).unwrap_or_else(|| num(d.det)))
                .collect(),
            per_degree: c
                .per_degree
                .iter()
                .map(|t| DegreeRow {
                    degree: t.degree,
                    sheets: t.sheets,
                    haar_factor: fmt_rational(&t.haar_factor),
                    det: num(t.det_value),
                    trace: t.trace_value.into(),
                    isotropy_integral: t.isotropy_integral.into(),
                })
                .collect(),
            contribution: c.total.into(),
            contribution_exact: c.total_exact.as_ref().map(exact_string),
        })
        .collect();
    RhsSection { orbits, exact: rhs.exact.as_ref().map(exact_string), value: rhs.value.into() }
}

/// Runs one command. Transversality failures and non-equivariant maps are
/// returned as errors; discrepancies produce a report with a failing verdict.
pub fn run(command: Command, scenario: &Scenario, overrides: &Overrides) -> Result<Report> {
    let resolved = scenario.resolve()?;
    let tol = &scenario.tolerances;
    let cutoff = overrides.cutoff.unwrap_or_else(|| *scenario.cutoffs.iter().max().expect("validated nonempty"));
    let mut report = Report {
        version: VERSION.into(),
        command: command.name().into(),
        scenario: scenario.clone(),
        equivariance: None,
        harmonic_dimensions: None,
        lhs: None,
        rhs: None,
        discrepancy: None,
        heat: None,
        spectrum: None,
        averaging: None,
        mollifier: None,
        verdicts: BTreeMap::new(),
        verdict: String::new(),
    };
    let twist = match resolved.model {
        Model::FlatTorus(_) => resolved.twist.as_ref(),
        Model::WeightedSphere(_) => None,
    };
    report.equivariance = Some(validate_equivariance(&resolved.model, &resolved.map, twist)?);
    report.verdicts.insert("equivariance".into(), verdict(true));

    let mut rhs_value = None;
    if matches!(command, Command::Rhs | Command::Verify) {
        let rhs = lefschetz_rhs(&resolved.model, &resolved.map, &resolved.rhs_bundles(), &RhsOptions::default())?;
        report.verdicts.insert("transversality".into(), verdict(true));
        report.rhs = Some(rhs_section(&rhs));
        rhs_value = Some(rhs);
    }

    let wants_lhs = matches!(command, Command::Lhs | Command::Verify);
    let mut lhs_value = None;
    if wants_lhs {
        require_torus(&resolved, "the left-hand side")?;
        let mut cutoffs = scenario.cutoffs.clone();
        if !cutoffs.contains(&cutoff) {
            cutoffs.push(cutoff);
        }
        cutoffs.sort_unstable();
        let rows = cutoffs
            .iter()
            .map(|&c| Ok(HarmonicRow { cutoff: c, dimensions: torus_space(&resolved, c)?.harmonic_dimensions() }))
            .collect::<Result<Vec<_>>>()?;
        let stable = rows.windows(2).all(|w| w[0].dimensions == w[1].dimensions);
        report.verdicts.insert("harmonic_stability".into(), verdict(stable));
        report.harmonic_dimensions = Some(rows);

        let e = endomorphism(&resolved, torus_space(&resolved, cutoff)?)?;
        let action = e.cohomology_action()?;
        let value = action.lefschetz.to_complex();
        report.lhs = Some(LhsSection {
            cutoff,
            traces: action
                .traces
                .iter()
                .enumerate()
                .map(|(d, t)| TraceRow { degree: d, exact: exact_string(t), value: t.to_complex().into() })
                .collect(),
            exact: exact_string(&action.lefschetz),
            value: value.into(),
        });
        let mut heat_ok = true;
        let rows = scenario
            .heat_times
            .iter()
            .map(|&s| {
                let h = e.heat_alternating(s)?;
                let dev = (h - value).norm();
                heat_ok &= dev <= tol.heat;
                Ok(HeatRow { s: num(s), value: h.into(), deviation: num(dev), tolerance: num(tol.heat) })
            })
            .collect::<Result<Vec<_>>>()?;
        report.verdicts.insert("heat_trace".into(), verdict(heat_ok));
        report.heat = Some(rows);
        lhs_value = Some(action.lefschetz);
    }

    if let Some((lhs, rhs)) = lhs_value.as_ref().zip(rhs_value.as_ref()) {
        let tolerance = overrides.tolerance.unwrap_or(tol.formula);
        let gap = (lhs.to_complex() - rhs.value).norm();
        let exact_equal = rhs.exact.as_ref().map(|e| e == lhs);
        report.verdicts.insert("formula".into(), verdict(gap <= tolerance && exact_equal != Some(false)));
        report.discrepancy = Some(Discrepancy { value: num(gap), tolerance: num(tolerance), exact_equal });
    }

    if command == Command::Spectrum {
        require_torus(&resolved, "the spectrum")?;
        let space = torus_space(&resolved, cutoff)?;
        let degrees = (0..=space.top())
            .map(|d| {
                space
                    .spectrum(d)
                    .into_iter()
                    .take(SPECTRUM_ROWS)
                    .map(|(ev, m)| EigenRow { eigenvalue: num(ev), multiplicity: m })
                    .collect()
            })
            .collect();
        report.spectrum = Some(SpectrumSection { cutoff, degrees });
    }

    if command == Command::Avcheck {
        require_torus(&resolved, "the averaging check")?;
        let space = torus_space(&resolved, cutoff)?;
        let flow = resolved.model.flow();
        let weight = match space.twist() {
            w if w.is_zero() => None,
            w => Some(SymbolicFrequency::new(vec![w.clone()], flow.generators().clone())?),
        };
        let (lifted, _) = closure_group(flow, weight.as_ref())?;
        let resolution = overrides.grid.unwrap_or(16);
        let r = projector_suite(&space, &lifted, 50, 7, resolution, 20)?;
        let quad_tol = overrides.tolerance.unwrap_or(tol.averaging);
        let ok = r.idempotence <= 1e-10 && r.self_adjointness <= 1e-10 && r.lie_kernel && r.commutes_with_d <= 1e-10 && r.equivariance <= 1e-10;
        report.verdicts.insert("projector".into(), verdict(ok));
        report.verdicts.insert("quadrature".into(), verdict(r.quadrature_agreement <= quad_tol));
        report.averaging = Some(AveragingSection {
            sections: r.sections,
            idempotence: num(r.idempotence),
            self_adjointness: num(r.self_adjointness),
            lie_kernel: r.lie_kernel,
            commutes_with_d: num(r.commutes_with_d),
            equivariance: num(r.equivariance),
            quadrature_agreement: num(r.quadrature_agreement),
            quadrature_tolerance: num(quad_tol),
            resolution,
        });
    }

    if command == Command::Mollifier {
        require_torus(&resolved, "the mollifier study")?;
        if resolved.twist.as_ref().is_some_and(|t| !t.weight.is_zero() || t.phi != crate::endomorphism::Phi::one()) {
            return Err(Error::Unsupported("the mollifier study pairs scalar functions; remove the twist".into()));
        }
        let spec = scenario.mollifier.clone().unwrap_or_else(MollifierSpec::default);
        let ks = if spec.k.is_empty() { MollifierSpec::default().k } else { spec.k.clone() };
        let config = MollifierConfig::new(ks[0], overrides.grid.unwrap_or(spec.grid), spec.radius)?;
        let tolerance = overrides.tolerance.unwrap_or(tol.mollifier);
        let study = convergence_study(&resolved.model, &resolved.map, &config, &ks, tolerance)?;
        report.verdicts.insert("monotone_envelope".into(), verdict(study.monotone));
        report.verdicts.insert("convergence".into(), verdict(study.converged));
        report.mollifier = Some(MollifierSection {
            closed_form: num(study.closed_form),
            tolerance: num(tolerance),
            normalization: num(config.normalization),
            normalization_residual: num(config.normalization_residual),
            rows: study
                .rows
                .iter()
                .map(|r| MollifierRow { k: r.k, grid: r.grid, value: num(r.value), error: num(r.error), quadrature_error: num(r.quadrature_error) })
                .collect(),
            monotone: study.monotone,
            csv: study.to_csv(),
        });
    }

    report.verdict = verdict(report.verdicts.values().all(|v| v == "pass"));
    Ok(report)
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    fn render(&self, out: &mut String) {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let _ = writeln!(out, "  {}", line(&self.header));
        let _ = writeln!(out, "  {}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        for r in &self.rows {
            let _ = writeln!(out, "  {}", line(r));
        }
    }
}

/// Human-readable rendering of a report.
pub fn render_text(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "equilef {} {}: {}", r.version, r.command, r.scenario.name);
    if let Some(e) = &r.equivariance {
        let _ = writeln!(out, "\nequivariance: {} (cochain map on basic sections: {}, on all sections: {})", e.flow_preserved, e.cochain_on_basic, e.cochain_on_all);
    }
    if let Some(rows) = &r.harmonic_dimensions {
        let _ = writeln!(out, "\nharmonic dimensions");
        let mut t = Table::new(&["cutoff", "dims by degree"]);
        for h in rows {
            t.row(vec![h.cutoff.to_string(), format!("{:?}", h.dimensions)]);
        }
        t.render(&mut out);
    }
    if let Some(l) = &r.lhs {
        let _ = writeln!(out, "\nleft-hand side (cutoff {})", l.cutoff);
        let mut t = Table::new(&["degree", "trace", "value"]);
        for tr in &l.traces {
            t.row(vec![tr.degree.to_string(), tr.exact.clone(), tr.value.short()]);
        }
        t.render(&mut out);
        let _ = writeln!(out, "  L = {} = {}", l.exact, l.value.short());
    }
    if let Some(rhs) = &r.rhs {
        let _ = writeln!(out, "\nfixed orbits");
        let mut t = Table::new(&["orbit", "point", "g0", "isotropy", "degree", "sheets", "haar", "det", "trace", "integral"]);
        for o in &rhs.orbits {
            for (i, d) in o.per_degree.iter().enumerate() {
                let head = if i == 0 {
                    vec![o.id.to_string(), o.base_point.clone(), format!("({})", o.g0.join(", ")), o.isotropy_components.to_string()]
                } else {
                    vec![String::new(); 4]
                };
                let mut cells = head;
                cells.extend([d.degree.to_string(), d.sheets.to_string(), d.haar_factor.clone(), d.det.clone(), d.trace.short(), d.isotropy_integral.short()]);
                t.row(cells);
            }
        }
        t.render(&mut out);
        let mut c = Table::new(&["orbit", "contribution", "exact"]);
        for o in &rhs.orbits {
            c.row(vec![o.id.to_string(), o.contribution.short(), o.contribution_exact.clone().unwrap_or_default()]);
        }
        c.render(&mut out);
        let _ = writeln!(out, "  RHS = {}{}", rhs.exact.as_ref().map(|e| format!("{e} = ")).unwrap_or_default(), rhs.value.short());
    }
    if let Some(d) = &r.discrepancy {
        let exact = match d.exact_equal {
            Some(true) => ", exact equality",
            Some(false) => ", exact values differ",
            None => "",
        };
        let _ = writeln!(out, "\ndiscrepancy |LHS - RHS| = {} (tolerance {}{exact})", d.value, d.tolerance);
    }
    if let Some(rows) = &r.heat {
        let _ = writeln!(out, "\nheat-damped alternating trace");
        let mut t = Table::new(&["s", "value", "deviation", "tolerance"]);
        for h in rows {
            t.row(vec![h.s.clone(), h.value.short(), h.deviation.clone(), h.tolerance.clone()]);
        }
        t.render(&mut out);
    }
    if let Some(s) = &r.spectrum {
        let _ = writeln!(out, "\nlowest eigenvalues of P_q (cutoff {})", s.cutoff);
        let mut t = Table::new(&["degree", "eigenvalue", "multiplicity"]);
        for (d, rows) in s.degrees.iter().enumerate() {
            for e in rows {
                t.row(vec![d.to_string(), e.eigenvalue.clone(), e.multiplicity.to_string()]);
            }
        }
        t.render(&mut out);
    }
    if let Some(a) = &r.averaging {
        let _ = writeln!(out, "\naveraging operator ({} random sections, quadrature resolution {})", a.sections, a.resolution);
        let mut t = Table::new(&["property", "max deviation"]);
        t.row(vec!["Av^2 = Av".into(), a.idempotence.clone()]);
        t.row(vec!["self-adjoint".into(), a.self_adjointness.clone()]);
        t.row(vec!["Av D = D Av".into(), a.commutes_with_d.clone()]);
        t.row(vec!["translation equivariance".into(), a.equivariance.clone()]);
        t.row(vec!["filter vs quadrature".into(), format!("{} (tolerance {})", a.quadrature_agreement, a.quadrature_tolerance)]);
        t.row(vec!["image in ker L".into(), a.lie_kernel.to_string()]);
        t.render(&mut out);
    }
    if let Some(m) = &r.mollifier {
        let _ = writeln!(out, "\nmollifier pairing (closed form {}, tolerance {}, normalization {} ± {})", m.closed_form, m.tolerance, m.normalization, m.normalization_residual);
        let mut t = Table::new(&["k", "grid", "value", "error", "quadrature error"]);
        for row in &m.rows {
            t.row(vec![row.k.to_string(), row.grid.to_string(), row.value.clone(), row.error.clone(), row.quadrature_error.clone()]);
        }
        t.render(&mut out);
    }
    let _ = writeln!(out, "\nverdicts");
    let mut t = Table::new(&["check", "result"]);
    for (k, v) in &r.verdicts {
        t.row(vec![k.clone(), v.clone()]);
    }
    t.render(&mut out);
    let _ = writeln!(out, "verdict: {}", r.verdict);
    out
}
