//! End-to-end pipeline and the JSON report.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::Result;
use crate::json;
use crate::linalg::{condition_number, tol_scale};
use crate::manifold::{
    invariance_residual, parity_check, reduce, solve_centre_manifold, CentreManifoldMap, ManifoldCoefficient,
    ParityReport, ReducedSystem, RESIDUAL_TOL,
};
use crate::poly::PolyMap;
use crate::spectral::{
    coordinate_names, eigen_split, linear_part, split_with_basis, to_eigenbasis, Eigenvalue, SpectralSplit,
    TransformedSystem, BLOCK_TOL, DEFAULT_ZERO_TOL,
};
use crate::stability::{
    classify_1d, classify_2d, default_r_max, radial_fixed_points, RadialAnalysis, StabilityVerdict, VerdictKind,
    DEFAULT_THETA_SAMPLES,
};
use crate::sysdsl::{shift_equilibrium, SystemSpec};

pub const SCHEMA_VERSION: u32 = 1;
pub const RECONSTRUCTION_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub order: u32,
    pub zero_tol: f64,
    /// Takes precedence over a `basis` stanza in the input.
    pub basis_override: Option<DMatrix<f64>>,
    pub theta_samples: usize,
    /// Defaults to [`default_r_max`].
    pub r_max: Option<f64>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            order: 2,
            zero_tol: DEFAULT_ZERO_TOL,
            basis_override: None,
            theta_samples: DEFAULT_THETA_SAMPLES,
            r_max: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisSource {
    Computed,
    Input,
    Override,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            tolerance,
            pass: value.is_finite() && value <= tolerance,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub input: SystemSpec,
    /// The input re-expanded about its declared equilibrium.
    pub shifted: SystemSpec,
    pub options: AnalysisOptions,
    pub basis_source: BasisSource,
    pub system: TransformedSystem,
    pub manifold: CentreManifoldMap,
    pub reduced: ReducedSystem,
    pub verdict: StabilityVerdict,
    pub radial: Option<RadialAnalysis>,
    pub parity: ParityReport,
    pub checks: Vec<Check>,
}

impl AnalysisReport {
    pub fn split(&self) -> &SpectralSplit {
        &self.system.split
    }

    pub fn status(&self) -> Status {
        if self.checks.iter().all(|c| c.pass) && self.all_finite() {
            Status::Ok
        } else {
            Status::Failed
        }
    }

    fn all_finite(&self) -> bool {
        let maps = [&self.system.nonlinear, &self.manifold.h, &self.reduced.field];
        let split = self.split();
        maps.iter().all(|m| {
            m.components()
                .iter()
                .all(|p| p.terms().all(|(_, v)| v.is_finite()))
        }) && split.basis.iter().chain(split.basis_inv.iter()).all(|v| v.is_finite())
            && self.verdict.leading_coefficient.is_finite()
    }

    pub fn to_json(&self) -> String {
        json::to_string_pretty(&self.view()).expect("report serializes")
    }

    fn view(&self) -> ReportView<'_> {
        let split = self.split();
        let coords = coordinate_names(split);
        let centre_names = &coords[..split.centre_dim];
        let render = |m: &PolyMap, names: &[String]| -> Vec<String> {
            m.components().iter().map(|p| p.display(names).to_string()).collect()
        };
        ReportView {
            schema_version: SCHEMA_VERSION,
            status: self.status(),
            input: InputView {
                sha256: self.input.digest(),
                canonical: self.input.render(),
                variables: &self.input.variables,
                equilibrium: self.input.equilibrium.as_deref(),
            },
            options: OptionsView {
                order: self.options.order,
                zero_tol: self.options.zero_tol,
                basis_source: self.basis_source,
                theta_samples: self.options.theta_samples,
            },
            spectrum: SpectrumView {
                centre_dim: split.centre_dim,
                stable_dim: split.stable_dim,
                eigenvalues: &split.eigenvalues,
                basis: rows(&split.basis),
                basis_inverse: rows(&split.basis_inv),
                centre_block: rows(&split.centre_block),
                stable_block: rows(&split.stable_block),
            },
            transformed: TransformedView {
                coordinates: coords.clone(),
                nonlinear: render(&self.system.nonlinear, &coords),
            },
            manifold: ManifoldView {
                order: self.manifold.order,
                h: render(&self.manifold.h, centre_names),
                coefficients: self.manifold.coefficients(),
            },
            reduced: ReducedView {
                order: self.reduced.order,
                field: render(&self.reduced.field, centre_names),
            },
            verdict: &self.verdict,
            radial: self.radial.as_ref(),
            parity: &self.parity,
            diagnostics: DiagnosticsView {
                basis_condition: condition_number(&split.basis),
                checks: &self.checks,
            },
        }
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct ReportView<'a> {
    schema_version: u32,
    status: Status,
    input: InputView<'a>,
    options: OptionsView,
    spectrum: SpectrumView<'a>,
    transformed: TransformedView,
    manifold: ManifoldView,
    reduced: ReducedView,
    verdict: &'a StabilityVerdict,
    radial: Option<&'a RadialAnalysis>,
    parity: &'a ParityReport,
    diagnostics: DiagnosticsView<'a>,
}

#[derive(Serialize)]
struct InputView<'a> {
    sha256: String,
    canonical: String,
    variables: &'a [String],
    equilibrium: Option<&'a [f64]>,
}

#[derive(Serialize)]
struct OptionsView {
    order: u32,
    zero_tol: f64,
    basis_source: BasisSource,
    theta_samples: usize,
}

#[derive(Serialize)]
struct SpectrumView<'a> {
    centre_dim: usize,
    stable_dim: usize,
    eigenvalues: &'a [Eigenvalue],
    basis: Vec<Vec<f64>>,
    basis_inverse: Vec<Vec<f64>>,
    centre_block: Vec<Vec<f64>>,
    stable_block: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct TransformedView {
    coordinates: Vec<String>,
    nonlinear: Vec<String>,
}

#[derive(Serialize)]
struct ManifoldView {
    order: u32,
    h: Vec<String>,
    coefficients: Vec<ManifoldCoefficient>,
}

#[derive(Serialize)]
struct ReducedView {
    order: u32,
    field: Vec<String>,
}

#[derive(Serialize)]
struct DiagnosticsView<'a> {
    basis_condition: f64,
    checks: &'a [Check],
}

fn verdict_for(red: &ReducedSystem, split: &SpectralSplit, theta_samples: usize) -> Result<StabilityVerdict> {
    match split.centre_dim {
        0 => {
            let worst = split
                .eigenvalues
                .iter()
                .map(|e| e.re)
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(StabilityVerdict {
                kind: VerdictKind::Stable,
                mechanism: "hyperbolic-stable".into(),
                leading_degree: 1,
                leading_coefficient: worst,
            })
        }
        1 => classify_1d(red),
        2 => classify_2d(red, theta_samples),
        _ => Ok(StabilityVerdict {
            kind: VerdictKind::Inconclusive,
            mechanism: "centre-dimension-above-two".into(),
            leading_degree: 0,
            leading_coefficient: 0.0,
        }),
    }
}

/// Shift, split, transform, solve, reduce and classify.
pub fn analyze(spec: &SystemSpec, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    let shifted = match &spec.equilibrium {
        Some(p) => shift_equilibrium(spec, p)?,
        None => spec.clone(),
    };
    let lin = linear_part(&shifted)?;
    let (split, basis_source) = match (&opts.basis_override, &spec.basis) {
        (Some(p), _) => (split_with_basis(&lin, p, opts.zero_tol)?, BasisSource::Override),
        (None, Some(p)) => (split_with_basis(&lin, p, opts.zero_tol)?, BasisSource::Input),
        (None, None) => (eigen_split(&lin, opts.zero_tol)?, BasisSource::Computed),
    };
    let system = to_eigenbasis(&shifted, &split)?;
    let manifold = solve_centre_manifold(&system, opts.order)?;
    let reduced = reduce(&system, &manifold);
    let verdict = verdict_for(&reduced, &split, opts.theta_samples)?;
    let radial = if split.centre_dim == 2 {
        let r_max = opts.r_max.unwrap_or_else(|| default_r_max(&reduced));
        Some(radial_fixed_points(&reduced, opts.theta_samples, r_max)?)
    } else {
        None
    };
    let parity = parity_check(&system, &manifold);

    let scale = tol_scale(&lin.matrix);
    let residual = invariance_residual(&system, &manifold, opts.order).max_abs_coeff();
    let checks = vec![
        Check::new("basis_reconstruction", split.reconstruction_error(), RECONSTRUCTION_TOL),
        Check::new("block_diagonal", split.block_error(&lin.matrix), BLOCK_TOL * scale),
        Check::new("invariance_residual", residual, RESIDUAL_TOL),
    ];
    Ok(AnalysisReport {
        input: spec.clone(),
        shifted,
        options: opts.clone(),
        basis_source,
        system,
        manifold,
        reduced,
        verdict,
        radial,
        parity,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::error::Error;
    use crate::stability::FixedPointClass;
    use crate::sysdsl::parse_system;
    use std::f64::consts::{PI, SQRT_2};

    fn run(src: &str) -> AnalysisReport {
        analyze(&parse_system(src).unwrap(), &AnalysisOptions::default()).unwrap()
    }

    #[test]
    fn protein_report() {
        let rep = run(cases::PROTEIN);
        assert_eq!(rep.basis_source, BasisSource::Input);
        assert_eq!(rep.status(), Status::Ok);
        assert!((rep.manifold.h.component(0).coeff(&[2]) + 0.25).abs() < 1e-14);
        assert_eq!(rep.verdict.kind, VerdictKind::Unstable);
        assert!((rep.verdict.leading_coefficient - 0.5).abs() < 1e-14);
        assert!(rep.radial.is_none());
        let json = rep.to_json();
        assert!(json.contains("\"status\": \"OK\""));
        assert!(json.contains("\"value\": -2.5000000000000000e-1"));
        assert!(json.contains("\"kind\": \"unstable\""));
        assert!(json.contains("0.5*u1^2"), "{json}");
    }

    #[test]
    fn generic3d_report() {
        let rep = run(cases::GENERIC3D);
        assert_eq!(rep.basis_source, BasisSource::Computed);
        assert_eq!(rep.status(), Status::Ok);
        let ray = rep.radial.as_ref().unwrap().nearest_ray(7.0 * PI / 4.0).unwrap();
        let fp = ray.fixed_points[1];
        assert!((fp.r - SQRT_2).abs() < 1e-8);
        assert_eq!(fp.class, FixedPointClass::Source);
        let json = rep.to_json();
        assert!(json.contains("\"radial\": {"));
        assert!(json.contains("\"schema_version\": 1"));
    }

    #[test]
    fn override_beats_input_basis() {
        let spec = parse_system(cases::PROTEIN).unwrap();
        let opts = AnalysisOptions {
            basis_override: Some(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, -4.0, 0.0])),
            ..Default::default()
        };
        let rep = analyze(&spec, &opts).unwrap();
        assert_eq!(rep.basis_source, BasisSource::Override);
        // u_old = 2 u_new, so the quadratic coefficient of h quadruples
        assert!((rep.manifold.h.component(0).coeff(&[2]) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn equilibrium_is_shifted_first() {
        let rep = run("vars x y\ndx/dt = (x - 1)^2 - (x - 1)*y\ndy/dt = -y + (x - 1)^2\nequilibrium 1 0");
        assert_eq!(rep.split().centre_dim, 1);
        assert_eq!(rep.verdict.kind, VerdictKind::Unstable);
        let err = analyze(
            &parse_system("vars x\ndx/dt = x^2 - 1\nequilibrium 2").unwrap(),
            &AnalysisOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotEquilibrium { .. }));
    }

    #[test]
    fn hyperbolic_sink() {
        let rep = run("vars x y\ndx/dt = -x + y^2\ndy/dt = -2*y");
        assert_eq!(rep.split().centre_dim, 0);
        assert_eq!(rep.verdict.mechanism, "hyperbolic-stable");
        assert_eq!(rep.status(), Status::Ok);
    }

    #[test]
    fn positive_eigenvalue_is_an_error() {
        let err = analyze(&parse_system("vars x\ndx/dt = x").unwrap(), &AnalysisOptions::default()).unwrap_err();
        assert!(err.to_string().starts_with("spectral: unsupported spectrum"));
    }

    #[test]
    fn failing_check_marks_report() {
        let mut rep = run(cases::PROTEIN);
        rep.checks.push(Check::new("synthetic", 1.0, 0.5));
        assert_eq!(rep.status(), Status::Failed);
        assert!(rep.to_json().contains("\"status\": \"FAILED\""));
    }

    #[test]
    fn json_is_deterministic() {
        for (_, src) in cases::ALL {
            assert_eq!(run(src).to_json(), run(src).to_json());
        }
    }
}
