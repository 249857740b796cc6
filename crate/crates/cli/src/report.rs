//! Serializable report types. Matrices are row-major arrays of arrays.

use conserva_core::conservation::{CertificateFamily, ConditionResiduals};
use conserva_core::dirac::HamiltonianPairReport;
use conserva_core::dynamics::Drift;
use conserva_core::linalg::skew_residual;
use conserva_core::{
    Chart, ConstantOfMotion, EquilibriumResult, SearchMethod, StructureClassification,
};
use serde::Serialize;

use crate::input::{matrix_rows, vector_vec, SystemFile};

pub const SCHEMA_VERSION: u32 = 1;

pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for Tool {
    fn default() -> Self {
        Self {
            name: "conserva",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub method: &'static str,
    pub rank_tol: f64,
    pub certificate_tol: f64,
    pub feasibility_tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub drift_t_end: Option<f64>,
    pub integrator_tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    /// `"replicator"` (solves for `q`) or `"lotka_volterra"` (solves for `q'`).
    pub solved_for: &'static str,
    pub representative: Vec<f64>,
    pub residual: f64,
    pub degrees_of_freedom: usize,
    pub basis: Vec<Vec<f64>>,
    pub feasible: bool,
    pub from_hint: bool,
    /// Replicator equilibrium used downstream.
    pub q: Option<Vec<f64>>,
    /// Lotka-Volterra equilibrium used downstream.
    pub q_prime: Option<Vec<f64>>,
}

impl EquilibriumReport {
    pub fn new(solved_for: &'static str, eq: &EquilibriumResult, feasible: bool) -> Self {
        Self {
            solved_for,
            representative: vector_vec(&eq.representative),
            residual: eq.residual,
            degrees_of_freedom: eq.degrees_of_freedom,
            basis: eq.basis.iter().map(vector_vec).collect(),
            feasible,
            from_hint: false,
            q: None,
            q_prime: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residuals {
    pub skew: f64,
    pub offdiag: f64,
}

impl From<ConditionResiduals> for Residuals {
    fn from(r: ConditionResiduals) -> Self {
        Self {
            skew: r.skew,
            offdiag: r.offdiag,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub method: SearchMethod,
    pub dimension: usize,
    pub basis: Vec<Matrix>,
    /// Reduced method only: the `d` vectors with `D = Q̄₁ diag(d)`.
    pub coefficients: Vec<Vec<f64>>,
    pub residuals: Vec<Residuals>,
    pub rank_tolerance: f64,
    /// Set when the search could not run for this input.
    pub error: Option<String>,
    pub message: Option<String>,
}

impl FamilyReport {
    pub fn from_family(f: &CertificateFamily) -> Self {
        Self {
            method: f.method,
            dimension: f.dimension(),
            basis: f.basis.iter().map(matrix_rows).collect(),
            coefficients: f.coefficients.iter().map(vector_vec).collect(),
            residuals: f.residuals.iter().map(|&r| r.into()).collect(),
            rank_tolerance: f.rank_tolerance,
            error: None,
            message: f
                .is_empty()
                .then(|| "no certificate found by this method".to_string()),
        }
    }

    pub fn failed(method: SearchMethod, rank_tol: f64, error: String) -> Self {
        Self {
            method,
            dimension: 0,
            basis: Vec::new(),
            coefficients: Vec::new(),
            residuals: Vec::new(),
            rank_tolerance: rank_tol,
            error: Some(error),
            message: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RepresentativeReport {
    pub method: SearchMethod,
    pub d: Matrix,
    pub c: Vec<f64>,
    pub g: Vec<f64>,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificatesReport {
    pub general: Option<FamilyReport>,
    pub reduced: Option<FamilyReport>,
    /// Largest mutual projection residual between the two families.
    pub agreement: Option<f64>,
    pub representative: Option<RepresentativeReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantReport {
    pub chart: Chart,
    pub c: Vec<f64>,
    pub g: Vec<f64>,
    pub additive_constant: Option<f64>,
    pub formula: String,
}

/// Coefficients below this fraction of the largest one are round-off and
/// left out of the formula (they stay in `c` and `g`).
const FORMULA_CUTOFF: f64 = 1e-12;

fn trimmed(v: f64) -> String {
    let s = format!("{v:.12}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn coefficient_term(k: f64, body: &str, first: bool) -> String {
    let sign = if k < 0.0 { "-" } else { "+" };
    let mag = k.abs();
    let coef = if (mag - 1.0).abs() < 1e-12 {
        String::new()
    } else {
        format!("{}*", trimmed(mag))
    };
    if first {
        format!("{}{coef}{body}", if k < 0.0 { "-" } else { "" })
    } else {
        format!(" {sign} {coef}{body}")
    }
}

/// Human-readable form of `H` in its chart.
pub fn formula(h: &ConstantOfMotion) -> String {
    let n = h.dim() + 1;
    let log_body = |i: usize| match h.chart {
        Chart::U => format!("u{i}"),
        Chart::X => format!("log(x{i}/x{n})"),
        Chart::Y => format!("log y{i}"),
    };
    let lin_body = |i: usize| match h.chart {
        Chart::U => format!("exp(u{i})"),
        Chart::X => format!("x{i}/x{n}"),
        Chart::Y => format!("y{i}"),
    };
    let scale = h.c.amax().max(h.g.amax());
    let keep = |k: f64| k != 0.0 && k.abs() > FORMULA_CUTOFF * scale;
    let mut out = String::new();
    for (i, &c) in h.c.iter().enumerate() {
        if keep(c) {
            out.push_str(&coefficient_term(c, &log_body(i + 1), out.is_empty()));
        }
    }
    for (i, &g) in h.g.iter().enumerate() {
        if keep(g) {
            out.push_str(&coefficient_term(g, &lin_body(i + 1), out.is_empty()));
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

impl From<&ConstantOfMotion> for ConstantReport {
    fn from(h: &ConstantOfMotion) -> Self {
        Self {
            chart: h.chart,
            c: vector_vec(&h.c),
            g: vector_vec(&h.g),
            additive_constant: h.additive_constant,
            formula: formula(h),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GaugeReport {
    pub found: bool,
    pub weights: Option<Vec<f64>>,
    pub failure: Option<String>,
    pub constant_of_motion: Option<ConstantReport>,
    /// Distance of the gauge certificate from the general family's span.
    pub general_span_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub isotropic: bool,
    pub isotropy_residual: f64,
    pub maximal: bool,
    pub b_invertible: bool,
    pub dt_invertible: bool,
    pub class_label: String,
    pub labels: Vec<String>,
    pub presymplectic_matrix: Option<Matrix>,
    pub presymplectic_skew_residual: Option<f64>,
    pub poisson_matrix: Option<Matrix>,
    pub poisson_skew_residual: Option<f64>,
}

impl From<&StructureClassification> for ClassificationReport {
    fn from(c: &StructureClassification) -> Self {
        let skew = |m: &conserva_core::RealMatrix| skew_residual(m).unwrap_or(f64::NAN);
        Self {
            isotropic: c.isotropic,
            isotropy_residual: c.isotropy_residual,
            maximal: c.maximal,
            b_invertible: c.b_invertible,
            dt_invertible: c.dt_invertible,
            class_label: c.class_label.to_string(),
            labels: c.labels.iter().map(|l| l.to_string()).collect(),
            presymplectic_matrix: c.presymplectic_matrix.as_ref().map(matrix_rows),
            presymplectic_skew_residual: c.presymplectic_matrix.as_ref().map(skew),
            poisson_matrix: c.poisson_matrix.as_ref().map(matrix_rows),
            poisson_skew_residual: c.poisson_matrix.as_ref().map(skew),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftReport {
    pub flow: &'static str,
    pub t_end: f64,
    pub initial_state: Vec<f64>,
    pub status: String,
    pub final_time: f64,
    pub max_abs: f64,
    pub max_rel: f64,
}

impl DriftReport {
    pub fn new(
        flow: &'static str,
        t_end: f64,
        initial_state: Vec<f64>,
        status: String,
        final_time: f64,
        drift: Drift,
    ) -> Self {
        Self {
            flow,
            t_end,
            initial_state,
            status,
            final_time,
            max_abs: drift.max_abs,
            max_rel: drift.max_rel,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub samples: usize,
    pub seed: u64,
    pub identity_2_5_max: f64,
    pub pushforward_5_1_max: f64,
    pub pointwise_orthogonality_max: Option<f64>,
    pub gradient_check_max: Option<f64>,
    pub hamiltonian_pair: Option<HamiltonianPairReport>,
    pub drift: Option<DriftReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicatorReport {
    pub normalized_payoff: Matrix,
    pub b_matrix: Matrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatusReport {
    pub exit_code: u8,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub tool: Tool,
    pub settings: Settings,
    pub system: SystemFile,
    pub formal_equilibrium: EquilibriumReport,
    pub replicator: Option<ReplicatorReport>,
    pub certificates: Option<CertificatesReport>,
    pub constant_of_motion: Option<ConstantReport>,
    pub gauge: Option<GaugeReport>,
    pub classification: Option<ClassificationReport>,
    pub verification: Option<VerificationReport>,
    pub status: StatusReport,
}
