//! The `analyze` pipeline: equilibrium, chart matrix, certificate search,
//! constant of motion, classification and pointwise checks.

use conserva_core::conservation::{
    certificate_matrix_from_coefficients, make_certificate_with_tol, ConservationCertificate,
    CERTIFICATE_TOL,
};
use conserva_core::dynamics::{
    check_identity_2_5, check_pushforward_5_1, conservation_drift, gradient_check,
    pointwise_orthogonality, FD_STEP,
};
use conserva_core::equilibrium::FEASIBILITY_TOL;
use conserva_core::linalg::mutual_projection_residual;
use conserva_core::systems::phi;
use conserva_core::{
    certificate_from_gauge, certificate_search_general, certificate_search_reduced, classify,
    formal_equilibrium_lv, formal_equilibrium_replicator, gauge_skew_symmetrizer, integrate,
    normalize_lv_equilibrium, verify_hamiltonian_pair, AffinePoint, CertificateFamily, Chart,
    ConstantOfMotion, Flow, GaugeOutcome, IntegratorConfig, RealMatrix, RealVector,
    ReplicatorSystem, SearchMethod, DEFAULT_RANK_TOL,
};
use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::exit::{Failure, EXIT_EMPTY_FAMILY, EXIT_INPUT, EXIT_NO_EQUILIBRIUM, EXIT_OK};
use crate::input::{matrix_rows, vector_vec, System, SystemFile};
use crate::report::{
    AnalysisReport, CertificatesReport, ClassificationReport, ConstantReport, DriftReport,
    EquilibriumReport, FamilyReport, GaugeReport, ReplicatorReport, RepresentativeReport, Settings,
    StatusReport, Tool, VerificationReport,
};

/// Box for random chart samples, `‖u‖_∞ ≤ 3`.
pub const SAMPLE_BOX: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    General,
    Reduced,
    Both,
}

impl MethodChoice {
    pub fn name(self) -> &'static str {
        match self {
            Self::General => "general",
            Self::Reduced => "reduced",
            Self::Both => "both",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub method: MethodChoice,
    pub rank_tol: f64,
    pub certificate_tol: f64,
    pub feasibility_tol: f64,
    pub samples: usize,
    pub seed: u64,
    /// Integrate the chart flow this long and report the drift of `H`.
    pub drift_t_end: Option<f64>,
    pub integrator_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            method: MethodChoice::Both,
            rank_tol: DEFAULT_RANK_TOL,
            certificate_tol: CERTIFICATE_TOL,
            feasibility_tol: FEASIBILITY_TOL,
            samples: 20,
            seed: 0,
            drift_t_end: None,
            integrator_tol: 1e-10,
        }
    }
}

impl AnalysisOptions {
    fn settings(&self) -> Settings {
        Settings {
            method: self.method.name(),
            rank_tol: self.rank_tol,
            certificate_tol: self.certificate_tol,
            feasibility_tol: self.feasibility_tol,
            samples: self.samples,
            seed: self.seed,
            fd_step: FD_STEP,
            drift_t_end: self.drift_t_end,
            integrator_tol: self.integrator_tol,
        }
    }
}

/// Everything downstream of the equilibrium step.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub system: System,
    /// Replicator form with zero last row.
    pub replicator: ReplicatorSystem,
    /// Replicator form as given (equal to `replicator` for LV input).
    pub original: ReplicatorSystem,
    pub q: AffinePoint,
    pub qprime: Option<RealVector>,
    pub b: RealMatrix,
    pub equilibrium: EquilibriumReport,
}

/// Result of the equilibrium step: either a usable `q` or a report
/// explaining why there is none.
pub enum Equilibrium {
    Found(Box<Prepared>),
    Missing(EquilibriumReport, String),
}

pub fn prepare(file: &SystemFile, opts: &AnalysisOptions) -> Result<Equilibrium, Failure> {
    let system = file.validate()?;
    let hint = file.equilibrium_hint();
    match &system {
        System::LotkaVolterra(lv) => {
            let eq = formal_equilibrium_lv(lv, opts.rank_tol)?;
            let feasible = eq.feasible_within(opts.feasibility_tol);
            let mut rep = EquilibriumReport::new("lotka_volterra", &eq, feasible);
            let qprime = match hint {
                Some(h) => {
                    let res = (lv.interaction() * &h + lv.growth()).amax();
                    if res > opts.feasibility_tol * eq.scale {
                        return Err(Failure::new(
                            EXIT_INPUT,
                            format!("equilibrium: hint is not a formal equilibrium (residual {res:.3e})"),
                        ));
                    }
                    rep.from_hint = true;
                    h
                }
                None if feasible => eq.representative.clone(),
                None => {
                    return Ok(Equilibrium::Missing(
                        rep,
                        format!(
                            "no formal equilibrium: A'q' = -r has residual {:.3e}",
                            eq.residual
                        ),
                    ))
                }
            };
            let q = match normalize_lv_equilibrium(&qprime) {
                Ok(q) => q,
                Err(e) => {
                    rep.q_prime = Some(vector_vec(&qprime));
                    return Ok(Equilibrium::Missing(rep, e.to_string()));
                }
            };
            rep.q_prime = Some(vector_vec(&qprime));
            rep.q = Some(vector_vec(q.as_vector()));
            let replicator = lv.to_replicator();
            let b = replicator.b_matrix();
            Ok(Equilibrium::Found(Box::new(Prepared {
                system: system.clone(),
                original: replicator.clone(),
                replicator,
                q,
                qprime: Some(qprime),
                b,
                equilibrium: rep,
            })))
        }
        System::Replicator(sys) => {
            let normalized = sys.normalized();
            let eq = formal_equilibrium_replicator(&normalized, opts.rank_tol)?;
            let feasible = eq.feasible_within(opts.feasibility_tol);
            let mut rep = EquilibriumReport::new("replicator", &eq, feasible);
            let q = match hint {
                Some(h) => {
                    let q =
                        AffinePoint::new(h).map_err(|e| Failure::from(e).context("equilibrium"))?;
                    let aq = normalized.payoff() * q.as_vector();
                    let res = aq.amax();
                    if res > opts.feasibility_tol * eq.scale {
                        return Err(Failure::new(
                            EXIT_INPUT,
                            format!("equilibrium: hint is not a formal equilibrium (residual {res:.3e})"),
                        ));
                    }
                    rep.from_hint = true;
                    q
                }
                None if feasible => AffinePoint::new(eq.representative.clone())?,
                None => {
                    return Ok(Equilibrium::Missing(
                        rep,
                        format!("no formal equilibrium: residual {:.3e}", eq.residual),
                    ))
                }
            };
            rep.q = Some(vector_vec(q.as_vector()));
            let b = normalized.b_matrix();
            Ok(Equilibrium::Found(Box::new(Prepared {
                system: system.clone(),
                original: sys.clone(),
                replicator: normalized,
                q,
                qprime: None,
                b,
                equilibrium: rep,
            })))
        }
    }
}

/// Output of the search step.
pub struct Search {
    pub general: Option<CertificateFamily>,
    pub reduced: Option<CertificateFamily>,
    pub report: CertificatesReport,
    pub certificate: Option<ConservationCertificate>,
}

pub fn search(p: &Prepared, opts: &AnalysisOptions) -> Result<Search, Failure> {
    let mut general = None;
    let mut reduced = None;
    let mut general_rep = None;
    let mut reduced_rep = None;
    if matches!(opts.method, MethodChoice::General | MethodChoice::Both) {
        let fam = certificate_search_general(&p.b, &p.q, opts.rank_tol)?;
        info!("general search: family dimension {}", fam.dimension());
        general_rep = Some(FamilyReport::from_family(&fam));
        general = Some(fam);
    }
    if matches!(opts.method, MethodChoice::Reduced | MethodChoice::Both) {
        match certificate_search_reduced(&p.replicator.sub_block(), &p.q, opts.rank_tol) {
            Ok(fam) => {
                info!("reduced search: family dimension {}", fam.dimension());
                reduced_rep = Some(FamilyReport::from_family(&fam));
                reduced = Some(fam);
            }
            Err(e) => {
                info!("reduced search unavailable: {e}");
                reduced_rep = Some(FamilyReport::failed(
                    SearchMethod::Reduced,
                    opts.rank_tol,
                    e.to_string(),
                ));
            }
        }
    }
    let agreement = match (&general, &reduced) {
        (Some(g), Some(r)) => Some(mutual_projection_residual(&g.span(), &r.span())),
        _ => None,
    };
    let chosen = general.as_ref().or(reduced.as_ref());
    let mut certificate = None;
    let mut representative = None;
    if let Some(fam) = chosen {
        if let Some(d) = fam.representative(&p.q) {
            let cert = make_certificate_with_tol(&d, &p.q, &p.b, opts.certificate_tol)?;
            representative = Some(RepresentativeReport {
                method: fam.method,
                d: matrix_rows(&cert.d),
                c: vector_vec(&cert.c),
                g: vector_vec(&cert.g),
                residuals: cert.residuals.into(),
            });
            certificate = Some(cert);
        }
    }
    Ok(Search {
        general,
        reduced,
        report: CertificatesReport {
            general: general_rep,
            reduced: reduced_rep,
            agreement,
            representative,
        },
        certificate,
    })
}

/// Chart the constant of motion is reported in for this input.
pub fn natural_chart(system: &System) -> Chart {
    match system {
        System::Replicator(_) => Chart::X,
        System::LotkaVolterra(_) => Chart::Y,
    }
}

pub fn chart_samples(dim: usize, count: usize, seed: u64) -> Vec<RealVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| RealVector::from_fn(dim, |_, _| rng.gen_range(-SAMPLE_BOX..=SAMPLE_BOX)))
        .collect()
}

fn gauge_report(
    p: &Prepared,
    general: Option<&CertificateFamily>,
) -> Result<Option<GaugeReport>, Failure> {
    let (System::LotkaVolterra(lv), Some(qprime)) = (&p.system, &p.qprime) else {
        return Ok(None);
    };
    Ok(Some(match gauge_skew_symmetrizer(lv.interaction()) {
        GaugeOutcome::Failed(f) => GaugeReport {
            found: false,
            weights: None,
            failure: Some(f.to_string()),
            constant_of_motion: None,
            general_span_residual: None,
        },
        GaugeOutcome::Found(dp) => {
            let (com, residual, failure) = if qprime.iter().all(|&v| v > 0.0) {
                let h = certificate_from_gauge(qprime, &dp)?;
                let d = certificate_matrix_from_coefficients(&h.c, &p.q)?;
                let residual = general.map(|g| g.projection_residual(&d));
                (Some(ConstantReport::from(&h)), residual, None)
            } else {
                (None, None, Some("gauge constant needs q' > 0".to_string()))
            };
            GaugeReport {
                found: true,
                weights: Some(vector_vec(&dp)),
                failure,
                constant_of_motion: com,
                general_span_residual: residual,
            }
        }
    }))
}

pub fn verification(
    p: &Prepared,
    cert: Option<&ConservationCertificate>,
    opts: &AnalysisOptions,
) -> Result<VerificationReport, Failure> {
    let m = p.q.len() - 1;
    let us = chart_samples(m, opts.samples, opts.seed);
    let xs: Vec<RealVector> = us.iter().map(phi).collect();
    let mut report = VerificationReport {
        samples: opts.samples,
        seed: opts.seed,
        identity_2_5_max: check_identity_2_5(&p.original, &us)?,
        pushforward_5_1_max: check_pushforward_5_1(&p.original, &xs)?,
        pointwise_orthogonality_max: None,
        gradient_check_max: None,
        hamiltonian_pair: None,
        drift: None,
    };
    if let Some(cert) = cert {
        let h = cert.constant_of_motion(Chart::U);
        report.pointwise_orthogonality_max = Some(pointwise_orthogonality(&p.b, cert, &us)?);
        report.gradient_check_max = Some(gradient_check(&h, &us)?);
        report.hamiltonian_pair = Some(verify_hamiltonian_pair(&p.b, &cert.d, &p.q, &us)?);
        if let Some(t_end) = opts.drift_t_end {
            let u0 = chart_samples(m, 1, opts.seed ^ 0x5eed).remove(0) * (1.0 / SAMPLE_BOX);
            let flow = Flow::XTilde {
                b: p.b.clone(),
                q: p.q.clone(),
            };
            let traj = integrate(
                &flow,
                &u0,
                &IntegratorConfig::adaptive(opts.integrator_tol, t_end),
            )?;
            let drift = conservation_drift(&traj, &h)?;
            report.drift = Some(DriftReport::new(
                flow.name(),
                t_end,
                vector_vec(&u0),
                traj.status.to_string(),
                traj.final_time(),
                drift,
            ));
        }
    }
    Ok(report)
}

/// Runs the whole pipeline. The report is produced for every parseable
/// input; the code says whether an equilibrium and a certificate were found.
pub fn analyze(file: &SystemFile, opts: &AnalysisOptions) -> Result<(AnalysisReport, u8), Failure> {
    let mut report = AnalysisReport {
        schema_version: crate::report::SCHEMA_VERSION,
        tool: Tool::default(),
        settings: opts.settings(),
        system: file.clone(),
        formal_equilibrium: EquilibriumReport {
            solved_for: "replicator",
            representative: Vec::new(),
            residual: 0.0,
            degrees_of_freedom: 0,
            basis: Vec::new(),
            feasible: false,
            from_hint: false,
            q: None,
            q_prime: None,
        },
        replicator: None,
        certificates: None,
        constant_of_motion: None,
        gauge: None,
        classification: None,
        verification: None,
        status: StatusReport {
            exit_code: EXIT_OK,
            message: "ok".into(),
        },
    };
    let p = match prepare(file, opts)? {
        Equilibrium::Missing(eq, msg) => {
            report.formal_equilibrium = eq;
            report.status = StatusReport {
                exit_code: EXIT_NO_EQUILIBRIUM,
                message: msg,
            };
            return Ok((report, EXIT_NO_EQUILIBRIUM));
        }
        Equilibrium::Found(p) => p,
    };
    debug!("q = {:?}", p.q.as_vector().as_slice());
    report.formal_equilibrium = p.equilibrium.clone();
    report.replicator = Some(ReplicatorReport {
        normalized_payoff: matrix_rows(p.replicator.payoff()),
        b_matrix: matrix_rows(&p.b),
    });

    let found = search(&p, opts)?;
    report.gauge = gauge_report(&p, found.general.as_ref())?;
    if let Some(cert) = &found.certificate {
        let h = cert.constant_of_motion(natural_chart(&p.system));
        report.constant_of_motion = Some(ConstantReport::from(&h));
        let cls = classify(&p.b, &cert.d, opts.rank_tol)?;
        report.classification = Some(ClassificationReport::from(&cls));
    }
    report.verification = Some(verification(&p, found.certificate.as_ref(), opts)?);
    report.certificates = Some(found.report);

    let code = if found.certificate.is_some() {
        EXIT_OK
    } else {
        report.status = StatusReport {
            exit_code: EXIT_EMPTY_FAMILY,
            message: "empty certificate family: no certificate found by this method".into(),
        };
        EXIT_EMPTY_FAMILY
    };
    Ok((report, code))
}

/// The representative constant of motion for an input, if any.
pub fn constant_for(
    file: &SystemFile,
    opts: &AnalysisOptions,
) -> Result<Option<(ConstantOfMotion, Box<Prepared>)>, Failure> {
    let Equilibrium::Found(p) = prepare(file, opts)? else {
        return Ok(None);
    };
    let found = search(&p, opts)?;
    Ok(found
        .certificate
        .map(|c| (c.constant_of_motion(Chart::U), p)))
}
