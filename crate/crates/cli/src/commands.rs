//! `convert`, `classify` and `check`.

use std::path::Path;

use conserva_core::conservation::make_certificate_with_tol;
use conserva_core::dynamics::{check_identity_2_5, check_pushforward_5_1};
use conserva_core::systems::{phi, psi};
use conserva_core::{classify, normalize_lv_equilibrium, RealVector};
use serde::Serialize;

use crate::analysis::{chart_samples, prepare, search, verification, AnalysisOptions, Equilibrium};
use crate::exit::{Failure, EXIT_EMPTY_FAMILY, EXIT_INPUT, EXIT_NO_EQUILIBRIUM, EXIT_OK};
use crate::input::{read_certificate, vector_vec, PairFile, System, SystemFile, SystemKind};
use crate::report::{ClassificationReport, Residuals, VerificationReport, SCHEMA_VERSION};

/// Label given to the reference strategy added when a Lotka-Volterra
/// system is written as a replicator system.
pub const REFERENCE_LABEL: &str = "reference";

pub fn convert(file: &SystemFile, to: SystemKind) -> Result<SystemFile, Failure> {
    let system = file.validate()?;
    let mut out = match (&system, to) {
        (System::Replicator(s), SystemKind::Replicator) => {
            SystemFile::from_replicator(&s.normalized())
        }
        (System::Replicator(s), SystemKind::LotkaVolterra) => {
            SystemFile::from_lotka_volterra(&s.to_lotka_volterra()?)
        }
        (System::LotkaVolterra(lv), SystemKind::Replicator) => {
            SystemFile::from_replicator(&lv.to_replicator())
        }
        (System::LotkaVolterra(lv), SystemKind::LotkaVolterra) => {
            SystemFile::from_lotka_volterra(lv)
        }
    };
    out.equilibrium = match (file.kind, to, file.equilibrium_hint()) {
        (_, _, None) => None,
        (a, b, Some(q)) if a == b => Some(vector_vec(&q)),
        (SystemKind::LotkaVolterra, _, Some(qp)) => {
            Some(vector_vec(normalize_lv_equilibrium(&qp)?.as_vector()))
        }
        (SystemKind::Replicator, _, Some(q)) => Some(vector_vec(&psi(&q)?)),
    };
    out.labels = match (&file.labels, file.kind, to) {
        (None, _, _) => None,
        (Some(l), a, b) if a == b => Some(l.clone()),
        (Some(l), SystemKind::LotkaVolterra, _) => {
            let mut l = l.clone();
            l.push(REFERENCE_LABEL.to_string());
            Some(l)
        }
        (Some(l), SystemKind::Replicator, _) => Some(l[..l.len() - 1].to_vec()),
    };
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyOutput {
    pub schema_version: u32,
    /// `"pair"`, `"certificate"` or `"search"`.
    pub source: &'static str,
    pub certificate_residuals: Option<Residuals>,
    pub classification: ClassificationReport,
}

/// Classifies a raw `{"b", "d"}` pair, or a system with a supplied or
/// searched certificate.
pub fn classify_input(
    text: &str,
    certificate: Option<&Path>,
    opts: &AnalysisOptions,
) -> Result<(ClassifyOutput, u8), Failure> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| {
        Failure::new(
            EXIT_INPUT,
            format!("line {}, column {}: {e}", e.line(), e.column()),
        )
    })?;
    if value.get("kind").is_none() {
        let pair: PairFile = serde_json::from_value(value).map_err(|e| {
            Failure::new(
                EXIT_INPUT,
                format!("expected a system file or a {{\"b\", \"d\"}} pair: {e}"),
            )
        })?;
        let (b, d) = pair.matrices()?;
        let cls = classify(&b, &d, opts.rank_tol)?;
        return Ok((
            ClassifyOutput {
                schema_version: SCHEMA_VERSION,
                source: "pair",
                certificate_residuals: None,
                classification: ClassificationReport::from(&cls),
            },
            EXIT_OK,
        ));
    }
    let file: SystemFile =
        serde_json::from_value(value).map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))?;
    let p = match prepare(&file, opts)? {
        Equilibrium::Found(p) => p,
        Equilibrium::Missing(_, msg) => return Err(Failure::new(EXIT_NO_EQUILIBRIUM, msg)),
    };
    let (cert, source) = match certificate {
        Some(path) => {
            let d = read_certificate(path, p.b.nrows())?;
            (
                make_certificate_with_tol(&d, &p.q, &p.b, opts.certificate_tol)?,
                "certificate",
            )
        }
        None => match search(&p, opts)?.certificate {
            Some(c) => (c, "search"),
            None => {
                return Err(Failure::new(
                    EXIT_EMPTY_FAMILY,
                    "empty certificate family: nothing to classify",
                ))
            }
        },
    };
    let cls = classify(&p.b, &cert.d, opts.rank_tol)?;
    Ok((
        ClassifyOutput {
            schema_version: SCHEMA_VERSION,
            source,
            certificate_residuals: Some(cert.residuals.into()),
            classification: ClassificationReport::from(&cls),
        },
        EXIT_OK,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutput {
    pub schema_version: u32,
    pub verification: VerificationReport,
}

/// Identity checks at seeded random samples; the certificate-dependent
/// checks run when a certificate exists.
pub fn check(file: &SystemFile, opts: &AnalysisOptions) -> Result<CheckOutput, Failure> {
    let verification = match prepare(file, opts)? {
        Equilibrium::Found(p) => {
            let cert = search(&p, opts)?.certificate;
            verification(&p, cert.as_ref(), opts)?
        }
        Equilibrium::Missing(..) => {
            let sys = match file.validate()? {
                System::Replicator(s) => s,
                System::LotkaVolterra(lv) => lv.to_replicator(),
            };
            let us = chart_samples(sys.n() - 1, opts.samples, opts.seed);
            let xs: Vec<RealVector> = us.iter().map(phi).collect();
            VerificationReport {
                samples: opts.samples,
                seed: opts.seed,
                identity_2_5_max: check_identity_2_5(&sys, &us)?,
                pushforward_5_1_max: check_pushforward_5_1(&sys, &xs)?,
                pointwise_orthogonality_max: None,
                gradient_check_max: None,
                hamiltonian_pair: None,
                drift: None,
            }
        }
    };
    Ok(CheckOutput {
        schema_version: SCHEMA_VERSION,
        verification,
    })
}
