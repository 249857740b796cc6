//! System files: JSON descriptions of a replicator or Lotka-Volterra system.

use std::path::Path;

use conserva_core::{LotkaVolterraSystem, RealMatrix, RealVector, ReplicatorSystem};
use serde::{Deserialize, Serialize};

use crate::exit::{Failure, EXIT_INPUT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Replicator,
    LotkaVolterra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub kind: SystemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    /// `q` for replicator files, `q'` for Lotka-Volterra files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// A parsed and validated system.
#[derive(Debug, Clone)]
pub enum System {
    Replicator(ReplicatorSystem),
    LotkaVolterra(LotkaVolterraSystem),
}

impl System {
    pub fn kind(&self) -> SystemKind {
        match self {
            Self::Replicator(_) => SystemKind::Replicator,
            Self::LotkaVolterra(_) => SystemKind::LotkaVolterra,
        }
    }

    /// Number of state coordinates (`n` strategies or `m` species).
    pub fn dim(&self) -> usize {
        match self {
            Self::Replicator(s) => s.n(),
            Self::LotkaVolterra(s) => s.m(),
        }
    }
}

fn input_error(msg: String) -> Failure {
    Failure::new(EXIT_INPUT, msg)
}

fn check_matrix(
    field: &str,
    rows: &[Vec<f64>],
    expected: Option<usize>,
) -> Result<RealMatrix, Failure> {
    let n = rows.len();
    if n == 0 {
        return Err(input_error(format!("{field}: matrix is empty")));
    }
    let cols = expected.unwrap_or(n);
    if n != cols {
        return Err(input_error(format!(
            "{field}: expected {cols} rows, found {n}"
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(input_error(format!(
                "{field}[{i}]: row has {} entries, expected {cols}",
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(input_error(format!(
                "{field}[{i}][{j}]: value is not finite"
            )));
        }
    }
    Ok(RealMatrix::from_fn(n, cols, |i, j| rows[i][j]))
}

fn check_vector(field: &str, v: &[f64], len: usize) -> Result<RealVector, Failure> {
    if v.len() != len {
        return Err(input_error(format!(
            "{field}: expected {len} entries, found {}",
            v.len()
        )));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(input_error(format!("{field}[{i}]: value is not finite")));
    }
    Ok(RealVector::from_column_slice(v))
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        serde_json::from_str(text)
            .map_err(|e| input_error(format!("line {}, column {}: {}", e.line(), e.column(), e)))
    }

    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|f| f.context(&path.display().to_string()))
    }

    /// Checks shape, finiteness and the payload/kind match.
    pub fn validate(&self) -> Result<System, Failure> {
        let system = match self.kind {
            SystemKind::Replicator => {
                if self.interaction.is_some() || self.r.is_some() {
                    return Err(input_error(
                        "kind \"replicator\" takes `payoff`, not `interaction`/`r`".into(),
                    ));
                }
                let rows = self
                    .payoff
                    .as_ref()
                    .ok_or_else(|| input_error("payoff: missing for kind \"replicator\"".into()))?;
                let a = check_matrix("payoff", rows, None)?;
                if a.nrows() < 2 {
                    return Err(input_error("payoff: need at least two strategies".into()));
                }
                System::Replicator(
                    ReplicatorSystem::new(a).map_err(|e| input_error(e.to_string()))?,
                )
            }
            SystemKind::LotkaVolterra => {
                if self.payoff.is_some() {
                    return Err(input_error(
                        "kind \"lotka_volterra\" takes `interaction` and `r`, not `payoff`".into(),
                    ));
                }
                let rows = self.interaction.as_ref().ok_or_else(|| {
                    input_error("interaction: missing for kind \"lotka_volterra\"".into())
                })?;
                let a = check_matrix("interaction", rows, None)?;
                let r = self
                    .r
                    .as_ref()
                    .ok_or_else(|| input_error("r: missing for kind \"lotka_volterra\"".into()))?;
                let r = check_vector("r", r, a.nrows())?;
                System::LotkaVolterra(
                    LotkaVolterraSystem::new(a, r).map_err(|e| input_error(e.to_string()))?,
                )
            }
        };
        if let Some(q) = &self.equilibrium {
            check_vector("equilibrium", q, system.dim())?;
        }
        if let Some(labels) = &self.labels {
            if labels.len() != system.dim() {
                return Err(input_error(format!(
                    "labels: expected {} names, found {}",
                    system.dim(),
                    labels.len()
                )));
            }
        }
        Ok(system)
    }

    pub fn equilibrium_hint(&self) -> Option<RealVector> {
        self.equilibrium
            .as_ref()
            .map(|q| RealVector::from_column_slice(q))
    }

    pub fn from_replicator(sys: &ReplicatorSystem) -> Self {
        Self {
            kind: SystemKind::Replicator,
            payoff: Some(matrix_rows(sys.payoff())),
            interaction: None,
            r: None,
            equilibrium: None,
            labels: None,
        }
    }

    pub fn from_lotka_volterra(sys: &LotkaVolterraSystem) -> Self {
        Self {
            kind: SystemKind::LotkaVolterra,
            payoff: None,
            interaction: Some(matrix_rows(sys.interaction())),
            r: Some(sys.growth().iter().copied().collect()),
            equilibrium: None,
            labels: None,
        }
    }
}

pub fn matrix_rows(m: &RealMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn vector_vec(v: &RealVector) -> Vec<f64> {
    v.iter().copied().collect()
}

/// A bare matrix, or an object holding one under `d`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MatrixFile {
    Bare(Vec<Vec<f64>>),
    Wrapped { d: Vec<Vec<f64>> },
}

/// Reads a certificate matrix file.
pub fn read_certificate(path: &Path, size: usize) -> Result<RealMatrix, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))?;
    let parsed: MatrixFile = serde_json::from_str(&text).map_err(|e| {
        input_error(format!(
            "{}: line {}, column {}: expected a matrix or {{\"d\": matrix}}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    let rows = match parsed {
        MatrixFile::Bare(rows) | MatrixFile::Wrapped { d: rows } => rows,
    };
    check_matrix("certificate", &rows, Some(size))
}

/// A raw `(B, D)` pair for classification without a system.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    pub b: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
}

impl PairFile {
    pub fn matrices(&self) -> Result<(RealMatrix, RealMatrix), Failure> {
        let b = check_matrix("b", &self.b, None)?;
        let d = check_matrix("d", &self.d, Some(b.nrows()))?;
        Ok((b, d))
    }
}
