use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported equilibrium: q_n = 0 ({0})")]
    UnsupportedEquilibrium(&'static str),

    #[error(
        "invalid certificate: skew residual of DB = {skew:.3e}, off-diagonal residual of D^t Q1 = {offdiag:.3e}"
    )]
    InvalidCertificate { skew: f64, offdiag: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            got,
        })
    }
}
