//! Process exit codes and the error type that carries them.

use conserva_core::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NO_EQUILIBRIUM: u8 = 2;
pub const EXIT_EMPTY_FAMILY: u8 = 3;
pub const EXIT_RUNTIME: u8 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn context(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Input(_) | Error::Dimension { .. } | Error::InvalidCertificate { .. } => {
                EXIT_INPUT
            }
            Error::Domain(_) | Error::UnsupportedEquilibrium(_) => EXIT_RUNTIME,
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::new(EXIT_RUNTIME, e.to_string())
    }
}
