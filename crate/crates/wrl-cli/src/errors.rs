//! Error taxonomy of the runner: configuration problems exit with code 2,
//! numerical failures with code 3, and both emit one machine-readable JSON
//! object on stderr.

use wrl_core::anisotropy::AnisotropyError;
use wrl_core::minimize::MinimizeError;
use wrl_core::{GeometryError, RieszError, VariationError};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) => m,
        }
    }

    pub fn to_stderr_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind(), "message": self.message() }
        })
        .to_string()
    }
}

impl From<RieszError> for CliError {
    fn from(e: RieszError) -> Self {
        match e {
            // A bad exponent is a configuration problem, not a numerical one.
            RieszError::InvalidAlpha(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<VariationError> for CliError {
    fn from(e: VariationError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<AnisotropyError> for CliError {
    fn from(e: AnisotropyError) -> Self {
        // Anisotropy errors surface while interpreting shape input.
        CliError::Config(e.to_string())
    }
}

impl From<MinimizeError> for CliError {
    fn from(e: MinimizeError) -> Self {
        match e {
            MinimizeError::InvalidInput(m) => CliError::Config(m),
            MinimizeError::Anisotropy(a) => a.into(),
            MinimizeError::Riesz(r) => r.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("io: {e}"))
    }
}
