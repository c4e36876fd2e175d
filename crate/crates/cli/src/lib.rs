//! Command-line driver for the OAM quantum-eraser simulator: config
//! parsing, scan drivers and deterministic CSV/SVG output.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run, Cli};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at {key}: {message}")]
    Config { key: String, message: String },
    #[error("pipeline produced no signal: {0}")]
    NullPipeline(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("bad input: {0}")]
    Input(String),
    #[error("{0}")]
    Simulation(oam_eraser::Error),
}

impl CliError {
    /// 0 success, 2 config error, 3 null pipeline, 4 I/O error, 1 other.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::NullPipeline(_) => 3,
            CliError::Io(_) => 4,
            CliError::Input(_) | CliError::Simulation(_) => 1,
        }
    }
}

impl From<oam_eraser::Error> for CliError {
    fn from(e: oam_eraser::Error) -> Self {
        use oam_eraser::Error as E;
        match e {
            E::Extinguished { .. } | E::NullOutcome { .. } | E::NoSignal => CliError::NullPipeline(e.to_string()),
            E::UnphysicalCharge { .. } | E::InvalidParameter { .. } | E::OamOverflow { .. } | E::Undersampled { .. } => {
                CliError::Config {
                    key: "parameter".into(),
                    message: e.to_string(),
                }
            }
            other => CliError::Simulation(other),
        }
    }
}
