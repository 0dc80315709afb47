//! Exit-code mapping: every failure prints one machine-parsable line
//! `error[CODE]: message` and exits nonzero (2 for usage errors, 1 otherwise).

use windcast_core::Error as CoreError;

#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: "E_USAGE",
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            code: "E_CONFIG",
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError {
            code: "E_IO",
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        if self.code == "E_USAGE" {
            2
        } else {
            1
        }
    }

    /// Single-line rendering; embedded newlines collapse to "; ".
    pub fn render(&self) -> String {
        let flat = self.message.replace('\n', "; ");
        format!("error[{}]: {}", self.code, flat)
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        let code = match &err {
            CoreError::Csv { .. }
            | CoreError::Timestamps(_)
            | CoreError::GapExceedsLimit { .. }
            | CoreError::EdgeGap { .. }
            | CoreError::NegativeSpeed { .. }
            | CoreError::NonFinite { .. }
            | CoreError::EmptyDataset
            | CoreError::DuplicateStation(_)
            | CoreError::UnknownStation(_)
            | CoreError::InvalidDataset(_)
            | CoreError::SliceRange { .. }
            | CoreError::LengthMismatch { .. }
            | CoreError::EmptySeries
            | CoreError::ZeroRange
            | CoreError::NonPositiveBase(_) => "E_DATA",
            CoreError::InvalidLayout(_)
            | CoreError::TargetOutOfRange { .. }
            | CoreError::InsufficientHistory { .. }
            | CoreError::TooManyRows { .. }
            | CoreError::ShortHistory { .. }
            | CoreError::InvalidSystem(_)
            | CoreError::DegenerateWindow { .. }
            | CoreError::EmptyGrid => "E_DESIGN",
            CoreError::InvalidConfig(_)
            | CoreError::RankDeficient { .. }
            | CoreError::CombinatorialGuard { .. }
            | CoreError::InvalidCoefficients(_) => "E_SOLVER",
            CoreError::Window(_) | CoreError::Cycle { .. } => "E_FORECAST",
            CoreError::InvalidModel(_)
            | CoreError::Unstable(_)
            | CoreError::ExcessiveClipping { .. } => "E_SYNTH",
            CoreError::Io(_) => "E_IO",
            CoreError::Json(_) => "E_CONFIG",
        };
        CliError {
            code,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::io(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::config(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
