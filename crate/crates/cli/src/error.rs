use std::fmt;

use cfpose_ingest::IngestError;

/// Process exit statuses, following the BSD `sysexits` numbering where one exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    /// The estimator ran but could not produce a pose.
    Estimation = 2,
    Usage = 64,
    DataFormat = 65,
    Io = 74,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Usage, message)
    }

    pub fn format(message: impl Into<String>) -> Self {
        Self::new(ExitKind::DataFormat, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Io, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<cfpose::Error> for CliError {
    fn from(e: cfpose::Error) -> Self {
        use cfpose::Error as E;
        let kind = match e {
            E::NoConsensus { .. } | E::Degenerate | E::NonFinite { .. } | E::DegenerateDirection { .. } => {
                ExitKind::Estimation
            }
            E::ZeroSpread => ExitKind::Estimation,
            E::InvalidInput(_) | E::MissingDerivative => ExitKind::Usage,
            E::Format(_) => ExitKind::DataFormat,
            E::Io(_) => ExitKind::Io,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        let kind = match e {
            IngestError::Io(_) => ExitKind::Io,
            IngestError::UnsupportedFormat(_) | IngestError::CorruptFile(_) => ExitKind::DataFormat,
            IngestError::EmptySegmentation => ExitKind::Estimation,
            IngestError::InvalidInput(_) => ExitKind::Usage,
        };
        Self::new(kind, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
