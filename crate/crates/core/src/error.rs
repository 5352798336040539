use thiserror::Error;

pub type Result<T> = std::result::Result<T, SglmError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SglmError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("no convergence after {iterations} iterations (last log-likelihood {loglik})")]
    NonConvergence {
        iterations: usize,
        loglik: f64,
        beta: Vec<f64>,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("leverage error: observation {index} has leverage {leverage}")]
    Leverage { index: usize, leverage: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}, column '{column}': {message}")]
    Parse {
        line: u64,
        column: String,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("series {series}: {source}")]
    Series {
        series: String,
        #[source]
        source: Box<SglmError>,
    },
}

impl SglmError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        SglmError::Domain(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        SglmError::Dimension(msg.into())
    }

    pub(crate) fn in_series(self, series: impl Into<String>) -> Self {
        SglmError::Series {
            series: series.into(),
            source: Box::new(self),
        }
    }

    /// Short machine-readable class, used by the command-line front end.
    pub fn class(&self) -> &'static str {
        match self {
            SglmError::Domain(_) => "domain",
            SglmError::SingularDesign(_) => "singular_design",
            SglmError::NonConvergence { .. } => "non_convergence",
            SglmError::Dimension(_) => "dimension",
            SglmError::Leverage { .. } => "leverage",
            SglmError::Config(_) => "config",
            SglmError::Parse { .. } => "parse",
            SglmError::Io(_) => "io",
            SglmError::Series { source, .. } => source.class(),
        }
    }
}

impl From<std::io::Error> for SglmError {
    fn from(e: std::io::Error) -> Self {
        SglmError::Io(e.to_string())
    }
}
