use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Scenario data implies an impossible probability or fraction.
    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("degenerate baseline: {0}")]
    DegenerateBaseline(String),

    #[error("no search option with growth {0}")]
    UnknownSearchOption(f64),

    #[error("malformed tree: {0}")]
    Structure(String),

    /// Schema violation while reading a configuration document.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// A simulation invariant broke mid-run. `trace` holds the tail of the
    /// event log leading up to the failure.
    #[error("simulation fault: {message} (last events: {})", trace.join("; "))]
    SimulationFault { message: String, trace: Vec<String> },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("precision undefined: {0}")]
    Precision(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps the error with a description of what was being attempted.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Returns the innermost error, skipping context layers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by bad input data rather than a runtime fault.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self.root(),
            Error::Config { .. }
                | Error::Calibration(_)
                | Error::Domain(_)
                | Error::DegenerateBaseline(_)
                | Error::UnknownSearchOption(_)
                | Error::Json(_)
        )
    }
}
