use serde_json::json;

/// Failures of a CLI invocation. Each maps to an exit status and a
/// machine-readable `{"error": {code, message, location}}` object.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    /// Malformed JSON or a field of the wrong type.
    #[error("{message}")]
    Parse { message: String, location: String },

    /// Well-formed input that does not fit the command: missing or unknown
    /// fields, bad flag values.
    #[error("{message}")]
    Schema { message: String, location: String },

    #[error("{source}")]
    Core {
        source: infochoice::Error,
        location: Option<String>,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;

pub const EXIT_IO: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NON_CONVERGENCE: u8 = 3;

impl CliError {
    pub fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Schema {
            message: message.into(),
            location: location.into(),
        }
    }

    pub fn code(&self) -> &'static str {
        use infochoice::Error as E;
        match self {
            Self::Io { .. } => "io",
            Self::Parse { .. } => "parse",
            Self::Schema { .. } => "schema",
            Self::Core { source, .. } => match source {
                E::Invalid(_) => "invalid",
                E::DimensionMismatch { .. } => "dimension_mismatch",
                E::PriorMismatch(_) => "prior_mismatch",
                E::EmptySubmenu => "empty_submenu",
                E::UnknownAction(_) => "unknown_action",
                E::Unsupported(_) => "unsupported",
                E::BoundaryBelief { .. } => "boundary_belief",
                E::NotRationalizable(_) => "not_rationalizable",
                E::Precondition(_) => "precondition",
                E::NonConvergence { .. } => "non_convergence",
                E::BoundaryTrap(_) => "boundary_trap",
                E::NotOptimal { .. } => "not_optimal",
            },
        }
    }

    pub fn exit_code(&self) -> u8 {
        use infochoice::Error as E;
        match self {
            Self::Io { .. } => EXIT_IO,
            Self::Core {
                source: E::NonConvergence { .. } | E::BoundaryTrap(_),
                ..
            } => EXIT_NON_CONVERGENCE,
            _ => EXIT_VALIDATION,
        }
    }

    pub fn location(&self) -> Option<String> {
        match self {
            Self::Io { path, .. } => Some(path.clone()),
            Self::Parse { location, .. } | Self::Schema { location, .. } => Some(location.clone()),
            Self::Core { source, location } => match (source, location) {
                (infochoice::Error::Invalid(report), Some(at)) => match report.violations.first() {
                    Some(v) => Some(format!("{at} ({})", v.location)),
                    None => Some(at.clone()),
                },
                (_, at) => at.clone(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        crate::json::to_string(&json!({
            "error": {
                "code": self.code(),
                "message": self.to_string(),
                "location": self.location(),
            }
        }))
    }
}

/// Attaches a JSON-path location to core errors.
pub(crate) trait At<T> {
    fn at(self, location: &str) -> Result<T>;
}

impl<T> At<T> for infochoice::Result<T> {
    fn at(self, location: &str) -> Result<T> {
        self.map_err(|source| CliError::Core {
            source,
            location: Some(location.to_string()),
        })
    }
}

impl From<infochoice::Error> for CliError {
    fn from(source: infochoice::Error) -> Self {
        Self::Core { source, location: None }
    }
}
