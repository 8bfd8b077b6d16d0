use thiserror::Error;

/// Errors produced while ingesting inputs or running a protection solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported format version {0}")]
    Format(u64),
    #[error("unknown bus {0}")]
    UnknownBus(i64),
    #[error("unknown branch {0:?}")]
    UnknownBranch(String),
    #[error("unknown meter {0:?}")]
    UnknownMeter(String),
    #[error("duplicate branch id {0:?}")]
    DuplicateBranch(String),
    #[error("duplicate bus {0}")]
    DuplicateBus(u32),
    #[error("duplicate meter id {0:?}")]
    DuplicateMeter(String),
    #[error("more than one {kind} meter at {site}")]
    DuplicateSite { kind: &'static str, site: String },
    #[error("invalid branch {id:?}: {reason}")]
    InvalidBranch { id: String, reason: String },
    #[error("network is disconnected: bus {0} is unreachable from the reference")]
    Disconnected(u32),
    #[error("invalid target set: {0}")]
    InvalidTargets(String),
    #[error("unobservable, estimator undefined")]
    Unobservable,
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("enumeration guard exceeded: {subsets} subsets (limit {limit})")]
    SizeGuard { subsets: u128, limit: u128 },
    #[error("solution check failed: {0}")]
    Verification(String),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        Error::Syntax {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
