use std::fmt;

use thiserror::Error;

/// Pipeline stage a failure originated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    IntersectionGraph,
    Cliques,
    Products,
    Candidates,
    CoverSolve,
    Assembly,
    Verification,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::IntersectionGraph => "intersection graph",
            Stage::Cliques => "clique enumeration",
            Stage::Products => "product enumeration",
            Stage::Candidates => "candidate generation",
            Stage::CoverSolve => "cover solve",
            Stage::Assembly => "tree assembly",
            Stage::Verification => "verification",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid primitive `{id}`: {reason}")]
    InvalidPrimitive { id: String, reason: String },
    #[error("duplicate primitive id `{0}`")]
    DuplicateId(String),
    #[error("unresolved primitive id `{0}`")]
    UnresolvedId(String),
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("unsupported oracle: {0}")]
    UnsupportedOracle(String),
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),
    #[error("unbounded solid: {0}")]
    Unbounded(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("infeasible cover instance: element `{0}` is covered by no candidate")]
    Infeasible(String),
    #[error("no exact cover exists")]
    Unsatisfiable,
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid spin value {value} at index {index}")]
    InvalidSpin { index: usize, value: i8 },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at(self, stage: Stage) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage { stage, source: Box::new(e) },
        }
    }

    /// The innermost error, with stage attribution stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self.root(), Error::Infeasible(_) | Error::Unsatisfiable)
    }

    pub fn is_parameter(&self) -> bool {
        matches!(self.root(), Error::Parameter(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
