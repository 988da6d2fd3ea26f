use thiserror::Error;

/// Errors produced anywhere in the truss design pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {path} (line {line}): {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("degenerate tetrahedron {tet} (volume {volume:e} m^3)")]
    DegenerateTet { tet: usize, volume: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unconstrained rigid mode: {0}")]
    RigidMode(String),

    /// Factorization hit zero or negative pivots; indices are the original
    /// (unpermuted) equation numbers.
    #[error("singular system: zero pivots at equations {equations:?}")]
    Singular { equations: Vec<usize> },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("null stress field")]
    NullStressField,

    #[error("constant parametrization")]
    ConstantParametrization,

    #[error("perturbation contract violated: {0}")]
    Perturbation(String),

    #[error("extraction failed: {0}")]
    Extraction(String),

    #[error("mechanism: zero-energy modes at nodes {nodes:?}")]
    Mechanism { nodes: Vec<usize> },

    #[error("load does not stress structure")]
    ZeroStress,

    #[error("line search failed: {0}")]
    LineSearch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Config(_) | Error::Parse { .. } | Error::Json(_) | Error::InvalidInput(_) => 2,
            Error::MissingArtifact(_) => 4,
            Error::Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
