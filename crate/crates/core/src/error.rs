use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Pipeline stage in which a failure happened; used to tag errors coming out
/// of the end-to-end solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Ingestion,
    Partition,
    Blocks,
    Factorization,
    Interior,
    Interface,
    Projection,
    Krylov,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Phase::Ingestion => "ingestion",
            Phase::Partition => "partition",
            Phase::Blocks => "blocks",
            Phase::Factorization => "factorization",
            Phase::Interior => "interior",
            Phase::Interface => "interface",
            Phase::Projection => "projection",
            Phase::Krylov => "krylov",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("matrix market parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported matrix: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dense conversion of n={n} exceeds the cap of {cap}")]
    DenseCap { n: usize, cap: usize },

    #[error("factorization failed at pivot {pivot} for shift {shift}: |d|={magnitude:e}")]
    SingularPivot {
        shift: Complex64,
        pivot: usize,
        magnitude: f64,
    },

    #[error("mass matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("structural violation: {0}")]
    Structural(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("dense linear algebra failure: {0}")]
    Dense(String),

    #[error("{phase} phase failed: {source}")]
    Phase {
        phase: Phase,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn in_phase(self, phase: Phase) -> Error {
        match self {
            e @ Error::Phase { .. } => e,
            e => Error::Phase {
                phase,
                source: Box::new(e),
            },
        }
    }

    /// Phase tag if the error was raised inside a tagged pipeline stage.
    pub fn phase(&self) -> Option<Phase> {
        match self {
            Error::Phase { phase, .. } => Some(*phase),
            _ => None,
        }
    }
}

pub(crate) trait PhaseExt<T> {
    fn phase(self, phase: Phase) -> Result<T>;
}

impl<T> PhaseExt<T> for Result<T> {
    fn phase(self, phase: Phase) -> Result<T> {
        self.map_err(|e| e.in_phase(phase))
    }
}
