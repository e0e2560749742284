use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("eigensolver did not converge on a {dim}x{dim} Hermitian matrix")]
    EigenNonConvergence { dim: usize },

    #[error("matrix is not positive definite (dimension {dim})")]
    NotPositiveDefinite { dim: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("vector {index} has squared norm {norm_sq:e}, exceeding the bound {bound:e}")]
    VectorNorm { index: usize, norm_sq: f64, bound: f64 },

    #[error("frame is not tight within {tol:e}: bounds ({lower:e}, {upper:e})")]
    NotTight { lower: f64, upper: f64, tol: f64 },

    #[error("vector {index} is zero")]
    ZeroVector { index: usize },

    #[error("exhaustive search over {size} indices exceeds the limit of {limit}")]
    ExhaustiveTooLarge { size: usize, limit: usize },

    #[error("no split of {size} indices meets the targets [{lower:e}, {upper:e}]")]
    NoPartition { size: usize, lower: f64, upper: f64 },

    #[error("randomized search examined {tried} candidates without a verified split")]
    SearchExhausted { tried: usize },

    #[error("duplication needs {m_prime} copies, above the cap of {cap}")]
    DuplicationCap { m_prime: u128, cap: usize },

    #[error("empty system")]
    EmptySystem,

    #[error("Gram deviation {deviation:e} still above {delta:e} at M = {m} (cap reached)")]
    RefinementFailed { m: usize, deviation: f64, delta: f64 },

    #[error("non-finite basis value at sample point {point}")]
    NonFinite { point: usize },

    #[error("sampled system has a zero row space")]
    ZeroRowSpace,

    #[error("certificate does not belong to this system: {0}")]
    MappingMismatch(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        match self {
            // keep the innermost tag
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Stage tag of a pipeline error, if any.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
