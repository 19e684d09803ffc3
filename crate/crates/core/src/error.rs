use thiserror::Error;

/// Errors raised while modeling, relaxing, exporting or parsing a problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Invalid partitioning of measures in moments")]
    InvalidPartitioning,
    #[error("Invalid moment product")]
    InvalidMomentProduct,
    #[error("Invalid reference to several measures")]
    SeveralMeasures,
    #[error("variables from several measures")]
    VarsFromSeveralMeasures,
    #[error("constant polynomial has no measure to integrate against")]
    ConstantMoment,
    #[error("support constraint references no variable")]
    ConstantSupport,
    #[error("unassigned variable {0}")]
    UnassignedVariable(String),
    #[error("name `{0}` is already declared")]
    DuplicateName(String),
    #[error("unknown measure {0}")]
    UnknownMeasure(u32),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("measure has no discrete support")]
    NoDiscreteSupport,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("objective already set")]
    ObjectiveAlreadySet,
    #[error("problem has no objective")]
    NoObjective,
    #[error("inconsistent substitutions")]
    InconsistentSubstitutions,
    #[error("substitution not terminating")]
    SubstitutionNotTerminating,
    #[error("constraint degree exceeds relaxation order")]
    ConstraintDegree,
    #[error("relaxation order {order} is below the minimal order {minimal}")]
    OrderTooLow { order: usize, minimal: usize },
    #[error("moment problem has not been solved")]
    NotSolved,
    #[error("SDPA has no free cone; eliminate the free variables with presolve_eliminate_equalities before exporting")]
    FreeVariables,
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    /// Model-layer error raised by the statement at `line:col`.
    #[error("{line}:{col}: {source}")]
    At { line: usize, col: usize, source: Box<Error> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
