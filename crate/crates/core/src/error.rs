use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rank deficient: orthogonalized column {column} has norm {norm:e}")]
    RankDeficient { column: usize, norm: f64 },

    #[error("atom {column} has norm {norm}, expected 1")]
    NotNormalized { column: usize, norm: f64 },

    #[error("projected atom {atom} has norm {norm:e}; extending by it would be rank deficient")]
    DegenerateAtom { atom: usize, norm: f64 },

    #[error("{what}: {count} cases exceed the enumeration budget of {budget}")]
    TooLarge {
        what: &'static str,
        count: u128,
        budget: u128,
    },

    #[error("atom {column} vanishes after decimation and cannot be normalized")]
    EmptyRow { column: usize },

    #[error("residual is zero; no atom can be selected")]
    ZeroResidual,

    #[error("construction failed: {0}")]
    ConstructionFailed(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("definitional form {definitional} and projected form {projected} disagree")]
    FormMismatch { definitional: f64, projected: f64 },

    #[error("null space dimension {dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("no basic solution reproduces the right-hand side")]
    Infeasible,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
