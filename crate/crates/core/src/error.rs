use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("leading coefficient is singular (condition number {condition:.3e})")]
    SingularLeading { condition: f64 },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("entry ({row}, {col}) acquires a pole of order {order}")]
    NegativeValuation { row: usize, col: usize, order: i64 },

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("ill-conditioned Sylvester block ({block_row}, {block_col}) at order {order}")]
    IllConditionedBlock {
        block_row: usize,
        block_col: usize,
        order: usize,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("not an integer within tolerance: {0}")]
    NonIntegral(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("budget of {0} products exhausted")]
    BudgetExhausted(usize),
}

impl Error {
    /// Stable machine-readable tag for the error kind.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape-mismatch",
            Error::NonFinite => "non-finite",
            Error::SingularLeading { .. } => "singular-leading-coefficient",
            Error::Singular(_) => "singular-matrix",
            Error::NegativeValuation { .. } => "negative-valuation",
            Error::NoConvergence { .. } => "no-convergence",
            Error::IllConditionedBlock { .. } => "ill-conditioned-block",
            Error::Invalid(_) => "invalid-input",
            Error::Precondition(_) => "precondition",
            Error::NonIntegral(_) => "non-integral",
            Error::Integration(_) => "integration-failure",
            Error::Numerical(_) => "numerical-failure",
            Error::BudgetExhausted(_) => "budget-exhausted",
        }
    }

    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::IllConditionedBlock { .. }
                | Error::Integration(_)
                | Error::Numerical(_)
                | Error::BudgetExhausted(_)
        )
    }
}
