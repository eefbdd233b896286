use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("support overflow: {mass_fraction:.3e} of the mass lies outside the isolation ball of radius {radius}")]
    SupportOverflow { mass_fraction: f64, radius: f64 },
    #[error("gram violation: orbitals deviate from orthonormality by {deviation:.3e}")]
    GramViolation { deviation: f64 },
    #[error("dependent orbitals: gram condition number {condition:.3e}")]
    DependentOrbitals { condition: f64 },
    #[error("oracle size limit: {what} = {got} exceeds {limit}")]
    SizeLimit { what: &'static str, got: usize, limit: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("profile budget: dirichlet energy {energy:.6e} exceeds budget {budget:.6e}")]
    ProfileBudget { energy: f64, budget: f64 },
    #[error("empty block {0:?}")]
    EmptyBlock([i64; 3]),
    #[error("repulsion dominance violated: nu = {0} < 2")]
    RepulsionDominance(f64),
    #[error("missing C values: {0}")]
    MissingValues(String),
    #[error("support overlap: {0}")]
    SupportOverlap(String),
    #[error("eigensolver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("malformed dump: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
