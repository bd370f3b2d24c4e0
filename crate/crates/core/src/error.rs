use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{field} must be {requirement}")]
    InvalidParams {
        field: &'static str,
        requirement: &'static str,
    },
    #[error("invalid density matrix: {0}")]
    InvalidState(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("eigensolver did not converge after {iterations} iterations")]
    EigNoConvergence { iterations: usize },
    #[error("nonzero cross-block entry at ({row}, {col}) of the Liouvillian")]
    CrossBlockEntry { row: usize, col: usize },
    #[error("{count} near-zero eigenvalues: steady state is not unique")]
    DegenerateSteadyState { count: usize },
    #[error("spectrum is defective (eigenvector condition number {condition:.3e})")]
    DefectiveSpectrum { condition: f64 },
    #[error("threshold not reached: not converged by t_max = {t_max} us")]
    NotConverged { t_max: f64 },
    #[error("state positivity violated at t = {time} us (min eigenvalue {min_eigenvalue:.3e})")]
    PositivityViolated { time: f64, min_eigenvalue: f64 },
    #[error("analytic slow sector requires zero detuning")]
    NonzeroDetuning,
    #[error("discriminant does not change sign on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("degeneracy with kernel dimension {kernel_dim} is not an exceptional point")]
    NotAnExceptionalPoint { kernel_dim: usize },
    #[error("eigenvalue splitting below the resolvable floor")]
    InsufficientSplitting,
    #[error("distance below the numerical floor inside the fit window")]
    NumericalFloor,
    #[error("fit window spans {span:.3e} us, need at least {required:.3e} us")]
    WindowTooShort { span: f64, required: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}
