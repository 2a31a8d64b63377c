use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |m - m^dagger| = {deviation:.3e}, tolerance {tolerance:.3e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("singular input: all eigenvalues vanish")]
    SingularInput,

    #[error("dimension overflow: {dim} exceeds the supported maximum of 16")]
    DimensionOverflow { dim: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("parameter `{name}` = {value} out of range {range}")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid matrix shape: {0}")]
    BadShape(String),

    #[error("state invariant violated: {0}")]
    InvalidState(String),

    #[error("channel broke state invariants: {0}")]
    ChannelBrokeState(String),

    #[error("support mismatch: second state has a zero eigenvalue where the first has weight {weight:.3e}")]
    SupportMismatch { weight: f64 },

    #[error("time {t} outside [0, {max}]")]
    TimeOutOfRange { t: f64, max: f64 },

    #[error("time ordering violated: t_i = {t_i} > t_j = {t_j}")]
    TimeOrdering { t_i: f64, t_j: f64 },

    #[error("propagator failed to converge: step-halving changed the state by {delta:.3e} (> {tolerance:.3e})")]
    ConvergenceFailure { delta: f64, tolerance: f64 },

    #[error("integrator step too large: {0}")]
    StepTooLarge(String),

    #[error("jacobi eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {off_norm:.3e})")]
    EigNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("config error: {0}")]
    Config(String),
}
