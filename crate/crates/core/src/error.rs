use thiserror::Error;

#[derive(Debug, Error)]
pub enum AoiError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A conditional service probability was requested at a service age that
    /// can never be reached because `Pr{B > m - 1} = 0`.
    #[error("service age {age} is unreachable: Pr{{B > {}}} = 0", .age - 1)]
    UnreachableAge { age: usize },

    #[error("q_1 = 0 makes F(p, n) undefined; use the rescaled g_poly instead")]
    ZeroFirstMass,

    #[error("degenerate geometric closed form for p = {p}, gamma = {gamma} (needs p < gamma); use the general path")]
    Degenerate { p: f64, gamma: f64 },

    #[error("tail mass {tail:e} exceeds tolerance {tol:e} at n_max = {n_max}; increase n_max")]
    TailTooLarge { tail: f64, tol: f64, n_max: usize },

    #[error("stationary solve did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("cannot merge simulation results: {0}")]
    Mismatch(String),
}

pub type Result<T, E = AoiError> = std::result::Result<T, E>;
