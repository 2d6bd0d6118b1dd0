use thiserror::Error;

pub type Result<T> = std::result::Result<T, MellinError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MellinError {
    /// `exp` of a complex exponent would leave the double range.
    #[error("exponent out of range (real part {exponent_re:.6e})")]
    Overflow { exponent_re: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid function spec: {0}")]
    Spec(String),

    #[error("quotient rejected: (g1/g2)^(1/rho) decreased at rho = {rho:.6e}")]
    QuotientAudit { rho: f64 },

    #[error(
        "quadrature did not converge after {nodes} nodes (error estimate {abs_error:.3e}, worst panel [{worst_lo:.6e}, {worst_hi:.6e}])"
    )]
    Quadrature {
        nodes: usize,
        abs_error: f64,
        worst_lo: f64,
        worst_hi: f64,
    },

    #[error("no saddle point: {0}")]
    NoSaddle(String),

    /// The homotopy in the argument reached the sector edge before the target.
    #[error("saddle left the sector |theta| < {limit:.6} at t = {last_t:.6} (theta = {theta:.6})")]
    LeftSector { last_t: f64, theta: f64, limit: f64 },

    #[error("continuation broke down at t = {last_t:.6}")]
    Continuation { last_t: f64 },

    #[error("singular jacobian at s = {s_re:.6e} + {s_im:.6e}i")]
    SingularJacobian { s_re: f64, s_im: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("{0}")]
    OutsideRegion(String),

    #[error("indeterminate region: {0}")]
    IndeterminateRegion(String),
}

impl MellinError {
    /// Spec and argument errors, as opposed to numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            MellinError::InvalidInput(_) | MellinError::Spec(_) | MellinError::QuotientAudit { .. }
        )
    }
}
