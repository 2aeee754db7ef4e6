use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Array lengths, grids or flags that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("spectrum is not Hermitian at mode {mode}: deviation {deviation:e}")]
    Symmetry { mode: i64, deviation: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("multiplier is not finite at xi = {xi}")]
    Evaluation { xi: f64 },

    #[error("unknown symbol `{name}`; available: {available}")]
    Lookup { name: String, available: String },

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error(
        "contraction exponent nonpositive (omega_k = {omega}, k = {k}, p = {p}); \
         symbol/nonlinearity pair outside the well-posedness hypotheses"
    )]
    Admissibility { k: f64, p: f64, omega: f64 },

    #[error("blow-up: non-finite value in {what} at t = {time}")]
    BlowUp { what: String, time: f64 },

    #[error("iterate left the ball: norm {norm:e} exceeds {limit:e} at iteration {iteration}")]
    Divergence {
        iteration: usize,
        norm: f64,
        limit: f64,
    },

    #[error("step {step} unstable: norm grew by a factor {growth:e}; use a smaller step")]
    Stability { step: usize, growth: f64 },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}
