//! Pseudo-spectral tools for generalized KdV equations with a dissipative
//! perturbation,
//!
//! ```text
//! v_t + v_xxx + eta L v + N(v) = 0,    (L f)^ = -Phi(xi) f^,
//! ```
//!
//! with `N(v) = (v^{k+1})_x` (conservative) or `(v_x)^{k+1}` (gradient).
//! The crate provides the linear propagator, the time-weighted solution
//! norms, a Picard solver on the Duhamel formula, an exponential-integrator
//! reference solver and numerical checks of the associated estimates.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod expint;
pub mod norms;
pub mod quadrature;
pub mod semigroup;
pub mod solver;
pub mod spectral;
pub mod symbols;
pub mod verifier;

pub use error::{Error, Result};
pub use norms::{NormReport, Trajectory, WeightedNormConfig};
pub use semigroup::{apply_semigroup, duhamel_integral, smoothing_norm_profile, Propagator};
pub use solver::{IvpProblem, NonlinearMode, PicardTrace};
pub use spectral::{Grid, GridSpec, SpectralField};
pub use symbols::{builtin_symbol, DissipativeSymbol, SymbolConstants};
pub use verifier::{EstimateReport, Verdict};
