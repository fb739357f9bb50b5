//! Special functions: complex log-gamma and the Fox H-function.

pub mod gamma;
pub mod hfun;

pub use gamma::{ln_abs_gamma, log_gamma_complex, rgamma_real};
pub use hfun::{h_check, h_eval, ContourKind, HEval, HFunctionSpec, Method, ValidationReport};
