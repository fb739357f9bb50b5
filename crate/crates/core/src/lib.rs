//! Numerical machinery for time-fractional diffusion driven by fractional
//! Gaussian noise: Fox H-function evaluation, the constant-coefficient
//! Green's kernels and their stretched-exponential envelopes, the scaling
//! lemmas behind the moment estimates, fractional Brownian field sampling,
//! and the first Wiener-chaos terms of the mild solution together with the
//! mean-square convergence condition.
//!
//! The crate is organized as a stack: [`quad`] and [`specfun`] provide the
//! quadrature and special-function primitives, [`green`] builds the kernels
//! on top of them, [`estimates`], [`integrals`], [`field`] and [`chaos`]
//! implement the verification layers. Everything is deterministic; Monte
//! Carlo entry points take explicit seeds and produce results independent
//! of thread count.

pub mod chaos;
pub mod error;
pub mod estimates;
pub mod field;
pub mod green;
pub mod integrals;
pub mod quad;
pub mod specfun;
pub mod util;

pub use chaos::{
    convergence_report, f1_kernel, psi0, psi1_mc, psi1_moment_exact, ChaosConfig,
    ConvergenceReport, Psi1McStats, Verdict, THETA_SERIES_C,
};
pub use error::{Error, Result};
pub use estimates::{ConditionReport, ExponentTable, HurstVector};
pub use field::{cov_r, inner_product_h, phi_h, sample_field, samples_csv, FieldGrid};
pub use green::{envelope_p, EnvelopeParams, GreenModel};
pub use integrals::{SimplexEstimate, SimplexMode, SimplexSpec, ThetaTail};
pub use specfun::hfun::HFunctionSpec;



