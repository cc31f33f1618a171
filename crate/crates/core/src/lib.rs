//! Eigenvalue spectra and operator norms of the time-frequency localization
//! operator with a Gaussian window and a radial characteristic weight.
//!
//! With weight `χ_E(r²)` the operator is diagonal in the Hermite basis and
//! its `k`-th eigenvalue is `λ_k = ∫_{π·E} r^k e^{-r} / k! dr`. Sets `E` live
//! in the *profile domain* (values of `r²`); the factor π is applied only in
//! [`spectrum`].

// Reference values in tests keep all the digits they were computed with.
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod cantor;
pub mod error;
pub mod experiments;
pub mod gamma;
pub mod io;
pub mod quadrature;
pub mod sets;
pub mod spectrum;
pub mod verify;

pub use error::{Error, Result};
pub use gamma::{fk, fk_head, fk_integral, fk_tail};
pub use quadrature::{integrate_fk, QuadratureResult};
pub use sets::{cantor_expand, cantor_function, make_union, CantorSpec, IntervalUnion, Side};
pub use spectrum::{
    comb_eigenvalue, comb_norm, eigenvalue, operator_norm, spectrum, trace_check, CombSpec, Method,
    NormEstimate, Spectrum,
};
