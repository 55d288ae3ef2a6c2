//! Desk-scale emulator for nested amplitude-estimation Monte Carlo driven by
//! a jumpable PCG stream.
//!
//! * [`pcg`]: generator with progress and closed-form jump.
//! * [`distributions`]: word → uniform → standard normal, and the stream
//!   layout of common/individual variates.
//! * [`qae`]: exact outcome kernel, confidence, and the moment `H`.
//! * [`integrator`]: sequential (`E_samp`) and nested (`p1`) estimators over
//!   separable integrands, error model and query counts.
//! * [`credit`]: one-factor Merton portfolio, VaR/CVaR.
//! * [`resources`]: T-count cost model.
//! * [`cli`]: config-driven batch front end.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod credit;
pub mod distributions;
pub mod error;
pub mod integrator;
pub mod par;
pub mod pcg;
pub mod qae;
pub mod resources;
pub mod synthetic;

pub use error::{Error, Result};
