//! Smooth test integrands with a logistic term function.
//!
//! `f(ε_com, ε_i; b_i) = σ(b_i + ρ ε_com + κ ε_i)` with offsets `b_i` spread
//! evenly over `[-1, 1]`, and one of three payoffs of `x/D`.

use std::fmt;
use std::str::FromStr;

use crate::distributions::PrnStream;
use crate::error::{Error, Result};
use crate::integrator::SeparableIntegrand;

pub const COMMON_LOADING: f64 = 0.5;
pub const IDIOSYNCRATIC_LOADING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Payoff {
    /// `x/D`
    Linear,
    /// `(x/D)²`
    Quadratic,
    /// `(e^{x/D} - 1)/(e - 1)`
    Exponential,
}

impl Payoff {
    pub fn name(self) -> &'static str {
        match self {
            Payoff::Linear => "linear",
            Payoff::Quadratic => "quadratic",
            Payoff::Exponential => "exponential",
        }
    }
}

impl fmt::Display for Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Payoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Payoff::Linear),
            "quadratic" => Ok(Payoff::Quadratic),
            "exponential" | "exp" => Ok(Payoff::Exponential),
            other => Err(Error::InvalidRunConfig(format!("unknown synthetic payoff {other:?}"))),
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Offsets `b_i`, evenly spaced on `[-1, 1]`.
pub fn offsets(d: usize) -> Vec<f64> {
    if d == 1 {
        return vec![0.0];
    }
    (0..d).map(|i| -1.0 + 2.0 * i as f64 / (d - 1) as f64).collect()
}

pub fn term(eps_com: f64, eps_i: f64, b: &f64) -> f64 {
    logistic(b + COMMON_LOADING * eps_com + IDIOSYNCRATIC_LOADING * eps_i)
}

/// Builds the `D`-term integrand with payoff `kind` and its derivative.
pub fn integrand(kind: Payoff, d: usize, stream: PrnStream) -> Result<SeparableIntegrand<f64>> {
    if d == 0 {
        return Err(Error::InvalidRunConfig("synthetic dimension must be positive".into()));
    }
    let dd = d as f64;
    let e1 = std::f64::consts::E - 1.0;
    let ig = match kind {
        Payoff::Linear => SeparableIntegrand::new(offsets(d), stream, term, move |x| x / dd)?
            .with_derivative(move |_| 1.0 / dd),
        Payoff::Quadratic => {
            SeparableIntegrand::new(offsets(d), stream, term, move |x| (x / dd).powi(2))?
                .with_derivative(move |x| 2.0 * x / (dd * dd))
        }
        Payoff::Exponential => {
            SeparableIntegrand::new(offsets(d), stream, term, move |x| ((x / dd).exp() - 1.0) / e1)?
                .with_derivative(move |x| (x / dd).exp() / (dd * e1))
        }
    };
    Ok(ig)
}
