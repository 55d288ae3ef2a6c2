//! One-factor Merton credit portfolio as a separable integrand.
//!
//! Obligor `i` defaults when `Z_i = α_i ε_com + sqrt(1-α_i²) ε_i < z_i`, and
//! the portfolio loss is `L = Σ E_i·1{Z_i < z_i}`. VaR uses the payoff
//! `g(L) = 1{L_α < L}`, CVaR uses `g(L) = C·L·1{L_α < L}`.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::distributions::PrnStream;
use crate::error::{Error, Result};
use crate::integrator::{self, RunConfig, SeparableIntegrand};
use crate::par;

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Obligor {
    #[serde(default)]
    pub name: Option<String>,
    pub exposure: f64,
    pub alpha: f64,
    pub z: f64,
}

impl Obligor {
    pub fn new(exposure: f64, alpha: f64, z: f64) -> Self {
        Self { name: None, exposure, alpha, z }
    }

    fn idiosyncratic_loading(&self) -> f64 {
        (1.0 - self.alpha * self.alpha).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioSpec {
    obligors: Vec<Obligor>,
}

impl PortfolioSpec {
    pub fn new(obligors: Vec<Obligor>) -> Result<Self> {
        if obligors.is_empty() {
            return Err(Error::InvalidPortfolio("no obligors".into()));
        }
        for (k, o) in obligors.iter().enumerate() {
            if !(o.exposure > 0.0 && o.exposure <= 1.0) {
                return Err(Error::InvalidPortfolio(format!(
                    "obligor {}: exposure {} outside (0, 1]; normalize by the largest exposure",
                    k + 1,
                    o.exposure
                )));
            }
            if !(0.0..1.0).contains(&o.alpha) {
                return Err(Error::InvalidPortfolio(format!(
                    "obligor {}: alpha {} outside [0, 1)",
                    k + 1,
                    o.alpha
                )));
            }
            if !o.z.is_finite() {
                return Err(Error::InvalidPortfolio(format!("obligor {}: non-finite z", k + 1)));
            }
        }
        Ok(Self { obligors })
    }

    /// Divides every exposure by the largest one before validating.
    pub fn normalized(mut obligors: Vec<Obligor>) -> Result<Self> {
        let max = obligors.iter().map(|o| o.exposure).fold(0.0f64, f64::max);
        if max > 0.0 {
            for o in &mut obligors {
                o.exposure /= max;
            }
        }
        Self::new(obligors)
    }

    pub fn obligors(&self) -> &[Obligor] {
        &self.obligors
    }

    pub fn n_obl(&self) -> usize {
        self.obligors.len()
    }

    pub fn total_exposure(&self) -> f64 {
        par::compensated_sum(self.obligors.iter().map(|o| o.exposure))
    }

    /// Reads a delimited file with a header row naming `exposure`, `alpha`,
    /// `z` and optionally `name`.
    pub fn from_csv_reader<R: Read>(reader: R, normalize: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut obligors = Vec::new();
        for (k, rec) in rdr.deserialize::<Obligor>().enumerate() {
            let o = rec.map_err(|e| Error::InvalidPortfolio(format!("record {}: {e}", k + 1)))?;
            obligors.push(o);
        }
        if normalize {
            Self::normalized(obligors)
        } else {
            Self::new(obligors)
        }
    }

    pub fn from_csv_path(path: &Path, normalize: bool) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::InvalidPortfolio(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file, normalize)
    }
}

/// `1{Z_i < z_i}`; a tie is not a default.
pub fn default_indicator(eps_com: f64, eps_i: f64, obligor: &Obligor) -> bool {
    let z = obligor.alpha * eps_com + obligor.idiosyncratic_loading() * eps_i;
    z < obligor.z
}

/// `f(ε_com, ε_i; E_i, α_i, z_i) = E_i·1{Z_i < z_i}`.
pub fn term_loss(eps_com: f64, eps_i: f64, obligor: &Obligor) -> f64 {
    if default_indicator(eps_com, eps_i, obligor) {
        obligor.exposure
    } else {
        0.0
    }
}

pub fn loss(portfolio: &PortfolioSpec, eps_com: f64, eps: &[f64]) -> Result<f64> {
    if eps.len() != portfolio.n_obl() {
        return Err(Error::LengthMismatch { expected: portfolio.n_obl(), got: eps.len() });
    }
    Ok(par::compensated_sum(
        portfolio.obligors.iter().zip(eps).map(|(o, &e)| term_loss(eps_com, e, o)),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureKind {
    Var,
    Cvar,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskMeasureSpec {
    pub kind: MeasureKind,
    /// Tail probability level.
    pub alpha: f64,
    /// Loss threshold of the payoff indicator.
    pub l_alpha: Option<f64>,
    /// CVaR normalization; defaults to `1/N_obl`.
    pub c: Option<f64>,
}

impl RiskMeasureSpec {
    pub fn var(l_alpha: f64) -> Self {
        Self { kind: MeasureKind::Var, alpha: 0.05, l_alpha: Some(l_alpha), c: None }
    }

    pub fn cvar(l_alpha: f64) -> Self {
        Self { kind: MeasureKind::Cvar, alpha: 0.05, l_alpha: Some(l_alpha), c: None }
    }

    /// Normalization actually used: `C` must keep `C·x <= 1` for every
    /// argument `x ∈ [0, N_obl]` the nested readout can produce.
    pub fn normalization(&self, portfolio: &PortfolioSpec) -> Result<f64> {
        let d = portfolio.n_obl() as f64;
        let c = self.c.unwrap_or(1.0 / d);
        if !(c > 0.0) || c * d > 1.0 + 1e-12 {
            return Err(Error::InvalidMeasure(format!(
                "normalization C = {c} must lie in (0, 1/N_obl = {}]",
                1.0 / d
            )));
        }
        Ok(c)
    }
}

/// Builds the separable integrand `D = N_obl`, `f = E_i·Θ(Z_i, z_i)`.
pub fn to_separable(
    portfolio: &PortfolioSpec,
    measure: &RiskMeasureSpec,
    stream: &PrnStream,
) -> Result<SeparableIntegrand<Obligor>> {
    let l_alpha = measure.l_alpha.ok_or_else(|| {
        Error::InvalidMeasure("the payoff needs a loss threshold L_alpha".into())
    })?;
    let terms = portfolio.obligors.clone();
    match measure.kind {
        MeasureKind::Var => SeparableIntegrand::new(terms, stream.clone(), term_loss, move |l| {
            if l_alpha < l {
                1.0
            } else {
                0.0
            }
        }),
        MeasureKind::Cvar => {
            let c = measure.normalization(portfolio)?;
            SeparableIntegrand::new(terms, stream.clone(), term_loss, move |l| {
                if l_alpha < l {
                    (c * l).min(1.0)
                } else {
                    0.0
                }
            })
        }
    }
}

/// Estimation route for tail quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Method {
    /// Plain loop over the stream samples.
    #[default]
    Classical,
    /// Sequential-sum method; exactly `E_samp`.
    Previous,
    /// Nested amplitude estimation; exact `p1`.
    New,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::Previous => "previous",
            Method::New => "new",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "classical" => Ok(Method::Classical),
            "previous" | "prev" | "sequential" => Ok(Method::Previous),
            "new" | "nested" => Ok(Method::New),
            other => Err(Error::InvalidMeasure(format!("unknown method {other:?}"))),
        }
    }
}

/// Loss of every stream sample `j = 1..=N_samp`.
pub fn sample_losses(portfolio: &PortfolioSpec, stream: &PrnStream, cfg: &RunConfig) -> Result<Vec<f64>> {
    let d = portfolio.n_obl() as u64;
    par::try_map_indexed(cfg.n_samp() as usize, |idx| {
        let (eps_com, eps) = stream.sample_sequential(idx as u64 + 1, d)?;
        loss(portfolio, eps_com, &eps)
    })
}

fn frequency_above(losses: &[f64], l_alpha: f64) -> f64 {
    losses.iter().filter(|&&l| l_alpha < l).count() as f64 / losses.len() as f64
}

/// `P(L > L_α)` over the stream samples.
pub fn tail_prob(
    portfolio: &PortfolioSpec,
    stream: &PrnStream,
    l_alpha: f64,
    cfg: &RunConfig,
    method: Method,
) -> Result<f64> {
    match method {
        Method::Classical => Ok(frequency_above(&sample_losses(portfolio, stream, cfg)?, l_alpha)),
        Method::Previous => {
            let ig = to_separable(portfolio, &RiskMeasureSpec::var(l_alpha), stream)?;
            integrator::e_samp(&ig, cfg)
        }
        Method::New => {
            let ig = to_separable(portfolio, &RiskMeasureSpec::var(l_alpha), stream)?;
            integrator::p1_new(&ig, cfg)
        }
    }
}

/// Tail estimator with the per-sample work done once, reusable across
/// thresholds.
pub struct TailModel {
    method: Method,
    losses: Vec<f64>,
    amps: Vec<f64>,
    portfolio: PortfolioSpec,
    stream: PrnStream,
    cfg: RunConfig,
}

impl TailModel {
    pub fn new(portfolio: &PortfolioSpec, stream: &PrnStream, cfg: &RunConfig, method: Method) -> Result<Self> {
        let (losses, amps) = match method {
            Method::Classical => (sample_losses(portfolio, stream, cfg)?, Vec::new()),
            Method::Previous => (Vec::new(), Vec::new()),
            Method::New => {
                let ig = to_separable(portfolio, &RiskMeasureSpec::var(0.0), stream)?;
                (Vec::new(), integrator::amplitudes(&ig, cfg)?)
            }
        };
        Ok(Self {
            method,
            losses,
            amps,
            portfolio: portfolio.clone(),
            stream: stream.clone(),
            cfg: *cfg,
        })
    }

    pub fn tail_prob(&self, l_alpha: f64) -> Result<f64> {
        match self.method {
            Method::Classical => Ok(frequency_above(&self.losses, l_alpha)),
            Method::Previous => tail_prob(&self.portfolio, &self.stream, l_alpha, &self.cfg, Method::Previous),
            Method::New => {
                let ig = to_separable(&self.portfolio, &RiskMeasureSpec::var(l_alpha), &self.stream)?;
                let grid = self.cfg.inner_grid();
                let payoff = integrator::payoff_on_grid(&ig, grid)?;
                integrator::p1_from_amplitudes(&self.amps, &payoff, grid)
            }
        }
    }
}

/// Bisection for the smallest `L_α` with `tail_prob(L_α) <= alpha`, to
/// bracket width `tol`, over `[0, Σ E_i]`. Returns the upper bracket end.
pub fn var_search(
    portfolio: &PortfolioSpec,
    stream: &PrnStream,
    alpha: f64,
    cfg: &RunConfig,
    tol: f64,
    method: Method,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidMeasure(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidMeasure(format!("tolerance must be positive, got {tol}")));
    }
    let model = TailModel::new(portfolio, stream, cfg, method)?;
    let mut lo = 0.0;
    let mut hi = portfolio.total_exposure();
    if model.tail_prob(lo)? <= alpha {
        return Ok(lo);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if model.tail_prob(mid)? <= alpha {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `E[L | L > L_α]` as `E[C·L·1{L > L_α}] / (C·P(L > L_α))`.
pub fn cvar(
    portfolio: &PortfolioSpec,
    stream: &PrnStream,
    l_alpha: f64,
    cfg: &RunConfig,
    method: Method,
) -> Result<f64> {
    let measure = RiskMeasureSpec::cvar(l_alpha);
    let c = measure.normalization(portfolio)?;
    let tail = tail_prob(portfolio, stream, l_alpha, cfg, method)?;
    if tail <= 0.0 {
        return Err(Error::EmptyTail(l_alpha));
    }
    let payoff_mean = match method {
        Method::Classical => {
            let losses = sample_losses(portfolio, stream, cfg)?;
            let vals: Vec<f64> =
                losses.iter().map(|&l| if l_alpha < l { c * l } else { 0.0 }).collect();
            par::compensated_mean(&vals)
        }
        Method::Previous => integrator::e_samp(&to_separable(portfolio, &measure, stream)?, cfg)?,
        Method::New => integrator::p1_new(&to_separable(portfolio, &measure, stream)?, cfg)?,
    };
    Ok(payoff_mean / (c * tail))
}
