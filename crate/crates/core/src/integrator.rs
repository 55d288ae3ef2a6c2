//! Estimators over a separable integrand `F = g(Σ_i f(ε_com, ε_i; c_i))`.
//!
//! The sequential ("previous") method sums the `D` terms of each sample
//! exactly, so its target is `E_samp`, the PRN-stream mean of `g`. The nested
//! method replaces the inner sum by an amplitude-estimation readout of
//! `S_j = Σ_i f / D`; its payoff-qubit probability `p1` is evaluated exactly
//! from the outcome kernel, and end-to-end runs sample the outer readout.

use std::fmt;

use rand::Rng;

use crate::distributions::PrnStream;
use crate::error::{Error, Result};
use crate::par;
use crate::qae::{self, QaeGrid, QaePmf};

pub type TermFn<T> = dyn Fn(f64, f64, &T) -> f64 + Send + Sync;
pub type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// `g(Σ_i f(ε_com, ε_i; c_i))` bound to a PRN stream.
pub struct SeparableIntegrand<T> {
    terms: Vec<T>,
    f: Box<TermFn<T>>,
    g: Box<ScalarFn>,
    g_prime: Option<Box<ScalarFn>>,
    stream: PrnStream,
}

impl<T> fmt::Debug for SeparableIntegrand<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeparableIntegrand")
            .field("d", &self.terms.len())
            .field("has_g_prime", &self.g_prime.is_some())
            .field("stream", &self.stream)
            .finish()
    }
}

impl<T: Sync> SeparableIntegrand<T> {
    pub fn new(
        terms: Vec<T>,
        stream: PrnStream,
        f: impl Fn(f64, f64, &T) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidRunConfig("integrand needs at least one term".into()));
        }
        Ok(Self { terms, f: Box::new(f), g: Box::new(g), g_prime: None, stream })
    }

    /// Attaches `g'`, enabling the first-order error model.
    pub fn with_derivative(mut self, g_prime: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.g_prime = Some(Box::new(g_prime));
        self
    }

    pub fn dimension(&self) -> u64 {
        self.terms.len() as u64
    }

    pub fn terms(&self) -> &[T] {
        &self.terms
    }

    pub fn stream(&self) -> &PrnStream {
        &self.stream
    }

    pub fn has_derivative(&self) -> bool {
        self.g_prime.is_some()
    }

    pub fn eval_f(&self, eps_com: f64, eps_i: f64, term: &T) -> Result<f64> {
        let v = (self.f)(eps_com, eps_i, term);
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::NotAmplitudeEncodable { what: "f", value: v });
        }
        Ok(v)
    }

    pub fn eval_g(&self, x: f64) -> Result<f64> {
        let v = (self.g)(x);
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::NotAmplitudeEncodable { what: "g", value: v });
        }
        Ok(v)
    }

    pub fn eval_g_prime(&self, x: f64) -> Option<f64> {
        self.g_prime.as_ref().map(|gp| gp(x))
    }

    /// `Σ_i f` for sample `j` with every variate obtained by its own jump.
    pub fn term_sum_by_jumps(&self, j: u64) -> Result<f64> {
        let d = self.dimension();
        let eps_com = self.stream.epsilon_com(j, d)?;
        let mut vals = Vec::with_capacity(self.terms.len());
        for (k, term) in self.terms.iter().enumerate() {
            let eps_i = self.stream.epsilon_ind(k as u64 + 1, j, d)?;
            vals.push(self.eval_f(eps_com, eps_i, term)?);
        }
        Ok(par::compensated_sum(vals))
    }

    /// `Σ_i f` for sample `j`: one jump to the common variate, then `D`
    /// progress steps.
    pub fn term_sum_sequential(&self, j: u64) -> Result<f64> {
        let (eps_com, eps) = self.stream.sample_sequential(j, self.dimension())?;
        let vals = eps
            .iter()
            .zip(&self.terms)
            .map(|(&e, term)| self.eval_f(eps_com, e, term))
            .collect::<Result<Vec<_>>>()?;
        Ok(par::compensated_sum(vals))
    }
}

/// Sample count and register sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RunConfig {
    n_samp: u64,
    m_inner: u32,
    m_outer: u32,
}

impl RunConfig {
    pub fn new(n_samp: u64, m_inner: u32, m_outer: u32) -> Result<Self> {
        if n_samp == 0 || !n_samp.is_power_of_two() {
            return Err(Error::InvalidRunConfig(format!(
                "n_samp must be a positive power of two, got {n_samp}"
            )));
        }
        QaeGrid::new(m_inner)?;
        QaeGrid::new(m_outer)?;
        Ok(Self { n_samp, m_inner, m_outer })
    }

    pub fn n_samp(&self) -> u64 {
        self.n_samp
    }

    pub fn log2_n_samp(&self) -> u32 {
        self.n_samp.trailing_zeros()
    }

    pub fn m_inner(&self) -> u32 {
        self.m_inner
    }

    pub fn m_outer(&self) -> u32 {
        self.m_outer
    }

    pub fn inner_grid(&self) -> QaeGrid {
        QaeGrid::new(self.m_inner).expect("validated")
    }

    pub fn outer_grid(&self) -> QaeGrid {
        QaeGrid::new(self.m_outer).expect("validated")
    }

    pub fn with_inner(self, m_inner: u32) -> Result<Self> {
        Self::new(self.n_samp, m_inner, self.m_outer)
    }
}

/// Smallest `m` with `2^m >= 1/(l·δ_rel)`.
pub fn inner_qubits_for_tolerance(l: f64, delta_rel: f64) -> Result<u32> {
    let prod = l * delta_rel;
    if !(prod > 0.0) || !prod.is_finite() {
        return Err(Error::InvalidRunConfig(format!("l·δ_rel must be positive, got {prod}")));
    }
    let target = 1.0 / prod;
    let mut m = 1u32;
    while ((1u64 << m) as f64) < target {
        m += 1;
        if m > qae::MAX_QUBITS {
            return Err(Error::InvalidRunConfig(format!(
                "tolerance needs more than {} inner qubits",
                qae::MAX_QUBITS
            )));
        }
    }
    Ok(m)
}

fn check_sample(j: u64, cfg: &RunConfig) -> Result<()> {
    if j == 0 || j > cfg.n_samp {
        return Err(Error::SampleIndexOutOfRange { j, n: cfg.n_samp });
    }
    Ok(())
}

/// `S_j = (1/D) Σ_i f(ε_com,j, ε_i,j; c_i)`.
pub fn s_j<T: Sync>(integrand: &SeparableIntegrand<T>, j: u64) -> Result<f64> {
    Ok((integrand.term_sum_by_jumps(j)? / integrand.dimension() as f64).clamp(0.0, 1.0))
}

/// All `S_j`, `j = 1..=N_samp`, in order.
pub fn amplitudes<T: Sync>(integrand: &SeparableIntegrand<T>, cfg: &RunConfig) -> Result<Vec<f64>> {
    par::try_map_indexed(cfg.n_samp as usize, |idx| s_j(integrand, idx as u64 + 1))
}

/// Exact success probability of the sequential method: the mean of
/// `g(Σ_i f)` over the stream samples.
pub fn e_samp<T: Sync>(integrand: &SeparableIntegrand<T>, cfg: &RunConfig) -> Result<f64> {
    let vals = par::try_map_indexed(cfg.n_samp as usize, |idx| {
        integrand.eval_g(integrand.term_sum_sequential(idx as u64 + 1)?)
    })?;
    Ok(par::compensated_mean(&vals))
}

/// `g̃(θ̃) = g(D sin²(θ̃π))` over the inner grid.
pub fn payoff_on_grid<T: Sync>(integrand: &SeparableIntegrand<T>, grid: QaeGrid) -> Result<Vec<f64>> {
    let d = integrand.dimension() as f64;
    grid.points()
        .map(|t| integrand.eval_g(d * qae::amplitude_from_theta(t)))
        .collect()
}

/// `(1/N) Σ_j Σ_θ̃ G(θ̃; θ_j, M) g̃(θ̃)` for given amplitudes `S_j` and a
/// tabulated payoff.
pub fn p1_from_amplitudes(amps: &[f64], payoff: &[f64], grid: QaeGrid) -> Result<f64> {
    if payoff.len() != grid.size() {
        return Err(Error::LengthMismatch { expected: grid.size(), got: payoff.len() });
    }
    let per_sample = par::try_map_indexed(amps.len(), |j| {
        let theta = qae::theta_from_amplitude(amps[j])?;
        let pmf = qae::qae_pmf(theta, grid);
        Ok::<f64, Error>(par::compensated_sum(
            pmf.probs.iter().zip(payoff).map(|(&p, &g)| p * g),
        ))
    })?;
    Ok(par::compensated_mean(&per_sample).clamp(0.0, 1.0))
}

/// Exact probability of reading 1 on the payoff qubit of the nested method.
pub fn p1_new<T: Sync>(integrand: &SeparableIntegrand<T>, cfg: &RunConfig) -> Result<f64> {
    let amps = amplitudes(integrand, cfg)?;
    let payoff = payoff_on_grid(integrand, cfg.inner_grid())?;
    p1_from_amplitudes(&amps, &payoff, cfg.inner_grid())
}

/// First-order error of sample `j` and its leading bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEstimate {
    /// `Δ = D g'(D S_j) H(θ_j, M) / g(D S_j)`.
    pub exact: f64,
    /// `D |g'(D S_j)| / (g(D S_j) M)`.
    pub bound: f64,
}

pub fn delta_bound<T: Sync>(
    integrand: &SeparableIntegrand<T>,
    j: u64,
    cfg: &RunConfig,
) -> Result<DeltaEstimate> {
    check_sample(j, cfg)?;
    let d = integrand.dimension() as f64;
    let s = s_j(integrand, j)?;
    let gp = integrand
        .eval_g_prime(d * s)
        .ok_or_else(|| Error::BoundUnavailable("payoff has no derivative (non-smooth g)".into()))?;
    let gv = integrand.eval_g(d * s)?;
    if gv == 0.0 {
        return Err(Error::BoundUnavailable(format!("g(D·S_{j}) = 0")));
    }
    let grid = cfg.inner_grid();
    let h = qae::h_direct(qae::theta_from_amplitude(s)?, grid);
    Ok(DeltaEstimate { exact: d * gp * h / gv, bound: d * gp.abs() / (gv * grid.size() as f64) })
}

/// `(1/N) Σ_j D g'(D S_j) H(θ_j, M)`, the first-order prediction of
/// `p1 - E_samp`.
pub fn first_order_shift<T: Sync>(integrand: &SeparableIntegrand<T>, cfg: &RunConfig) -> Result<f64> {
    if !integrand.has_derivative() {
        return Err(Error::BoundUnavailable("payoff has no derivative (non-smooth g)".into()));
    }
    let d = integrand.dimension() as f64;
    let grid = cfg.inner_grid();
    let terms = par::try_map_indexed(cfg.n_samp as usize, |idx| {
        let s = s_j(integrand, idx as u64 + 1)?;
        let gp = integrand.eval_g_prime(d * s).expect("checked above");
        Ok::<f64, Error>(d * gp * qae::h_direct(qae::theta_from_amplitude(s)?, grid))
    })?;
    Ok(par::compensated_mean(&terms))
}

/// Outcome distribution of the outer readout for success probability `p1`.
pub fn outer_pmf(p1: f64, cfg: &RunConfig) -> Result<QaePmf> {
    Ok(qae::qae_pmf(qae::theta_from_amplitude(p1)?, cfg.outer_grid()))
}

/// Draws `shots` outer readouts for a known `p1` and converts each folded
/// outcome back to an amplitude estimate.
pub fn sample_estimates<R: Rng + ?Sized>(
    p1: f64,
    cfg: &RunConfig,
    rng: &mut R,
    shots: usize,
) -> Result<Vec<f64>> {
    let pmf = outer_pmf(p1, cfg)?;
    let grid = cfg.outer_grid();
    Ok((0..shots)
        .map(|_| {
            let k = pmf.sample_index(rng.random::<f64>());
            qae::amplitude_from_theta(qae::fold(grid.point(k)))
        })
        .collect())
}

/// Full nested pipeline: exact `p1`, then `shots` sampled outer readouts.
pub fn run_end_to_end<T: Sync, R: Rng + ?Sized>(
    integrand: &SeparableIntegrand<T>,
    cfg: &RunConfig,
    rng: &mut R,
    shots: usize,
) -> Result<Vec<f64>> {
    if shots == 0 {
        return Ok(Vec::new());
    }
    let p1 = p1_new(integrand, cfg)?;
    sample_estimates(p1, cfg, rng, shots)
}

/// Counts of `f`-blocks for the two methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryCounts {
    pub n_f_prev: f64,
    pub n_f_new: f64,
    /// `n_f_new / n_f_prev = M_inner / D`.
    pub reduction: f64,
}

impl QueryCounts {
    pub fn from_sizes(d: u64, inner_calls: f64, outer_calls: f64) -> Self {
        let n_f_prev = d as f64 * outer_calls;
        let n_f_new = inner_calls * outer_calls;
        Self { n_f_prev, n_f_new, reduction: inner_calls / d as f64 }
    }
}

pub fn query_counts(cfg: &RunConfig, d: u64) -> QueryCounts {
    QueryCounts::from_sizes(
        d,
        cfg.inner_grid().size() as f64,
        cfg.outer_grid().size() as f64,
    )
}

/// One row of an error-vs-register-size study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPoint {
    pub m_inner: u32,
    pub p1: f64,
    pub abs_error: f64,
    pub first_order: Option<f64>,
}

/// `|p1 - E_samp|` for each inner register size in `m_values`.
pub fn error_decay<T: Sync>(
    integrand: &SeparableIntegrand<T>,
    cfg: &RunConfig,
    m_values: &[u32],
) -> Result<(f64, Vec<DecayPoint>)> {
    let exact = e_samp(integrand, cfg)?;
    let amps = amplitudes(integrand, cfg)?;
    let mut rows = Vec::with_capacity(m_values.len());
    for &m in m_values {
        let c = cfg.with_inner(m)?;
        let payoff = payoff_on_grid(integrand, c.inner_grid())?;
        let p1 = p1_from_amplitudes(&amps, &payoff, c.inner_grid())?;
        let first_order = if integrand.has_derivative() {
            Some(first_order_shift(integrand, &c)?)
        } else {
            None
        };
        rows.push(DecayPoint { m_inner: m, p1, abs_error: (p1 - exact).abs(), first_order });
    }
    Ok((exact, rows))
}

/// Least-squares slope of `log2(y)` against `x`.
pub fn log2_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let ly: Vec<f64> = ys.iter().map(|y| y.log2()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::FixedPointSpec;
    use crate::pcg::PcgParams;

    fn stream(seed: u64) -> PrnStream {
        PrnStream::new(PcgParams::default(), seed, FixedPointSpec::default(), false).unwrap()
    }

    fn constant_f(value: f64, d: usize) -> SeparableIntegrand<()> {
        SeparableIntegrand::new(vec![(); d], stream(5), move |_, _, _| value, move |x| x / d as f64)
            .unwrap()
            .with_derivative(move |_| 1.0 / d as f64)
    }

    #[test]
    fn constant_terms_give_constant_amplitude() {
        let zero = constant_f(0.0, 4);
        let one = constant_f(1.0, 4);
        for j in 1..=4 {
            assert_eq!(s_j(&zero, j).unwrap(), 0.0);
            assert_eq!(s_j(&one, j).unwrap(), 1.0);
        }
    }

    #[test]
    fn constant_payoff_collapses() {
        let ig = SeparableIntegrand::new(
            vec![(); 3],
            stream(11),
            |c: f64, e: f64, _: &()| 1.0 / (1.0 + (-(c + e)).exp()),
            |_| 0.37,
        )
        .unwrap();
        for m in 1..=8 {
            let cfg = RunConfig::new(8, m, 4).unwrap();
            assert!((p1_new(&ig, &cfg).unwrap() - 0.37).abs() < 1e-14);
            assert!((e_samp(&ig, &cfg).unwrap() - 0.37).abs() < 1e-15);
        }
        let single = RunConfig::new(1, 3, 3).unwrap();
        assert!((e_samp(&ig, &single).unwrap() - 0.37).abs() < 1e-15);
    }

    #[test]
    fn half_amplitude_is_on_grid() {
        let ig = constant_f(0.5, 4);
        let cfg = RunConfig::new(4, 2, 3).unwrap();
        // exact up to the rounding of sin²(π/4)
        assert!((p1_new(&ig, &cfg).unwrap() - e_samp(&ig, &cfg).unwrap()).abs() <= 2e-16);
        let d = delta_bound(&ig, 1, &cfg).unwrap();
        assert!(d.exact.abs() <= 1e-15);
    }

    #[test]
    fn linear_payoff_delta_is_h_over_s() {
        let d = 6usize;
        let ig = SeparableIntegrand::new(
            vec![0.3f64, -0.2, 0.1, 0.5, 0.0, -0.4],
            stream(21),
            |c: f64, e: f64, b: &f64| 1.0 / (1.0 + (-(b + 0.5 * c + e)).exp()),
            move |x| x / d as f64,
        )
        .unwrap()
        .with_derivative(move |_| 1.0 / d as f64);
        let cfg = RunConfig::new(4, 5, 3).unwrap();
        for j in 1..=4 {
            let s = s_j(&ig, j).unwrap();
            let h = qae::h_direct(qae::theta_from_amplitude(s).unwrap(), cfg.inner_grid());
            let de = delta_bound(&ig, j, &cfg).unwrap();
            assert!((de.exact - h / s).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_unavailable_without_derivative() {
        let ig = SeparableIntegrand::new(vec![(); 2], stream(1), |_, _, _: &()| 0.3, |x| x / 2.0).unwrap();
        let cfg = RunConfig::new(2, 3, 3).unwrap();
        assert!(matches!(delta_bound(&ig, 1, &cfg), Err(Error::BoundUnavailable(_))));
        assert!(matches!(delta_bound(&ig, 3, &cfg), Err(Error::SampleIndexOutOfRange { .. })));
    }

    #[test]
    fn out_of_range_f_is_rejected() {
        let ig = SeparableIntegrand::new(vec![(); 2], stream(1), |_, _, _: &()| 1.5, |_| 0.0).unwrap();
        assert!(matches!(s_j(&ig, 1), Err(Error::NotAmplitudeEncodable { what: "f", .. })));
    }

    #[test]
    fn run_config_validation() {
        assert!(RunConfig::new(6, 3, 3).is_err());
        assert!(RunConfig::new(0, 3, 3).is_err());
        assert!(RunConfig::new(8, 0, 3).is_err());
        assert_eq!(RunConfig::new(16, 3, 4).unwrap().log2_n_samp(), 4);
    }

    #[test]
    fn outer_pmf_edges() {
        let cfg = RunConfig::new(1, 2, 3).unwrap();
        let pmf = outer_pmf(0.0, &cfg).unwrap();
        assert_eq!(pmf.probs[0], 1.0);
        let p1 = qae::amplitude_from_theta(2.0 / 8.0);
        let pmf = outer_pmf(p1, &cfg).unwrap();
        assert!((pmf.probs[2] - 1.0).abs() < 1e-12);
        let pmf = outer_pmf(0.3, &cfg).unwrap();
        let mode = cfg.outer_grid().point(pmf.mode());
        assert!((mode - qae::theta_from_amplitude(0.3).unwrap()).abs() <= 1.0 / 8.0);
    }

    #[test]
    fn no_shots_no_estimates() {
        use rand::SeedableRng;
        let ig = constant_f(0.25, 2);
        let cfg = RunConfig::new(2, 3, 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert!(run_end_to_end(&ig, &cfg, &mut rng, 0).unwrap().is_empty());
    }

    #[test]
    fn query_count_algebra() {
        let q = QueryCounts::from_sizes(64, 64.0, 16.0);
        assert_eq!(q.reduction, 1.0);
        assert_eq!(q.n_f_prev, q.n_f_new);
        let q = QueryCounts::from_sizes(32, 64.0, 16.0);
        assert_eq!(q.reduction, 2.0);
        let q = QueryCounts::from_sizes(1 << 20, 1e4, 1.0);
        assert!((q.reduction - 1e-2).abs() < 1e-3);
        let cfg = RunConfig::new(4, 6, 5).unwrap();
        let q = query_counts(&cfg, 100);
        assert_eq!((q.n_f_prev, q.n_f_new, q.reduction), (3200.0, 2048.0, 0.64));
    }

    #[test]
    fn tolerance_to_register_size() {
        assert_eq!(inner_qubits_for_tolerance(1e-2, 1e-2).unwrap(), 14);
        assert_eq!(inner_qubits_for_tolerance(0.5, 0.5).unwrap(), 2);
        assert!(inner_qubits_for_tolerance(0.0, 0.1).is_err());
    }
}
