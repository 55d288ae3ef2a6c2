//! Command pipelines. Each builds a [`Report`]; writing is left to the caller.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::config::{Command, Config, ConfigError, IntegrandChoice, RunSpec};
use super::report::{DataTable, Report};
use crate::credit::{self, RiskMeasureSpec, TailModel};
use crate::distributions::{self, PrnStream};
use crate::integrator::{self, RunConfig, SeparableIntegrand};
use crate::pcg::{self, PcgParams, Permutation};
use crate::qae::{self, QaeGrid};
use crate::resources::{self, CircuitMethod, CostReport};
use crate::synthetic;
use crate::{row, Error};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Module(#[from] Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    /// 1 for validation failures, 2 for everything raised while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Module(_) | RunError::Io(_) => 2,
        }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

pub fn run(spec: &RunSpec) -> RunResult<Report> {
    let c = &spec.config;
    let mut r = Report::new(spec.command.name());
    match spec.command {
        Command::PcgCheck => pcg_check(c, &mut r)?,
        Command::Qae => qae_tables(c, &mut r)?,
        Command::Simulate => simulate(c, &mut r)?,
        Command::Var => var(c, &mut r)?,
        Command::Cvar => cvar(c, &mut r)?,
        Command::Tcount => tcount(c, &mut r)?,
        Command::Verify => verify(c, &mut r)?,
    }
    Ok(r)
}

/// Number of failed checks recorded by `verify`; zero for other commands.
pub fn failed_checks(report: &Report) -> u64 {
    match report.get("checks_failed") {
        Some(super::report::Value::UInt(n)) => *n,
        _ => 0,
    }
}

fn echo_prn(c: &Config, r: &mut Report) {
    let p = &c.prn;
    r.diagnostic("prn.a", p.params.a());
    r.diagnostic("prn.c", p.params.c());
    r.diagnostic("prn.n_prn", p.params.state_bits());
    r.diagnostic("prn.perm", p.params.perm().name());
    r.diagnostic("prn.seed", p.seed);
    r.diagnostic("prn.n_dig", p.n_dig);
    r.diagnostic("prn.quantize", p.quantize);
    // a zero fraction is lifted before inversion; echo the value used
    r.diagnostic("prn.zero_fraction_clamp", 0.5 * (-(p.n_dig as f64)).exp2());
}

fn echo_run(c: &Config, r: &mut Report) {
    let run = &c.run;
    r.diagnostic("run.n_samp", run.cfg.n_samp());
    r.diagnostic("run.m_inner", run.cfg.m_inner());
    r.diagnostic("run.m_outer", run.cfg.m_outer());
    match run.tolerance {
        Some((l, d)) => {
            r.diagnostic("run.m_inner_source", "tolerance");
            r.diagnostic("run.l", l);
            r.diagnostic("run.delta_rel", d);
        }
        None => r.diagnostic("run.m_inner_source", "explicit"),
    }
    r.diagnostic("run.shots", run.shots);
    r.diagnostic("run.seed", run.seed);
}

fn pcg_check(c: &Config, r: &mut Report) -> RunResult<()> {
    echo_prn(c, r);
    let params = c.prn.params;
    let seed = c.prn.seed;
    let n = c.pcg_check.max_index;
    let mut state = pcg::seed(params, seed)?;
    let mut mismatches = 0u64;
    let mut first_mismatch = None;
    let mut roundtrip_failures = 0u64;
    for i in 1..=n {
        state = state.progress();
        let jumped = pcg::jump(params, seed, i)?;
        if jumped.x_tilde() != state.x_tilde() {
            mismatches += 1;
            first_mismatch.get_or_insert(i);
        }
        if params.inverse_permute(state.output()) != state.x_tilde() {
            roundtrip_failures += 1;
        }
    }
    r.diagnostic("checked_indices", n);
    r.diagnostic("jump_progress_mismatches", mismatches);
    if let Some(i) = first_mismatch {
        r.diagnostic("first_mismatch_index", i);
    }
    r.diagnostic("permutation_roundtrip_failures", roundtrip_failures);

    let stream = c.prn.stream();
    let mut t = DataTable::new("pcg_stream", &["index", "x_tilde", "output", "uniform", "normal"]);
    for i in 1..=c.pcg_check.show.min(n) {
        let st = pcg::jump(params, seed, i)?;
        let u = distributions::uniform_from_word(st.output(), params.state_bits(), c.prn.n_dig)?;
        t.push(row![i, st.x_tilde(), st.output(), u, stream.normal_from_word(st.output())?]);
    }
    r.table(t);
    Ok(())
}

/// Off-grid phases in `(0, 1/2)` from a Weyl sequence.
pub fn phase_sweep(n: usize) -> Vec<f64> {
    const INV_GOLDEN: f64 = 0.618_033_988_749_894_8;
    (1..=n).map(|k| 0.5 * (k as f64 * INV_GOLDEN).fract()).collect()
}

fn qae_tables(c: &Config, r: &mut Report) -> RunResult<()> {
    let q = &c.qae;
    r.reference("confidence_floor", qae::CONFIDENCE_FLOOR);
    let grid = QaeGrid::new(q.m)?;
    let mut pmf_t = DataTable::new("qae_pmf", &["theta", "k", "theta_tilde", "folded", "prob"]);
    for &theta in &q.theta {
        let pmf = qae::qae_pmf(theta, grid);
        for (k, p) in pmf.probs.iter().enumerate() {
            let tt = grid.point(k);
            pmf_t.push(row![theta, k, tt, qae::fold(tt), p]);
        }
    }
    r.table(pmf_t);

    let mut diag = DataTable::new(
        "qae_diagnostics",
        &["theta", "m", "M", "confidence", "h_direct", "h_closed", "h_bound", "abs_h_times_M"],
    );
    let mut min_conf = f64::INFINITY;
    for &theta in &q.theta {
        for m in q.m_min..=q.m_max {
            let g = QaeGrid::new(m)?;
            let conf = qae::qae_confidence(theta, g);
            min_conf = min_conf.min(conf);
            let hd = qae::h_direct(theta, g);
            let hc = qae::h_closed(theta, g);
            diag.push(row![theta, m, g.size(), conf, hd, hc, qae::h_bound(g), hd.abs() * g.size() as f64]);
        }
    }
    r.table(diag);
    r.diagnostic("min_confidence", min_conf);

    let sweep = phase_sweep(q.sweep);
    let mut decay = DataTable::new("h_decay", &["m", "M", "sup_abs_h", "sup_abs_h_times_M", "min_confidence"]);
    let mut worst = 0.0f64;
    let mut sweep_min_conf = f64::INFINITY;
    for m in q.m_min..=q.m_max {
        let g = QaeGrid::new(m)?;
        let sup = sweep.iter().map(|&t| qae::h_closed(t, g).abs()).fold(0.0, f64::max);
        let cmin = sweep.iter().map(|&t| qae::qae_confidence(t, g)).fold(f64::INFINITY, f64::min);
        worst = worst.max(sup * g.size() as f64);
        sweep_min_conf = sweep_min_conf.min(cmin);
        decay.push(row![m, g.size(), sup, sup * g.size() as f64, cmin]);
    }
    r.table(decay);
    r.diagnostic("sweep_points", q.sweep);
    r.diagnostic("sweep_max_abs_h_times_M", worst);
    r.diagnostic("sweep_min_confidence", sweep_min_conf);

    if c.run.shots > 0 {
        let theta = q.theta[0];
        let pmf = qae::qae_pmf(theta, grid);
        let mut rng = ChaCha8Rng::seed_from_u64(c.run.seed);
        let mut counts = vec![0u64; grid.size()];
        for _ in 0..c.run.shots {
            counts[pmf.sample_index(rng.random::<f64>())] += 1;
        }
        let mut t = DataTable::new("qae_samples", &["k", "theta_tilde", "count", "expected"]);
        for (k, &n) in counts.iter().enumerate() {
            t.push(row![k, grid.point(k), n, pmf.probs[k] * c.run.shots as f64]);
        }
        r.table(t);
        r.diagnostic("sampled_theta", theta);
        r.diagnostic("run.shots", c.run.shots);
        r.diagnostic("run.seed", c.run.seed);
    }
    Ok(())
}

/// Fraction of outer readouts whose folded phase lies within `1/M_out` of
/// `θ(p1)`, and the mean amplitude estimate.
pub fn outer_hits<R: Rng + ?Sized>(p1: f64, cfg: &RunConfig, rng: &mut R, shots: usize) -> crate::Result<(f64, f64)> {
    let pmf = integrator::outer_pmf(p1, cfg)?;
    let grid = cfg.outer_grid();
    let theta = qae::theta_from_amplitude(p1)?;
    let step = 1.0 / grid.size() as f64;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for _ in 0..shots {
        let folded = qae::fold(grid.point(pmf.sample_index(rng.random::<f64>())));
        if (folded - theta).abs() < step {
            hits += 1;
        }
        sum += qae::amplitude_from_theta(folded);
    }
    Ok((hits as f64 / shots as f64, sum / shots as f64))
}

fn simulate(c: &Config, r: &mut Report) -> RunResult<()> {
    echo_prn(c, r);
    echo_run(c, r);
    let stream = c.prn.stream();
    r.diagnostic("run.integrand", c.run.integrand.name());
    match c.run.integrand {
        IntegrandChoice::Synthetic(kind) => {
            r.diagnostic("run.d", c.run.d);
            let ig = synthetic::integrand(kind, c.run.d, stream)?;
            simulate_with(&ig, c, r)
        }
        IntegrandChoice::CreditVar | IntegrandChoice::CreditCvar => {
            let portfolio = c.portfolio.portfolio.as_ref().expect("validated");
            let l_alpha = c.measure.l_alpha.expect("validated");
            let measure = if c.run.integrand == IntegrandChoice::CreditVar {
                RiskMeasureSpec::var(l_alpha)
            } else {
                RiskMeasureSpec::cvar(l_alpha)
            };
            r.diagnostic("portfolio.n_obl", portfolio.n_obl());
            r.diagnostic("measure.l_alpha", l_alpha);
            if measure.kind == credit::MeasureKind::Cvar {
                r.diagnostic("measure.c", measure.normalization(portfolio)?);
            }
            let ig = credit::to_separable(portfolio, &measure, &stream)?;
            simulate_with(&ig, c, r)
        }
    }
}

fn simulate_with<T: Sync>(ig: &SeparableIntegrand<T>, c: &Config, r: &mut Report) -> RunResult<()> {
    let cfg = c.run.cfg;
    let e = integrator::e_samp(ig, &cfg)?;
    let amps = integrator::amplitudes(ig, &cfg)?;
    let payoff = integrator::payoff_on_grid(ig, cfg.inner_grid())?;
    let p1 = integrator::p1_from_amplitudes(&amps, &payoff, cfg.inner_grid())?;
    r.reference("e_samp", e);
    r.reference("p1", p1);
    r.reference("abs_error", (p1 - e).abs());

    let mut max_exact = 0.0f64;
    let mut max_bound = 0.0f64;
    let mut unavailable = None;
    for j in 1..=cfg.n_samp() {
        match integrator::delta_bound(ig, j, &cfg) {
            Ok(d) => {
                max_exact = max_exact.max(d.exact.abs());
                max_bound = max_bound.max(d.bound);
            }
            Err(Error::BoundUnavailable(why)) => {
                unavailable = Some(why);
                break;
            }
            Err(other) => return Err(other.into()),
        }
    }
    match unavailable {
        None => {
            r.reference("delta_bound_max", max_bound);
            r.diagnostic("delta_exact_max", max_exact);
            r.diagnostic("first_order_shift", integrator::first_order_shift(ig, &cfg)?);
        }
        Some(why) => {
            r.reference("delta_bound_max", format!("unavailable ({why})"));
            r.diagnostic("empirical_error", (p1 - e).abs());
        }
    }

    let q = integrator::query_counts(&cfg, ig.dimension());
    r.reference("n_f_prev", q.n_f_prev);
    r.reference("n_f_new", q.n_f_new);
    r.reference("query_reduction", q.reduction);

    if c.run.shots > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(c.run.seed);
        let (frac, mean) = outer_hits(p1, &cfg, &mut rng, c.run.shots)?;
        r.diagnostic("shots_within_one_step", frac);
        r.diagnostic("shots_mean_estimate", mean);
    }

    let (_, rows) = integrator::error_decay(ig, &cfg, &c.run.m_sweep)?;
    let mut t = DataTable::new("error_decay", &["m_inner", "M", "p1", "abs_error", "first_order"]);
    for d in &rows {
        let fo = d.first_order.map_or_else(|| "-".to_string(), |x| x.to_string());
        t.push(row![d.m_inner, 1u64 << d.m_inner, d.p1, d.abs_error, fo]);
    }
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|d| d.abs_error > 0.0).map(|d| (d.m_inner as f64, d.abs_error)).collect();
    if pts.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        r.diagnostic("error_decay_log2_slope", integrator::log2_slope(&xs, &ys));
    }
    r.table(t);
    Ok(())
}

/// `sorted_desc[floor(αN)]`: the smallest sample loss whose exceedance
/// frequency is at most `α`.
pub fn sort_quantile(losses: &[f64], alpha: f64) -> f64 {
    let mut v = losses.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let k = ((alpha * v.len() as f64).floor() as usize).min(v.len() - 1);
    v[k]
}

fn var(c: &Config, r: &mut Report) -> RunResult<()> {
    echo_prn(c, r);
    echo_run(c, r);
    let portfolio = c.portfolio.portfolio.as_ref().expect("validated");
    let stream = c.prn.stream();
    let cfg = c.run.cfg;
    let m = &c.measure;
    echo_measure(c, r);
    let l = credit::var_search(portfolio, &stream, m.alpha, &cfg, m.tol, m.method)?;
    let model = TailModel::new(portfolio, &stream, &cfg, m.method)?;
    r.reference("var", l);
    r.diagnostic("tail_prob_at_var", model.tail_prob(l)?);
    let losses = credit::sample_losses(portfolio, &stream, &cfg)?;
    r.diagnostic("sort_quantile", sort_quantile(&losses, m.alpha));
    r.table(tail_curve(portfolio.total_exposure(), &model)?);
    Ok(())
}

fn echo_measure(c: &Config, r: &mut Report) {
    let portfolio = c.portfolio.portfolio.as_ref().expect("validated");
    r.diagnostic("portfolio.n_obl", portfolio.n_obl());
    r.diagnostic("portfolio.normalize", c.portfolio.normalize);
    r.diagnostic("portfolio.total_exposure", portfolio.total_exposure());
    r.diagnostic("measure.alpha", c.measure.alpha);
    r.diagnostic("measure.tol", c.measure.tol);
    r.diagnostic("measure.method", c.measure.method.name());
}

fn tail_curve(total: f64, model: &TailModel) -> crate::Result<DataTable> {
    let mut t = DataTable::new("tail_curve", &["l_alpha", "tail_prob"]);
    for k in 0..=100 {
        let l = total * k as f64 / 100.0;
        t.push(row![l, model.tail_prob(l)?]);
    }
    Ok(t)
}

fn cvar(c: &Config, r: &mut Report) -> RunResult<()> {
    echo_prn(c, r);
    echo_run(c, r);
    echo_measure(c, r);
    let portfolio = c.portfolio.portfolio.as_ref().expect("validated");
    let stream = c.prn.stream();
    let cfg = c.run.cfg;
    let m = &c.measure;
    let l_alpha = match m.l_alpha {
        Some(l) => {
            r.diagnostic("l_alpha_source", "config");
            l
        }
        None => {
            r.diagnostic("l_alpha_source", "var_search");
            credit::var_search(portfolio, &stream, m.alpha, &cfg, m.tol, m.method)?
        }
    };
    r.reference("l_alpha", l_alpha);
    r.diagnostic("measure.c", RiskMeasureSpec::cvar(l_alpha).normalization(portfolio)?);
    r.diagnostic("tail_prob", credit::tail_prob(portfolio, &stream, l_alpha, &cfg, m.method)?);
    r.reference("cvar", credit::cvar(portfolio, &stream, l_alpha, &cfg, m.method)?);
    Ok(())
}

fn tcount(c: &Config, r: &mut Report) -> RunResult<()> {
    let res = &c.resources;
    let p = &res.params;
    for (k, v) in [
        ("resources.n_prn", p.n_prn),
        ("resources.n_dig", p.n_dig),
        ("resources.n_icdf", p.n_icdf),
        ("resources.n_samp", p.n_samp),
        ("resources.n_obl", p.n_obl),
        ("resources.n_exp", p.n_exp()),
        ("resources.d", res.d),
    ] {
        r.diagnostic(k, v);
    }
    r.diagnostic("resources.l", res.l);
    r.diagnostic("resources.delta_rel", res.delta_rel);
    let rep = CostReport::compute(p, res.l, res.delta_rel, res.d)?;
    r.reference("t_one_prev", rep.t_one_prev);
    r.reference("t_one_new", rep.t_one_new);
    r.reference("ratio_one", rep.ratio_one);
    r.reference("query_reduction", rep.query_reduction);
    r.reference("total_ratio", rep.total_ratio);
    r.reference("rounded.t_one_prev", rep.rounded.t_one_prev);
    r.reference("rounded.t_one_new", rep.rounded.t_one_new);
    r.reference("rounded.ratio_one", rep.rounded.ratio_one);
    r.reference("rounded.query_reduction", rep.rounded.query_reduction);
    r.reference("rounded.total_ratio", rep.rounded.total_ratio);

    let mut t = DataTable::new("tcount_breakdown", &["method", "item", "t_count", "leading"]);
    for (name, items) in [("previous", &rep.prev_items), ("new", &rep.new_items)] {
        for it in items.iter() {
            t.push(row![name, it.name, it.t_count, it.leading]);
        }
    }
    r.table(t);

    let m_inner = integrator::inner_qubits_for_tolerance(res.l, res.delta_rel)
        .map_err(|e| ConfigError::Invalid { key: "resources.l".into(), msg: e.to_string() })?;
    r.diagnostic("inner_register_qubits", m_inner);
    let mut t = DataTable::new("registers", &["method", "symbol", "role", "qubits"]);
    for (name, method, mi) in [
        ("previous", CircuitMethod::Previous, None),
        ("new", CircuitMethod::New, Some(m_inner as u64)),
    ] {
        for reg in resources::register_inventory(method, p, mi, None) {
            let w = reg.width.map_or_else(|| "-".to_string(), |w| w.to_string());
            t.push(row![name, reg.symbol, reg.role, w]);
        }
    }
    r.table(t);
    Ok(())
}

struct Checks {
    table: DataTable,
    passed: u64,
    failed: u64,
}

impl Checks {
    fn new() -> Self {
        Self { table: DataTable::new("verify", &["check", "cases", "failures", "status"]), passed: 0, failed: 0 }
    }

    fn record(&mut self, name: &str, cases: u64, failures: u64) {
        if failures == 0 {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        let status = if failures == 0 { "pass" } else { "fail" };
        self.table.push(row![name, cases, failures, status]);
    }
}

fn random_params<R: Rng + ?Sized>(rng: &mut R) -> PcgParams {
    loop {
        let a = rng.random::<u64>() | 1;
        let perm = if rng.random::<bool>() { Permutation::XshRr } else { Permutation::Identity };
        if let Ok(p) = PcgParams::new(a, rng.random::<u64>(), 64, perm) {
            return p;
        }
    }
}

fn verify(c: &Config, r: &mut Report) -> RunResult<()> {
    let v = &c.verify;
    let mut rng = ChaCha8Rng::seed_from_u64(c.run.seed);
    let mut checks = Checks::new();

    let (mut cases, mut fails, mut round_fails) = (0u64, 0u64, 0u64);
    for _ in 0..v.trials {
        let p = random_params(&mut rng);
        let x0 = rng.random::<u64>();
        let mut s = pcg::seed(p, x0)?;
        for i in 1..=v.max_index {
            s = s.progress();
            cases += 1;
            if pcg::jump(p, x0, i)?.x_tilde() != s.x_tilde() {
                fails += 1;
            }
            if p.inverse_permute(s.output()) != s.x_tilde() {
                round_fails += 1;
            }
        }
    }
    checks.record("jump_equals_progress", cases, fails);
    checks.record("permutation_roundtrip", cases, round_fails);

    let sweep = phase_sweep(v.thetas);
    let (mut norm_fails, mut h_fails, mut conf_fails, mut bound_fails, mut n) = (0, 0, 0, 0, 0u64);
    for m in 2..=10 {
        let g = QaeGrid::new(m)?;
        for &t in &sweep {
            n += 1;
            if (qae::qae_pmf(t, g).total() - 1.0).abs() > 1e-12 {
                norm_fails += 1;
            }
            let hd = qae::h_direct(t, g);
            if (hd - qae::h_closed(t, g)).abs() > 1e-9 {
                h_fails += 1;
            }
            if hd.abs() * g.size() as f64 > 1.0 + qae::H_CALIBRATION / g.size() as f64 {
                bound_fails += 1;
            }
            if qae::qae_confidence(t, g) < qae::CONFIDENCE_FLOOR {
                conf_fails += 1;
            }
        }
    }
    checks.record("pmf_normalization", n, norm_fails);
    checks.record("h_closed_matches_direct", n, h_fails);
    checks.record("h_times_m_bound", n, bound_fails);
    checks.record("confidence_floor", n, conf_fails);

    // sequential and jump-only streams must agree on every sample
    let stream: PrnStream = c.prn.stream();
    let d = c.run.d;
    let ig = synthetic::integrand(synthetic::Payoff::Quadratic, d, stream.clone())?;
    let cfg = c.run.cfg;
    let mut seq_fails = 0;
    for j in 1..=cfg.n_samp() {
        if ig.term_sum_by_jumps(j)? != ig.term_sum_sequential(j)? {
            seq_fails += 1;
        }
    }
    checks.record("jump_stream_equals_sequential_stream", cfg.n_samp(), seq_fails);

    let kappa = 0.375;
    let flat = SeparableIntegrand::new(synthetic::offsets(d), stream, synthetic::term, move |_| kappa)?;
    let mut collapse_fails = 0;
    let e = integrator::e_samp(&flat, &cfg)?;
    for m in 1..=10 {
        let p1 = integrator::p1_new(&flat, &cfg.with_inner(m)?)?;
        if (p1 - kappa).abs() > 1e-12 || (e - kappa).abs() > 1e-12 {
            collapse_fails += 1;
        }
    }
    checks.record("constant_payoff_collapse", 10, collapse_fails);

    let mut icdf_fails = 0;
    let mut prev = f64::NEG_INFINITY;
    for k in 1..1000 {
        let u = k as f64 / 1000.0;
        let x = distributions::inv_normal_cdf(u)?;
        let y = distributions::inv_normal_cdf(1.0 - u)?;
        if x <= prev || (x + y).abs() > 1e-9 {
            icdf_fails += 1;
        }
        prev = x;
    }
    checks.record("inv_cdf_monotone_antisymmetric", 999, icdf_fails);

    r.diagnostic("verify.trials", v.trials);
    r.diagnostic("verify.max_index", v.max_index);
    r.diagnostic("verify.thetas", v.thetas);
    r.diagnostic("run.seed", c.run.seed);
    r.diagnostic("h_calibration", qae::H_CALIBRATION);
    r.diagnostic("confidence_floor", 8.0 / (PI * PI));
    r.diagnostic("checks_passed", checks.passed);
    r.diagnostic("checks_failed", checks.failed);
    r.table(checks.table);
    Ok(())
}
