//! Run-config grammar: a TOML document with fixed sections. Unknown keys are
//! rejected, unset keys take the reference defaults, and every module
//! precondition is checked before dispatch.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;
use toml::{Table, Value};

use crate::credit::{Method, PortfolioSpec};
use crate::distributions::{FixedPointSpec, PrnStream};
use crate::integrator::{self, RunConfig};
use crate::pcg::{self, PcgParams, Permutation};
use crate::qae::QaeGrid;
use crate::resources::ResourceParams;
use crate::synthetic::Payoff;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("{key}: {msg}")]
    Invalid { key: String, msg: String },
}

fn invalid(key: impl Into<String>, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), msg: msg.into() }
}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    PcgCheck,
    Qae,
    Simulate,
    Var,
    Cvar,
    Tcount,
    Verify,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::PcgCheck,
        Command::Qae,
        Command::Simulate,
        Command::Var,
        Command::Cvar,
        Command::Tcount,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::PcgCheck => "pcg-check",
            Command::Qae => "qae",
            Command::Simulate => "simulate",
            Command::Var => "var",
            Command::Cvar => "cvar",
            Command::Tcount => "tcount",
            Command::Verify => "verify",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = ConfigError;

    fn from_str(s: &str) -> ConfigResult<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| invalid("command", format!("unknown command {s:?}")))
    }
}

/// Integrand driven by `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntegrandChoice {
    Synthetic(Payoff),
    CreditVar,
    CreditCvar,
}

impl IntegrandChoice {
    pub fn name(self) -> &'static str {
        match self {
            IntegrandChoice::Synthetic(p) => p.name(),
            IntegrandChoice::CreditVar => "credit-var",
            IntegrandChoice::CreditCvar => "credit-cvar",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrnSection {
    pub params: PcgParams,
    pub seed: u64,
    pub n_dig: u32,
    pub quantize: bool,
}

impl PrnSection {
    pub fn stream(&self) -> PrnStream {
        PrnStream::new(self.params, self.seed, FixedPointSpec::new(self.n_dig).expect("validated"), self.quantize)
            .expect("validated")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub cfg: RunConfig,
    /// Set when `m_inner` was derived from `l` and `delta_rel`.
    pub tolerance: Option<(f64, f64)>,
    pub shots: usize,
    pub seed: u64,
    pub integrand: IntegrandChoice,
    /// Dimension of synthetic integrands.
    pub d: usize,
    pub m_sweep: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioSection {
    pub path: Option<PathBuf>,
    pub normalize: bool,
    pub portfolio: Option<PortfolioSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSection {
    pub alpha: f64,
    pub l_alpha: Option<f64>,
    pub tol: f64,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourcesSection {
    pub params: ResourceParams,
    pub l: f64,
    pub delta_rel: f64,
    pub d: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaeSection {
    pub theta: Vec<f64>,
    pub m: u32,
    pub m_min: u32,
    pub m_max: u32,
    pub sweep: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcgCheckSection {
    pub max_index: u64,
    pub show: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySection {
    pub trials: usize,
    pub max_index: u64,
    pub thetas: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub prn: PrnSection,
    pub run: RunSection,
    pub portfolio: PortfolioSection,
    pub measure: MeasureSection,
    pub resources: ResourcesSection,
    pub qae: QaeSection,
    pub pcg_check: PcgCheckSection,
    pub verify: VerifySection,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    pub config: Config,
}

/// Command-line values applied on top of the document before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    pub quantize: bool,
    pub out: Option<PathBuf>,
}

/// Parses the value grammar shared by configs and summaries.
pub fn parse_document(text: &str) -> ConfigResult<Table> {
    text.parse::<Table>().map_err(|e| ConfigError::Parse(e.to_string().trim_end().to_string()))
}

/// Parses a config whose top-level `command` key names the command.
/// Relative paths resolve against the working directory.
pub fn parse_config(text: &str) -> ConfigResult<RunSpec> {
    parse_config_with(None, text, Path::new("."), &Overrides::default())
}

/// Full entry point: `command` (if given) must agree with any `command` key
/// in the document; relative paths resolve against `base_dir`.
pub fn parse_config_with(
    command: Option<Command>,
    text: &str,
    base_dir: &Path,
    overrides: &Overrides,
) -> ConfigResult<RunSpec> {
    let mut doc = parse_document(text)?;
    let declared = match doc.remove("command") {
        None => None,
        Some(Value::String(s)) => Some(s.parse::<Command>()?),
        Some(_) => return Err(invalid("command", "expected a string")),
    };
    let command = match (command, declared) {
        (Some(a), Some(b)) if a != b => {
            return Err(invalid("command", format!("document declares {b} but {a} was requested")))
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => return Err(invalid("command", "missing")),
    };
    apply_overrides(&mut doc, overrides);
    let config = Config::from_table(&doc, command, base_dir, overrides)?;
    Ok(RunSpec { command, config })
}

fn section_mut<'a>(doc: &'a mut Table, name: &str) -> Option<&'a mut Table> {
    doc.entry(name.to_string()).or_insert_with(|| Value::Table(Table::new())).as_table_mut()
}

fn u64_value(v: u64) -> Value {
    match i64::try_from(v) {
        Ok(i) => Value::Integer(i),
        Err(_) => Value::String(v.to_string()),
    }
}

fn apply_overrides(doc: &mut Table, o: &Overrides) {
    if let Some(seed) = o.seed {
        if let Some(t) = section_mut(doc, "prn") {
            t.insert("seed".into(), u64_value(seed));
        }
    }
    if let Some(shots) = o.shots {
        if let Some(t) = section_mut(doc, "run") {
            t.insert("shots".into(), u64_value(shots));
        }
    }
    if o.quantize {
        if let Some(t) = section_mut(doc, "prn") {
            t.insert("quantize".into(), Value::Boolean(true));
        }
    }
}

/// Typed access to one section with unknown-key rejection.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
}

impl<'a> Section<'a> {
    fn open(doc: &'a Table, name: &'static str, allowed: &[&str]) -> ConfigResult<Self> {
        let table = match doc.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => return Err(invalid(name, "expected a table")),
        };
        if let Some(t) = table {
            for key in t.keys() {
                if !allowed.contains(&key.as_str()) {
                    return Err(invalid(format!("{name}.{key}"), "unknown key"));
                }
            }
        }
        Ok(Self { name, table })
    }

    fn key(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn raw(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn has(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    fn u64(&self, key: &str) -> ConfigResult<Option<u64>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        match v {
            Value::Integer(i) if *i >= 0 => Ok(Some(*i as u64)),
            Value::Integer(i) => Err(invalid(self.key(key), format!("must be non-negative, got {i}"))),
            Value::String(s) => parse_u64_text(s)
                .map(Some)
                .ok_or_else(|| invalid(self.key(key), format!("not an unsigned 64-bit integer: {s:?}"))),
            _ => Err(invalid(self.key(key), "expected an integer")),
        }
    }

    fn u64_or(&self, key: &str, default: u64) -> ConfigResult<u64> {
        Ok(self.u64(key)?.unwrap_or(default))
    }

    fn u32_or(&self, key: &str, default: u32) -> ConfigResult<u32> {
        let v = self.u64_or(key, default as u64)?;
        u32::try_from(v).map_err(|_| invalid(self.key(key), format!("{v} is too large")))
    }

    fn f64(&self, key: &str) -> ConfigResult<Option<f64>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let x = match v {
            Value::Float(x) => *x,
            Value::Integer(i) => *i as f64,
            _ => return Err(invalid(self.key(key), "expected a number")),
        };
        if !x.is_finite() {
            return Err(invalid(self.key(key), "must be finite"));
        }
        Ok(Some(x))
    }

    fn f64_or(&self, key: &str, default: f64) -> ConfigResult<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn bool_or(&self, key: &str, default: bool) -> ConfigResult<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(invalid(self.key(key), "expected true or false")),
        }
    }

    fn str(&self, key: &str) -> ConfigResult<Option<&'a str>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(invalid(self.key(key), "expected a string")),
        }
    }

    fn f64_list(&self, key: &str) -> ConfigResult<Option<Vec<f64>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(i) => Ok(*i as f64),
                    _ => Err(invalid(self.key(key), "expected numbers")),
                })
                .collect::<ConfigResult<Vec<_>>>()
                .map(Some),
            Some(_) => self.f64(key).map(|x| x.map(|x| vec![x])),
        }
    }

    fn u32_list(&self, key: &str) -> ConfigResult<Option<Vec<u32>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if (0..=u32::MAX as i64).contains(i) => Ok(*i as u32),
                    _ => Err(invalid(self.key(key), "expected non-negative integers")),
                })
                .collect::<ConfigResult<Vec<_>>>()
                .map(Some),
            Some(_) => Err(invalid(self.key(key), "expected an array")),
        }
    }
}

/// Decimal, `0x` hexadecimal or `0b` binary, with optional underscores.
pub fn parse_u64_text(s: &str) -> Option<u64> {
    let t: String = s.trim().chars().filter(|&c| c != '_').collect();
    if let Some(h) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u64::from_str_radix(h, 16).ok()
    } else if let Some(b) = t.strip_prefix("0b").or_else(|| t.strip_prefix("0B")) {
        u64::from_str_radix(b, 2).ok()
    } else {
        t.parse().ok()
    }
}

const TOP_LEVEL: &[&str] =
    &["prn", "run", "portfolio", "measure", "resources", "qae", "pcg_check", "verify", "output"];

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUT_DIR: &str = "nqae-out";

impl Config {
    fn from_table(doc: &Table, command: Command, base_dir: &Path, o: &Overrides) -> ConfigResult<Self> {
        for key in doc.keys() {
            if !TOP_LEVEL.contains(&key.as_str()) {
                return Err(invalid(key.clone(), "unknown section"));
            }
        }
        let prn = prn_section(doc)?;
        let run = run_section(doc)?;
        let portfolio = portfolio_section(doc, base_dir)?;
        let measure = measure_section(doc)?;
        let resources = resources_section(doc)?;
        let qae = qae_section(doc)?;
        let pcg_check = pcg_check_section(doc)?;
        let verify = verify_section(doc)?;
        let out = Section::open(doc, "output", &["dir"])?;
        let out_dir = match (&o.out, out.str("dir")?) {
            (Some(p), _) => p.clone(),
            (None, Some(d)) => base_dir.join(d),
            (None, None) => PathBuf::from(DEFAULT_OUT_DIR),
        };
        let cfg = Self { prn, run, portfolio, measure, resources, qae, pcg_check, verify, out_dir };
        cfg.check_command(command)?;
        Ok(cfg)
    }

    /// Cross-section requirements of each command.
    fn check_command(&self, command: Command) -> ConfigResult<()> {
        let needs_portfolio = matches!(command, Command::Var | Command::Cvar)
            || (command == Command::Simulate
                && matches!(self.run.integrand, IntegrandChoice::CreditVar | IntegrandChoice::CreditCvar));
        if needs_portfolio && self.portfolio.portfolio.is_none() {
            return Err(invalid("portfolio.path", format!("required by {command}")));
        }
        if command == Command::Simulate
            && matches!(self.run.integrand, IntegrandChoice::CreditVar | IntegrandChoice::CreditCvar)
            && self.measure.l_alpha.is_none()
        {
            return Err(invalid("measure.l_alpha", "required by credit integrands"));
        }
        Ok(())
    }
}

fn prn_section(doc: &Table) -> ConfigResult<PrnSection> {
    let s = Section::open(doc, "prn", &["a", "c", "n_prn", "perm", "seed", "n_dig", "quantize"])?;
    let n_prn = s.u32_or("n_prn", 64)?;
    let n_dig = s.u32_or("n_dig", 16)?;
    if n_dig > n_prn {
        return Err(invalid("prn.n_dig", format!("n_dig = {n_dig} exceeds prn.n_prn = {n_prn}")));
    }
    FixedPointSpec::new(n_dig).map_err(|e| invalid("prn.n_dig", e.to_string()))?;
    let perm = match s.str("perm")? {
        None => Permutation::default(),
        Some(name) => name.parse().map_err(|e: crate::Error| invalid("prn.perm", e.to_string()))?,
    };
    if !(2..=64).contains(&n_prn) {
        return Err(invalid("prn.n_prn", format!("must lie in 2..=64, got {n_prn}")));
    }
    let mask = if n_prn == 64 { u64::MAX } else { (1u64 << n_prn) - 1 };
    let a = s.u64("a")?.unwrap_or(pcg::DEFAULT_MULTIPLIER & mask);
    let c = s.u64("c")?.unwrap_or(pcg::DEFAULT_INCREMENT & mask);
    let params = PcgParams::new(a, c, n_prn, perm).map_err(|e| invalid("prn.a/prn.c", e.to_string()))?;
    let seed = s.u64_or("seed", DEFAULT_SEED)?;
    pcg::seed(params, seed).map_err(|e| invalid("prn.seed", e.to_string()))?;
    let quantize = s.bool_or("quantize", false)?;
    Ok(PrnSection { params, seed, n_dig, quantize })
}

fn run_section(doc: &Table) -> ConfigResult<RunSection> {
    let s = Section::open(
        doc,
        "run",
        &["n_samp", "m_inner", "m_outer", "shots", "seed", "integrand", "d", "m_sweep", "l", "delta_rel"],
    )?;
    let n_samp = s.u64_or("n_samp", 16)?;
    if n_samp == 0 || !n_samp.is_power_of_two() {
        return Err(invalid("run.n_samp", format!("must be a positive power of two, got {n_samp}")));
    }
    let tol = match (s.f64("l")?, s.f64("delta_rel")?) {
        (None, None) => None,
        (Some(l), Some(d)) => Some((l, d)),
        (Some(_), None) => return Err(invalid("run.delta_rel", "required together with run.l")),
        (None, Some(_)) => return Err(invalid("run.l", "required together with run.delta_rel")),
    };
    let m_inner = match tol {
        Some((l, d)) => {
            if s.has("m_inner") {
                return Err(invalid("run.m_inner", "conflicts with run.l / run.delta_rel"));
            }
            integrator::inner_qubits_for_tolerance(l, d).map_err(|e| invalid("run.l", e.to_string()))?
        }
        None => s.u32_or("m_inner", 6)?,
    };
    let m_outer = s.u32_or("m_outer", 8)?;
    QaeGrid::new(m_inner).map_err(|e| invalid("run.m_inner", e.to_string()))?;
    QaeGrid::new(m_outer).map_err(|e| invalid("run.m_outer", e.to_string()))?;
    let cfg = RunConfig::new(n_samp, m_inner, m_outer).map_err(|e| invalid("run", e.to_string()))?;
    let shots = s.u64_or("shots", 1000)?;
    let shots = usize::try_from(shots).map_err(|_| invalid("run.shots", "too large"))?;
    let seed = s.u64_or("seed", 0)?;
    let integrand = match s.str("integrand")?.unwrap_or("quadratic") {
        "credit-var" => IntegrandChoice::CreditVar,
        "credit-cvar" => IntegrandChoice::CreditCvar,
        other => IntegrandChoice::Synthetic(
            other.parse().map_err(|e: crate::Error| invalid("run.integrand", e.to_string()))?,
        ),
    };
    let d = s.u64_or("d", 16)?;
    if d == 0 || d > 1 << 20 {
        return Err(invalid("run.d", format!("must lie in 1..=2^20, got {d}")));
    }
    let m_sweep = s.u32_list("m_sweep")?.unwrap_or_else(|| (4..=10).collect());
    for &m in &m_sweep {
        QaeGrid::new(m).map_err(|e| invalid("run.m_sweep", e.to_string()))?;
    }
    Ok(RunSection { cfg, tolerance: tol, shots, seed, integrand, d: d as usize, m_sweep })
}

fn portfolio_section(doc: &Table, base_dir: &Path) -> ConfigResult<PortfolioSection> {
    let s = Section::open(doc, "portfolio", &["path", "normalize"])?;
    let normalize = s.bool_or("normalize", false)?;
    let Some(rel) = s.str("path")? else {
        return Ok(PortfolioSection { path: None, normalize, portfolio: None });
    };
    let path = base_dir.join(rel);
    if !path.is_file() {
        return Err(invalid("portfolio.path", format!("no such file: {}", path.display())));
    }
    let portfolio =
        PortfolioSpec::from_csv_path(&path, normalize).map_err(|e| invalid("portfolio.path", e.to_string()))?;
    Ok(PortfolioSection { path: Some(path), normalize, portfolio: Some(portfolio) })
}

fn measure_section(doc: &Table) -> ConfigResult<MeasureSection> {
    let s = Section::open(doc, "measure", &["alpha", "l_alpha", "tol", "method"])?;
    let alpha = s.f64_or("alpha", 0.05)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("measure.alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let tol = s.f64_or("tol", 1e-6)?;
    if !(tol > 0.0) {
        return Err(invalid("measure.tol", format!("must be positive, got {tol}")));
    }
    let method = match s.str("method")? {
        None => Method::default(),
        Some(m) => m.parse().map_err(|e: crate::Error| invalid("measure.method", e.to_string()))?,
    };
    Ok(MeasureSection { alpha, l_alpha: s.f64("l_alpha")?, tol, method })
}

fn resources_section(doc: &Table) -> ConfigResult<ResourcesSection> {
    let s = Section::open(
        doc,
        "resources",
        &["n_prn", "n_dig", "n_icdf", "n_samp", "n_obl", "l", "delta_rel", "d"],
    )?;
    let def = ResourceParams::default();
    let n_prn = s.u64_or("n_prn", def.n_prn)?;
    let n_dig = s.u64_or("n_dig", def.n_dig)?;
    if n_dig > n_prn {
        return Err(invalid(
            "resources.n_dig",
            format!("n_dig = {n_dig} exceeds resources.n_prn = {n_prn}"),
        ));
    }
    let params = ResourceParams::new(
        n_prn,
        n_dig,
        s.u64_or("n_icdf", def.n_icdf)?,
        s.u64_or("n_samp", def.n_samp)?,
        s.u64_or("n_obl", def.n_obl)?,
    )
    .map_err(|e| invalid("resources", e.to_string()))?;
    let l = s.f64_or("l", 1e-2)?;
    let delta_rel = s.f64_or("delta_rel", 1e-2)?;
    if !(l > 0.0) {
        return Err(invalid("resources.l", "must be positive"));
    }
    if !(delta_rel > 0.0) {
        return Err(invalid("resources.delta_rel", "must be positive"));
    }
    let d = match s.u64("d")? {
        Some(0) => return Err(invalid("resources.d", "must be positive")),
        Some(d) => d,
        None if params.n_obl < 64 => 1u64 << params.n_obl,
        None => return Err(invalid("resources.d", "set explicitly when resources.n_obl >= 64")),
    };
    Ok(ResourcesSection { params, l, delta_rel, d })
}

fn qae_section(doc: &Table) -> ConfigResult<QaeSection> {
    let s = Section::open(doc, "qae", &["theta", "m", "m_min", "m_max", "sweep"])?;
    let theta = s.f64_list("theta")?.unwrap_or_else(|| vec![0.3]);
    for &t in &theta {
        if !(0.0..=1.0).contains(&t) {
            return Err(invalid("qae.theta", format!("phase {t} outside [0, 1]")));
        }
    }
    let m = s.u32_or("m", 4)?;
    let m_min = s.u32_or("m_min", 2)?;
    let m_max = s.u32_or("m_max", 10)?;
    for (key, v) in [("qae.m", m), ("qae.m_min", m_min), ("qae.m_max", m_max)] {
        QaeGrid::new(v).map_err(|e| invalid(key, e.to_string()))?;
    }
    if m_min > m_max {
        return Err(invalid("qae.m_min", format!("exceeds qae.m_max ({m_min} > {m_max})")));
    }
    if m > 16 {
        return Err(invalid("qae.m", format!("pmf tables are limited to 16 qubits, got {m}")));
    }
    let sweep = s.u64_or("sweep", 1000)? as usize;
    if sweep == 0 {
        return Err(invalid("qae.sweep", "must be positive"));
    }
    Ok(QaeSection { theta, m, m_min, m_max, sweep })
}

fn pcg_check_section(doc: &Table) -> ConfigResult<PcgCheckSection> {
    let s = Section::open(doc, "pcg_check", &["max_index", "show"])?;
    let max_index = s.u64_or("max_index", 10_000)?;
    let show = s.u64_or("show", 8)?;
    if max_index == 0 {
        return Err(invalid("pcg_check.max_index", "must be positive"));
    }
    Ok(PcgCheckSection { max_index, show })
}

fn verify_section(doc: &Table) -> ConfigResult<VerifySection> {
    let s = Section::open(doc, "verify", &["trials", "max_index", "thetas"])?;
    let trials = s.u64_or("trials", 100)? as usize;
    let max_index = s.u64_or("max_index", 1000)?;
    let thetas = s.u64_or("thetas", 200)? as usize;
    if trials == 0 || max_index == 0 || thetas == 0 {
        return Err(invalid("verify", "trials, max_index and thetas must be positive"));
    }
    Ok(VerifySection { trials, max_index, thetas })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_tcount_takes_defaults() {
        let spec = parse_config("command = \"tcount\"\n").unwrap();
        assert_eq!(spec.command, Command::Tcount);
        assert_eq!(spec.config.resources.params, ResourceParams::default());
        assert_eq!(spec.config.resources.d, 1 << 20);
        assert_eq!(spec.config.prn.params, PcgParams::default());
    }

    #[test]
    fn five_widths() {
        let text = "command = \"tcount\"\n[resources]\nn_prn = 32\nn_dig = 8\nn_icdf = 0\nn_samp = 10\nn_obl = 12\n";
        let spec = parse_config(text).unwrap();
        assert_eq!(spec.config.resources.params, ResourceParams::new(32, 8, 0, 10, 12).unwrap());
        assert_eq!(spec.config.resources.d, 4096);
    }

    #[test]
    fn digits_wider_than_word() {
        let err = parse_config("command = \"simulate\"\n[prn]\nn_prn = 16\nn_dig = 20\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("prn.n_dig") && msg.contains("prn.n_prn"), "{msg}");
        let err = parse_config("command = \"tcount\"\n[resources]\nn_prn = 8\nn_dig = 9\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("resources.n_dig") && msg.contains("resources.n_prn"), "{msg}");
    }

    #[test]
    fn sample_count_must_be_power_of_two() {
        let err = parse_config("command = \"simulate\"\n[run]\nn_samp = 12\n").unwrap_err();
        assert!(err.to_string().contains("run.n_samp"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = parse_config("command = \"tcount\"\n[resources]\nn_qubits = 3\n").unwrap_err();
        assert_eq!(err, invalid("resources.n_qubits", "unknown key"));
        assert!(parse_config("command = \"tcount\"\n[extra]\n").is_err());
        assert!(parse_config("command = \"launch\"\n").is_err());
        assert!(parse_config("[run]\n").is_err());
    }

    #[test]
    fn hex_and_string_integers() {
        let text = "command = \"pcg-check\"\n[prn]\na = \"0x5851_F42D_4C95_7F2D\"\nseed = \"18446744073709551615\"\n";
        let spec = parse_config(text).unwrap();
        assert_eq!(spec.config.prn.params.a(), 0x5851_F42D_4C95_7F2D);
        assert_eq!(spec.config.prn.seed, u64::MAX);
        assert_eq!(parse_u64_text("0b101"), Some(5));
        assert_eq!(parse_u64_text("12_000"), Some(12000));
        assert_eq!(parse_u64_text("x"), None);
    }

    #[test]
    fn tolerance_derives_inner_register() {
        let spec = parse_config("command = \"simulate\"\n[run]\nl = 0.01\ndelta_rel = 0.01\n").unwrap();
        assert_eq!(spec.config.run.cfg.m_inner(), 14);
        assert!(parse_config("command = \"simulate\"\n[run]\nl = 0.01\ndelta_rel = 0.01\nm_inner = 3\n").is_err());
        assert!(parse_config("command = \"simulate\"\n[run]\nl = 0.01\n").is_err());
    }

    #[test]
    fn credit_commands_need_portfolio() {
        let err = parse_config("command = \"var\"\n").unwrap_err();
        assert!(err.to_string().contains("portfolio.path"));
        let err = parse_config("command = \"var\"\n[portfolio]\npath = \"/nonexistent/p.csv\"\n").unwrap_err();
        assert!(err.to_string().contains("no such file"));
    }

    #[test]
    fn overrides_apply_before_validation() {
        let o = Overrides { seed: Some(7), shots: Some(3), quantize: true, out: Some("x".into()) };
        let spec = parse_config_with(Some(Command::Qae), "", Path::new("."), &o).unwrap();
        assert_eq!(spec.config.prn.seed, 7);
        assert_eq!(spec.config.run.shots, 3);
        assert!(spec.config.prn.quantize);
        assert_eq!(spec.config.out_dir, PathBuf::from("x"));
        let bad = Overrides { seed: Some(1 << 40), ..Overrides::default() };
        let err = parse_config_with(Some(Command::Qae), "[prn]\nn_prn = 32\n", Path::new("."), &bad);
        assert!(err.unwrap_err().to_string().contains("prn.seed"));
        let clash = parse_config_with(Some(Command::Qae), "command = \"var\"\n", Path::new("."), &o);
        assert!(clash.is_err());
    }
}
