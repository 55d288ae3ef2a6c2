//! Leading-order T-count model for one `f`-block of each method, and the
//! register inventories of both circuits.

use serde::Serialize;

use crate::error::{Error, Result};

/// Bit widths feeding the cost model. `n_exp = n_samp + n_obl` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ResourceParams {
    pub n_prn: u64,
    pub n_dig: u64,
    pub n_icdf: u64,
    pub n_samp: u64,
    pub n_obl: u64,
}

impl Default for ResourceParams {
    fn default() -> Self {
        Self { n_prn: 64, n_dig: 16, n_icdf: 109, n_samp: 20, n_obl: 20 }
    }
}

impl ResourceParams {
    /// `n_icdf` may be zero; every other width must be positive.
    pub fn new(n_prn: u64, n_dig: u64, n_icdf: u64, n_samp: u64, n_obl: u64) -> Result<Self> {
        for (name, v) in [("n_prn", n_prn), ("n_dig", n_dig), ("n_samp", n_samp), ("n_obl", n_obl)] {
            if v == 0 {
                return Err(Error::InvalidParams(format!("{name} must be positive")));
            }
        }
        Ok(Self { n_prn, n_dig, n_icdf, n_samp, n_obl })
    }

    /// Bits of the jump exponent `(j-1)(N_obl+1)+i+1`.
    pub fn n_exp(&self) -> u64 {
        self.n_samp + self.n_obl
    }
}

/// One named contribution to a per-block T-count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineItem {
    pub name: &'static str,
    pub t_count: u64,
    /// Subdominant items are listed with zero cost.
    pub leading: bool,
}

/// One non-self-updating modular multiplication on `n_PRN` bits.
fn modular_multiplication(p: &ResourceParams) -> u64 {
    70 * p.n_prn * p.n_prn
}

fn conversion(p: &ResourceParams) -> u64 {
    105 * p.n_dig * p.n_dig + 28 * p.n_dig * p.n_icdf
}

/// Components of one sequential-method block.
pub fn breakdown_prev(p: &ResourceParams) -> Vec<LineItem> {
    vec![
        LineItem { name: "pcg progress (self-updating modular multiplication)", t_count: 2 * modular_multiplication(p), leading: true },
        LineItem { name: "uniform-to-normal conversion", t_count: conversion(p), leading: true },
        LineItem { name: "conversion uncompute", t_count: conversion(p), leading: true },
        LineItem { name: "f evaluation", t_count: 0, leading: false },
        LineItem { name: "counter increment", t_count: 0, leading: false },
        LineItem { name: "sum accumulation", t_count: 0, leading: false },
        LineItem { name: "parameter load/unload (qRAM)", t_count: 0, leading: false },
    ]
}

/// Components of one nested-method block (one inner Grover step).
pub fn breakdown_new(p: &ResourceParams) -> Vec<LineItem> {
    // square-and-multiply: 2·n_exp modular multiplications per jump
    let jump = 2 * p.n_exp() * modular_multiplication(p);
    vec![
        LineItem { name: "pcg jump in A", t_count: jump, leading: true },
        LineItem { name: "pcg jump in A^-1", t_count: jump, leading: true },
        LineItem { name: "uniform-to-normal conversion", t_count: conversion(p), leading: true },
        LineItem { name: "conversion uncompute", t_count: conversion(p), leading: true },
        LineItem { name: "controlled S0 (multi-controlled Toffoli)", t_count: 0, leading: false },
        LineItem { name: "controlled S1 (controlled Z)", t_count: 0, leading: false },
        LineItem { name: "f evaluation", t_count: 0, leading: false },
        LineItem { name: "parameter load/unload (qRAM)", t_count: 0, leading: false },
        LineItem { name: "controlled rotation", t_count: 0, leading: false },
    ]
}

/// `140 n_PRN² + 210 n_dig² + 56 n_dig n_ICDF`.
pub fn t_one_prev(p: &ResourceParams) -> u64 {
    breakdown_prev(p).iter().map(|i| i.t_count).sum()
}

/// `280 (n_samp + n_obl) n_PRN² + 210 n_dig² + 56 n_dig n_ICDF`.
pub fn t_one_new(p: &ResourceParams) -> u64 {
    breakdown_new(p).iter().map(|i| i.t_count).sum()
}

pub fn ratio_one(p: &ResourceParams) -> f64 {
    t_one_new(p) as f64 / t_one_prev(p) as f64
}

/// `(l·δ_rel)^-1 / D`.
pub fn query_reduction(l: f64, delta_rel: f64, d: u64) -> Result<f64> {
    let prod = l * delta_rel;
    if !(prod > 0.0) || d == 0 {
        return Err(Error::InvalidParams(format!(
            "need l·δ_rel > 0 and D >= 1 (l·δ_rel = {prod}, D = {d})"
        )));
    }
    Ok(1.0 / prod / d as f64)
}

pub fn total_ratio(p: &ResourceParams, l: f64, delta_rel: f64, d: u64) -> Result<f64> {
    Ok(ratio_one(p) * query_reduction(l, delta_rel, d)?)
}

/// Rounds to `digits` significant figures.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mag = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits - 1 - mag);
    (x * scale).round() / scale
}

/// Nearest power of ten (in log scale).
pub fn round_decade(x: f64) -> f64 {
    10f64.powf(x.log10().round())
}

/// Headline figures in the coarse rounding a reader would quote: two
/// significant figures for the counts, the ratio of those rounded counts to
/// the nearest integer, and the query reduction to the nearest decade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundedFigures {
    pub t_one_prev: f64,
    pub t_one_new: f64,
    pub ratio_one: f64,
    pub query_reduction: f64,
    pub total_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub params: ResourceParams,
    pub l: f64,
    pub delta_rel: f64,
    pub d: u64,
    pub t_one_prev: u64,
    pub t_one_new: u64,
    pub ratio_one: f64,
    pub query_reduction: f64,
    pub total_ratio: f64,
    pub rounded: RoundedFigures,
    pub prev_items: Vec<LineItem>,
    pub new_items: Vec<LineItem>,
}

impl CostReport {
    pub fn compute(p: &ResourceParams, l: f64, delta_rel: f64, d: u64) -> Result<Self> {
        let t_prev = t_one_prev(p);
        let t_new = t_one_new(p);
        let ratio = t_new as f64 / t_prev as f64;
        let reduction = query_reduction(l, delta_rel, d)?;
        let r_prev = round_sig(t_prev as f64, 2);
        let r_new = round_sig(t_new as f64, 2);
        let r_ratio = (r_new / r_prev).round();
        let r_red = round_decade(reduction);
        Ok(Self {
            params: *p,
            l,
            delta_rel,
            d,
            t_one_prev: t_prev,
            t_one_new: t_new,
            ratio_one: ratio,
            query_reduction: reduction,
            total_ratio: ratio * reduction,
            rounded: RoundedFigures {
                t_one_prev: r_prev,
                t_one_new: r_new,
                ratio_one: r_ratio,
                query_reduction: r_red,
                total_ratio: r_ratio * r_red,
            },
            prev_items: breakdown_prev(p),
            new_items: breakdown_new(p),
        })
    }

    /// Default widths with `l = δ_rel = 10^-2` and `D = 2^n_obl`.
    pub fn reference_setting() -> Self {
        let p = ResourceParams::default();
        Self::compute(&p, 1e-2, 1e-2, 1 << p.n_obl).expect("valid reference setting")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CircuitMethod {
    Previous,
    New,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Register {
    pub symbol: &'static str,
    pub role: &'static str,
    /// Suggested qubit count when derivable from the widths.
    pub width: Option<u64>,
}

/// Registers of each circuit. Control-register widths are filled when the
/// corresponding sizes are supplied.
pub fn register_inventory(
    method: CircuitMethod,
    p: &ResourceParams,
    m_inner: Option<u64>,
    m_outer: Option<u64>,
) -> Vec<Register> {
    let reg = |symbol, role, width| Register { symbol, role, width };
    match method {
        CircuitMethod::New => vec![
            reg("R_samp", "superposed sample index j", Some(p.n_samp)),
            reg("R_dim", "superposed term index i", Some(p.n_obl)),
            reg("R_com", "common variate of sample j", Some(p.n_dig)),
            reg("R_ind", "individual variate (i, j)", Some(p.n_dig)),
            reg("R_c", "parameters c_i loaded for term i", None),
            reg("R_f", "value of f for (i, j)", Some(p.n_dig)),
            reg("R_ph,f", "ancilla carrying f as an amplitude", Some(1)),
            reg("R_ctr1", "inner estimation register; holds the readout of S_j", m_inner),
            reg("R_g", "value of g at the inner readout", Some(p.n_dig)),
            reg("R_ph,g", "ancilla carrying g as an amplitude", Some(1)),
            reg("R_ctr2", "outer estimation register; holds the readout of E_samp", m_outer),
        ],
        CircuitMethod::Previous => vec![
            reg("R_samp", "superposed sample index j", Some(p.n_samp)),
            reg("R_count", "counter of the current term i", Some(p.n_obl)),
            reg("R_PRN", "generator state progressed in place", Some(p.n_prn)),
            reg("R_com", "common variate of sample j", Some(p.n_dig)),
            reg("R_ind", "individual variate (i, j)", Some(p.n_dig)),
            reg("R_c", "parameters c_i loaded for term i", None),
            reg("R_f", "value of f for (i, j)", Some(p.n_dig)),
            reg("R_sum,f", "running sum of f over i", Some(p.n_dig)),
            reg("R_g", "value of g at the exact sum", Some(p.n_dig)),
            reg("R_ph,g", "ancilla carrying g as an amplitude", Some(1)),
            reg("R_ctr", "estimation register; holds the readout of E_samp", m_outer),
        ],
    }
}
