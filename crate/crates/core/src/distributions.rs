//! Uniform and standard-normal variates from PRN words.
//!
//! A word of `n_prn` bits is reduced to its top `n_dig` bits and read as a
//! fixed-point fraction in `[0, 1)`; the normal variate is the inverse CDF of
//! that fraction. The inverse CDF is a three-piece rational approximation
//! (two tails and a central region) with relative error around 1e-9.

use crate::error::{Error, Result};
use crate::pcg::{self, PcgParams};

/// Fraction bits of the fixed-point emulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedPointSpec {
    n_dig: u32,
}

impl FixedPointSpec {
    pub fn new(n_dig: u32) -> Result<Self> {
        if !(1..=53).contains(&n_dig) {
            return Err(Error::InvalidParams(format!("n_dig must lie in 1..=53, got {n_dig}")));
        }
        Ok(Self { n_dig })
    }

    pub fn n_dig(&self) -> u32 {
        self.n_dig
    }

    /// Grid spacing `2^-n_dig`.
    pub fn ulp(&self) -> f64 {
        (-(self.n_dig as f64)).exp2()
    }

    /// Rounds to the nearest multiple of `2^-n_dig`.
    pub fn round(&self, x: f64) -> f64 {
        let scale = (self.n_dig as f64).exp2();
        (x * scale).round() / scale
    }
}

impl Default for FixedPointSpec {
    fn default() -> Self {
        Self { n_dig: 16 }
    }
}

/// Top `n_dig` bits of an `n_prn`-bit word as a fraction in `[0, 1)`.
pub fn uniform_from_word(word: u64, n_prn: u32, n_dig: u32) -> Result<f64> {
    if n_dig > n_prn {
        return Err(Error::DigitsExceedWord { n_dig, n_prn });
    }
    if n_prn == 0 || n_prn > 64 || n_dig == 0 || n_dig > 53 {
        return Err(Error::InvalidParams(format!(
            "need 1 <= n_dig <= 53 and n_dig <= n_prn <= 64 (n_dig={n_dig}, n_prn={n_prn})"
        )));
    }
    if n_prn < 64 && word >> n_prn != 0 {
        return Err(Error::WordOutOfRange { word, bits: n_prn });
    }
    let top = word >> (n_prn - n_dig);
    Ok(top as f64 / (n_dig as f64).exp2())
}

/// Coefficients of one approximation piece.
#[derive(Debug, Clone, PartialEq)]
pub enum PieceKind {
    /// `q·P(q²)/Q(q²)` with `q = u - 1/2`.
    Central { num: [f64; 6], den: [f64; 5] },
    /// `±P(t)/Q(t)` with `t = sqrt(-2 ln(w))`, `w` the distance to the
    /// nearer endpoint.
    Tail { num: [f64; 6], den: [f64; 4], upper: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    /// Right edge of the piece; the last piece ends at 1.
    pub upper_breakpoint: f64,
    pub kind: PieceKind,
}

/// Piecewise approximation of the standard-normal quantile on `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvCdfApprox {
    pieces: Vec<Piece>,
}

const TAIL_NUM: [f64; 6] = [
    -7.784_894_002_430_293e-03,
    -3.223_964_580_411_365e-01,
    -2.400_758_277_161_838e+00,
    -2.549_732_539_343_734e+00,
    4.374_664_141_464_968e+00,
    2.938_163_982_698_783e+00,
];
const TAIL_DEN: [f64; 4] = [
    7.784_695_709_041_462e-03,
    3.224_671_290_700_398e-01,
    2.445_134_137_142_996e+00,
    3.754_408_661_907_416e+00,
];
const CENTRAL_NUM: [f64; 6] = [
    -3.969_683_028_665_376e+01,
    2.209_460_984_245_205e+02,
    -2.759_285_104_469_687e+02,
    1.383_577_518_672_69e+02,
    -3.066_479_806_614_716e+01,
    2.506_628_277_459_239e+00,
];
const CENTRAL_DEN: [f64; 5] = [
    -5.447_609_879_822_406e+01,
    1.615_858_368_580_409e+02,
    -1.556_989_798_598_866e+02,
    6.680_131_188_771_972e+01,
    -1.328_068_155_288_572e+01,
];
const TAIL_BREAK: f64 = 0.024_25;

impl Default for InvCdfApprox {
    fn default() -> Self {
        Self::rational3()
    }
}

impl InvCdfApprox {
    /// The three-piece rational approximation.
    pub fn rational3() -> Self {
        Self {
            pieces: vec![
                Piece {
                    upper_breakpoint: TAIL_BREAK,
                    kind: PieceKind::Tail { num: TAIL_NUM, den: TAIL_DEN, upper: false },
                },
                Piece {
                    upper_breakpoint: 1.0 - TAIL_BREAK,
                    kind: PieceKind::Central { num: CENTRAL_NUM, den: CENTRAL_DEN },
                },
                Piece {
                    upper_breakpoint: 1.0,
                    kind: PieceKind::Tail { num: TAIL_NUM, den: TAIL_DEN, upper: true },
                },
            ],
        }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Number of intervals actually used by this implementation. Unrelated
    /// to the interval count fed to the cost model.
    pub fn n_intervals(&self) -> usize {
        self.pieces.len()
    }

    pub fn eval(&self, u: f64) -> Result<f64> {
        self.eval_rounded(u, |x| x)
    }

    /// Evaluates with `round` applied to every intermediate value.
    pub fn eval_rounded(&self, u: f64, round: impl Fn(f64) -> f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::ProbabilityOutOfRange(u));
        }
        let piece = self
            .pieces
            .iter()
            .find(|p| u < p.upper_breakpoint)
            .unwrap_or_else(|| self.pieces.last().expect("non-empty approximation"));
        let r = &round;
        Ok(match &piece.kind {
            PieceKind::Central { num, den } => {
                let q = r(u - 0.5);
                let s = r(q * q);
                let p = horner(num, s, r);
                let d = r(horner(den, s, r) * s + 1.0);
                r(r(q * p) / d)
            }
            PieceKind::Tail { num, den, upper } => {
                let w = if *upper { r(1.0 - u) } else { u };
                let t = r(r(-2.0 * r(w.ln())).sqrt());
                let p = horner(num, t, r);
                let d = r(horner(den, t, r) * t + 1.0);
                let x = r(p / d);
                if *upper {
                    -x
                } else {
                    x
                }
            }
        })
    }
}

fn horner(coeffs: &[f64], x: f64, round: &impl Fn(f64) -> f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| round(acc * x + c))
}

/// Standard-normal quantile with the default approximation.
pub fn inv_normal_cdf(u: f64) -> Result<f64> {
    InvCdfApprox::rational3().eval(u)
}

/// Position of the common variate of sample `j` (1-based) in the stream.
pub fn com_index(j: u64, d: u64) -> u64 {
    (j - 1) * (d + 1) + 1
}

/// Position of the individual variate `i` of sample `j` (both 1-based).
pub fn ind_index(i: u64, j: u64, d: u64) -> u64 {
    (j - 1) * (d + 1) + i + 1
}

/// Binds a generator and seed to the word-to-normal conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct PrnStream {
    pub params: PcgParams,
    pub seed: u64,
    pub fixed: FixedPointSpec,
    /// Round every intermediate of the conversion to `n_dig` fraction bits.
    pub quantize: bool,
    approx: InvCdfApprox,
}

impl PrnStream {
    pub fn new(params: PcgParams, seed: u64, fixed: FixedPointSpec, quantize: bool) -> Result<Self> {
        if fixed.n_dig() > params.state_bits() {
            return Err(Error::DigitsExceedWord { n_dig: fixed.n_dig(), n_prn: params.state_bits() });
        }
        pcg::seed(params, seed)?;
        Ok(Self { params, seed, fixed, quantize, approx: InvCdfApprox::rational3() })
    }

    /// Normal variate from a raw output word. A zero fraction is clamped to
    /// half a fixed-point ulp before inversion.
    pub fn normal_from_word(&self, word: u64) -> Result<f64> {
        let mut u = uniform_from_word(word, self.params.state_bits(), self.fixed.n_dig())?;
        if u == 0.0 {
            u = 0.5 * self.fixed.ulp();
        }
        if self.quantize {
            let fixed = self.fixed;
            self.approx.eval_rounded(u, |x| fixed.round(x))
        } else {
            self.approx.eval(u)
        }
    }

    /// Normal variate at stream position `index` (1-based), by jump.
    pub fn normal_at(&self, index: u64) -> Result<f64> {
        self.normal_from_word(pcg::stream_element(self.params, self.seed, index)?)
    }

    /// Common variate of sample `j`.
    pub fn epsilon_com(&self, j: u64, d: u64) -> Result<f64> {
        if j == 0 {
            return Err(Error::SampleIndexOutOfRange { j, n: u64::MAX });
        }
        self.normal_at(com_index(j, d))
    }

    /// Individual variate `i` of sample `j`.
    pub fn epsilon_ind(&self, i: u64, j: u64, d: u64) -> Result<f64> {
        if i == 0 || i > d {
            return Err(Error::TermIndexOutOfRange { i, d });
        }
        if j == 0 {
            return Err(Error::SampleIndexOutOfRange { j, n: u64::MAX });
        }
        self.normal_at(ind_index(i, j, d))
    }

    /// All `D + 1` variates of sample `j`, obtained by one jump to the
    /// common position followed by `D` sequential progress steps.
    pub fn sample_sequential(&self, j: u64, d: u64) -> Result<(f64, Vec<f64>)> {
        if j == 0 {
            return Err(Error::SampleIndexOutOfRange { j, n: u64::MAX });
        }
        let mut state = pcg::jump(self.params, self.seed, com_index(j, d))?;
        let eps_com = self.normal_from_word(state.output())?;
        let mut eps = Vec::with_capacity(d as usize);
        for _ in 0..d {
            state = state.progress();
            eps.push(self.normal_from_word(state.output())?);
        }
        Ok((eps_com, eps))
    }
}

/// Convenience: common variate for explicit generator parameters.
pub fn epsilon_com(params: PcgParams, x0: u64, j: u64, d: u64, fixed: FixedPointSpec) -> Result<f64> {
    PrnStream::new(params, x0, fixed, false)?.epsilon_com(j, d)
}

/// Convenience: individual variate for explicit generator parameters.
pub fn epsilon_ind(
    params: PcgParams,
    x0: u64,
    i: u64,
    j: u64,
    d: u64,
    fixed: FixedPointSpec,
) -> Result<f64> {
    PrnStream::new(params, x0, fixed, false)?.epsilon_ind(i, j, d)
}
