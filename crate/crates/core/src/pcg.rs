//! Permuted congruential generator with sequential progress and closed-form
//! jump-ahead.
//!
//! The background sequence is the LCG `x̃_{i+1} = (a·x̃_i + c) mod 2^bits`.
//! Output words are `f_perm(x̃_i)` for a bijective permutation `f_perm`, so
//! every state maps to a distinct word of the same width.
//!
//! The stream is 1-indexed: `x̃_0` is the seed and `x_1 = f_perm(x̃_1)` is the
//! first element consumed by a sampler.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Published 64-bit LCG multiplier used by the PCG reference family.
pub const DEFAULT_MULTIPLIER: u64 = 6_364_136_223_846_793_005;
/// Published 64-bit LCG increment used by the PCG reference family.
pub const DEFAULT_INCREMENT: u64 = 1_442_695_040_888_963_407;

/// Output permutation applied to the background LCG state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Permutation {
    Identity,
    /// Xorshift of the high half into the low half, then a data-dependent
    /// rotation of the low `bits - t` bits controlled by the top `t` bits.
    /// Both steps leave the top bits untouched, which keeps it invertible.
    #[default]
    XshRr,
}

impl Permutation {
    pub fn name(self) -> &'static str {
        match self {
            Permutation::Identity => "identity",
            Permutation::XshRr => "xsh-rr",
        }
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "none" => Ok(Permutation::Identity),
            "xsh-rr" | "xsh_rr" | "xorshift-rotate" => Ok(Permutation::XshRr),
            other => Err(Error::InvalidParams(format!(
                "unknown permutation {other:?} (expected \"identity\" or \"xsh-rr\")"
            ))),
        }
    }
}

/// LCG multiplier, increment and modulus `2^state_bits`, plus the output
/// permutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PcgParams {
    a: u64,
    c: u64,
    state_bits: u32,
    perm: Permutation,
}

impl PcgParams {
    /// Validates `a > 1`, `a` odd, `a, c < 2^state_bits` and
    /// `2 <= state_bits <= 64`.
    pub fn new(a: u64, c: u64, state_bits: u32, perm: Permutation) -> Result<Self> {
        if !(2..=64).contains(&state_bits) {
            return Err(Error::InvalidParams(format!(
                "state_bits must lie in 2..=64, got {state_bits}"
            )));
        }
        let mask = mask(state_bits);
        if a <= 1 {
            return Err(Error::InvalidParams(format!("multiplier a must exceed 1, got {a}")));
        }
        if a.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!("multiplier a must be odd, got {a}")));
        }
        if a > mask {
            return Err(Error::InvalidParams(format!(
                "multiplier a = {a} is not below the modulus 2^{state_bits}"
            )));
        }
        if c > mask {
            return Err(Error::InvalidParams(format!(
                "increment c = {c} is not below the modulus 2^{state_bits}"
            )));
        }
        Ok(Self { a, c, state_bits, perm })
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn c(&self) -> u64 {
        self.c
    }

    pub fn state_bits(&self) -> u32 {
        self.state_bits
    }

    pub fn perm(&self) -> Permutation {
        self.perm
    }

    /// `m - 1` where `m = 2^state_bits`.
    pub fn mask(&self) -> u64 {
        mask(self.state_bits)
    }

    /// Applies the output permutation to a state word.
    pub fn permute(&self, x: u64) -> u64 {
        match self.perm {
            Permutation::Identity => x & self.mask(),
            Permutation::XshRr => xsh_rr(x & self.mask(), self.state_bits),
        }
    }

    /// Inverse of [`PcgParams::permute`].
    pub fn inverse_permute(&self, y: u64) -> u64 {
        match self.perm {
            Permutation::Identity => y & self.mask(),
            Permutation::XshRr => xsh_rr_inverse(y & self.mask(), self.state_bits),
        }
    }

    /// Affine map `(mult, plus)` such that `x̃_{k+steps} = mult·x̃_k + plus`
    /// modulo `m`, by repeated squaring of the one-step map `(a, c)`.
    pub fn advance_coefficients(&self, steps: u64) -> (u64, u64) {
        let mask = self.mask();
        let (mut acc_mult, mut acc_plus) = (1u64, 0u64);
        let (mut cur_mult, mut cur_plus) = (self.a, self.c);
        let mut delta = steps;
        while delta > 0 {
            if delta & 1 == 1 {
                acc_mult = acc_mult.wrapping_mul(cur_mult) & mask;
                acc_plus = acc_plus.wrapping_mul(cur_mult).wrapping_add(cur_plus) & mask;
            }
            cur_plus = cur_mult.wrapping_add(1).wrapping_mul(cur_plus) & mask;
            cur_mult = cur_mult.wrapping_mul(cur_mult) & mask;
            delta >>= 1;
        }
        (acc_mult, acc_plus)
    }
}

impl Default for PcgParams {
    fn default() -> Self {
        Self {
            a: DEFAULT_MULTIPLIER,
            c: DEFAULT_INCREMENT,
            state_bits: 64,
            perm: Permutation::XshRr,
        }
    }
}

/// Background LCG state together with its position in the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PcgState {
    params: PcgParams,
    x_tilde: u64,
    index: u64,
}

impl PcgState {
    pub fn params(&self) -> &PcgParams {
        &self.params
    }

    pub fn x_tilde(&self) -> u64 {
        self.x_tilde
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// One LCG step.
    #[must_use]
    pub fn progress(&self) -> PcgState {
        let p = &self.params;
        let next = p.a.wrapping_mul(self.x_tilde).wrapping_add(p.c) & p.mask();
        PcgState { params: self.params, x_tilde: next, index: self.index + 1 }
    }

    /// Permuted output word of the current state.
    pub fn output(&self) -> u64 {
        self.params.permute(self.x_tilde)
    }
}

/// State at index 0 holding the seed.
pub fn seed(params: PcgParams, x0: u64) -> Result<PcgState> {
    if x0 > params.mask() {
        return Err(Error::SeedOutOfRange { seed: x0, bits: params.state_bits });
    }
    Ok(PcgState { params, x_tilde: x0, index: 0 })
}

/// Closed-form state at index `i`: `(a^i·x0 + c(a^i-1)/(a-1)) mod m`, with
/// the quotient evaluated exactly through the doubling recursion.
pub fn jump(params: PcgParams, x0: u64, i: u64) -> Result<PcgState> {
    let start = seed(params, x0)?;
    let (mult, plus) = params.advance_coefficients(i);
    let x_tilde = mult.wrapping_mul(start.x_tilde).wrapping_add(plus) & params.mask();
    Ok(PcgState { params, x_tilde, index: i })
}

/// `x_i = f_perm(x̃_i)` for `i >= 1`.
pub fn stream_element(params: PcgParams, x0: u64, i: u64) -> Result<u64> {
    if i == 0 {
        return Err(Error::ZeroStreamIndex);
    }
    Ok(jump(params, x0, i)?.output())
}

fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Number of top bits that select the rotation amount.
fn rotation_bits(bits: u32) -> u32 {
    (bits.ilog2() - 1).max(1)
}

fn rotr_within(x: u64, rot: u32, width: u32) -> u64 {
    let rot = rot % width;
    if rot == 0 {
        return x;
    }
    let m = mask(width);
    ((x >> rot) | (x << (width - rot))) & m
}

fn xsh_rr(x: u64, bits: u32) -> u64 {
    let shift = bits.div_ceil(2);
    let t = rotation_bits(bits);
    let low_width = bits - t;
    let xored = x ^ (x >> shift);
    let top = xored >> low_width;
    let low = xored & mask(low_width);
    (top << low_width) | rotr_within(low, top as u32, low_width)
}

fn xsh_rr_inverse(y: u64, bits: u32) -> u64 {
    let shift = bits.div_ceil(2);
    let t = rotation_bits(bits);
    let low_width = bits - t;
    let top = y >> low_width;
    let low = y & mask(low_width);
    let rot = (top as u32) % low_width;
    let unrotated = rotr_within(low, (low_width - rot) % low_width, low_width);
    let xored = (top << low_width) | unrotated;
    // shift >= bits/2, so the xorshift is an involution
    xored ^ (xored >> shift)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> PcgParams {
        PcgParams::new(5, 3, 4, Permutation::Identity).unwrap()
    }

    #[test]
    fn seed_is_identity_on_the_seed() {
        let s = seed(toy(), 1).unwrap();
        assert_eq!((s.x_tilde(), s.index()), (1, 0));
        let s = seed(PcgParams::default(), 42).unwrap();
        assert_eq!((s.x_tilde(), s.index()), (42, 0));
    }

    #[test]
    fn seed_rejects_out_of_range() {
        assert_eq!(seed(toy(), 16), Err(Error::SeedOutOfRange { seed: 16, bits: 4 }));
    }

    #[test]
    fn progress_small_lcg() {
        let s1 = seed(toy(), 1).unwrap().progress();
        assert_eq!((s1.x_tilde(), s1.index()), (8, 1));
        let s2 = s1.progress();
        assert_eq!((s2.x_tilde(), s2.index()), (11, 2));
    }

    #[test]
    fn zero_is_a_fixed_point_without_increment() {
        let p = PcgParams::new(3, 0, 3, Permutation::Identity).unwrap();
        assert_eq!(seed(p, 0).unwrap().progress().x_tilde(), 0);
    }

    #[test]
    fn params_reject_degenerate_multipliers() {
        assert!(PcgParams::new(1, 3, 4, Permutation::Identity).is_err());
        assert!(PcgParams::new(4, 3, 4, Permutation::Identity).is_err());
        assert!(PcgParams::new(17, 3, 4, Permutation::Identity).is_err());
        assert!(PcgParams::new(5, 16, 4, Permutation::Identity).is_err());
        assert!(PcgParams::new(5, 3, 65, Permutation::Identity).is_err());
    }

    #[test]
    fn jump_matches_hand_iteration() {
        assert_eq!(jump(toy(), 1, 3).unwrap().x_tilde(), 10);
        assert_eq!(jump(toy(), 1, 1).unwrap().x_tilde(), 8);
        assert_eq!(jump(toy(), 7, 0).unwrap().x_tilde(), 7);
        assert_eq!(jump(toy(), 1, 3).unwrap().index(), 3);
    }

    #[test]
    fn stream_is_one_indexed() {
        assert_eq!(stream_element(toy(), 1, 2).unwrap(), 11);
        assert_eq!(stream_element(toy(), 1, 3).unwrap(), 10);
        assert_eq!(
            stream_element(toy(), 1, 1).unwrap(),
            seed(toy(), 1).unwrap().progress().output()
        );
        assert_eq!(stream_element(toy(), 1, 0), Err(Error::ZeroStreamIndex));
    }

    #[test]
    fn identity_output_is_state() {
        let p = PcgParams::new(5, 3, 4, Permutation::Identity).unwrap();
        assert_eq!(jump(p, 1, 3).unwrap().output(), 10);
    }

    #[test]
    fn xsh_rr_fixes_zero() {
        for bits in [4, 8, 16, 32, 63, 64] {
            assert_eq!(xsh_rr(0, bits), 0);
        }
    }

    #[test]
    fn xsh_rr_by_hand_on_eight_bits() {
        // 10110110 ^ 00001011 = 10111101; top 2 bits = 2; rotr(111101, 2) in
        // 6 bits = 011111 -> 10_011111
        assert_eq!(xsh_rr(0b1011_0110, 8), 0b1001_1111);
    }

    #[test]
    fn xsh_rr_is_a_bijection_on_small_widths() {
        for bits in 2..=12u32 {
            let n = 1u64 << bits;
            let mut seen = vec![false; n as usize];
            for x in 0..n {
                let y = xsh_rr(x, bits);
                assert!(y < n);
                assert!(!seen[y as usize], "collision at bits={bits}");
                seen[y as usize] = true;
                assert_eq!(xsh_rr_inverse(y, bits), x);
            }
        }
    }

    #[test]
    fn default_params_match_published_constants() {
        let p = PcgParams::default();
        assert_eq!(p.a(), 6364136223846793005);
        assert_eq!(p.c(), 1442695040888963407);
        assert_eq!(p.state_bits(), 64);
        assert_eq!(p.perm(), Permutation::XshRr);
    }

    #[test]
    fn permutation_names_parse() {
        assert_eq!("xsh-rr".parse::<Permutation>().unwrap(), Permutation::XshRr);
        assert_eq!("identity".parse::<Permutation>().unwrap(), Permutation::Identity);
        assert!("xsl-rr".parse::<Permutation>().is_err());
    }
}
