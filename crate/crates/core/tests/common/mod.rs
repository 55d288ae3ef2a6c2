//! Independent reference implementations shared by the integration targets.
#![allow(dead_code)]

use std::path::PathBuf;

use nqae::credit::PortfolioSpec;
use nqae::distributions::PrnStream;
use nqae::pcg::PcgParams;
use num_bigint::BigUint;
use statrs::distribution::{ContinuousCDF, Normal};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

pub fn portfolio(name: &str) -> PortfolioSpec {
    PortfolioSpec::from_csv_path(&fixture(name), false).expect("fixture parses")
}

/// `x̃_i = a^i x0 + c (a^i - 1)/(a - 1) mod 2^bits` in arbitrary precision.
/// The quotient is exact because `a^i ≡ 1 (mod a - 1)`; working modulo
/// `2^bits·(a - 1)` keeps the numbers small.
pub fn bigint_jump(a: u64, c: u64, bits: u32, x0: u64, i: u64) -> u64 {
    let a_b = BigUint::from(a);
    let one = BigUint::from(1u32);
    let modulus = BigUint::from(1u32) << bits;
    let am1 = &a_b - &one;
    let wide = &modulus * &am1;
    let ai_wide = a_b.modpow(&BigUint::from(i), &wide);
    let geometric = (&ai_wide + &wide - &one) % &wide / &am1;
    let ai = &ai_wide % &modulus;
    let x = (ai * BigUint::from(x0) + BigUint::from(c) * geometric) % &modulus;
    x.iter_u64_digits().next().unwrap_or(0)
}

/// Background states `x̃_1..=x̃_n` by plain iteration.
pub fn progress_states(a: u64, c: u64, bits: u32, x0: u64, n: u64) -> Vec<u64> {
    let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
    let mut x = x0;
    (0..n)
        .map(|_| {
            x = a.wrapping_mul(x).wrapping_add(c) & mask;
            x
        })
        .collect()
}

/// Normal variates `ε_1..=ε_n` of a stream, walking the generator forward
/// from the seed without any jump.
pub fn progress_normals(stream: &PrnStream, n: u64) -> Vec<f64> {
    let p: PcgParams = stream.params;
    progress_states(p.a(), p.c(), p.state_bits(), stream.seed, n)
        .into_iter()
        .map(|x| stream.normal_from_word(p.permute(x)).unwrap())
        .collect()
}

/// Portfolio losses of samples `1..=n_samp`, consuming the stream in order:
/// one common variate, then one variate per obligor.
pub fn loop_losses(portfolio: &PortfolioSpec, stream: &PrnStream, n_samp: u64) -> Vec<f64> {
    let d = portfolio.n_obl() as u64;
    let eps = progress_normals(stream, n_samp * (d + 1));
    eps.chunks(d as usize + 1)
        .map(|chunk| {
            let (com, ind) = (chunk[0], &chunk[1..]);
            let mut loss = 0.0;
            for (o, &e) in portfolio.obligors().iter().zip(ind) {
                let z = o.alpha * com + (1.0 - o.alpha * o.alpha).sqrt() * e;
                if z < o.z {
                    loss += o.exposure;
                }
            }
            loss
        })
        .collect()
}

/// `Σ_i f` for samples `1..=n_samp` with the same sequential layout.
pub fn loop_term_sums<T>(
    terms: &[T],
    f: impl Fn(f64, f64, &T) -> f64,
    stream: &PrnStream,
    n_samp: u64,
) -> Vec<f64> {
    let d = terms.len();
    let eps = progress_normals(stream, n_samp * (d as u64 + 1));
    eps.chunks(d + 1)
        .map(|chunk| {
            let mut s = 0.0;
            for (t, &e) in terms.iter().zip(&chunk[1..]) {
                s += f(chunk[0], e, t);
            }
            s
        })
        .collect()
}

/// `sorted_desc[floor(α N)]`.
pub fn sort_quantile(losses: &[f64], alpha: f64) -> f64 {
    let mut v = losses.to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v[(alpha * v.len() as f64).floor() as usize]
}

/// `Φ^{-1}(u)` by bisection on the reference normal CDF.
pub fn inv_cdf_bisection(u: f64) -> f64 {
    let n = Normal::standard();
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if n.cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `|(1/M) Σ_x e^{2πi x (θ - k/M)}|²`, the outcome probability summed as
/// a geometric series of phases.
pub fn kernel_by_phases(k: usize, theta: f64, m: usize) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    let w = 2.0 * std::f64::consts::PI * (theta - k as f64 / m as f64);
    for x in 0..m {
        re += (w * x as f64).cos();
        im += (w * x as f64).sin();
    }
    (re * re + im * im) / (m * m) as f64
}
