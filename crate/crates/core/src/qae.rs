//! Exact outcome statistics of amplitude estimation.
//!
//! An `m`-qubit estimation register yields an outcome on the grid
//! `I_M = {0/M, …, (M-1)/M}`, `M = 2^m`, distributed by the Fejér-type
//! kernel `G(θ̃; θ, M) = sin²(M(θ̃-θ)π) / (M² sin²((θ̃-θ)π))`. Everything here
//! works on that distribution; no circuit is simulated.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::par;

/// Lower bound on the probability of landing within one grid step.
pub const CONFIDENCE_FLOOR: f64 = 8.0 / (PI * PI);

/// Largest supported register size; keeps `M` addressable and the O(M)
/// loops tractable.
pub const MAX_QUBITS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QaeGrid {
    m: u32,
}

impl QaeGrid {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 || m > MAX_QUBITS {
            return Err(Error::InvalidRunConfig(format!(
                "register size must lie in 1..={MAX_QUBITS} qubits, got {m}"
            )));
        }
        Ok(Self { m })
    }

    pub fn qubits(&self) -> u32 {
        self.m
    }

    /// `M = 2^m`.
    pub fn size(&self) -> usize {
        1usize << self.m
    }

    pub fn point(&self, k: usize) -> f64 {
        k as f64 / self.size() as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.size()).map(|k| self.point(k))
    }

    /// Grid index of `theta` if it lies exactly on the grid (mod 1).
    pub fn on_grid_index(&self, theta: f64) -> Option<usize> {
        let scaled = theta.rem_euclid(1.0) * self.size() as f64;
        if scaled == scaled.round() {
            Some(scaled.round() as usize % self.size())
        } else {
            None
        }
    }
}

/// Outcome distribution over the grid for a fixed phase.
#[derive(Debug, Clone, PartialEq)]
pub struct QaePmf {
    pub grid: QaeGrid,
    pub theta: f64,
    pub probs: Vec<f64>,
}

impl QaePmf {
    /// Most likely grid index (first on ties).
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = k;
            }
        }
        best
    }

    pub fn total(&self) -> f64 {
        par::compensated_sum(self.probs.iter().copied())
    }

    /// Draws one grid index by inverse-CDF sampling: the smallest `k` whose
    /// cumulative mass exceeds `u`.
    pub fn sample_index(&self, u: f64) -> usize {
        let mut cdf = 0.0;
        let mut last_positive = 0;
        for (k, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                last_positive = k;
            }
            cdf += p;
            if cdf > u && p > 0.0 {
                return k;
            }
        }
        last_positive
    }
}

/// `sin²(θπ) = s`, solved for `θ ∈ [0, 1/2]`.
pub fn theta_from_amplitude(s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::AmplitudeOutOfRange(s));
    }
    Ok(s.sqrt().asin() / PI)
}

/// `sin²(θπ)`.
pub fn amplitude_from_theta(theta: f64) -> f64 {
    let s = (theta * PI).sin();
    s * s
}

/// Maps outcomes above 1/2 to `1 - θ̃`.
pub fn fold(theta_tilde: f64) -> f64 {
    if theta_tilde > 0.5 {
        1.0 - theta_tilde
    } else {
        theta_tilde
    }
}

/// Kernel value `G(θ̃; θ, M)` at grid index `k`.
pub fn kernel(k: usize, theta: f64, grid: QaeGrid) -> f64 {
    if grid.on_grid_index(theta) == Some(k) {
        return 1.0;
    }
    let m = grid.size() as f64;
    let d = grid.point(k) - theta;
    let den = (d * PI).sin();
    if den == 0.0 {
        return 1.0;
    }
    let num = (m * d * PI).sin();
    (num * num) / (m * m * den * den)
}

pub fn qae_pmf(theta: f64, grid: QaeGrid) -> QaePmf {
    let probs = match grid.on_grid_index(theta) {
        Some(k0) => {
            let mut p = vec![0.0; grid.size()];
            p[k0] = 1.0;
            p
        }
        None => (0..grid.size()).map(|k| kernel(k, theta, grid)).collect(),
    };
    QaePmf { grid, theta, probs }
}

/// Mass of outcomes with `|fold(θ̃) - θ| < 1/M`.
pub fn qae_confidence(theta: f64, grid: QaeGrid) -> f64 {
    let pmf = qae_pmf(theta, grid);
    let step = 1.0 / grid.size() as f64;
    par::compensated_sum(
        pmf.probs
            .iter()
            .enumerate()
            .filter(|(k, _)| (fold(grid.point(*k)) - theta).abs() < step)
            .map(|(_, &p)| p),
    )
}

/// One measurement outcome (a grid point) for phase `theta`.
pub fn qae_sample<R: Rng + ?Sized>(theta: f64, grid: QaeGrid, rng: &mut R) -> f64 {
    let pmf = qae_pmf(theta, grid);
    grid.point(pmf.sample_index(rng.random::<f64>()))
}

/// `H(θ, M) = Σ G(θ̃; θ, M)(sin²(θ̃π) - sin²(θπ))`, summed literally.
pub fn h_direct(theta: f64, grid: QaeGrid) -> f64 {
    let s = amplitude_from_theta(theta);
    let pmf = qae_pmf(theta, grid);
    par::compensated_sum(
        pmf.probs
            .iter()
            .enumerate()
            .map(|(k, &p)| p * (amplitude_from_theta(grid.point(k)) - s)),
    )
}

/// Closed form
/// `sin²(Mθπ)/M² · [M cos(2θπ) + sin(2θπ) Σ cot((θ̃-θ)π)]`; zero on the grid.
pub fn h_closed(theta: f64, grid: QaeGrid) -> f64 {
    if grid.on_grid_index(theta).is_some() {
        return 0.0;
    }
    let m = grid.size() as f64;
    let cot_sum = par::compensated_sum(grid.points().map(|p| {
        let x = (p - theta) * PI;
        x.cos() / x.sin()
    }));
    let s = (m * theta * PI).sin();
    (s * s) / (m * m) * (m * (2.0 * theta * PI).cos() + (2.0 * theta * PI).sin() * cot_sum)
}

/// Product form `sin(Mθπ)·sin((M-2)θπ)/M`, algebraically equal to the
/// two sums above.
pub fn h_product(theta: f64, grid: QaeGrid) -> f64 {
    let m = grid.size() as f64;
    (m * theta * PI).sin() * ((m - 2.0) * theta * PI).sin() / m
}

/// Constant `c` in `max|H|·M <= 1 + c/M`. The product form gives
/// `|H|·M <= 1` outright, so it is frozen at zero.
pub const H_CALIBRATION: f64 = 0.0;

/// Leading bound `1/M` on `|H|`.
pub fn h_bound(grid: QaeGrid) -> f64 {
    1.0 / grid.size() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(m: u32) -> QaeGrid {
        QaeGrid::new(m).unwrap()
    }

    #[test]
    fn theta_conversions() {
        assert_eq!(theta_from_amplitude(0.0).unwrap(), 0.0);
        assert!((theta_from_amplitude(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((theta_from_amplitude(0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!(theta_from_amplitude(1.1).is_err());
        assert!(theta_from_amplitude(-0.1).is_err());
        for k in 0..=100 {
            let s = k as f64 / 100.0;
            let t = theta_from_amplitude(s).unwrap();
            assert!((amplitude_from_theta(t) - s).abs() <= 1e-12);
        }
    }

    #[test]
    fn on_grid_phase_is_a_point_mass() {
        let pmf = qae_pmf(3.0 / 8.0, g(3));
        assert_eq!(pmf.probs[3], 1.0);
        assert_eq!(pmf.total(), 1.0);
    }

    #[test]
    fn two_point_register() {
        // G(0; 1/8, 2) = sin²(π/4)/(4 sin²(π/8)) = cos²(π/8)
        let pmf = qae_pmf(1.0 / 8.0, g(1));
        let expect0 = (PI / 8.0).cos().powi(2);
        assert!((pmf.probs[0] - expect0).abs() < 1e-15);
        assert!((pmf.probs[0] - 0.853_553_390_593_273_7).abs() < 1e-12);
        assert!((pmf.probs[1] - 0.146_446_609_406_726_2).abs() < 1e-12);
    }

    #[test]
    fn pmf_normalizes() {
        for m in 1..=10 {
            for &t in &[0.001, 0.1234, 0.25 + 1e-9, 0.3, 0.4999, 0.77] {
                let tot = qae_pmf(t, g(m)).total();
                assert!((tot - 1.0).abs() <= 1e-12, "m={m} t={t} tot={tot}");
            }
        }
    }

    #[test]
    fn pmf_mirror_symmetry() {
        let grid = g(5);
        let a = qae_pmf(0.2137, grid);
        let b = qae_pmf(1.0 - 0.2137, grid);
        let n = grid.size();
        for k in 0..n {
            assert!((a.probs[k] - b.probs[(n - k) % n]).abs() < 1e-14);
        }
    }

    #[test]
    fn confidence_on_grid_and_half_step() {
        assert!((qae_confidence(0.25, g(4)) - 1.0).abs() < 1e-15);
        let grid = g(4);
        let c = qae_confidence(1.0 / 8.0 + 1.0 / 32.0, grid);
        assert!(c >= CONFIDENCE_FLOOR, "c={c}");
        // half-step offset: two neighbours of mass sin²(π/2)/(M² sin²(π/2M)) each,
        // plus the mirrored outcomes 13/16 and 14/16 that fold onto them
        let each = 1.0 / (256.0 * (PI / 32.0).sin().powi(2));
        let t = 1.0 / 8.0 + 1.0 / 32.0;
        let mirrored = kernel(13, t, grid) + kernel(14, t, grid);
        assert!((c - 2.0 * each - mirrored).abs() < 1e-12);
    }

    #[test]
    fn sampling_conventions() {
        let grid = g(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert_eq!(qae_sample(0.375, grid, &mut rng), 0.375);
        }
        let pmf = qae_pmf(0.375, grid);
        assert_eq!(pmf.sample_index(0.0), 3);
        let spread = qae_pmf(0.3, grid);
        assert_eq!(spread.sample_index(0.0), 0);
        assert_eq!(spread.sample_index(1.0 - 1e-17), grid.size() - 1);
    }

    #[test]
    fn h_vanishes_on_grid() {
        assert_eq!(h_direct(0.25, g(4)), 0.0);
        assert_eq!(h_closed(0.25, g(4)), 0.0);
    }

    #[test]
    fn h_closed_matches_direct() {
        let grid = g(4);
        let d = h_direct(0.3, grid);
        let c = h_closed(0.3, grid);
        assert!((d - c).abs() <= 1e-9, "{d} vs {c}");
        assert!(d.abs() < 1.0 / 16.0 + 1.0 / 256.0);
        for m in 3..=10 {
            let grid = g(m);
            let t = 1.0 / (2.0 * grid.size() as f64);
            assert!((h_direct(t, grid) - h_closed(t, grid)).abs() <= 1e-9);
        }
    }

    #[test]
    fn h_product_form() {
        for m in 1..=10 {
            let grid = g(m);
            for &t in &[0.013, 0.2, 0.3, 0.41, 0.499] {
                assert!((h_direct(t, grid) - h_product(t, grid)).abs() < 1e-12, "m={m} t={t}");
            }
        }
        // M = 32 and θ = 0.3: Mθ = 9.6, (M-2)θ = 9 → exact zero up to rounding
        assert!(h_product(0.3, g(5)).abs() < 1e-14);
    }

    #[test]
    fn h_bound_is_inverse_size() {
        assert_eq!(h_bound(g(4)), 0.0625);
        assert_eq!(h_bound(g(1)), 0.5);
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(QaeGrid::new(0).is_err());
        assert!(QaeGrid::new(31).is_err());
    }
}
