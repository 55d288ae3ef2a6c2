mod common;

use nqae::credit::{self, Method, RiskMeasureSpec, TailModel};
use nqae::distributions::{self, FixedPointSpec, PrnStream};
use nqae::integrator::{self, RunConfig};
use nqae::pcg::{self, PcgParams, Permutation};
use nqae::qae::{self, QaeGrid};
use nqae::synthetic::{self, Payoff};

fn stream(params: PcgParams, seed: u64) -> PrnStream {
    PrnStream::new(params, seed, FixedPointSpec::default(), false).unwrap()
}

#[test]
fn jump_matches_bigint_closed_form() {
    let cases = [
        (pcg::DEFAULT_MULTIPLIER, pcg::DEFAULT_INCREMENT, 64, 42u64),
        (0x5851_f42d_4c95_7f2d, 0x14057b7ef767814f, 64, 0xdead_beef),
        (5, 3, 4, 1),
        (1_103_515_245, 12_345, 31, 7),
        (69_069, 1, 32, 0),
    ];
    for (a, c, bits, x0) in cases {
        let p = PcgParams::new(a, c, bits, Permutation::Identity).unwrap();
        for i in [1u64, 2, 3, 17, 1000, 65_537, 1 << 40, u64::MAX] {
            assert_eq!(pcg::jump(p, x0, i).unwrap().x_tilde(), common::bigint_jump(a, c, bits, x0, i), "a={a} i={i}");
        }
    }
}

#[test]
fn small_lcg_by_hand() {
    // x̃ ← 5x̃ + 3 mod 16 from 1: 8, 11, 10, 5, 12
    assert_eq!(common::progress_states(5, 3, 4, 1, 5), vec![8, 11, 10, 5, 12]);
    let p = PcgParams::new(5, 3, 4, Permutation::Identity).unwrap();
    assert_eq!(pcg::stream_element(p, 1, 5).unwrap(), 12);
    assert_eq!(common::bigint_jump(5, 3, 4, 1, 5), 12);
}

#[test]
fn stream_normals_match_progress_walk() {
    for perm in [Permutation::Identity, Permutation::XshRr] {
        let params = PcgParams::new(pcg::DEFAULT_MULTIPLIER, pcg::DEFAULT_INCREMENT, 64, perm).unwrap();
        let s = stream(params, 99);
        let walked = common::progress_normals(&s, 200);
        for (k, &e) in walked.iter().enumerate() {
            assert_eq!(s.normal_at(k as u64 + 1).unwrap(), e);
        }
        let d = 4;
        for j in 1..=10u64 {
            let base = ((j - 1) * (d + 1)) as usize;
            assert_eq!(s.epsilon_com(j, d).unwrap(), walked[base]);
            for i in 1..=d {
                assert_eq!(s.epsilon_ind(i, j, d).unwrap(), walked[base + i as usize]);
            }
        }
    }
}

#[test]
fn e_samp_matches_independent_loop() {
    for seed in [1u64, 17, 123_456_789] {
        let s = stream(PcgParams::default(), seed);
        let d = 12;
        let ig = synthetic::integrand(Payoff::Exponential, d, s.clone()).unwrap();
        let cfg = RunConfig::new(32, 4, 4).unwrap();
        let sums = common::loop_term_sums(&synthetic::offsets(d), synthetic::term, &s, 32);
        for (k, &sum) in sums.iter().enumerate() {
            let j = k as u64 + 1;
            let mine = ig.term_sum_sequential(j).unwrap();
            assert!((mine - sum).abs() <= 1e-13, "j={j}: {mine} vs {sum}");
            assert_eq!(ig.term_sum_by_jumps(j).unwrap(), mine);
            assert!((integrator::s_j(&ig, j).unwrap() - sum / d as f64).abs() <= 1e-15);
        }
        let e1 = std::f64::consts::E - 1.0;
        let oracle: f64 = sums.iter().map(|s| ((s / d as f64).exp() - 1.0) / e1).sum::<f64>() / 32.0;
        assert!((integrator::e_samp(&ig, &cfg).unwrap() - oracle).abs() <= 1e-14);
    }
}

#[test]
fn kernel_matches_phase_sum() {
    for m in 1..=7 {
        let g = QaeGrid::new(m).unwrap();
        for &t in &[0.01, 0.137, 0.25 + 1e-3, 0.4, 0.49] {
            let pmf = qae::qae_pmf(t, g);
            for k in 0..g.size() {
                assert!((pmf.probs[k] - common::kernel_by_phases(k, t, g.size())).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn h_direct_matches_product_and_closed_forms() {
    for m in [3u32, 6, 10] {
        let g = QaeGrid::new(m).unwrap();
        let mm = g.size() as f64;
        // θ = 1/(2M): oracle value sin(π/2)·sin((M-2)π/(2M))/M
        let t = 0.5 / mm;
        let want = ((mm - 2.0) * t * std::f64::consts::PI).sin() / mm;
        assert!((qae::h_direct(t, g) - want).abs() < 1e-12);
        assert!((qae::h_closed(t, g) - want).abs() < 1e-9);
    }
    let g = QaeGrid::new(4).unwrap();
    assert!((qae::h_closed(0.3, g) - qae::h_direct(0.3, g)).abs() < 1e-9);
}

#[test]
fn inverse_cdf_matches_bisection() {
    let mut worst = 0.0f64;
    for k in 1..2000 {
        let u = k as f64 / 2000.0;
        worst = worst.max((distributions::inv_normal_cdf(u).unwrap() - common::inv_cdf_bisection(u)).abs());
    }
    assert!(worst < 1e-8, "{worst}");
    assert!((distributions::inv_normal_cdf(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-8);
}

#[test]
fn losses_and_tail_match_loop_oracle() {
    let p = common::portfolio("portfolio8.csv");
    let s = stream(PcgParams::default(), 5);
    let cfg = RunConfig::new(64, 8, 6).unwrap();
    let oracle = common::loop_losses(&p, &s, 64);
    let mine = credit::sample_losses(&p, &s, &cfg).unwrap();
    for (a, b) in mine.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-12);
    }
    for l in [0.1, 0.77, 1.5, 2.2, 3.9] {
        let freq = oracle.iter().filter(|&&x| l < x).count() as f64 / 64.0;
        for m in [Method::Classical, Method::Previous] {
            assert_eq!(credit::tail_prob(&p, &s, l, &cfg, m).unwrap(), freq);
        }
    }
}

#[test]
fn var_on_eight_obligors_matches_sort_quantile() {
    let p = common::portfolio("portfolio8.csv");
    let s = stream(PcgParams::default(), 42);
    for n in [16u64, 128, 1024] {
        let cfg = RunConfig::new(n, 6, 6).unwrap();
        let losses = common::loop_losses(&p, &s, n);
        for alpha in [0.05, 0.1, 0.3] {
            let q = common::sort_quantile(&losses, alpha);
            let tol = 1e-7;
            let v = credit::var_search(&p, &s, alpha, &cfg, tol, Method::Classical).unwrap();
            assert!(v >= q - 1e-12 && v - q <= tol, "n={n} α={alpha}: {v} vs {q}");
        }
    }
}

#[test]
fn cvar_matches_brute_force() {
    let p = common::portfolio("portfolio4.csv");
    let s = stream(PcgParams::default(), 9);
    let cfg = RunConfig::new(256, 6, 6).unwrap();
    let losses = common::loop_losses(&p, &s, 256);
    let l_alpha = common::sort_quantile(&losses, 0.2) - 1e-9;
    let tail: Vec<f64> = losses.iter().copied().filter(|&x| l_alpha < x).collect();
    let brute = tail.iter().sum::<f64>() / tail.len() as f64;
    let classical = credit::cvar(&p, &s, l_alpha, &cfg, Method::Classical).unwrap();
    let previous = credit::cvar(&p, &s, l_alpha, &cfg, Method::Previous).unwrap();
    assert!((classical - brute).abs() < 1e-12);
    assert!((previous - brute).abs() < 1e-12);
}

#[test]
fn normalized_fixture_equals_prescaled_fixture() {
    let raw = credit::PortfolioSpec::from_csv_path(&common::fixture("portfolio8_raw.csv"), true).unwrap();
    let scaled = common::portfolio("portfolio8.csv");
    for (a, b) in raw.obligors().iter().zip(scaled.obligors()) {
        assert!((a.exposure - b.exposure).abs() < 1e-15);
    }
    assert!(credit::PortfolioSpec::from_csv_path(&common::fixture("portfolio8_raw.csv"), false).is_err());
}

#[test]
fn nested_tail_tracks_classical() {
    let p = common::portfolio("portfolio8.csv");
    let s = stream(PcgParams::default(), 3);
    let cfg = RunConfig::new(32, 9, 6).unwrap();
    let classical = TailModel::new(&p, &s, &cfg, Method::Classical).unwrap();
    let nested = TailModel::new(&p, &s, &cfg, Method::New).unwrap();
    let direct = |l: f64| {
        let ig = credit::to_separable(&p, &RiskMeasureSpec::var(l), &s).unwrap();
        integrator::p1_new(&ig, &cfg).unwrap()
    };
    for l in [0.3, 1.1, 2.05] {
        assert!((nested.tail_prob(l).unwrap() - direct(l)).abs() < 1e-14);
        assert!((nested.tail_prob(l).unwrap() - classical.tail_prob(l).unwrap()).abs() < 0.1);
    }
}
