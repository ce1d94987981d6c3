mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use windcast::pssa::{decompose, diagonal_average, embed, pearson, pssa_denoise, PssaConfig};
use windcast::TimeSeries;

fn ts(v: &[f64]) -> TimeSeries<f64> {
    TimeSeries::new(v.to_vec()).unwrap()
}

fn assert_components_match(c: &[f64], s: usize) {
    let ours = decompose(&ts(c), s).unwrap();
    let oracle = oracle_ssa(c, s);
    assert_eq!(ours.rank(), oracle.components.len());
    let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for (a, b) in ours.singular_values.iter().zip(&oracle.singular_values) {
        assert!((a - b).abs() <= 1e-9 * oracle.singular_values[0].max(1.0), "{a} vs {b}");
    }
    // Components are sign-invariant (u and v flip together), but a pair of
    // nearly equal singular values may rotate within its plane; compare the
    // two-component sums in that case.
    let sv = &oracle.singular_values;
    let mut i = 0;
    while i < ours.rank() {
        let paired = i + 1 < ours.rank() && (sv[i] - sv[i + 1]).abs() <= 1e-6 * sv[0];
        let width = if paired { 2 } else { 1 };
        for t in 0..c.len() {
            let a: f64 = ours.components[i..i + width].iter().map(|v| v[t]).sum();
            let b: f64 = oracle.components[i..i + width].iter().map(|v| v[t]).sum();
            assert!(
                (a - b).abs() <= 1e-8 * scale.max(1.0),
                "component {i} at {t}: {a} vs {b}"
            );
        }
        i += width;
    }
}

#[test]
fn matches_dense_svd_oracle_on_random_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let n = rng.random_range(20..120);
        let s = rng.random_range(2..=15.min(n));
        let c = random_series(&mut rng, n);
        assert_components_match(&c, s);
    }
}

#[test]
fn constant_series_rank_one_against_oracle() {
    let c = [5.0; 5];
    let d = decompose(&ts(&c), 3).unwrap();
    let o = oracle_ssa(&c, 3);
    assert_eq!(d.rank(), 1);
    assert_eq!(o.components.len(), 1);
    for (a, b) in d.components[0].iter().zip(&o.components[0]) {
        assert!((a - b).abs() < 1e-10 && (a - 5.0).abs() < 1e-10);
    }
}

#[test]
fn sinusoid_energy_in_two_components() {
    let c = sinusoid(200, 20.0, 1.0, 0.0);
    let o = oracle_ssa(&c, 15);
    let total: f64 = o.singular_values.iter().map(|s| s * s).sum();
    let lead: f64 = o.singular_values[..2].iter().map(|s| s * s).sum();
    assert!(lead / total >= 0.999, "oracle energy split {}", lead / total);
    let d = decompose(&ts(&c), 15).unwrap();
    let total: f64 = d.singular_values.iter().map(|s| s * s).sum();
    let lead: f64 = d.singular_values[..2].iter().map(|s| s * s).sum();
    assert!(lead / total >= 0.999);
}

#[test]
fn noiseless_sinusoid_needs_two_components() {
    let c = sinusoid(200, 20.0, 3.0, 0.0);
    let res = pssa_denoise(&ts(&c), &PssaConfig::default()).unwrap();
    let o = oracle_ssa(&c, 15);
    let (m, _) = brute_force_m(&c, &o.components, 0.99);
    assert_eq!(m, 2);
    assert_eq!(res.m_used, 2);
    assert!(res.achieved_r >= 0.99);
}

#[test]
fn near_one_threshold_on_white_noise_keeps_everything() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let c: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
    let cfg = PssaConfig {
        embed_dim: 15,
        pearson_threshold: 1.0 - 1e-12,
    };
    let res = pssa_denoise(&ts(&c), &cfg).unwrap();
    let o = oracle_ssa(&c, 15);
    assert_eq!(res.rank, o.components.len());
    assert_eq!(res.m_used, res.rank);
    for (a, b) in res.denoised.values().iter().zip(&c) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn noisy_sinusoid_gets_closer_to_clean() {
    let clean = sinusoid(300, 25.0, 2.0, 8.0);
    let noisy = add_noise(&clean, 0.4, 42);
    let res = pssa_denoise(&ts(&noisy), &PssaConfig::default()).unwrap();
    let o = oracle_ssa(&noisy, 15);
    assert_eq!(res.m_used, brute_force_m(&noisy, &o.components, 0.99).0);
    assert!(rmse(res.denoised.values(), &clean) < rmse(&noisy, &clean));
}

#[test]
fn prefix_selection_is_minimal() {
    for seed in 0..8 {
        let (_, noisy) = noisy_sinusoid_case(seed);
        let d = decompose(&ts(&noisy), 15).unwrap();
        let res = pssa_denoise(&ts(&noisy), &PssaConfig::default()).unwrap();
        let full = d.reconstruct(d.rank());
        assert!((pearson(&full, &noisy).unwrap() - 1.0).abs() < 1e-8);
        for m in 1..res.m_used {
            let r = pearson(&d.reconstruct(m), &noisy).unwrap_or(0.0);
            assert!(r < 0.99, "prefix {m} already reaches {r}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_reconstruction(c in prop::collection::vec(-100.0f64..100.0, 3..150), s_seed in 0usize..1000) {
        let s = 2 + s_seed % (c.len() - 1).min(20);
        let d = decompose(&ts(&c), s).unwrap();
        let sum = d.reconstruct(d.rank());
        let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in sum.iter().zip(&c) {
            prop_assert!((a - b).abs() <= 1e-8 * scale.max(f64::MIN_POSITIVE));
        }
        prop_assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(d.singular_values.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn hankel_fixed_point(c in prop::collection::vec(-10.0f64..10.0, 2..80), s_seed in 0usize..1000) {
        let s = 2 + s_seed % (c.len() - 1);
        let back = diagonal_average(embed(&ts(&c), s).unwrap().entries());
        prop_assert_eq!(back, c);
    }

    #[test]
    fn energy_equals_frobenius(c in prop::collection::vec(-10.0f64..10.0, 5..100), s_seed in 0usize..1000) {
        let s = 2 + s_seed % (c.len() - 1).min(15);
        let traj = embed(&ts(&c), s).unwrap();
        let fro = traj.entries().frobenius_sq();
        let d = decompose(&ts(&c), s).unwrap();
        let energy: f64 = d.singular_values.iter().map(|x| x * x).sum();
        prop_assert!((energy - fro).abs() <= 1e-6 * fro.max(1e-300));
    }

    #[test]
    fn pearson_symmetric_and_affine_invariant(
        a in prop::collection::vec(-10.0f64..10.0, 3..50),
        alpha in 0.1f64..10.0, beta in -5.0f64..5.0,
    ) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x.sin() + i as f64 * 0.01).collect();
        if let (Ok(r1), Ok(r2)) = (pearson(&a, &b), pearson(&b, &a)) {
            prop_assert!((r1 - r2).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&r1));
            let a2: Vec<f64> = a.iter().map(|x| alpha * x + beta).collect();
            let r3 = pearson(&a2, &b).unwrap();
            prop_assert!((r1 - r3).abs() < 1e-9);
        }
    }
}
