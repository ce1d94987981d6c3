mod common;

use common::nets::{gradcheck_cases, tcn_perturbation};
use windcast::nn::{grad_check, GradCheckConfig};
use windcast::{Error, Tensor};

#[test]
fn every_layer_matches_finite_differences() {
    for seed in 0..10 {
        for mut c in gradcheck_cases(seed) {
            let rep = grad_check(c.layer.as_mut(), &c.input, &c.target, GradCheckConfig::default()).unwrap();
            let tol = if c.affine { 1e-6 } else { 1e-4 };
            assert!(rep.max_rel_error() < tol, "{} seed {seed}: {rep}", c.name);
            let checked: usize = rep.params.iter().map(|p| p.checked).sum();
            assert!(checked > rep.total_skipped(), "{} seed {seed}: mostly skipped", c.name);
        }
    }
}

#[test]
fn backward_requires_forward() {
    for mut c in gradcheck_cases(3) {
        let fresh_out = c.target.clone();
        // Cases are built with a forward pass; run one backward to consume it.
        c.layer.backward(&fresh_out).unwrap();
        assert!(
            matches!(c.layer.backward(&fresh_out), Err(Error::NoForward(_))),
            "{} allowed a second backward",
            c.name
        );
    }
}

#[test]
fn gradients_accumulate_until_cleared() {
    let mut c = gradcheck_cases(5).remove(0);
    let up = Tensor::from_vec(c.target.shape(), vec![1.0; c.target.len()]).unwrap();
    c.layer.zero_grad();
    c.layer.forward(&c.input).unwrap();
    c.layer.backward(&up).unwrap();
    let once: Vec<f64> = c.layer.params()[0].grad.data().to_vec();
    c.layer.forward(&c.input).unwrap();
    c.layer.backward(&up).unwrap();
    for (a, b) in c.layer.params()[0].grad.data().iter().zip(&once) {
        assert!((a - 2.0 * b).abs() < 1e-12);
    }
    c.layer.zero_grad();
    assert!(c.layer.params()[0].grad.data().iter().all(|&g| g == 0.0));
}

#[test]
fn tcn_is_causal_with_receptive_field_eight() {
    for seed in 0..5 {
        let (future, stale, inside) = tcn_perturbation(seed);
        assert_eq!(future, 0, "seed {seed}: output moved before the perturbed step");
        assert_eq!(stale, 0, "seed {seed}: output moved beyond the receptive field");
        assert!(inside > 0);
    }
}

#[test]
fn mlp_baseline_is_tighter() {
    for seed in 0..10 {
        for mut c in gradcheck_cases(seed).into_iter().filter(|c| c.name.ends_with("mlp")) {
            let rep = grad_check(c.layer.as_mut(), &c.input, &c.target, GradCheckConfig::default()).unwrap();
            assert!(rep.max_rel_error() < 1e-6, "{} seed {seed}: {rep}", c.name);
        }
    }
}
