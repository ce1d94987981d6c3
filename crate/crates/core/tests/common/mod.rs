//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// SSA components computed with nalgebra's SVD and an explicit
/// elementary-matrix Hankelization, sorted by descending singular value.
pub struct OracleSsa {
    pub singular_values: Vec<f64>,
    pub components: Vec<Vec<f64>>,
}

pub fn oracle_ssa(c: &[f64], s: usize) -> OracleSsa {
    let n = c.len();
    let k = n - s + 1;
    let traj = DMatrix::from_fn(s, k, |i, j| c[i + j]);
    let svd = traj.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let lead = svd.singular_values[order[0]];
    let mut singular_values = Vec::new();
    let mut components = Vec::new();
    for &i in &order {
        let sigma = svd.singular_values[i];
        singular_values.push(sigma);
        if lead <= 0.0 || sigma <= 1e-12 * lead {
            continue;
        }
        let elem = u.column(i) * vt.row(i) * sigma;
        let mut comp = vec![0.0; n];
        let mut cnt = vec![0usize; n];
        for a in 0..s {
            for b in 0..k {
                comp[a + b] += elem[(a, b)];
                cnt[a + b] += 1;
            }
        }
        components.push(comp.iter().zip(&cnt).map(|(v, &m)| v / m as f64).collect());
    }
    OracleSsa {
        singular_values,
        components,
    }
}

pub fn pearson_oracle(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va.sqrt() * vb.sqrt()))
}

/// Exhaustive prefix scan: smallest m whose m-component sum reaches the threshold.
pub fn brute_force_m(original: &[f64], comps: &[Vec<f64>], threshold: f64) -> (usize, f64) {
    let mut last = 0.0;
    for m in 1..=comps.len() {
        let sum: Vec<f64> = (0..original.len())
            .map(|t| comps[..m].iter().map(|c| c[t]).sum())
            .collect();
        if let Some(r) = pearson_oracle(&sum, original) {
            last = r;
            if r >= threshold {
                return (m, r);
            }
        }
    }
    (comps.len(), last)
}

pub fn sinusoid(n: usize, period: f64, amplitude: f64, offset: f64) -> Vec<f64> {
    (0..n)
        .map(|t| offset + amplitude * (std::f64::consts::TAU * t as f64 / period).sin())
        .collect()
}

pub fn add_noise(clean: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Normal::new(0.0, sigma).unwrap();
    clean.iter().map(|&x| x + d.sample(&mut rng)).collect()
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

pub fn random_series(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let scale = rng.random_range(0.1..100.0);
    (0..n).map(|_| rng.random_range(-1.0..1.0) * scale).collect()
}

/// One of the 20 seeded noisy sinusoid cases.
pub fn noisy_sinusoid_case(seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(150..400);
    let period = rng.random_range(12.0..40.0);
    let amplitude = rng.random_range(1.0..5.0);
    let offset = rng.random_range(0.0..10.0);
    let clean = sinusoid(n, period, amplitude, offset);
    let noisy = add_noise(&clean, 0.2 * amplitude, seed.wrapping_mul(31).wrapping_add(7));
    (clean, noisy)
}

pub mod nets {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use windcast::nn::{
        Activation, Dense, DilatedConvLayer, ForecastNet, GruCell, GruLayer, Layer, Mlp, ModelKind, NetSpec,
        ResidualBlock, RnnCell, RnnLayer, TcnConfig, TcnStack,
    };
    use windcast::Tensor;

    pub struct Case {
        pub name: &'static str,
        pub layer: Box<dyn Layer<f64>>,
        pub input: Tensor<f64>,
        pub target: Tensor<f64>,
        /// Affine in its parameters and input, so finite differences are exact
        /// up to rounding.
        pub affine: bool,
    }

    /// Small random perturbation of every parameter so zero-initialised
    /// biases also get exercised.
    fn jitter(layer: &mut dyn Layer<f64>, rng: &mut ChaCha8Rng) {
        for p in layer.params_mut() {
            for x in p.value.data_mut() {
                *x += rng.random_range(-0.1..0.1);
            }
        }
    }

    fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
        let n: usize = shape.iter().product();
        Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn case(
        name: &'static str,
        mut layer: Box<dyn Layer<f64>>,
        rng: &mut ChaCha8Rng,
        input_shape: &[usize],
        affine: bool,
    ) -> Case {
        jitter(layer.as_mut(), rng);
        let input = rand_tensor(rng, input_shape);
        let out = layer.forward(&input).unwrap();
        let target = rand_tensor(rng, out.shape());
        Case {
            name,
            layer,
            input,
            target,
            affine,
        }
    }

    pub fn small_spec(kind: ModelKind, rng: &mut ChaCha8Rng) -> NetSpec {
        let window_dim = rng.random_range(6..12);
        let channels = rng.random_range(2..6);
        NetSpec {
            kind,
            window_dim,
            tcn: TcnConfig {
                channels,
                hidden: rng.random_range(2..6),
                ..TcnConfig::default()
            },
            gru_hidden: rng.random_range(3..8),
            rnn_hidden: rng.random_range(3..8),
            mlp_widths: vec![window_dim, rng.random_range(3..8), rng.random_range(3..8), 1],
        }
    }

    /// Every layer type plus the full forecasting model, drawn from one seed.
    pub fn gradcheck_cases(seed: u64) -> Vec<Case> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = &mut rng;
        let t = r.random_range(5..12);
        let (cin, cout, hid) = (r.random_range(1..4), r.random_range(2..5), r.random_range(2..6));
        let d = r.random_range(1..4);
        let mut cases = Vec::new();

        let l = Dense::new("dense", cin + 2, cout, Activation::Identity, r);
        cases.push(case("dense_linear", Box::new(l), r, &[t, cin + 2], true));
        let l = Dense::new("dense", cin + 2, cout, Activation::Sigmoid, r);
        cases.push(case("dense_sigmoid", Box::new(l), r, &[cin + 2], false));
        let l = Dense::new("dense", cin + 2, cout, Activation::Tanh, r);
        cases.push(case("dense_tanh", Box::new(l), r, &[t, cin + 2], false));
        let l = Dense::new("dense", cin + 2, cout, Activation::Relu, r);
        cases.push(case("dense_relu", Box::new(l), r, &[t, cin + 2], false));

        let l = DilatedConvLayer::new("conv", cin, cout, d, Activation::Identity, r);
        cases.push(case("conv_linear", Box::new(l), r, &[t, cin], true));
        let l = DilatedConvLayer::new("conv", cin, cout, d, Activation::Relu, r);
        cases.push(case("conv_relu", Box::new(l), r, &[t, cin], false));

        let l = ResidualBlock::new("block", cin, cout, &[1, 2], Activation::Relu, r);
        cases.push(case("residual_block", Box::new(l), r, &[t, cin], false));
        let cfg = TcnConfig {
            channels_in: 1,
            channels: cout,
            hidden: hid,
            blocks: r.random_range(1..3),
            ..TcnConfig::default()
        };
        let l = TcnStack::new("tcn", &cfg, r).unwrap();
        cases.push(case("tcn_stack", Box::new(l), r, &[t, 1], false));

        let l = GruLayer::new(GruCell::new("gru", cin, hid, r));
        cases.push(case("gru", Box::new(l), r, &[t, cin], false));
        let l = RnnLayer::new(RnnCell::new("rnn", cin, hid, r));
        cases.push(case("rnn", Box::new(l), r, &[t, cin], false));
        let widths = [cin + 3, hid, hid + 1, 1];
        let l = Mlp::new("mlp", &widths, Activation::Sigmoid, r).unwrap();
        cases.push(case("mlp", Box::new(l), r, &[cin + 3], false));

        for kind in [
            ModelKind::TcnGru,
            ModelKind::GruOnly,
            ModelKind::RnnOnly,
            ModelKind::Mlp,
        ] {
            let spec = small_spec(kind, r);
            let l = ForecastNet::new(&spec, r).unwrap();
            let name = match kind {
                ModelKind::TcnGru => "model_tcn_gru",
                ModelKind::GruOnly => "model_gru",
                ModelKind::RnnOnly => "model_rnn",
                ModelKind::Mlp => "model_mlp",
            };
            cases.push(case(name, Box::new(l), r, &[spec.window_dim, 1], false));
        }
        cases
    }

    /// Perturbs each input step of a default-config TCN stack and records
    /// whether any output outside `[j, j + receptive_field)` moved, compared
    /// bit for bit. Returns (future leaks, stale leaks, in-range changes).
    pub fn tcn_perturbation(seed: u64) -> (usize, usize, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = TcnConfig::default();
        let mut tcn = TcnStack::<f64>::new("tcn", &cfg, &mut rng).unwrap();
        jitter(&mut tcn, &mut rng);
        let rf = cfg.receptive_field();
        assert_eq!(rf, 8);
        let n = 30;
        let x = rand_tensor(&mut rng, &[n, 1]);
        let base = tcn.forward(&x).unwrap();
        let (mut future, mut stale, mut inside) = (0, 0, 0);
        for j in 0..n {
            let mut xp = x.clone();
            xp.data_mut()[j] += 5.0 + rng.random_range(0.0..1.0);
            let out = tcn.forward(&xp).unwrap();
            for t in 0..n {
                let same = base
                    .row(t)
                    .iter()
                    .zip(out.row(t))
                    .all(|(a, b)| a.to_bits() == b.to_bits());
                if t < j && !same {
                    future += 1;
                } else if t >= j + rf && !same {
                    stale += 1;
                } else if t >= j && t < j + rf && !same {
                    inside += 1;
                }
            }
        }
        (future, stale, inside)
    }
}
