//! Analytic gradients against central finite differences.

mod common;
use common::oracles::{central_diff, dot, probe_weights, rel_err};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxnet_core::kernels::{
    conv3d, conv3d_backward, dense, dense_backward, dropout, dropout_backward, maxpool3d, maxpool3d_backward,
    softmax_xent, ConvSpec, Mode, PoolSpec,
};
use voxnet_core::model::{build, ArchConfig, Architecture, RunMode};
use voxnet_core::Tensor;

const H: f64 = 1e-5;
const LAYER_TOL: f64 = 1e-5;
const MODEL_TOL: f64 = 1e-4;

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

fn with(shape: &[usize], data: &[f64]) -> Tensor {
    Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
}

#[test]
fn conv3d_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for spec in [
        ConvSpec::cube(2, 3, 3, 1),
        ConvSpec::cube(3, 2, 3, 0).with_stride(2),
        ConvSpec { in_channels: 1, out_channels: 2, kernel: [1, 2, 3], stride: [1, 2, 1], padding: [0, 1, 2] },
    ] {
        let x = random(&[spec.in_channels, 5, 6, 5], &mut rng);
        let w = random(&spec.weight_shape(), &mut rng);
        let b = random(&[spec.out_channels], &mut rng);
        let y = conv3d(&x, &w, &b, &spec).unwrap();
        let probe = probe_weights(y.len());
        let g = conv3d_backward(&x, &w, &spec, &with(y.shape(), &probe)).unwrap();

        let loss_x = |v: &[f64]| dot(&probe, conv3d(&with(x.shape(), v), &w, &b, &spec).unwrap().data());
        let loss_w = |v: &[f64]| dot(&probe, conv3d(&x, &with(w.shape(), v), &b, &spec).unwrap().data());
        let loss_b = |v: &[f64]| dot(&probe, conv3d(&x, &w, &with(b.shape(), v), &spec).unwrap().data());
        assert!(rel_err(g.input.data(), &central_diff(x.data(), H, loss_x)) < LAYER_TOL);
        assert!(rel_err(g.weights.data(), &central_diff(w.data(), H, loss_w)) < LAYER_TOL);
        assert!(rel_err(g.bias.data(), &central_diff(b.data(), H, loss_b)) < LAYER_TOL);
    }
}

#[test]
fn maxpool3d_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for spec in [PoolSpec::cube(2, 2, 0), PoolSpec::cube(3, 2, 1), PoolSpec::cube(3, 1, 0)] {
        let x = random(&[2, 6, 7, 5], &mut rng);
        let pooled = maxpool3d(&x, &spec).unwrap();
        let probe = probe_weights(pooled.output.len());
        let g = maxpool3d_backward(x.shape(), &pooled.argmax, &with(pooled.output.shape(), &probe)).unwrap();
        let loss = |v: &[f64]| dot(&probe, maxpool3d(&with(x.shape(), v), &spec).unwrap().output.data());
        assert!(rel_err(g.data(), &central_diff(x.data(), H, loss)) < LAYER_TOL);
    }
}

#[test]
fn dense_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random(&[7], &mut rng);
    let w = random(&[4, 7], &mut rng);
    let b = random(&[4], &mut rng);
    let probe = probe_weights(4);
    let g = dense_backward(&x, &w, &with(&[4], &probe)).unwrap();
    let loss_x = |v: &[f64]| dot(&probe, dense(&with(&[7], v), &w, &b).unwrap().data());
    let loss_w = |v: &[f64]| dot(&probe, dense(&x, &with(&[4, 7], v), &b).unwrap().data());
    let loss_b = |v: &[f64]| dot(&probe, dense(&x, &w, &with(&[4], v)).unwrap().data());
    assert!(rel_err(g.input.data(), &central_diff(x.data(), H, loss_x)) < LAYER_TOL);
    assert!(rel_err(g.weights.data(), &central_diff(w.data(), H, loss_w)) < LAYER_TOL);
    assert!(rel_err(g.bias.data(), &central_diff(b.data(), H, loss_b)) < LAYER_TOL);
}

#[test]
fn dropout_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = random(&[3, 4, 4, 4], &mut rng);
    let run = |v: &[f64]| {
        let mut r = ChaCha8Rng::seed_from_u64(99);
        dropout(&with(x.shape(), v), 0.4, Mode::Train, &mut r).unwrap()
    };
    let (y, mask) = run(x.data());
    let probe = probe_weights(y.len());
    let g = dropout_backward(&mask, &with(y.shape(), &probe)).unwrap();
    let loss = |v: &[f64]| dot(&probe, run(v).0.data());
    assert!(rel_err(g.data(), &central_diff(x.data(), H, loss)) < LAYER_TOL);
}

#[test]
fn softmax_xent_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for class in 0..3 {
        let z = random(&[3], &mut rng);
        let g = softmax_xent(&z, class).unwrap().grad_logits;
        let loss = |v: &[f64]| softmax_xent(&with(&[3], v), class).unwrap().loss;
        assert!(rel_err(g.data(), &central_diff(z.data(), H, loss)) < LAYER_TOL);
    }
}

#[test]
fn toy_alexnet_matches_finite_differences() {
    let config = ArchConfig::toy(Architecture::AlexNet3d).with_input([3, 9, 9, 9]);
    let mut model = build(&config).unwrap();
    model.initialize(6);
    // Nonzero biases so every unit is exercised.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (key, t) in model.params_mut().iter_mut() {
        if key.ends_with(".bias") {
            t.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.1..0.1));
        }
    }
    let x = Tensor::from_fn(&[3, 9, 9, 9], |_| rng.random_range(0.0..1.0));
    let mode = RunMode::Train { seed: 17 };
    let label = 1;
    let pass = model.forward(&x, mode).unwrap();
    let grads = model.backward(&pass, label).unwrap();
    let loss_at = |m: &voxnet_core::model::Model, input: &Tensor| {
        softmax_xent(&m.forward(input, mode).unwrap().logits, label).unwrap().loss
    };

    let numeric_input = central_diff(x.data(), H, |v| loss_at(&model, &with(x.shape(), v)));
    let err = rel_err(grads.input.data(), &numeric_input);
    assert!(err < MODEL_TOL, "input: {err}");

    let keys: Vec<String> = model.params().keys().cloned().collect();
    for key in keys {
        let base = model.params().get(&key).unwrap().clone();
        let mut probe = model.clone();
        let numeric = central_diff(base.data(), H, |v| {
            probe.params_mut().get_mut(&key).unwrap().data_mut().copy_from_slice(v);
            loss_at(&probe, &x)
        });
        let err = rel_err(grads.params.get(&key).unwrap().data(), &numeric);
        assert!(err < MODEL_TOL, "{key}: {err}");
    }
}
