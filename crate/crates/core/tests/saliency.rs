//! Saliency maps on hand-built and toy models.

mod common;
use common::oracles::central_diff;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxnet_core::dataset::TensorDataset;
use voxnet_core::model::{build, ArchConfig, Architecture, Layer, LayerKind, Model};
use voxnet_core::saliency::{class_mean_saliency, logit_gradient, saliency_map};
use voxnet_core::Tensor;

fn linear_model(rng: &mut ChaCha8Rng) -> Model {
    let config = ArchConfig::toy(Architecture::AlexNet3d).with_input([3, 2, 3, 2]);
    let layers = vec![
        Layer::new("flatten", LayerKind::Flatten),
        Layer::new("fc", LayerKind::Dense { inputs: 36, outputs: 3 }),
    ];
    let mut m = Model::from_layers(config, layers).unwrap();
    for (_, t) in m.params_mut().iter_mut() {
        t.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    }
    m
}

fn toy(seed: u64) -> (Model, ChaCha8Rng) {
    let config = ArchConfig::toy(Architecture::AlexNet3d).with_input([3, 12, 12, 12]);
    let mut m = build(&config).unwrap();
    m.initialize(seed);
    (m, ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn linear_model_saliency_is_weight_magnitude() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = linear_model(&mut rng);
    let x = Tensor::from_fn(&[3, 2, 3, 2], |_| rng.random_range(0.0..1.0));
    for class in 0..3 {
        let s = saliency_map(&m, &x, class).unwrap();
        assert_eq!(s.extents, [2, 3, 2]);
        let w = m.params().get("fc.weight").unwrap();
        let row = &w.data()[class * 36..(class + 1) * 36];
        let expected: Vec<f64> = (0..12).map(|v| (0..3).map(|c| row[c * 12 + v].abs()).fold(0.0, f64::max)).collect();
        let peak = expected.iter().copied().fold(0.0, f64::max);
        for (got, want) in s.data.iter().zip(&expected) {
            assert!((got - want / peak).abs() < 1e-12);
        }
        assert!((s.scale - peak).abs() < 1e-12);
    }
}

#[test]
fn logit_gradient_matches_finite_differences_on_sampled_voxels() {
    let (m, mut rng) = toy(2);
    let x = Tensor::from_fn(&[3, 12, 12, 12], |_| rng.random_range(0.0..1.0));
    let class = 2;
    let g = logit_gradient(&m, &x, class).unwrap();
    let score = |input: &Tensor| m.logits(input).unwrap().data()[class];
    let mut checked = 0;
    for _ in 0..20 {
        let i = rng.random_range(0..x.len());
        let numeric = central_diff(&[x.data()[i]], 1e-5, |v| {
            let mut p = x.clone();
            p.data_mut()[i] = v[0];
            score(&p)
        })[0];
        let analytic = g.data()[i];
        let scale = analytic.abs().max(numeric.abs());
        if scale > 0.0 {
            assert!((analytic - numeric).abs() / scale < 1e-4, "voxel {i}: {analytic} vs {numeric}");
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn normalization_keeps_the_peak_voxel() {
    let (m, mut rng) = toy(3);
    let x = Tensor::from_fn(&[3, 12, 12, 12], |_| rng.random_range(0.0..1.0));
    let g = logit_gradient(&m, &x, 0).unwrap();
    let n = 12 * 12 * 12;
    let raw: Vec<f64> = (0..n).map(|v| (0..3).map(|c| g.data()[c * n + v].abs()).fold(0.0, f64::max)).collect();
    let s = saliency_map(&m, &x, 0).unwrap();
    assert_eq!(voxnet_core::tensor::argmax(&raw), voxnet_core::tensor::argmax(&s.data));
    assert!(s.data.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn constant_logit_shift_leaves_saliency_unchanged() {
    let (m, mut rng) = toy(4);
    let x = Tensor::from_fn(&[3, 12, 12, 12], |_| rng.random_range(0.0..1.0));
    let mut shifted = m.clone();
    let last = shifted.layers().iter().rev().find(|l| matches!(l.kind, LayerKind::Dense { .. })).unwrap().bias_key();
    shifted.params_mut().get_mut(&last).unwrap().data_mut().iter_mut().for_each(|b| *b += 3.5);
    for class in 0..3 {
        assert_eq!(saliency_map(&m, &x, class).unwrap(), saliency_map(&shifted, &x, class).unwrap());
    }
}

#[test]
fn class_mean_matches_accumulation() {
    let (m, mut rng) = toy(5);
    let samples: Vec<(Tensor, usize)> = (0..10)
        .map(|i| (Tensor::from_fn(&[3, 12, 12, 12], |_| rng.random_range(0.0..1.0)), i % 2))
        .collect();
    let data = TensorDataset { samples: samples.clone() };
    let mean = class_mean_saliency(&m, &data, 1).unwrap();
    let mut acc = vec![0.0; 12 * 12 * 12];
    let mut count = 0.0;
    for (x, _) in samples.iter().filter(|(_, l)| *l == 1) {
        for (a, v) in acc.iter_mut().zip(saliency_map(&m, x, 1).unwrap().data) {
            *a += v;
        }
        count += 1.0;
    }
    let acc: Vec<f64> = acc.into_iter().map(|v| v / count).collect();
    let peak = acc.iter().copied().fold(0.0, f64::max);
    for (got, want) in mean.data.iter().zip(&acc) {
        assert!((got - want / peak).abs() < 1e-12);
    }

    let single = TensorDataset { samples: vec![samples[0].clone()] };
    let alone = class_mean_saliency(&m, &single, 0).unwrap();
    for (a, b) in alone.data.iter().zip(&saliency_map(&m, &samples[0].0, 0).unwrap().data) {
        assert!((a - b).abs() < 1e-15);
    }
    let twins = TensorDataset { samples: vec![samples[0].clone(), samples[0].clone()] };
    let twin_mean = class_mean_saliency(&m, &twins, 0).unwrap();
    let one = saliency_map(&m, &samples[0].0, 0).unwrap();
    for (a, b) in twin_mean.data.iter().zip(&one.data) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!(class_mean_saliency(&m, &single, 2).is_err());
}
