//! Training loop contracts on tiny models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxnet_core::dataset::TensorDataset;
use voxnet_core::kernels::softmax_xent;
use voxnet_core::model::{build, ArchConfig, Architecture, Model, RunMode};
use voxnet_core::train::{
    adam_step, evaluate, l2_term, make_kfold, run_cross_validation, train, AdamState, SplitPlan, TrainConfig,
};
use voxnet_core::{Error, Tensor};

const SHAPE: [usize; 4] = [3, 9, 9, 9];

fn model(seed: u64) -> Model {
    let mut m = build(&ArchConfig::toy(Architecture::AlexNet3d).with_input(SHAPE)).unwrap();
    m.initialize(seed);
    m
}

fn data(n: usize, seed: u64) -> TensorDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TensorDataset {
        samples: (0..n)
            .map(|i| {
                let class = i % 3;
                // Class shifts the mean of one channel.
                let x = Tensor::from_fn(&SHAPE, |j| {
                    let c = j / 729;
                    rng.random_range(0.0..0.5) + if c == class { 0.5 } else { 0.0 }
                });
                (x, class)
            })
            .collect(),
    }
}

fn plan(n: usize) -> SplitPlan {
    SplitPlan {
        train: (0..n).collect(),
        validation: vec![0, 1, 2],
        test: vec![],
    }
}

fn quick() -> TrainConfig {
    TrainConfig {
        epochs: 3,
        lr0: 1e-3,
        batch_size: 4,
        validation_freq_iters: 2,
        seed: 9,
        ..TrainConfig::default()
    }
}

#[test]
fn zero_epochs_is_a_no_op() {
    let m = model(1);
    let cfg = TrainConfig { epochs: 0, ..quick() };
    let (trained, history) = train(m.clone(), &data(6, 1), &plan(6), &cfg).unwrap();
    assert_eq!(trained.params(), m.params());
    assert!(history.checkpoints.is_empty());
}

#[test]
fn identical_runs_are_bit_identical() {
    let d = data(10, 2);
    let (a, ha) = train(model(2), &d, &plan(10), &quick()).unwrap();
    let (b, hb) = train(model(2), &d, &plan(10), &quick()).unwrap();
    assert_eq!(ha, hb);
    for ((_, x), (_, y)) in a.params().iter().zip(b.params().iter()) {
        let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(x), bits(y));
    }
    let (c, _) = train(model(2), &d, &plan(10), &TrainConfig { seed: 10, ..quick() }).unwrap();
    assert_ne!(a.params(), c.params());
}

#[test]
fn checkpoints_every_frequency_iterations() {
    // 10 samples in batches of 4: 3 iterations per epoch, the last one short.
    let (_, h) = train(model(3), &data(10, 3), &plan(10), &quick()).unwrap();
    assert_eq!(h.iterations, 9);
    let its: Vec<usize> = h.checkpoints.iter().map(|c| c.iteration).collect();
    assert_eq!(its, [2, 4, 6, 8]);
    assert!(h.checkpoints.iter().all(|c| c.val_accuracy.is_some()));
    assert_eq!(h.checkpoints[0].epoch, 0);
    assert_eq!(h.checkpoints[3].epoch, 2);
}

#[test]
fn l2_enters_through_the_gradient() {
    // One full-batch iteration without dropout equals a hand-built Adam step
    // on the cross-entropy gradient plus λ·w.
    let d = data(4, 4);
    let cfg = TrainConfig { epochs: 1, batch_size: 4, dropout_rate: 0.0, l2_lambda: 0.3, ..quick() };
    let start = model(4);
    let (trained, _) = train(start.clone(), &d, &plan(4), &cfg).unwrap();

    let mut reference = start.clone();
    reference.set_dropout_rate(0.0).unwrap();
    let mut grads = reference.params().zeros_like();
    for (x, label) in &d.samples {
        let pass = reference.forward(x, RunMode::Train { seed: 0 }).unwrap();
        let mut g = softmax_xent(&pass.logits, *label).unwrap().grad_logits;
        g.scale(0.25);
        reference.backward_into(&pass.cache, &g, &mut grads, false).unwrap();
    }
    let (_, l2) = l2_term(reference.params(), 0.3);
    grads.add_scaled(&l2, 1.0).unwrap();
    let mut state = AdamState::new(reference.params());
    adam_step(reference.params_mut(), &grads, &mut state, cfg.lr0, cfg.adam()).unwrap();
    // Sample order within the batch changes only the summation order.
    for ((k, a), (_, b)) in trained.params().iter().zip(reference.params().iter()) {
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12, "{k}");
        }
    }
}

#[test]
fn l2_gradient_matches_finite_differences() {
    let m = model(5);
    let (_, grad) = l2_term(m.params(), 0.1);
    let h = 1e-6;
    for (key, t) in m.params().iter() {
        for i in [0, t.len() / 2, t.len() - 1] {
            let mut p = m.params().clone();
            p.get_mut(key).unwrap().data_mut()[i] += h;
            let up = l2_term(&p, 0.1).0;
            p.get_mut(key).unwrap().data_mut()[i] -= 2.0 * h;
            let down = l2_term(&p, 0.1).0;
            let numeric = (up - down) / (2.0 * h);
            assert!((numeric - grad.get(key).unwrap().data()[i]).abs() < 1e-8, "{key}[{i}]");
        }
    }
}

#[test]
fn non_finite_loss_names_the_iteration() {
    let mut m = model(6);
    let key = m.params().keys().find(|k| k.ends_with(".weight")).unwrap().clone();
    m.params_mut().get_mut(&key).unwrap().data_mut()[0] = 1e300;
    let err = train(m, &data(4, 6), &plan(4), &quick()).unwrap_err();
    assert_eq!(err, Error::NonFiniteLoss { iteration: 1 });
}

#[test]
fn empty_training_split_rejected() {
    let p = SplitPlan { train: vec![], validation: vec![0], test: vec![] };
    assert!(train(model(7), &data(3, 7), &p, &quick()).is_err());
}

#[test]
fn cross_validation_covers_every_sample_once() {
    let d = data(15, 8);
    let labels: Vec<usize> = d.samples.iter().map(|s| s.1).collect();
    let ids: Vec<usize> = (0..15).collect();
    let plan = make_kfold(&ids, &labels, 5, 1).unwrap();
    let cfg = TrainConfig { epochs: 1, ..quick() };
    let folds = run_cross_validation(&|seed| {
        let mut m = build(&ArchConfig::toy(Architecture::AlexNet3d).with_input(SHAPE))?;
        m.initialize(seed);
        Ok(m)
    }, &d, &plan, &cfg)
    .unwrap();
    assert_eq!(folds.len(), 5);
    let mut seen: Vec<usize> = folds.iter().flat_map(|f| f.predictions.ids.clone()).collect();
    seen.sort_unstable();
    assert_eq!(seen, ids);
    assert_eq!(folds.iter().map(|f| f.seed).collect::<Vec<_>>(), [9, 10, 11, 12, 13]);
}

#[test]
fn evaluation_reports_probabilities() {
    let m = model(9);
    let d = data(6, 9);
    let p = evaluate(&m, &d, &[0, 2, 4]).unwrap();
    assert_eq!(p.labels, [0, 2, 1]);
    for probs in &p.probs {
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    assert!(p.mean_loss > 0.0);
}
