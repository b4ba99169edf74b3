//! Generator-level properties of the phantom dataset.

use voxnet_core::phantom::{phantom_volume, region_mask, PhantomParams};
use voxnet_core::volume::{stack_input, unstack};
use voxnet_core::Diagnosis;

fn params(samples: usize) -> PhantomParams {
    PhantomParams { samples_per_class: samples, ..PhantomParams::default() }
}

#[test]
fn mean_gm_mass_orders_cn_mci_ad() {
    let p = params(50);
    let mean_gm = |class| {
        (0..50)
            .map(|i| phantom_volume(&p, class, i).unwrap().channel(0).iter().map(|&v| v as f64).sum::<f64>())
            .sum::<f64>()
            / 50.0
    };
    let (ad, mci, cn) = (mean_gm(Diagnosis::AD), mean_gm(Diagnosis::MCI), mean_gm(Diagnosis::CN));
    assert!(cn > mci && mci > ad, "{ad} {mci} {cn}");
}

#[test]
fn signal_stays_inside_the_mask() {
    let p = PhantomParams { noise: 0.0, ..params(6) };
    let mask = region_mask(&p, Diagnosis::CN).unwrap();
    let a = phantom_volume(&p, Diagnosis::AD, 0).unwrap();
    let c = phantom_volume(&p, Diagnosis::CN, 0).unwrap();
    for (i, (x, y)) in a.data.iter().zip(&c.data).enumerate() {
        if x != y {
            assert!(mask[i % mask.len()], "voxel {i} differs outside the region");
        }
    }
}

#[test]
fn stacking_is_index_preserving() {
    let r = phantom_volume(&params(1), Diagnosis::MCI, 0).unwrap();
    let t = stack_input(&r).unwrap();
    let [d, h, w] = r.extents;
    assert_eq!(t.shape(), [3, d, h, w]);
    for (c, z, y, x) in [(0, 0, 0, 0), (1, 5, 7, 9), (2, d - 1, h - 1, w - 1), (2, 3, 20, 4)] {
        assert_eq!(t.data()[t.offset(&[c, z, y, x])], r.data[((c * d + z) * h + y) * w + x] as f64);
    }
    assert_eq!(unstack(&t, r.id.clone(), r.label).unwrap(), r);
}

#[test]
fn without_randomness_classes_are_templates() {
    let p = PhantomParams { noise: 0.0, radius_jitter: 0.0, position_jitter: 0.0, ..params(3) };
    let mut templates = Vec::new();
    for class in Diagnosis::ALL {
        let first = phantom_volume(&p, class, 0).unwrap();
        for i in 1..3 {
            assert_eq!(phantom_volume(&p, class, i).unwrap().data, first.data);
        }
        templates.push(first.data);
    }
    assert_ne!(templates[0], templates[1]);
    assert_ne!(templates[1], templates[2]);
    assert_ne!(templates[0], templates[2]);
}

#[test]
fn unit_channel_stacks_to_unit_slice() {
    let mut r = phantom_volume(&params(1), Diagnosis::CN, 0).unwrap();
    let n = r.voxels();
    r.data[..n].iter_mut().for_each(|v| *v = 1.0);
    let t = stack_input(&r).unwrap();
    assert!(t.data()[..n].iter().all(|&v| v == 1.0));
}
