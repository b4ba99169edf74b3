//! Straightforward reference implementations and numeric helpers.
#![allow(dead_code)]

use voxnet_core::kernels::{ConvSpec, PoolSpec};
use voxnet_core::Tensor;

fn out_extent(n: usize, k: usize, s: usize, p: usize) -> usize {
    (n + 2 * p - k) / s + 1
}

/// Direct eight-loop convolution with explicit bounds checks.
pub fn naive_conv3d(input: &Tensor, weights: &Tensor, bias: &Tensor, spec: &ConvSpec) -> Tensor {
    let s = input.shape();
    let (c, d, h, w) = (s[0], s[1], s[2], s[3]);
    let od = out_extent(d, spec.kernel[0], spec.stride[0], spec.padding[0]);
    let oh = out_extent(h, spec.kernel[1], spec.stride[1], spec.padding[1]);
    let ow = out_extent(w, spec.kernel[2], spec.stride[2], spec.padding[2]);
    let mut out = Tensor::zeros(&[spec.out_channels, od, oh, ow]);
    for o in 0..spec.out_channels {
        for z in 0..od {
            for y in 0..oh {
                for x in 0..ow {
                    let mut acc = bias.data()[o];
                    for i in 0..c {
                        for kz in 0..spec.kernel[0] {
                            for ky in 0..spec.kernel[1] {
                                for kx in 0..spec.kernel[2] {
                                    let iz = (z * spec.stride[0] + kz) as isize - spec.padding[0] as isize;
                                    let iy = (y * spec.stride[1] + ky) as isize - spec.padding[1] as isize;
                                    let ix = (x * spec.stride[2] + kx) as isize - spec.padding[2] as isize;
                                    if iz < 0 || iy < 0 || ix < 0 {
                                        continue;
                                    }
                                    let (iz, iy, ix) = (iz as usize, iy as usize, ix as usize);
                                    if iz >= d || iy >= h || ix >= w {
                                        continue;
                                    }
                                    acc += weights[weights.offset(&[o, i, kz, ky, kx])] * input[input.offset(&[i, iz, iy, ix])];
                                }
                            }
                        }
                    }
                    let at = out.offset(&[o, z, y, x]);
                    out[at] = acc;
                }
            }
        }
    }
    out
}

/// Direct max pooling; padded positions never win, first maximum kept.
pub fn naive_maxpool3d(input: &Tensor, spec: &PoolSpec) -> (Tensor, Vec<usize>) {
    let s = input.shape();
    let (c, d, h, w) = (s[0], s[1], s[2], s[3]);
    let od = out_extent(d, spec.kernel[0], spec.stride[0], spec.padding[0]);
    let oh = out_extent(h, spec.kernel[1], spec.stride[1], spec.padding[1]);
    let ow = out_extent(w, spec.kernel[2], spec.stride[2], spec.padding[2]);
    let mut out = Tensor::zeros(&[c, od, oh, ow]);
    let mut arg = Vec::new();
    for ch in 0..c {
        for z in 0..od {
            for y in 0..oh {
                for x in 0..ow {
                    let mut best: Option<(f64, usize)> = None;
                    for kz in 0..spec.kernel[0] {
                        for ky in 0..spec.kernel[1] {
                            for kx in 0..spec.kernel[2] {
                                let iz = (z * spec.stride[0] + kz) as isize - spec.padding[0] as isize;
                                let iy = (y * spec.stride[1] + ky) as isize - spec.padding[1] as isize;
                                let ix = (x * spec.stride[2] + kx) as isize - spec.padding[2] as isize;
                                if iz < 0 || iy < 0 || ix < 0 || iz as usize >= d || iy as usize >= h || ix as usize >= w {
                                    continue;
                                }
                                let flat = ((ch * d + iz as usize) * h + iy as usize) * w + ix as usize;
                                let v = input.data()[flat];
                                if best.map_or(true, |(b, _)| v > b) {
                                    best = Some((v, flat));
                                }
                            }
                        }
                    }
                    let (v, i) = best.expect("window overlaps the input");
                    let at = out.offset(&[ch, z, y, x]);
                    out[at] = v;
                    arg.push(i);
                }
            }
        }
    }
    (out, arg)
}

/// Central differences of `f` at `x`, one coordinate at a time.
pub fn central_diff(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Fixed linear functional used to turn tensor outputs into scalar losses.
pub fn probe_weights(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i * 7919 % 101) as f64 / 50.0) - 1.0).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
