use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{volume_dims, window_output};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Geometry of a 3D convolution with symmetric zero padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: [usize; 3],
    pub stride: [usize; 3],
    pub padding: [usize; 3],
}

impl ConvSpec {
    /// Stride-1 convolution with cubic kernel `k` and padding `p`.
    pub fn cube(in_channels: usize, out_channels: usize, k: usize, p: usize) -> Self {
        ConvSpec {
            in_channels,
            out_channels,
            kernel: [k; 3],
            stride: [1; 3],
            padding: [p; 3],
        }
    }

    pub fn with_stride(mut self, s: usize) -> Self {
        self.stride = [s; 3];
        self
    }

    pub fn kernel_volume(&self) -> usize {
        self.kernel.iter().product()
    }

    pub fn weight_shape(&self) -> [usize; 5] {
        let [kd, kh, kw] = self.kernel;
        [self.out_channels, self.in_channels, kd, kh, kw]
    }

    pub fn parameter_count(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel_volume() + self.out_channels
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::invalid("conv spec", "channel counts must be positive"));
        }
        if self.kernel.contains(&0) || self.stride.contains(&0) {
            return Err(Error::invalid(
                "conv spec",
                format!("kernel {:?} and stride {:?} must be positive", self.kernel, self.stride),
            ));
        }
        Ok(())
    }

    /// Spatial output extents for a `D×H×W` input.
    pub fn output_spatial(&self, spatial: [usize; 3]) -> Result<[usize; 3]> {
        self.validate()?;
        window_output("conv3d", spatial, self.kernel, self.stride, self.padding)
    }
}

/// One contiguous (or strided) run of output voxels along W that a single
/// kernel tap touches, together with the input offset it reads.
#[derive(Clone, Copy)]
struct TapRow {
    tap: usize,
    input: usize,
    output: usize,
    len: usize,
}

/// Valid output index range `[lo, hi)` for kernel offset `tap` on one axis.
fn tap_range(tap: usize, pad: usize, stride: usize, input: usize, output: usize) -> (usize, usize) {
    let lo = if pad > tap {
        (pad - tap).div_ceil(stride)
    } else {
        0
    };
    let hi = if input + pad > tap {
        ((input - 1 + pad - tap) / stride + 1).min(output)
    } else {
        0
    };
    (lo, hi.max(lo))
}

struct Geometry {
    input: [usize; 3],
    output: [usize; 3],
    rows: Vec<TapRow>,
    stride_w: usize,
}

impl Geometry {
    fn new(spec: &ConvSpec, input: [usize; 3], output: [usize; 3]) -> Self {
        let [kd, kh, kw] = spec.kernel;
        let [sd, sh, sw] = spec.stride;
        let [pd, ph, pw] = spec.padding;
        let [_, ih, iw] = input;
        let [_, oh, ow] = output;
        let mut rows = Vec::new();
        for i in 0..kd {
            let (z_lo, z_hi) = tap_range(i, pd, sd, input[0], output[0]);
            for j in 0..kh {
                let (y_lo, y_hi) = tap_range(j, ph, sh, ih, oh);
                for k in 0..kw {
                    let (x_lo, x_hi) = tap_range(k, pw, sw, iw, ow);
                    if x_lo == x_hi {
                        continue;
                    }
                    let tap = (i * kh + j) * kw + k;
                    let ix0 = x_lo * sw + k - pw;
                    for z in z_lo..z_hi {
                        let iz = z * sd + i - pd;
                        for y in y_lo..y_hi {
                            let iy = y * sh + j - ph;
                            rows.push(TapRow {
                                tap,
                                input: (iz * ih + iy) * iw + ix0,
                                output: (z * oh + y) * ow + x_lo,
                                len: x_hi - x_lo,
                            });
                        }
                    }
                }
            }
        }
        Geometry {
            input,
            output,
            rows,
            stride_w: sw,
        }
    }

    fn input_plane(&self) -> usize {
        self.input.iter().product()
    }

    fn output_plane(&self) -> usize {
        self.output.iter().product()
    }
}

fn check_conv_operands(input: &Tensor, weights: &Tensor, spec: &ConvSpec) -> Result<[usize; 3]> {
    let [c, d, h, w] = volume_dims("conv3d input", input.shape())?;
    if c != spec.in_channels {
        return Err(Error::shape(
            "conv3d",
            format!("channel axis: input has {c} channels, spec expects {}", spec.in_channels),
        ));
    }
    let expected = spec.weight_shape();
    if weights.shape() != expected {
        let axis = weights
            .shape()
            .iter()
            .zip(expected.iter())
            .position(|(a, b)| a != b)
            .unwrap_or(weights.rank().min(5));
        return Err(Error::shape(
            "conv3d weights",
            format!("axis {axis}: expected shape {expected:?}, got {:?}", weights.shape()),
        ));
    }
    spec.output_spatial([d, h, w])
}

/// 3D cross-correlation with zero padding:
/// `out[o,z,y,x] = bias[o] + Σ input[c, z·sd−pd+i, y·sh−ph+j, x·sw−pw+k] · w[o,c,i,j,k]`.
pub fn conv3d(input: &Tensor, weights: &Tensor, bias: &Tensor, spec: &ConvSpec) -> Result<Tensor> {
    let out_spatial = check_conv_operands(input, weights, spec)?;
    if bias.shape() != [spec.out_channels] {
        return Err(Error::shape(
            "conv3d bias",
            format!("axis 0: expected {} entries, got shape {:?}", spec.out_channels, bias.shape()),
        ));
    }
    input.ensure_finite("conv3d input")?;
    weights.ensure_finite("conv3d weights")?;
    bias.ensure_finite("conv3d bias")?;

    let in_spatial = [input.shape()[1], input.shape()[2], input.shape()[3]];
    let geom = Geometry::new(spec, in_spatial, out_spatial);
    let (in_plane, out_plane) = (geom.input_plane(), geom.output_plane());
    let kvol = spec.kernel_volume();
    let sw = geom.stride_w;

    let mut out = vec![0.0; spec.out_channels * out_plane];
    for (o, dst_plane) in out.chunks_exact_mut(out_plane).enumerate() {
        dst_plane.fill(bias[o]);
        for c in 0..spec.in_channels {
            let src_plane = &input.data()[c * in_plane..(c + 1) * in_plane];
            let taps = &weights.data()[(o * spec.in_channels + c) * kvol..][..kvol];
            for row in &geom.rows {
                let wv = taps[row.tap];
                if wv == 0.0 {
                    continue;
                }
                let dst = &mut dst_plane[row.output..row.output + row.len];
                if sw == 1 {
                    let src = &src_plane[row.input..row.input + row.len];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += wv * s;
                    }
                } else {
                    for (n, d) in dst.iter_mut().enumerate() {
                        *d += wv * src_plane[row.input + n * sw];
                    }
                }
            }
        }
    }
    let [od, oh, ow] = out_spatial;
    Tensor::new(vec![spec.out_channels, od, oh, ow], out)
}

#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

/// Exact gradients of `conv3d` given the upstream gradient of its output.
pub fn conv3d_backward(
    input: &Tensor,
    weights: &Tensor,
    spec: &ConvSpec,
    grad_out: &Tensor,
) -> Result<ConvGrads> {
    let g = conv3d_backward_select(input, weights, spec, grad_out, true)?;
    Ok(ConvGrads {
        input: g.input.expect("input gradient requested"),
        weights: g.weights,
        bias: g.bias,
    })
}

pub(crate) struct ConvGradParts {
    pub input: Option<Tensor>,
    pub weights: Tensor,
    pub bias: Tensor,
}

/// Backward pass that skips the input gradient when `want_input` is false.
pub(crate) fn conv3d_backward_select(
    input: &Tensor,
    weights: &Tensor,
    spec: &ConvSpec,
    grad_out: &Tensor,
    want_input: bool,
) -> Result<ConvGradParts> {
    let out_spatial = check_conv_operands(input, weights, spec)?;
    let [od, oh, ow] = out_spatial;
    if grad_out.shape() != [spec.out_channels, od, oh, ow] {
        return Err(Error::shape(
            "conv3d backward",
            format!(
                "upstream gradient {:?} does not match output {:?}",
                grad_out.shape(),
                [spec.out_channels, od, oh, ow]
            ),
        ));
    }
    let in_spatial = [input.shape()[1], input.shape()[2], input.shape()[3]];
    let geom = Geometry::new(spec, in_spatial, out_spatial);
    let (in_plane, out_plane) = (geom.input_plane(), geom.output_plane());
    let kvol = spec.kernel_volume();
    let sw = geom.stride_w;

    let mut grad_in = if want_input { vec![0.0; input.len()] } else { Vec::new() };
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = vec![0.0; spec.out_channels];

    for o in 0..spec.out_channels {
        let g_plane = &grad_out.data()[o * out_plane..(o + 1) * out_plane];
        grad_b[o] = g_plane.iter().sum();
        for c in 0..spec.in_channels {
            let src_plane = &input.data()[c * in_plane..(c + 1) * in_plane];
            let gin_plane: &mut [f64] = if want_input {
                &mut grad_in[c * in_plane..(c + 1) * in_plane]
            } else {
                &mut []
            };
            let base = (o * spec.in_channels + c) * kvol;
            let taps = &weights.data()[base..base + kvol];
            let gtaps = &mut grad_w[base..base + kvol];
            for row in &geom.rows {
                let g = &g_plane[row.output..row.output + row.len];
                let wv = taps[row.tap];
                if sw == 1 {
                    let src = &src_plane[row.input..row.input + row.len];
                    gtaps[row.tap] += g.iter().zip(src).map(|(a, b)| a * b).sum::<f64>();
                    if want_input {
                        let gin = &mut gin_plane[row.input..row.input + row.len];
                        for (d, gv) in gin.iter_mut().zip(g) {
                            *d += wv * gv;
                        }
                    }
                } else {
                    let mut acc = 0.0;
                    for (n, gv) in g.iter().enumerate() {
                        let at = row.input + n * sw;
                        acc += gv * src_plane[at];
                        if want_input {
                            gin_plane[at] += wv * gv;
                        }
                    }
                    gtaps[row.tap] += acc;
                }
            }
        }
    }
    let input = if want_input {
        Some(Tensor::new(input.shape().to_vec(), grad_in)?)
    } else {
        None
    };
    Ok(ConvGradParts {
        input,
        weights: Tensor::new(weights.shape().to_vec(), grad_w)?,
        bias: Tensor::vector(grad_b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kernel_reproduces_input() {
        let input = Tensor::from_fn(&[1, 4, 4, 4], |i| i as f64 * 0.5 - 3.0);
        let w = Tensor::full(&[1, 1, 1, 1, 1], 1.0);
        let b = Tensor::zeros(&[1]);
        let out = conv3d(&input, &w, &b, &ConvSpec::cube(1, 1, 1, 0)).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn all_ones_valid_conv_sums_window() {
        let input = Tensor::full(&[1, 3, 3, 3], 1.0);
        let w = Tensor::full(&[1, 1, 3, 3, 3], 1.0);
        let out = conv3d(&input, &w, &Tensor::zeros(&[1]), &ConvSpec::cube(1, 1, 3, 0)).unwrap();
        assert_eq!(out.shape(), &[1, 1, 1, 1]);
        assert_eq!(out[0], 27.0);
    }

    #[test]
    fn padded_corner_sees_fewer_taps() {
        let input = Tensor::full(&[1, 3, 3, 3], 1.0);
        let w = Tensor::full(&[1, 1, 3, 3, 3], 1.0);
        let out = conv3d(&input, &w, &Tensor::zeros(&[1]), &ConvSpec::cube(1, 1, 3, 1)).unwrap();
        assert_eq!(out.shape(), &[1, 3, 3, 3]);
        assert_eq!(out[0], 8.0);
        assert_eq!(out[13], 27.0);
    }

    #[test]
    fn identity_kernel_backward_passes_gradient_through() {
        let input = Tensor::from_fn(&[1, 3, 3, 3], |i| i as f64);
        let w = Tensor::full(&[1, 1, 1, 1, 1], 1.0);
        let g = Tensor::from_fn(&[1, 3, 3, 3], |i| (i as f64).sin());
        let grads = conv3d_backward(&input, &w, &ConvSpec::cube(1, 1, 1, 0), &g).unwrap();
        assert_eq!(grads.input, g);
        assert_eq!(grads.bias[0], g.sum());
    }

    #[test]
    fn shape_errors_name_the_axis() {
        let input = Tensor::zeros(&[2, 4, 4, 4]);
        let w = Tensor::zeros(&[1, 2, 3, 3, 2]);
        let err = conv3d(&input, &w, &Tensor::zeros(&[1]), &ConvSpec::cube(2, 1, 3, 0)).unwrap_err();
        assert!(format!("{err}").contains("axis 4"), "{err}");

        let err = conv3d(
            &Tensor::zeros(&[3, 4, 4, 4]),
            &Tensor::zeros(&[1, 2, 3, 3, 3]),
            &Tensor::zeros(&[1]),
            &ConvSpec::cube(2, 1, 3, 0),
        )
        .unwrap_err();
        assert!(format!("{err}").contains("channel axis"), "{err}");
    }

    #[test]
    fn non_finite_input_rejected() {
        let mut input = Tensor::zeros(&[1, 2, 2, 2]);
        input[3] = f64::NAN;
        let w = Tensor::full(&[1, 1, 1, 1, 1], 1.0);
        let err = conv3d(&input, &w, &Tensor::zeros(&[1]), &ConvSpec::cube(1, 1, 1, 0)).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn tap_range_matches_scan() {
        for input in 1..9 {
            for k in 1..5 {
                for s in 1..4 {
                    for p in 0..k {
                        let Some(out) = super::super::output_extent(input, k, s, p) else {
                            continue;
                        };
                        for tap in 0..k {
                            let (lo, hi) = tap_range(tap, p, s, input, out);
                            for o in 0..out {
                                let pos = (o * s + tap) as isize - p as isize;
                                let valid = pos >= 0 && (pos as usize) < input;
                                assert_eq!(valid, o >= lo && o < hi);
                            }
                        }
                    }
                }
            }
        }
    }
}
