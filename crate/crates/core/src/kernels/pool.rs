use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{volume_dims, window_output};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Max-pooling window. Padded positions never win the max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolSpec {
    pub kernel: [usize; 3],
    pub stride: [usize; 3],
    pub padding: [usize; 3],
}

impl PoolSpec {
    pub fn cube(k: usize, s: usize, p: usize) -> Self {
        PoolSpec {
            kernel: [k; 3],
            stride: [s; 3],
            padding: [p; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel.contains(&0) || self.stride.contains(&0) {
            return Err(Error::invalid(
                "pool spec",
                format!("kernel {:?} and stride {:?} must be positive", self.kernel, self.stride),
            ));
        }
        if (0..3).any(|a| self.padding[a] >= self.kernel[a]) {
            return Err(Error::invalid(
                "pool spec",
                format!("padding {:?} must be smaller than kernel {:?}", self.padding, self.kernel),
            ));
        }
        Ok(())
    }

    pub fn output_spatial(&self, spatial: [usize; 3]) -> Result<[usize; 3]> {
        self.validate()?;
        window_output("maxpool3d", spatial, self.kernel, self.stride, self.padding)
    }
}

#[derive(Debug, Clone)]
pub struct Pooled {
    pub output: Tensor,
    /// Flat input index of the element selected for each output element.
    pub argmax: Vec<usize>,
}

/// Valid input range `[lo, hi)` of the window starting at padded position `start`.
fn window(o: usize, stride: usize, pad: usize, kernel: usize, extent: usize) -> (usize, usize) {
    let start = (o * stride) as isize - pad as isize;
    let lo = start.max(0) as usize;
    let hi = ((start + kernel as isize).max(0) as usize).min(extent);
    (lo, hi)
}

/// Windowed maximum per channel. Ties go to the first element in row-major
/// window order.
pub fn maxpool3d(input: &Tensor, spec: &PoolSpec) -> Result<Pooled> {
    let [c, d, h, w] = volume_dims("maxpool3d input", input.shape())?;
    let [od, oh, ow] = spec.output_spatial([d, h, w])?;
    input.ensure_finite("maxpool3d input")?;

    let data = input.data();
    let n_out = c * od * oh * ow;
    let mut output = Vec::with_capacity(n_out);
    let mut argmax = Vec::with_capacity(n_out);
    for ch in 0..c {
        let plane = ch * d * h * w;
        for z in 0..od {
            let (z0, z1) = window(z, spec.stride[0], spec.padding[0], spec.kernel[0], d);
            for y in 0..oh {
                let (y0, y1) = window(y, spec.stride[1], spec.padding[1], spec.kernel[1], h);
                for x in 0..ow {
                    let (x0, x1) = window(x, spec.stride[2], spec.padding[2], spec.kernel[2], w);
                    let mut best = usize::MAX;
                    let mut best_val = f64::NEG_INFINITY;
                    for iz in z0..z1 {
                        for iy in y0..y1 {
                            let row = plane + (iz * h + iy) * w;
                            for ix in x0..x1 {
                                let v = data[row + ix];
                                if best == usize::MAX || v > best_val {
                                    best = row + ix;
                                    best_val = v;
                                }
                            }
                        }
                    }
                    debug_assert!(best != usize::MAX);
                    output.push(best_val);
                    argmax.push(best);
                }
            }
        }
    }
    Ok(Pooled {
        output: Tensor::new(vec![c, od, oh, ow], output)?,
        argmax,
    })
}

/// Routes each upstream gradient element to its recorded argmax position.
pub fn maxpool3d_backward(input_shape: &[usize], argmax: &[usize], grad_out: &Tensor) -> Result<Tensor> {
    if argmax.len() != grad_out.len() {
        return Err(Error::shape(
            "maxpool3d backward",
            format!("{} argmax entries for {} gradients", argmax.len(), grad_out.len()),
        ));
    }
    let mut grad_in = Tensor::zeros(input_shape);
    for (&at, &g) in argmax.iter().zip(grad_out.data()) {
        if at >= grad_in.len() {
            return Err(Error::shape(
                "maxpool3d backward",
                format!("argmax {at} outside input of {} elements", grad_in.len()),
            ));
        }
        grad_in[at] += g;
    }
    Ok(grad_in)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input_pools_to_constant() {
        let input = Tensor::full(&[2, 5, 6, 7], 7.0);
        for spec in [PoolSpec::cube(3, 2, 0), PoolSpec::cube(3, 1, 1), PoolSpec::cube(2, 2, 1)] {
            let pooled = maxpool3d(&input, &spec).unwrap();
            assert!(pooled.output.data().iter().all(|&v| v == 7.0));
        }
    }

    #[test]
    fn canonical_extent() {
        let spec = PoolSpec::cube(3, 2, 0);
        assert_eq!(spec.output_spatial([157, 189, 156]).unwrap(), [78, 94, 77]);
    }

    #[test]
    fn padding_never_wins() {
        let input = Tensor::full(&[1, 2, 2, 2], -5.0);
        let pooled = maxpool3d(&input, &PoolSpec::cube(3, 1, 1)).unwrap();
        assert!(pooled.output.data().iter().all(|&v| v == -5.0));
    }

    #[test]
    fn ties_pick_first_in_window() {
        let input = Tensor::full(&[1, 2, 2, 2], 1.0);
        let pooled = maxpool3d(&input, &PoolSpec::cube(2, 2, 0)).unwrap();
        assert_eq!(pooled.argmax, vec![0]);
    }

    #[test]
    fn increasing_input_routes_to_last_corner() {
        let input = Tensor::from_fn(&[1, 5, 5, 5], |i| i as f64);
        let pooled = maxpool3d(&input, &PoolSpec::cube(3, 2, 0)).unwrap();
        assert_eq!(pooled.output.shape(), &[1, 2, 2, 2]);
        let grad = Tensor::full(pooled.output.shape(), 1.0);
        let gin = maxpool3d_backward(input.shape(), &pooled.argmax, &grad).unwrap();
        for z in 0..2 {
            for y in 0..2 {
                for x in 0..2 {
                    let corner = input.offset(&[0, 2 * z + 2, 2 * y + 2, 2 * x + 2]);
                    assert_eq!(gin[corner], 1.0);
                }
            }
        }
        assert_eq!(gin.sum(), 8.0);
    }

    #[test]
    fn oversized_window_rejected() {
        let input = Tensor::zeros(&[1, 2, 8, 8]);
        assert!(maxpool3d(&input, &PoolSpec::cube(3, 2, 0)).is_err());
        assert!(PoolSpec::cube(3, 1, 3).validate().is_err());
    }
}
