//! Forward and backward numeric kernels for every layer type.
//!
//! Kernels are pure functions over borrowed tensors. Volumes are
//! channels-first (`C×D×H×W`), and a single sample is processed at a time.

mod activation;
mod concat;
mod conv;
mod dense;
mod opcount;
mod pool;

pub use activation::{
    dropout, dropout_backward, relu, relu_backward, softmax, softmax_xent, DropoutMask, Mode,
    SoftmaxXent,
};
pub use concat::{concat_channels, split_channels};
pub use conv::{conv3d, conv3d_backward, ConvGrads, ConvSpec};
pub(crate) use conv::conv3d_backward_select;
pub use dense::{dense, dense_backward, DenseGrads};
pub(crate) use activation::check_rate;
pub use opcount::{op_count, CountMode, OpCount};
pub use pool::{maxpool3d, maxpool3d_backward, PoolSpec, Pooled};

use alloc::format;

use crate::error::{Error, Result};

/// Output extent along one axis: `floor((in + 2p − k)/s) + 1`, or `None`
/// when the padded input is smaller than the window.
pub fn output_extent(input: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = input + 2 * padding;
    if kernel == 0 || stride == 0 || padded < kernel {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

/// Spatial output extents for a 3-axis window operator.
pub(crate) fn window_output(
    context: &str,
    spatial: [usize; 3],
    kernel: [usize; 3],
    stride: [usize; 3],
    padding: [usize; 3],
) -> Result<[usize; 3]> {
    let mut out = [0; 3];
    for axis in 0..3 {
        out[axis] = output_extent(spatial[axis], kernel[axis], stride[axis], padding[axis])
            .ok_or_else(|| {
                Error::shape(
                    context,
                    format!(
                        "spatial axis {axis}: window {} (padding {}) exceeds extent {}",
                        kernel[axis], padding[axis], spatial[axis]
                    ),
                )
            })?;
    }
    Ok(out)
}

pub(crate) fn volume_dims(context: &str, shape: &[usize]) -> Result<[usize; 4]> {
    match *shape {
        [c, d, h, w] => Ok([c, d, h, w]),
        _ => Err(Error::shape(
            context,
            format!("expected a C×D×H×W volume, got shape {shape:?}"),
        )),
    }
}
