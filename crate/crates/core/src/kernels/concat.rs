use alloc::format;
use alloc::vec::Vec;

use super::volume_dims;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Concatenates volumes along the channel axis, in argument order.
pub fn concat_channels(inputs: &[Tensor]) -> Result<Tensor> {
    let first = inputs
        .first()
        .ok_or_else(|| Error::invalid("concat", "no inputs"))?;
    let [_, d, h, w] = volume_dims("concat input 0", first.shape())?;
    let mut channels = 0;
    for (i, t) in inputs.iter().enumerate() {
        let [c, td, th, tw] = volume_dims("concat input", t.shape())?;
        if [td, th, tw] != [d, h, w] {
            return Err(Error::shape(
                "concat",
                format!("input {i} spatial extents {:?} differ from {:?}", [td, th, tw], [d, h, w]),
            ));
        }
        channels += c;
    }
    let mut data = Vec::with_capacity(channels * d * h * w);
    for t in inputs {
        data.extend_from_slice(t.data());
    }
    Tensor::new(alloc::vec![channels, d, h, w], data)
}

/// Inverse of [`concat_channels`]: splits a gradient into per-input pieces.
pub fn split_channels(grad: &Tensor, channels: &[usize]) -> Result<Vec<Tensor>> {
    let [c, d, h, w] = volume_dims("split", grad.shape())?;
    if channels.iter().sum::<usize>() != c {
        return Err(Error::shape(
            "split",
            format!("channel sizes {channels:?} do not sum to {c}"),
        ));
    }
    let plane = d * h * w;
    let mut start = 0;
    channels
        .iter()
        .map(|&n| {
            let piece = grad.data()[start * plane..(start + n) * plane].to_vec();
            start += n;
            Tensor::new(alloc::vec![n, d, h, w], piece)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_input_is_identity() {
        let t = Tensor::from_fn(&[2, 2, 3, 1], |i| i as f64);
        assert_eq!(concat_channels(&[t.clone()]).unwrap(), t);
    }

    #[test]
    fn two_single_channel_inputs() {
        let a = Tensor::full(&[1, 2, 2, 2], 1.0);
        let b = Tensor::full(&[1, 2, 2, 2], 2.0);
        let out = concat_channels(&[a, b]).unwrap();
        assert_eq!(out.shape(), &[2, 2, 2, 2]);
        assert!(out.data()[..8].iter().all(|&v| v == 1.0));
        assert!(out.data()[8..].iter().all(|&v| v == 2.0));
    }

    #[test]
    fn spatial_mismatch_rejected() {
        let a = Tensor::zeros(&[1, 2, 2, 2]);
        let b = Tensor::zeros(&[1, 2, 3, 2]);
        assert!(concat_channels(&[a, b]).is_err());
    }

    #[test]
    fn split_inverts_concat() {
        let parts = [
            Tensor::from_fn(&[4, 2, 2, 2], |i| i as f64),
            Tensor::from_fn(&[8, 2, 2, 2], |i| -(i as f64)),
            Tensor::from_fn(&[4, 2, 2, 2], |i| i as f64 * 0.5),
        ];
        let joined = concat_channels(&parts).unwrap();
        assert_eq!(split_channels(&joined, &[4, 8, 4]).unwrap(), parts.to_vec());
    }
}
