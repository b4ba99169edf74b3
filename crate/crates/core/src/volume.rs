use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Diagnosis;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Channel order of network inputs.
pub const CHANNEL_NAMES: [&str; 3] = ["GM", "WM", "CSF"];
pub const INPUT_CHANNELS: usize = 3;

/// A labelled volume in 32-bit storage, channel-major then row-major
/// (`c, z, y, x`).
///
/// Network inputs carry exactly three channels (GM, WM, CSF); saliency maps
/// and region masks use the same container with one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeRecord {
    pub id: String,
    pub channels: usize,
    pub extents: [usize; 3],
    pub data: Vec<f32>,
    pub label: Option<Diagnosis>,
}

impl VolumeRecord {
    pub fn new(
        id: impl Into<String>,
        channels: usize,
        extents: [usize; 3],
        data: Vec<f32>,
        label: Option<Diagnosis>,
    ) -> Result<Self> {
        let record = VolumeRecord {
            id: id.into(),
            channels,
            extents,
            data,
            label,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn voxels(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.voxels();
        &self.data[c * n..(c + 1) * n]
    }

    /// Length and finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.extents.contains(&0) {
            return Err(Error::invalid(
                "volume",
                format!("`{}`: channels and extents must be positive", self.id),
            ));
        }
        if self.data.len() != self.channels * self.voxels() {
            return Err(Error::invalid(
                "volume",
                format!(
                    "`{}`: {} values for {} channels of {:?}",
                    self.id,
                    self.data.len(),
                    self.channels,
                    self.extents
                ),
            ));
        }
        if !self.data.iter().all(|v| v.is_finite()) {
            return Err(Error::non_finite(format!("volume `{}`", self.id)));
        }
        Ok(())
    }

    /// Additional rules for network inputs: three channels, values in `[0, 1]`.
    pub fn validate_input(&self) -> Result<()> {
        self.validate()?;
        if self.channels != INPUT_CHANNELS {
            return Err(Error::invalid(
                "volume",
                format!("`{}` has {} channels, inputs need {INPUT_CHANNELS}", self.id, self.channels),
            ));
        }
        if let Some(v) = self.data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(
                "volume",
                format!("`{}` has value {v} outside [0, 1]", self.id),
            ));
        }
        Ok(())
    }
}

/// The `3×D×H×W` network input for `record`, widened to 64-bit.
pub fn stack_input(record: &VolumeRecord) -> Result<Tensor> {
    if record.channels != INPUT_CHANNELS {
        return Err(Error::invalid(
            "volume",
            format!("`{}` has {} channels, inputs need {INPUT_CHANNELS}", record.id, record.channels),
        ));
    }
    record.validate()?;
    let [d, h, w] = record.extents;
    Tensor::new(
        vec![INPUT_CHANNELS, d, h, w],
        record.data.iter().map(|&v| v as f64).collect(),
    )
}

/// Inverse of [`stack_input`], narrowing to 32-bit storage.
pub fn unstack(tensor: &Tensor, id: impl Into<String>, label: Option<Diagnosis>) -> Result<VolumeRecord> {
    let (c, extents) = match *tensor.shape() {
        [c, d, h, w] => (c, [d, h, w]),
        _ => return Err(Error::shape("unstack", format!("expected C×D×H×W, got {:?}", tensor.shape()))),
    };
    VolumeRecord::new(id, c, extents, tensor.data().iter().map(|&v| v as f32).collect(), label)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(data: Vec<f32>) -> VolumeRecord {
        VolumeRecord::new("r", 3, [2, 3, 4], data, Some(Diagnosis::MCI)).unwrap()
    }

    #[test]
    fn first_channel_lands_in_slice_zero() {
        let mut data = vec![0.25f32; 72];
        data[..24].fill(1.0);
        let t = stack_input(&record(data)).unwrap();
        assert_eq!(t.shape(), &[3, 2, 3, 4]);
        assert!(t.data()[..24].iter().all(|&v| v == 1.0));
        assert!(t.data()[24..].iter().all(|&v| v == 0.25));
    }

    #[test]
    fn stack_unstack_round_trip() {
        let data: Vec<f32> = (0..72).map(|i| i as f32 / 71.0).collect();
        let r = record(data);
        let back = unstack(&stack_input(&r).unwrap(), "r", Some(Diagnosis::MCI)).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn index_arithmetic() {
        let data: Vec<f32> = (0..72).map(|i| (i as f32 * 0.37).fract()).collect();
        let r = record(data.clone());
        let t = stack_input(&r).unwrap();
        for c in 0..3 {
            for z in 0..2 {
                for y in 0..3 {
                    for x in 0..4 {
                        let flat = ((c * 2 + z) * 3 + y) * 4 + x;
                        assert_eq!(t.data()[t.offset(&[c, z, y, x])], data[flat] as f64);
                    }
                }
            }
        }
    }

    #[test]
    fn wrong_channel_count_rejected() {
        let r = VolumeRecord::new("m", 1, [2, 2, 2], vec![0.0; 8], None).unwrap();
        assert!(stack_input(&r).is_err());
        assert!(r.validate_input().is_err());
    }

    #[test]
    fn out_of_range_input_rejected() {
        let mut data = vec![0.5f32; 72];
        data[5] = 1.5;
        let r = VolumeRecord::new("r", 3, [2, 3, 4], data, None).unwrap();
        assert!(r.validate_input().is_err());
    }
}
