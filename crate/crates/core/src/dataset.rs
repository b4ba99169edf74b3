use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::volume::{stack_input, VolumeRecord};

/// Diagnostic class. The discriminant is the class id used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Diagnosis {
    AD = 0,
    MCI = 1,
    CN = 2,
}

impl Diagnosis {
    pub const ALL: [Diagnosis; 3] = [Diagnosis::AD, Diagnosis::MCI, Diagnosis::CN];
    pub const COUNT: usize = 3;

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Self> {
        Self::ALL.get(id).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Diagnosis::AD => "AD",
            Diagnosis::MCI => "MCI",
            Diagnosis::CN => "CN",
        }
    }
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Diagnosis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid("label", format!("unknown class `{s}`")))
    }
}

/// Indexed access to labelled network inputs.
pub trait SampleSource {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn label(&self, index: usize) -> usize;

    /// The `C×D×H×W` input of sample `index`, in 64-bit.
    fn input(&self, index: usize) -> Result<Tensor>;
}

/// Labelled 3-channel volumes held in memory in 32-bit storage.
#[derive(Debug, Clone, Default)]
pub struct VolumeDataset {
    records: Vec<VolumeRecord>,
}

impl VolumeDataset {
    /// Every record must be a valid labelled input and share extents.
    pub fn new(records: Vec<VolumeRecord>) -> Result<Self> {
        for r in &records {
            r.validate_input()?;
            if r.label.is_none() {
                return Err(Error::invalid("dataset", format!("record `{}` has no label", r.id)));
            }
        }
        if let Some(first) = records.first() {
            if let Some(r) = records.iter().find(|r| r.extents != first.extents) {
                return Err(Error::invalid(
                    "dataset",
                    format!("record `{}` has extents {:?}, expected {:?}", r.id, r.extents, first.extents),
                ));
            }
        }
        Ok(VolumeDataset { records })
    }

    pub fn records(&self) -> &[VolumeRecord] {
        &self.records
    }

    pub fn labels(&self) -> Vec<usize> {
        (0..self.records.len()).map(|i| self.label(i)).collect()
    }

    /// Input shape `[3, D, H, W]`, if non-empty.
    pub fn input_shape(&self) -> Option<[usize; 4]> {
        self.records.first().map(|r| {
            let [d, h, w] = r.extents;
            [r.channels, d, h, w]
        })
    }
}

impl SampleSource for VolumeDataset {
    fn len(&self) -> usize {
        self.records.len()
    }

    fn label(&self, index: usize) -> usize {
        self.records[index].label.map(Diagnosis::id).unwrap_or(usize::MAX)
    }

    fn input(&self, index: usize) -> Result<Tensor> {
        stack_input(&self.records[index])
    }
}

/// In-memory 64-bit samples, mostly for tests and small experiments.
#[derive(Debug, Clone, Default)]
pub struct TensorDataset {
    pub samples: Vec<(Tensor, usize)>,
}

impl SampleSource for TensorDataset {
    fn len(&self) -> usize {
        self.samples.len()
    }

    fn label(&self, index: usize) -> usize {
        self.samples[index].1
    }

    fn input(&self, index: usize) -> Result<Tensor> {
        Ok(self.samples[index].0.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagnosis_round_trip() {
        for d in Diagnosis::ALL {
            assert_eq!(d.name().parse::<Diagnosis>().unwrap(), d);
            assert_eq!(Diagnosis::from_id(d.id()), Some(d));
        }
        assert_eq!("mci".parse::<Diagnosis>().unwrap(), Diagnosis::MCI);
        assert!("XX".parse::<Diagnosis>().is_err());
        assert_eq!(Diagnosis::from_id(3), None);
    }
}
