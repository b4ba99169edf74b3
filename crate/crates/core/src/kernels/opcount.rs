use super::ConvSpec;
use crate::error::Result;

/// Counting convention for [`op_count`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMode {
    /// One multiplication per kernel tap and one addition per output voxel,
    /// per input/output channel pair.
    Nominal,
    /// Every accumulation addition plus the bias addition.
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpCount {
    pub multiplications: u64,
    pub additions: u64,
    pub mode: CountMode,
}

/// Arithmetic cost of one convolution over a `D×H×W` input.
pub fn op_count(spec: &ConvSpec, input_spatial: [usize; 3], mode: CountMode) -> Result<OpCount> {
    let out = spec.output_spatial(input_spatial)?;
    let out_voxels = out.iter().map(|&e| e as u64).product::<u64>();
    let kvol = spec.kernel_volume() as u64;
    let (cin, cout) = (spec.in_channels as u64, spec.out_channels as u64);
    let multiplications = out_voxels * kvol * cin * cout;
    let additions = match mode {
        CountMode::Nominal => out_voxels * cout,
        CountMode::Standard => out_voxels * cout * (cin * kvol - 1) + out_voxels * cout,
    };
    Ok(OpCount {
        multiplications,
        additions,
        mode,
    })
}
