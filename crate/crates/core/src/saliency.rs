//! Gradient saliency: how strongly each voxel moves a class score.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::SampleSource;
use crate::error::{Error, Result};
use crate::model::{Model, RunMode};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyVolume {
    pub class: usize,
    pub extents: [usize; 3],
    /// Non-negative values scaled so the largest is 1 (or all zero).
    pub data: Vec<f64>,
    /// Largest value before scaling.
    pub scale: f64,
}

impl SaliencyVolume {
    fn normalized(class: usize, extents: [usize; 3], mut data: Vec<f64>) -> Self {
        let scale = data.iter().copied().fold(0.0, f64::max);
        if scale > 0.0 {
            data.iter_mut().for_each(|v| *v /= scale);
        }
        SaliencyVolume { class, extents, data, scale }
    }
}

fn check_class(model: &Model, class: usize) -> Result<()> {
    if class >= model.class_count() {
        return Err(Error::invalid("saliency class", format!("{class} out of range")));
    }
    Ok(())
}

/// Gradient of `class`'s pre-softmax score with respect to the input.
pub fn logit_gradient(model: &Model, input: &Tensor, class: usize) -> Result<Tensor> {
    check_class(model, class)?;
    let pass = model.forward(input, RunMode::Eval)?;
    let mut seed = vec![0.0; model.class_count()];
    seed[class] = 1.0;
    let mut scratch = model.params().zeros_like();
    model
        .backward_into(&pass.cache, &Tensor::vector(seed), &mut scratch, true)?
        .ok_or_else(|| Error::invalid("saliency", "no input gradient"))
}

/// Per voxel, the largest absolute logit gradient over channels, normalized.
pub fn saliency_map(model: &Model, input: &Tensor, class: usize) -> Result<SaliencyVolume> {
    let g = logit_gradient(model, input, class)?;
    let shape = g.shape();
    let extents = [shape[1], shape[2], shape[3]];
    let voxels = extents.iter().product::<usize>();
    let mut data = vec![0.0; voxels];
    for channel in g.data().chunks_exact(voxels) {
        for (d, v) in data.iter_mut().zip(channel) {
            *d = f64::max(*d, v.abs());
        }
    }
    Ok(SaliencyVolume::normalized(class, extents, data))
}

/// Voxelwise mean of the per-sample maps of every sample labelled `class`,
/// renormalized.
pub fn class_mean_saliency<S: SampleSource + ?Sized>(
    model: &Model,
    data: &S,
    class: usize,
) -> Result<SaliencyVolume> {
    check_class(model, class)?;
    let mut sum: Option<(Vec<f64>, [usize; 3])> = None;
    let mut count = 0usize;
    for i in (0..data.len()).filter(|&i| data.label(i) == class) {
        let map = saliency_map(model, &data.input(i)?, class)?;
        match &mut sum {
            Some((acc, _)) => acc.iter_mut().zip(&map.data).for_each(|(a, v)| *a += v),
            None => sum = Some((map.data, map.extents)),
        }
        count += 1;
    }
    let (mut acc, extents) =
        sum.ok_or_else(|| Error::invalid("class mean saliency", format!("no samples of class {class}")))?;
    acc.iter_mut().for_each(|v| *v /= count as f64);
    Ok(SaliencyVolume::normalized(class, extents, acc))
}

/// Saliency mass share inside `mask` divided by the mask's voxel share.
pub fn region_enrichment(saliency: &[f64], mask: &[bool]) -> Result<f64> {
    if saliency.len() != mask.len() {
        return Err(Error::invalid(
            "region enrichment",
            format!("{} saliency voxels for {} mask voxels", saliency.len(), mask.len()),
        ));
    }
    let inside_voxels = mask.iter().filter(|&&m| m).count();
    if inside_voxels == 0 {
        return Err(Error::invalid("region enrichment", "empty mask"));
    }
    let peak = saliency.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) || !peak.is_finite() || saliency.iter().any(|v| *v < 0.0) {
        return Err(Error::invalid("region enrichment", "saliency must be non-negative with positive mass"));
    }
    // Scaling to a unit peak keeps a uniform map exactly neutral.
    let (mut inside, mut total) = (0.0, 0.0);
    for (v, &m) in saliency.iter().zip(mask) {
        let v = v / peak;
        total += v;
        if m {
            inside += v;
        }
    }
    Ok((inside * mask.len() as f64) / (total * inside_voxels as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_map_is_neutral() {
        let mask: Vec<bool> = (0..50).map(|i| i % 7 == 0).collect();
        assert_eq!(region_enrichment(&[0.3; 50], &mask).unwrap(), 1.0);
    }

    #[test]
    fn concentrated_mass() {
        let mut s = vec![0.0; 100];
        let mut mask = vec![false; 100];
        mask[10] = true;
        mask[11] = true;
        s[10] = 1.0;
        s[11] = 0.5;
        assert!((region_enrichment(&s, &mask).unwrap() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(region_enrichment(&[1.0; 4], &[false; 4]).is_err());
        assert!(region_enrichment(&[0.0; 4], &[true; 4]).is_err());
        assert!(region_enrichment(&[1.0; 4], &[true; 3]).is_err());
    }

    #[test]
    fn zero_map_stays_zero() {
        let v = SaliencyVolume::normalized(0, [1, 1, 2], vec![0.0, 0.0]);
        assert_eq!(v.data, [0.0, 0.0]);
        assert_eq!(v.scale, 0.0);
    }
}
