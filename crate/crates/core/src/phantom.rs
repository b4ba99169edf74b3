//! Synthetic three-channel head phantoms with a class-dependent region.
//!
//! Every volume has the same head-like layout: a white-matter core, a
//! gray-matter shell and a CSF rim. A gray-matter blob sits inside the core;
//! its radius shrinks from CN to MCI to AD while a CSF cavity at its centre
//! grows. Class signal therefore lives only in the GM and CSF channels and
//! only inside a known region, which is exported as a mask.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::Diagnosis;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::volume::VolumeRecord;

/// Semi-axes of the head ellipsoid as a fraction of each extent.
const HEAD_FRACTION: f64 = 0.46;
/// Normalized radii bounding the tissue layers.
const WM_OUTER: f64 = 0.55;
const GM_OUTER: f64 = 0.8;
/// Region centre as a fraction of each extent.
const REGION_CENTRE: [f64; 3] = [0.5, 0.58, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomParams {
    pub extents: [usize; 3],
    /// Mean GM region radius in voxels, indexed AD, MCI, CN.
    pub gm_radius: [f64; 3],
    /// Mean CSF cavity radius in voxels, indexed AD, MCI, CN.
    pub csf_radius: [f64; 3],
    /// Standard deviation of the additive Gaussian noise.
    pub noise: f64,
    /// Half-width of the uniform jitter on both radii.
    pub radius_jitter: f64,
    /// Half-width of the uniform jitter on each coordinate of the region centre.
    pub position_jitter: f64,
    pub samples_per_class: usize,
    pub seed: u64,
}

impl Default for PhantomParams {
    fn default() -> Self {
        PhantomParams {
            extents: [32, 40, 32],
            gm_radius: [2.4, 3.2, 4.0],
            csf_radius: [2.0, 1.3, 0.6],
            noise: 0.2,
            radius_jitter: 0.3,
            position_jitter: 1.0,
            samples_per_class: 200,
            seed: 20,
        }
    }
}

impl PhantomParams {
    pub fn validate(&self) -> Result<()> {
        let [ad, mci, cn] = self.gm_radius;
        if !(ad < mci && mci < cn) {
            return Err(Error::invalid("phantom params", "GM radii must increase AD < MCI < CN"));
        }
        let [ad, mci, cn] = self.csf_radius;
        if !(ad > mci && mci > cn) {
            return Err(Error::invalid("phantom params", "CSF radii must decrease AD > MCI > CN"));
        }
        let finite_non_negative = |v: f64| v.is_finite() && v >= 0.0;
        if !self.gm_radius.iter().chain(&self.csf_radius).all(|&r| finite_non_negative(r) && r > 0.0) {
            return Err(Error::invalid("phantom params", "radii must be positive"));
        }
        if !finite_non_negative(self.noise) {
            return Err(Error::invalid("phantom params", "noise must be non-negative"));
        }
        if !finite_non_negative(self.radius_jitter) || !finite_non_negative(self.position_jitter) {
            return Err(Error::invalid("phantom params", "jitter must be non-negative"));
        }
        if self.samples_per_class == 0 {
            return Err(Error::invalid("phantom params", "samples_per_class must be positive"));
        }
        // The largest region envelope must stay inside the white-matter core.
        let reach = (0..3).map(|c| self.envelope_radius(c)).fold(0.0, f64::max);
        for axis in 0..3 {
            let core = self.extents[axis] as f64 * HEAD_FRACTION * WM_OUTER;
            let centre = self.extents[axis] as f64 * REGION_CENTRE[axis];
            let head_centre = self.extents[axis] as f64 * 0.5;
            if reach + libm::fabs(centre - head_centre) > core {
                return Err(Error::invalid(
                    "phantom params",
                    format!(
                        "extents {:?} too small for a region of reach {reach:.2} voxels (axis {axis})",
                        self.extents
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Radius of the ball that contains class `class`'s region under any jitter.
    pub fn envelope_radius(&self, class: usize) -> f64 {
        self.gm_radius[class].max(self.csf_radius[class])
            + self.radius_jitter
            + self.position_jitter * libm::sqrt(3.0)
    }

    pub fn total_samples(&self) -> usize {
        3 * self.samples_per_class
    }

    fn region_centre(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for a in 0..3 {
            c[a] = self.extents[a] as f64 * REGION_CENTRE[a];
        }
        c
    }
}

fn voxel_centre(i: usize) -> f64 {
    i as f64 + 0.5
}

fn distance(p: [f64; 3], q: [f64; 3]) -> f64 {
    libm::sqrt((0..3).map(|a| (p[a] - q[a]) * (p[a] - q[a])).sum())
}

/// Identifier of sample `index` of `class`.
pub fn phantom_id(class: Diagnosis, index: usize) -> alloc::string::String {
    format!("{}-{index:04}", class.name().to_ascii_lowercase())
}

/// One phantom volume; a pure function of `(params, class, index)`.
pub fn phantom_volume(params: &PhantomParams, class: Diagnosis, index: usize) -> Result<VolumeRecord> {
    params.validate()?;
    let c = class.id();
    let stream = derive_seed(params.seed, "phantom")
        .wrapping_add((c * params.samples_per_class + index) as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let mut jitter = |half: f64| if half > 0.0 { rng.random_range(-half..=half) } else { 0.0 };

    let gm_r = params.gm_radius[c] + jitter(params.radius_jitter);
    let csf_r = params.csf_radius[c] + jitter(params.radius_jitter);
    let mut centre = params.region_centre();
    for coord in &mut centre {
        *coord += jitter(params.position_jitter);
    }

    let [d, h, w] = params.extents;
    let n = d * h * w;
    let head_centre = [d as f64 / 2.0, h as f64 / 2.0, w as f64 / 2.0];
    let semi = [
        d as f64 * HEAD_FRACTION,
        h as f64 * HEAD_FRACTION,
        w as f64 * HEAD_FRACTION,
    ];
    let mut data = alloc::vec![0.0f32; 3 * n];
    let (gm, rest) = data.split_at_mut(n);
    let (wm, csf) = rest.split_at_mut(n);
    for z in 0..d {
        for y in 0..h {
            for x in 0..w {
                let p = [voxel_centre(z), voxel_centre(y), voxel_centre(x)];
                let i = (z * h + y) * w + x;
                let r = libm::sqrt(
                    (0..3)
                        .map(|a| ((p[a] - head_centre[a]) / semi[a]).powi(2))
                        .sum(),
                );
                let from_region = distance(p, centre);
                if from_region < csf_r {
                    csf[i] = 1.0;
                } else if from_region < gm_r {
                    gm[i] = 1.0;
                } else if r < WM_OUTER {
                    wm[i] = 1.0;
                } else if r < GM_OUTER {
                    gm[i] = 1.0;
                } else if r < 1.0 {
                    csf[i] = 1.0;
                }
            }
        }
    }
    if params.noise > 0.0 {
        let normal = Normal::new(0.0, params.noise)
            .map_err(|_| Error::invalid("phantom params", "bad noise amplitude"))?;
        let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(stream, "noise"));
        for v in data.iter_mut() {
            let noisy = *v as f64 + normal.sample(&mut noise_rng);
            *v = noisy.clamp(0.0, 1.0) as f32;
        }
    }
    VolumeRecord::new(phantom_id(class, index), 3, params.extents, data, Some(class))
}

/// Every phantom, ordered AD, MCI, CN and by index within each class.
pub fn generate_phantom_records(params: &PhantomParams) -> Result<Vec<VolumeRecord>> {
    params.validate()?;
    let mut out = Vec::with_capacity(params.total_samples());
    for class in Diagnosis::ALL {
        for i in 0..params.samples_per_class {
            out.push(phantom_volume(params, class, i)?);
        }
    }
    Ok(out)
}

/// Binary mask of the ball that contains `class`'s region in every sample.
pub fn region_mask(params: &PhantomParams, class: Diagnosis) -> Result<Vec<bool>> {
    params.validate()?;
    let radius = params.envelope_radius(class.id());
    let centre = params.region_centre();
    let [d, h, w] = params.extents;
    let mut mask = Vec::with_capacity(d * h * w);
    for z in 0..d {
        for y in 0..h {
            for x in 0..w {
                let p = [voxel_centre(z), voxel_centre(y), voxel_centre(x)];
                mask.push(distance(p, centre) <= radius);
            }
        }
    }
    Ok(mask)
}

/// [`region_mask`] as a single-channel volume with values 0 and 1.
pub fn region_mask_volume(params: &PhantomParams, class: Diagnosis) -> Result<VolumeRecord> {
    let mask = region_mask(params, class)?;
    VolumeRecord::new(
        format!("mask-{}", class.name().to_ascii_lowercase()),
        1,
        params.extents,
        mask.into_iter().map(|m| if m { 1.0 } else { 0.0 }).collect(),
        Some(class),
    )
}
