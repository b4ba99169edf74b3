#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod kernels;
pub mod metrics;
pub mod model;
pub mod phantom;
pub mod rng;
pub mod saliency;
pub mod tensor;
pub mod train;
pub mod volume;

pub use dataset::Diagnosis;
pub use error::{Error, Result};
pub use tensor::Tensor;
