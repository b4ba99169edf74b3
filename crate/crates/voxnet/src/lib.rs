//! File formats, dataset generation and the command-line front end for
//! [`voxnet_core`].

pub mod cli;
pub mod config;
pub mod datagen;
pub mod error;
pub mod fsutil;
pub mod manifest;
pub mod model_io;
pub mod report;
pub mod volume_io;

pub use error::{Error, Result};
