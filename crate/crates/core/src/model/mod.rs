//! The three volumetric networks: configuration, layer graph, execution.

mod build;
mod config;
mod layer;
mod network;
mod params;

pub use build::{block_sizes, build, build_alexnet3d, build_googlenet3d, build_vgg16_3d};
pub use config::{
    ArchConfig, Architecture, ConvStage, InceptionSpec, ARCH_CONFIG_VERSION, CANONICAL_INPUT,
    TOY_INPUT,
};
pub use layer::{
    census, conv_blocks, infer_shapes, layer_output_shape, shape_walk, visit_layers, Census, Layer,
    LayerKind, ShapeStep,
};
pub use network::{ForwardCache, ForwardPass, Gradients, Model, RunMode};
pub use params::ParamStore;
