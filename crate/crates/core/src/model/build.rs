//! Layer graphs for the three architectures.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::config::{ArchConfig, Architecture, ConvStage, InceptionSpec};
use super::layer::{census, conv_blocks, Layer, LayerKind};
use super::network::Model;
use crate::error::{Error, Result};
use crate::kernels::{ConvSpec, PoolSpec};

/// Builds whichever architecture `config` names.
pub fn build(config: &ArchConfig) -> Result<Model> {
    match config.architecture {
        Architecture::AlexNet3d => build_alexnet3d(config),
        Architecture::Vgg16_3d => build_vgg16_3d(config),
        Architecture::GoogLeNet3d => build_googlenet3d(config),
    }
}

pub fn build_alexnet3d(config: &ArchConfig) -> Result<Model> {
    expect_arch(config, Architecture::AlexNet3d)?;
    let model = assemble(config)?;
    let c = census(model.layers());
    debug_assert_eq!((c.conv, c.dense), (5, 3));
    Ok(model)
}

pub fn build_vgg16_3d(config: &ArchConfig) -> Result<Model> {
    expect_arch(config, Architecture::Vgg16_3d)?;
    let model = assemble(config)?;
    debug_assert_eq!(census(model.layers()).learnable(), 16);
    Ok(model)
}

pub fn build_googlenet3d(config: &ArchConfig) -> Result<Model> {
    expect_arch(config, Architecture::GoogLeNet3d)?;
    let model = assemble(config)?;
    let c = census(model.layers());
    debug_assert_eq!((c.dense, c.heads, c.auxiliary_heads), (1, 1, 0));
    Ok(model)
}

/// VGG-style block sizes of a built model.
pub fn block_sizes(model: &Model) -> Vec<usize> {
    conv_blocks(model.layers())
}

fn expect_arch(config: &ArchConfig, arch: Architecture) -> Result<()> {
    if config.architecture != arch {
        return Err(Error::invalid(
            "arch config",
            format!("expected {arch}, got {}", config.architecture),
        ));
    }
    Ok(())
}

fn assemble(config: &ArchConfig) -> Result<Model> {
    config.validate()?;
    let mut layers = Vec::new();
    let mut channels = config.input_shape[0];

    let stem_names = match config.architecture {
        Architecture::Vgg16_3d => vgg_names(&config.convs),
        _ => (1..=config.convs.len()).map(|i| format!("conv{i}")).collect(),
    };
    for (stage, name) in config.convs.iter().zip(stem_names) {
        push_conv(&mut layers, &name, channels, stage);
        channels = stage.width;
        if stage.pool_after {
            layers.push(Layer::new(format!("{name}_pool"), LayerKind::MaxPool3d(config.pool)));
        }
    }

    for (i, module) in config.inception.iter().enumerate() {
        let index_in_stage = config.inception[..i]
            .iter()
            .filter(|m| m.stage == module.stage)
            .count();
        let name = format!("inception{}{}", module.stage, (b'a' + index_in_stage as u8) as char);
        layers.push(inception(&name, channels, module));
        channels = module.out_channels();
        let stage_ends = config
            .inception
            .get(i + 1)
            .is_none_or(|next| next.stage != module.stage);
        if stage_ends {
            layers.push(Layer::new(format!("{name}_pool"), LayerKind::MaxPool3d(config.pool)));
        }
    }

    layers.push(Layer::new("flatten", LayerKind::Flatten));
    // Flattened width comes from shape inference over what has been built so far.
    let shapes = super::layer::infer_shapes(&layers, &config.input_shape)?;
    let mut width = shapes.last().map(|s| s[0]).unwrap_or(0);
    let first_fc = config.convs.len() + 1;
    for (i, &hidden) in config.dense.iter().enumerate() {
        let name = format!("fc{}", first_fc + i);
        layers.push(Layer::new(
            name.clone(),
            LayerKind::Dense {
                inputs: width,
                outputs: hidden,
            },
        ));
        layers.push(Layer::new(format!("{name}_relu"), LayerKind::Relu));
        layers.push(Layer::new(
            format!("{name}_dropout"),
            LayerKind::Dropout { rate: config.dropout },
        ));
        width = hidden;
    }
    layers.push(Layer::new(
        format!("fc{}", first_fc + config.dense.len()),
        LayerKind::Dense {
            inputs: width,
            outputs: config.classes,
        },
    ));
    layers.push(Layer::new("softmax", LayerKind::Softmax));
    Model::from_layers(config.clone(), layers)
}

fn vgg_names(convs: &[ConvStage]) -> Vec<alloc::string::String> {
    let mut names = Vec::with_capacity(convs.len());
    let (mut block, mut index) = (1, 1);
    for stage in convs {
        names.push(format!("conv{block}_{index}"));
        index += 1;
        if stage.pool_after {
            block += 1;
            index = 1;
        }
    }
    names
}

fn push_conv(layers: &mut Vec<Layer>, name: &str, in_channels: usize, stage: &ConvStage) {
    let spec = ConvSpec {
        in_channels,
        out_channels: stage.width,
        kernel: [stage.kernel; 3],
        stride: [stage.stride; 3],
        padding: [stage.padding; 3],
    };
    layers.push(Layer::new(name, LayerKind::Conv3d(spec)));
    layers.push(Layer::new(format!("{name}_relu"), LayerKind::Relu));
}

fn conv_relu(name: &str, in_channels: usize, out_channels: usize, k: usize) -> [Layer; 2] {
    [
        Layer::new(name, LayerKind::Conv3d(ConvSpec::cube(in_channels, out_channels, k, k / 2))),
        Layer::new(format!("{name}_relu"), LayerKind::Relu),
    ]
}

/// Four same-extent branches concatenated on channels.
fn inception(name: &str, channels: usize, m: &InceptionSpec) -> Layer {
    let b1 = conv_relu(&format!("{name}.b1"), channels, m.branch1, 1).to_vec();
    let mut b2 = conv_relu(&format!("{name}.b2_reduce"), channels, m.reduce3, 1).to_vec();
    b2.extend(conv_relu(&format!("{name}.b2"), m.reduce3, m.branch3, 3));
    let mut b3 = conv_relu(&format!("{name}.b3_reduce"), channels, m.reduce5, 1).to_vec();
    b3.extend(conv_relu(&format!("{name}.b3"), m.reduce5, m.branch5, 5));
    let mut b4 = vec![Layer::new(
        format!("{name}.b4_pool"),
        LayerKind::MaxPool3d(PoolSpec::cube(3, 1, 1)),
    )];
    b4.extend(conv_relu(&format!("{name}.b4"), channels, m.pool_proj, 1));
    Layer::new(
        name,
        LayerKind::ConcatGroup {
            branches: vec![b1, b2, b3, b4],
        },
    )
}
