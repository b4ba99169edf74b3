use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernels::{ConvSpec, PoolSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum LayerKind {
    Conv3d(ConvSpec),
    MaxPool3d(PoolSpec),
    Relu,
    Flatten,
    Dense { inputs: usize, outputs: usize },
    Dropout { rate: f64 },
    /// Parallel branches applied to the same input, concatenated on channels.
    ConcatGroup { branches: Vec<Vec<Layer>> },
    Softmax,
}

impl LayerKind {
    pub fn label(&self) -> &'static str {
        match self {
            LayerKind::Conv3d(_) => "conv3d",
            LayerKind::MaxPool3d(_) => "maxpool3d",
            LayerKind::Relu => "relu",
            LayerKind::Flatten => "flatten",
            LayerKind::Dense { .. } => "dense",
            LayerKind::Dropout { .. } => "dropout",
            LayerKind::ConcatGroup { .. } => "concat-group",
            LayerKind::Softmax => "softmax",
        }
    }

    pub fn is_learnable(&self) -> bool {
        matches!(self, LayerKind::Conv3d(_) | LayerKind::Dense { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub name: String,
    pub kind: LayerKind,
}

impl Layer {
    pub fn new(name: impl Into<String>, kind: LayerKind) -> Self {
        Layer {
            name: name.into(),
            kind,
        }
    }

    pub fn weight_key(&self) -> String {
        format!("{}.weight", self.name)
    }

    pub fn bias_key(&self) -> String {
        format!("{}.bias", self.name)
    }

    /// Shapes of the weight and bias tensors, for learnable layers.
    pub fn param_shapes(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        match &self.kind {
            LayerKind::Conv3d(spec) => Some((spec.weight_shape().to_vec(), vec![spec.out_channels])),
            LayerKind::Dense { inputs, outputs } => Some((vec![*outputs, *inputs], vec![*outputs])),
            _ => None,
        }
    }

    /// Number of learnable scalars owned by this layer (branches included).
    pub fn parameter_count(&self) -> usize {
        match &self.kind {
            LayerKind::Conv3d(spec) => spec.parameter_count(),
            LayerKind::Dense { inputs, outputs } => outputs * inputs + outputs,
            LayerKind::ConcatGroup { branches } => branches
                .iter()
                .flatten()
                .map(Layer::parameter_count)
                .sum(),
            _ => 0,
        }
    }
}

/// Calls `f` on every layer, descending into concat groups depth first.
pub fn visit_layers<'a>(layers: &'a [Layer], f: &mut impl FnMut(&'a Layer)) {
    for layer in layers {
        f(layer);
        if let LayerKind::ConcatGroup { branches } = &layer.kind {
            for branch in branches {
                visit_layers(branch, f);
            }
        }
    }
}

/// One row of a shape walk.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeStep {
    pub name: String,
    pub kind: &'static str,
    pub depth: usize,
    pub output: Vec<usize>,
}

/// Output shape of a single layer applied to `input`.
pub fn layer_output_shape(layer: &Layer, input: &[usize]) -> Result<Vec<usize>> {
    walk_layer(layer, input, 0, &mut None)
}

fn spatial_of(layer: &Layer, input: &[usize]) -> Result<(usize, [usize; 3])> {
    match *input {
        [c, d, h, w] => Ok((c, [d, h, w])),
        _ => Err(Error::shape(
            format!("layer `{}`", layer.name),
            format!("expects a C×D×H×W volume, got {input:?}"),
        )),
    }
}

fn collapse_axis(layer: &Layer, spatial: [usize; 3], kernel: [usize; 3], stride: [usize; 3], padding: [usize; 3]) -> Error {
    let axis = (0..3)
        .find(|&a| crate::kernels::output_extent(spatial[a], kernel[a], stride[a], padding[a]).is_none())
        .unwrap_or(0);
    Error::ExtentCollapse {
        layer: layer.name.clone(),
        axis: axis + 1,
    }
}

fn walk_layer(
    layer: &Layer,
    input: &[usize],
    depth: usize,
    steps: &mut Option<&mut Vec<ShapeStep>>,
) -> Result<Vec<usize>> {
    let out = match &layer.kind {
        LayerKind::Conv3d(spec) => {
            let (c, spatial) = spatial_of(layer, input)?;
            if c != spec.in_channels {
                return Err(Error::shape(
                    format!("layer `{}`", layer.name),
                    format!("channel axis: got {c}, expects {}", spec.in_channels),
                ));
            }
            spec.validate()?;
            let [d, h, w] = spec
                .output_spatial(spatial)
                .map_err(|_| collapse_axis(layer, spatial, spec.kernel, spec.stride, spec.padding))?;
            vec![spec.out_channels, d, h, w]
        }
        LayerKind::MaxPool3d(spec) => {
            let (c, spatial) = spatial_of(layer, input)?;
            spec.validate()?;
            let [d, h, w] = spec
                .output_spatial(spatial)
                .map_err(|_| collapse_axis(layer, spatial, spec.kernel, spec.stride, spec.padding))?;
            vec![c, d, h, w]
        }
        LayerKind::Relu | LayerKind::Dropout { .. } => input.to_vec(),
        LayerKind::Flatten => vec![input.iter().product()],
        LayerKind::Dense { inputs, outputs } => {
            if input != [*inputs] {
                return Err(Error::shape(
                    format!("layer `{}`", layer.name),
                    format!("dense layer expects a flat [{inputs}] input, got {input:?}"),
                ));
            }
            vec![*outputs]
        }
        LayerKind::Softmax => {
            if input.len() != 1 {
                return Err(Error::shape(
                    format!("layer `{}`", layer.name),
                    format!("softmax expects a vector, got {input:?}"),
                ));
            }
            input.to_vec()
        }
        LayerKind::ConcatGroup { branches } => {
            if branches.is_empty() {
                return Err(Error::invalid("concat group", format!("`{}` has no branches", layer.name)));
            }
            if let Some(s) = steps.as_deref_mut() {
                s.push(ShapeStep {
                    name: layer.name.clone(),
                    kind: layer.kind.label(),
                    depth,
                    output: Vec::new(),
                });
            }
            let slot = steps.as_deref().map(|s| s.len() - 1);
            let mut channels = 0;
            let mut spatial: Option<Vec<usize>> = None;
            for branch in branches {
                let mut shape = input.to_vec();
                for inner in branch {
                    shape = walk_layer(inner, &shape, depth + 1, steps)?;
                }
                let (c, sp) = spatial_of(layer, &shape)?;
                match &spatial {
                    Some(prev) if prev.as_slice() != sp.as_slice() => {
                        return Err(Error::shape(
                            format!("layer `{}`", layer.name),
                            format!("branch extents {sp:?} differ from {prev:?}"),
                        ))
                    }
                    _ => spatial = Some(sp.to_vec()),
                }
                channels += c;
            }
            let mut out = vec![channels];
            out.extend(spatial.unwrap_or_default());
            if let (Some(s), Some(i)) = (steps.as_deref_mut(), slot) {
                s[i].output = out.clone();
            }
            return Ok(out);
        }
    };
    if let Some(s) = steps.as_deref_mut() {
        s.push(ShapeStep {
            name: layer.name.clone(),
            kind: layer.kind.label(),
            depth,
            output: out.clone(),
        });
    }
    Ok(out)
}

/// Propagates `input` through `layers`, returning each top-level layer's
/// output shape.
pub fn infer_shapes(layers: &[Layer], input: &[usize]) -> Result<Vec<Vec<usize>>> {
    let mut shape = input.to_vec();
    let mut out = Vec::with_capacity(layers.len());
    for layer in layers {
        shape = walk_layer(layer, &shape, 0, &mut None)?;
        out.push(shape.clone());
    }
    Ok(out)
}

/// Like [`infer_shapes`] but records nested branch layers too.
pub fn shape_walk(layers: &[Layer], input: &[usize]) -> Result<Vec<ShapeStep>> {
    let mut steps = Vec::new();
    let mut shape = input.to_vec();
    for layer in layers {
        shape = walk_layer(layer, &shape, 0, &mut Some(&mut steps))?;
    }
    Ok(steps)
}

/// Census of learnable layers and classification heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Census {
    pub conv: usize,
    pub dense: usize,
    pub heads: usize,
    pub auxiliary_heads: usize,
}

impl Census {
    pub fn learnable(&self) -> usize {
        self.conv + self.dense
    }
}

pub fn census(layers: &[Layer]) -> Census {
    let mut c = Census::default();
    visit_layers(layers, &mut |l| match l.kind {
        LayerKind::Conv3d(_) => c.conv += 1,
        LayerKind::Dense { .. } => c.dense += 1,
        LayerKind::Softmax => c.heads += 1,
        _ => {}
    });
    // Only a softmax terminating the top-level graph is the main head.
    let main = matches!(layers.last().map(|l| &l.kind), Some(LayerKind::Softmax)) as usize;
    c.auxiliary_heads = c.heads - main;
    c
}

/// Sizes of runs of consecutive top-level convolutions separated by pooling.
pub fn conv_blocks(layers: &[Layer]) -> Vec<usize> {
    let mut blocks = Vec::new();
    let mut run = 0;
    for layer in layers {
        match layer.kind {
            LayerKind::Conv3d(_) => run += 1,
            LayerKind::MaxPool3d(_) if run > 0 => {
                blocks.push(run);
                run = 0;
            }
            _ => {}
        }
    }
    if run > 0 {
        blocks.push(run);
    }
    blocks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_list_keeps_input() {
        let shapes = infer_shapes(&[], &[3, 4, 5, 6]).unwrap();
        assert!(shapes.is_empty());
        assert!(shape_walk(&[], &[3, 4, 5, 6]).unwrap().is_empty());
    }

    #[test]
    fn single_pool_on_canonical_grid() {
        let layers = [Layer::new("pool", LayerKind::MaxPool3d(PoolSpec::cube(3, 2, 0)))];
        let shapes = infer_shapes(&layers, &[3, 157, 189, 156]).unwrap();
        assert_eq!(shapes, vec![vec![3, 78, 94, 77]]);
    }

    #[test]
    fn collapse_names_layer_and_axis() {
        let layers = [
            Layer::new("p1", LayerKind::MaxPool3d(PoolSpec::cube(3, 2, 0))),
            Layer::new("p2", LayerKind::MaxPool3d(PoolSpec::cube(3, 2, 0))),
        ];
        let err = infer_shapes(&layers, &[1, 9, 4, 9]).unwrap_err();
        assert_eq!(
            err,
            Error::ExtentCollapse {
                layer: "p2".into(),
                axis: 2
            }
        );
    }

    #[test]
    fn dense_requires_flat_input() {
        let layers = [Layer::new("fc", LayerKind::Dense { inputs: 8, outputs: 2 })];
        assert!(infer_shapes(&layers, &[1, 2, 2, 2]).is_err());
        assert_eq!(infer_shapes(&layers, &[8]).unwrap(), vec![vec![2]]);
    }
}
