use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::PoolSpec;

/// Current version of the [`ArchConfig`] schema.
pub const ARCH_CONFIG_VERSION: u32 = 1;

/// Canonical full-size input: GM/WM/CSF channels on the normalized grid.
pub const CANONICAL_INPUT: [usize; 4] = [3, 157, 189, 156];

/// Input used by the desk-scale configurations.
pub const TOY_INPUT: [usize; 4] = [3, 32, 40, 32];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Architecture {
    #[serde(rename = "alexnet3d")]
    AlexNet3d,
    #[serde(rename = "vgg16-3d")]
    Vgg16_3d,
    #[serde(rename = "googlenet3d")]
    GoogLeNet3d,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [
        Architecture::AlexNet3d,
        Architecture::Vgg16_3d,
        Architecture::GoogLeNet3d,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Architecture::AlexNet3d => "alexnet3d",
            Architecture::Vgg16_3d => "vgg16-3d",
            Architecture::GoogLeNet3d => "googlenet3d",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::invalid("architecture", format!("unknown id `{s}`")))
    }
}

/// One plain convolution stage (conv + relu, optionally followed by the
/// between-stage max pooling).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvStage {
    pub width: usize,
    pub kernel: usize,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub padding: usize,
    #[serde(default)]
    pub pool_after: bool,
}

fn one() -> usize {
    1
}

impl ConvStage {
    pub const fn new(width: usize, kernel: usize, stride: usize, padding: usize, pool_after: bool) -> Self {
        ConvStage {
            width,
            kernel,
            stride,
            padding,
            pool_after,
        }
    }

    /// Stride-1 `3³` convolution preserving extents.
    pub const fn same3(width: usize, pool_after: bool) -> Self {
        ConvStage::new(width, 3, 1, 1, pool_after)
    }
}

/// Widths of the four parallel inception branches.
///
/// Branch 1 is a `1³` convolution, branches 2 and 3 a `1³` reduction followed
/// by a `3³` and `5³` convolution, branch 4 a `3³` stride-1 max pool followed
/// by a `1³` projection. Every branch preserves spatial extents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InceptionSpec {
    /// Stage the module belongs to; a max pool follows the last module of
    /// every stage.
    pub stage: usize,
    pub branch1: usize,
    pub reduce3: usize,
    pub branch3: usize,
    pub reduce5: usize,
    pub branch5: usize,
    pub pool_proj: usize,
}

impl InceptionSpec {
    pub const fn new(stage: usize, widths: [usize; 6]) -> Self {
        let [branch1, reduce3, branch3, reduce5, branch5, pool_proj] = widths;
        InceptionSpec {
            stage,
            branch1,
            reduce3,
            branch3,
            reduce5,
            branch5,
            pool_proj,
        }
    }

    pub fn out_channels(&self) -> usize {
        self.branch1 + self.branch3 + self.branch5 + self.pool_proj
    }

    fn widths(&self) -> [usize; 6] {
        [
            self.branch1,
            self.reduce3,
            self.branch3,
            self.reduce5,
            self.branch5,
            self.pool_proj,
        ]
    }
}

/// Versioned description of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub version: u32,
    pub architecture: Architecture,
    pub input_shape: [usize; 4],
    pub classes: usize,
    pub dropout: f64,
    /// Between-stage max pooling.
    pub pool: PoolSpec,
    /// Plain convolutions: all of AlexNet/VGG, the stem of GoogLeNet.
    pub convs: Vec<ConvStage>,
    #[serde(default)]
    pub inception: Vec<InceptionSpec>,
    /// Hidden fully connected widths; the final `classes`-node layer is implied.
    #[serde(default)]
    pub dense: Vec<usize>,
}

impl ArchConfig {
    /// Full-size default for `arch`, at the canonical input.
    pub fn default_for(arch: Architecture) -> Self {
        match arch {
            Architecture::AlexNet3d => Self::alexnet3d(),
            Architecture::Vgg16_3d => Self::vgg16_3d(),
            Architecture::GoogLeNet3d => Self::googlenet3d(),
        }
    }

    /// Full-size AlexNet3D: 7³/2 stem, 5 convolutions, two hidden dense layers.
    pub fn alexnet3d() -> Self {
        ArchConfig {
            version: ARCH_CONFIG_VERSION,
            architecture: Architecture::AlexNet3d,
            input_shape: CANONICAL_INPUT,
            classes: 3,
            dropout: 0.5,
            pool: PoolSpec::cube(3, 2, 0),
            convs: vec![
                ConvStage::new(32, 7, 2, 3, true),
                ConvStage::new(64, 5, 1, 2, true),
                ConvStage::same3(128, false),
                ConvStage::same3(128, false),
                ConvStage::same3(64, true),
            ],
            inception: Vec::new(),
            dense: vec![300, 300],
        }
    }

    /// Full-size VGG16-3D: conv blocks of (2, 2, 3, 3, 3) `3³` layers.
    pub fn vgg16_3d() -> Self {
        let mut convs = Vec::new();
        for (width, depth) in [(32, 2), (64, 2), (128, 3), (256, 3), (256, 3)] {
            for i in 0..depth {
                convs.push(ConvStage::same3(width, i + 1 == depth));
            }
        }
        ArchConfig {
            version: ARCH_CONFIG_VERSION,
            architecture: Architecture::Vgg16_3d,
            input_shape: CANONICAL_INPUT,
            classes: 3,
            dropout: 0.5,
            pool: PoolSpec::cube(3, 2, 0),
            convs,
            inception: Vec::new(),
            dense: vec![2880, 2880],
        }
    }

    /// Full-size GoogLeNet3D: stem, then inception stages of (2, 5, 2)
    /// modules and a single 3-node head.
    pub fn googlenet3d() -> Self {
        let inception = vec![
            InceptionSpec::new(3, [56, 84, 112, 14, 28, 28]),
            InceptionSpec::new(3, [112, 112, 168, 28, 84, 56]),
            InceptionSpec::new(4, [168, 84, 182, 14, 42, 56]),
            InceptionSpec::new(4, [140, 98, 196, 21, 56, 56]),
            InceptionSpec::new(4, [112, 112, 224, 21, 56, 56]),
            InceptionSpec::new(4, [98, 126, 252, 28, 56, 56]),
            InceptionSpec::new(4, [224, 140, 280, 28, 112, 112]),
            InceptionSpec::new(5, [224, 140, 280, 28, 112, 112]),
            InceptionSpec::new(5, [336, 168, 336, 42, 112, 112]),
        ];
        ArchConfig {
            version: ARCH_CONFIG_VERSION,
            architecture: Architecture::GoogLeNet3d,
            input_shape: CANONICAL_INPUT,
            classes: 3,
            dropout: 0.5,
            pool: PoolSpec::cube(3, 2, 0),
            convs: vec![
                ConvStage::new(32, 7, 2, 3, true),
                ConvStage::new(32, 1, 1, 0, false),
                ConvStage::same3(96, true),
            ],
            inception,
            dense: Vec::new(),
        }
    }

    /// Narrow desk-scale variant of `arch` with the same layer census.
    ///
    /// Pooling is padded so that small inputs survive every stage.
    pub fn toy(arch: Architecture) -> Self {
        let pool = PoolSpec::cube(3, 2, 1);
        let base = ArchConfig {
            version: ARCH_CONFIG_VERSION,
            architecture: arch,
            input_shape: TOY_INPUT,
            classes: 3,
            dropout: 0.5,
            pool,
            convs: Vec::new(),
            inception: Vec::new(),
            dense: Vec::new(),
        };
        match arch {
            Architecture::AlexNet3d => ArchConfig {
                convs: vec![
                    ConvStage::new(8, 3, 2, 1, true),
                    ConvStage::same3(16, true),
                    ConvStage::same3(16, false),
                    ConvStage::same3(16, false),
                    ConvStage::same3(16, true),
                ],
                dense: vec![32, 32],
                ..base
            },
            Architecture::Vgg16_3d => {
                let mut convs = Vec::new();
                for (width, depth) in [(4, 2), (8, 2), (8, 3), (16, 3), (16, 3)] {
                    for i in 0..depth {
                        convs.push(ConvStage::same3(width, i + 1 == depth));
                    }
                }
                ArchConfig {
                    convs,
                    dense: vec![32, 32],
                    ..base
                }
            }
            Architecture::GoogLeNet3d => ArchConfig {
                convs: vec![
                    ConvStage::new(8, 3, 2, 1, true),
                    ConvStage::new(8, 1, 1, 0, false),
                    ConvStage::same3(16, true),
                ],
                inception: vec![
                    InceptionSpec::new(3, [4, 4, 8, 2, 4, 4]),
                    InceptionSpec::new(4, [8, 4, 8, 2, 4, 4]),
                    InceptionSpec::new(5, [8, 8, 8, 2, 4, 4]),
                ],
                ..base
            },
        }
    }

    pub fn with_input(mut self, input_shape: [usize; 4]) -> Self {
        self.input_shape = input_shape;
        self
    }

    /// Structural checks that do not need shape inference.
    pub fn validate(&self) -> Result<()> {
        if self.version != ARCH_CONFIG_VERSION {
            return Err(Error::invalid(
                "arch config",
                format!("version {} (supported: {ARCH_CONFIG_VERSION})", self.version),
            ));
        }
        if self.input_shape.contains(&0) {
            return Err(Error::invalid("arch config", "input extents must be positive"));
        }
        if self.classes < 2 {
            return Err(Error::invalid("arch config", "need at least two classes"));
        }
        crate::kernels::check_rate(self.dropout)?;
        self.pool.validate()?;
        for (i, s) in self.convs.iter().enumerate() {
            if s.width == 0 || s.kernel == 0 || s.stride == 0 {
                return Err(Error::invalid(
                    "arch config",
                    format!("conv stage {i}: width, kernel and stride must be positive"),
                ));
            }
        }
        if self.dense.contains(&0) {
            return Err(Error::invalid("arch config", "dense widths must be positive"));
        }
        for (i, m) in self.inception.iter().enumerate() {
            if m.widths().contains(&0) {
                return Err(Error::invalid(
                    "arch config",
                    format!("inception module {i}: branch widths must be positive"),
                ));
            }
        }
        if self.inception.windows(2).any(|w| w[1].stage < w[0].stage) {
            return Err(Error::invalid("arch config", "inception stages must be non-decreasing"));
        }
        let (convs, dense, inception) = (self.convs.len(), self.dense.len(), self.inception.len());
        let ok = match self.architecture {
            Architecture::AlexNet3d => convs == 5 && dense == 2 && inception == 0,
            Architecture::Vgg16_3d => convs == 13 && dense == 2 && inception == 0,
            Architecture::GoogLeNet3d => convs > 0 && dense == 0 && inception > 0,
        };
        if !ok {
            return Err(Error::invalid(
                "arch config",
                format!(
                    "{} cannot have {convs} convolutions, {dense} hidden dense layers and {inception} inception modules",
                    self.architecture
                ),
            ));
        }
        Ok(())
    }
}
