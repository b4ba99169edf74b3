use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::ArchConfig;
use super::layer::{census, infer_shapes, visit_layers, Census, Layer, LayerKind};
use super::params::ParamStore;
use crate::error::{Error, Result};
use crate::kernels::{self, DropoutMask, Mode};
use crate::tensor::Tensor;

/// How a forward pass treats stochastic layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Dropout is the identity; the pass is deterministic.
    Eval,
    /// Dropout masks are drawn from a generator seeded with `seed`.
    Train { seed: u64 },
}

impl RunMode {
    fn kernel_mode(self) -> Mode {
        match self {
            RunMode::Eval => Mode::Eval,
            RunMode::Train { .. } => Mode::Train,
        }
    }
}

/// A built network: layer graph plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ArchConfig,
    layers: Vec<Layer>,
    params: ParamStore,
    revision: u64,
}

#[derive(Debug, Clone)]
enum LayerCache {
    Conv { input: Tensor },
    Pool { input_shape: Vec<usize>, argmax: Vec<usize> },
    Relu { input: Tensor },
    Flatten { shape: Vec<usize> },
    Dense { input: Tensor },
    Dropout { mask: DropoutMask },
    Concat { branches: Vec<Vec<LayerCache>>, channels: Vec<usize> },
    Passthrough,
}

/// Everything a forward pass records for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    revision: u64,
    layers: Vec<LayerCache>,
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub logits: Tensor,
    pub probs: Tensor,
    pub cache: ForwardCache,
}

/// Result of backpropagating a cross-entropy loss.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub params: ParamStore,
    pub input: Tensor,
    pub loss: f64,
}

impl Model {
    /// Wraps a layer graph, allocating zeroed parameters for every learnable
    /// layer. Fails if shape inference does not end at `(classes,)`.
    pub fn from_layers(config: ArchConfig, layers: Vec<Layer>) -> Result<Self> {
        let shapes = infer_shapes(&layers, &config.input_shape)?;
        let last = shapes.last().cloned().unwrap_or_else(|| config.input_shape.to_vec());
        if last != [config.classes] {
            return Err(Error::shape(
                "model output",
                format!("graph ends at {last:?}, expected [{}]", config.classes),
            ));
        }
        let mut names = Vec::new();
        let mut params = ParamStore::new();
        visit_layers(&layers, &mut |layer| {
            names.push(layer.name.clone());
            if let Some((w, b)) = layer.param_shapes() {
                params.insert(layer.weight_key(), Tensor::zeros(&w));
                params.insert(layer.bias_key(), Tensor::zeros(&b));
            }
        });
        names.sort();
        if let Some(dup) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid("layer graph", format!("duplicate layer name `{}`", dup[0])));
        }
        Ok(Model {
            config,
            layers,
            params,
            revision: 0,
        })
    }

    /// Replaces every parameter, checking keys and shapes.
    pub fn with_params(mut self, params: ParamStore) -> Result<Self> {
        if !self.params.same_layout(&params) {
            return Err(Error::invalid(
                "parameter store",
                "keys or shapes do not match the layer graph",
            ));
        }
        for (key, t) in &params {
            t.ensure_finite(key)?;
        }
        self.params = params;
        self.revision += 1;
        Ok(self)
    }

    pub fn config(&self) -> &ArchConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    /// Mutable parameter access. Invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut ParamStore {
        self.revision += 1;
        &mut self.params
    }

    pub fn input_shape(&self) -> [usize; 4] {
        self.config.input_shape
    }

    pub fn class_count(&self) -> usize {
        self.config.classes
    }

    pub fn census(&self) -> Census {
        census(&self.layers)
    }

    /// Σ over convolutions `O·C·k³ + O` and dense layers `m·n + m`.
    pub fn count_parameters(&self) -> usize {
        self.layers.iter().map(Layer::parameter_count).sum()
    }

    /// Sets the rate of every dropout layer.
    pub fn set_dropout_rate(&mut self, rate: f64) -> Result<()> {
        kernels::check_rate(rate)?;
        fn apply(layers: &mut [Layer], rate: f64) {
            for layer in layers {
                match &mut layer.kind {
                    LayerKind::Dropout { rate: r } => *r = rate,
                    LayerKind::ConcatGroup { branches } => {
                        branches.iter_mut().for_each(|b| apply(b, rate))
                    }
                    _ => {}
                }
            }
        }
        apply(&mut self.layers, rate);
        self.config.dropout = rate;
        Ok(())
    }

    /// He initialization: weights `N(0, 2/fan_in)`, biases zero, drawn in
    /// sorted key order from a generator seeded with `seed`.
    pub fn initialize(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (key, t) in self.params_mut().iter_mut() {
            if !ParamStore::is_weight(key) {
                t.data_mut().fill(0.0);
                continue;
            }
            let fan_in: usize = t.shape()[1..].iter().product();
            let normal = Normal::new(0.0, libm::sqrt(2.0 / fan_in as f64))
                .expect("positive standard deviation");
            t.data_mut().iter_mut().for_each(|v| *v = normal.sample(&mut rng));
        }
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        if input.shape() != self.config.input_shape {
            return Err(Error::shape(
                "model input",
                format!("expected {:?}, got {:?}", self.config.input_shape, input.shape()),
            ));
        }
        input.ensure_finite("model input")
    }

    /// Forward pass recording the cache needed by [`Model::backward`].
    pub fn forward(&self, input: &Tensor, mode: RunMode) -> Result<ForwardPass> {
        self.check_input(input)?;
        let mut rng = ChaCha8Rng::seed_from_u64(match mode {
            RunMode::Train { seed } => seed,
            RunMode::Eval => 0,
        });
        let mut caches = Vec::with_capacity(self.layers.len());
        let logits = self.run(&self.layers, input.clone(), mode, &mut rng, Some(&mut caches))?;
        let probs = Tensor::vector(kernels::softmax(logits.data()));
        Ok(ForwardPass {
            logits,
            probs,
            cache: ForwardCache {
                revision: self.revision,
                layers: caches,
            },
        })
    }

    /// Evaluation-mode class probabilities, without recording a cache.
    pub fn predict(&self, input: &Tensor) -> Result<Tensor> {
        Ok(Tensor::vector(kernels::softmax(self.logits(input)?.data())))
    }

    /// Evaluation-mode pre-softmax scores.
    pub fn logits(&self, input: &Tensor) -> Result<Tensor> {
        self.check_input(input)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        self.run(&self.layers, input.clone(), RunMode::Eval, &mut rng, None)
    }

    fn run(
        &self,
        layers: &[Layer],
        mut x: Tensor,
        mode: RunMode,
        rng: &mut ChaCha8Rng,
        mut caches: Option<&mut Vec<LayerCache>>,
    ) -> Result<Tensor> {
        for layer in layers {
            let (out, cache) = match &layer.kind {
                LayerKind::Conv3d(spec) => {
                    let w = self.params.require(&layer.weight_key())?;
                    let b = self.params.require(&layer.bias_key())?;
                    let out = kernels::conv3d(&x, w, b, spec)?;
                    (out, LayerCache::Conv { input: x })
                }
                LayerKind::MaxPool3d(spec) => {
                    let pooled = kernels::maxpool3d(&x, spec)?;
                    let cache = LayerCache::Pool {
                        input_shape: x.shape().to_vec(),
                        argmax: pooled.argmax,
                    };
                    (pooled.output, cache)
                }
                LayerKind::Relu => (kernels::relu(&x), LayerCache::Relu { input: x }),
                LayerKind::Flatten => {
                    let shape = x.shape().to_vec();
                    let n = x.len();
                    (x.reshape(&[n])?, LayerCache::Flatten { shape })
                }
                LayerKind::Dense { .. } => {
                    let w = self.params.require(&layer.weight_key())?;
                    let b = self.params.require(&layer.bias_key())?;
                    let out = kernels::dense(&x, w, b)?;
                    (out, LayerCache::Dense { input: x })
                }
                LayerKind::Dropout { rate } => {
                    let (out, mask) = kernels::dropout(&x, *rate, mode.kernel_mode(), rng)?;
                    (out, LayerCache::Dropout { mask })
                }
                LayerKind::ConcatGroup { branches } => {
                    let mut outputs = Vec::with_capacity(branches.len());
                    let mut branch_caches = Vec::with_capacity(branches.len());
                    for branch in branches {
                        let mut bc = Vec::new();
                        let record = caches.is_some().then_some(&mut bc);
                        outputs.push(self.run(branch, x.clone(), mode, rng, record)?);
                        branch_caches.push(bc);
                    }
                    let channels = outputs.iter().map(|t| t.shape()[0]).collect();
                    let out = kernels::concat_channels(&outputs)?;
                    (
                        out,
                        LayerCache::Concat {
                            branches: branch_caches,
                            channels,
                        },
                    )
                }
                LayerKind::Softmax => (x, LayerCache::Passthrough),
            };
            if !out.is_finite() {
                return Err(Error::non_finite(format!("activations of layer `{}`", layer.name)));
            }
            if let Some(c) = caches.as_deref_mut() {
                c.push(cache);
            }
            x = out;
        }
        Ok(x)
    }

    /// Cross-entropy gradients for every parameter and for the input.
    pub fn backward(&self, pass: &ForwardPass, true_class: usize) -> Result<Gradients> {
        let xent = kernels::softmax_xent(&pass.logits, true_class)?;
        let mut params = self.params.zeros_like();
        let input = self
            .backward_into(&pass.cache, &xent.grad_logits, &mut params, true)?
            .expect("input gradient requested");
        Ok(Gradients {
            params,
            input,
            loss: xent.loss,
        })
    }

    /// Backpropagates `grad_logits`, adding parameter gradients into `grads`.
    /// Returns the input gradient when `want_input` is set.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        grad_logits: &Tensor,
        grads: &mut ParamStore,
        want_input: bool,
    ) -> Result<Option<Tensor>> {
        if cache.revision != self.revision {
            return Err(Error::StaleCache {
                expected: self.revision,
                found: cache.revision,
            });
        }
        if grad_logits.shape() != [self.config.classes] {
            return Err(Error::shape(
                "logit gradient",
                format!("expected [{}], got {:?}", self.config.classes, grad_logits.shape()),
            ));
        }
        self.back(&self.layers, &cache.layers, grad_logits.clone(), grads, want_input)
    }

    fn back(
        &self,
        layers: &[Layer],
        caches: &[LayerCache],
        mut grad: Tensor,
        grads: &mut ParamStore,
        want_input: bool,
    ) -> Result<Option<Tensor>> {
        if layers.len() != caches.len() {
            return Err(Error::invalid("forward cache", "does not match the layer graph"));
        }
        for (i, (layer, cache)) in layers.iter().zip(caches).enumerate().rev() {
            // Nothing upstream of the first layer needs a gradient unless asked.
            let need_input = want_input || i > 0;
            grad = match (&layer.kind, cache) {
                (LayerKind::Conv3d(spec), LayerCache::Conv { input }) => {
                    let w = self.params.require(&layer.weight_key())?;
                    let g = kernels::conv3d_backward_select(input, w, spec, &grad, need_input)?;
                    accumulate(grads, &layer.weight_key(), &g.weights)?;
                    accumulate(grads, &layer.bias_key(), &g.bias)?;
                    match g.input {
                        Some(t) => t,
                        None => return Ok(None),
                    }
                }
                (LayerKind::MaxPool3d(_), LayerCache::Pool { input_shape, argmax }) => {
                    kernels::maxpool3d_backward(input_shape, argmax, &grad)?
                }
                (LayerKind::Relu, LayerCache::Relu { input }) => kernels::relu_backward(input, &grad)?,
                (LayerKind::Flatten, LayerCache::Flatten { shape }) => grad.reshape(shape)?,
                (LayerKind::Dense { .. }, LayerCache::Dense { input }) => {
                    let w = self.params.require(&layer.weight_key())?;
                    let g = kernels::dense_backward(input, w, &grad)?;
                    accumulate(grads, &layer.weight_key(), &g.weights)?;
                    accumulate(grads, &layer.bias_key(), &g.bias)?;
                    g.input
                }
                (LayerKind::Dropout { .. }, LayerCache::Dropout { mask }) => {
                    kernels::dropout_backward(mask, &grad)?
                }
                (LayerKind::ConcatGroup { branches }, LayerCache::Concat { branches: bc, channels }) => {
                    let pieces = kernels::split_channels(&grad, channels)?;
                    let mut total: Option<Tensor> = None;
                    for ((branch, bcache), piece) in branches.iter().zip(bc).zip(pieces) {
                        let g = self
                            .back(branch, bcache, piece, grads, need_input)?
                            .ok_or_else(|| Error::invalid("concat backward", "missing branch gradient"))?;
                        match &mut total {
                            Some(t) => t.add_scaled(&g, 1.0)?,
                            None => total = Some(g),
                        }
                    }
                    total.ok_or_else(|| Error::invalid("concat backward", "no branches"))?
                }
                (LayerKind::Softmax, LayerCache::Passthrough) => grad,
                _ => {
                    return Err(Error::invalid(
                        "forward cache",
                        format!("entry for `{}` has the wrong kind", layer.name),
                    ))
                }
            };
        }
        Ok(Some(grad))
    }

    /// Cross-entropy loss of one sample in evaluation mode.
    pub fn loss(&self, input: &Tensor, true_class: usize) -> Result<f64> {
        Ok(kernels::softmax_xent(&self.logits(input)?, true_class)?.loss)
    }
}

fn accumulate(grads: &mut ParamStore, key: &str, g: &Tensor) -> Result<()> {
    grads
        .get_mut(key)
        .ok_or_else(|| Error::invalid("gradient store", format!("missing `{key}`")))?
        .add_scaled(g, 1.0)
}
