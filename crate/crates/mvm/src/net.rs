//! Minimal dense feed-forward networks with exact reverse-mode gradients.
//!
//! Both generators in the training loop (the data generator and the metric
//! embedding) are instances of [`DenseNetwork`]. Parameters live in a fixed
//! canonical order — per layer, weight rows then bias — so optimizers and
//! checkpoints can treat a network as one flat vector.

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Elementwise nonlinearity applied after each affine layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu(f64),
    Sigmoid,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(s) => {
                if z > 0.0 {
                    z
                } else {
                    s * z
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
        }
    }

    // Derivative at z; `a` is the cached activation value, which makes the
    // sigmoid/tanh cases cheap. At the relu-family kink z = 0 the
    // negative-branch slope is used.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(s) => {
                if z > 0.0 {
                    1.0
                } else {
                    s
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
        }
    }

    /// True for activations with a slope discontinuity at zero.
    pub fn has_kink(self) -> bool {
        matches!(self, Activation::Relu | Activation::LeakyRelu(_))
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Activation::Identity => write!(f, "identity"),
            Activation::Relu => write!(f, "relu"),
            Activation::LeakyRelu(s) => write!(f, "leaky_relu({s})"),
            Activation::Sigmoid => write!(f, "sigmoid"),
            Activation::Tanh => write!(f, "tanh"),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Activation::Identity),
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            _ => {
                if let Some(inner) = s
                    .strip_prefix("leaky_relu(")
                    .and_then(|r| r.strip_suffix(')'))
                {
                    let slope: f64 = inner
                        .parse()
                        .map_err(|_| Error::invalid("activation", format!("bad slope in {s:?}")))?;
                    Ok(Activation::LeakyRelu(slope))
                } else {
                    Err(Error::invalid("activation", format!("unknown {s:?}")))
                }
            }
        }
    }
}

/// Shape and nonlinearity of one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        Self {
            input_dim,
            output_dim,
            activation,
        }
    }
}

/// One affine layer: `a = φ(W x + b)` with `W` stored row-major (out × in).
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn input_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    fn output_dim(&self) -> usize {
        self.weights.len()
    }

    fn validate(&self) -> Result<()> {
        if self.weights.is_empty() || self.input_dim() == 0 {
            return Err(Error::invalid("layer", "zero-sized weight matrix"));
        }
        let in_dim = self.input_dim();
        for row in &self.weights {
            if row.len() != in_dim {
                return Err(Error::invalid("layer", "ragged weight matrix"));
            }
            if row.iter().any(|w| !w.is_finite()) {
                return Err(Error::NonFinite("layer weights"));
            }
        }
        if self.bias.len() != self.output_dim() {
            return Err(Error::DimensionMismatch(self.bias.len(), self.output_dim()));
        }
        if self.bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("layer bias"));
        }
        if let Activation::LeakyRelu(s) = self.activation {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::invalid("layer", format!("leaky slope {s} not in (0,1)")));
            }
        }
        Ok(())
    }
}

/// Feed-forward network of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNetwork {
    layers: Vec<Layer>,
}

/// Intermediate values of one forward pass, consumed by [`DenseNetwork::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    // activations[0] is the input; activations[l] the output of layer l.
    activations: Vec<Vec<f64>>,
    preactivations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("cache has at least the input")
    }
}

impl DenseNetwork {
    /// Builds a network from explicit layers, validating dimension chaining
    /// and finiteness.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network", "no layers"));
        }
        for layer in &layers {
            layer.validate()?;
        }
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::DimensionMismatch(
                    pair[0].output_dim(),
                    pair[1].input_dim(),
                ));
            }
        }
        Ok(Self { layers })
    }

    /// He-scaled Gaussian weights (std `√(2/fan_in)`), zero biases,
    /// deterministic under the seed.
    pub fn init(spec: &[LayerSpec], seed: u64) -> Result<Self> {
        if spec.is_empty() {
            return Err(Error::invalid("network", "no layers"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(spec.len());
        for ls in spec {
            if ls.input_dim == 0 || ls.output_dim == 0 {
                return Err(Error::invalid("network", "zero layer dimension"));
            }
            let std = (2.0 / ls.input_dim as f64).sqrt();
            let normal = Normal::new(0.0, std)
                .map_err(|e| Error::invalid("network", e.to_string()))?;
            let weights = (0..ls.output_dim)
                .map(|_| (0..ls.input_dim).map(|_| normal.sample(&mut rng)).collect())
                .collect();
            layers.push(Layer {
                weights,
                bias: vec![0.0; ls.output_dim],
                activation: ls.activation,
            });
        }
        Self::from_layers(layers)
    }

    /// Single identity layer (`W = I`, `b = 0`): embeds a space into itself.
    pub fn identity(dim: usize) -> Self {
        let weights = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            layers: vec![Layer {
                weights,
                bias: vec![0.0; dim],
                activation: Activation::Identity,
            }],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").output_dim()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        self.layers
            .iter()
            .map(|l| LayerSpec::new(l.input_dim(), l.output_dim(), l.activation))
            .collect()
    }

    /// Evaluates the network on one point.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(input.len(), self.input_dim()));
        }
        let mut a = input.to_vec();
        for layer in &self.layers {
            a = affine_activate(layer, &a).0;
        }
        Ok(a)
    }

    /// Forward pass that keeps every intermediate needed for [`Self::backward`].
    pub fn forward_cached(&self, input: &[f64]) -> Result<ForwardCache> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(input.len(), self.input_dim()));
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut preactivations = Vec::with_capacity(self.layers.len());
        activations.push(input.to_vec());
        for layer in &self.layers {
            let (a, z) = affine_activate(layer, activations.last().unwrap());
            preactivations.push(z);
            activations.push(a);
        }
        Ok(ForwardCache {
            activations,
            preactivations,
        })
    }

    /// Exact reverse-mode gradients for one point.
    ///
    /// Returns the gradient with respect to every parameter (canonical flat
    /// order) and with respect to the input.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut param_grads = vec![0.0; self.param_count()];
        let input_grads = self.backward_accumulate(cache, output_grad, &mut param_grads)?;
        Ok((param_grads, input_grads))
    }

    /// Like [`Self::backward`] but adds parameter gradients into `acc`,
    /// which lets callers sum over a batch without reallocating.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
        acc: &mut [f64],
    ) -> Result<Vec<f64>> {
        if output_grad.len() != self.output_dim() {
            return Err(Error::DimensionMismatch(output_grad.len(), self.output_dim()));
        }
        if acc.len() != self.param_count() {
            return Err(Error::DimensionMismatch(acc.len(), self.param_count()));
        }
        // Offsets of each layer's block in the flat parameter vector.
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for layer in &self.layers {
            offsets.push(off);
            off += layer.output_dim() * layer.input_dim() + layer.output_dim();
        }

        let mut delta = output_grad.to_vec();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let z = &cache.preactivations[l];
            let a_out = &cache.activations[l + 1];
            let a_in = &cache.activations[l];
            let in_dim = layer.input_dim();
            // delta_z = delta ⊙ φ'(z)
            let delta_z: Vec<f64> = delta
                .iter()
                .zip(z.iter().zip(a_out))
                .map(|(d, (&zi, &ai))| d * layer.activation.derivative(zi, ai))
                .collect();
            let base = offsets[l];
            for (i, &dz) in delta_z.iter().enumerate() {
                let row = base + i * in_dim;
                for (j, &aj) in a_in.iter().enumerate() {
                    acc[row + j] += dz * aj;
                }
                acc[base + layer.output_dim() * in_dim + i] += dz;
            }
            // propagate: delta = Wᵀ delta_z
            let mut next = vec![0.0; in_dim];
            for (i, &dz) in delta_z.iter().enumerate() {
                for (j, slot) in next.iter_mut().enumerate() {
                    *slot += layer.weights[i][j] * dz;
                }
            }
            delta = next;
        }
        Ok(delta)
    }

    /// Gradient with respect to the input only, skipping parameter
    /// gradients. Used when a loss flows through this network into an
    /// upstream one whose parameters are the ones being updated.
    pub fn input_gradient(&self, cache: &ForwardCache, output_grad: &[f64]) -> Result<Vec<f64>> {
        if output_grad.len() != self.output_dim() {
            return Err(Error::DimensionMismatch(output_grad.len(), self.output_dim()));
        }
        let mut delta = output_grad.to_vec();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let z = &cache.preactivations[l];
            let a_out = &cache.activations[l + 1];
            let delta_z: Vec<f64> = delta
                .iter()
                .zip(z.iter().zip(a_out))
                .map(|(d, (&zi, &ai))| d * layer.activation.derivative(zi, ai))
                .collect();
            let mut next = vec![0.0; layer.input_dim()];
            for (i, &dz) in delta_z.iter().enumerate() {
                for (j, slot) in next.iter_mut().enumerate() {
                    *slot += layer.weights[i][j] * dz;
                }
            }
            delta = next;
        }
        Ok(delta)
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.output_dim() * l.input_dim() + l.output_dim())
            .sum()
    }

    /// Flattens all parameters in canonical order.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            for row in &layer.weights {
                out.extend_from_slice(row);
            }
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    /// Writes a flat parameter vector back into the layers.
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch(params.len(), self.param_count()));
        }
        let mut it = params.iter();
        for layer in &mut self.layers {
            for row in &mut layer.weights {
                for w in row.iter_mut() {
                    *w = *it.next().unwrap();
                }
            }
            for b in layer.bias.iter_mut() {
                *b = *it.next().unwrap();
            }
        }
        Ok(())
    }

    /// True when any relu-family pre-activation in the cache sits within
    /// `tol` of its kink; finite-difference checks skip such configurations.
    pub fn cache_near_kink(&self, cache: &ForwardCache, tol: f64) -> bool {
        self.layers.iter().enumerate().any(|(l, layer)| {
            layer.activation.has_kink()
                && cache.preactivations[l].iter().any(|z| z.abs() < tol)
        })
    }
}

// Returns (activation, preactivation) of one layer.
fn affine_activate(layer: &Layer, input: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut z = layer.bias.clone();
    for (zi, row) in z.iter_mut().zip(&layer.weights) {
        let mut acc = 0.0;
        for (w, x) in row.iter().zip(input) {
            acc += w * x;
        }
        *zi += acc;
    }
    let a = z.iter().map(|&v| layer.activation.apply(v)).collect();
    (a, z)
}
