use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::{Error, Result};

/// One affine layer; `weight` is `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }

    fn num_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

/// Feed-forward network: ReLU on hidden layers, identity on the output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Gradients with the same layout as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<Dense>,
}

/// Activations kept from a batched forward pass for backpropagation.
///
/// `activations[0]` is the input batch and `activations[l + 1]` the output
/// of layer `l` after its nonlinearity.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("cache always holds the input")
    }

    pub fn into_output(mut self) -> Array2<f64> {
        self.activations.pop().expect("cache always holds the input")
    }
}

impl Mlp {
    /// He-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        for layer in &mut net.layers {
            let limit = (6.0 / layer.in_dim() as f64).sqrt();
            layer.weight.mapv_inplace(|_| rng.gen_range(-limit..limit));
        }
        net
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least input and output sizes");
        Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("layer list"));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::DimensionMismatch {
                    expected: pair[0].out_dim(),
                    got: pair[1].in_dim(),
                });
            }
        }
        for l in &layers {
            if l.bias.len() != l.out_dim() {
                return Err(Error::DimensionMismatch { expected: l.out_dim(), got: l.bias.len() });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.in_dim())
            .chain(self.layers.iter().map(Dense::out_dim))
            .collect()
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, Dense::out_dim)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Dense::num_params).sum()
    }

    /// Flat parameter access: each layer contributes its weights (row-major)
    /// followed by its biases.
    pub fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for layer in &mut self.layers {
            let nw = layer.weight.len();
            if index < nw {
                let cols = layer.weight.ncols();
                return &mut layer.weight[(index / cols, index % cols)];
            }
            index -= nw;
            if index < layer.bias.len() {
                return &mut layer.bias[index];
            }
            index -= layer.bias.len();
        }
        panic!("parameter index out of range");
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            layers: self.layers.iter().map(|l| Dense::zeros(l.in_dim(), l.out_dim())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let x = ArrayView2::from_shape((1, input.len()), input).expect("contiguous row");
        Ok(self.forward_batch(x)?.into_output().into_raw_vec_and_offset().0)
    }

    /// Runs a batch (`rows x in_dim`) through the network.
    pub fn forward_batch(&self, input: ArrayView2<f64>) -> Result<ForwardCache> {
        if input.ncols() != self.in_dim() {
            return Err(Error::DimensionMismatch { expected: self.in_dim(), got: input.ncols() });
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_owned());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let prev = &activations[l];
            let mut out = Array2::zeros((prev.nrows(), layer.out_dim()));
            general_mat_mul(1.0, prev, &layer.weight.t(), 0.0, &mut out);
            out += &layer.bias;
            if l != last {
                out.mapv_inplace(|v| v.max(0.0));
            }
            activations.push(out);
        }
        Ok(ForwardCache { activations })
    }

    /// Accumulates parameter gradients of `sum(output * grad_output)` into
    /// `grads` and returns the gradient with respect to the input batch.
    pub fn backward_batch(
        &self,
        cache: &ForwardCache,
        grad_output: ArrayView2<f64>,
        grads: &mut MlpGrads,
    ) -> Result<Array2<f64>> {
        let out = cache.output();
        if grad_output.dim() != out.dim() {
            return Err(Error::DimensionMismatch { expected: out.len(), got: grad_output.len() });
        }
        let last = self.layers.len() - 1;
        let mut g = grad_output.to_owned();
        for l in (0..self.layers.len()).rev() {
            if l != last {
                // ReLU passes gradient only where the unit was active.
                ndarray::Zip::from(&mut g)
                    .and(&cache.activations[l + 1])
                    .for_each(|gv, &a| {
                        if a <= 0.0 {
                            *gv = 0.0;
                        }
                    });
            }
            let layer = &self.layers[l];
            let acc = &mut grads.layers[l];
            general_mat_mul(1.0, &g.t(), &cache.activations[l], 1.0, &mut acc.weight);
            acc.bias += &g.sum_axis(Axis(0));
            let mut next = Array2::zeros((g.nrows(), layer.in_dim()));
            general_mat_mul(1.0, &g, &layer.weight, 0.0, &mut next);
            g = next;
        }
        Ok(g)
    }

    /// Single-sample reverse pass: gradients of `output · upstream` with
    /// respect to all parameters and the input.
    pub fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<(MlpGrads, Vec<f64>)> {
        if upstream.len() != self.out_dim() {
            return Err(Error::DimensionMismatch { expected: self.out_dim(), got: upstream.len() });
        }
        let x = ArrayView2::from_shape((1, input.len()), input).expect("contiguous row");
        let cache = self.forward_batch(x)?;
        let up = ArrayView2::from_shape((1, upstream.len()), upstream).expect("contiguous row");
        let mut grads = self.zero_grads();
        let gin = self.backward_batch(&cache, up, &mut grads)?;
        Ok((grads, gin.into_raw_vec_and_offset().0))
    }
}

impl MlpGrads {
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| *v == 0.0))
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weight *= s;
            l.bias *= s;
        }
    }
}
