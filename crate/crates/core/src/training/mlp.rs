//! Fully connected network with tanh hidden activations and a linear output,
//! differentiated by hand.

use crate::error::{Result, VqError};
use crate::numerics::{gaussian_sample, Matrix, RngStream};

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    /// `fan_in x fan_out`
    pub weight: Matrix,
    /// `1 x fan_out`
    pub bias: Matrix,
}

impl Dense {
    /// Weights `N(0, 1/fan_in)`, zero bias.
    pub fn init(rng: &mut RngStream, fan_in: usize, fan_out: usize) -> Result<Self> {
        let std = (1.0 / fan_in as f64).sqrt();
        Ok(Self {
            weight: gaussian_sample(rng, fan_in, fan_out, 0.0, std)?,
            bias: Matrix::zeros(1, fan_out),
        })
    }

    pub fn fan_in(&self) -> usize {
        self.weight.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.cols()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations recorded by [`Mlp::forward`]: the input to every layer.
#[derive(Clone, Debug)]
pub struct MlpCache {
    inputs: Vec<Matrix>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseGrads {
    pub weight: Matrix,
    pub bias: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<DenseGrads>,
}

impl Mlp {
    /// `widths = [input, hidden.., output]`.
    pub fn init(rng: &mut RngStream, widths: &[usize]) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(VqError::InvalidArgument(format!(
                "an MLP needs at least two positive widths, got {widths:?}"
            )));
        }
        let layers = widths
            .windows(2)
            .map(|w| Dense::init(rng, w[0], w[1]))
            .collect::<Result<_>>()?;
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(VqError::InvalidArgument(
                "an MLP needs at least one layer".into(),
            ));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].fan_out() != pair[1].fan_in() {
                return Err(VqError::dims(
                    "Mlp::from_layers",
                    format!(
                        "layer {i} emits {} features, layer {} expects {}",
                        pair[0].fan_out(),
                        i + 1,
                        pair[1].fan_in()
                    ),
                ));
            }
        }
        for l in &layers {
            if l.bias.shape() != (1, l.fan_out()) {
                return Err(VqError::dims(
                    "Mlp::from_layers",
                    "bias must be 1 x fan_out",
                ));
            }
        }
        Ok(Self { layers })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out()
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, MlpCache)> {
        if x.cols() != self.input_width() {
            return Err(VqError::dims(
                "mlp_forward",
                format!(
                    "input has {} features, network expects {}",
                    x.cols(),
                    self.input_width()
                ),
            ));
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut pre = h.matmul(&layer.weight)?;
            for r in 0..pre.rows() {
                for (v, &b) in pre.row_mut(r).iter_mut().zip(layer.bias.as_slice()) {
                    *v += b;
                }
            }
            inputs.push(h);
            h = if i == last { pre } else { pre.map(f64::tanh) };
        }
        Ok((h, MlpCache { inputs }))
    }

    /// Forward pass without keeping activations.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.forward(x).map(|(y, _)| y)
    }

    /// Back-propagates `d_out` (gradient on the output). Returns parameter
    /// gradients and the gradient on the input.
    pub fn backward(&self, cache: &MlpCache, d_out: &Matrix) -> Result<(MlpGrads, Matrix)> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = d_out.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[i];
            let weight = input.t_matmul(&delta)?;
            let mut bias = Matrix::zeros(1, layer.fan_out());
            for r in delta.row_iter() {
                for (b, &v) in bias.as_mut_slice().iter_mut().zip(r) {
                    *b += v;
                }
            }
            grads.push(DenseGrads { weight, bias });
            let mut d_in = delta.matmul_t(&layer.weight)?;
            if i > 0 {
                // input to layer i is tanh of the previous pre-activation
                d_in = d_in.zip_map(input, "tanh backward", |g, a| g * (1.0 - a * a))?;
            }
            delta = d_in;
        }
        grads.reverse();
        Ok((MlpGrads { layers: grads }, delta))
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.is_finite() && l.bias.is_finite())
    }

    /// Mutable views over all parameter tensors, in a fixed order.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Matrix> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
    }
}

impl MlpGrads {
    pub fn tensors(&self) -> impl Iterator<Item = &Matrix> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias])
    }
}

/// Encoder/decoder pair.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub encoder: Mlp,
    pub decoder: Mlp,
}

impl MlpParams {
    /// Encoder `input -> hidden -> hidden -> latent`, decoder mirrored.
    pub fn init(
        rng: &mut RngStream,
        input: usize,
        hidden: usize,
        latent_in: usize,
        latent_out: usize,
    ) -> Result<Self> {
        Ok(Self {
            encoder: Mlp::init(rng, &[input, hidden, hidden, latent_in])?,
            decoder: Mlp::init(rng, &[latent_out, hidden, hidden, input])?,
        })
    }
}

/// Forward pass through the encoder, returning `z_e` and the activation cache.
pub fn mlp_forward(params: &MlpParams, x: &Matrix) -> Result<(Matrix, MlpCache)> {
    params.encoder.forward(x)
}
