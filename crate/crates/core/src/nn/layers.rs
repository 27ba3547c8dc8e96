//! Layer descriptions, shape composition and parameter initialisation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{shape_err, NnError, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerSpec {
    Conv1D { kernel: usize, in_ch: usize, out_ch: usize },
    ReLU,
    MaxPool1D { width: usize },
    GlobalAvgPool,
    Dense { input: usize, output: usize },
    /// Unrolled over the valid steps; emits the last hidden state.
    LSTMCell { input: usize, hidden: usize },
}

/// Shape flowing between layers: a `[T, C]` sequence or a flat vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActShape {
    Seq { steps: usize, channels: usize },
    Flat(usize),
}

impl LayerSpec {
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Conv1D { kernel, in_ch, out_ch } => vec![vec![out_ch, kernel, in_ch], vec![out_ch]],
            LayerSpec::Dense { input, output } => vec![vec![output, input], vec![output]],
            LayerSpec::LSTMCell { input, hidden } => {
                vec![vec![4 * hidden, input], vec![4 * hidden, hidden], vec![4 * hidden]]
            }
            LayerSpec::ReLU | LayerSpec::MaxPool1D { .. } | LayerSpec::GlobalAvgPool => vec![],
        }
    }

    pub fn output_shape(&self, input: ActShape) -> Result<ActShape, NnError> {
        let bad = || shape_err("layer stack", format!("{self:?} cannot take {input:?}"));
        match (*self, input) {
            (LayerSpec::Conv1D { kernel, in_ch, out_ch }, ActShape::Seq { steps, channels })
                if channels == in_ch && kernel >= 1 && kernel <= steps =>
            {
                Ok(ActShape::Seq {
                    steps: steps - kernel + 1,
                    channels: out_ch,
                })
            }
            (LayerSpec::ReLU, s) => Ok(s),
            (LayerSpec::MaxPool1D { width }, ActShape::Seq { steps, channels }) if width >= 1 && steps >= width => {
                Ok(ActShape::Seq {
                    steps: steps / width,
                    channels,
                })
            }
            (LayerSpec::GlobalAvgPool, ActShape::Seq { channels, .. }) => Ok(ActShape::Flat(channels)),
            (LayerSpec::Dense { input, output }, ActShape::Flat(n)) if n == input => Ok(ActShape::Flat(output)),
            (LayerSpec::LSTMCell { input, hidden }, ActShape::Seq { channels, .. }) if channels == input => {
                Ok(ActShape::Flat(hidden))
            }
            _ => Err(bad()),
        }
    }
}

/// Checks that adjacent layers compose and returns the final shape.
pub fn check_stack(layers: &[LayerSpec], input: ActShape) -> Result<ActShape, NnError> {
    layers.iter().try_fold(input, |s, l| l.output_shape(s))
}

/// Glorot-uniform weights; biases start at zero.
pub fn init_params(spec: &LayerSpec, rng: &mut impl Rng) -> Vec<Tensor> {
    spec.param_shapes()
        .into_iter()
        .map(|shape| {
            if shape.len() == 1 {
                return Tensor::zeros(&shape);
            }
            let fan_out = shape[0];
            let fan_in: usize = shape[1..].iter().product();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let n: usize = shape.iter().product();
            let data = (0..n).map(|_| rng.random_range(-limit..limit)).collect();
            Tensor::new(shape, data).expect("shape product")
        })
        .collect()
}
