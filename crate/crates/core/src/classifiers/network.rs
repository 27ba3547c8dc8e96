//! The two sequence networks.
//!
//! CNN: Conv1D(k, F→C1) → ReLU → MaxPool(p) → Conv1D(k, C1→C2) → ReLU →
//! GlobalAvgPool → Dense(C2→2), run over the full padded input.
//!
//! LSTM: one cell unrolled over the valid steps only, Dense(H→2) on the
//! last hidden state. Padding rows are never read.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::kernels::{self, lstm_step, LstmParams};
use crate::nn::layers::{check_stack, init_params, ActShape};
use crate::nn::{LayerSpec, NnError, Tape, Tensor, Var};
use crate::preprocess::PaddedSeries;

/// Shortest input for which conv → pool → conv leaves at least one step.
pub(crate) fn cnn_min_rows(kernel: usize, pool: usize) -> usize {
    (kernel - 1) + pool * kernel
}

/// Common interface used by the trainer.
pub trait Network: Clone + Send + Sync {
    fn params(&self) -> &[Tensor];
    fn params_mut(&mut self) -> &mut [Tensor];
    fn features(&self) -> usize;
    /// Shortest padded input the network accepts.
    fn min_rows(&self) -> usize;
    fn layers(&self) -> Vec<LayerSpec>;
    /// Records the forward pass; `params` are the tape leaves matching
    /// [`Network::params`]. Returns the 2-class logits node.
    fn record(&self, tape: &mut Tape, params: &[Var], input: &PaddedSeries) -> Result<Var, NnError>;
    /// Inference path built from the same kernels as [`Network::record`].
    fn logits(&self, input: &PaddedSeries) -> Result<[f64; 2], NnError>;

    fn probability_high(&self, input: &PaddedSeries) -> Result<f64, NnError> {
        let z = self.logits(input)?;
        Ok(crate::nn::tape::softmax(&z)[1])
    }
}

fn input_tensor(input: &PaddedSeries) -> Tensor {
    Tensor::new(vec![input.rows(), input.features()], input.values().to_vec()).expect("padded shape")
}

fn check_features(expected: usize, input: &PaddedSeries) -> Result<(), NnError> {
    if input.features() != expected {
        return Err(NnError::ShapeMismatch {
            op: "network input",
            detail: format!("{} features, expected {expected}", input.features()),
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub features: usize,
    pub kernel: usize,
    pub channels1: usize,
    pub channels2: usize,
    pub pool: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cnn1d {
    config: CnnConfig,
    params: Vec<Tensor>,
}

impl Cnn1d {
    pub fn new(config: CnnConfig, rng: &mut impl Rng) -> Result<Self, NnError> {
        let mut net = Cnn1d { config, params: vec![] };
        check_stack(
            &net.layers(),
            ActShape::Seq {
                steps: net.min_rows(),
                channels: config.features,
            },
        )?;
        net.params = net.layers().iter().flat_map(|l| init_params(l, rng)).collect();
        Ok(net)
    }

    pub fn from_params(config: CnnConfig, params: Vec<Tensor>) -> Result<Self, NnError> {
        let net = Cnn1d { config, params };
        let want: Vec<Vec<usize>> = net.layers().iter().flat_map(|l| l.param_shapes()).collect();
        let got: Vec<Vec<usize>> = net.params.iter().map(|p| p.shape().to_vec()).collect();
        if want != got {
            return Err(NnError::ShapeMismatch {
                op: "cnn1d params",
                detail: format!("expected {want:?}, got {got:?}"),
            });
        }
        Ok(net)
    }

    pub fn config(&self) -> CnnConfig {
        self.config
    }
}

impl Network for Cnn1d {
    fn params(&self) -> &[Tensor] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    fn features(&self) -> usize {
        self.config.features
    }

    fn min_rows(&self) -> usize {
        cnn_min_rows(self.config.kernel, self.config.pool)
    }

    fn layers(&self) -> Vec<LayerSpec> {
        let c = self.config;
        vec![
            LayerSpec::Conv1D {
                kernel: c.kernel,
                in_ch: c.features,
                out_ch: c.channels1,
            },
            LayerSpec::ReLU,
            LayerSpec::MaxPool1D { width: c.pool },
            LayerSpec::Conv1D {
                kernel: c.kernel,
                in_ch: c.channels1,
                out_ch: c.channels2,
            },
            LayerSpec::ReLU,
            LayerSpec::GlobalAvgPool,
            LayerSpec::Dense {
                input: c.channels2,
                output: 2,
            },
        ]
    }

    fn record(&self, tape: &mut Tape, p: &[Var], input: &PaddedSeries) -> Result<Var, NnError> {
        check_features(self.config.features, input)?;
        let x = tape.constant(input_tensor(input));
        let h = tape.conv1d(x, p[0], p[1])?;
        let h = tape.relu(h);
        let h = tape.max_pool1d(h, self.config.pool)?;
        let h = tape.conv1d(h, p[2], p[3])?;
        let h = tape.relu(h);
        let h = tape.global_avg_pool(h)?;
        tape.dense(h, p[4], p[5])
    }

    fn logits(&self, input: &PaddedSeries) -> Result<[f64; 2], NnError> {
        check_features(self.config.features, input)?;
        let p = &self.params;
        let x = input_tensor(input);
        let h = kernels::relu_forward(&kernels::conv1d_forward(&x, &p[0], &p[1])?);
        let (h, _) = kernels::max_pool1d_forward(&h, self.config.pool)?;
        let h = kernels::relu_forward(&kernels::conv1d_forward(&h, &p[2], &p[3])?);
        let h = kernels::global_avg_pool_forward(&h)?;
        let z = kernels::dense_forward(&h, &p[4], &p[5])?;
        Ok([z.data()[0], z.data()[1]])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmSeq {
    features: usize,
    hidden: usize,
    /// `[w_ih, w_hh, bias, dense_w, dense_b]`
    params: Vec<Tensor>,
}

impl LstmSeq {
    pub fn new(features: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut net = LstmSeq {
            features,
            hidden,
            params: vec![],
        };
        net.params = net.layers().iter().flat_map(|l| init_params(l, rng)).collect();
        net
    }

    pub fn from_params(features: usize, hidden: usize, params: Vec<Tensor>) -> Result<Self, NnError> {
        let net = LstmSeq {
            features,
            hidden,
            params,
        };
        let want: Vec<Vec<usize>> = net.layers().iter().flat_map(|l| l.param_shapes()).collect();
        let got: Vec<Vec<usize>> = net.params.iter().map(|p| p.shape().to_vec()).collect();
        if want != got {
            return Err(NnError::ShapeMismatch {
                op: "lstm params",
                detail: format!("expected {want:?}, got {got:?}"),
            });
        }
        Ok(net)
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn cell_params(&self) -> LstmParams {
        LstmParams {
            w_ih: self.params[0].clone(),
            w_hh: self.params[1].clone(),
            bias: self.params[2].clone(),
        }
    }
}

impl Network for LstmSeq {
    fn params(&self) -> &[Tensor] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    fn features(&self) -> usize {
        self.features
    }

    fn min_rows(&self) -> usize {
        1
    }

    fn layers(&self) -> Vec<LayerSpec> {
        vec![
            LayerSpec::LSTMCell {
                input: self.features,
                hidden: self.hidden,
            },
            LayerSpec::Dense {
                input: self.hidden,
                output: 2,
            },
        ]
    }

    fn record(&self, tape: &mut Tape, p: &[Var], input: &PaddedSeries) -> Result<Var, NnError> {
        check_features(self.features, input)?;
        let nf = self.features;
        let mut state = tape.constant(Tensor::zeros(&[2 * self.hidden]));
        for t in 0..input.valid_length() {
            let x = tape.constant(Tensor::vector(input.values()[t * nf..(t + 1) * nf].to_vec()));
            state = tape.lstm_cell(x, state, p[0], p[1], p[2])?;
        }
        let h = tape.slice(state, 0, self.hidden)?;
        tape.dense(h, p[3], p[4])
    }

    fn logits(&self, input: &PaddedSeries) -> Result<[f64; 2], NnError> {
        check_features(self.features, input)?;
        let nf = self.features;
        let p = &self.params;
        let mut h = vec![0.0; self.hidden];
        let mut c = vec![0.0; self.hidden];
        for t in 0..input.valid_length() {
            let step = lstm_step(&input.values()[t * nf..(t + 1) * nf], &h, &c, &p[0], &p[1], &p[2]);
            h = step.h;
            c = step.c;
        }
        let z = kernels::dense_forward(&Tensor::vector(h), &p[3], &p[4])?;
        Ok([z.data()[0], z.data()[1]])
    }
}
