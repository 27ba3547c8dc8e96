//! Shared oracles for the integration tests. Everything here is written
//! with plain index loops so it shares no code with the library kernels.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shotintent::classifiers::{Cnn1d, CnnConfig, LstmSeq, Network, TrainConfig};
use shotintent::nn::gradcheck::{central_difference, max_relative_error};
use shotintent::nn::tape::Tape;
use shotintent::nn::{Tensor, Var};
use shotintent::pose::ShotLabel;
use shotintent::preprocess::{pad_mask, ClipMeta, FeatureSeries, PaddedSeries};

/// `y[t][o] = b[o] + Σ_k Σ_c w[o][k][c] · x[t+k][c]`
pub fn naive_conv1d(x: &[Vec<f64>], w: &[Vec<Vec<f64>>], b: &[f64]) -> Vec<Vec<f64>> {
    let kernel = w[0].len();
    let out_t = x.len() + 1 - kernel;
    let mut y = vec![vec![0.0; w.len()]; out_t];
    for t in 0..out_t {
        for o in 0..w.len() {
            let mut acc = b[o];
            for k in 0..kernel {
                for c in 0..x[0].len() {
                    acc += w[o][k][c] * x[t + k][c];
                }
            }
            y[t][o] = acc;
        }
    }
    y
}

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Gate order i, f, g, o; rows of `w_ih`/`w_hh` are grouped by gate.
pub fn naive_lstm_cell(
    x: &[f64],
    h: &[f64],
    c: &[f64],
    w_ih: &[Vec<f64>],
    w_hh: &[Vec<f64>],
    bias: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = h.len();
    let pre = |r: usize| -> f64 {
        let mut acc = bias[r];
        for j in 0..x.len() {
            acc += w_ih[r][j] * x[j];
        }
        for j in 0..n {
            acc += w_hh[r][j] * h[j];
        }
        acc
    };
    let mut h_new = vec![0.0; n];
    let mut c_new = vec![0.0; n];
    for k in 0..n {
        let i = logistic(pre(k));
        let f = logistic(pre(n + k));
        let g = pre(2 * n + k).tanh();
        let o = logistic(pre(3 * n + k));
        c_new[k] = f * c[k] + i * g;
        h_new[k] = o * c_new[k].tanh();
    }
    (h_new, c_new)
}

/// Fraction of (positive, negative) pairs ranked correctly, ties worth
/// one half.
pub fn pair_count_auc(labels: &[ShotLabel], scores: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, li) in labels.iter().enumerate() {
        if !li.is_high() {
            continue;
        }
        for (j, lj) in labels.iter().enumerate() {
            if lj.is_high() {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

pub fn scan_motion_range(series: &FeatureSeries) -> Vec<f64> {
    (0..series.features())
        .map(|f| {
            let col: Vec<f64> = (0..series.steps()).map(|t| series.get(t, f)).collect();
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .collect()
}

pub fn random_padded(rng: &mut impl Rng, steps: usize, rows: usize, features: usize) -> PaddedSeries {
    let values = (0..steps * features).map(|_| rng.random_range(-1.0..1.0)).collect();
    let series = FeatureSeries::new(values, steps, features, ClipMeta::default()).unwrap();
    pad_mask(&series, rows).unwrap()
}

/// Random network plus a small labelled batch.
pub struct GradInstance<N> {
    pub net: N,
    pub batch: Vec<(PaddedSeries, ShotLabel)>,
}

pub fn cnn_instance(seed: u64) -> GradInstance<Cnn1d> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kernel = rng.random_range(2..=3);
    let pool = 2;
    let config = CnnConfig {
        features: rng.random_range(1..=3),
        kernel,
        channels1: rng.random_range(1..=3),
        channels2: rng.random_range(1..=3),
        pool,
    };
    let mut net = Cnn1d::new(config, &mut rng).unwrap();
    // nonzero biases so the check covers their gradients too
    for p in net.params_mut() {
        for v in p.data_mut() {
            *v += rng.random_range(-0.1..0.1);
        }
    }
    let rows = (kernel - 1) + pool * kernel + rng.random_range(0..4);
    let batch = (0..2)
        .map(|i| {
            let steps = rng.random_range(1..=rows);
            (random_padded(&mut rng, steps, rows, config.features), ShotLabel::from_index(i % 2))
        })
        .collect();
    GradInstance { net, batch }
}

pub fn lstm_instance(seed: u64) -> GradInstance<LstmSeq> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = rng.random_range(1..=3);
    let hidden = rng.random_range(1..=3);
    let mut net = LstmSeq::new(features, hidden, &mut rng);
    for p in net.params_mut() {
        for v in p.data_mut() {
            *v += rng.random_range(-0.1..0.1);
        }
    }
    let rows = rng.random_range(1..=5);
    let batch = (0..2)
        .map(|i| {
            let steps = rng.random_range(1..=rows);
            (random_padded(&mut rng, steps, rows, features), ShotLabel::from_index(i % 2))
        })
        .collect();
    GradInstance { net, batch }
}

/// Cross-entropy from the inference path, without the tape.
fn direct_loss<N: Network>(net: &N, batch: &[(PaddedSeries, ShotLabel)]) -> f64 {
    batch
        .iter()
        .map(|(x, label)| {
            let z = net.logits(x).unwrap();
            let m = z[0].max(z[1]);
            let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
            lse - z[label.index()]
        })
        .sum()
}

pub const FD_STEP: f64 = 1e-6;
pub const FD_FLOOR: f64 = 1e-5;

/// Largest relative error between tape gradients and central differences
/// of the summed batch loss.
pub fn gradient_error<N: Network>(inst: &GradInstance<N>) -> f64 {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inst.net.params().iter().map(|p| tape.param(p.clone())).collect();
    let losses: Vec<Var> = inst
        .batch
        .iter()
        .map(|(x, label)| {
            let z = inst.net.record(&mut tape, &vars, x).unwrap();
            tape.softmax_cross_entropy(z, label.index(), 1.0).unwrap()
        })
        .collect();
    let loss = tape.add_n(&losses).unwrap();
    let grads = tape.backward(loss).unwrap();
    let analytic: Vec<Tensor> = vars.iter().map(|&v| grads.wrt(&tape, v)).collect();

    let mut probe = inst.net.clone();
    let numeric = central_difference(
        |params| {
            probe.params_mut().clone_from_slice(params);
            direct_loss(&probe, &inst.batch)
        },
        inst.net.params(),
        FD_STEP,
    );
    max_relative_error(&analytic, &numeric, FD_FLOOR)
}

/// Small budget that still separates the synthetic classes.
pub fn quick_train_config(seed: u64) -> TrainConfig {
    let mut c = TrainConfig {
        max_epochs: 60,
        patience: 20,
        batch_size: 8,
        seed,
        ..TrainConfig::default()
    };
    c.adam.lr = 3e-3;
    c
}
