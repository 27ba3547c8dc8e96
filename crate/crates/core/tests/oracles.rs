mod common;

use common::{naive_conv1d, naive_lstm_cell, pair_count_auc, scan_motion_range};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use shotintent::classifiers::motion_range_features;
use shotintent::metrics::auc_roc;
use shotintent::nn::kernels::{conv1d_forward, lstm_cell_forward, LstmParams};
use shotintent::nn::Tensor;
use shotintent::pose::ShotLabel;
use shotintent::preprocess::{ClipMeta, FeatureSeries};

fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0x0dd5),
        failure_persistence: None,
        ..Config::default()
    }
}

fn flat<const N: usize>(v: &[[f64; N]]) -> Vec<f64> {
    v.iter().flatten().copied().collect()
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-2.0..2.0f64, cols), rows)
}

fn conv_case() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>, Vec<f64>)> {
    (1usize..5, 1usize..5, 1usize..4, 0usize..6).prop_flat_map(|(in_ch, out_ch, kernel, extra)| {
        (
            matrix(kernel + extra, in_ch),
            prop::collection::vec(matrix(kernel, in_ch), out_ch),
            prop::collection::vec(-1.0..1.0f64, out_ch),
        )
    })
}

fn lstm_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..5, 1usize..5).prop_flat_map(|(inp, hidden)| {
        (
            prop::collection::vec(-2.0..2.0f64, inp),
            prop::collection::vec(-1.0..1.0f64, hidden),
            prop::collection::vec(-2.0..2.0f64, hidden),
            matrix(4 * hidden, inp),
            matrix(4 * hidden, hidden),
            prop::collection::vec(-1.0..1.0f64, 4 * hidden),
        )
    })
}

/// Labels with both classes present, scores drawn from a small grid so
/// ties are common.
fn scored_labels() -> impl Strategy<Value = (Vec<ShotLabel>, Vec<f64>)> {
    (2usize..40)
        .prop_flat_map(|n| (prop::collection::vec(any::<bool>(), n), prop::collection::vec(0u8..8, n)))
        .prop_filter("both classes", |(l, _)| l.iter().any(|&b| b) && l.iter().any(|&b| !b))
        .prop_map(|(l, s)| {
            let labels = l.into_iter().map(|b| if b { ShotLabel::High } else { ShotLabel::Low }).collect();
            (labels, s.into_iter().map(|v| v as f64 / 7.0).collect())
        })
}

fn to_tensor(m: &[Vec<f64>]) -> Tensor {
    Tensor::new(vec![m.len(), m[0].len()], m.concat()).unwrap()
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn auc_equals_pair_counting((labels, scores) in scored_labels()) {
        prop_assert_eq!(auc_roc(&labels, &scores).unwrap(), pair_count_auc(&labels, &scores));
    }

    #[test]
    fn conv1d_matches_scalar_loops((x, w, b) in conv_case()) {
        let (out_ch, kernel, in_ch) = (w.len(), w[0].len(), w[0][0].len());
        let wt = Tensor::new(vec![out_ch, kernel, in_ch], w.iter().flatten().flatten().copied().collect()).unwrap();
        let y = conv1d_forward(&to_tensor(&x), &wt, &Tensor::vector(b.clone())).unwrap();
        let expect = naive_conv1d(&x, &w, &b);
        prop_assert_eq!(y.shape(), &[expect.len(), out_ch][..]);
        for (a, e) in y.data().iter().zip(expect.concat()) {
            prop_assert!((a - e).abs() < 1e-12, "{} vs {}", a, e);
        }
    }

    #[test]
    fn lstm_cell_matches_scalar_loops((x, h, c, w_ih, w_hh, bias) in lstm_case()) {
        let params = LstmParams {
            w_ih: to_tensor(&w_ih),
            w_hh: to_tensor(&w_hh),
            bias: Tensor::vector(bias.clone()),
        };
        let (h1, c1) = lstm_cell_forward(
            &Tensor::vector(x.clone()),
            &Tensor::vector(h.clone()),
            &Tensor::vector(c.clone()),
            &params,
        )
        .unwrap();
        let (he, ce) = naive_lstm_cell(&x, &h, &c, &w_ih, &w_hh, &bias);
        for (a, e) in h1.data().iter().chain(c1.data()).zip(he.iter().chain(&ce)) {
            prop_assert!((a - e).abs() < 1e-12, "{} vs {}", a, e);
        }
    }

    #[test]
    fn motion_range_matches_scan(steps in 1usize..30, features in 1usize..6, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values = (0..steps * features).map(|_| rng.random_range(-3.0..3.0)).collect();
        let s = FeatureSeries::new(values, steps, features, ClipMeta::default()).unwrap();
        prop_assert_eq!(motion_range_features(&s), scan_motion_range(&s));
    }
}

#[test]
fn oracles_agree_on_a_hand_worked_case() {
    // two steps, one channel, kernel 2: y = 0.5 + 1·1 + 2·3
    let y = naive_conv1d(&[vec![1.0], vec![3.0]], &[vec![vec![1.0], vec![2.0]]], &[0.5]);
    assert_eq!(y, vec![vec![7.5]]);
    let auc = pair_count_auc(&[ShotLabel::High, ShotLabel::Low, ShotLabel::Low], &[0.5, 0.5, 0.1]);
    assert_eq!(auc, 0.75);
    let s = FeatureSeries::new(flat(&[[1.0, -1.0], [4.0, 0.0], [2.0, -3.0]]), 3, 2, ClipMeta::default()).unwrap();
    assert_eq!(scan_motion_range(&s), vec![3.0, 3.0]);
}
