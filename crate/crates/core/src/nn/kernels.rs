//! Forward and backward kernels shared by the tape and the inference path.
//!
//! Layouts: sequences are `[T, C]` row-major; conv weights `[O, K, C]`;
//! dense weights `[O, I]`; LSTM gate blocks are stacked as
//! input, forget, candidate, output.

use super::{shape_err, NnError, Tensor};

/// Dot product with four independent accumulators.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in 4 * chunks..a.len() {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) struct ConvDims {
    pub steps: usize,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
}

impl ConvDims {
    pub fn out_steps(&self) -> usize {
        self.steps - self.kernel + 1
    }
}

pub(crate) fn conv_dims(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<ConvDims, NnError> {
    let (&[steps, in_ch], &[out_ch, kernel, w_in]) = (input.shape(), weight.shape()) else {
        return Err(shape_err(
            "conv1d",
            format!("input {:?}, weight {:?}", input.shape(), weight.shape()),
        ));
    };
    if w_in != in_ch || bias.shape() != [out_ch] || kernel == 0 || kernel > steps {
        return Err(shape_err(
            "conv1d",
            format!(
                "input {:?}, weight {:?}, bias {:?}",
                input.shape(),
                weight.shape(),
                bias.shape()
            ),
        ));
    }
    Ok(ConvDims {
        steps,
        in_ch,
        out_ch,
        kernel,
    })
}

/// Valid-mode temporal convolution: every output step sees all input
/// channels across a `K`-step window.
pub fn conv1d_forward(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor, NnError> {
    let d = conv_dims(input, weight, bias)?;
    let span = d.kernel * d.in_ch;
    let (x, w, b) = (input.data(), weight.data(), bias.data());
    let out_t = d.out_steps();
    let mut y = vec![0.0; out_t * d.out_ch];
    for t in 0..out_t {
        let window = &x[t * d.in_ch..t * d.in_ch + span];
        let row = &mut y[t * d.out_ch..(t + 1) * d.out_ch];
        for (o, out) in row.iter_mut().enumerate() {
            *out = b[o] + dot(window, &w[o * span..(o + 1) * span]);
        }
    }
    Tensor::new(vec![out_t, d.out_ch], y)
}

pub(crate) fn conv1d_backward(
    d: &ConvDims,
    x: &[f64],
    w: &[f64],
    gy: &[f64],
    mut dx: Option<&mut [f64]>,
    mut dw: Option<&mut [f64]>,
    mut db: Option<&mut [f64]>,
) {
    let span = d.kernel * d.in_ch;
    for t in 0..d.out_steps() {
        let base = t * d.in_ch;
        for o in 0..d.out_ch {
            let g = gy[t * d.out_ch + o];
            if g == 0.0 {
                continue;
            }
            if let Some(db) = db.as_deref_mut() {
                db[o] += g;
            }
            if let Some(dw) = dw.as_deref_mut() {
                axpy(g, &x[base..base + span], &mut dw[o * span..(o + 1) * span]);
            }
            if let Some(dx) = dx.as_deref_mut() {
                axpy(g, &w[o * span..(o + 1) * span], &mut dx[base..base + span]);
            }
        }
    }
}

pub fn dense_forward(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor, NnError> {
    let &[out, inp] = weight.shape() else {
        return Err(shape_err("dense", format!("weight {:?}", weight.shape())));
    };
    if input.len() != inp || bias.shape() != [out] {
        return Err(shape_err(
            "dense",
            format!("input {:?}, weight {:?}, bias {:?}", input.shape(), weight.shape(), bias.shape()),
        ));
    }
    let (x, w, b) = (input.data(), weight.data(), bias.data());
    let y = (0..out).map(|o| b[o] + dot(x, &w[o * inp..(o + 1) * inp])).collect();
    Ok(Tensor::vector(y))
}

pub(crate) fn dense_backward(
    x: &[f64],
    w: &[f64],
    gy: &[f64],
    dx: Option<&mut [f64]>,
    dw: Option<&mut [f64]>,
    db: Option<&mut [f64]>,
) {
    let inp = x.len();
    if let Some(db) = db {
        for (d, g) in db.iter_mut().zip(gy) {
            *d += g;
        }
    }
    if let Some(dw) = dw {
        for (o, &g) in gy.iter().enumerate() {
            axpy(g, x, &mut dw[o * inp..(o + 1) * inp]);
        }
    }
    if let Some(dx) = dx {
        for (o, &g) in gy.iter().enumerate() {
            axpy(g, &w[o * inp..(o + 1) * inp], dx);
        }
    }
}

pub fn relu_forward(input: &Tensor) -> Tensor {
    let data = input.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::new(input.shape().to_vec(), data).expect("same shape")
}

/// Non-overlapping max pooling over time; trailing steps that do not fill
/// a window are dropped. Returns the winning input index per output.
pub fn max_pool1d_forward(input: &Tensor, width: usize) -> Result<(Tensor, Vec<usize>), NnError> {
    let &[steps, ch] = input.shape() else {
        return Err(shape_err("max_pool1d", format!("input {:?}", input.shape())));
    };
    if width == 0 || steps < width {
        return Err(shape_err("max_pool1d", format!("{steps} steps, width {width}")));
    }
    let out_t = steps / width;
    let x = input.data();
    let mut y = vec![0.0; out_t * ch];
    let mut arg = vec![0usize; out_t * ch];
    for t in 0..out_t {
        for c in 0..ch {
            let mut best = (t * width) * ch + c;
            for j in 1..width {
                let idx = (t * width + j) * ch + c;
                if x[idx] > x[best] {
                    best = idx;
                }
            }
            y[t * ch + c] = x[best];
            arg[t * ch + c] = best;
        }
    }
    Ok((Tensor::new(vec![out_t, ch], y)?, arg))
}

pub fn global_avg_pool_forward(input: &Tensor) -> Result<Tensor, NnError> {
    let &[steps, ch] = input.shape() else {
        return Err(shape_err("global_avg_pool", format!("input {:?}", input.shape())));
    };
    if steps == 0 {
        return Err(shape_err("global_avg_pool", "empty input"));
    }
    let mut y = vec![0.0; ch];
    for row in input.data().chunks_exact(ch) {
        for (a, v) in y.iter_mut().zip(row) {
            *a += v;
        }
    }
    let inv = 1.0 / steps as f64;
    y.iter_mut().for_each(|v| *v *= inv);
    Ok(Tensor::vector(y))
}

/// LSTM cell weights.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    /// `[4H, I]`
    pub w_ih: Tensor,
    /// `[4H, H]`
    pub w_hh: Tensor,
    /// `[4H]`
    pub bias: Tensor,
}

impl LstmParams {
    pub fn hidden(&self) -> usize {
        self.w_hh.shape().get(1).copied().unwrap_or(0)
    }
}

/// Activated gates (i, f, g, o) and tanh of the new cell state.
pub(crate) struct LstmStep {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub gates: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

pub(crate) fn lstm_dims(x: &[f64], w_ih: &Tensor, w_hh: &Tensor, bias: &Tensor) -> Result<usize, NnError> {
    let &[four_h, hidden] = w_hh.shape() else {
        return Err(shape_err("lstm_cell", format!("w_hh {:?}", w_hh.shape())));
    };
    if four_h != 4 * hidden || w_ih.shape() != [four_h, x.len()] || bias.shape() != [four_h] {
        return Err(shape_err(
            "lstm_cell",
            format!(
                "x [{}], w_ih {:?}, w_hh {:?}, bias {:?}",
                x.len(),
                w_ih.shape(),
                w_hh.shape(),
                bias.shape()
            ),
        ));
    }
    Ok(hidden)
}

pub(crate) fn lstm_step(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    w_ih: &Tensor,
    w_hh: &Tensor,
    bias: &Tensor,
) -> LstmStep {
    let hidden = h_prev.len();
    let inp = x.len();
    let (wi, wh, b) = (w_ih.data(), w_hh.data(), bias.data());
    let mut gates = vec![0.0; 4 * hidden];
    for (r, gate) in gates.iter_mut().enumerate() {
        let pre = b[r] + dot(&wi[r * inp..(r + 1) * inp], x) + dot(&wh[r * hidden..(r + 1) * hidden], h_prev);
        *gate = if (2 * hidden..3 * hidden).contains(&r) {
            pre.tanh()
        } else {
            sigmoid(pre)
        };
    }
    let mut c = vec![0.0; hidden];
    let mut h = vec![0.0; hidden];
    let mut tanh_c = vec![0.0; hidden];
    for k in 0..hidden {
        let (i, f, g, o) = (
            gates[k],
            gates[hidden + k],
            gates[2 * hidden + k],
            gates[3 * hidden + k],
        );
        c[k] = f * c_prev[k] + i * g;
        tanh_c[k] = c[k].tanh();
        h[k] = o * tanh_c[k];
    }
    LstmStep { h, c, gates, tanh_c }
}

/// One LSTM step: returns `(h_t, c_t)`.
pub fn lstm_cell_forward(
    x: &Tensor,
    h_prev: &Tensor,
    c_prev: &Tensor,
    params: &LstmParams,
) -> Result<(Tensor, Tensor), NnError> {
    let hidden = lstm_dims(x.data(), &params.w_ih, &params.w_hh, &params.bias)?;
    if h_prev.len() != hidden || c_prev.len() != hidden {
        return Err(shape_err(
            "lstm_cell",
            format!("state [{}]/[{}] for hidden {hidden}", h_prev.len(), c_prev.len()),
        ));
    }
    let step = lstm_step(x.data(), h_prev.data(), c_prev.data(), &params.w_ih, &params.w_hh, &params.bias);
    Ok((Tensor::vector(step.h), Tensor::vector(step.c)))
}

/// Backward through one step given the upstream `dh`, `dc` of the new
/// state. Accumulates into the provided buffers.
#[allow(clippy::too_many_arguments)]
pub(crate) fn lstm_backward(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    w_ih: &[f64],
    w_hh: &[f64],
    step_gates: &[f64],
    tanh_c: &[f64],
    dh: &[f64],
    dc_in: &[f64],
    dx: Option<&mut [f64]>,
    dstate_prev: Option<(&mut [f64], &mut [f64])>,
    dw_ih: Option<&mut [f64]>,
    dw_hh: Option<&mut [f64]>,
    db: Option<&mut [f64]>,
) {
    let hidden = h_prev.len();
    let inp = x.len();
    let mut da = vec![0.0; 4 * hidden];
    let mut dc_prev = vec![0.0; hidden];
    for k in 0..hidden {
        let (i, f, g, o) = (
            step_gates[k],
            step_gates[hidden + k],
            step_gates[2 * hidden + k],
            step_gates[3 * hidden + k],
        );
        let tc = tanh_c[k];
        let d_o = dh[k] * tc;
        let dc = dc_in[k] + dh[k] * o * (1.0 - tc * tc);
        let d_i = dc * g;
        let d_g = dc * i;
        let d_f = dc * c_prev[k];
        dc_prev[k] = dc * f;
        da[k] = d_i * i * (1.0 - i);
        da[hidden + k] = d_f * f * (1.0 - f);
        da[2 * hidden + k] = d_g * (1.0 - g * g);
        da[3 * hidden + k] = d_o * o * (1.0 - o);
    }
    if let Some(db) = db {
        for (d, a) in db.iter_mut().zip(&da) {
            *d += a;
        }
    }
    if let Some(dw) = dw_ih {
        for (r, &a) in da.iter().enumerate() {
            axpy(a, x, &mut dw[r * inp..(r + 1) * inp]);
        }
    }
    if let Some(dw) = dw_hh {
        for (r, &a) in da.iter().enumerate() {
            axpy(a, h_prev, &mut dw[r * hidden..(r + 1) * hidden]);
        }
    }
    if let Some(dx) = dx {
        for (r, &a) in da.iter().enumerate() {
            axpy(a, &w_ih[r * inp..(r + 1) * inp], dx);
        }
    }
    if let Some((dh_prev, dcp)) = dstate_prev {
        for (r, &a) in da.iter().enumerate() {
            axpy(a, &w_hh[r * hidden..(r + 1) * hidden], dh_prev);
        }
        for (d, v) in dcp.iter_mut().zip(&dc_prev) {
            *d += v;
        }
    }
}
