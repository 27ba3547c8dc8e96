//! Reverse-mode differentiation over a recorded list of tensor ops.
//!
//! Every op appends a node holding its output value plus whatever the
//! backward pass needs. Nodes built only from constants are marked as not
//! requiring gradients, and backward never propagates into them.

use super::kernels::{self, ConvDims};
use super::{shape_err, NnError, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op {
    Leaf,
    Add(Var, Var),
    Mul(Var, Var),
    Sum(Var),
    AddN(Vec<Var>),
    Relu(Var),
    Conv1d { x: Var, w: Var, b: Var },
    MaxPool1d { x: Var, argmax: Vec<usize> },
    GlobalAvgPool(Var),
    Dense { x: Var, w: Var, b: Var },
    /// State tensors are `[h; c]` of length `2H`.
    LstmCell {
        x: Var,
        state: Var,
        w_ih: Var,
        w_hh: Var,
        b: Var,
        gates: Vec<f64>,
        tanh_c: Vec<f64>,
    },
    Slice { x: Var, start: usize },
    SoftmaxXent { logits: Var, probs: Vec<f64>, target: usize, weight: f64 },
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].needs_grad)
    }

    /// A trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A leaf that never receives gradients (inputs, targets).
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), NnError> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(shape_err(op, format!("{sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        self.same_shape("add", a, b)?;
        let data = self.value(a).data().iter().zip(self.value(b).data()).map(|(x, y)| x + y).collect();
        let value = Tensor::new(self.value(a).shape().to_vec(), data)?;
        let ng = self.needs(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), ng))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        self.same_shape("mul", a, b)?;
        let data = self.value(a).data().iter().zip(self.value(b).data()).map(|(x, y)| x * y).collect();
        let value = Tensor::new(self.value(a).shape().to_vec(), data)?;
        let ng = self.needs(&[a, b]);
        Ok(self.push(value, Op::Mul(a, b), ng))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = Tensor::scalar(self.value(a).data().iter().sum());
        let ng = self.needs(&[a]);
        self.push(value, Op::Sum(a), ng)
    }

    pub fn add_n(&mut self, vars: &[Var]) -> Result<Var, NnError> {
        let Some(&first) = vars.first() else {
            return Err(shape_err("add_n", "no operands"));
        };
        let mut acc = self.value(first).clone();
        for &v in &vars[1..] {
            self.same_shape("add_n", first, v)?;
            acc.add_assign(self.value(v));
        }
        let ng = self.needs(vars);
        Ok(self.push(acc, Op::AddN(vars.to_vec()), ng))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = kernels::relu_forward(self.value(a));
        let ng = self.needs(&[a]);
        self.push(value, Op::Relu(a), ng)
    }

    pub fn conv1d(&mut self, x: Var, w: Var, b: Var) -> Result<Var, NnError> {
        let value = kernels::conv1d_forward(self.value(x), self.value(w), self.value(b))?;
        let ng = self.needs(&[x, w, b]);
        Ok(self.push(value, Op::Conv1d { x, w, b }, ng))
    }

    pub fn max_pool1d(&mut self, x: Var, width: usize) -> Result<Var, NnError> {
        let (value, argmax) = kernels::max_pool1d_forward(self.value(x), width)?;
        let ng = self.needs(&[x]);
        Ok(self.push(value, Op::MaxPool1d { x, argmax }, ng))
    }

    pub fn global_avg_pool(&mut self, x: Var) -> Result<Var, NnError> {
        let value = kernels::global_avg_pool_forward(self.value(x))?;
        let ng = self.needs(&[x]);
        Ok(self.push(value, Op::GlobalAvgPool(x), ng))
    }

    pub fn dense(&mut self, x: Var, w: Var, b: Var) -> Result<Var, NnError> {
        let value = kernels::dense_forward(self.value(x), self.value(w), self.value(b))?;
        let ng = self.needs(&[x, w, b]);
        Ok(self.push(value, Op::Dense { x, w, b }, ng))
    }

    /// One LSTM step. `state` and the result are `[h; c]`.
    pub fn lstm_cell(&mut self, x: Var, state: Var, w_ih: Var, w_hh: Var, b: Var) -> Result<Var, NnError> {
        let (wi, wh, bias) = (self.value(w_ih), self.value(w_hh), self.value(b));
        let hidden = kernels::lstm_dims(self.value(x).data(), wi, wh, bias)?;
        let st = self.value(state).data();
        if st.len() != 2 * hidden {
            return Err(shape_err("lstm_cell", format!("state [{}] for hidden {hidden}", st.len())));
        }
        let step = kernels::lstm_step(self.value(x).data(), &st[..hidden], &st[hidden..], wi, wh, bias);
        let mut out = step.h;
        out.extend_from_slice(&step.c);
        let ng = self.needs(&[x, state, w_ih, w_hh, b]);
        Ok(self.push(
            Tensor::vector(out),
            Op::LstmCell {
                x,
                state,
                w_ih,
                w_hh,
                b,
                gates: step.gates,
                tanh_c: step.tanh_c,
            },
            ng,
        ))
    }

    /// Contiguous sub-range of the flattened value, as a vector.
    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var, NnError> {
        let src = self.value(x).data();
        if start + len > src.len() || len == 0 {
            return Err(shape_err("slice", format!("[{start}, {}) of {}", start + len, src.len())));
        }
        let value = Tensor::vector(src[start..start + len].to_vec());
        let ng = self.needs(&[x]);
        Ok(self.push(value, Op::Slice { x, start }, ng))
    }

    /// `weight · −log softmax(logits)[target]` as a scalar.
    pub fn softmax_cross_entropy(&mut self, logits: Var, target: usize, weight: f64) -> Result<Var, NnError> {
        let z = self.value(logits).data();
        if target >= z.len() {
            return Err(shape_err("softmax_xent", format!("target {target} of {} classes", z.len())));
        }
        let probs = softmax(z);
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let loss = weight * (lse - z[target]);
        let ng = self.needs(&[logits]);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::SoftmaxXent {
                logits,
                probs,
                target,
                weight,
            },
            ng,
        ))
    }

    /// Reverse accumulation from a scalar node.
    pub fn backward(&self, loss: Var) -> Result<Gradients, NnError> {
        let root = &self.nodes[loss.0].value;
        if root.len() != 1 {
            return Err(shape_err("backward", format!("loss has shape {:?}", root.shape())));
        }
        if !root.item().is_finite() {
            return Err(NnError::NonFiniteGradient {
                what: "loss value".into(),
            });
        }
        let mut grads: Vec<Option<Tensor>> = Vec::with_capacity(loss.0 + 1);
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(Tensor::filled(root.shape(), 1.0));

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }

        for (i, g) in grads.iter().enumerate() {
            if let Some(g) = g {
                if self.nodes[i].needs_grad && !g.is_finite() {
                    return Err(NnError::NonFiniteGradient {
                        what: format!("node {i}"),
                    });
                }
            }
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let gd = g.data();
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    self.accumulate(grads, v, |d| d.iter_mut().zip(gd).for_each(|(x, y)| *x += y));
                }
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a).data(), self.value(*b).data());
                self.accumulate(grads, *a, |d| {
                    for ((x, g), o) in d.iter_mut().zip(gd).zip(vb) {
                        *x += g * o;
                    }
                });
                self.accumulate(grads, *b, |d| {
                    for ((x, g), o) in d.iter_mut().zip(gd).zip(va) {
                        *x += g * o;
                    }
                });
            }
            Op::Sum(a) => {
                let s = gd[0];
                self.accumulate(grads, *a, |d| d.iter_mut().for_each(|x| *x += s));
            }
            Op::AddN(vars) => {
                for &v in vars {
                    self.accumulate(grads, v, |d| d.iter_mut().zip(gd).for_each(|(x, y)| *x += y));
                }
            }
            Op::Relu(a) => {
                let va = self.value(*a).data();
                self.accumulate(grads, *a, |d| {
                    for ((x, g), v) in d.iter_mut().zip(gd).zip(va) {
                        if *v > 0.0 {
                            *x += g;
                        }
                    }
                });
            }
            Op::Conv1d { x, w, b } => {
                let (xv, wv, bv) = (self.value(*x), self.value(*w), self.value(*b));
                let dims: ConvDims = kernels::conv_dims(xv, wv, bv).expect("validated on record");
                let mut dx = self.take_slot(grads, *x);
                let mut dw = self.take_slot(grads, *w);
                let mut db = self.take_slot(grads, *b);
                kernels::conv1d_backward(
                    &dims,
                    xv.data(),
                    wv.data(),
                    gd,
                    dx.as_mut().map(|t| t.data_mut()),
                    dw.as_mut().map(|t| t.data_mut()),
                    db.as_mut().map(|t| t.data_mut()),
                );
                put(grads, *x, dx);
                put(grads, *w, dw);
                put(grads, *b, db);
            }
            Op::MaxPool1d { x, argmax } => {
                self.accumulate(grads, *x, |d| {
                    for (&src, g) in argmax.iter().zip(gd) {
                        d[src] += g;
                    }
                });
            }
            Op::GlobalAvgPool(x) => {
                let shape = self.value(*x).shape();
                let (steps, ch) = (shape[0], shape[1]);
                let inv = 1.0 / steps as f64;
                self.accumulate(grads, *x, |d| {
                    for row in d.chunks_exact_mut(ch) {
                        for (v, g) in row.iter_mut().zip(gd) {
                            *v += g * inv;
                        }
                    }
                });
            }
            Op::Dense { x, w, b } => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                let mut dx = self.take_slot(grads, *x);
                let mut dw = self.take_slot(grads, *w);
                let mut db = self.take_slot(grads, *b);
                kernels::dense_backward(
                    xv.data(),
                    wv.data(),
                    gd,
                    dx.as_mut().map(|t| t.data_mut()),
                    dw.as_mut().map(|t| t.data_mut()),
                    db.as_mut().map(|t| t.data_mut()),
                );
                put(grads, *x, dx);
                put(grads, *w, dw);
                put(grads, *b, db);
            }
            Op::LstmCell {
                x,
                state,
                w_ih,
                w_hh,
                b,
                gates,
                tanh_c,
            } => {
                let st = self.value(*state).data();
                let hidden = st.len() / 2;
                let mut dx = self.take_slot(grads, *x);
                let mut dstate = self.take_slot(grads, *state);
                let mut dwi = self.take_slot(grads, *w_ih);
                let mut dwh = self.take_slot(grads, *w_hh);
                let mut db = self.take_slot(grads, *b);
                kernels::lstm_backward(
                    self.value(*x).data(),
                    &st[..hidden],
                    &st[hidden..],
                    self.value(*w_ih).data(),
                    self.value(*w_hh).data(),
                    gates,
                    tanh_c,
                    &gd[..hidden],
                    &gd[hidden..],
                    dx.as_mut().map(|t| t.data_mut()),
                    dstate.as_mut().map(|t| t.data_mut().split_at_mut(hidden)),
                    dwi.as_mut().map(|t| t.data_mut()),
                    dwh.as_mut().map(|t| t.data_mut()),
                    db.as_mut().map(|t| t.data_mut()),
                );
                put(grads, *x, dx);
                put(grads, *state, dstate);
                put(grads, *w_ih, dwi);
                put(grads, *w_hh, dwh);
                put(grads, *b, db);
            }
            Op::Slice { x, start } => {
                let start = *start;
                self.accumulate(grads, *x, |d| {
                    for (v, g) in d[start..start + gd.len()].iter_mut().zip(gd) {
                        *v += g;
                    }
                });
            }
            Op::SoftmaxXent {
                logits,
                probs,
                target,
                weight,
            } => {
                let s = gd[0] * weight;
                self.accumulate(grads, *logits, |d| {
                    for (k, (v, p)) in d.iter_mut().zip(probs).enumerate() {
                        let y = if k == *target { 1.0 } else { 0.0 };
                        *v += s * (p - y);
                    }
                });
            }
        }
    }

    fn take_slot(&self, grads: &mut [Option<Tensor>], v: Var) -> Option<Tensor> {
        if !self.nodes[v.0].needs_grad {
            return None;
        }
        Some(grads[v.0].take().unwrap_or_else(|| Tensor::zeros(self.value(v).shape())))
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, f: impl FnOnce(&mut [f64])) {
        if let Some(mut t) = self.take_slot(grads, v) {
            f(t.data_mut());
            grads[v.0] = Some(t);
        }
    }
}

fn put(grads: &mut [Option<Tensor>], v: Var, t: Option<Tensor>) {
    if t.is_some() {
        grads[v.0] = t;
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Gradients of a scalar with respect to every recorded node.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient with respect to `v`; exactly zero when `v` does not reach
    /// the loss.
    pub fn wrt(&self, tape: &Tape, v: Var) -> Tensor {
        self.get(v)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(tape.value(v).shape()))
    }
}
