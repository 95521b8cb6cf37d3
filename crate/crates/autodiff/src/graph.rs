use std::collections::HashMap;

use crate::error::{AdError, Result};
use crate::param::{ParamId, ParamStore};
use crate::tensor::Tensor;

/// Probability floor used by [`Graph::cross_entropy`]; keeps `ln 0` finite.
pub const PROB_FLOOR: f64 = 1e-12;

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bcast {
    Same,
    /// rhs is `[cols]`, repeated for every row of lhs
    Row,
    /// rhs is `[rows, 1]`, repeated across the columns of lhs
    Column,
    /// rhs has a single element
    Scalar,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param,
    MatMul(Var, Var),
    Add(Var, Var, Bcast),
    Mul(Var, Var, Bcast),
    Concat(Vec<Var>),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    AbsDiff(Var, Var),
    Softmax(Var),
    Dropout(Var, Tensor),
    Scale(Var, f64),
    AddScalar(Var),
    Sum(Var),
    Mean(Var),
    CrossEntropy(Var, Vec<usize>),
    Mse(Var, Tensor),
    CenterRows(Var),
    ScatterRows(Var, Vec<Vec<usize>>),
    ClipRenorm {
        mix: Var,
        fallback: Var,
        used_fallback: Vec<bool>,
    },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
    requires_grad: bool,
}

/// Gradients of a scalar loss with respect to every node that needed one.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }
}

/// A tape of operations recorded during one forward pass.
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order and the backward pass simply walks it in reverse.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    param_vars: HashMap<ParamId, Var>,
    kinks: usize,
    fallbacks: usize,
}

fn bcast(op: &'static str, a: &Tensor, b: &Tensor) -> Result<Bcast> {
    if a.shape() == b.shape() {
        Ok(Bcast::Same)
    } else if b.len() == 1 {
        Ok(Bcast::Scalar)
    } else if a.shape().len() >= 2 && b.shape() == [a.cols()] {
        Ok(Bcast::Row)
    } else if a.shape().len() >= 2 && b.shape() == [a.rows(), 1] {
        Ok(Bcast::Column)
    } else {
        Err(AdError::ShapeMismatch {
            op,
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        })
    }
}

fn rhs_index(kind: Bcast, i: usize, cols: usize) -> usize {
    match kind {
        Bcast::Same => i,
        Bcast::Row => i % cols,
        Bcast::Column => i / cols,
        Bcast::Scalar => 0,
    }
}

fn reduce_to(kind: Bcast, g: &Tensor, target: &Tensor) -> Tensor {
    if kind == Bcast::Same {
        return g.clone();
    }
    let cols = g.cols();
    let mut out = Tensor::zeros(target.shape());
    let od = out.data_mut();
    for (i, &gv) in g.data().iter().enumerate() {
        od[rhs_index(kind, i, cols)] += gv;
    }
    out
}

fn accumulate(slot: &mut Option<Tensor>, g: Tensor) {
    match slot {
        Some(acc) => {
            for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += b;
            }
        }
        None => *slot = Some(g),
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, op: Op, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Count of relu / abs_diff evaluations that landed exactly on the kink
    /// with a gradient-carrying input.
    pub fn kinks(&self) -> usize {
        self.kinks
    }

    /// Rows where [`Graph::clip_renorm`] fell back to the base distribution.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    /// Constant input; no gradient is tracked.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(Op::Leaf, t, false)
    }

    /// Leaf whose gradient is tracked (used by gradient checks).
    pub fn variable(&mut self, t: Tensor) -> Var {
        self.push(Op::Leaf, t, true)
    }

    /// Brings a parameter onto the tape. Repeated calls return the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&v) = self.param_vars.get(&id) {
            return v;
        }
        let p = store.get(id);
        let v = self.push(Op::Param, p.value.clone(), p.trainable);
        self.param_vars.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape().len() != 2 || y.shape().len() != 2 || x.shape()[1] != y.shape()[0] {
            return Err(AdError::ShapeMismatch {
                op: "matmul",
                lhs: x.shape().to_vec(),
                rhs: y.shape().to_vec(),
            });
        }
        let (m, k, n) = (x.shape()[0], x.shape()[1], y.shape()[1]);
        let mut out = vec![0.0; m * n];
        let (xd, yd) = (x.data(), y.data());
        for i in 0..m {
            let orow = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let xv = xd[i * k + p];
                if xv == 0.0 {
                    continue;
                }
                for (o, &yv) in orow.iter_mut().zip(&yd[p * n..(p + 1) * n]) {
                    *o += xv * yv;
                }
            }
        }
        let t = Tensor::new(vec![m, n], out)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::MatMul(a, b), t, rg))
    }

    fn binary(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<(Tensor, Bcast)> {
        let (x, y) = (self.value(a), self.value(b));
        let kind = bcast(op, x, y)?;
        let cols = x.cols();
        let yd = y.data();
        let data = x
            .data()
            .iter()
            .enumerate()
            .map(|(i, &xv)| f(xv, yd[rhs_index(kind, i, cols)]))
            .collect();
        Ok((Tensor::new(x.shape().to_vec(), data)?, kind))
    }

    /// Elementwise sum; `b` may broadcast as a row vector, column or scalar.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (t, kind) = self.binary("add", a, b, |x, y| x + y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Add(a, b, kind), t, rg))
    }

    /// Elementwise product; `b` may broadcast as a row vector, column or scalar.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (t, kind) = self.binary("mul", a, b, |x, y| x * y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Mul(a, b, kind), t, rg))
    }

    /// Concatenation along the last axis.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| AdError::InvalidArgument("concat of zero tensors".into()))?;
        let lead = self.value(*first).shape()[..self.value(*first).shape().len() - 1].to_vec();
        let rows = self.value(*first).rows();
        let mut total = 0;
        for p in parts {
            let s = self.value(*p).shape();
            if s[..s.len() - 1] != lead[..] {
                return Err(AdError::ShapeMismatch {
                    op: "concat",
                    lhs: self.value(*first).shape().to_vec(),
                    rhs: s.to_vec(),
                });
            }
            total += self.value(*p).cols();
        }
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for p in parts {
                data.extend_from_slice(self.value(*p).row(r));
            }
        }
        let mut shape = lead;
        shape.push(total);
        let t = Tensor::new(shape, data)?;
        let rg = parts.iter().any(|p| self.rg(*p));
        Ok(self.push(Op::Concat(parts.to_vec()), t, rg))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let rg = self.rg(a);
        let kinks = if rg { x.data().iter().filter(|&&v| v == 0.0).count() } else { 0 };
        let t = x.map(|v| if v > 0.0 { v } else { 0.0 });
        self.kinks += kinks;
        self.push(Op::Relu(a), t, rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let t = self.value(a).map(|v| 1.0 / (1.0 + (-v).exp()));
        let rg = self.rg(a);
        self.push(Op::Sigmoid(a), t, rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let t = self.value(a).map(f64::tanh);
        let rg = self.rg(a);
        self.push(Op::Tanh(a), t, rg)
    }

    /// Elementwise `|a - b|` (full-wave rectified difference).
    pub fn abs_diff(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(AdError::ShapeMismatch {
                op: "abs_diff",
                lhs: x.shape().to_vec(),
                rhs: y.shape().to_vec(),
            });
        }
        let rg = self.rg(a) || self.rg(b);
        let data: Vec<f64> = x.data().iter().zip(y.data()).map(|(p, q)| (p - q).abs()).collect();
        let kinks = if rg { data.iter().filter(|&&v| v == 0.0).count() } else { 0 };
        let t = Tensor::new(x.shape().to_vec(), data)?;
        self.kinks += kinks;
        Ok(self.push(Op::AbsDiff(a, b), t, rg))
    }

    /// Row-wise softmax over the last axis.
    pub fn softmax(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let cols = x.cols();
        let mut data = Vec::with_capacity(x.len());
        for r in 0..x.rows() {
            let row = x.row(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
            let s: f64 = exps.iter().sum();
            data.extend(exps.iter().map(|e| e / s));
        }
        debug_assert_eq!(data.len() % cols, 0);
        let t = Tensor::new(x.shape().to_vec(), data).expect("same shape");
        let rg = self.rg(a);
        self.push(Op::Softmax(a), t, rg)
    }

    /// Multiplies by a precomputed dropout mask (already scaled by `1/(1-p)`).
    pub fn dropout_mask_apply(&mut self, a: Var, mask: Tensor) -> Result<Var> {
        let x = self.value(a);
        if x.shape() != mask.shape() {
            return Err(AdError::ShapeMismatch {
                op: "dropout_mask_apply",
                lhs: x.shape().to_vec(),
                rhs: mask.shape().to_vec(),
            });
        }
        let data = x.data().iter().zip(mask.data()).map(|(v, m)| v * m).collect();
        let t = Tensor::new(x.shape().to_vec(), data)?;
        let rg = self.rg(a);
        Ok(self.push(Op::Dropout(a, mask), t, rg))
    }

    pub fn scalar_scale(&mut self, a: Var, c: f64) -> Var {
        let t = self.value(a).map(|v| v * c);
        let rg = self.rg(a);
        self.push(Op::Scale(a, c), t, rg)
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let t = self.value(a).map(|v| v + c);
        let rg = self.rg(a);
        self.push(Op::AddScalar(a), t, rg)
    }

    /// `1 - a`, the complement used by gated cells.
    pub fn one_minus(&mut self, a: Var) -> Var {
        let neg = self.scalar_scale(a, -1.0);
        self.add_scalar(neg, 1.0)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let t = Tensor::scalar(self.value(a).sum());
        let rg = self.rg(a);
        self.push(Op::Sum(a), t, rg)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let t = Tensor::scalar(x.sum() / x.len() as f64);
        let rg = self.rg(a);
        self.push(Op::Mean(a), t, rg)
    }

    /// Mean negative log-probability of `targets` under row distributions `probs`.
    pub fn cross_entropy(&mut self, probs: Var, targets: &[usize]) -> Result<Var> {
        let p = self.value(probs);
        if p.rows() != targets.len() {
            return Err(AdError::ShapeMismatch {
                op: "cross_entropy",
                lhs: p.shape().to_vec(),
                rhs: vec![targets.len()],
            });
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= p.cols()) {
            return Err(AdError::InvalidArgument(format!(
                "cross_entropy target {t} outside {} classes",
                p.cols()
            )));
        }
        let total: f64 = targets
            .iter()
            .enumerate()
            .map(|(r, &t)| -p.row(r)[t].max(PROB_FLOOR).ln())
            .sum();
        let t = Tensor::scalar(total / targets.len() as f64);
        let rg = self.rg(probs);
        Ok(self.push(Op::CrossEntropy(probs, targets.to_vec()), t, rg))
    }

    /// Mean squared error against a constant target.
    pub fn mse(&mut self, pred: Var, target: Tensor) -> Result<Var> {
        let p = self.value(pred);
        if p.shape() != target.shape() {
            return Err(AdError::ShapeMismatch {
                op: "mse",
                lhs: p.shape().to_vec(),
                rhs: target.shape().to_vec(),
            });
        }
        let s: f64 = p.data().iter().zip(target.data()).map(|(a, b)| (a - b).powi(2)).sum();
        let t = Tensor::scalar(s / p.len() as f64);
        let rg = self.rg(pred);
        Ok(self.push(Op::Mse(pred, target), t, rg))
    }

    /// Subtracts each row's mean from that row.
    pub fn center_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut data = Vec::with_capacity(x.len());
        for r in 0..x.rows() {
            let row = x.row(r);
            let m = row.iter().sum::<f64>() / row.len() as f64;
            data.extend(row.iter().map(|v| v - m));
        }
        let t = Tensor::new(x.shape().to_vec(), data).expect("same shape");
        let rg = self.rg(a);
        self.push(Op::CenterRows(a), t, rg)
    }

    /// Fixed-weight scatter: `out[r, index[r][i]] += a[r, i]`, output width `width`.
    /// Repeated indices within a row sum.
    pub fn scatter_rows(&mut self, a: Var, index: &[Vec<usize>], width: usize) -> Result<Var> {
        let x = self.value(a);
        if x.rows() != index.len() || index.iter().any(|r| r.len() != x.cols()) {
            return Err(AdError::ShapeMismatch {
                op: "scatter_rows",
                lhs: x.shape().to_vec(),
                rhs: vec![index.len(), index.first().map_or(0, Vec::len)],
            });
        }
        if index.iter().flatten().any(|&i| i >= width) {
            return Err(AdError::InvalidArgument(format!(
                "scatter_rows index outside width {width}"
            )));
        }
        let rows = x.rows();
        let mut data = vec![0.0; rows * width];
        for (r, idx) in index.iter().enumerate() {
            for (i, &col) in idx.iter().enumerate() {
                data[r * width + col] += x.row(r)[i];
            }
        }
        let t = Tensor::new(vec![rows, width], data)?;
        let rg = self.rg(a);
        Ok(self.push(Op::ScatterRows(a, index.to_vec()), t, rg))
    }

    /// Clips every entry of `mix` to `[0, 1]` and renormalizes each row to sum
    /// to one. A row whose clipped sum is zero is replaced by the matching row
    /// of `fallback`.
    pub fn clip_renorm(&mut self, mix: Var, fallback: Var) -> Result<Var> {
        let (q, f) = (self.value(mix), self.value(fallback));
        if q.shape() != f.shape() {
            return Err(AdError::ShapeMismatch {
                op: "clip_renorm",
                lhs: q.shape().to_vec(),
                rhs: f.shape().to_vec(),
            });
        }
        let mut data = Vec::with_capacity(q.len());
        let mut used = Vec::with_capacity(q.rows());
        for r in 0..q.rows() {
            let clipped: Vec<f64> = q.row(r).iter().map(|v| v.clamp(0.0, 1.0)).collect();
            let s: f64 = clipped.iter().sum();
            if s > 0.0 {
                data.extend(clipped.iter().map(|c| c / s));
                used.push(false);
            } else {
                data.extend_from_slice(f.row(r));
                used.push(true);
            }
        }
        let t = Tensor::new(q.shape().to_vec(), data)?;
        self.fallbacks += used.iter().filter(|&&u| u).count();
        let rg = self.rg(mix) || self.rg(fallback);
        Ok(self.push(
            Op::ClipRenorm {
                mix,
                fallback,
                used_fallback: used,
            },
            t,
            rg,
        ))
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if !lv.is_scalar() {
            return Err(AdError::NonScalarLoss(lv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::full(lv.shape(), 1.0));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn send(&self, grads: &mut [Option<Tensor>], to: Var, g: Tensor) {
        if self.rg(to) {
            accumulate(&mut grads[to.0], g);
        }
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let out = &node.value;
        match &node.op {
            Op::Leaf | Op::Param => {}
            Op::MatMul(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                let (m, k, n) = (x.shape()[0], x.shape()[1], y.shape()[1]);
                let (xd, yd, gd) = (x.data(), y.data(), g.data());
                if self.rg(*a) {
                    let mut da = vec![0.0; m * k];
                    for i in 0..m {
                        for p in 0..k {
                            let mut s = 0.0;
                            for j in 0..n {
                                s += gd[i * n + j] * yd[p * n + j];
                            }
                            da[i * k + p] = s;
                        }
                    }
                    self.send(grads, *a, Tensor::new(vec![m, k], da).expect("shape"));
                }
                if self.rg(*b) {
                    let mut db = vec![0.0; k * n];
                    for i in 0..m {
                        for p in 0..k {
                            let xv = xd[i * k + p];
                            if xv == 0.0 {
                                continue;
                            }
                            for j in 0..n {
                                db[p * n + j] += xv * gd[i * n + j];
                            }
                        }
                    }
                    self.send(grads, *b, Tensor::new(vec![k, n], db).expect("shape"));
                }
            }
            Op::Add(a, b, kind) => {
                self.send(grads, *a, g.clone());
                if self.rg(*b) {
                    self.send(grads, *b, reduce_to(*kind, g, self.value(*b)));
                }
            }
            Op::Mul(a, b, kind) => {
                let (x, y) = (self.value(*a), self.value(*b));
                let cols = x.cols();
                if self.rg(*a) {
                    let yd = y.data();
                    let data = g
                        .data()
                        .iter()
                        .enumerate()
                        .map(|(i, gv)| gv * yd[rhs_index(*kind, i, cols)])
                        .collect();
                    self.send(grads, *a, Tensor::new(x.shape().to_vec(), data).expect("shape"));
                }
                if self.rg(*b) {
                    let prod: Vec<f64> = g.data().iter().zip(x.data()).map(|(gv, xv)| gv * xv).collect();
                    let prod = Tensor::new(x.shape().to_vec(), prod).expect("shape");
                    self.send(grads, *b, reduce_to(*kind, &prod, y));
                }
            }
            Op::Concat(parts) => {
                let rows = g.rows();
                let mut offset = 0;
                for p in parts {
                    let pv = self.value(*p);
                    let c = pv.cols();
                    if self.rg(*p) {
                        let mut data = Vec::with_capacity(rows * c);
                        for r in 0..rows {
                            data.extend_from_slice(&g.row(r)[offset..offset + c]);
                        }
                        self.send(grads, *p, Tensor::new(pv.shape().to_vec(), data).expect("shape"));
                    }
                    offset += c;
                }
            }
            Op::Relu(a) => {
                let x = self.value(*a);
                let data = g
                    .data()
                    .iter()
                    .zip(x.data())
                    .map(|(gv, xv)| if *xv > 0.0 { *gv } else { 0.0 })
                    .collect();
                self.send(grads, *a, Tensor::new(x.shape().to_vec(), data).expect("shape"));
            }
            Op::Sigmoid(a) => {
                let data = g.data().iter().zip(out.data()).map(|(gv, s)| gv * s * (1.0 - s)).collect();
                self.send(grads, *a, Tensor::new(out.shape().to_vec(), data).expect("shape"));
            }
            Op::Tanh(a) => {
                let data = g.data().iter().zip(out.data()).map(|(gv, t)| gv * (1.0 - t * t)).collect();
                self.send(grads, *a, Tensor::new(out.shape().to_vec(), data).expect("shape"));
            }
            Op::AbsDiff(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                let sign: Vec<f64> = x
                    .data()
                    .iter()
                    .zip(y.data())
                    .map(|(p, q)| {
                        let d = p - q;
                        if d > 0.0 {
                            1.0
                        } else if d < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let ga: Vec<f64> = g.data().iter().zip(&sign).map(|(gv, s)| gv * s).collect();
                if self.rg(*b) {
                    let gb = ga.iter().map(|v| -v).collect();
                    self.send(grads, *b, Tensor::new(y.shape().to_vec(), gb).expect("shape"));
                }
                self.send(grads, *a, Tensor::new(x.shape().to_vec(), ga).expect("shape"));
            }
            Op::Softmax(a) => {
                let cols = out.cols();
                let mut data = Vec::with_capacity(out.len());
                for r in 0..out.rows() {
                    let (yr, gr) = (out.row(r), &g.data()[r * cols..(r + 1) * cols]);
                    let dot: f64 = yr.iter().zip(gr).map(|(y, gv)| y * gv).sum();
                    data.extend(yr.iter().zip(gr).map(|(y, gv)| y * (gv - dot)));
                }
                self.send(grads, *a, Tensor::new(out.shape().to_vec(), data).expect("shape"));
            }
            Op::Dropout(a, mask) => {
                let data = g.data().iter().zip(mask.data()).map(|(gv, m)| gv * m).collect();
                self.send(grads, *a, Tensor::new(mask.shape().to_vec(), data).expect("shape"));
            }
            Op::Scale(a, c) => self.send(grads, *a, g.map(|v| v * c)),
            Op::AddScalar(a) => self.send(grads, *a, g.clone()),
            Op::Sum(a) => {
                let x = self.value(*a);
                self.send(grads, *a, Tensor::full(x.shape(), g.data()[0]));
            }
            Op::Mean(a) => {
                let x = self.value(*a);
                self.send(grads, *a, Tensor::full(x.shape(), g.data()[0] / x.len() as f64));
            }
            Op::CrossEntropy(a, targets) => {
                let p = self.value(*a);
                let cols = p.cols();
                let scale = g.data()[0] / targets.len() as f64;
                let mut data = vec![0.0; p.len()];
                for (r, &t) in targets.iter().enumerate() {
                    let pv = p.row(r)[t];
                    if pv > PROB_FLOOR {
                        data[r * cols + t] = -scale / pv;
                    }
                }
                self.send(grads, *a, Tensor::new(p.shape().to_vec(), data).expect("shape"));
            }
            Op::Mse(a, target) => {
                let p = self.value(*a);
                let c = 2.0 * g.data()[0] / p.len() as f64;
                let data = p.data().iter().zip(target.data()).map(|(x, t)| c * (x - t)).collect();
                self.send(grads, *a, Tensor::new(p.shape().to_vec(), data).expect("shape"));
            }
            Op::CenterRows(a) => {
                let mut data = Vec::with_capacity(g.len());
                for r in 0..g.rows() {
                    let row = g.row(r);
                    let m = row.iter().sum::<f64>() / row.len() as f64;
                    data.extend(row.iter().map(|v| v - m));
                }
                self.send(grads, *a, Tensor::new(g.shape().to_vec(), data).expect("shape"));
            }
            Op::ScatterRows(a, index) => {
                let x = self.value(*a);
                let n = x.cols();
                let mut data = vec![0.0; x.len()];
                for (r, idx) in index.iter().enumerate() {
                    for (i, &col) in idx.iter().enumerate() {
                        data[r * n + i] = g.row(r)[col];
                    }
                }
                self.send(grads, *a, Tensor::new(x.shape().to_vec(), data).expect("shape"));
            }
            Op::ClipRenorm {
                mix,
                fallback,
                used_fallback,
            } => {
                let q = self.value(*mix);
                let cols = q.cols();
                let mut dq = vec![0.0; q.len()];
                let mut df = vec![0.0; q.len()];
                for (r, &fb) in used_fallback.iter().enumerate() {
                    let gr = g.row(r);
                    if fb {
                        df[r * cols..(r + 1) * cols].copy_from_slice(gr);
                        continue;
                    }
                    let qr = q.row(r);
                    let s: f64 = qr.iter().map(|v| v.clamp(0.0, 1.0)).sum();
                    let or = out.row(r);
                    let dot: f64 = gr.iter().zip(or).map(|(a, b)| a * b).sum();
                    for c in 0..cols {
                        if qr[c] > 0.0 && qr[c] < 1.0 {
                            dq[r * cols + c] = (gr[c] - dot) / s;
                        }
                    }
                }
                self.send(grads, *mix, Tensor::new(q.shape().to_vec(), dq).expect("shape"));
                self.send(grads, *fallback, Tensor::new(q.shape().to_vec(), df).expect("shape"));
            }
        }
    }

    /// Runs [`Graph::backward`] and writes `dLoss/dParam` into every
    /// parameter of `store`. Frozen parameters and parameters that did not
    /// take part in this graph receive a zero gradient.
    pub fn backward_params(&self, loss: Var, store: &mut ParamStore) -> Result<Gradients> {
        let grads = self.backward(loss)?;
        let ids: Vec<ParamId> = store.ids().collect();
        for id in ids {
            let p = store.get_mut(id);
            let g = match self.param_vars.get(&id) {
                Some(v) if p.trainable => grads
                    .get(*v)
                    .cloned()
                    .unwrap_or_else(|| Tensor::zeros(p.value.shape())),
                _ => Tensor::zeros(p.value.shape()),
            };
            p.grad = Some(g);
        }
        Ok(grads)
    }
}
