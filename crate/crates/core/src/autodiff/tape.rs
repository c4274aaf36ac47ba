use std::collections::HashMap;

use super::params::{ParamId, ParamStore};
use super::tensor::{matmul_a_bt_into, matmul_at_b_into, matmul_into, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Relu,
}

impl Activation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Sigmoid => sigmoid(v),
            Activation::Relu => v.max(0.0),
        }
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param,
    Affine { x: Var, w: Var, b: Var },
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddConst(Var),
    Square(Var),
    Exp(Var),
    Act(Var, Activation),
    Clamp { x: Var, lo: f64, hi: f64 },
    ConcatCols(Vec<Var>),
    SliceCols { x: Var, start: usize },
    SumCols(Var),
    SumAll(Var),
    MeanAll(Var),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
}

/// Records a forward computation in topological order and replays it backwards.
///
/// Nodes can only reference earlier nodes, so reverse insertion order is a
/// valid reverse topological order and every node is visited once.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
}

fn same_shape(op: &str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::config(format!(
            "{op}: shape {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(Op::Constant, value)
    }

    /// Leaf bound to a stored parameter. Repeated calls return the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        let v = self.push(Op::Param, store.value(id).clone());
        self.params.insert(id, v);
        v
    }

    /// Copy of `v` that gradients do not flow through.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.value(v).clone();
        self.constant(value)
    }

    /// `x[batch,in] * w[in,out] + b[out]`.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        if xv.shape().len() != 2 || wv.shape().len() != 2 {
            return Err(Error::config(format!(
                "affine expects 2-D input and weight, got {:?} and {:?}",
                xv.shape(),
                wv.shape()
            )));
        }
        let (m, k, n) = (xv.rows(), xv.cols(), wv.cols());
        if wv.rows() != k || bv.len() != n {
            return Err(Error::config(format!(
                "affine: input {:?}, weight {:?}, bias {:?}",
                xv.shape(),
                wv.shape(),
                bv.shape()
            )));
        }
        let mut out = Vec::with_capacity(m * n);
        for _ in 0..m {
            out.extend_from_slice(bv.data());
        }
        matmul_into(xv.data(), wv.data(), &mut out, m, k, n);
        let value = Tensor::matrix(m, n, out);
        Ok(self.push(Op::Affine { x, w, b }, value))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape().len() != 2 || bv.shape().len() != 2 || av.cols() != bv.rows() {
            return Err(Error::config(format!(
                "matmul: {:?} x {:?}",
                av.shape(),
                bv.shape()
            )));
        }
        let (m, k, n) = (av.rows(), av.cols(), bv.cols());
        let mut out = vec![0.0; m * n];
        matmul_into(av.data(), bv.data(), &mut out, m, k, n);
        Ok(self.push(Op::MatMul(a, b), Tensor::matrix(m, n, out)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("add", self.value(a), self.value(b))?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        Ok(self.push(Op::Add(a, b), value))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("sub", self.value(a), self.value(b))?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x - y);
        Ok(self.push(Op::Sub(a, b), value))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("mul", self.value(a), self.value(b))?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y);
        Ok(self.push(Op::Mul(a, b), value))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).map(|x| c * x);
        self.push(Op::Scale(a, c), value)
    }

    pub fn add_const(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).map(|x| x + c);
        self.push(Op::AddConst(a), value)
    }

    pub fn square(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x * x);
        self.push(Op::Square(a), value)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::exp);
        self.push(Op::Exp(a), value)
    }

    pub fn activation(&mut self, a: Var, kind: Activation) -> Var {
        let value = self.value(a).map(|x| kind.apply(x));
        self.push(Op::Act(a, kind), value)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.activation(a, Activation::Tanh)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.activation(a, Activation::Sigmoid)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.activation(a, Activation::Relu)
    }

    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        let value = self.value(x).map(|v| v.clamp(lo, hi));
        self.push(Op::Clamp { x, lo, hi }, value)
    }

    /// Concatenate 2-D tensors with equal row counts along columns.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = match parts.first() {
            Some(&p) => self.value(p).rows(),
            None => return Err(Error::config("concat of zero tensors")),
        };
        if parts.iter().any(|&p| self.value(p).rows() != rows) {
            return Err(Error::config("concat: row counts differ"));
        }
        let total: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(r));
            }
        }
        Ok(self.push(Op::ConcatCols(parts.to_vec()), Tensor::matrix(rows, total, data)))
    }

    /// Columns `start..end` of a 2-D tensor.
    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let xv = self.value(x);
        if start > end || end > xv.cols() {
            return Err(Error::config(format!(
                "slice {start}..{end} of {} columns",
                xv.cols()
            )));
        }
        let rows = xv.rows();
        let mut data = Vec::with_capacity(rows * (end - start));
        for r in 0..rows {
            data.extend_from_slice(&xv.row(r)[start..end]);
        }
        Ok(self.push(
            Op::SliceCols { x, start },
            Tensor::matrix(rows, end - start, data),
        ))
    }

    /// Row sums: `[rows, cols] -> [rows, 1]`.
    pub fn sum_cols(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let data = (0..xv.rows()).map(|r| xv.row(r).iter().sum()).collect();
        let value = Tensor::matrix(xv.rows(), 1, data);
        self.push(Op::SumCols(x), value)
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        let value = Tensor::scalar(self.value(x).sum());
        self.push(Op::SumAll(x), value)
    }

    pub fn mean_all(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let value = Tensor::scalar(xv.sum() / xv.len() as f64);
        self.push(Op::MeanAll(x), value)
    }

    /// First node index holding a non-finite value, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.nodes.iter().position(|n| !n.value.all_finite())
    }

    /// Reverse sweep from the scalar `loss`; gradients of every parameter
    /// in `store` are overwritten (zero for parameters not on the tape).
    pub fn backward(&self, loss: Var, store: &mut ParamStore) -> Result<()> {
        let grads = self.gradients(loss)?;
        store.zero_grads();
        for (&id, &var) in &self.params {
            if let Some(g) = &grads[var.0] {
                store.accumulate_grad(id, g);
            }
        }
        Ok(())
    }

    /// Gradients of `loss` with respect to every leaf (interior slots are
    /// released during the sweep and come back as `None`).
    pub fn gradients(&self, loss: Var) -> Result<Vec<Option<Tensor>>> {
        if !self.value(loss).is_scalar() {
            return Err(Error::usage(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::filled(self.value(loss).shape(), 1.0));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Constant | Op::Param => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::Affine { x, w, b } => {
                    let (xv, wv) = (self.value(*x), self.value(*w));
                    let (m, k, n) = (xv.rows(), xv.cols(), wv.cols());
                    let mut gx = vec![0.0; m * k];
                    matmul_a_bt_into(g.data(), wv.data(), &mut gx, m, k, n);
                    let mut gw = vec![0.0; k * n];
                    matmul_at_b_into(xv.data(), g.data(), &mut gw, m, k, n);
                    let mut gb = vec![0.0; n];
                    for r in 0..m {
                        for (acc, &v) in gb.iter_mut().zip(g.row(r)) {
                            *acc += v;
                        }
                    }
                    let bshape = self.value(*b).shape().to_vec();
                    accumulate(&mut grads, *x, Tensor::matrix(m, k, gx));
                    accumulate(&mut grads, *w, Tensor::matrix(k, n, gw));
                    accumulate(&mut grads, *b, Tensor::new(bshape, gb)?);
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                    let mut ga = vec![0.0; m * k];
                    matmul_a_bt_into(g.data(), bv.data(), &mut ga, m, k, n);
                    let mut gb = vec![0.0; k * n];
                    matmul_at_b_into(av.data(), g.data(), &mut gb, m, k, n);
                    accumulate(&mut grads, *a, Tensor::matrix(m, k, ga));
                    accumulate(&mut grads, *b, Tensor::matrix(k, n, gb));
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *b, g.map(|v| -v));
                    accumulate(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let ga = g.zip_map(self.value(*b), |gv, bv| gv * bv);
                    let gb = g.zip_map(self.value(*a), |gv, av| gv * av);
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Scale(a, c) => {
                    let c = *c;
                    accumulate(&mut grads, *a, g.map(|v| c * v));
                }
                Op::AddConst(a) => accumulate(&mut grads, *a, g),
                Op::Square(a) => {
                    let ga = g.zip_map(self.value(*a), |gv, av| 2.0 * av * gv);
                    accumulate(&mut grads, *a, ga);
                }
                Op::Exp(a) => {
                    let ga = g.zip_map(&node.value, |gv, out| gv * out);
                    accumulate(&mut grads, *a, ga);
                }
                Op::Act(a, kind) => {
                    let ga = match kind {
                        Activation::Tanh => g.zip_map(&node.value, |gv, y| gv * (1.0 - y * y)),
                        Activation::Sigmoid => g.zip_map(&node.value, |gv, y| gv * y * (1.0 - y)),
                        Activation::Relu => {
                            g.zip_map(self.value(*a), |gv, x| if x > 0.0 { gv } else { 0.0 })
                        }
                    };
                    accumulate(&mut grads, *a, ga);
                }
                Op::Clamp { x, lo, hi } => {
                    let (lo, hi) = (*lo, *hi);
                    let gx = g.zip_map(self.value(*x), |gv, xv| {
                        if xv >= lo && xv <= hi {
                            gv
                        } else {
                            0.0
                        }
                    });
                    accumulate(&mut grads, *x, gx);
                }
                Op::ConcatCols(parts) => {
                    let rows = g.rows();
                    let mut offset = 0;
                    for &p in parts {
                        let c = self.value(p).cols();
                        let mut data = Vec::with_capacity(rows * c);
                        for r in 0..rows {
                            data.extend_from_slice(&g.row(r)[offset..offset + c]);
                        }
                        let shape = self.value(p).shape().to_vec();
                        accumulate(&mut grads, p, Tensor::new(shape, data)?);
                        offset += c;
                    }
                }
                Op::SliceCols { x, start } => {
                    let xv = self.value(*x);
                    let (rows, cols, width) = (xv.rows(), xv.cols(), g.cols());
                    let mut data = vec![0.0; rows * cols];
                    for r in 0..rows {
                        data[r * cols + start..r * cols + start + width].copy_from_slice(g.row(r));
                    }
                    let shape = xv.shape().to_vec();
                    accumulate(&mut grads, *x, Tensor::new(shape, data)?);
                }
                Op::SumCols(x) => {
                    let xv = self.value(*x);
                    let cols = xv.cols();
                    let data = g
                        .data()
                        .iter()
                        .flat_map(|&gv| std::iter::repeat_n(gv, cols))
                        .collect();
                    let shape = xv.shape().to_vec();
                    accumulate(&mut grads, *x, Tensor::new(shape, data)?);
                }
                Op::SumAll(x) => {
                    let gx = Tensor::filled(self.value(*x).shape(), g.item());
                    accumulate(&mut grads, *x, gx);
                }
                Op::MeanAll(x) => {
                    let xv = self.value(*x);
                    let gx = Tensor::filled(xv.shape(), g.item() / xv.len() as f64);
                    accumulate(&mut grads, *x, gx);
                }
            }
        }
        Ok(grads)
    }
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot => *slot = Some(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_examples() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::from_rows(&[vec![1.0, 2.0]]));
        let w = tape.constant(Tensor::identity(2));
        let b = tape.constant(Tensor::vector(vec![0.0, 0.0]));
        let y = tape.affine(x, w, b).unwrap();
        assert_eq!(tape.value(y).data(), &[1.0, 2.0]);

        let x = tape.constant(Tensor::from_rows(&[vec![1.0, 1.0]]));
        let w = tape.constant(Tensor::from_rows(&[vec![1.0], vec![1.0]]));
        let b = tape.constant(Tensor::vector(vec![0.5]));
        let y = tape.affine(x, w, b).unwrap();
        assert_eq!(tape.value(y).data(), &[2.5]);

        let x = tape.constant(Tensor::from_rows(&[vec![0.0, 0.0]]));
        let w = tape.constant(Tensor::from_rows(&[vec![-4.0], vec![7.0]]));
        let b = tape.constant(Tensor::vector(vec![3.0]));
        let y = tape.affine(x, w, b).unwrap();
        assert_eq!(tape.value(y).data(), &[3.0]);
    }

    #[test]
    fn affine_shape_mismatch_is_config_error() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(&[1, 3]));
        let w = tape.constant(Tensor::zeros(&[2, 2]));
        let b = tape.constant(Tensor::zeros(&[2]));
        assert!(matches!(tape.affine(x, w, b), Err(Error::Config(_))));
    }

    #[test]
    fn activation_fixed_points() {
        assert_eq!(Activation::Sigmoid.apply(0.0), 0.5);
        assert_eq!(Activation::Tanh.apply(0.0), 0.0);
        assert_eq!(Activation::Relu.apply(-1.5), 0.0);
        assert!(sigmoid(-800.0).is_finite() && sigmoid(800.0) == 1.0);
    }

    #[test]
    fn non_scalar_loss_is_usage_error() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(&[2, 2]));
        let mut store = ParamStore::new();
        assert!(matches!(tape.backward(x, &mut store), Err(Error::Usage(_))));
    }

    #[test]
    fn quadratic_and_constant_losses() {
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::matrix(2, 2, vec![1.0, -2.0, 0.5, 3.0]));
        let q = store.add("q", Tensor::vector(vec![4.0]));

        let mut tape = Tape::new();
        let pv = tape.param(&store, p);
        let sq = tape.square(pv);
        let loss = tape.sum_all(sq);
        tape.backward(loss, &mut store).unwrap();
        assert_eq!(store.grad(p).unwrap().data(), &[2.0, -4.0, 1.0, 6.0]);
        assert_eq!(store.grad(q).unwrap().data(), &[0.0]);

        let mut tape = Tape::new();
        let _ = tape.param(&store, p);
        let c = tape.constant(Tensor::scalar(3.0));
        tape.backward(c, &mut store).unwrap();
        assert!(store.grad(p).unwrap().data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn reused_param_accumulates() {
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::vector(vec![3.0]));
        let mut tape = Tape::new();
        let a = tape.param(&store, p);
        let b = tape.param(&store, p);
        assert_eq!(a, b);
        let prod = tape.mul(a, b).unwrap();
        let loss = tape.sum_all(prod);
        tape.backward(loss, &mut store).unwrap();
        assert_eq!(store.grad(p).unwrap().data(), &[6.0]);
    }
}
