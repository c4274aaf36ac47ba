//! Layers built from tape operations.

use super::params::{ParamId, ParamStore};
use super::tape::{Activation, Tape, Var};
use super::tensor::Tensor;
use crate::error::Result;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl Linear {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        fan_in: usize,
        fan_out: usize,
        rng: &mut RngStream,
    ) -> Self {
        Self {
            w: store.add_weight(format!("{name}.w"), fan_in, fan_out, rng),
            b: store.add_bias(format!("{name}.b"), fan_out),
            fan_in,
            fan_out,
        }
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let w = tape.param(store, self.w);
        let b = tape.param(store, self.b);
        tape.affine(x, w, b)
    }

    pub fn zero(&self, store: &mut ParamStore) {
        store.value_mut(self.w).data_mut().fill(0.0);
        store.value_mut(self.b).data_mut().fill(0.0);
    }
}

/// Two-layer perceptron: `out(act(hidden(x)))`.
#[derive(Debug, Clone, Copy)]
pub struct Mlp {
    pub hidden: Linear,
    pub out: Linear,
    pub act: Activation,
}

impl Mlp {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        width: usize,
        output: usize,
        rng: &mut RngStream,
    ) -> Self {
        Self {
            hidden: Linear::new(store, &format!("{name}.hidden"), input, width, rng),
            out: Linear::new(store, &format!("{name}.out"), width, output, rng),
            act: Activation::Tanh,
        }
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let h = self.hidden.forward(tape, store, x)?;
        let h = tape.activation(h, self.act);
        self.out.forward(tape, store, h)
    }
}

/// Gated recurrent cell with fused gate weights, column blocks ordered
/// (reset, update, candidate).
///
/// ```text
/// r = sigmoid(u Wx_r + bx_r + h Wh_r + bh_r)
/// g = sigmoid(u Wx_g + bx_g + h Wh_g + bh_g)
/// n = tanh(u Wx_n + bx_n + r * (h Wh_n + bh_n))
/// h' = (1 - g) * h + g * n
/// ```
#[derive(Debug, Clone, Copy)]
pub struct GruCell {
    pub input: Linear,
    pub recurrent: Linear,
    pub hidden: usize,
}

impl GruCell {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        hidden: usize,
        rng: &mut RngStream,
    ) -> Self {
        Self {
            input: Linear::new(store, &format!("{name}.input"), input, 3 * hidden, rng),
            recurrent: Linear::new(store, &format!("{name}.recurrent"), hidden, 3 * hidden, rng),
            hidden,
        }
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, h_prev: Var, u: Var) -> Result<Var> {
        let hd = self.hidden;
        let xs = self.input.forward(tape, store, u)?;
        let hs = self.recurrent.forward(tape, store, h_prev)?;

        let xr = tape.slice_cols(xs, 0, hd)?;
        let hr = tape.slice_cols(hs, 0, hd)?;
        let pre_r = tape.add(xr, hr)?;
        let reset = tape.sigmoid(pre_r);

        let xg = tape.slice_cols(xs, hd, 2 * hd)?;
        let hg = tape.slice_cols(hs, hd, 2 * hd)?;
        let pre_g = tape.add(xg, hg)?;
        let update = tape.sigmoid(pre_g);

        let xn = tape.slice_cols(xs, 2 * hd, 3 * hd)?;
        let hn = tape.slice_cols(hs, 2 * hd, 3 * hd)?;
        let gated = tape.mul(reset, hn)?;
        let pre_n = tape.add(xn, gated)?;
        let candidate = tape.tanh(pre_n);

        let delta = tape.sub(candidate, h_prev)?;
        let step = tape.mul(update, delta)?;
        tape.add(h_prev, step)
    }

    /// Sets the update-gate input bias, e.g. to saturate the gate in tests.
    pub fn set_update_bias(&self, store: &mut ParamStore, value: f64) {
        let hd = self.hidden;
        store.value_mut(self.input.b).data_mut()[hd..2 * hd].fill(value);
    }
}

/// Zero `[rows, cols]` constant on the tape.
pub fn zeros(tape: &mut Tape, rows: usize, cols: usize) -> Var {
    tape.constant(Tensor::zeros(&[rows, cols]))
}
