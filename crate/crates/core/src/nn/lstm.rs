use rand::Rng;

use super::dense::sigmoid;
use super::{ParamBlock, Params, Tensor2};
use crate::error::{Error, Result};

/// Recurrent state `(h, c)` of a single LSTM layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }

    pub fn hidden(&self) -> usize {
        self.h.len()
    }

    pub fn reset(&mut self) {
        self.h.iter_mut().for_each(|v| *v = 0.0);
        self.c.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn bit_eq(&self, other: &Self) -> bool {
        self.h.len() == other.h.len()
            && self.h.iter().zip(&other.h).all(|(a, b)| a.to_bits() == b.to_bits())
            && self.c.iter().zip(&other.c).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Intermediates of one cell step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Standard LSTM cell without peepholes. Gate rows are ordered `i, f, g, o`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    pub w_ih: ParamBlock,
    pub w_hh: ParamBlock,
    pub bias: ParamBlock,
}

impl LstmCell {
    /// Uniform(-k, k) weights with `k = 1/sqrt(hidden)`; forget-gate bias 1, others 0.
    pub fn new<R: Rng + ?Sized>(name: &str, inputs: usize, hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden.max(1) as f64).sqrt();
        let mut bias = Tensor2::zeros(4 * hidden, 1);
        for r in hidden..2 * hidden {
            bias.set(r, 0, 1.0);
        }
        Self {
            w_ih: ParamBlock::new(
                format!("{name}.w_ih"),
                Tensor2::uniform(4 * hidden, inputs, bound, rng),
            ),
            w_hh: ParamBlock::new(
                format!("{name}.w_hh"),
                Tensor2::uniform(4 * hidden, hidden, bound, rng),
            ),
            bias: ParamBlock::new(format!("{name}.b"), bias),
        }
    }

    pub fn zeros(name: &str, inputs: usize, hidden: usize) -> Self {
        Self {
            w_ih: ParamBlock::zeros(format!("{name}.w_ih"), 4 * hidden, inputs),
            w_hh: ParamBlock::zeros(format!("{name}.w_hh"), 4 * hidden, hidden),
            bias: ParamBlock::zeros(format!("{name}.b"), 4 * hidden, 1),
        }
    }

    pub fn inputs(&self) -> usize {
        self.w_ih.weights.cols()
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.weights.cols()
    }

    /// One step. Errors on a non-finite input (reported as step 0; see [`LstmCell::run`]).
    pub fn step(&self, x: &[f64], state: &LstmState) -> Result<(LstmState, LstmCache)> {
        let hidden = self.hidden();
        if x.len() != self.inputs() {
            return Err(Error::dim(&self.w_ih.name, self.inputs(), x.len()));
        }
        if state.hidden() != hidden || state.c.len() != hidden {
            return Err(Error::dim("lstm state", hidden, state.hidden()));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("{} input", self.w_ih.name),
                step: 0,
            });
        }

        let mut z = self.bias.weights.values().to_vec();
        self.w_ih.weights.matvec_acc(x, &mut z);
        self.w_hh.weights.matvec_acc(&state.h, &mut z);

        let i: Vec<f64> = z[..hidden].iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<f64> = z[hidden..2 * hidden].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = z[2 * hidden..3 * hidden].iter().map(|v| v.tanh()).collect();
        let o: Vec<f64> = z[3 * hidden..].iter().map(|&v| sigmoid(v)).collect();

        let mut c = vec![0.0; hidden];
        let mut h = vec![0.0; hidden];
        let mut tanh_c = vec![0.0; hidden];
        for k in 0..hidden {
            c[k] = f[k] * state.c[k] + i[k] * g[k];
            tanh_c[k] = c[k].tanh();
            h[k] = o[k] * tanh_c[k];
        }

        let cache = LstmCache {
            x: x.to_vec(),
            h_prev: state.h.clone(),
            c_prev: state.c.clone(),
            i,
            f,
            g,
            o,
            tanh_c,
        };
        Ok((LstmState { h, c }, cache))
    }

    /// Unrolls the cell over `xs`, returning every intermediate state and cache.
    pub fn run(
        &self,
        xs: &[Vec<f64>],
        state: &LstmState,
    ) -> Result<(Vec<LstmState>, Vec<LstmCache>)> {
        let mut states = Vec::with_capacity(xs.len());
        let mut caches = Vec::with_capacity(xs.len());
        let mut cur = state.clone();
        for (t, x) in xs.iter().enumerate() {
            let (next, cache) = self.step(x, &cur).map_err(|e| match e {
                Error::NonFinite { context, .. } => Error::NonFinite { context, step: t },
                other => other,
            })?;
            states.push(next.clone());
            caches.push(cache);
            cur = next;
        }
        Ok((states, caches))
    }

    /// Backward through one step.
    ///
    /// `dh`, `dc` are the total gradients arriving at this step's outputs. Returns
    /// `(dx, dh_prev, dc_prev)` and accumulates parameter gradients.
    pub fn backward(
        &mut self,
        cache: &LstmCache,
        dh: &[f64],
        dc: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let hidden = self.hidden();
        let mut dz = vec![0.0; 4 * hidden];
        let mut dc_prev = vec![0.0; hidden];
        for k in 0..hidden {
            let dct = dc[k] + dh[k] * cache.o[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]);
            let d_o = dh[k] * cache.tanh_c[k];
            let d_i = dct * cache.g[k];
            let d_g = dct * cache.i[k];
            let d_f = dct * cache.c_prev[k];
            dc_prev[k] = dct * cache.f[k];
            dz[k] = d_i * cache.i[k] * (1.0 - cache.i[k]);
            dz[hidden + k] = d_f * cache.f[k] * (1.0 - cache.f[k]);
            dz[2 * hidden + k] = d_g * (1.0 - cache.g[k] * cache.g[k]);
            dz[3 * hidden + k] = d_o * cache.o[k] * (1.0 - cache.o[k]);
        }
        self.w_ih.grads.outer_acc(&dz, &cache.x);
        self.w_hh.grads.outer_acc(&dz, &cache.h_prev);
        for (g, d) in self.bias.grads.values_mut().iter_mut().zip(&dz) {
            *g += d;
        }
        let mut dx = vec![0.0; self.inputs()];
        self.w_ih.weights.matvec_t_acc(&dz, &mut dx);
        let mut dh_prev = vec![0.0; hidden];
        self.w_hh.weights.matvec_t_acc(&dz, &mut dh_prev);
        (dx, dh_prev, dc_prev)
    }
}

impl Params for LstmCell {
    fn blocks(&self) -> Vec<&ParamBlock> {
        vec![&self.w_ih, &self.w_hh, &self.bias]
    }

    fn blocks_mut(&mut self) -> Vec<&mut ParamBlock> {
        vec![&mut self.w_ih, &mut self.w_hh, &mut self.bias]
    }
}
