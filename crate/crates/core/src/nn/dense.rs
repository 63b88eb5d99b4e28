use rand::Rng;

use super::{ParamBlock, Params, Tensor2};
use crate::error::{Error, Result};

/// Fully connected layer `y = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: ParamBlock,
    pub bias: ParamBlock,
}

impl Dense {
    /// Uniform(-k, k) weights with `k = 1/sqrt(fan_in)`, zero bias.
    pub fn new<R: Rng + ?Sized>(name: &str, inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs.max(1) as f64).sqrt();
        Self {
            weight: ParamBlock::new(
                format!("{name}.w"),
                Tensor2::uniform(outputs, inputs, bound, rng),
            ),
            bias: ParamBlock::zeros(format!("{name}.b"), outputs, 1),
        }
    }

    pub fn zeros(name: &str, inputs: usize, outputs: usize) -> Self {
        Self {
            weight: ParamBlock::zeros(format!("{name}.w"), outputs, inputs),
            bias: ParamBlock::zeros(format!("{name}.b"), outputs, 1),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.weights.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs() {
            return Err(Error::dim(&self.weight.name, self.inputs(), x.len()));
        }
        let mut y = self.bias.weights.values().to_vec();
        self.weight.weights.matvec_acc(x, &mut y);
        Ok(y)
    }

    /// Accumulates `∂L/∂W` and `∂L/∂b` and returns `∂L/∂x`.
    pub fn backward(&mut self, x: &[f64], dy: &[f64]) -> Vec<f64> {
        self.weight.grads.outer_acc(dy, x);
        for (g, d) in self.bias.grads.values_mut().iter_mut().zip(dy) {
            *g += d;
        }
        let mut dx = vec![0.0; self.inputs()];
        self.weight.weights.matvec_t_acc(dy, &mut dx);
        dx
    }
}

impl Params for Dense {
    fn blocks(&self) -> Vec<&ParamBlock> {
        vec![&self.weight, &self.bias]
    }

    fn blocks_mut(&mut self) -> Vec<&mut ParamBlock> {
        vec![&mut self.weight, &mut self.bias]
    }
}

pub fn tanh_forward(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.tanh()).collect()
}

/// Gradient through `y = tanh(x)` given the forward output `y`.
pub fn tanh_backward(y: &[f64], dy: &[f64]) -> Vec<f64> {
    y.iter().zip(dy).map(|(y, d)| d * (1.0 - y * y)).collect()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
