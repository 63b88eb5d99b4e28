use super::Tensor2;

/// A named trainable tensor with its gradient buffer and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlock {
    pub name: String,
    pub weights: Tensor2,
    pub grads: Tensor2,
    pub adam_m: Tensor2,
    pub adam_v: Tensor2,
}

impl ParamBlock {
    pub fn new(name: impl Into<String>, weights: Tensor2) -> Self {
        let (r, c) = weights.shape();
        Self {
            name: name.into(),
            weights,
            grads: Tensor2::zeros(r, c),
            adam_m: Tensor2::zeros(r, c),
            adam_v: Tensor2::zeros(r, c),
        }
    }

    pub fn zeros(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Self::new(name, Tensor2::zeros(rows, cols))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.weights.shape()
    }

    pub fn zero_grad(&mut self) {
        self.grads.fill(0.0);
    }
}

/// Anything owning trainable parameter blocks.
///
/// Block order is stable; checkpoints and optimizers rely on it.
pub trait Params {
    fn blocks(&self) -> Vec<&ParamBlock>;
    fn blocks_mut(&mut self) -> Vec<&mut ParamBlock>;

    fn zero_grad(&mut self) {
        for b in self.blocks_mut() {
            b.zero_grad();
        }
    }

    fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.weights.len()).sum()
    }

    /// Flattened copy of all gradients in block order.
    fn flat_grads(&self) -> Vec<f64> {
        self.blocks()
            .iter()
            .flat_map(|b| b.grads.values().iter().copied())
            .collect()
    }
}
