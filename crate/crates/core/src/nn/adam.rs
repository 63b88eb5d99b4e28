use super::{ParamBlock, Params};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam update applied in place, then gradients are zeroed.
///
/// `t` is the 1-based step count. Nothing is modified if any gradient is non-finite.
pub fn adam_step(blocks: &mut [&mut ParamBlock], cfg: &AdamConfig, t: u64) -> Result<()> {
    if t == 0 {
        return Err(Error::Contract("adam step count must be >= 1".into()));
    }
    for b in blocks.iter() {
        if !b.grads.is_finite() {
            return Err(Error::NonFinite {
                context: format!("gradient of {}", b.name),
                step: t as usize,
            });
        }
    }
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    for b in blocks.iter_mut() {
        let ParamBlock {
            weights,
            grads,
            adam_m,
            adam_v,
            ..
        } = &mut **b;
        let w = weights.values_mut();
        let g = grads.values_mut();
        let m = adam_m.values_mut();
        let v = adam_v.values_mut();
        for k in 0..w.len() {
            let gk = g[k];
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
            let m_hat = m[k] / bc1;
            let v_hat = v[k] / bc2;
            w[k] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            g[k] = 0.0;
        }
    }
    Ok(())
}

/// Adam optimizer state for one parameter set: config plus step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self { config, t: 0 }
    }

    pub fn step<P: Params + ?Sized>(&mut self, params: &mut P) -> Result<()> {
        self.t += 1;
        let mut blocks = params.blocks_mut();
        adam_step(&mut blocks, &self.config, self.t)
    }
}
