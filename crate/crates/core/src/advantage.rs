//! Multi-agent weighted returns and advantages, plus single-agent GAE.
//!
//! Matrices are `Tensor2` with one row per time step and one column per agent.
//! Value matrices carry one extra row: the bootstrap value of the observation
//! following the last step. Every bootstrap is masked by `1 - done`.

use crate::error::{Error, Result};
use crate::nn::Tensor2;

/// `(x_i + β Σ_{j≠i} x_j) / N`
pub fn weighted_mean(xs: &[f64], i: usize, beta: f64) -> f64 {
    let others: f64 = xs
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, x)| x)
        .sum();
    (xs[i] + beta * others) / xs.len() as f64
}

fn check_shapes(rewards: &Tensor2, dones: &[bool], values: Option<&Tensor2>) -> Result<()> {
    if dones.len() != rewards.rows() {
        return Err(Error::dim("done flags", rewards.rows(), dones.len()));
    }
    if let Some(v) = values {
        if v.rows() != rewards.rows() + 1 {
            return Err(Error::dim("value rows (T + 1)", rewards.rows() + 1, v.rows()));
        }
        if v.cols() != rewards.cols() {
            return Err(Error::dim("value columns", rewards.cols(), v.cols()));
        }
    }
    Ok(())
}

/// `R_t^i = r̄_t^i + γ (1 - done_t) R_{t+1}^i` with `R_{T+1}^i = V̄(o_T^i)`.
pub fn discounted_returns(
    rewards: &Tensor2,
    dones: &[bool],
    terminal_values: &[f64],
    gamma: f64,
    beta: f64,
) -> Result<Tensor2> {
    check_shapes(rewards, dones, None)?;
    let (t_len, n) = rewards.shape();
    if terminal_values.len() != n {
        return Err(Error::dim("terminal values", n, terminal_values.len()));
    }
    let mut out = Tensor2::zeros(t_len, n);
    let mut next: Vec<f64> = (0..n).map(|i| weighted_mean(terminal_values, i, beta)).collect();
    for t in (0..t_len).rev() {
        let mask = if dones[t] { 0.0 } else { 1.0 };
        let row = rewards.row(t);
        for i in 0..n {
            let r = weighted_mean(row, i, beta) + gamma * mask * next[i];
            out.set(t, i, r);
            next[i] = r;
        }
    }
    Ok(out)
}

/// Per-agent TD residuals `r_t + γ (1 - done_t) V_{t+1} - V_t`.
pub fn td_residuals(rewards: &Tensor2, values: &Tensor2, dones: &[bool], gamma: f64) -> Result<Tensor2> {
    check_shapes(rewards, dones, Some(values))?;
    let (t_len, n) = rewards.shape();
    let mut out = Tensor2::zeros(t_len, n);
    for t in 0..t_len {
        let mask = if dones[t] { 0.0 } else { 1.0 };
        for i in 0..n {
            let td = rewards.get(t, i) + gamma * mask * values.get(t + 1, i) - values.get(t, i);
            out.set(t, i, td);
        }
    }
    Ok(out)
}

/// `δ_t^i = (td_t^i + β Σ_{j≠i} td_t^j) / N`
pub fn multi_agent_deltas(
    rewards: &Tensor2,
    values: &Tensor2,
    dones: &[bool],
    gamma: f64,
    beta: f64,
) -> Result<Tensor2> {
    let td = td_residuals(rewards, values, dones, gamma)?;
    let (t_len, n) = td.shape();
    let mut out = Tensor2::zeros(t_len, n);
    for t in 0..t_len {
        let row = td.row(t);
        for i in 0..n {
            out.set(t, i, weighted_mean(row, i, beta));
        }
    }
    Ok(out)
}

/// `Â_t = δ_t + γλ (1 - done_t) Â_{t+1}`, `Â_T = δ_T`.
pub fn gae(deltas: &Tensor2, dones: &[bool], gamma: f64, lambda: f64) -> Result<Tensor2> {
    check_shapes(deltas, dones, None)?;
    let (t_len, n) = deltas.shape();
    let mut out = Tensor2::zeros(t_len, n);
    let mut next = vec![0.0; n];
    for t in (0..t_len).rev() {
        let mask = if dones[t] { 0.0 } else { 1.0 };
        for i in 0..n {
            let a = deltas.get(t, i) + gamma * lambda * mask * next[i];
            out.set(t, i, a);
            next[i] = a;
        }
    }
    Ok(out)
}

/// Standard single-agent GAE over one agent's stream. `values` has `T + 1` entries.
pub fn single_agent_gae(rewards: &[f64], values: &[f64], dones: &[bool], gamma: f64, lambda: f64) -> Result<Vec<f64>> {
    let r = Tensor2::from_vec(rewards.len(), 1, rewards.to_vec());
    let v = Tensor2::from_vec(values.len(), 1, values.to_vec());
    let td = td_residuals(&r, &v, dones, gamma)?;
    Ok(gae(&td, dones, gamma, lambda)?.values().to_vec())
}

/// Standard single-agent discounted return with a bootstrap value.
pub fn single_agent_returns(rewards: &[f64], dones: &[bool], terminal_value: f64, gamma: f64) -> Result<Vec<f64>> {
    let r = Tensor2::from_vec(rewards.len(), 1, rewards.to_vec());
    Ok(discounted_returns(&r, dones, &[terminal_value], gamma, 0.0)?
        .values()
        .to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
}

/// Shifts and scales to zero mean and unit (population) standard deviation.
///
/// A constant batch is only centred.
pub fn normalize(values: &mut [f64]) -> NormStats {
    if values.is_empty() {
        return NormStats { mean: 0.0, std: 0.0 };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if std > 1e-12 { 1.0 / std } else { 1.0 };
    values.iter_mut().for_each(|v| *v = (*v - mean) * scale);
    NormStats { mean, std }
}

/// Advantages and return targets for one environment's rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageBatch {
    pub advantages: Tensor2,
    pub returns: Tensor2,
}

/// Which estimator feeds the actor and critic targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    /// Independent per-agent GAE and returns; β is ignored.
    SingleAgent,
    /// Weighted multi-agent returns and advantages with the given β.
    MultiAgent { beta: f64 },
}

pub fn estimate(
    estimator: Estimator,
    rewards: &Tensor2,
    values: &Tensor2,
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<AdvantageBatch> {
    check_shapes(rewards, dones, Some(values))?;
    let (t_len, n) = rewards.shape();
    match estimator {
        Estimator::MultiAgent { beta } => {
            let deltas = multi_agent_deltas(rewards, values, dones, gamma, beta)?;
            let advantages = gae(&deltas, dones, gamma, lambda)?;
            let returns = discounted_returns(rewards, dones, values.row(t_len), gamma, beta)?;
            Ok(AdvantageBatch { advantages, returns })
        }
        Estimator::SingleAgent => {
            let mut advantages = Tensor2::zeros(t_len, n);
            let mut returns = Tensor2::zeros(t_len, n);
            for i in 0..n {
                let r: Vec<f64> = (0..t_len).map(|t| rewards.get(t, i)).collect();
                let v: Vec<f64> = (0..=t_len).map(|t| values.get(t, i)).collect();
                let a = single_agent_gae(&r, &v, dones, gamma, lambda)?;
                let ret = single_agent_returns(&r, dones, v[t_len], gamma)?;
                for t in 0..t_len {
                    advantages.set(t, i, a[t]);
                    returns.set(t, i, ret[t]);
                }
            }
            Ok(AdvantageBatch { advantages, returns })
        }
    }
}
