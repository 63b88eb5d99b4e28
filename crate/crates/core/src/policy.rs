//! Shared-parameter actor, centralized critic and action distributions.
//!
//! Both networks are `dense + tanh -> core -> dense head`, where the core is an
//! LSTM cell for recurrent variants or a second `dense + tanh` layer of the same
//! width for feed-forward variants.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::nn::{tanh_backward, tanh_forward, Dense, LstmCache, LstmCell, LstmState, ParamBlock, Params};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSpace {
    Discrete(usize),
    Continuous(usize),
}

impl ActionSpace {
    /// Width of the policy head output.
    pub fn head_width(&self) -> usize {
        match *self {
            ActionSpace::Discrete(n) | ActionSpace::Continuous(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    /// Numeric encoding used as an optional critic input.
    pub fn encode(&self, space: ActionSpace, out: &mut Vec<f64>) {
        match (self, space) {
            (Action::Discrete(a), ActionSpace::Discrete(n)) => {
                out.extend((0..n).map(|k| if k == *a { 1.0 } else { 0.0 }));
            }
            (Action::Continuous(v), _) => out.extend(v.iter().copied()),
            (Action::Discrete(a), ActionSpace::Continuous(_)) => out.push(*a as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionDistribution {
    Categorical { logits: Vec<f64> },
    Gaussian { mean: Vec<f64>, log_std: Vec<f64> },
}

/// Gradient of a scalar w.r.t. the distribution parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DistGrad {
    /// w.r.t. logits or mean
    pub head: Vec<f64>,
    /// w.r.t. (clamped) log_std; empty for categorical
    pub log_std: Vec<f64>,
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

impl ActionDistribution {
    pub fn probabilities(&self) -> Option<Vec<f64>> {
        match self {
            ActionDistribution::Categorical { logits } => {
                Some(log_softmax(logits).into_iter().map(f64::exp).collect())
            }
            ActionDistribution::Gaussian { .. } => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Action, f64) {
        match self {
            ActionDistribution::Categorical { logits } => {
                let logp = log_softmax(logits);
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut pick = logp.len() - 1;
                for (k, lp) in logp.iter().enumerate() {
                    acc += lp.exp();
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                (Action::Discrete(pick), logp[pick])
            }
            ActionDistribution::Gaussian { mean, log_std } => {
                let x: Vec<f64> = mean
                    .iter()
                    .zip(log_std)
                    .map(|(m, ls)| {
                        let z: f64 = StandardNormal.sample(rng);
                        m + ls.exp() * z
                    })
                    .collect();
                let action = Action::Continuous(x);
                let lp = self
                    .log_prob_entropy(&action)
                    .expect("sampled action lies in support")
                    .0;
                (action, lp)
            }
        }
    }

    pub fn log_prob_entropy(&self, action: &Action) -> Result<(f64, f64)> {
        let (lp, ent, _, _) = self.log_prob_entropy_grads(action)?;
        Ok((lp, ent))
    }

    /// Log-probability and entropy together with their gradients w.r.t. the
    /// distribution parameters.
    pub fn log_prob_entropy_grads(&self, action: &Action) -> Result<(f64, f64, DistGrad, DistGrad)> {
        match (self, action) {
            (ActionDistribution::Categorical { logits }, Action::Discrete(a)) => {
                if *a >= logits.len() {
                    return Err(Error::Contract(format!(
                        "action index {a} out of range for {} actions",
                        logits.len()
                    )));
                }
                let logp = log_softmax(logits);
                let p: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
                let entropy = -p
                    .iter()
                    .zip(&logp)
                    .map(|(p, l)| if *p > 0.0 { p * l } else { 0.0 })
                    .sum::<f64>();
                let d_logp = p
                    .iter()
                    .enumerate()
                    .map(|(k, pk)| if k == *a { 1.0 - pk } else { -pk })
                    .collect();
                let d_ent = p
                    .iter()
                    .zip(&logp)
                    .map(|(pk, lk)| if *pk > 0.0 { -pk * (lk + entropy) } else { 0.0 })
                    .collect();
                Ok((
                    logp[*a],
                    entropy,
                    DistGrad { head: d_logp, log_std: Vec::new() },
                    DistGrad { head: d_ent, log_std: Vec::new() },
                ))
            }
            (ActionDistribution::Gaussian { mean, log_std }, Action::Continuous(x)) => {
                if x.len() != mean.len() {
                    return Err(Error::dim("gaussian action", mean.len(), x.len()));
                }
                let mut lp = 0.0;
                let mut d_mean = Vec::with_capacity(mean.len());
                let mut d_ls = Vec::with_capacity(mean.len());
                for ((xi, mi), ls) in x.iter().zip(mean).zip(log_std) {
                    let sigma = ls.exp();
                    let z = (xi - mi) / sigma;
                    lp += -0.5 * z * z - ls - 0.5 * LN_2PI;
                    d_mean.push(z / sigma);
                    d_ls.push(z * z - 1.0);
                }
                let entropy = log_std.iter().map(|ls| 0.5 * (LN_2PI + 1.0) + ls).sum();
                Ok((
                    lp,
                    entropy,
                    DistGrad { head: d_mean, log_std: d_ls },
                    DistGrad { head: vec![0.0; mean.len()], log_std: vec![1.0; mean.len()] },
                ))
            }
            _ => Err(Error::Contract("action kind does not match distribution".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreKind {
    Lstm,
    FeedForward,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Core {
    Lstm(LstmCell),
    FeedForward(Dense),
}

#[derive(Debug, Clone)]
enum CoreCache {
    Lstm(LstmCache),
    FeedForward(Vec<f64>),
}

/// Embedding plus recurrent or feed-forward core.
#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    pub embed: Dense,
    pub core: Core,
}

#[derive(Debug, Clone)]
pub struct BodyCache {
    x: Vec<f64>,
    embedded: Vec<f64>,
    core: CoreCache,
}

impl Body {
    fn new<R: Rng + ?Sized>(name: &str, kind: CoreKind, inputs: usize, hidden: usize, rng: &mut R) -> Self {
        let embed = Dense::new(&format!("{name}.embed"), inputs, hidden, rng);
        let core = match kind {
            CoreKind::Lstm => Core::Lstm(LstmCell::new(&format!("{name}.lstm"), hidden, hidden, rng)),
            CoreKind::FeedForward => Core::FeedForward(Dense::new(&format!("{name}.ff"), hidden, hidden, rng)),
        };
        Self { embed, core }
    }

    fn zeros(name: &str, kind: CoreKind, inputs: usize, hidden: usize) -> Self {
        let embed = Dense::zeros(&format!("{name}.embed"), inputs, hidden);
        let core = match kind {
            CoreKind::Lstm => Core::Lstm(LstmCell::zeros(&format!("{name}.lstm"), hidden, hidden)),
            CoreKind::FeedForward => Core::FeedForward(Dense::zeros(&format!("{name}.ff"), hidden, hidden)),
        };
        Self { embed, core }
    }

    pub fn hidden(&self) -> usize {
        self.embed.outputs()
    }

    pub fn inputs(&self) -> usize {
        self.embed.inputs()
    }

    pub fn kind(&self) -> CoreKind {
        match self.core {
            Core::Lstm(_) => CoreKind::Lstm,
            Core::FeedForward(_) => CoreKind::FeedForward,
        }
    }

    /// Returns `(features, next_state, cache)`. Feed-forward cores pass the state through.
    fn step(&self, x: &[f64], state: &LstmState) -> Result<(Vec<f64>, LstmState, BodyCache)> {
        let embedded = tanh_forward(&self.embed.forward(x)?);
        let (features, next, core) = match &self.core {
            Core::Lstm(cell) => {
                let (next, cache) = cell.step(&embedded, state)?;
                (next.h.clone(), next, CoreCache::Lstm(cache))
            }
            Core::FeedForward(dense) => {
                let out = tanh_forward(&dense.forward(&embedded)?);
                (out.clone(), state.clone(), CoreCache::FeedForward(out))
            }
        };
        Ok((
            features,
            next,
            BodyCache {
                x: x.to_vec(),
                embedded,
                core,
            },
        ))
    }

    /// Returns `(dh_prev, dc_prev)`; both zero for feed-forward cores.
    fn backward(&mut self, cache: &BodyCache, d_features: &[f64], dh: &[f64], dc: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let hidden = self.hidden();
        let (d_embedded, dh_prev, dc_prev) = match (&mut self.core, &cache.core) {
            (Core::Lstm(cell), CoreCache::Lstm(lc)) => {
                let dh_total: Vec<f64> = d_features.iter().zip(dh).map(|(a, b)| a + b).collect();
                cell.backward(lc, &dh_total, dc)
            }
            (Core::FeedForward(dense), CoreCache::FeedForward(out)) => {
                let d_pre = tanh_backward(out, d_features);
                let de = dense.backward(&cache.embedded, &d_pre);
                (de, vec![0.0; hidden], vec![0.0; hidden])
            }
            _ => unreachable!("cache kind matches core kind"),
        };
        let d_pre = tanh_backward(&cache.embedded, &d_embedded);
        self.embed.backward(&cache.x, &d_pre);
        (dh_prev, dc_prev)
    }

    fn blocks(&self) -> Vec<&ParamBlock> {
        let mut v = self.embed.blocks();
        match &self.core {
            Core::Lstm(c) => v.extend(c.blocks()),
            Core::FeedForward(d) => v.extend(d.blocks()),
        }
        v
    }

    fn blocks_mut(&mut self) -> Vec<&mut ParamBlock> {
        let mut v = self.embed.blocks_mut();
        match &mut self.core {
            Core::Lstm(c) => v.extend(c.blocks_mut()),
            Core::FeedForward(d) => v.extend(d.blocks_mut()),
        }
        v
    }
}

/// One actor network shared by every agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorParams {
    pub body: Body,
    pub head: Dense,
    /// State-independent log standard deviation (continuous spaces only).
    pub log_std: Option<ParamBlock>,
    pub space: ActionSpace,
}

#[derive(Debug, Clone)]
pub struct ActorCache {
    body: BodyCache,
    features: Vec<f64>,
}

impl ActorParams {
    pub fn new<R: Rng + ?Sized>(kind: CoreKind, obs_width: usize, hidden: usize, space: ActionSpace, rng: &mut R) -> Self {
        let body = Body::new("actor", kind, obs_width, hidden, rng);
        let head = Dense::new("actor.head", hidden, space.head_width(), rng);
        Self {
            body,
            head,
            log_std: Self::log_std_block(space),
            space,
        }
    }

    pub fn zeros(kind: CoreKind, obs_width: usize, hidden: usize, space: ActionSpace) -> Self {
        Self {
            body: Body::zeros("actor", kind, obs_width, hidden),
            head: Dense::zeros("actor.head", hidden, space.head_width()),
            log_std: Self::log_std_block(space),
            space,
        }
    }

    fn log_std_block(space: ActionSpace) -> Option<ParamBlock> {
        match space {
            ActionSpace::Continuous(d) => Some(ParamBlock::zeros("actor.log_std", d, 1)),
            ActionSpace::Discrete(_) => None,
        }
    }

    pub fn hidden(&self) -> usize {
        self.body.hidden()
    }

    pub fn obs_width(&self) -> usize {
        self.body.inputs()
    }

    pub fn initial_state(&self) -> LstmState {
        LstmState::zeros(self.hidden())
    }

    fn distribution(&self, head_out: Vec<f64>) -> ActionDistribution {
        match self.space {
            ActionSpace::Discrete(_) => ActionDistribution::Categorical { logits: head_out },
            ActionSpace::Continuous(_) => {
                let log_std = self
                    .log_std
                    .as_ref()
                    .expect("continuous actor owns log_std")
                    .weights
                    .values()
                    .iter()
                    .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
                    .collect();
                ActionDistribution::Gaussian {
                    mean: head_out,
                    log_std,
                }
            }
        }
    }

    pub fn forward(&self, obs: &[f64], state: &LstmState) -> Result<(ActionDistribution, LstmState)> {
        let (dist, next, _) = self.forward_cached(obs, state)?;
        Ok((dist, next))
    }

    pub fn forward_cached(&self, obs: &[f64], state: &LstmState) -> Result<(ActionDistribution, LstmState, ActorCache)> {
        let (features, next, body) = self.body.step(obs, state)?;
        let out = self.head.forward(&features)?;
        Ok((self.distribution(out), next, ActorCache { body, features }))
    }

    /// Backpropagates `grad` (w.r.t. the distribution parameters) through one step.
    pub fn backward(&mut self, cache: &ActorCache, grad: &DistGrad, dh: &[f64], dc: &[f64]) -> (Vec<f64>, Vec<f64>) {
        if let Some(ls) = self.log_std.as_mut() {
            for k in 0..grad.log_std.len() {
                let raw = ls.weights.get(k, 0);
                if raw > LOG_STD_MIN && raw < LOG_STD_MAX {
                    let g = ls.grads.get(k, 0);
                    ls.grads.set(k, 0, g + grad.log_std[k]);
                }
            }
        }
        let d_features = self.head.backward(&cache.features, &grad.head);
        self.body.backward(&cache.body, &d_features, dh, dc)
    }
}

impl Params for ActorParams {
    fn blocks(&self) -> Vec<&ParamBlock> {
        let mut v = self.body.blocks();
        v.extend(self.head.blocks());
        if let Some(ls) = &self.log_std {
            v.push(ls);
        }
        v
    }

    fn blocks_mut(&mut self) -> Vec<&mut ParamBlock> {
        let mut v = self.body.blocks_mut();
        v.extend(self.head.blocks_mut());
        if let Some(ls) = &mut self.log_std {
            v.push(ls);
        }
        v
    }
}

/// The single centralized critic.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticParams {
    pub body: Body,
    pub head: Dense,
}

#[derive(Debug, Clone)]
pub struct CriticCache {
    body: BodyCache,
    features: Vec<f64>,
}

impl CriticParams {
    pub fn new<R: Rng + ?Sized>(kind: CoreKind, input_width: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            body: Body::new("critic", kind, input_width, hidden, rng),
            head: Dense::new("critic.head", hidden, 1, rng),
        }
    }

    pub fn zeros(kind: CoreKind, input_width: usize, hidden: usize) -> Self {
        Self {
            body: Body::zeros("critic", kind, input_width, hidden),
            head: Dense::zeros("critic.head", hidden, 1),
        }
    }

    pub fn hidden(&self) -> usize {
        self.body.hidden()
    }

    pub fn input_width(&self) -> usize {
        self.body.inputs()
    }

    pub fn initial_state(&self) -> LstmState {
        LstmState::zeros(self.hidden())
    }

    pub fn forward_cached(&self, input: &[f64], state: &LstmState) -> Result<(f64, LstmState, CriticCache)> {
        let (features, next, body) = self.body.step(input, state)?;
        let v = self.head.forward(&features)?[0];
        Ok((v, next, CriticCache { body, features }))
    }

    pub fn forward(&self, input: &[f64], state: &LstmState) -> Result<(f64, LstmState)> {
        let (v, s, _) = self.forward_cached(input, state)?;
        Ok((v, s))
    }

    pub fn backward(&mut self, cache: &CriticCache, d_value: f64, dh: &[f64], dc: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d_features = self.head.backward(&cache.features, &[d_value]);
        self.body.backward(&cache.body, &d_features, dh, dc)
    }

    /// Evaluates a meta-ordered input sequence with one continuous hidden state.
    ///
    /// Returns one value per entry and the state *after* each entry, so
    /// evaluation can resume from any split point.
    pub fn forward_meta(&self, inputs: &[Vec<f64>], state0: &LstmState) -> Result<(Vec<f64>, Vec<LstmState>)> {
        self.forward_meta_with_resets(inputs, state0, |_| false)
    }

    /// Like [`CriticParams::forward_meta`], zeroing the state before every
    /// entry `k` with `reset_before(k)`.
    pub fn forward_meta_with_resets(
        &self,
        inputs: &[Vec<f64>],
        state0: &LstmState,
        reset_before: impl Fn(usize) -> bool,
    ) -> Result<(Vec<f64>, Vec<LstmState>)> {
        if inputs.is_empty() {
            return Err(Error::Contract("critic sequence is empty".into()));
        }
        let mut values = Vec::with_capacity(inputs.len());
        let mut states = Vec::with_capacity(inputs.len());
        let mut state = state0.clone();
        for (k, x) in inputs.iter().enumerate() {
            if reset_before(k) {
                state.reset();
            }
            let (v, next) = self.forward(x, &state).map_err(|e| match e {
                Error::NonFinite { context, .. } => Error::NonFinite { context, step: k },
                other => other,
            })?;
            values.push(v);
            states.push(next.clone());
            state = next;
        }
        Ok((values, states))
    }
}

impl Params for CriticParams {
    fn blocks(&self) -> Vec<&ParamBlock> {
        let mut v = self.body.blocks();
        v.extend(self.head.blocks());
        v
    }

    fn blocks_mut(&mut self) -> Vec<&mut ParamBlock> {
        let mut v = self.body.blocks_mut();
        v.extend(self.head.blocks_mut());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_actor_gives_uniform_logits() {
        let actor = ActorParams::zeros(CoreKind::Lstm, 6, 8, ActionSpace::Discrete(5));
        for obs in [[0.0; 6], [1.0, -3.0, 2.0, 0.5, 9.0, -1.0]] {
            let (dist, _) = actor.forward(&obs, &actor.initial_state()).unwrap();
            assert_eq!(dist, ActionDistribution::Categorical { logits: vec![0.0; 5] });
        }
    }

    #[test]
    fn actor_is_pure_and_agent_agnostic() {
        let actor = ActorParams::new(CoreKind::Lstm, 4, 8, ActionSpace::Discrete(3), &mut rng(3));
        let obs = [vec![0.1, 0.2, -0.3, 0.4], vec![-1.0, 0.0, 0.5, 0.25]];
        let state = LstmState {
            h: (0..8).map(|k| k as f64 * 0.05).collect(),
            c: (0..8).map(|k| -(k as f64) * 0.1).collect(),
        };
        // agent order (0, 1) versus (1, 0): outputs are a function of inputs alone
        let a: Vec<_> = obs.iter().map(|o| actor.forward(o, &state).unwrap()).collect();
        let b: Vec<_> = obs.iter().rev().map(|o| actor.forward(o, &state).unwrap()).collect();
        assert_eq!(a[0], b[1]);
        assert_eq!(a[1], b[0]);
    }

    #[test]
    fn zero_critic_returns_head_bias() {
        let mut critic = CriticParams::zeros(CoreKind::Lstm, 3, 4);
        critic.head.bias.weights.set(0, 0, -0.75);
        let inputs: Vec<Vec<f64>> = (0..7).map(|k| vec![k as f64, 1.0, -2.0]).collect();
        let (values, states) = critic.forward_meta(&inputs, &critic.initial_state()).unwrap();
        assert_eq!(values, vec![-0.75; 7]);
        assert_eq!(states.len(), 7);
    }

    #[test]
    fn empty_meta_sequence_is_rejected() {
        let critic = CriticParams::zeros(CoreKind::Lstm, 3, 4);
        assert!(matches!(
            critic.forward_meta(&[], &critic.initial_state()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn split_meta_evaluation_matches_full_pass() {
        let critic = CriticParams::new(CoreKind::Lstm, 3, 6, &mut rng(9));
        let mut r = rng(10);
        let inputs: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..3).map(|_| r.gen_range(-1.0..1.0)).collect())
            .collect();
        let s0 = critic.initial_state();
        let (full, states) = critic.forward_meta(&inputs, &s0).unwrap();
        for split in 1..inputs.len() {
            let (head, _) = critic.forward_meta(&inputs[..split], &s0).unwrap();
            let (tail, _) = critic.forward_meta(&inputs[split..], &states[split - 1]).unwrap();
            let joined: Vec<u64> = head.iter().chain(&tail).map(|v| v.to_bits()).collect();
            let expect: Vec<u64> = full.iter().map(|v| v.to_bits()).collect();
            assert_eq!(joined, expect, "split at {split}");
        }
    }

    #[test]
    fn argmax_forcing_logit_is_always_sampled() {
        let dist = ActionDistribution::Categorical { logits: vec![0.0, 1e9, 0.0] };
        let mut r = rng(1);
        for _ in 0..1000 {
            let (a, lp) = dist.sample(&mut r);
            assert_eq!(a, Action::Discrete(1));
            assert_eq!(lp, 0.0);
        }
    }

    #[test]
    fn tiny_sigma_samples_the_mean() {
        let dist = ActionDistribution::Gaussian {
            mean: vec![0.3, -0.2],
            log_std: vec![LOG_STD_MIN - 30.0; 2],
        };
        let (a, _) = dist.sample(&mut rng(4));
        match a {
            Action::Continuous(x) => {
                assert!((x[0] - 0.3).abs() < 1e-12 && (x[1] + 0.2).abs() < 1e-12)
            }
            _ => panic!(),
        }
    }

    #[test]
    fn empirical_frequencies_match_softmax() {
        let dist = ActionDistribution::Categorical { logits: vec![0.0, 2f64.ln()] };
        let mut r = rng(77);
        let n = 100_000;
        let ones = (0..n)
            .filter(|_| dist.sample(&mut r).0 == Action::Discrete(1))
            .count();
        let p = 2.0 / 3.0;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((ones as f64 / n as f64 - p).abs() < 3.0 * se);
    }

    #[test]
    fn uniform_five_way_entropy() {
        let dist = ActionDistribution::Categorical { logits: vec![0.3; 5] };
        let (_, h) = dist.log_prob_entropy(&Action::Discrete(2)).unwrap();
        assert!((h - 5f64.ln()).abs() < 1e-12);
        assert!((h - 1.60944).abs() < 1e-5);
    }

    #[test]
    fn standard_normal_at_mode() {
        let dist = ActionDistribution::Gaussian { mean: vec![0.4], log_std: vec![0.0] };
        let (lp, h) = dist.log_prob_entropy(&Action::Continuous(vec![0.4])).unwrap();
        assert!((lp + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
        assert!((lp + 0.91894).abs() < 1e-5);
        assert_eq!(h, 0.5 * (LN_2PI + 1.0));
    }

    #[test]
    fn random_categorical_entropy_and_normalization() {
        let mut r = rng(5);
        for _ in 0..200 {
            let n = r.gen_range(2..9);
            let logits: Vec<f64> = (0..n).map(|_| r.gen_range(-4.0..4.0)).collect();
            let dist = ActionDistribution::Categorical { logits: logits.clone() };
            // direct-sum oracle
            let z: f64 = logits.iter().map(|l| l.exp()).sum();
            let oracle: f64 = -logits.iter().map(|l| l.exp() / z).map(|p| p * p.ln()).sum::<f64>();
            let mut total = 0.0;
            for a in 0..n {
                let (lp, h) = dist.log_prob_entropy(&Action::Discrete(a)).unwrap();
                assert!((h - oracle).abs() < 1e-12);
                assert!(h >= 0.0);
                total += lp.exp();
            }
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn out_of_range_action_is_a_contract_error() {
        let dist = ActionDistribution::Categorical { logits: vec![0.0; 3] };
        assert!(matches!(
            dist.log_prob_entropy(&Action::Discrete(3)),
            Err(Error::Contract(_))
        ));
    }
}
