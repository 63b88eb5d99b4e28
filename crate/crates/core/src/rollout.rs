//! On-policy data collection and meta-trajectory construction.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::nn::{LstmState, Tensor2};
use crate::policy::{Action, ActionSpace, ActorParams, CriticParams};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub agent_id: usize,
    /// 1-based time step within the rollout.
    pub t: usize,
    pub obs: Vec<f64>,
    pub action: Action,
    /// This agent's previous action in the current episode.
    pub prev_action: Option<Action>,
    pub reward: f64,
    pub done: bool,
    pub old_log_prob: f64,
    /// Filled in by [`value_pass`].
    pub old_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentTrajectory {
    pub agent_id: usize,
    pub transitions: Vec<Transition>,
    /// Actor state fed into each step (after any episode reset).
    pub actor_states: Vec<LstmState>,
    /// Observation following the last transition.
    pub bootstrap_obs: Vec<f64>,
    pub bootstrap_prev_action: Option<Action>,
}

impl AgentTrajectory {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }
}

/// One environment instance with everything that persists across rollouts.
pub struct EnvSlot {
    pub env: Box<dyn Environment>,
    pub rng: ChaCha8Rng,
    obs: Vec<Vec<f64>>,
    actor_states: Vec<LstmState>,
    prev_actions: Vec<Option<Action>>,
    /// Critic state carried into the next rollout: one for a meta critic, N otherwise.
    pub critic_carry: Vec<LstmState>,
}

impl EnvSlot {
    pub fn new(env: Box<dyn Environment>, actor_hidden: usize, seed: u64) -> Self {
        Self::with_rng(env, actor_hidden, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(mut env: Box<dyn Environment>, actor_hidden: usize, mut rng: ChaCha8Rng) -> Self {
        let obs = env.reset(&mut rng);
        let n = env.n_agents();
        Self {
            env,
            rng,
            obs,
            actor_states: vec![LstmState::zeros(actor_hidden); n],
            prev_actions: vec![None; n],
            critic_carry: Vec::new(),
        }
    }

    pub fn n_agents(&self) -> usize {
        self.env.n_agents()
    }

    /// Runs all agents for `horizon` steps with the shared actor.
    pub fn collect(&mut self, actor: &ActorParams, horizon: usize) -> Result<Vec<AgentTrajectory>> {
        let n = self.n_agents();
        let mut trajs: Vec<AgentTrajectory> = (0..n)
            .map(|i| AgentTrajectory {
                agent_id: i,
                transitions: Vec::with_capacity(horizon),
                actor_states: Vec::with_capacity(horizon),
                bootstrap_obs: Vec::new(),
                bootstrap_prev_action: None,
            })
            .collect();
        for t in 1..=horizon {
            let mut actions = Vec::with_capacity(n);
            let mut log_probs = Vec::with_capacity(n);
            for i in 0..n {
                trajs[i].actor_states.push(self.actor_states[i].clone());
                let (dist, next) = actor.forward(&self.obs[i], &self.actor_states[i])?;
                let (a, lp) = dist.sample(&mut self.rng);
                self.actor_states[i] = next;
                actions.push(a);
                log_probs.push(lp);
            }
            let step = self.env.step(&actions, &mut self.rng)?;
            if step.rewards.iter().any(|r| !r.is_finite()) {
                return Err(Error::NonFinite {
                    context: "environment reward".into(),
                    step: t,
                });
            }
            for (i, a) in actions.into_iter().enumerate() {
                trajs[i].transitions.push(Transition {
                    agent_id: i,
                    t,
                    obs: std::mem::take(&mut self.obs[i]),
                    action: a.clone(),
                    prev_action: self.prev_actions[i].take(),
                    reward: step.rewards[i],
                    done: step.done,
                    old_log_prob: log_probs[i],
                    old_value: 0.0,
                });
                self.prev_actions[i] = Some(a);
            }
            if step.done {
                self.obs = self.env.reset(&mut self.rng);
                self.actor_states.iter_mut().for_each(LstmState::reset);
                self.prev_actions.iter_mut().for_each(|a| *a = None);
            } else {
                self.obs = step.observations;
            }
        }
        for (i, traj) in trajs.iter_mut().enumerate() {
            traj.bootstrap_obs = self.obs[i].clone();
            traj.bootstrap_prev_action = self.prev_actions[i].clone();
        }
        Ok(trajs)
    }
}

/// Collects one rollout per slot. Slots own their RNG streams, so the result does
/// not depend on `parallel`.
pub fn collect_rollouts(
    slots: &mut [EnvSlot],
    actor: &ActorParams,
    horizon: usize,
    parallel: bool,
) -> Result<Vec<Vec<AgentTrajectory>>> {
    let run = |(idx, slot): (usize, &mut EnvSlot)| {
        slot.collect(actor, horizon).map_err(|e| Error::Env {
            index: idx,
            reason: e.to_string(),
        })
    };
    if parallel {
        slots.par_iter_mut().enumerate().map(run).collect()
    } else {
        slots.iter_mut().enumerate().map(run).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaEntry {
    pub agent: usize,
    /// 0-based time index.
    pub t: usize,
    pub input: Vec<f64>,
}

/// All agents' critic inputs interleaved per time step.
///
/// Entries `[t·N, t·N + N)` hold the time-`t` inputs of every agent, in the
/// order given by [`MetaTrajectory::order_map`]. `bootstrap` holds the inputs
/// for the observation following the last step, in the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaTrajectory {
    pub n_agents: usize,
    pub horizon: usize,
    pub order: Vec<usize>,
    pub entries: Vec<MetaEntry>,
    pub bootstrap: Vec<MetaEntry>,
    pub dones: Vec<bool>,
    /// Critic state fed into each entry; filled by [`value_pass`].
    pub states_before: Vec<LstmState>,
}

impl MetaTrajectory {
    /// Agent permutation used at time `t` (one permutation per rollout).
    pub fn order_map(&self, _t: usize) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Flat position of `(agent, t)`.
    pub fn position(&self, agent: usize, t: usize) -> usize {
        let slot = self
            .order
            .iter()
            .position(|&a| a == agent)
            .expect("agent is part of the permutation");
        t * self.n_agents + slot
    }

    /// Per-agent entry sequences recovered through `order_map`.
    pub fn deinterleave(&self) -> Vec<Vec<&MetaEntry>> {
        let mut out = vec![Vec::with_capacity(self.horizon); self.n_agents];
        for t in 0..self.horizon {
            for (slot, &agent) in self.order_map(t).iter().enumerate() {
                out[agent].push(&self.entries[t * self.n_agents + slot]);
            }
        }
        out
    }
}

/// Critic input of one agent at one step: observation, optionally followed by
/// the agent's previous action (zeros at episode start).
pub fn critic_input(obs: &[f64], prev: Option<&Action>, space: ActionSpace, include_prev_action: bool) -> Vec<f64> {
    let mut x = obs.to_vec();
    if include_prev_action {
        match prev {
            Some(a) => a.encode(space, &mut x),
            None => x.extend(std::iter::repeat(0.0).take(space.head_width())),
        }
    }
    x
}

pub fn critic_input_width(obs_width: usize, space: ActionSpace, include_prev_action: bool) -> usize {
    obs_width + if include_prev_action { space.head_width() } else { 0 }
}

/// Interleaves one environment's trajectories. With more than two agents the
/// agent order is a uniform random permutation drawn once per rollout.
pub fn build_meta_trajectory<R: Rng + ?Sized>(
    trajs: &[AgentTrajectory],
    space: ActionSpace,
    include_prev_action: bool,
    rng: &mut R,
) -> Result<MetaTrajectory> {
    let n = trajs.len();
    if n == 0 {
        return Err(Error::Contract("no trajectories to interleave".into()));
    }
    let horizon = trajs[0].len();
    if let Some(bad) = trajs.iter().find(|tr| tr.len() != horizon) {
        return Err(Error::Contract(format!(
            "agent {} has {} steps, expected {horizon}",
            bad.agent_id,
            bad.len()
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if n > 2 {
        order.shuffle(rng);
    }
    let mut entries = Vec::with_capacity(n * horizon);
    for t in 0..horizon {
        for &agent in &order {
            let tr = &trajs[agent].transitions[t];
            entries.push(MetaEntry {
                agent,
                t,
                input: critic_input(&tr.obs, tr.prev_action.as_ref(), space, include_prev_action),
            });
        }
    }
    let bootstrap = order
        .iter()
        .map(|&agent| MetaEntry {
            agent,
            t: horizon,
            input: critic_input(
                &trajs[agent].bootstrap_obs,
                trajs[agent].bootstrap_prev_action.as_ref(),
                space,
                include_prev_action,
            ),
        })
        .collect();
    let dones = (0..horizon).map(|t| trajs[0].transitions[t].done).collect();
    Ok(MetaTrajectory {
        n_agents: n,
        horizon,
        order,
        entries,
        bootstrap,
        dones,
        states_before: Vec::new(),
    })
}

/// How the critic consumes a rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticMode {
    /// One hidden state flowing through the interleaved sequence.
    Meta,
    /// A separate hidden state per agent over its own trajectory.
    PerAgent,
}

impl CriticMode {
    pub fn carry_len(&self, n_agents: usize) -> usize {
        match self {
            CriticMode::Meta => 1,
            CriticMode::PerAgent => n_agents,
        }
    }
}

/// Pre-update critic values for every `(t, agent)` plus the bootstrap row.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuePass {
    /// `T + 1` rows by `N` columns.
    pub values: Tensor2,
    /// Critic states to carry into the next rollout.
    pub carry: Vec<LstmState>,
}

/// Evaluates the critic once over a rollout, writes `old_value` into the
/// transitions and records the critic state fed into each meta entry.
///
/// Hidden states are zeroed at the first entry after an episode boundary.
pub fn value_pass(
    meta: &mut MetaTrajectory,
    trajs: &mut [AgentTrajectory],
    critic: &CriticParams,
    mode: CriticMode,
    initial: &[LstmState],
) -> Result<ValuePass> {
    let n = meta.n_agents;
    let horizon = meta.horizon;
    if initial.len() != mode.carry_len(n) {
        return Err(Error::dim("initial critic states", mode.carry_len(n), initial.len()));
    }
    let mut values = Tensor2::zeros(horizon + 1, n);
    let mut states_before = vec![LstmState::zeros(critic.hidden()); n * horizon];
    let reset_at = |t: usize| t > 0 && meta.dones[t - 1];
    let carry = match mode {
        CriticMode::Meta => {
            let mut state = initial[0].clone();
            for t in 0..horizon {
                if reset_at(t) {
                    state.reset();
                }
                for slot in 0..n {
                    let k = t * n + slot;
                    let e = &meta.entries[k];
                    states_before[k] = state.clone();
                    let (v, next) = critic.forward(&e.input, &state)?;
                    values.set(t, e.agent, v);
                    state = next;
                }
            }
            if reset_at(horizon) {
                state.reset();
            }
            let carry = vec![state.clone()];
            for e in &meta.bootstrap {
                let (v, next) = critic.forward(&e.input, &state)?;
                values.set(horizon, e.agent, v);
                state = next;
            }
            carry
        }
        CriticMode::PerAgent => {
            let mut states = initial.to_vec();
            for t in 0..horizon {
                if reset_at(t) {
                    states.iter_mut().for_each(LstmState::reset);
                }
                for slot in 0..n {
                    let k = t * n + slot;
                    let e = &meta.entries[k];
                    states_before[k] = states[e.agent].clone();
                    let (v, next) = critic.forward(&e.input, &states[e.agent])?;
                    values.set(t, e.agent, v);
                    states[e.agent] = next;
                }
            }
            if reset_at(horizon) {
                states.iter_mut().for_each(LstmState::reset);
            }
            for e in &meta.bootstrap {
                let (v, _) = critic.forward(&e.input, &states[e.agent])?;
                values.set(horizon, e.agent, v);
            }
            states
        }
    };
    for (i, tr) in trajs.iter_mut().enumerate() {
        for (t, x) in tr.transitions.iter_mut().enumerate() {
            x.old_value = values.get(t, i);
        }
    }
    meta.states_before = states_before;
    Ok(ValuePass { values, carry })
}

/// A contiguous window of `L` environment steps, all agents included.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub env: usize,
    pub steps: Range<usize>,
    /// Flat meta-trajectory range, `steps` times `N`.
    pub entries: Range<usize>,
    /// Actor state of each agent at `steps.start`.
    pub actor_states: Vec<LstmState>,
    /// Critic state(s) at `steps.start`: one for a meta critic, N otherwise.
    pub critic_states: Vec<LstmState>,
}

impl Chunk {
    pub fn samples(&self) -> usize {
        self.entries.len()
    }
}

/// Splits a rollout into non-overlapping chunks of `seq_len` steps (last one may
/// be shorter), each carrying the pre-update hidden states at its start.
pub fn chunk_for_training(
    env: usize,
    meta: &MetaTrajectory,
    trajs: &[AgentTrajectory],
    seq_len: usize,
    mode: CriticMode,
) -> Result<Vec<Chunk>> {
    if seq_len == 0 {
        return Err(Error::config("seq_len", "must be at least 1"));
    }
    if meta.states_before.len() != meta.entries.len() {
        return Err(Error::Contract("value_pass must run before chunking".into()));
    }
    let n = meta.n_agents;
    let mut chunks = Vec::with_capacity(meta.horizon.div_ceil(seq_len));
    let mut start = 0;
    while start < meta.horizon {
        let end = (start + seq_len).min(meta.horizon);
        let critic_states = match mode {
            CriticMode::Meta => vec![meta.states_before[start * n].clone()],
            CriticMode::PerAgent => (0..n)
                .map(|agent| meta.states_before[meta.position(agent, start)].clone())
                .collect(),
        };
        chunks.push(Chunk {
            env,
            steps: start..end,
            entries: start * n..end * n,
            actor_states: trajs.iter().map(|tr| tr.actor_states[start].clone()).collect(),
            critic_states,
        });
        start = end;
    }
    Ok(chunks)
}
