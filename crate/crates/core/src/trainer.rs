//! The optimisation loop: rollouts, weighted advantages, clipped-surrogate actor
//! updates and critic regression over recurrent chunks.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::advantage::{estimate, normalize, NormStats};
use crate::config::ExperimentConfig;
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::nn::{
    clip_grad_norm, decode_checkpoint, encode_checkpoint, Adam, AdamConfig, Checkpoint, LstmState, Params, Tensor2,
};
use crate::policy::{ActorParams, CriticParams, DistGrad};
use crate::rollout::{
    build_meta_trajectory, chunk_for_training, collect_rollouts, critic_input_width, value_pass, AgentTrajectory,
    Chunk, CriticMode, EnvSlot, MetaTrajectory,
};

/// Ratio deviation tolerated before the first update of an iteration.
pub const RATIO_INVARIANT_TOL: f64 = 1e-6;
const RATIO_EXPONENT_LIMIT: f64 = 20.0;

/// `exp(new - old)`, exponent clamped to ±20.
pub fn prob_ratio(new_log_prob: f64, old_log_prob: f64) -> f64 {
    (new_log_prob - old_log_prob)
        .clamp(-RATIO_EXPONENT_LIMIT, RATIO_EXPONENT_LIMIT)
        .exp()
}

/// `min(f·Â, clip(f, 1-ε, 1+ε)·Â)` for one sample.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> f64 {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * advantage;
    unclipped.min(clipped)
}

/// `-mean(surrogate) - c·mean(entropy)`; minimising it ascends the clipped objective.
pub fn actor_loss(ratios: &[f64], advantages: &[f64], entropies: &[f64], clip: f64, entropy_coef: f64) -> f64 {
    let n = ratios.len() as f64;
    let surrogate: f64 = ratios
        .iter()
        .zip(advantages)
        .map(|(&f, &a)| clipped_surrogate(f, a, clip))
        .sum::<f64>()
        / n;
    let entropy = entropies.iter().sum::<f64>() / entropies.len() as f64;
    -surrogate - entropy_coef * entropy
}

/// Mean squared error.
pub fn critic_loss(values: &[f64], targets: &[f64]) -> f64 {
    values
        .iter()
        .zip(targets)
        .map(|(v, t)| (v - t).powi(2))
        .sum::<f64>()
        / values.len() as f64
}

/// Everything the update phase needs from one environment's rollout.
#[derive(Debug, Clone)]
pub struct EnvRollout {
    pub trajs: Vec<AgentTrajectory>,
    pub meta: MetaTrajectory,
    /// `T + 1` rows of pre-update values.
    pub values: Tensor2,
    pub advantages: Tensor2,
    pub returns: Tensor2,
}

#[derive(Debug, Clone)]
pub struct TrainBatch {
    pub envs: Vec<EnvRollout>,
    pub chunks: Vec<Chunk>,
    pub adv_stats: Option<NormStats>,
}

impl TrainBatch {
    pub fn samples(&self) -> usize {
        self.chunks.iter().map(Chunk::samples).sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ActorTerms {
    pub loss: f64,
    pub surrogate: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub max_ratio_deviation: f64,
    pub samples: usize,
}

struct ActorStep {
    cache: crate::policy::ActorCache,
    grad: DistGrad,
    reset_before: bool,
}

/// Clipped-surrogate actor loss over `chunk_ids`, replaying each agent's
/// sequence from its stored hidden state. With `backward`, gradients are
/// accumulated into `actor` (truncated at chunk starts and episode resets).
pub fn actor_pass(
    actor: &mut ActorParams,
    batch: &TrainBatch,
    chunk_ids: &[usize],
    clip: f64,
    entropy_coef: f64,
    backward: bool,
) -> Result<ActorTerms> {
    let total: usize = chunk_ids.iter().map(|&c| batch.chunks[c].samples()).sum();
    if total == 0 {
        return Err(Error::Contract("empty minibatch".into()));
    }
    let scale = 1.0 / total as f64;
    let mut terms = ActorTerms {
        samples: total,
        ..Default::default()
    };
    let mut clipped = 0usize;
    let hidden = actor.hidden();
    for &cid in chunk_ids {
        let chunk = &batch.chunks[cid];
        let env = &batch.envs[chunk.env];
        for (agent, traj) in env.trajs.iter().enumerate() {
            let mut state = chunk.actor_states[agent].clone();
            let mut steps = Vec::with_capacity(chunk.steps.len());
            for t in chunk.steps.clone() {
                let reset_before = t > chunk.steps.start && env.meta.dones[t - 1];
                if reset_before {
                    state.reset();
                }
                let tr = &traj.transitions[t];
                let (dist, next, cache) = actor.forward_cached(&tr.obs, &state)?;
                let (log_prob, entropy, d_logp, d_ent) = dist.log_prob_entropy_grads(&tr.action)?;
                let diff = log_prob - tr.old_log_prob;
                let ratio = prob_ratio(log_prob, tr.old_log_prob);
                let adv = env.advantages.get(t, agent);
                let unclipped = ratio * adv;
                let bounded = ratio.clamp(1.0 - clip, 1.0 + clip) * adv;
                let surrogate = unclipped.min(bounded);
                terms.surrogate += surrogate * scale;
                terms.entropy += entropy * scale;
                terms.max_ratio_deviation = terms.max_ratio_deviation.max((ratio - 1.0).abs());
                if (ratio - 1.0).abs() > clip {
                    clipped += 1;
                }
                if backward {
                    let d_ratio = if diff.abs() < RATIO_EXPONENT_LIMIT { ratio } else { 0.0 };
                    let d_surr = if unclipped <= bounded { adv * d_ratio } else { 0.0 };
                    let combine = |dl: &[f64], de: &[f64]| -> Vec<f64> {
                        dl.iter()
                            .zip(de)
                            .map(|(l, e)| -(d_surr * l + entropy_coef * e) * scale)
                            .collect()
                    };
                    let grad = DistGrad {
                        head: combine(&d_logp.head, &d_ent.head),
                        log_std: combine(&d_logp.log_std, &d_ent.log_std),
                    };
                    steps.push(ActorStep {
                        cache,
                        grad,
                        reset_before,
                    });
                }
                state = next;
            }
            if backward {
                let mut dh = vec![0.0; hidden];
                let mut dc = vec![0.0; hidden];
                for step in steps.iter().rev() {
                    let (dh_prev, dc_prev) = actor.backward(&step.cache, &step.grad, &dh, &dc);
                    if step.reset_before {
                        dh.iter_mut().for_each(|v| *v = 0.0);
                        dc.iter_mut().for_each(|v| *v = 0.0);
                    } else {
                        dh = dh_prev;
                        dc = dc_prev;
                    }
                }
            }
        }
    }
    terms.clip_fraction = clipped as f64 / total as f64;
    terms.loss = -terms.surrogate - entropy_coef * terms.entropy;
    Ok(terms)
}

/// Squared-error critic loss over `chunk_ids`, following the critic's input
/// order (`Meta`: one interleaved sequence; `PerAgent`: one per agent).
pub fn critic_pass(
    critic: &mut CriticParams,
    batch: &TrainBatch,
    chunk_ids: &[usize],
    mode: CriticMode,
    backward: bool,
) -> Result<f64> {
    let total: usize = chunk_ids.iter().map(|&c| batch.chunks[c].samples()).sum();
    if total == 0 {
        return Err(Error::Contract("empty minibatch".into()));
    }
    let scale = 1.0 / total as f64;
    let hidden = critic.hidden();
    let mut loss = 0.0;
    let mut run = |critic: &mut CriticParams, state0: &LstmState, seq: &[(usize, bool)], env: &EnvRollout| -> Result<()> {
        let mut state = state0.clone();
        let mut caches = Vec::with_capacity(seq.len());
        for &(k, reset_before) in seq {
            if reset_before {
                state.reset();
            }
            let entry = &env.meta.entries[k];
            let (v, next, cache) = critic.forward_cached(&entry.input, &state)?;
            let err = v - env.returns.get(entry.t, entry.agent);
            loss += err * err * scale;
            if backward {
                caches.push((cache, 2.0 * err * scale, reset_before));
            }
            state = next;
        }
        if backward {
            let mut dh = vec![0.0; hidden];
            let mut dc = vec![0.0; hidden];
            for (cache, dv, reset_before) in caches.iter().rev() {
                let (dh_prev, dc_prev) = critic.backward(cache, *dv, &dh, &dc);
                if *reset_before {
                    dh.iter_mut().for_each(|v| *v = 0.0);
                    dc.iter_mut().for_each(|v| *v = 0.0);
                } else {
                    dh = dh_prev;
                    dc = dc_prev;
                }
            }
        }
        Ok(())
    };
    for &cid in chunk_ids {
        let chunk = &batch.chunks[cid];
        let env = &batch.envs[chunk.env];
        let n = env.meta.n_agents;
        let start = chunk.steps.start;
        let resets = |t: usize| t > start && env.meta.dones[t - 1];
        match mode {
            CriticMode::Meta => {
                let seq: Vec<(usize, bool)> = chunk
                    .entries
                    .clone()
                    .map(|k| (k, k % n == 0 && resets(k / n)))
                    .collect();
                run(critic, &chunk.critic_states[0], &seq, env)?;
            }
            CriticMode::PerAgent => {
                for agent in 0..n {
                    let seq: Vec<(usize, bool)> = chunk
                        .steps
                        .clone()
                        .map(|t| (env.meta.position(agent, t), resets(t)))
                        .collect();
                    run(critic, &chunk.critic_states[agent], &seq, env)?;
                }
            }
        }
    }
    Ok(loss)
}

/// Mean and population standard deviation of episode returns summed over agents,
/// sampling from the stochastic policy. Only the actor is used.
pub fn evaluate(
    actor: &ActorParams,
    env: &mut dyn Environment,
    episodes: usize,
    rng: &mut dyn RngCore,
) -> Result<(f64, f64)> {
    if episodes == 0 {
        return Err(Error::Contract("evaluation needs at least one episode".into()));
    }
    const MAX_EPISODE_STEPS: usize = 100_000;
    let n = env.n_agents();
    let mut totals = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut obs = env.reset(rng);
        let mut states = vec![actor.initial_state(); n];
        let mut total = 0.0;
        for step in 0.. {
            if step == MAX_EPISODE_STEPS {
                return Err(Error::Contract("evaluation episode never terminated".into()));
            }
            let mut actions = Vec::with_capacity(n);
            for i in 0..n {
                let (dist, next) = actor.forward(&obs[i], &states[i])?;
                states[i] = next;
                actions.push(dist.sample(rng).0);
            }
            let out = env.step(&actions, rng)?;
            total += out.rewards.iter().sum::<f64>();
            if out.done {
                break;
            }
            obs = out.observations;
        }
        totals.push(total);
    }
    let mean = totals.iter().sum::<f64>() / episodes as f64;
    let var = totals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / episodes as f64;
    Ok((mean, var.sqrt()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    /// Largest `|ratio - 1|` in the first minibatch of the first epoch.
    pub initial_ratio_deviation: f64,
}

/// One CSV row's worth of numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    pub iteration: usize,
    pub mean_eval_return: f64,
    pub std_eval_return: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub wall_time_s: f64,
}

/// Independent RNG stream `stream` derived from the master seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;
const STREAM_EVAL: u64 = 2;
const STREAM_ENV_BASE: u64 = 1000;

/// Actor, critic, optimizers and live environments of one seed.
pub struct Trainer {
    pub cfg: ExperimentConfig,
    pub actor: ActorParams,
    pub critic: CriticParams,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub iteration: usize,
    slots: Vec<EnvSlot>,
    eval_env: Box<dyn Environment>,
    shuffle_rng: ChaCha8Rng,
    eval_rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.agents();
        let probe = cfg.env.build(n);
        let obs_width = probe.obs_width();
        let space = probe.action_space();
        let mut init = stream_rng(cfg.seed, STREAM_INIT);
        let core = cfg.variant.core();
        let actor = ActorParams::new(core, obs_width, cfg.actor_hidden, space, &mut init);
        let critic_in = critic_input_width(obs_width, space, cfg.critic_include_prev_action);
        let critic = CriticParams::new(core, critic_in, cfg.critic_hidden, &mut init);
        let slots = (0..cfg.n_envs)
            .map(|e| {
                let mut slot = EnvSlot::with_rng(
                    cfg.env.build(n),
                    cfg.actor_hidden,
                    stream_rng(cfg.seed, STREAM_ENV_BASE + e as u64),
                );
                slot.critic_carry = vec![critic.initial_state(); cfg.variant.critic_mode().carry_len(n)];
                slot
            })
            .collect();
        Ok(Self {
            actor_opt: Adam::new(AdamConfig::with_lr(cfg.lr)),
            critic_opt: Adam::new(AdamConfig::with_lr(cfg.lr)),
            eval_env: cfg.env.build(n),
            shuffle_rng: stream_rng(cfg.seed, STREAM_SHUFFLE),
            eval_rng: stream_rng(cfg.seed, STREAM_EVAL),
            actor,
            critic,
            iteration: 0,
            slots,
            cfg,
        })
    }

    /// Collects E rollouts, builds meta-trajectories, runs the value pass and
    /// computes returns and (optionally normalised) advantages.
    pub fn collect(&mut self) -> Result<TrainBatch> {
        let cfg = &self.cfg;
        let mode = cfg.variant.critic_mode();
        let estimator = cfg.variant.estimator(cfg.beta);
        let space = self.actor.space;
        let rollouts = collect_rollouts(&mut self.slots, &self.actor, cfg.horizon, cfg.parallel_rollout)?;
        let mut envs = Vec::with_capacity(rollouts.len());
        let mut chunks = Vec::new();
        for (e, mut trajs) in rollouts.into_iter().enumerate() {
            let slot = &mut self.slots[e];
            let mut meta = build_meta_trajectory(&trajs, space, cfg.critic_include_prev_action, &mut slot.rng)?;
            let vp = value_pass(&mut meta, &mut trajs, &self.critic, mode, &slot.critic_carry)?;
            slot.critic_carry = vp.carry;
            let n = trajs.len();
            let rewards = Tensor2::from_vec(
                cfg.horizon,
                n,
                (0..cfg.horizon)
                    .flat_map(|t| trajs.iter().map(move |tr| tr.transitions[t].reward))
                    .collect(),
            );
            let adv = estimate(estimator, &rewards, &vp.values, &meta.dones, cfg.gamma, cfg.lambda)?;
            chunks.extend(chunk_for_training(e, &meta, &trajs, cfg.seq_len, mode)?);
            envs.push(EnvRollout {
                trajs,
                meta,
                values: vp.values,
                advantages: adv.advantages,
                returns: adv.returns,
            });
        }
        let adv_stats = if cfg.normalize_advantages {
            let mut all: Vec<f64> = envs
                .iter()
                .flat_map(|e| e.advantages.values().iter().copied())
                .collect();
            let stats = normalize(&mut all);
            let mut it = all.into_iter();
            for e in &mut envs {
                for v in e.advantages.values_mut() {
                    *v = it.next().expect("same length");
                }
            }
            Some(stats)
        } else {
            None
        };
        Ok(TrainBatch {
            envs,
            chunks,
            adv_stats,
        })
    }

    /// Chunks per minibatch: the configured sample budget divided by chunk size.
    pub fn chunks_per_minibatch(&self) -> usize {
        (self.cfg.batch_size / (self.cfg.seq_len * self.cfg.agents())).max(1)
    }

    /// K epochs over M shuffled minibatches of chunks; one clipped Adam step per
    /// network after each minibatch.
    pub fn update(&mut self, batch: &TrainBatch) -> Result<UpdateStats> {
        let per_mb = self.chunks_per_minibatch();
        let mode = self.cfg.variant.critic_mode();
        let mut order: Vec<usize> = (0..batch.chunks.len()).collect();
        let mut stats = UpdateStats::default();
        let mut count = 0usize;
        for epoch in 0..self.cfg.epochs {
            order.shuffle(&mut self.shuffle_rng);
            for (mb, ids) in order.chunks(per_mb).enumerate() {
                self.actor.zero_grad();
                self.critic.zero_grad();
                let a = actor_pass(&mut self.actor, batch, ids, self.cfg.clip, self.cfg.entropy_coef, true)?;
                let c = critic_pass(&mut self.critic, batch, ids, mode, true)?;
                if !a.loss.is_finite() || !c.is_finite() {
                    let dump: Vec<String> = ids
                        .iter()
                        .map(|&i| {
                            let ch = &batch.chunks[i];
                            format!("env {} steps {:?}", ch.env, ch.steps)
                        })
                        .collect();
                    return Err(Error::NonFinite {
                        context: format!(
                            "loss (actor {}, critic {c}) in epoch {epoch} minibatch {mb}: [{}]",
                            a.loss,
                            dump.join("; ")
                        ),
                        step: self.iteration,
                    });
                }
                if epoch == 0 && mb == 0 {
                    stats.initial_ratio_deviation = a.max_ratio_deviation;
                    if a.max_ratio_deviation > RATIO_INVARIANT_TOL {
                        return Err(Error::Contract(format!(
                            "probability ratio deviates from 1 by {} before the first update",
                            a.max_ratio_deviation
                        )));
                    }
                }
                clip_grad_norm(&mut self.actor.blocks_mut(), self.cfg.max_grad_norm);
                clip_grad_norm(&mut self.critic.blocks_mut(), self.cfg.max_grad_norm);
                self.actor_opt.step(&mut self.actor)?;
                self.critic_opt.step(&mut self.critic)?;
                stats.actor_loss += a.loss;
                stats.critic_loss += c;
                stats.entropy += a.entropy;
                stats.clip_fraction += a.clip_fraction;
                count += 1;
            }
        }
        let k = count.max(1) as f64;
        stats.actor_loss /= k;
        stats.critic_loss /= k;
        stats.entropy /= k;
        stats.clip_fraction /= k;
        Ok(stats)
    }

    pub fn evaluate(&mut self, episodes: usize) -> Result<(f64, f64)> {
        evaluate(&self.actor, self.eval_env.as_mut(), episodes, &mut self.eval_rng)
    }

    /// One full iteration: collect, update, then evaluate over `eval_episodes`.
    pub fn train_iteration(&mut self) -> Result<TrainStats> {
        let started = Instant::now();
        let batch = self.collect()?;
        let upd = self.update(&batch)?;
        self.iteration += 1;
        let (mean, std) = if self.cfg.eval_episodes > 0 {
            self.evaluate(self.cfg.eval_episodes)?
        } else {
            (0.0, 0.0)
        };
        let wall = if self.cfg.record_wall_time {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        };
        Ok(TrainStats {
            iteration: self.iteration,
            mean_eval_return: mean,
            std_eval_return: std,
            actor_loss: upd.actor_loss,
            critic_loss: upd.critic_loss,
            entropy: upd.entropy,
            clip_fraction: upd.clip_fraction,
            wall_time_s: wall,
        })
    }

    pub fn checkpoint_text(&self) -> String {
        let meta = vec![
            ("iteration".to_string(), self.iteration.to_string()),
            ("seed".to_string(), self.cfg.seed.to_string()),
            ("variant".to_string(), self.cfg.variant.name().to_string()),
            ("actor_adam_t".to_string(), self.actor_opt.t.to_string()),
            ("critic_adam_t".to_string(), self.critic_opt.t.to_string()),
        ];
        let mut blocks = self.actor.blocks();
        blocks.extend(self.critic.blocks());
        encode_checkpoint(&meta, &blocks)
    }

    /// Restores parameters, optimizer moments and the iteration counter.
    pub fn restore(&mut self, ckpt: &Checkpoint) -> Result<()> {
        let number = |key: &str| -> Result<u64> {
            ckpt.meta(key)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Checkpoint {
                    line: 0,
                    reason: format!("missing or invalid meta `{key}`"),
                })
        };
        if let Some(v) = ckpt.meta("variant") {
            if v != self.cfg.variant.name() {
                return Err(Error::Checkpoint {
                    line: 0,
                    reason: format!("checkpoint is for variant {v}, run uses {}", self.cfg.variant),
                });
            }
        }
        ckpt.restore_into(&mut self.actor)?;
        ckpt.restore_into(&mut self.critic)?;
        self.iteration = number("iteration")? as usize;
        self.actor_opt.t = number("actor_adam_t")?;
        self.critic_opt.t = number("critic_adam_t")?;
        Ok(())
    }

    pub fn restore_text(&mut self, text: &str) -> Result<()> {
        self.restore(&decode_checkpoint(text)?)
    }
}
