//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use macrpo::config::ExperimentConfig;
use macrpo::policy::{Action, ActionSpace, CoreKind, CriticParams};
use macrpo::rollout::{
    build_meta_trajectory, chunk_for_training, critic_input_width, value_pass, AgentTrajectory, CriticMode,
    MetaTrajectory, Transition,
};
use macrpo::envs::EnvKind;
use macrpo::nn::{tanh_backward, tanh_forward, Dense, LstmCell, LstmState, Params, Tensor2};
use macrpo::trainer::{actor_pass, TrainBatch};
use macrpo::{Trainer, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;

/// `|a - n| / max(|a|, |n|, 1e-6)`
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, bound: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Worst relative error between `grads` and central differences of `loss`
/// over every parameter entry of `params`.
pub fn check_param_grads<P: Params + Clone>(params: &P, grads: &[Vec<f64>], loss: impl Fn(&P) -> f64) -> f64 {
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for (b, g) in grads.iter().enumerate() {
        for k in 0..g.len() {
            let orig = probe.blocks()[b].weights.values()[k];
            probe.blocks_mut()[b].weights.values_mut()[k] = orig + FD_STEP;
            let up = loss(&probe);
            probe.blocks_mut()[b].weights.values_mut()[k] = orig - FD_STEP;
            let down = loss(&probe);
            probe.blocks_mut()[b].weights.values_mut()[k] = orig;
            worst = worst.max(rel_err(g[k], (up - down) / (2.0 * FD_STEP)));
        }
    }
    worst
}

/// Same as [`check_param_grads`] for a plain input vector.
pub fn check_input_grads(x: &[f64], grads: &[f64], loss: impl Fn(&[f64]) -> f64) -> f64 {
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for k in 0..x.len() {
        probe[k] = x[k] + FD_STEP;
        let up = loss(&probe);
        probe[k] = x[k] - FD_STEP;
        let down = loss(&probe);
        probe[k] = x[k];
        worst = worst.max(rel_err(grads[k], (up - down) / (2.0 * FD_STEP)));
    }
    worst
}

fn grads_of<P: Params>(p: &P) -> Vec<Vec<f64>> {
    p.blocks().iter().map(|b| b.grads.values().to_vec()).collect()
}

/// Random dense layer, loss `w · (Wx + b)`.
pub fn dense_trial(rng: &mut ChaCha8Rng) -> f64 {
    let (n_in, n_out) = (rng.gen_range(1..7), rng.gen_range(1..7));
    let mut layer = Dense::new("d", n_in, n_out, rng);
    for b in layer.blocks_mut() {
        b.weights = Tensor2::uniform(b.weights.rows(), b.weights.cols(), 1.5, rng);
    }
    let x = random_vec(rng, n_in, 2.0);
    let w = random_vec(rng, n_out, 1.0);
    let loss = |l: &Dense, x: &[f64]| dot(&w, &l.forward(x).unwrap());
    let mut g = layer.clone();
    g.zero_grad();
    let dx = g.backward(&x, &w);
    let p = check_param_grads(&layer, &grads_of(&g), |l| loss(l, &x));
    let i = check_input_grads(&x, &dx, |x| loss(&layer, x));
    p.max(i)
}

/// Loss `w · tanh(x)`.
pub fn tanh_trial(rng: &mut ChaCha8Rng) -> f64 {
    let n = rng.gen_range(1..9);
    let x = random_vec(rng, n, 3.0);
    let w = random_vec(rng, n, 1.0);
    let dx = tanh_backward(&tanh_forward(&x), &w);
    check_input_grads(&x, &dx, |x| dot(&w, &tanh_forward(x)))
}

/// Three-step unroll, loss `Σ_t a_t · h_t + b · c_3`, checked against every
/// weight, every input and the initial state.
pub fn lstm_trial(rng: &mut ChaCha8Rng) -> f64 {
    let (n_in, hidden) = (rng.gen_range(1..5), rng.gen_range(1..5));
    let mut cell = LstmCell::new("l", n_in, hidden, rng);
    for b in cell.blocks_mut() {
        b.weights = Tensor2::uniform(b.weights.rows(), b.weights.cols(), 1.0, rng);
    }
    const STEPS: usize = 3;
    let xs: Vec<Vec<f64>> = (0..STEPS).map(|_| random_vec(rng, n_in, 1.5)).collect();
    let h0 = random_vec(rng, hidden, 0.8);
    let c0 = random_vec(rng, hidden, 0.8);
    let a: Vec<Vec<f64>> = (0..STEPS).map(|_| random_vec(rng, hidden, 1.0)).collect();
    let bw = random_vec(rng, hidden, 1.0);

    let loss = |cell: &LstmCell, xs: &[Vec<f64>], h0: &[f64], c0: &[f64]| {
        let mut s = LstmState {
            h: h0.to_vec(),
            c: c0.to_vec(),
        };
        let mut total = 0.0;
        for t in 0..STEPS {
            s = cell.step(&xs[t], &s).unwrap().0;
            total += dot(&a[t], &s.h);
        }
        total + dot(&bw, &s.c)
    };

    let mut g = cell.clone();
    g.zero_grad();
    let mut caches = Vec::new();
    let mut s = LstmState {
        h: h0.clone(),
        c: c0.clone(),
    };
    for x in &xs {
        let (next, cache) = g.step(x, &s).unwrap();
        caches.push(cache);
        s = next;
    }
    let mut dh = vec![0.0; hidden];
    let mut dc = bw.clone();
    let mut dxs = vec![Vec::new(); STEPS];
    for t in (0..STEPS).rev() {
        let dh_t: Vec<f64> = dh.iter().zip(&a[t]).map(|(x, y)| x + y).collect();
        let (dx, dh_prev, dc_prev) = g.backward(&caches[t], &dh_t, &dc);
        dxs[t] = dx;
        dh = dh_prev;
        dc = dc_prev;
    }

    let mut worst = check_param_grads(&cell, &grads_of(&g), |c| loss(c, &xs, &h0, &c0));
    for t in 0..STEPS {
        worst = worst.max(check_input_grads(&xs[t], &dxs[t], |x| {
            let mut ys = xs.clone();
            ys[t] = x.to_vec();
            loss(&cell, &ys, &h0, &c0)
        }));
    }
    worst = worst.max(check_input_grads(&h0, &dh, |h| loss(&cell, &xs, h, &c0)));
    worst.max(check_input_grads(&c0, &dc, |c| loss(&cell, &xs, &h0, c)))
}

/// Smallest allowed distance of a ratio from a clip boundary.
pub const KINK_MARGIN: f64 = 0.02;

/// A collected batch of a tiny trainer, with stored log-probabilities shifted
/// so ratios spread across both sides of the trust region while staying
/// `KINK_MARGIN` away from `1 ± clip`.
pub fn shifted_batch(trial: u64, rng: &mut ChaCha8Rng) -> (Trainer, TrainBatch) {
    let (env, variant) = match trial % 4 {
        0 => (EnvKind::CoopNav, Variant::LstmIcf),
        1 => (EnvKind::DiagnosticContinuous, Variant::LstmIca),
        2 => (EnvKind::CoopNav, Variant::FfNic),
        _ => (EnvKind::DiagnosticContinuous, Variant::FfIca),
    };
    let cfg = ExperimentConfig {
        env,
        variant,
        n_agents: 2,
        n_envs: 1,
        horizon: 5,
        actor_hidden: 4,
        critic_hidden: 4,
        seq_len: 2,
        seed: trial,
        eval_episodes: 0,
        ..ExperimentConfig::default()
    };
    let mut trainer = Trainer::new(cfg).unwrap();
    if let Some(ls) = trainer.actor.log_std.as_mut() {
        ls.weights = Tensor2::uniform(ls.weights.rows(), 1, 0.5, rng);
    }
    let mut batch = trainer.collect().unwrap();
    let clip = trainer.cfg.clip;
    for env in &mut batch.envs {
        for tr in &mut env.trajs {
            for x in &mut tr.transitions {
                loop {
                    let shift: f64 = rng.gen_range(-0.5..0.5);
                    let ratio = (-shift).exp();
                    if (ratio - 1.0 - clip).abs() > KINK_MARGIN && (ratio - 1.0 + clip).abs() > KINK_MARGIN {
                        x.old_log_prob += shift;
                        break;
                    }
                }
            }
        }
    }
    (trainer, batch)
}

/// Full clipped-surrogate-plus-entropy actor loss against central differences.
pub fn actor_loss_trial(trial: u64, rng: &mut ChaCha8Rng) -> f64 {
    let (trainer, batch) = shifted_batch(trial, rng);
    let ids: Vec<usize> = (0..batch.chunks.len()).collect();
    let (clip, c) = (trainer.cfg.clip, trainer.cfg.entropy_coef);
    let actor = trainer.actor.clone();
    let mut g = actor.clone();
    g.zero_grad();
    actor_pass(&mut g, &batch, &ids, clip, c, true).unwrap();
    check_param_grads(&actor, &grads_of(&g), |a| {
        let mut a = a.clone();
        actor_pass(&mut a, &batch, &ids, clip, c, false).unwrap().loss
    })
}

/// Direct-summation oracle for the weighted returns: sums discounted weighted
/// rewards up to the first terminal step, then adds the discounted weighted
/// bootstrap value if no terminal step intervened.
pub fn brute_returns(rewards: &[Vec<f64>], boot: &[f64], dones: &[bool], gamma: f64, beta: f64) -> Vec<Vec<f64>> {
    let t_len = rewards.len();
    let n = boot.len();
    let wm = |xs: &[f64], i: usize| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            s += if j == i { xs[j] } else { beta * xs[j] };
        }
        s / n as f64
    };
    let mut out = vec![vec![0.0; n]; t_len];
    for t in 0..t_len {
        for i in 0..n {
            let mut total = 0.0;
            let mut terminated = false;
            for k in t..t_len {
                total += gamma.powi((k - t) as i32) * wm(&rewards[k], i);
                if dones[k] {
                    terminated = true;
                    break;
                }
            }
            if !terminated {
                total += gamma.powi((t_len - t) as i32) * wm(boot, i);
            }
            out[t][i] = total;
        }
    }
    out
}

/// Direct-summation oracle for the weighted advantage
/// `Σ_k (γλ)^{k-t} δ_k` truncated at the first terminal step.
pub fn brute_advantages(
    rewards: &[Vec<f64>],
    values: &[Vec<f64>],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
    beta: f64,
) -> Vec<Vec<f64>> {
    let t_len = rewards.len();
    let n = rewards[0].len();
    let delta = |k: usize, i: usize| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            let next = if dones[k] { 0.0 } else { values[k + 1][j] };
            let td = rewards[k][j] + gamma * next - values[k][j];
            s += if j == i { td } else { beta * td };
        }
        s / n as f64
    };
    let mut out = vec![vec![0.0; n]; t_len];
    for t in 0..t_len {
        for i in 0..n {
            let mut total = 0.0;
            for k in t..t_len {
                total += (gamma * lambda).powi((k - t) as i32) * delta(k, i);
                if dones[k] {
                    break;
                }
            }
            out[t][i] = total;
        }
    }
    out
}

/// Random estimator instance: rewards `T×N`, values `(T+1)×N`, dones.
pub fn random_instance(rng: &mut ChaCha8Rng, t_len: usize, n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<bool>) {
    let rewards = (0..t_len).map(|_| random_vec(rng, n, 2.0)).collect();
    let values = (0..=t_len).map(|_| random_vec(rng, n, 3.0)).collect();
    let dones = (0..t_len).map(|_| rng.gen_bool(0.25)).collect();
    (rewards, values, dones)
}

pub fn to_tensor(rows: &[Vec<f64>]) -> Tensor2 {
    let cols = rows[0].len();
    Tensor2::from_vec(rows.len(), cols, rows.concat())
}

pub fn max_abs_diff(t: &Tensor2, rows: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            worst = worst.max((t.get(r, c) - v).abs());
        }
    }
    worst
}

pub const OBS: usize = 3;
pub const SPACE: ActionSpace = ActionSpace::Discrete(4);

pub fn fake_trajectories(rng: &mut ChaCha8Rng, n: usize, t_len: usize) -> Vec<AgentTrajectory> {
    let dones: Vec<bool> = (0..t_len).map(|_| rng.gen_bool(0.15)).collect();
    (0..n)
        .map(|i| {
            let mut prev = None;
            let transitions = (0..t_len)
                .map(|t| {
                    let action = Action::Discrete(rng.gen_range(0..4));
                    let tr = Transition {
                        agent_id: i,
                        t: t + 1,
                        obs: (0..OBS).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                        action: action.clone(),
                        prev_action: prev.take(),
                        reward: rng.gen_range(-1.0..0.0),
                        done: dones[t],
                        old_log_prob: -1.0,
                        old_value: 0.0,
                    };
                    prev = if dones[t] { None } else { Some(action) };
                    tr
                })
                .collect();
            AgentTrajectory {
                agent_id: i,
                transitions,
                actor_states: vec![LstmState::zeros(2); t_len],
                bootstrap_obs: vec![0.5; OBS],
                bootstrap_prev_action: prev,
            }
        })
        .collect()
}

pub fn check_structure(meta: &MetaTrajectory, trajs: &[AgentTrajectory], include_prev: bool) {
    let n = trajs.len();
    assert_eq!(meta.len(), n * meta.horizon);
    for t in 0..meta.horizon {
        let order = meta.order_map(t);
        for slot in 0..n {
            let e = &meta.entries[t * n + slot];
            assert_eq!((e.agent, e.t), (order[slot], t));
        }
    }
    for (i, seq) in meta.deinterleave().iter().enumerate() {
        assert_eq!(seq.len(), trajs[i].len());
        for (t, e) in seq.iter().enumerate() {
            let tr = &trajs[i].transitions[t];
            let mut want = tr.obs.clone();
            if include_prev {
                match &tr.prev_action {
                    Some(a) => a.encode(SPACE, &mut want),
                    None => want.extend([0.0; 4]),
                }
            }
            assert_eq!((e.agent, e.t), (i, t));
            assert_eq!(e.input, want);
        }
    }
}

/// Re-evaluates every chunk from its stored state and compares with the full pass.
pub fn check_chunked_values(meta: &mut MetaTrajectory, trajs: &mut [AgentTrajectory], critic: &CriticParams, mode: CriticMode, seq_len: usize) {
    let n = trajs.len();
    let initial = vec![critic.initial_state(); mode.carry_len(n)];
    let full = value_pass(meta, trajs, critic, mode, &initial).unwrap();
    let chunks = chunk_for_training(0, meta, trajs, seq_len, mode).unwrap();
    let mut covered = Vec::new();
    for ch in &chunks {
        covered.extend(ch.entries.clone());
        let start = ch.steps.start;
        match mode {
            CriticMode::Meta => {
                let inputs: Vec<Vec<f64>> = ch.entries.clone().map(|k| meta.entries[k].input.clone()).collect();
                let (values, _) = critic
                    .forward_meta_with_resets(&inputs, &ch.critic_states[0], |k| {
                        let t = start + k / n;
                        k % n == 0 && t > start && meta.dones[t - 1]
                    })
                    .unwrap();
                for (k, v) in ch.entries.clone().zip(values) {
                    let e = &meta.entries[k];
                    assert_eq!(v.to_bits(), full.values.get(e.t, e.agent).to_bits());
                }
            }
            CriticMode::PerAgent => {
                for agent in 0..n {
                    let inputs: Vec<Vec<f64>> = ch
                        .steps
                        .clone()
                        .map(|t| meta.entries[meta.position(agent, t)].input.clone())
                        .collect();
                    let (values, _) = critic
                        .forward_meta_with_resets(&inputs, &ch.critic_states[agent], |k| {
                            let t = start + k;
                            t > start && meta.dones[t - 1]
                        })
                        .unwrap();
                    for (t, v) in ch.steps.clone().zip(values) {
                        assert_eq!(v.to_bits(), full.values.get(t, agent).to_bits());
                    }
                }
            }
        }
    }
    assert_eq!(covered, (0..meta.len()).collect::<Vec<_>>());
}

pub fn meta_case(seed: u64, n: usize, t_len: usize, seq_len: usize, include_prev: bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trajs = fake_trajectories(&mut rng, n, t_len);
    let mut meta = build_meta_trajectory(&trajs, SPACE, include_prev, &mut rng).unwrap();
    check_structure(&meta, &trajs, include_prev);
    let width = critic_input_width(OBS, SPACE, include_prev);
    let critic = CriticParams::new(CoreKind::Lstm, width, 5, &mut rng);
    let mode = if seed % 2 == 0 { CriticMode::Meta } else { CriticMode::PerAgent };
    check_chunked_values(&mut meta, &mut trajs, &critic, mode, seq_len);
}
