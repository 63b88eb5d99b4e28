//! Experiment configuration and its `key=value` file format.

use std::fmt;
use std::path::Path;

use crate::advantage::Estimator;
use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::policy::CoreKind;
use crate::rollout::CriticMode;

/// Ablation variants: network type crossed with where agent information is combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    FfNic,
    FfIca,
    LstmNic,
    LstmIca,
    LstmIcf,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::FfNic,
        Variant::FfIca,
        Variant::LstmNic,
        Variant::LstmIca,
        Variant::LstmIcf,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "ff-nic" => Variant::FfNic,
            "ff-ica" => Variant::FfIca,
            "lstm-nic" => Variant::LstmNic,
            "lstm-ica" => Variant::LstmIca,
            "lstm-icf" => Variant::LstmIcf,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::FfNic => "ff-nic",
            Variant::FfIca => "ff-ica",
            Variant::LstmNic => "lstm-nic",
            Variant::LstmIca => "lstm-ica",
            Variant::LstmIcf => "lstm-icf",
        }
    }

    pub fn core(&self) -> CoreKind {
        match self {
            Variant::FfNic | Variant::FfIca => CoreKind::FeedForward,
            _ => CoreKind::Lstm,
        }
    }

    pub fn critic_mode(&self) -> CriticMode {
        match self {
            Variant::LstmIcf => CriticMode::Meta,
            _ => CriticMode::PerAgent,
        }
    }

    /// NIC variants never look at β.
    pub fn estimator(&self, beta: f64) -> Estimator {
        match self {
            Variant::FfNic | Variant::LstmNic => Estimator::SingleAgent,
            _ => Estimator::MultiAgent { beta },
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every scalar of a run. Defaults are the particle-world settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    /// Agent count N (the diagnostic game always has 2).
    pub n_agents: usize,
    /// Parallel environments E.
    pub n_envs: usize,
    /// Rollout length T per environment and iteration.
    pub horizon: usize,
    /// PPO epochs K.
    pub epochs: usize,
    /// Samples (agent-steps) per minibatch; chunks are never split.
    pub batch_size: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub beta: f64,
    pub clip: f64,
    pub entropy_coef: f64,
    pub lr: f64,
    pub actor_hidden: usize,
    pub critic_hidden: usize,
    /// Recurrent chunk length L, in environment steps.
    pub seq_len: usize,
    pub max_grad_norm: f64,
    pub variant: Variant,
    pub normalize_advantages: bool,
    pub critic_include_prev_action: bool,
    pub seed: u64,
    pub iterations: usize,
    pub eval_episodes: usize,
    pub checkpoint_every: usize,
    pub parallel_rollout: bool,
    /// When false the CSV wall-time column is written as 0 so runs compare byte for byte.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: EnvKind::CoopNav,
            n_agents: 3,
            n_envs: 4,
            horizon: 100,
            epochs: 10,
            batch_size: 1500,
            gamma: 0.99,
            lambda: 0.95,
            beta: 1.0,
            clip: 0.2,
            entropy_coef: 0.01,
            lr: 0.005,
            actor_hidden: 128,
            critic_hidden: 128,
            seq_len: 3,
            max_grad_norm: 1.0,
            variant: Variant::LstmIcf,
            normalize_advantages: true,
            critic_include_prev_action: false,
            seed: 0,
            iterations: 100,
            eval_episodes: 100,
            checkpoint_every: 10,
            parallel_rollout: false,
            record_wall_time: true,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "env",
    "n_agents",
    "n_envs",
    "horizon",
    "epochs",
    "batch_size",
    "gamma",
    "lambda",
    "beta",
    "clip",
    "entropy_coef",
    "lr",
    "actor_hidden",
    "critic_hidden",
    "seq_len",
    "max_grad_norm",
    "variant",
    "normalize_advantages",
    "critic_include_prev_action",
    "seed",
    "iterations",
    "eval_episodes",
    "checkpoint_every",
    "parallel_rollout",
    "record_wall_time",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::config(key, format!("expected a boolean, got {value:?}"))),
    }
}

impl ExperimentConfig {
    pub fn agents(&self) -> usize {
        match self.env {
            EnvKind::CoopNav => self.n_agents,
            EnvKind::Diagnostic | EnvKind::DiagnosticContinuous => 2,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "env" => {
                self.env = EnvKind::parse(v)
                    .ok_or_else(|| Error::config(key, format!("unknown environment {v:?}")))?
            }
            "n_agents" => self.n_agents = parse_num(key, v)?,
            "n_envs" => self.n_envs = parse_num(key, v)?,
            "horizon" => self.horizon = parse_num(key, v)?,
            "epochs" => self.epochs = parse_num(key, v)?,
            "batch_size" => self.batch_size = parse_num(key, v)?,
            "gamma" => self.gamma = parse_num(key, v)?,
            "lambda" => self.lambda = parse_num(key, v)?,
            "beta" => self.beta = parse_num(key, v)?,
            "clip" => self.clip = parse_num(key, v)?,
            "entropy_coef" => self.entropy_coef = parse_num(key, v)?,
            "lr" => self.lr = parse_num(key, v)?,
            "actor_hidden" => self.actor_hidden = parse_num(key, v)?,
            "critic_hidden" => self.critic_hidden = parse_num(key, v)?,
            "seq_len" => self.seq_len = parse_num(key, v)?,
            "max_grad_norm" => self.max_grad_norm = parse_num(key, v)?,
            "variant" => {
                self.variant = Variant::parse(v)
                    .ok_or_else(|| Error::config(key, format!("unknown variant {v:?}")))?
            }
            "normalize_advantages" => self.normalize_advantages = parse_bool(key, v)?,
            "critic_include_prev_action" => self.critic_include_prev_action = parse_bool(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "iterations" => self.iterations = parse_num(key, v)?,
            "eval_episodes" => self.eval_episodes = parse_num(key, v)?,
            "checkpoint_every" => self.checkpoint_every = parse_num(key, v)?,
            "parallel_rollout" => self.parallel_rollout = parse_bool(key, v)?,
            "record_wall_time" => self.record_wall_time = parse_bool(key, v)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_agents", self.n_agents),
            ("n_envs", self.n_envs),
            ("horizon", self.horizon),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("actor_hidden", self.actor_hidden),
            ("critic_hidden", self.critic_hidden),
            ("seq_len", self.seq_len),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::config(key, "must be at least 1"));
            }
        }
        let in_range = |key: &str, v: f64, ok: bool| {
            if ok && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, format!("{v} is out of range")))
            }
        };
        in_range("gamma", self.gamma, self.gamma > 0.0 && self.gamma <= 1.0)?;
        in_range("lambda", self.lambda, (0.0..=1.0).contains(&self.lambda))?;
        in_range("beta", self.beta, (0.0..=1.0).contains(&self.beta))?;
        in_range("clip", self.clip, self.clip > 0.0 && self.clip < 1.0)?;
        in_range("entropy_coef", self.entropy_coef, self.entropy_coef >= 0.0)?;
        in_range("lr", self.lr, self.lr > 0.0)?;
        in_range("max_grad_norm", self.max_grad_norm, self.max_grad_norm > 0.0)?;
        Ok(())
    }

    /// Applies `key=value` lines (`#` starts a comment).
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}", no + 1), format!("expected key=value, got {line:?}"))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Canonical `key=value` rendering; parsing it back yields the same config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            out.push_str(&format!("{key}={}\n", self.value_of(key)));
        }
        out
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "env" => self.env.name().to_string(),
            "n_agents" => self.n_agents.to_string(),
            "n_envs" => self.n_envs.to_string(),
            "horizon" => self.horizon.to_string(),
            "epochs" => self.epochs.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "gamma" => self.gamma.to_string(),
            "lambda" => self.lambda.to_string(),
            "beta" => self.beta.to_string(),
            "clip" => self.clip.to_string(),
            "entropy_coef" => self.entropy_coef.to_string(),
            "lr" => self.lr.to_string(),
            "actor_hidden" => self.actor_hidden.to_string(),
            "critic_hidden" => self.critic_hidden.to_string(),
            "seq_len" => self.seq_len.to_string(),
            "max_grad_norm" => self.max_grad_norm.to_string(),
            "variant" => self.variant.name().to_string(),
            "normalize_advantages" => self.normalize_advantages.to_string(),
            "critic_include_prev_action" => self.critic_include_prev_action.to_string(),
            "seed" => self.seed.to_string(),
            "iterations" => self.iterations.to_string(),
            "eval_episodes" => self.eval_episodes.to_string(),
            "checkpoint_every" => self.checkpoint_every.to_string(),
            "parallel_rollout" => self.parallel_rollout.to_string(),
            "record_wall_time" => self.record_wall_time.to_string(),
            _ => unreachable!("key list and renderer agree"),
        }
    }
}

/// Loads defaults, then the optional file, then `overrides` in order, and validates.
pub fn parse_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(p) = path {
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        cfg.apply_text(&text)?;
    }
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
