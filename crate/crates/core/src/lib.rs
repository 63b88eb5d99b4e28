//! Multi-agent cooperative recurrent PPO.
//!
//! One shared actor acts on each agent's local observations; a single critic
//! reads every agent's data interleaved per time step (the meta-trajectory) so
//! its recurrent state sees the whole team. Advantages and return targets mix
//! each agent's rewards and values with the other agents' through a weight β.
//!
//! Module map:
//! - [`nn`]: dense/LSTM primitives with hand-written backward passes, Adam, clipping, checkpoints
//! - [`policy`]: actor, critic and action distributions
//! - [`envs`]: cooperative navigation and a diagnostic coordination game
//! - [`rollout`]: data collection, meta-trajectories, value pass, chunking
//! - [`advantage`]: weighted returns, multi-agent TD residuals, GAE
//! - [`trainer`]: losses and the optimisation loop
//! - [`harness`]: multi-seed runs, CSV, checkpoints, SVG plots

pub mod advantage;
pub mod config;
pub mod envs;
pub mod error;
pub mod harness;
pub mod nn;
pub mod policy;
pub mod rollout;
pub mod trainer;

pub use config::{parse_config, ExperimentConfig, Variant};
pub use envs::{CoopNav, Diagnostic, EnvKind, Environment};
pub use error::{Error, Result};
pub use nn::{LstmState, ParamBlock, Params, Tensor2};
pub use policy::{Action, ActionDistribution, ActionSpace, ActorParams, CoreKind, CriticParams};
pub use rollout::{AgentTrajectory, Chunk, CriticMode, MetaTrajectory, Transition};
pub use trainer::{evaluate, TrainStats, Trainer};
