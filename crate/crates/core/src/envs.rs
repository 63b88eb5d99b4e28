//! Markov-game environments: cooperative navigation in a particle world and a
//! one-shot two-agent coordination game with a known optimum.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::policy::{Action, ActionSpace};

/// Per-step output of an environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub observations: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    /// Episode finished with this step. `observations` are then the terminal ones.
    pub done: bool,
}

/// A cooperative Markov game with per-agent observations, actions and rewards.
pub trait Environment: Send {
    fn n_agents(&self) -> usize;
    fn obs_width(&self) -> usize;
    fn action_space(&self) -> ActionSpace;
    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<Vec<f64>>;
    fn step(&mut self, actions: &[Action], rng: &mut dyn RngCore) -> Result<Step>;
}

pub const COOPNAV_EPISODE_LEN: usize = 25;
pub const COOPNAV_DT: f64 = 0.1;
pub const COOPNAV_DAMPING: f64 = 0.5;
pub const COOPNAV_ACCEL: f64 = 0.5;
pub const COOPNAV_COLLISION_RADIUS: f64 = 0.15;

/// Discrete moves: no-op, up, down, left, right.
pub const COOPNAV_ACTIONS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct CoopNavState {
    pub positions: Vec<[f64; 2]>,
    pub velocities: Vec<[f64; 2]>,
    /// Landmark `i` belongs to agent `i`.
    pub landmarks: Vec<[f64; 2]>,
    pub step: usize,
}

/// Cooperative navigation: N agents, N landmarks, local rewards.
///
/// Observation of agent `i` (width `4 + 2(N-1) + 2N`): own position, own
/// velocity, positions of the other agents relative to `i` in cyclic order
/// `i+1, i+2, ...`, then landmark positions relative to `i` in cyclic order
/// starting with its own landmark.
#[derive(Debug, Clone)]
pub struct CoopNav {
    n: usize,
    state: CoopNavState,
}

impl CoopNav {
    pub fn new(n_agents: usize) -> Self {
        assert!(n_agents >= 1, "cooperative navigation needs at least one agent");
        Self {
            n: n_agents,
            state: CoopNavState {
                positions: vec![[0.0; 2]; n_agents],
                velocities: vec![[0.0; 2]; n_agents],
                landmarks: vec![[0.0; 2]; n_agents],
                step: 0,
            },
        }
    }

    pub fn obs_width_for(n: usize) -> usize {
        4 + 2 * (n - 1) + 2 * n
    }

    pub fn state(&self) -> &CoopNavState {
        &self.state
    }

    pub fn set_state(&mut self, state: CoopNavState) {
        assert_eq!(state.positions.len(), self.n);
        self.state = state;
    }

    pub fn observations(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.observe(i)).collect()
    }

    fn observe(&self, i: usize) -> Vec<f64> {
        let s = &self.state;
        let p = s.positions[i];
        let mut obs = Vec::with_capacity(Self::obs_width_for(self.n));
        obs.extend_from_slice(&p);
        obs.extend_from_slice(&s.velocities[i]);
        for k in 1..self.n {
            let q = s.positions[(i + k) % self.n];
            obs.push(q[0] - p[0]);
            obs.push(q[1] - p[1]);
        }
        for k in 0..self.n {
            let l = s.landmarks[(i + k) % self.n];
            obs.push(l[0] - p[0]);
            obs.push(l[1] - p[1]);
        }
        obs
    }

    pub fn rewards(&self) -> Vec<f64> {
        let s = &self.state;
        (0..self.n)
            .map(|i| {
                let p = s.positions[i];
                let l = s.landmarks[i];
                let dist = ((p[0] - l[0]).powi(2) + (p[1] - l[1]).powi(2)).sqrt();
                let collisions = (0..self.n)
                    .filter(|&j| j != i)
                    .filter(|&j| {
                        let q = s.positions[j];
                        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
                            < COOPNAV_COLLISION_RADIUS
                    })
                    .count();
                -dist - collisions as f64
            })
            .collect()
    }
}

fn uniform_point(rng: &mut dyn RngCore) -> [f64; 2] {
    [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)]
}

impl Environment for CoopNav {
    fn n_agents(&self) -> usize {
        self.n
    }

    fn obs_width(&self) -> usize {
        Self::obs_width_for(self.n)
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete(COOPNAV_ACTIONS)
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<Vec<f64>> {
        let positions = (0..self.n).map(|_| uniform_point(rng)).collect();
        let landmarks = (0..self.n).map(|_| uniform_point(rng)).collect();
        self.state = CoopNavState {
            positions,
            velocities: vec![[0.0; 2]; self.n],
            landmarks,
            step: 0,
        };
        self.observations()
    }

    fn step(&mut self, actions: &[Action], _rng: &mut dyn RngCore) -> Result<Step> {
        if actions.len() != self.n {
            return Err(Error::dim("coopnav actions", self.n, actions.len()));
        }
        let mut accel = Vec::with_capacity(self.n);
        for a in actions {
            let dir = match a {
                Action::Discrete(0) => [0.0, 0.0],
                Action::Discrete(1) => [0.0, 1.0],
                Action::Discrete(2) => [0.0, -1.0],
                Action::Discrete(3) => [-1.0, 0.0],
                Action::Discrete(4) => [1.0, 0.0],
                other => {
                    return Err(Error::Contract(format!(
                        "invalid coopnav action {other:?}"
                    )))
                }
            };
            accel.push([dir[0] * COOPNAV_ACCEL, dir[1] * COOPNAV_ACCEL]);
        }
        let s = &mut self.state;
        for i in 0..self.n {
            for d in 0..2 {
                let v = COOPNAV_DAMPING * s.velocities[i][d] + accel[i][d] * COOPNAV_DT;
                s.velocities[i][d] = v;
                s.positions[i][d] += v * COOPNAV_DT;
            }
        }
        s.step += 1;
        let done = s.step >= COOPNAV_EPISODE_LEN;
        Ok(Step {
            observations: self.observations(),
            rewards: self.rewards(),
            done,
        })
    }
}

pub const DIAGNOSTIC_OPTIMUM: f64 = 2.0;

/// One-shot two-agent coordination game.
///
/// Both play 1: each gets 1.0. An agent playing 0 gets 0.2. An agent playing 1
/// against a 0 gets nothing. The continuous form maps a clamped action ≥ 0.5 to 1.
#[derive(Debug, Clone, Default)]
pub struct Diagnostic {
    continuous: bool,
}

impl Diagnostic {
    pub fn new(continuous: bool) -> Self {
        Self { continuous }
    }

    pub fn payoff(a: [u8; 2]) -> [f64; 2] {
        let r = |me: u8, other: u8| match (me, other) {
            (1, 1) => 1.0,
            (0, _) => 0.2,
            _ => 0.0,
        };
        [r(a[0], a[1]), r(a[1], a[0])]
    }

    fn bit(&self, a: &Action) -> Result<u8> {
        match (a, self.continuous) {
            (Action::Discrete(k @ (0 | 1)), false) => Ok(*k as u8),
            (Action::Continuous(x), true) if x.len() == 1 && x[0].is_finite() => {
                Ok(u8::from(x[0].clamp(-1.0, 1.0) >= 0.5))
            }
            _ => Err(Error::Contract(format!("invalid diagnostic action {a:?}"))),
        }
    }
}

impl Environment for Diagnostic {
    fn n_agents(&self) -> usize {
        2
    }

    fn obs_width(&self) -> usize {
        1
    }

    fn action_space(&self) -> ActionSpace {
        if self.continuous {
            ActionSpace::Continuous(1)
        } else {
            ActionSpace::Discrete(2)
        }
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> Vec<Vec<f64>> {
        vec![vec![1.0]; 2]
    }

    fn step(&mut self, actions: &[Action], _rng: &mut dyn RngCore) -> Result<Step> {
        if actions.len() != 2 {
            return Err(Error::dim("diagnostic actions", 2, actions.len()));
        }
        let bits = [self.bit(&actions[0])?, self.bit(&actions[1])?];
        Ok(Step {
            observations: vec![vec![1.0]; 2],
            rewards: Self::payoff(bits).to_vec(),
            done: true,
        })
    }
}

/// Environment selection by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    CoopNav,
    Diagnostic,
    DiagnosticContinuous,
}

impl EnvKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "coopnav" => Some(EnvKind::CoopNav),
            "diagnostic" => Some(EnvKind::Diagnostic),
            "diagnostic-continuous" => Some(EnvKind::DiagnosticContinuous),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvKind::CoopNav => "coopnav",
            EnvKind::Diagnostic => "diagnostic",
            EnvKind::DiagnosticContinuous => "diagnostic-continuous",
        }
    }

    pub fn build(&self, n_agents: usize) -> Box<dyn Environment> {
        match self {
            EnvKind::CoopNav => Box::new(CoopNav::new(n_agents)),
            EnvKind::Diagnostic => Box::new(Diagnostic::new(false)),
            EnvKind::DiagnosticContinuous => Box::new(Diagnostic::new(true)),
        }
    }
}
