//! Seeded Monte Carlo simulation of channel trajectories and policy runs.
//!
//! Episode `e` under seed `s` draws from ChaCha8 stream `e` of key `s`, so
//! an episode's outcome does not depend on which thread runs it. Rewards are
//! reduced in episode order, which makes parallel and sequential estimates
//! bit-identical.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "serde")]
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{slot_reward, ChannelState};
use crate::policy::{
    materialize, myopic_channels, ExperimentConfig, OptimalSolver, PolicySpec, PolicyTree,
};

/// Channel states over a horizon: `states[t][i]` is channel `i` in slot `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct Trajectory {
    states: Vec<Vec<ChannelState>>,
}

impl Trajectory {
    /// Builds a trajectory from rows of equal length.
    pub fn new(states: Vec<Vec<ChannelState>>) -> Result<Self> {
        if let Some(first) = states.first() {
            if states.iter().any(|r| r.len() != first.len()) {
                return Err(Error::contract("trajectory rows differ in length"));
            }
        }
        Ok(Self { states })
    }

    /// Number of slots.
    pub fn horizon(&self) -> usize {
        self.states.len()
    }

    /// Number of channels.
    pub fn channels(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    /// State of `channel` in `slot`.
    pub fn state(&self, slot: usize, channel: usize) -> ChannelState {
        self.states[slot][channel]
    }

    /// All channel states in `slot`.
    pub fn slot(&self, slot: usize) -> &[ChannelState] {
        &self.states[slot]
    }
}

/// Draws a trajectory: slot 0 from the initial beliefs, later slots by the chain.
pub fn sample_trajectory<R: Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> Trajectory {
    let (p01, p11) = (cfg.model().p01(), cfg.model().p11());
    let mut states = Vec::with_capacity(cfg.horizon());
    let first: Vec<ChannelState> = cfg
        .initial_belief()
        .as_slice()
        .iter()
        .map(|&w| draw(rng, w))
        .collect();
    states.push(first);
    for t in 1..cfg.horizon() {
        let next = states[t - 1]
            .iter()
            .map(|s| draw(rng, if s.is_idle() { p11 } else { p01 }))
            .collect();
        states.push(next);
    }
    Trajectory { states }
}

fn draw<R: Rng + ?Sized>(rng: &mut R, p_idle: f64) -> ChannelState {
    if rng.random::<f64>() < p_idle {
        ChannelState::Idle
    } else {
        ChannelState::Busy
    }
}

/// Where a running policy currently is.
#[derive(Clone, Copy)]
enum Cursor<'a> {
    Spec(&'a PolicySpec),
    Node(&'a PolicyTree),
}

/// Realized total reward of `policy` against `trajectory`.
///
/// The belief follows the Bayes update from the states actually sensed.
/// Policies that call the brute-force solver are expanded into a tree first.
pub fn run_episode(
    cfg: &ExperimentConfig,
    policy: &PolicySpec,
    trajectory: &Trajectory,
) -> Result<f64> {
    if policy.uses_optimal() {
        let tree = materialize(cfg, policy, OptimalSolver::new())?;
        return run_episode(cfg, &PolicySpec::ExplicitTree(tree), trajectory);
    }
    check_dims(cfg, trajectory)?;
    policy.check(cfg.horizon(), cfg.channels(), cfg.sense_k())?;
    Ok(run_prepared(cfg, policy, trajectory))
}

fn check_dims(cfg: &ExperimentConfig, trajectory: &Trajectory) -> Result<()> {
    if trajectory.horizon() != cfg.horizon() || trajectory.channels() != cfg.channels() {
        return Err(Error::contract(format!(
            "trajectory is {}x{}, configuration needs {}x{}",
            trajectory.horizon(),
            trajectory.channels(),
            cfg.horizon(),
            cfg.channels()
        )));
    }
    Ok(())
}

/// Runs a policy that does not call the solver. Branches the policy left
/// empty (zero probability under the model) fall back to the myopic rule.
fn run_prepared(cfg: &ExperimentConfig, policy: &PolicySpec, trajectory: &Trajectory) -> f64 {
    let model = cfg.model();
    let k = cfg.sense_k();
    let mut belief = cfg.initial_belief().as_slice().to_vec();
    let mut cursor = Some(Cursor::Spec(policy));
    let mut total = 0.0;
    let mut sensed = vec![0.0; k];
    let positions: Vec<usize> = (0..k).collect();
    for t in 0..cfg.horizon() {
        let (channels, next): (Vec<usize>, Option<Cursor<'_>>) = match cursor {
            Some(Cursor::Spec(PolicySpec::Myopic)) | None => (myopic_channels(&belief, k), cursor),
            Some(Cursor::Spec(PolicySpec::FixedFirst { action, then })) => {
                (action.channels().to_vec(), Some(Cursor::Spec(then)))
            }
            Some(Cursor::Spec(PolicySpec::ExplicitTree(tree))) | Some(Cursor::Node(tree)) => {
                (tree.action().channels().to_vec(), Some(Cursor::Node(tree)))
            }
            Some(Cursor::Spec(PolicySpec::Optimal)) => {
                unreachable!("solver policies are materialized before running")
            }
        };
        let row = trajectory.slot(t);
        let mut mask = 0usize;
        for (m, &c) in channels.iter().enumerate() {
            let idle = row[c].is_idle();
            sensed[m] = if idle { 1.0 } else { 0.0 };
            if idle {
                mask |= 1 << m;
            }
        }
        total += slot_reward(&sensed, &positions, cfg.utility());

        for w in belief.iter_mut() {
            *w = model.propagate(*w);
        }
        for (m, &c) in channels.iter().enumerate() {
            belief[c] = if mask >> m & 1 == 1 {
                model.p11()
            } else {
                model.p01()
            };
        }
        cursor = match next {
            Some(Cursor::Node(tree)) => tree.child(mask).map(Cursor::Node),
            other => other,
        };
    }
    total
}

/// Mean realized reward with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct SimulationEstimate {
    /// Sample mean of the episode totals.
    pub mean: f64,
    /// Sample standard deviation over `sqrt(episodes)`.
    pub std_error: f64,
    /// Episodes simulated.
    pub episodes: u64,
    /// Generator seed.
    pub seed: u64,
}

impl SimulationEstimate {
    /// Summarizes episode totals, reduced in the order given.
    pub fn from_rewards(rewards: &[f64], seed: u64) -> Result<Self> {
        let n = rewards.len();
        if n < 2 {
            return Err(Error::contract("an estimate needs at least two episodes"));
        }
        let mean = rewards.iter().sum::<f64>() / n as f64;
        let ss: f64 = rewards.iter().map(|r| (r - mean) * (r - mean)).sum();
        let std = libm::sqrt(ss / (n - 1) as f64);
        Ok(Self {
            mean,
            std_error: std / libm::sqrt(n as f64),
            episodes: n as u64,
            seed,
        })
    }
}

/// Generator for one episode.
pub fn episode_rng(seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng
}

/// A policy prepared for repeated runs on one configuration.
///
/// Solver calls happen once in [`EpisodeRunner::new`]; [`EpisodeRunner::run`]
/// is then cheap and can be called from many threads.
#[derive(Debug, Clone)]
pub struct EpisodeRunner {
    cfg: ExperimentConfig,
    policy: PolicySpec,
}

impl EpisodeRunner {
    /// Validates and, if needed, materializes the policy.
    pub fn new(cfg: &ExperimentConfig, policy: &PolicySpec) -> Result<Self> {
        Self::with_solver(cfg, policy, OptimalSolver::new())
    }

    /// As [`EpisodeRunner::new`], expanding solver calls under `solver`'s budget.
    pub fn with_solver(
        cfg: &ExperimentConfig,
        policy: &PolicySpec,
        solver: OptimalSolver,
    ) -> Result<Self> {
        let policy = if policy.uses_optimal() {
            PolicySpec::ExplicitTree(materialize(cfg, policy, solver)?)
        } else {
            policy.check(cfg.horizon(), cfg.channels(), cfg.sense_k())?;
            policy.clone()
        };
        Ok(Self {
            cfg: cfg.clone(),
            policy,
        })
    }

    /// Total reward of episode `episode` under `seed`.
    pub fn run(&self, seed: u64, episode: u64) -> f64 {
        let mut rng = episode_rng(seed, episode);
        let traj = sample_trajectory(&self.cfg, &mut rng);
        run_prepared(&self.cfg, &self.policy, &traj)
    }
}

/// Sequential Monte Carlo estimate of the policy's expected total reward.
pub fn estimate(
    cfg: &ExperimentConfig,
    policy: &PolicySpec,
    episodes: u64,
    seed: u64,
) -> Result<SimulationEstimate> {
    if episodes < 2 {
        return Err(Error::contract("an estimate needs at least two episodes"));
    }
    let runner = EpisodeRunner::new(cfg, policy)?;
    let rewards: Vec<f64> = (0..episodes).map(|e| runner.run(seed, e)).collect();
    SimulationEstimate::from_rewards(&rewards, seed)
}
