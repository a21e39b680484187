//! Myopic multi-channel sensing over i.i.d. two-state Markov channels.
//!
//! A secondary user watches `N` channels that each flip between busy (0) and
//! idle (1) by the same Gilbert–Elliott chain. Every slot it senses `k` of
//! them and earns a reward when the sensed set contains an idle channel
//! (or, in the alternative utility, one unit per idle sensed channel). The
//! information state is the belief vector of per-channel idle probabilities.
//!
//! The crate provides:
//!
//! * [`model`]: channel model, belief vectors, actions and the Bayes update.
//! * [`policy`]: the myopic rule, exact expected-reward evaluation of any
//!   policy, and the brute-force optimal value over all sensing trees.
//! * [`formulas`]: closed-form two-slot rewards and the two counterexamples,
//!   each in an as-printed and a corrected reading.
//! * [`search`]: grid sweeps and seeded random search for instances where
//!   the myopic rule is beaten.
//! * [`sim`]: seeded Monte Carlo simulation of channels and policies.
//!
//! The crate is `no_std` (it needs `alloc`). Channel indices are 0-based.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![deny(missing_docs)]

extern crate alloc;

mod error;
pub use error::{Error, Result};

pub mod formulas;
pub mod model;
pub mod policy;
pub mod search;
pub mod sim;

mod combinatorics;

pub use model::{
    immediate_reward, printed_uninformed_belief, stationary_belief, tau, update_belief,
    BeliefVector, ChannelModel, ChannelState, Observation, SensingAction, UtilityKind,
};
pub use policy::{
    build_remark_policy, evaluate_policy, myopic_action, myopic_gap, optimal_value,
    EvaluationReport, ExperimentConfig, OptimalSolver, PolicySpec, PolicyTree, DEFAULT_NODE_BUDGET,
};
