//! Dual-expert reinforcement learning for teaching a simulated robot to tidy
//! cubes.
//!
//! A model-free expert (Q-learning) and a model-based expert (a learned
//! transition model solved by value iteration) propose actions. A
//! meta-controller chooses, in each state, which of them acts, trading the
//! entropy of its decision against its inference cost; the other expert is
//! not consulted. Simulated teachers can congratulate useful placements or
//! take over drops, and [`teach`] exposes the same loop to a live teacher.

pub mod error;
pub mod experiment;
pub mod experts;
pub mod human;
pub mod mdp;
pub mod meta;
pub mod stats;
pub mod teach;
pub mod tidy;

pub use error::{Error, Result};
pub use mdp::{ActionDistribution, ActionId, RngStream, StateId, NUM_ACTIONS};
