//! Evolutionary reinforcement learning laboratory for a simplified quadruped.
//!
//! The crate trains DDPG, TD3, CEM-DDPG and CEM-TD3 actors on a built-in
//! deterministic quadruped simulator (flat terrain) and measures how the
//! resulting policies hold up on randomly generated rough terrain.
//!
//! Module map:
//!
//! - [`net`]: small MLPs with analytic gradients, Adam and Polyak blending.
//! - [`env`]: quadruped dynamics, terrains, reward and observation.
//! - [`replay`]: ring-buffer experience replay.
//! - [`rl`]: DDPG and TD3 update rules.
//! - [`cem`]: the cross-entropy method and its coupling with a shared critic.
//! - [`harness`]: configuration, training loops, evaluation, checkpoints, CLI.

// NaN-rejecting `!(x > 0.0)` checks and index loops over parallel arrays are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cem;
pub mod env;
pub mod error;
pub mod harness;
pub mod net;
pub mod replay;
pub mod rl;
pub mod seed;

pub use error::{Error, Result};
