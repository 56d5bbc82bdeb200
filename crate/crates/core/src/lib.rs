//! Simulation and learning core for a UAV relaying directional THz fronthaul
//! links from randomly placed small-cell base stations (SBSs).
//!
//! The crate is `no_std` (it needs `alloc`) and contains no I/O:
//!
//! - [`geometry`]: kinematics and UAV/SBS angles
//! - [`antenna`]: square uniform array pattern and its power normalization
//! - [`channel`]: path loss, LoS probability, SINR and Monte-Carlo outage
//! - [`environment`]: the dynamic-topology MDP the agent is trained in
//! - [`neural`]: dense networks with exact gradients and Adam
//! - [`td3`]: the TD3 agent, replay buffer and training loop
//! - [`baseline`]: grid-search oracle and static comparator
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![no_std]
#![deny(rust_2018_idioms)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod antenna;
pub mod baseline;
pub mod channel;
pub mod environment;
pub mod geometry;
pub mod neural;
pub mod rng;
pub mod td3;

mod error;
pub use error::{Error, Result};

pub use geometry::Vec3;
