//! Core algorithms for the rewardforge pipeline.
//!
//! Everything here is pure and allocation-only: the reward expression
//! language ([`dsl`]), the two reference classic-control environments
//! ([`envs`]), tile-coded Q-learning ([`learner`]) and the deterministic
//! trajectory describer ([`behavior`]). IO, LLM traffic and persistence live
//! in the `rewardforge` crate.
#![no_std]

extern crate alloc;

pub mod behavior;
pub mod dsl;
pub mod envs;
pub mod learner;
mod obs;
pub mod rng;

pub use obs::{ObservationSpec, ObservationSpecError, ObservationVar};
