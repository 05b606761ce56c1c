//! Reward generation and refinement pipeline on top of `rewardforge-core`:
//! chat-model client and prompts, run orchestration and persistence, the
//! HTTP API and the command line.

pub mod cli;
pub mod llm;
pub mod pipeline;
pub mod server;

pub use rewardforge_core as core;
