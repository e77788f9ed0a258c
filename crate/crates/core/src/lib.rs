//! Landmark-driven planning for instruction-following aerial navigation.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: back-projection, depth aggregation and egocentric motion.
//! - [`slkb`]: the landmark knowledge base (description → positions).
//! - [`elg`]: layered candidate graph over the next unvisited landmarks.
//! - [`verbalizer`]: instruction-like text for graph paths.
//! - [`agent`]: prompt assembly, reply parsing and the rule/LLM planners.
//! - [`sim`]: seeded worlds, observations, action execution and episodes.
//! - [`metrics`]: NE, SR, OSR, DTW, nDTW and SDTW.

pub mod agent;
pub mod elg;
pub mod geometry;
pub mod instruction;
pub mod llm;
pub mod metrics;
pub mod sim;
pub mod slkb;
pub mod template;
pub mod verbalizer;
