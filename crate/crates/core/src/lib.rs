//! Simulation and verification of bounded-memory protocols run by
//! anonymous agents on connected graphs.
//!
//! Agents hold a few bits of state and update them only when an edge
//! between two of them is activated by a random scheduler. The crate
//! provides the protocols, an event-driven engine, brute-force oracles and
//! an exhaustive stabilization checker.

pub mod circuits;
pub mod cli;
pub mod engine;
pub mod oracle;
pub mod protocols;

/// Version tag carried by every JSON and CSV record the tool emits.
pub const SCHEMA_VERSION: u32 = 1;
