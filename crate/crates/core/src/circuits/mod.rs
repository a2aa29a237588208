//! Distributed comparison gates, their composition into circuits, and the
//! plurality protocol built on the complete MAX tree.

mod circuit;
mod compiled;
mod gate;
mod ledger;
mod plurality;

pub use circuit::{
    CircuitError, CircuitNode, ComparisonCircuit, GateId, GateInfo, GateInput, GateKind, PathStep, Side,
};
pub use compiled::{CircuitAgentState, CompiledCircuit, GateEvent, GateEventKind, GateLevelState};
pub use gate::{GateProtocol, GateState};
pub use ledger::{check_all_gates, collision_count_check, replay_ledger, LedgerError, LedgerReport, Replay};
pub use plurality::PluralityProtocol;
