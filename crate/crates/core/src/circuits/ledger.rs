use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::{CircuitAgentState, CompiledCircuit, GateEvent, GateEventKind, GateId, GateInput, Side};
use crate::engine::Trace;
use crate::protocols::{Color, Protocol, ProtocolError};

/// Per-gate event counts of a replayed run together with the settled
/// input and output counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LedgerReport {
    pub gate: GateId,
    /// Settled out-count of the left and right inputs.
    pub a: u64,
    pub b: u64,
    /// Marks resolved on unmatched units, left / right side.
    pub c1: u64,
    pub d1: u64,
    /// Marks resolved on matched units, left / right side.
    pub c2: u64,
    pub d2: u64,
    pub collisions: u64,
    pub ones: u64,
}

impl LedgerReport {
    pub fn collisions_expected(&self) -> u64 {
        self.c2 + self.d2 + self.a.min(self.b)
    }

    pub fn holds(&self) -> bool {
        self.collisions == self.collisions_expected() && self.ones == self.a.max(self.b)
    }
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("gate {0} does not exist")]
    NoSuchGate(GateId),
    #[error("gate {0} has MIN gates below it; the ledger identity covers MAX circuits")]
    NotMaxCircuit(GateId),
    #[error("replayed configuration is not settled (pending marks, debts or opposite charges)")]
    NotSettled,
    #[error("replay failed: {0}")]
    Replay(#[from] ProtocolError),
    #[error("activation {step} references node {node} outside the input")]
    BadActivation { step: u64, node: usize },
    #[error("ledger identity violated: {0:?}")]
    Violated(LedgerReport),
}

/// Final states of a replay and the events logged at each gate.
pub type Replay = (Vec<CircuitAgentState>, BTreeMap<GateId, Vec<GateEvent>>);

/// Replays `trace` from `input` and returns the event ledger of every gate.
pub fn replay_ledger(circuit: &CompiledCircuit, input: &[Color], trace: &Trace) -> Result<Replay, LedgerError> {
    let mut states = input.iter().map(|&c| circuit.init(c)).collect::<Result<Vec<_>, _>>()?;
    let mut events: BTreeMap<GateId, Vec<GateEvent>> = BTreeMap::new();
    let mut log = Vec::new();
    for act in &trace.activations {
        let (u, v) = (act.initiator as usize, act.responder as usize);
        for node in [u, v] {
            if node >= states.len() {
                return Err(LedgerError::BadActivation { step: act.step, node });
            }
        }
        log.clear();
        let (a, b) = circuit.transition_logged(&states[u], &states[v], &mut log)?;
        states[u] = a;
        states[v] = b;
        for e in &log {
            events.entry(e.gate).or_default().push(*e);
        }
    }
    Ok((states, events))
}

fn input_ones(circuit: &CompiledCircuit, states: &[CircuitAgentState], input: GateInput) -> u64 {
    match input {
        GateInput::Leaf(c) => states.iter().filter(|s| s.initial_color == c).count() as u64,
        GateInput::Gate(g) => circuit.gate_ones(states, g),
    }
}

/// Checks, for one gate of a settled replay, that the collisions equal
/// `c2 + d2 + min(a, b)` and that the out-count equals `max(a, b)`.
pub fn collision_count_check(
    circuit: &CompiledCircuit,
    input: &[Color],
    trace: &Trace,
    gate: GateId,
) -> Result<LedgerReport, LedgerError> {
    let (states, events) = replay_ledger(circuit, input, trace)?;
    ledger_for(circuit, &states, events.get(&gate).map(Vec::as_slice).unwrap_or(&[]), gate)
}

/// Ledger check over every gate of the circuit, bottom gates first.
pub fn check_all_gates(
    circuit: &CompiledCircuit,
    input: &[Color],
    trace: &Trace,
) -> Result<Vec<LedgerReport>, LedgerError> {
    let (states, events) = replay_ledger(circuit, input, trace)?;
    (0..circuit.circuit().gates().len())
        .rev()
        .map(|g| ledger_for(circuit, &states, events.get(&g).map(Vec::as_slice).unwrap_or(&[]), g))
        .collect()
}

fn ledger_for(
    circuit: &CompiledCircuit,
    states: &[CircuitAgentState],
    events: &[GateEvent],
    gate: GateId,
) -> Result<LedgerReport, LedgerError> {
    let tree = circuit.circuit();
    let info = tree.gates().get(gate).ok_or(LedgerError::NoSuchGate(gate))?;
    if !tree.max_only(GateInput::Gate(gate)) {
        return Err(LedgerError::NotMaxCircuit(gate));
    }
    if !circuit.settled(states) {
        return Err(LedgerError::NotSettled);
    }
    let mut report = LedgerReport {
        gate,
        a: input_ones(circuit, states, info.left),
        b: input_ones(circuit, states, info.right),
        c1: 0,
        d1: 0,
        c2: 0,
        d2: 0,
        collisions: 0,
        ones: circuit.gate_ones(states, gate),
    };
    for e in events {
        match e.kind {
            GateEventKind::Collision => report.collisions += 1,
            GateEventKind::Cancelled(Side::A) => report.c1 += 1,
            GateEventKind::Cancelled(Side::B) => report.d1 += 1,
            GateEventKind::Reversed(Side::A) => report.c2 += 1,
            GateEventKind::Reversed(Side::B) => report.d2 += 1,
            _ => {}
        }
    }
    if report.holds() {
        Ok(report)
    } else {
        Err(LedgerError::Violated(report))
    }
}
