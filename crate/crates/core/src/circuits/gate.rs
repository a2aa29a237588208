use super::GateKind;
use crate::oracle::FunctionId;
use crate::protocols::{Color, Output, Protocol, ProtocolError};

/// Standalone distributed comparison gate over two input types.
///
/// Color 0 agents carry charge +1, color 1 agents charge -1. A collision of
/// two live opposite charges neutralises both; the responder leaves the live
/// set. For MAX every agent starts with out = 1 and the responder drops to
/// 0, for MIN every agent starts with out = 0 and the responder rises to 1.
/// Every other meeting swaps the two states.
#[derive(Debug, Clone, Copy)]
pub struct GateProtocol {
    kind: GateKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GateState {
    pub charge: i8,
    pub live: bool,
    pub out: bool,
}

impl GateProtocol {
    pub fn new(kind: GateKind) -> Self {
        Self { kind }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn charge_sum(states: &[GateState]) -> i64 {
        states.iter().map(|s| i64::from(s.charge)).sum()
    }
}

impl Protocol for GateProtocol {
    type State = GateState;

    fn name(&self) -> String {
        format!("{}-gate", self.kind)
    }

    fn function(&self) -> FunctionId {
        FunctionId::Gate(self.kind)
    }

    fn budget_bits(&self) -> u32 {
        3
    }

    fn init(&self, color: Color) -> Result<GateState, ProtocolError> {
        let charge = match color {
            0 => 1,
            1 => -1,
            _ => return Err(ProtocolError::InvalidColor { protocol: self.name(), color }),
        };
        Ok(GateState { charge, live: true, out: self.kind == GateKind::Max })
    }

    fn transition(&self, x: &GateState, y: &GateState) -> Result<(GateState, GateState), ProtocolError> {
        if x.live && y.live && x.charge != 0 && x.charge == -y.charge {
            let winner = GateState { charge: 0, live: true, out: self.kind == GateKind::Max };
            let loser = GateState { charge: 0, live: false, out: self.kind == GateKind::Min };
            return Ok((winner, loser));
        }
        Ok((*y, *x))
    }

    fn output(&self, state: &GateState) -> Output {
        Output::Value(u64::from(state.out))
    }

    fn quiescent(&self, states: &[GateState]) -> Option<bool> {
        let pos = states.iter().any(|s| s.live && s.charge > 0);
        let neg = states.iter().any(|s| s.live && s.charge < 0);
        Some(!(pos && neg))
    }
}
