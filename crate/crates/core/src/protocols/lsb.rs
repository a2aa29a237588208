use super::{Color, Output, Protocol, ProtocolError};
use crate::oracle::FunctionId;

/// Counter of the `c` least significant bits of the red count.
///
/// Red agents start active holding 1. Two actives merge their counters
/// (mod 2^c) and the responder turns passive; a passive agent meeting an
/// active one copies the counter and takes over the active status, which
/// makes active tokens random-walk through the graph.
#[derive(Debug, Clone, Copy)]
pub struct LsbCounterProtocol {
    bits: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParityState {
    pub counter: u32,
    pub active: bool,
}

impl LsbCounterProtocol {
    pub fn new(bits: u32) -> Result<Self, ProtocolError> {
        if bits == 0 || bits > 31 {
            return Err(ProtocolError::InvalidParameters(format!("lsb counter width must be in 1..=31, got {bits}")));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn modulus(&self) -> u32 {
        1 << self.bits
    }
}

impl Protocol for LsbCounterProtocol {
    type State = ParityState;

    fn name(&self) -> String {
        format!("lsb:{}", self.bits)
    }

    fn function(&self) -> FunctionId {
        FunctionId::LsbMod { bits: self.bits }
    }

    fn budget_bits(&self) -> u32 {
        self.bits + 1
    }

    fn init(&self, color: Color) -> Result<ParityState, ProtocolError> {
        match color {
            0 => Ok(ParityState { counter: 1 % self.modulus(), active: true }),
            1 => Ok(ParityState { counter: 0, active: false }),
            _ => Err(ProtocolError::InvalidColor { protocol: self.name(), color }),
        }
    }

    fn transition(&self, a: &ParityState, b: &ParityState) -> Result<(ParityState, ParityState), ProtocolError> {
        Ok(match (a.active, b.active) {
            (true, true) => {
                let sum = (a.counter + b.counter) % self.modulus();
                (ParityState { counter: sum, active: true }, ParityState { counter: sum, active: false })
            }
            (false, true) => {
                (ParityState { counter: b.counter, active: true }, ParityState { counter: b.counter, active: false })
            }
            (true, false) => {
                (ParityState { counter: a.counter, active: false }, ParityState { counter: a.counter, active: true })
            }
            (false, false) => (*a, *b),
        })
    }

    fn output(&self, state: &ParityState) -> Output {
        Output::Value(u64::from(state.counter))
    }

    fn quiescent(&self, states: &[ParityState]) -> Option<bool> {
        let actives = states.iter().filter(|s| s.active).count();
        let agree = states.windows(2).all(|w| w[0].counter == w[1].counter);
        Some(actives <= 1 && agree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(counter: u32, active: bool) -> ParityState {
        ParityState { counter, active }
    }

    #[test]
    fn active_pair_merges_mod_2c() {
        let p = LsbCounterProtocol::new(2).unwrap();
        assert_eq!(p.transition(&st(3, true), &st(2, true)).unwrap(), (st(1, true), st(1, false)));
    }

    #[test]
    fn passive_copies_and_swaps_status() {
        let p = LsbCounterProtocol::new(2).unwrap();
        assert_eq!(p.transition(&st(0, false), &st(3, true)).unwrap(), (st(3, true), st(3, false)));
        assert_eq!(p.transition(&st(2, true), &st(1, false)).unwrap(), (st(2, false), st(2, true)));
        assert_eq!(p.transition(&st(2, false), &st(1, false)).unwrap(), (st(2, false), st(1, false)));
    }

    #[test]
    fn rejects_zero_width() {
        assert!(LsbCounterProtocol::new(0).is_err());
    }
}
