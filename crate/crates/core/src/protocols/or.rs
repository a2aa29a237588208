use super::{Color, Output, Protocol, ProtocolError};
use crate::oracle::FunctionId;

/// One-bit OR: both parties keep the larger bit.
#[derive(Debug, Clone, Copy, Default)]
pub struct OrProtocol;

impl Protocol for OrProtocol {
    type State = bool;

    fn name(&self) -> String {
        "or".into()
    }

    fn function(&self) -> FunctionId {
        FunctionId::Or
    }

    fn budget_bits(&self) -> u32 {
        1
    }

    fn init(&self, color: Color) -> Result<bool, ProtocolError> {
        match color {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(ProtocolError::InvalidColor { protocol: self.name(), color }),
        }
    }

    fn transition(&self, a: &bool, b: &bool) -> Result<(bool, bool), ProtocolError> {
        let v = *a || *b;
        Ok((v, v))
    }

    fn output(&self, state: &bool) -> Output {
        Output::Value(u64::from(*state))
    }

    fn quiescent(&self, states: &[bool]) -> Option<bool> {
        Some(states.windows(2).all(|w| w[0] == w[1]))
    }
}
