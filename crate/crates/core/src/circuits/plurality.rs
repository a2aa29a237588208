use std::sync::Arc;

use super::{CircuitAgentState, ComparisonCircuit, CompiledCircuit};
use crate::oracle::FunctionId;
use crate::protocols::{Color, Output, Protocol, ProtocolError};

/// Plurality over `k` colors via the complete MAX tree.
///
/// Agents learn, gate by gate, which input side holds the surviving charge.
/// An agent whose own side survives at every gate on its path is a winner,
/// and anyone meeting a winner copies the winner's color into its final
/// register. For non-power-of-two `k` the tree is padded with leaves that
/// no agent holds.
#[derive(Debug, Clone)]
pub struct PluralityProtocol {
    inner: CompiledCircuit,
    k: u32,
}

impl PluralityProtocol {
    pub fn new(k: u32) -> Result<Self, ProtocolError> {
        if k < 2 {
            return Err(ProtocolError::InvalidParameters(format!("plurality needs k >= 2, got {k}")));
        }
        let leaves = k.next_power_of_two();
        let tree = ComparisonCircuit::complete_max_tree(leaves)
            .map_err(|e| ProtocolError::InvalidParameters(e.to_string()))?;
        Ok(Self { inner: CompiledCircuit::plurality(Arc::new(tree), k)?, k })
    }

    pub fn colors(&self) -> u32 {
        self.k
    }

    pub fn compiled(&self) -> &CompiledCircuit {
        &self.inner
    }
}

impl Protocol for PluralityProtocol {
    type State = CircuitAgentState;

    fn name(&self) -> String {
        format!("plurality:{}", self.k)
    }

    fn function(&self) -> FunctionId {
        FunctionId::Plurality { k: self.k }
    }

    fn budget_bits(&self) -> u32 {
        self.inner.budget_bits()
    }

    fn init(&self, color: Color) -> Result<CircuitAgentState, ProtocolError> {
        self.inner.init(color)
    }

    fn transition(
        &self,
        x: &CircuitAgentState,
        y: &CircuitAgentState,
    ) -> Result<(CircuitAgentState, CircuitAgentState), ProtocolError> {
        self.inner.transition(x, y)
    }

    fn output(&self, state: &CircuitAgentState) -> Output {
        self.inner.output(state)
    }
}
