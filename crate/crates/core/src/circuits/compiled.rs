//! Level-by-level simulation of a comparison circuit by anonymous agents.
//!
//! Each agent simulates the gates on the path from its color's leaf to the
//! root. At every gate it holds one [`GateLevelState`]: the charge it feeds
//! into the gate (+1 for the left input, -1 for the right one), its out bit,
//! a mark bit for a pending change of its own input unit, and a debt bit.
//!
//! When an agent's out bit at a MAX gate drops to 0, its input unit at the
//! parent gate must be withdrawn. The parent mark is resolved from the
//! agent's charge `q` there, with `s` the sign of the input it feeds:
//!
//! * `q == s`: the unit is still unmatched, cancel it and drop the out bit
//!   at the parent as well (which marks the grandparent),
//! * `q == 0`: the unit was already matched in a collision, so the agent
//!   takes the partner's charge `-s` and the parent output stays unchanged,
//! * `q == -s`: wait for a collision to bring `q` back to 0.
//!
//! With these rules every collision at a gate lowers its out-count by one.
//! Asynchrony can leave a collision with no participant whose out bit is
//! still 1; the decrement is then parked as a debt and paid by the next out
//! bit at the same gate the debtor meets. Over a settled run the number of
//! collisions at a gate is `c2 + d2 + min(a, b)` and the out-count is
//! `max(a, b)`, where `c2`/`d2` count the `q == 0` resolutions on either
//! side (see [`super::collision_count_check`]).

use std::sync::Arc;

use serde::Serialize;

use super::circuit::{ComparisonCircuit, GateId, GateInput, GateKind, PathStep, Side};
use crate::oracle::FunctionId;
use crate::protocols::{bits_for, Color, Output, Protocol, ProtocolError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct GateLevelState {
    pub charge: i8,
    pub out: bool,
    pub mark: bool,
    pub debt: bool,
    /// Sign of the last charge seen at this gate; only tracked for plurality.
    pub verdict: i8,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CircuitAgentState {
    pub initial_color: Color,
    pub final_color: Color,
    /// One entry per gate on the path, leaf side first.
    pub levels: Vec<GateLevelState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GateEventKind {
    Collision,
    /// Mark resolved on an unmatched unit (`q == s`).
    Cancelled(Side),
    /// Mark resolved on a matched unit (`q == 0`).
    Reversed(Side),
    /// Input unit arriving from a MIN child.
    Added(Side),
    DebtCreated,
    DebtSettled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct GateEvent {
    pub gate: GateId,
    pub kind: GateEventKind,
}

/// Protocol obtained by compiling a [`ComparisonCircuit`].
#[derive(Debug, Clone)]
pub struct CompiledCircuit {
    circuit: Arc<ComparisonCircuit>,
    plurality: bool,
    colors: u32,
}

enum Resolution {
    FlipX,
    FlipY,
    DebtX,
    DebtY,
}

impl CompiledCircuit {
    pub fn new(circuit: Arc<ComparisonCircuit>) -> Result<Self, ProtocolError> {
        let colors = circuit.num_colors();
        Self::build(circuit, false, colors)
    }

    /// Complete MAX tree with verdict tracking and a final-color register.
    /// Only colors below `colors` may be held by agents; the remaining
    /// leaves are inert padding.
    pub(crate) fn plurality(circuit: Arc<ComparisonCircuit>, colors: u32) -> Result<Self, ProtocolError> {
        Self::build(circuit, true, colors)
    }

    fn build(circuit: Arc<ComparisonCircuit>, plurality: bool, colors: u32) -> Result<Self, ProtocolError> {
        for (id, g) in circuit.gates().iter().enumerate() {
            let leaf_inputs = matches!(g.left, GateInput::Leaf(_)) && matches!(g.right, GateInput::Leaf(_));
            if g.kind == GateKind::Min && !leaf_inputs {
                return Err(ProtocolError::InvalidParameters(format!(
                    "gate {id}: MIN gates are only supported directly over leaves"
                )));
            }
        }
        if circuit.depth() > 31 {
            return Err(ProtocolError::InvalidParameters("circuit deeper than 31 gates".into()));
        }
        Ok(Self { circuit, plurality, colors })
    }

    pub fn circuit(&self) -> &Arc<ComparisonCircuit> {
        &self.circuit
    }

    pub fn tracks_plurality(&self) -> bool {
        self.plurality
    }

    fn path(&self, color: Color) -> Result<&[PathStep], ProtocolError> {
        if color >= self.colors {
            return Err(ProtocolError::InvalidColor { protocol: self.name(), color });
        }
        self.circuit.path(color).ok_or(ProtocolError::InvalidColor { protocol: self.name(), color })
    }

    fn kind(&self, step: &PathStep) -> GateKind {
        self.circuit.gate(step.gate).kind
    }

    /// The out bit at `i` may change only while the parent mark is clear.
    fn can_flip(levels: &[GateLevelState], i: usize, to: bool) -> bool {
        levels[i].out != to && levels.get(i + 1).is_none_or(|l| !l.mark)
    }

    fn flip(
        &self,
        agent: &mut CircuitAgentState,
        path: &[PathStep],
        i: usize,
        to: bool,
        log: &mut Vec<GateEvent>,
    ) -> Result<(), ProtocolError> {
        agent.levels[i].out = to;
        if i + 1 < agent.levels.len() {
            agent.levels[i + 1].mark = true;
            self.resolve(agent, path, i + 1, log)?;
        }
        Ok(())
    }

    /// Tries to clear the mark at level `i`; leaves it set when the agent
    /// has to wait.
    fn resolve(
        &self,
        agent: &mut CircuitAgentState,
        path: &[PathStep],
        i: usize,
        log: &mut Vec<GateEvent>,
    ) -> Result<(), ProtocolError> {
        let step = path[i];
        let gate = step.gate;
        if self.kind(&step) == GateKind::Min || i == 0 {
            return Err(ProtocolError::InvalidTransition(format!("gate {gate} received a mark but has no gate input")));
        }
        let s = step.side.sign();
        let child_out = agent.levels[i - 1].out;
        let lv = agent.levels[i];
        if !child_out {
            if lv.charge == s {
                if Self::can_flip(&agent.levels, i, false) {
                    agent.levels[i].mark = false;
                    agent.levels[i].charge = 0;
                    log.push(GateEvent { gate, kind: GateEventKind::Cancelled(step.side) });
                    self.flip(agent, path, i, false, log)?;
                } else if !lv.debt {
                    let l = &mut agent.levels[i];
                    l.mark = false;
                    l.charge = 0;
                    l.debt = true;
                    log.push(GateEvent { gate, kind: GateEventKind::Cancelled(step.side) });
                    log.push(GateEvent { gate, kind: GateEventKind::DebtCreated });
                }
            } else if lv.charge == 0 {
                agent.levels[i].mark = false;
                agent.levels[i].charge = -s;
                log.push(GateEvent { gate, kind: GateEventKind::Reversed(step.side) });
            }
        } else if lv.charge == 0 && !lv.out && Self::can_flip(&agent.levels, i, true) {
            agent.levels[i].mark = false;
            agent.levels[i].charge = s;
            log.push(GateEvent { gate, kind: GateEventKind::Added(step.side) });
            self.flip(agent, path, i, true, log)?;
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn collide(
        &self,
        x: &mut CircuitAgentState,
        px: &[PathStep],
        ix: usize,
        y: &mut CircuitAgentState,
        py: &[PathStep],
        iy: usize,
        log: &mut Vec<GateEvent>,
    ) -> Result<bool, ProtocolError> {
        let (qx, qy) = (x.levels[ix].charge, y.levels[iy].charge);
        if qx == 0 || qx != -qy {
            return Ok(false);
        }
        let kind = self.kind(&px[ix]);
        let to = kind == GateKind::Min;
        let choice = if Self::can_flip(&y.levels, iy, to) {
            Resolution::FlipY
        } else if Self::can_flip(&x.levels, ix, to) {
            Resolution::FlipX
        } else if kind == GateKind::Max && !y.levels[iy].debt {
            Resolution::DebtY
        } else if kind == GateKind::Max && !x.levels[ix].debt {
            Resolution::DebtX
        } else {
            return Ok(false);
        };
        let gate = px[ix].gate;
        x.levels[ix].charge = 0;
        y.levels[iy].charge = 0;
        log.push(GateEvent { gate, kind: GateEventKind::Collision });
        match choice {
            Resolution::FlipY => self.flip(y, py, iy, to, log)?,
            Resolution::FlipX => self.flip(x, px, ix, to, log)?,
            Resolution::DebtY => {
                y.levels[iy].debt = true;
                log.push(GateEvent { gate, kind: GateEventKind::DebtCreated });
            }
            Resolution::DebtX => {
                x.levels[ix].debt = true;
                log.push(GateEvent { gate, kind: GateEventKind::DebtCreated });
            }
        }
        if x.levels[ix].mark {
            self.resolve(x, px, ix, log)?;
        }
        if y.levels[iy].mark {
            self.resolve(y, py, iy, log)?;
        }
        Ok(true)
    }

    /// A debtor passes its debt to the first out bit it meets at the gate.
    #[allow(clippy::too_many_arguments)]
    fn settle_debts(
        &self,
        x: &mut CircuitAgentState,
        px: &[PathStep],
        ix: usize,
        y: &mut CircuitAgentState,
        py: &[PathStep],
        iy: usize,
        log: &mut Vec<GateEvent>,
    ) -> Result<bool, ProtocolError> {
        let gate = px[ix].gate;
        let mut changed = false;
        if x.levels[ix].debt && Self::can_flip(&y.levels, iy, false) {
            x.levels[ix].debt = false;
            log.push(GateEvent { gate, kind: GateEventKind::DebtSettled });
            self.flip(y, py, iy, false, log)?;
            changed = true;
        }
        if y.levels[iy].debt && Self::can_flip(&x.levels, ix, false) {
            y.levels[iy].debt = false;
            log.push(GateEvent { gate, kind: GateEventKind::DebtSettled });
            self.flip(x, px, ix, false, log)?;
            changed = true;
        }
        Ok(changed)
    }

    fn exchange_verdicts(x: &mut GateLevelState, y: &mut GateLevelState) {
        if x.charge == 0 && y.charge != 0 {
            x.verdict = y.charge.signum();
        }
        if y.charge == 0 && x.charge != 0 {
            y.verdict = x.charge.signum();
        }
    }

    /// Pays own debts, retries waiting marks and refreshes verdicts.
    fn normalize(
        &self,
        agent: &mut CircuitAgentState,
        path: &[PathStep],
        log: &mut Vec<GateEvent>,
    ) -> Result<(), ProtocolError> {
        for i in 0..agent.levels.len() {
            if agent.levels[i].debt && Self::can_flip(&agent.levels, i, false) {
                agent.levels[i].debt = false;
                log.push(GateEvent { gate: path[i].gate, kind: GateEventKind::DebtSettled });
                self.flip(agent, path, i, false, log)?;
            }
            if agent.levels[i].mark {
                self.resolve(agent, path, i, log)?;
            }
            if self.plurality && agent.levels[i].charge != 0 {
                agent.levels[i].verdict = agent.levels[i].charge.signum();
            }
        }
        Ok(())
    }

    /// The agent's side matches the standing verdict at every gate.
    pub fn won_all(&self, agent: &CircuitAgentState) -> bool {
        self.circuit
            .path(agent.initial_color)
            .is_some_and(|path| path.iter().zip(&agent.levels).all(|(step, lv)| lv.verdict == step.side.sign()))
    }

    /// One meeting, recording every gate-level event into `log`.
    pub fn transition_logged(
        &self,
        x0: &CircuitAgentState,
        y0: &CircuitAgentState,
        log: &mut Vec<GateEvent>,
    ) -> Result<(CircuitAgentState, CircuitAgentState), ProtocolError> {
        let mut x = x0.clone();
        let mut y = y0.clone();
        let px = self.path(x.initial_color)?;
        let py = self.path(y.initial_color)?;
        if x.levels.len() != px.len() || y.levels.len() != py.len() {
            return Err(ProtocolError::InvalidTransition("level vector does not match path".into()));
        }
        let shared = px.iter().rev().zip(py.iter().rev()).take_while(|(a, b)| a.gate == b.gate).count();
        let mut exchanged = false;
        for t in 0..shared {
            let ix = px.len() - shared + t;
            let iy = py.len() - shared + t;
            exchanged |= self.collide(&mut x, px, ix, &mut y, py, iy, log)?;
            if self.kind(&px[ix]) == GateKind::Max {
                exchanged |= self.settle_debts(&mut x, px, ix, &mut y, py, iy, log)?;
            }
            if self.plurality {
                Self::exchange_verdicts(&mut x.levels[ix], &mut y.levels[iy]);
            }
        }
        self.normalize(&mut x, px, log)?;
        self.normalize(&mut y, py, log)?;
        if self.plurality {
            let (xw, yw) = (self.won_all(&x), self.won_all(&y));
            for (agent, own, other) in [(&mut x, xw, (yw, y0.initial_color)), (&mut y, yw, (xw, x0.initial_color))] {
                if own {
                    agent.final_color = agent.initial_color;
                }
                if other.0 {
                    agent.final_color = other.1;
                }
            }
        }
        Ok(if exchanged { (x, y) } else { (y, x) })
    }

    /// No pending marks, no debts and no opposite charges at any gate.
    pub fn settled(&self, states: &[CircuitAgentState]) -> bool {
        let gates = self.circuit.gates().len();
        let mut pos = vec![false; gates];
        let mut neg = vec![false; gates];
        for s in states {
            let Some(path) = self.circuit.path(s.initial_color) else {
                return false;
            };
            for (step, lv) in path.iter().zip(&s.levels) {
                if lv.mark || lv.debt {
                    return false;
                }
                if lv.charge > 0 {
                    pos[step.gate] = true;
                } else if lv.charge < 0 {
                    neg[step.gate] = true;
                }
            }
        }
        pos.iter().zip(&neg).all(|(p, n)| !(p & n))
    }

    /// Number of agents whose out bit at `gate` is 1.
    pub fn gate_ones(&self, states: &[CircuitAgentState], gate: GateId) -> u64 {
        states.iter().filter(|s| self.circuit.level_of(s.initial_color, gate).is_some_and(|i| s.levels[i].out)).count()
            as u64
    }
}

impl Protocol for CompiledCircuit {
    type State = CircuitAgentState;

    fn name(&self) -> String {
        if self.plurality {
            format!("plurality:{}", self.colors)
        } else {
            format!("circuit:{}", self.circuit)
        }
    }

    fn function(&self) -> FunctionId {
        if self.plurality {
            FunctionId::Plurality { k: self.colors }
        } else {
            FunctionId::Circuit(self.circuit.clone())
        }
    }

    fn budget_bits(&self) -> u32 {
        let color_bits = bits_for(u64::from(self.circuit.num_colors()));
        if self.plurality {
            6 * color_bits
        } else {
            color_bits + 5 * self.circuit.depth()
        }
    }

    fn budget_note(&self) -> Option<String> {
        (!self.plurality).then(|| "5 bits per gate level: 2-bit charge, out, mark, debt".to_string())
    }

    fn init(&self, color: Color) -> Result<CircuitAgentState, ProtocolError> {
        let path = self.path(color)?;
        let mut levels = Vec::with_capacity(path.len());
        let mut present = true;
        for step in path {
            let s = step.side.sign();
            let (charge, out) = match self.kind(step) {
                GateKind::Max => (if present { s } else { 0 }, present),
                GateKind::Min => (s, false),
            };
            levels.push(GateLevelState {
                charge,
                out,
                mark: false,
                debt: false,
                verdict: if self.plurality { s } else { 0 },
            });
            present = out;
        }
        Ok(CircuitAgentState { initial_color: color, final_color: color, levels })
    }

    fn transition(
        &self,
        x: &CircuitAgentState,
        y: &CircuitAgentState,
    ) -> Result<(CircuitAgentState, CircuitAgentState), ProtocolError> {
        self.transition_logged(x, y, &mut Vec::new())
    }

    fn output(&self, state: &CircuitAgentState) -> Output {
        if self.plurality {
            Output::Value(u64::from(state.final_color))
        } else {
            let wins = state.levels.iter().enumerate().fold(0u32, |acc, (i, lv)| acc | (u32::from(lv.out) << i));
            Output::Path { color: state.initial_color, wins }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn compile(src: &str) -> CompiledCircuit {
        CompiledCircuit::new(Arc::new(src.parse().unwrap())).unwrap()
    }

    #[test]
    fn init_follows_input_kinds() {
        let c = compile("(max (min 0 1) (max 2 3))");
        let a = c.init(0).unwrap();
        // MIN leaf gate starts at out 0, so the unit is absent at the root
        assert_eq!(a.levels[0], GateLevelState { charge: 1, out: false, ..Default::default() });
        assert_eq!(a.levels[1], GateLevelState { charge: 0, out: false, ..Default::default() });
        let b = c.init(3).unwrap();
        assert_eq!(b.levels[0].charge, -1);
        assert_eq!(b.levels[1], GateLevelState { charge: -1, out: true, ..Default::default() });
        assert!(c.init(4).is_err());
    }

    #[test]
    fn min_over_gate_is_rejected() {
        let circuit: ComparisonCircuit = "(min (max 0 1) 2)".parse().unwrap();
        assert!(CompiledCircuit::new(Arc::new(circuit)).is_err());
    }

    #[test]
    fn lower_collision_marks_and_cancels_upstairs() {
        let c = compile("(max (max 0 1) 2)");
        let mut log = Vec::new();
        let (x, y) = c.transition_logged(&c.init(0).unwrap(), &c.init(1).unwrap(), &mut log).unwrap();
        // responder lost at the lower gate and had an unmatched unit above
        assert!(x.levels[0].out && !y.levels[0].out);
        assert_eq!(y.levels[1], GateLevelState { charge: 0, out: false, ..Default::default() });
        assert_eq!(
            log,
            vec![
                GateEvent { gate: 1, kind: GateEventKind::Collision },
                GateEvent { gate: 0, kind: GateEventKind::Cancelled(Side::A) },
            ]
        );
    }

    #[test]
    fn matched_unit_is_reversed() {
        let c = compile("(max (max 0 1) 2)");
        let mut log = Vec::new();
        // both units already collided at the root; y then loses below
        let mut x = c.init(0).unwrap();
        x.levels[1].charge = 0;
        let mut y = c.init(1).unwrap();
        y.levels[1].charge = 0;
        let (_, y2) = c.transition_logged(&x, &y, &mut log).unwrap();
        assert_eq!(y2.levels[1].charge, -1);
        assert!(y2.levels[1].out);
        assert!(log.contains(&GateEvent { gate: 0, kind: GateEventKind::Reversed(Side::A) }));
    }

    #[test]
    fn collision_without_out_bit_creates_debt() {
        let c = compile("(max 0 1)");
        let mut x = c.init(0).unwrap();
        let mut y = c.init(1).unwrap();
        x.levels[0].out = false;
        y.levels[0].out = false;
        let mut log = Vec::new();
        let (a, b) = c.transition_logged(&x, &y, &mut log).unwrap();
        assert!(b.levels[0].debt && !a.levels[0].debt);
        // the debt is paid by the next out bit at the gate
        let z = c.init(0).unwrap();
        let mut w = z.clone();
        w.levels[0].charge = 0;
        let (b2, w2) = c.transition_logged(&b, &w, &mut log).unwrap();
        assert!(!b2.levels[0].debt && !w2.levels[0].out);
    }

    #[test]
    fn non_interacting_meetings_swap() {
        let c = compile("(max 0 1)");
        let x = c.init(0).unwrap();
        let (a, b) = c.transition(&x, &x).unwrap();
        assert_eq!((a, b), (x.clone(), x));
    }
}
