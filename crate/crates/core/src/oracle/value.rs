use std::fmt;
use std::sync::Arc;

use serde_json::json;
use thiserror::Error;

use crate::circuits::{CircuitNode, ComparisonCircuit, GateKind};
use crate::protocols::{Color, Output};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("plurality tie between colors {0:?}")]
    PluralityTie(Vec<Color>),
    #[error("plurality of an empty population")]
    EmptyPopulation,
    #[error("color {color} is outside the {arity} colors of {function}")]
    ColorOutOfRange { function: String, color: Color, arity: usize },
}

/// The symmetric function a protocol computes, as a function of the color
/// counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunctionId {
    Or,
    LsbMod { bits: u32 },
    Threshold { a: u64, b: u64 },
    Bit { index: u32 },
    Estimate,
    Gate(GateKind),
    Circuit(Arc<ComparisonCircuit>),
    Plurality { k: u32 },
}

impl FunctionId {
    pub fn arity(&self) -> usize {
        match self {
            FunctionId::Circuit(c) => c.num_colors() as usize,
            FunctionId::Plurality { k } => *k as usize,
            _ => 2,
        }
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionId::Or => f.write_str("or"),
            FunctionId::LsbMod { bits } => write!(f, "r mod 2^{bits}"),
            FunctionId::Threshold { a, b } => write!(f, "[{b}r > {a}(n-r)]"),
            FunctionId::Bit { index } => write!(f, "bit {index} of r"),
            FunctionId::Estimate => f.write_str("floor(log2 r)"),
            FunctionId::Gate(kind) => write!(f, "{kind}(a, b)"),
            FunctionId::Circuit(c) => write!(f, "{c}"),
            FunctionId::Plurality { k } => write!(f, "argmax of {k} counts"),
        }
    }
}

/// What a correct configuration looks like.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expected {
    /// Every agent outputs this value.
    Unanimous(Output),
    /// Exactly this many agents output `Value(1)`, the rest `Value(0)`.
    Ones(u64),
    /// For every gate (by id), the number of agents on that gate whose out
    /// bit is set.
    GateOnes { circuit: Arc<ComparisonCircuit>, ones: Vec<u64> },
}

impl Expected {
    pub fn matches(&self, outputs: &[Output]) -> bool {
        Scorer::new(self, outputs).is_correct()
    }

    /// JSON rendering used in result records.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Expected::Unanimous(Output::Value(v)) => json!(v),
            Expected::Unanimous(other) => json!(other.to_string()),
            Expected::Ones(k) => json!({ "ones": k }),
            Expected::GateOnes { ones, .. } => json!({ "gate_ones": ones }),
        }
    }
}

/// Incremental correctness check over a changing output vector.
#[derive(Debug, Clone)]
pub struct Scorer<'e> {
    expected: &'e Expected,
    /// Agents disagreeing with a unanimous value, or agents reporting
    /// something other than 0/1 for a count.
    wrong: usize,
    ones: u64,
    gate_ones: Vec<u64>,
    wrong_gates: usize,
}

impl<'e> Scorer<'e> {
    pub fn new(expected: &'e Expected, outputs: &[Output]) -> Self {
        let (gates, wrong_gates) = match expected {
            Expected::GateOnes { ones, .. } => (ones.len(), ones.iter().filter(|&&k| k != 0).count()),
            _ => (0, 0),
        };
        let mut s = Self { expected, wrong: 0, ones: 0, gate_ones: vec![0; gates], wrong_gates };
        for o in outputs {
            s.add(o, 1);
        }
        s
    }

    fn add(&mut self, o: &Output, sign: i64) {
        let bump = |x: &mut usize| *x = (*x as i64 + sign) as usize;
        match self.expected {
            Expected::Unanimous(v) => {
                if o != v {
                    bump(&mut self.wrong);
                }
            }
            Expected::Ones(_) => match o {
                Output::Value(1) => self.ones = (self.ones as i64 + sign) as u64,
                Output::Value(0) => {}
                _ => bump(&mut self.wrong),
            },
            Expected::GateOnes { circuit, ones } => {
                let Output::Path { color, wins } = *o else {
                    bump(&mut self.wrong);
                    return;
                };
                let Some(path) = circuit.path(color) else {
                    bump(&mut self.wrong);
                    return;
                };
                for (i, step) in path.iter().enumerate() {
                    if wins >> i & 1 == 1 {
                        let g = step.gate;
                        let before = self.gate_ones[g] == ones[g];
                        self.gate_ones[g] = (self.gate_ones[g] as i64 + sign) as u64;
                        let after = self.gate_ones[g] == ones[g];
                        match (before, after) {
                            (true, false) => self.wrong_gates += 1,
                            (false, true) => self.wrong_gates -= 1,
                            _ => {}
                        }
                    }
                }
            }
        }
    }

    /// Accounts for one agent's output changing from `old` to `new`.
    pub fn replace(&mut self, old: &Output, new: &Output) {
        if old != new {
            self.add(old, -1);
            self.add(new, 1);
        }
    }

    pub fn is_correct(&self) -> bool {
        if self.wrong > 0 {
            return false;
        }
        match self.expected {
            Expected::Unanimous(_) => true,
            Expected::Ones(k) => self.ones == *k,
            Expected::GateOnes { .. } => self.wrong_gates == 0,
        }
    }
}

/// Per-color counts of an input, padded to `arity` colors.
pub fn color_counts(input: &[Color], arity: usize) -> Vec<u64> {
    let len = input.iter().map(|&c| c as usize + 1).max().unwrap_or(0).max(arity);
    let mut counts = vec![0u64; len];
    for &c in input {
        counts[c as usize] += 1;
    }
    counts
}

fn eval(node: &CircuitNode, counts: &[u64], per_gate: &mut Vec<u64>) -> u64 {
    match node {
        CircuitNode::Leaf(c) => counts.get(*c as usize).copied().unwrap_or(0),
        CircuitNode::Gate { kind, left, right } => {
            // preorder ids: reserve this gate's slot before visiting children
            let id = per_gate.len();
            per_gate.push(0);
            let a = eval(left, counts, per_gate);
            let b = eval(right, counts, per_gate);
            let v = match kind {
                GateKind::Max => a.max(b),
                GateKind::Min => a.min(b),
            };
            per_gate[id] = v;
            v
        }
    }
}

/// Ground-truth value of `function` on the given per-color counts.
pub fn oracle_value(function: &FunctionId, counts: &[u64]) -> Result<Expected, OracleError> {
    let arity = function.arity();
    if let Some(color) = (arity..counts.len()).find(|&c| counts[c] > 0) {
        return Err(OracleError::ColorOutOfRange { function: function.to_string(), color: color as Color, arity });
    }
    let count = |c: usize| counts.get(c).copied().unwrap_or(0);
    let r = count(0);
    let n: u64 = counts.iter().sum();
    let value = |v: u64| Ok(Expected::Unanimous(Output::Value(v)));
    match function {
        FunctionId::Or => value(u64::from(count(1) > 0)),
        FunctionId::LsbMod { bits } => value(r % (1u64 << bits)),
        FunctionId::Threshold { a, b } => {
            value(u64::from(u128::from(*b) * u128::from(r) > u128::from(*a) * u128::from(n - r)))
        }
        FunctionId::Bit { index } => value(r.checked_shr(*index).unwrap_or(0) & 1),
        FunctionId::Estimate => {
            if r == 0 {
                Ok(Expected::Unanimous(Output::Empty))
            } else {
                value(u64::from(r.ilog2()))
            }
        }
        FunctionId::Gate(kind) => Ok(Expected::Ones(match kind {
            GateKind::Max => r.max(count(1)),
            GateKind::Min => r.min(count(1)),
        })),
        FunctionId::Circuit(circuit) => {
            let mut ones = Vec::new();
            eval(circuit.root(), counts, &mut ones);
            Ok(Expected::GateOnes { circuit: circuit.clone(), ones })
        }
        FunctionId::Plurality { k } => {
            let best = (0..*k as usize).map(count).max().unwrap_or(0);
            if best == 0 {
                return Err(OracleError::EmptyPopulation);
            }
            let winners: Vec<Color> = (0..*k as usize).filter(|&c| count(c) == best).map(|c| c as Color).collect();
            if winners.len() > 1 {
                return Err(OracleError::PluralityTie(winners));
            }
            value(u64::from(winners[0]))
        }
    }
}
