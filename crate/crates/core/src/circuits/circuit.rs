use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocols::Color;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Max,
    Min,
}

impl GateKind {
    pub fn apply(self, a: u64, b: u64) -> u64 {
        match self {
            GateKind::Max => a.max(b),
            GateKind::Min => a.min(b),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateKind::Max => "max",
            GateKind::Min => "min",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("circuit syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("leaf color {0} appears more than once")]
    DuplicateLeaf(Color),
    #[error("leaf colors must be exactly 0..{k}; missing {missing}")]
    MissingLeaf { k: u32, missing: Color },
    #[error("a circuit needs at least one gate")]
    NoGate,
    #[error("unsupported circuit: {0}")]
    Unsupported(String),
}

/// Tree form of a comparison circuit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CircuitNode {
    Leaf(Color),
    Gate { kind: GateKind, left: Box<CircuitNode>, right: Box<CircuitNode> },
}

impl CircuitNode {
    pub fn gate(kind: GateKind, left: CircuitNode, right: CircuitNode) -> Self {
        CircuitNode::Gate { kind, left: Box::new(left), right: Box::new(right) }
    }

    /// Gates on the longest root-leaf path.
    pub fn depth(&self) -> u32 {
        match self {
            CircuitNode::Leaf(_) => 0,
            CircuitNode::Gate { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn leaves(&self, out: &mut Vec<Color>) {
        match self {
            CircuitNode::Leaf(c) => out.push(*c),
            CircuitNode::Gate { left, right, .. } => {
                left.leaves(out);
                right.leaves(out);
            }
        }
    }
}

impl fmt::Display for CircuitNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CircuitNode::Leaf(c) => write!(f, "{c}"),
            CircuitNode::Gate { kind, left, right } => write!(f, "({kind} {left} {right})"),
        }
    }
}

pub type GateId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateInput {
    Leaf(Color),
    Gate(GateId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GateInfo {
    pub kind: GateKind,
    pub left: GateInput,
    pub right: GateInput,
    pub parent: Option<GateId>,
}

/// Which input of a gate an agent feeds: `A` (left, charge +1) or `B`
/// (right, charge -1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn sign(self) -> i8 {
        match self {
            Side::A => 1,
            Side::B => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PathStep {
    pub gate: GateId,
    pub side: Side,
}

/// A binary tree of MAX/MIN gates over `k` distinct color leaves, with the
/// flattened gate table and the leaf-to-root path of every color.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ComparisonCircuit {
    root: CircuitNode,
    gates: Vec<GateInfo>,
    paths: Vec<Vec<PathStep>>,
    k: u32,
}

impl ComparisonCircuit {
    pub fn new(root: CircuitNode) -> Result<Self, CircuitError> {
        if matches!(root, CircuitNode::Leaf(_)) {
            return Err(CircuitError::NoGate);
        }
        let mut leaves = Vec::new();
        root.leaves(&mut leaves);
        let k = leaves.len() as u32;
        let mut seen = std::collections::BTreeSet::new();
        for &c in &leaves {
            if !seen.insert(c) {
                return Err(CircuitError::DuplicateLeaf(c));
            }
        }
        if let Some(missing) = (0..k).find(|c| !seen.contains(c)) {
            return Err(CircuitError::MissingLeaf { k, missing });
        }
        let mut gates = Vec::new();
        let mut paths = vec![Vec::new(); k as usize];
        Self::flatten(&root, None, &mut gates, &mut paths);
        // paths were collected root-first
        for p in &mut paths {
            p.reverse();
        }
        Ok(Self { root, gates, paths, k })
    }

    fn flatten(
        node: &CircuitNode,
        parent: Option<GateId>,
        gates: &mut Vec<GateInfo>,
        paths: &mut [Vec<PathStep>],
    ) -> GateInput {
        match node {
            CircuitNode::Leaf(c) => GateInput::Leaf(*c),
            CircuitNode::Gate { kind, left, right } => {
                let id = gates.len();
                gates.push(GateInfo { kind: *kind, left: GateInput::Leaf(0), right: GateInput::Leaf(0), parent });
                let mut colors = Vec::new();
                left.leaves(&mut colors);
                for c in colors.drain(..) {
                    paths[c as usize].push(PathStep { gate: id, side: Side::A });
                }
                right.leaves(&mut colors);
                for c in colors {
                    paths[c as usize].push(PathStep { gate: id, side: Side::B });
                }
                let l = Self::flatten(left, Some(id), gates, paths);
                let r = Self::flatten(right, Some(id), gates, paths);
                gates[id].left = l;
                gates[id].right = r;
                GateInput::Gate(id)
            }
        }
    }

    /// Complete MAX tree over `leaves` colors; `leaves` must be a power of two.
    pub fn complete_max_tree(leaves: u32) -> Result<Self, CircuitError> {
        if leaves < 2 || !leaves.is_power_of_two() {
            return Err(CircuitError::Unsupported(format!(
                "complete tree needs a power-of-two leaf count >= 2, got {leaves}"
            )));
        }
        fn build(lo: u32, hi: u32) -> CircuitNode {
            if hi - lo == 1 {
                CircuitNode::Leaf(lo)
            } else {
                let mid = (lo + hi) / 2;
                CircuitNode::gate(GateKind::Max, build(lo, mid), build(mid, hi))
            }
        }
        Self::new(build(0, leaves))
    }

    pub fn root(&self) -> &CircuitNode {
        &self.root
    }

    pub fn gates(&self) -> &[GateInfo] {
        &self.gates
    }

    pub fn gate(&self, id: GateId) -> &GateInfo {
        &self.gates[id]
    }

    /// Root gate id.
    pub fn root_gate(&self) -> GateId {
        0
    }

    pub fn num_colors(&self) -> u32 {
        self.k
    }

    pub fn depth(&self) -> u32 {
        self.root.depth()
    }

    /// Gates from the leaf of `color` up to the root.
    pub fn path(&self, color: Color) -> Option<&[PathStep]> {
        self.paths.get(color as usize).map(Vec::as_slice)
    }

    /// Position of `gate` on the path of `color`, if the color feeds it.
    pub fn level_of(&self, color: Color, gate: GateId) -> Option<usize> {
        self.path(color)?.iter().position(|s| s.gate == gate)
    }

    /// Colors in the subtree under `input`.
    pub fn colors_under(&self, input: GateInput) -> Vec<Color> {
        match input {
            GateInput::Leaf(c) => vec![c],
            GateInput::Gate(g) => (0..self.k).filter(|&c| self.level_of(c, g).is_some()).collect(),
        }
    }

    /// True when every gate in the subtree of `input` is a MAX gate.
    pub fn max_only(&self, input: GateInput) -> bool {
        match input {
            GateInput::Leaf(_) => true,
            GateInput::Gate(g) => {
                let info = &self.gates[g];
                info.kind == GateKind::Max && self.max_only(info.left) && self.max_only(info.right)
            }
        }
    }
}

impl fmt::Display for ComparisonCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl FromStr for ComparisonCircuit {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parser = Parser { src: s.as_bytes(), pos: 0 };
        let node = parser.node()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(parser.error("trailing input"));
        }
        Self::new(node)
    }
}

/// Reader for the s-expression form, e.g. `(max (min 0 1) 2)`.
/// `;` starts a comment running to the end of the line.
struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> CircuitError {
        CircuitError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while let Some(&c) = self.src.get(self.pos) {
            if c == b';' {
                while self.src.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn word(&mut self) -> &str {
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_') {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn node(&mut self) -> Result<CircuitNode, CircuitError> {
        self.skip_ws();
        match self.src.get(self.pos) {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let kind = match self.word().to_ascii_lowercase().as_str() {
                    "max" => GateKind::Max,
                    "min" => GateKind::Min,
                    _ => return Err(self.error("expected `max` or `min`")),
                };
                let left = self.node()?;
                let right = self.node()?;
                self.skip_ws();
                if self.src.get(self.pos) != Some(&b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(CircuitNode::gate(kind, left, right))
            }
            Some(c) if c.is_ascii_digit() => {
                let w = self.word().to_string();
                w.parse::<Color>().map(CircuitNode::Leaf).map_err(|_| self.error("bad color id"))
            }
            Some(_) => Err(self.error("expected `(` or a color id")),
        }
    }
}
