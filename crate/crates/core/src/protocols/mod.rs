//! Binary-input protocols and the shared protocol abstraction.
//!
//! A protocol is a deterministic pairwise rule over a finite per-agent state.
//! Every agent starts from `init(color)`, and each activation of an ordered
//! pair `(initiator, responder)` replaces both states with `transition`.
//! Agents carry no identifiers and no knowledge of `n`.

mod bit;
mod lsb;
mod or;
mod threshold;

use std::fmt;
use std::hash::Hash;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bit::{BitProtocol, BitState, EstimateProtocol, EstimateState};
pub use lsb::{LsbCounterProtocol, ParityState};
pub use or::OrProtocol;
pub use threshold::{ThresholdProtocol, ThresholdState};

use crate::circuits::{ComparisonCircuit, CompiledCircuit, GateKind, GateProtocol, PluralityProtocol};
use crate::oracle::FunctionId;

/// Input color of an agent. Binary protocols count color 0 ("red").
pub type Color = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("invalid protocol parameters: {0}")]
    InvalidParameters(String),
    #[error("color {color} is not a valid input for {protocol}")]
    InvalidColor { protocol: String, color: Color },
    #[error("level overflow: a token would reach level {level} but only {levels} levels exist (n exceeds n_max)")]
    LevelOverflow { level: u32, levels: u32 },
    #[error("invalid transition: {0}")]
    InvalidTransition(String),
    #[error("unparsable protocol spec {0:?}")]
    Parse(String),
}

/// Value an agent reports through its output map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Value(u64),
    /// No red agent was ever observed (count estimator with r = 0).
    Empty,
    /// Out bits of a compiled circuit agent along its root-leaf path,
    /// bit `i` being the gate at height `i` above the leaf.
    Path {
        color: Color,
        wins: u32,
    },
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Output::Value(v) => write!(f, "{v}"),
            Output::Empty => f.write_str("empty"),
            Output::Path { color, wins } => write!(f, "{color}/{wins:b}"),
        }
    }
}

impl FromStr for Output {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "empty" {
            return Ok(Output::Empty);
        }
        if let Some((color, wins)) = s.split_once('/') {
            let color = color.parse().map_err(|_| format!("bad path color in {s:?}"))?;
            let wins = u32::from_str_radix(wins, 2).map_err(|_| format!("bad path bits in {s:?}"))?;
            return Ok(Output::Path { color, wins });
        }
        s.parse().map(Output::Value).map_err(|_| format!("bad output {s:?}"))
    }
}

/// A bounded-memory pairwise protocol.
///
/// Implementations must be pure: the same pair of states always yields the
/// same successor pair. The engine relies on this for reproducible runs and
/// the exhaustive verifier relies on it to build a finite transition graph.
pub trait Protocol: Send + Sync {
    type State: Clone + Eq + Hash + fmt::Debug + Send + Sync;

    fn name(&self) -> String;

    /// The symmetric function this protocol is meant to compute.
    fn function(&self) -> FunctionId;

    /// Declared per-agent memory in bits.
    fn budget_bits(&self) -> u32;

    fn init(&self, color: Color) -> Result<Self::State, ProtocolError>;

    fn transition(
        &self,
        initiator: &Self::State,
        responder: &Self::State,
    ) -> Result<(Self::State, Self::State), ProtocolError>;

    fn output(&self, state: &Self::State) -> Output;

    /// Exact certificate that no output can change any more. Protocols
    /// without one rely on the engine's confirmation window.
    fn quiescent(&self, _states: &[Self::State]) -> Option<bool> {
        None
    }

    /// How the declared budget breaks down, reported by the memory audit.
    fn budget_note(&self) -> Option<String> {
        None
    }
}

pub(crate) fn bits_for(values: u64) -> u32 {
    if values <= 1 {
        0
    } else {
        64 - (values - 1).leading_zeros()
    }
}

/// Every protocol reachable from a CLI selection string.
#[derive(Debug, Clone)]
pub enum AnyProtocol {
    Or(OrProtocol),
    Lsb(LsbCounterProtocol),
    Threshold(ThresholdProtocol),
    Bit(BitProtocol),
    Estimate(EstimateProtocol),
    Gate(GateProtocol),
    Circuit(CompiledCircuit),
    Plurality(PluralityProtocol),
}

/// Runs `$body` with `$p` bound to the concrete protocol inside an
/// [`AnyProtocol`].
#[macro_export]
macro_rules! with_protocol {
    ($any:expr, $p:ident => $body:expr) => {
        match $any {
            $crate::protocols::AnyProtocol::Or($p) => $body,
            $crate::protocols::AnyProtocol::Lsb($p) => $body,
            $crate::protocols::AnyProtocol::Threshold($p) => $body,
            $crate::protocols::AnyProtocol::Bit($p) => $body,
            $crate::protocols::AnyProtocol::Estimate($p) => $body,
            $crate::protocols::AnyProtocol::Gate($p) => $body,
            $crate::protocols::AnyProtocol::Circuit($p) => $body,
            $crate::protocols::AnyProtocol::Plurality($p) => $body,
        }
    };
}

impl AnyProtocol {
    pub fn name(&self) -> String {
        with_protocol!(self, p => p.name())
    }

    pub fn function(&self) -> FunctionId {
        with_protocol!(self, p => p.function())
    }

    pub fn budget_bits(&self) -> u32 {
        with_protocol!(self, p => p.budget_bits())
    }

    /// Number of distinct input colors the protocol accepts.
    pub fn arity(&self) -> u32 {
        match self {
            AnyProtocol::Circuit(c) => c.circuit().num_colors(),
            AnyProtocol::Plurality(p) => p.colors(),
            _ => 2,
        }
    }

    /// Parses a selection string: `or`, `lsb:c`, `threshold:a:b[:c]`,
    /// `bit:j[:nmax]`, `estimate[:nmax]`, `max-gate`, `min-gate`,
    /// `plurality:k`, `circuit:<path>` or `circuit:(max 0 1)`.
    pub fn parse(spec: &str) -> Result<Self, ProtocolError> {
        let parse_err = || ProtocolError::Parse(spec.to_string());
        let num = |s: &str| s.trim().parse::<u64>().map_err(|_| parse_err());
        let (head, rest) = match spec.split_once(':') {
            Some((h, r)) => (h.trim(), Some(r)),
            None => (spec.trim(), None),
        };
        let args: Vec<&str> = rest.map(|r| r.split(':').collect()).unwrap_or_default();
        match (head, args.as_slice()) {
            ("or", []) => Ok(AnyProtocol::Or(OrProtocol)),
            ("lsb" | "parity", [c]) => Ok(AnyProtocol::Lsb(LsbCounterProtocol::new(num(c)? as u32)?)),
            ("parity", []) => Ok(AnyProtocol::Lsb(LsbCounterProtocol::new(1)?)),
            ("threshold", [a, b]) => Ok(AnyProtocol::Threshold(ThresholdProtocol::with_min_width(num(a)?, num(b)?)?)),
            ("threshold", [a, b, c]) => {
                Ok(AnyProtocol::Threshold(ThresholdProtocol::new(num(a)?, num(b)?, num(c)? as u32)?))
            }
            ("bit", [j]) => Ok(AnyProtocol::Bit(BitProtocol::new(num(j)? as u32, DEFAULT_N_MAX)?)),
            ("bit", [j, nmax]) => Ok(AnyProtocol::Bit(BitProtocol::new(num(j)? as u32, num(nmax)?)?)),
            ("estimate", []) => Ok(AnyProtocol::Estimate(EstimateProtocol::new(DEFAULT_N_MAX)?)),
            ("estimate", [nmax]) => Ok(AnyProtocol::Estimate(EstimateProtocol::new(num(nmax)?)?)),
            ("max-gate" | "max", []) => Ok(AnyProtocol::Gate(GateProtocol::new(GateKind::Max))),
            ("min-gate" | "min", []) => Ok(AnyProtocol::Gate(GateProtocol::new(GateKind::Min))),
            ("plurality", [k]) => Ok(AnyProtocol::Plurality(PluralityProtocol::new(num(k)? as u32)?)),
            ("circuit", _) => {
                let src = rest.ok_or_else(parse_err)?.trim();
                let text = if src.starts_with('(') {
                    src.to_string()
                } else {
                    std::fs::read_to_string(src)
                        .map_err(|e| ProtocolError::InvalidParameters(format!("circuit file {src}: {e}")))?
                };
                let circuit: ComparisonCircuit =
                    text.parse().map_err(|e| ProtocolError::InvalidParameters(format!("{e}")))?;
                Ok(AnyProtocol::Circuit(CompiledCircuit::new(Arc::new(circuit))?))
            }
            _ => Err(parse_err()),
        }
    }
}

impl FromStr for AnyProtocol {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AnyProtocol::parse(s)
    }
}

/// Level budget used when a selection string omits `nmax`.
pub const DEFAULT_N_MAX: u64 = 64;
