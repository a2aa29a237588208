use super::{bits_for, Color, Output, Protocol, ProtocolError};
use crate::oracle::FunctionId;

/// Active/passive token with a binary-level counter, shared by the
/// per-bit protocol and the count estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Token {
    color: bool,
    active: bool,
    level: u8,
}

const PASSIVE: Token = Token { color: false, active: false, level: 0 };

fn levels_for(n_max: u64) -> Result<u32, ProtocolError> {
    if n_max < 2 {
        return Err(ProtocolError::InvalidParameters(format!("n_max must be >= 2, got {n_max}")));
    }
    let levels = bits_for(n_max) + 1;
    if levels > u8::MAX as u32 {
        return Err(ProtocolError::InvalidParameters(format!("n_max {n_max} too large")));
    }
    Ok(levels)
}

/// One interaction of the level dynamics. Returns the successor tokens and
/// whether the two agents exchanged their full states.
fn advance(levels: u32, x: Token, y: Token) -> Result<(Token, Token, bool), ProtocolError> {
    if x.active && y.active && x.level == y.level {
        let l = x.level;
        if x.color && y.color {
            let up = u32::from(l) + 1;
            if up >= levels {
                return Err(ProtocolError::LevelOverflow { level: up, levels });
            }
            return Ok((
                Token { color: false, active: true, level: l },
                Token { color: true, active: true, level: l + 1 },
                false,
            ));
        }
        return Ok((Token { color: x.color ^ y.color, active: true, level: l }, PASSIVE, false));
    }
    if !x.active && !y.active {
        return Ok((x, y, false));
    }
    Ok((y, x, true))
}

fn token_for(protocol: &str, color: Color) -> Result<Token, ProtocolError> {
    match color {
        0 => Ok(Token { color: true, active: true, level: 0 }),
        1 => Ok(PASSIVE),
        _ => Err(ProtocolError::InvalidColor { protocol: protocol.to_string(), color }),
    }
}

/// Active levels are pairwise distinct, so no two actives will interact again.
fn levels_settled<'a>(tokens: impl Iterator<Item = &'a Token>) -> bool {
    let mut seen = 0u128;
    for t in tokens.filter(|t| t.active) {
        let bit = 1u128 << t.level;
        if seen & bit != 0 {
            return false;
        }
        seen |= bit;
    }
    true
}

/// Computes bit `j` of the red count.
///
/// Red agents start as active tokens of color 1 at level 0. Two active
/// tokens at the same level either carry (both 1: one moves up a level) or
/// merge (one turns passive). Every agent keeps an output register that it
/// overwrites with the color of any level-`j` token it meets.
#[derive(Debug, Clone, Copy)]
pub struct BitProtocol {
    bit: u32,
    n_max: u64,
    levels: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitState {
    pub color: bool,
    pub active: bool,
    pub level: u8,
    pub out: bool,
}

impl BitState {
    fn token(&self) -> Token {
        Token { color: self.color, active: self.active, level: self.level }
    }

    fn with_token(t: Token, out: bool) -> Self {
        Self { color: t.color, active: t.active, level: t.level, out }
    }
}

impl BitProtocol {
    pub fn new(bit: u32, n_max: u64) -> Result<Self, ProtocolError> {
        let levels = levels_for(n_max)?;
        if bit >= levels {
            return Err(ProtocolError::InvalidParameters(format!(
                "bit index {bit} out of range for n_max {n_max} ({levels} levels)"
            )));
        }
        Ok(Self { bit, n_max, levels })
    }

    pub fn bit(&self) -> u32 {
        self.bit
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    fn observed(&self, t: &Token) -> Option<bool> {
        (t.active && u32::from(t.level) == self.bit).then_some(t.color)
    }
}

impl Protocol for BitProtocol {
    type State = BitState;

    fn name(&self) -> String {
        format!("bit:{}:{}", self.bit, self.n_max)
    }

    fn function(&self) -> FunctionId {
        FunctionId::Bit { index: self.bit }
    }

    fn budget_bits(&self) -> u32 {
        bits_for(u64::from(self.levels)) + 3
    }

    fn budget_note(&self) -> Option<String> {
        Some(format!(
            "+1 output register over the color/status/level tuple ({} bits)",
            bits_for(u64::from(self.levels)) + 2
        ))
    }

    fn init(&self, color: Color) -> Result<BitState, ProtocolError> {
        let t = token_for(&self.name(), color)?;
        let out = self.observed(&t).unwrap_or(false);
        Ok(BitState::with_token(t, out))
    }

    fn transition(&self, x: &BitState, y: &BitState) -> Result<(BitState, BitState), ProtocolError> {
        let (tx, ty, swapped) = advance(self.levels, x.token(), y.token())?;
        let (mut ox, mut oy) = if swapped { (y.out, x.out) } else { (x.out, y.out) };
        if let Some(c) = self.observed(&tx).or(self.observed(&ty)) {
            ox = c;
            oy = c;
        }
        Ok((BitState::with_token(tx, ox), BitState::with_token(ty, oy)))
    }

    fn output(&self, state: &BitState) -> Output {
        Output::Value(u64::from(state.out))
    }

    fn quiescent(&self, states: &[BitState]) -> Option<bool> {
        let tokens: Vec<Token> = states.iter().map(BitState::token).collect();
        if !levels_settled(tokens.iter()) {
            return Some(false);
        }
        let answer = tokens.iter().find_map(|t| self.observed(t)).unwrap_or(false);
        Some(states.iter().all(|s| s.out == answer))
    }
}

/// Estimates the red count within a factor of two: every agent gossips the
/// highest level occupied by any token it has heard of, which settles at
/// `floor(log2 r)`.
#[derive(Debug, Clone, Copy)]
pub struct EstimateProtocol {
    n_max: u64,
    levels: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EstimateState {
    pub color: bool,
    pub active: bool,
    pub level: u8,
    /// `None` until some token has been observed.
    pub est: Option<u8>,
}

impl EstimateState {
    fn token(&self) -> Token {
        Token { color: self.color, active: self.active, level: self.level }
    }
}

impl EstimateProtocol {
    pub fn new(n_max: u64) -> Result<Self, ProtocolError> {
        Ok(Self { n_max, levels: levels_for(n_max)? })
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// The count estimate `2^est` an agent output stands for.
    pub fn estimate(output: &Output) -> Option<u64> {
        match output {
            Output::Value(e) => Some(1u64 << e),
            _ => None,
        }
    }
}

impl Protocol for EstimateProtocol {
    type State = EstimateState;

    fn name(&self) -> String {
        format!("estimate:{}", self.n_max)
    }

    fn function(&self) -> FunctionId {
        FunctionId::Estimate
    }

    fn budget_bits(&self) -> u32 {
        2 + bits_for(u64::from(self.levels)) + bits_for(u64::from(self.levels) + 1)
    }

    fn init(&self, color: Color) -> Result<EstimateState, ProtocolError> {
        let t = token_for(&self.name(), color)?;
        Ok(EstimateState { color: t.color, active: t.active, level: t.level, est: t.active.then_some(t.level) })
    }

    fn transition(
        &self,
        x: &EstimateState,
        y: &EstimateState,
    ) -> Result<(EstimateState, EstimateState), ProtocolError> {
        let (tx, ty, _) = advance(self.levels, x.token(), y.token())?;
        let est =
            [x.est, y.est, tx.active.then_some(tx.level), ty.active.then_some(ty.level)].into_iter().max().flatten();
        let wrap = |t: Token| EstimateState { color: t.color, active: t.active, level: t.level, est };
        Ok((wrap(tx), wrap(ty)))
    }

    fn output(&self, state: &EstimateState) -> Output {
        match state.est {
            Some(e) => Output::Value(u64::from(e)),
            None => Output::Empty,
        }
    }

    fn quiescent(&self, states: &[EstimateState]) -> Option<bool> {
        let tokens: Vec<Token> = states.iter().map(EstimateState::token).collect();
        if !levels_settled(tokens.iter()) {
            return Some(false);
        }
        let top = tokens.iter().filter(|t| t.active).map(|t| t.level).max();
        Some(states.iter().all(|s| s.est == top))
    }
}
