use super::{bits_for, Color, Output, Protocol, ProtocolError};
use crate::oracle::FunctionId;

/// Rational threshold `r/(n-r) > a/b` by signed cancellation.
///
/// Red agents start strong with `+b`, the others strong with `-a`. Opposite
/// strong counters cancel into the initiator, weak agents mirror the sign of
/// the strong agents they meet and carry the strong token along. The sum of
/// strong counters stays `b*r - a*(n-r)`.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdProtocol {
    a: u64,
    b: u64,
    width: u32,
}

/// Weak agents only keep the sign of the counter they last mirrored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThresholdState {
    pub counter: i32,
    pub strong: bool,
}

impl ThresholdState {
    fn strong(counter: i32) -> Self {
        Self { counter, strong: true }
    }

    fn weak(counter: i32) -> Self {
        Self { counter: counter.signum(), strong: false }
    }
}

impl ThresholdProtocol {
    pub fn new(a: u64, b: u64, width: u32) -> Result<Self, ProtocolError> {
        if width == 0 || width > 30 {
            return Err(ProtocolError::InvalidParameters(format!(
                "threshold counter width must be in 1..=30, got {width}"
            )));
        }
        let cap = 1u64 << width;
        if a == 0 || b == 0 || a > cap || b > cap {
            return Err(ProtocolError::InvalidParameters(format!(
                "threshold needs 1 <= a,b <= 2^{width}, got a={a} b={b}"
            )));
        }
        Ok(Self { a, b, width })
    }

    /// Smallest width `c >= 1` with `a, b <= 2^c`.
    pub fn with_min_width(a: u64, b: u64) -> Result<Self, ProtocolError> {
        let width = bits_for(a.max(b)).max(1);
        Self::new(a, b, width)
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Conserved quantity: sum of strong counters.
    pub fn strong_sum(states: &[ThresholdState]) -> i64 {
        states.iter().filter(|s| s.strong).map(|s| i64::from(s.counter)).sum()
    }

    /// Weak `w` meets strong `s`: the weak agent takes over the strong
    /// token, the former strong agent keeps the sign.
    fn hand_over(s: &ThresholdState) -> (ThresholdState, ThresholdState) {
        (ThresholdState::strong(s.counter), ThresholdState::weak(s.counter))
    }
}

impl Protocol for ThresholdProtocol {
    type State = ThresholdState;

    fn name(&self) -> String {
        format!("threshold:{}:{}:{}", self.a, self.b, self.width)
    }

    fn function(&self) -> FunctionId {
        FunctionId::Threshold { a: self.a, b: self.b }
    }

    fn budget_bits(&self) -> u32 {
        self.width + 2
    }

    fn init(&self, color: Color) -> Result<ThresholdState, ProtocolError> {
        match color {
            0 => Ok(ThresholdState::strong(self.b as i32)),
            1 => Ok(ThresholdState::strong(-(self.a as i32))),
            _ => Err(ProtocolError::InvalidColor { protocol: self.name(), color }),
        }
    }

    fn transition(
        &self,
        x: &ThresholdState,
        y: &ThresholdState,
    ) -> Result<(ThresholdState, ThresholdState), ProtocolError> {
        Ok(match (x.strong, y.strong) {
            (true, true) => {
                let (c1, c2) = (x.counter, y.counter);
                if c1 != 0 && c2 != 0 && c1.signum() != c2.signum() {
                    if c1.abs() == c2.abs() {
                        (ThresholdState::weak(0), ThresholdState::strong(0))
                    } else {
                        (ThresholdState::strong(c1 + c2), ThresholdState::weak(0))
                    }
                } else if c1 == 0 && c2 != 0 {
                    // zero-strong acts as weak against a nonzero strong
                    let (s, w) = Self::hand_over(y);
                    (s, w)
                } else if c2 == 0 && c1 != 0 {
                    let (s, w) = Self::hand_over(x);
                    (w, s)
                } else {
                    (*y, *x)
                }
            }
            (false, true) => Self::hand_over(y),
            (true, false) => {
                let (s, w) = Self::hand_over(x);
                (w, s)
            }
            (false, false) => (*y, *x),
        })
    }

    fn output(&self, state: &ThresholdState) -> Output {
        Output::Value(u64::from(state.counter > 0))
    }

    fn quiescent(&self, states: &[ThresholdState]) -> Option<bool> {
        let pos = states.iter().any(|s| s.strong && s.counter > 0);
        let neg = states.iter().any(|s| s.strong && s.counter < 0);
        if pos && neg {
            return Some(false);
        }
        let verdict = Output::Value(u64::from(pos));
        Some(states.iter().all(|s| self.output(s) == verdict))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(c: i32) -> ThresholdState {
        ThresholdState::strong(c)
    }
    fn w(c: i32) -> ThresholdState {
        ThresholdState::weak(c)
    }

    #[test]
    fn unequal_cancellation_goes_to_initiator() {
        let p = ThresholdProtocol::new(2, 1, 1).unwrap();
        assert_eq!(p.transition(&s(1), &s(-2)).unwrap(), (s(-1), w(0)));
        assert_eq!(p.transition(&s(-2), &s(1)).unwrap(), (s(-1), w(0)));
    }

    #[test]
    fn equal_cancellation_leaves_zero_strong() {
        let p = ThresholdProtocol::new(1, 1, 1).unwrap();
        assert_eq!(p.transition(&s(1), &s(-1)).unwrap(), (w(0), s(0)));
    }

    #[test]
    fn weak_takes_over_strong_token() {
        let p = ThresholdProtocol::new(1, 1, 1).unwrap();
        assert_eq!(p.transition(&w(-1), &s(1)).unwrap(), (s(1), w(1)));
        assert_eq!(p.transition(&s(-1), &w(1)).unwrap(), (w(-1), s(-1)));
        // a stale weak sign is refreshed by a zero-strong agent
        assert_eq!(p.transition(&w(1), &s(0)).unwrap(), (s(0), w(0)));
    }

    #[test]
    fn zero_strong_yields_to_nonzero_strong() {
        let p = ThresholdProtocol::new(1, 1, 1).unwrap();
        assert_eq!(p.transition(&s(0), &s(1)).unwrap(), (s(1), w(1)));
        assert_eq!(p.transition(&s(-1), &s(0)).unwrap(), (w(-1), s(-1)));
    }

    #[test]
    fn parameters_are_range_checked() {
        assert!(ThresholdProtocol::new(5, 1, 2).is_err());
        assert!(ThresholdProtocol::new(0, 1, 2).is_err());
        assert!(ThresholdProtocol::new(4, 4, 2).is_ok());
        assert_eq!(ThresholdProtocol::with_min_width(1, 1).unwrap().width(), 1);
        assert_eq!(ThresholdProtocol::with_min_width(5, 3).unwrap().width(), 3);
    }
}
