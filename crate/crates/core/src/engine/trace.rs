use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::schedule::Activation;
use crate::protocols::Output;

/// Activation log of a run plus the outputs it ended with.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub activations: Vec<Activation>,
    pub final_outputs: Vec<Output>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("trace line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

impl Trace {
    /// Writes `step time initiator responder` per activation, then one
    /// `outputs ...` line. Times use the shortest round-tripping form.
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        for a in &self.activations {
            writeln!(w, "{} {:?} {} {}", a.step, a.time, a.initiator, a.responder)?;
        }
        write!(w, "outputs")?;
        for o in &self.final_outputs {
            write!(w, " {o}")?;
        }
        writeln!(w)
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self, TraceError> {
        let mut trace = Trace::default();
        let mut saw_outputs = false;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let bad = |msg: String| TraceError::Malformed { line: i + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if saw_outputs {
                return Err(bad("content after the outputs line".into()));
            }
            if fields[0] == "outputs" {
                trace.final_outputs = fields[1..].iter().map(|f| f.parse()).collect::<Result<_, _>>().map_err(bad)?;
                saw_outputs = true;
                continue;
            }
            let [step, time, initiator, responder] = fields.as_slice() else {
                return Err(bad(format!("expected 4 fields, got {}", fields.len())));
            };
            let num_err = |_| bad(format!("unparsable activation {line:?}"));
            trace.activations.push(Activation {
                step: step.parse().map_err(num_err)?,
                time: time.parse().map_err(|_| bad(format!("unparsable time {time:?}")))?,
                initiator: initiator.parse().map_err(num_err)?,
                responder: responder.parse().map_err(num_err)?,
            });
        }
        if !saw_outputs {
            return Err(TraceError::Malformed { line: 0, msg: "missing outputs line".into() });
        }
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let trace = Trace {
            activations: vec![
                Activation { initiator: 0, responder: 1, time: 0.125, step: 1 },
                Activation { initiator: 2, responder: 1, time: 0.3000000000000001, step: 2 },
            ],
            final_outputs: vec![Output::Value(3), Output::Empty, Output::Path { color: 2, wins: 0b101 }],
        };
        let mut buf = Vec::new();
        trace.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("1 0.125 0 1\n"));
        assert!(text.ends_with("outputs 3 empty 2/101\n"));
        assert_eq!(Trace::read_from(buf.as_slice()).unwrap(), trace);
    }

    #[test]
    fn rejects_malformed() {
        assert!(Trace::read_from("1 0.5 0\noutputs 1".as_bytes()).is_err());
        assert!(Trace::read_from("1 0.5 0 1\n".as_bytes()).is_err());
        assert!(Trace::read_from("outputs x".as_bytes()).is_err());
    }
}
