use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::graph::Graph;

/// One scheduled interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub initiator: u32,
    pub responder: u32,
    /// Continuous clock after this activation.
    pub time: f64,
    /// 1-based activation index.
    pub step: u64,
}

/// Draws the next activation. Randomness is consumed in a fixed order:
/// edge index, then orientation, then the holding time.
///
/// Every edge rings at rate `rate`, so the superposed process picks a
/// uniform edge and waits an exponential time with rate `rate * |E|`.
pub fn schedule_next<R: Rng + ?Sized>(graph: &Graph, rate: f64, clock: f64, step: u64, rng: &mut R) -> Activation {
    let edges = graph.edges();
    let (u, v) = edges[rng.random_range(0..edges.len())];
    let (initiator, responder) = if rng.random_bool(0.5) { (u, v) } else { (v, u) };
    let hold = Exp::new(rate * edges.len() as f64).expect("rate validated positive").sample(rng);
    Activation { initiator, responder, time: clock + hold, step: step + 1 }
}

/// How the graph changes between activations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewirePolicy {
    #[default]
    None,
    /// One degree-preserving double-edge swap every `period` activations,
    /// rolled back when it disconnects the graph.
    EdgeSwap { period: u64 },
}

impl FromStr for RewirePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "none" => Ok(RewirePolicy::None),
            other => {
                let period = other
                    .strip_prefix("swap:")
                    .and_then(|p| p.parse::<u64>().ok())
                    .filter(|&p| p > 0)
                    .ok_or_else(|| format!("rewire policy must be none or swap:<period>, got {s:?}"))?;
                Ok(RewirePolicy::EdgeSwap { period })
            }
        }
    }
}

impl fmt::Display for RewirePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewirePolicy::None => f.write_str("none"),
            RewirePolicy::EdgeSwap { period } => write!(f, "swap:{period}"),
        }
    }
}

/// Swap candidates tried per rewiring event before giving up.
const SWAP_ATTEMPTS: usize = 8;

/// Applies `policy` after activation `step`. Returns whether the edge set
/// changed. The graph stays connected and keeps every degree.
pub fn rewire<R: Rng + ?Sized>(graph: &mut Graph, policy: RewirePolicy, step: u64, rng: &mut R) -> bool {
    match policy {
        RewirePolicy::None => false,
        RewirePolicy::EdgeSwap { period } => step.is_multiple_of(period) && edge_swap(graph, rng),
    }
}

/// One double-edge swap `{a,b},{c,d} -> {a,d},{c,b}` (or `{a,c},{b,d}`).
/// Draw order per attempt: first edge, second edge, pairing.
pub fn edge_swap<R: Rng + ?Sized>(graph: &mut Graph, rng: &mut R) -> bool {
    let m = graph.num_edges();
    if m < 2 {
        return false;
    }
    for _ in 0..SWAP_ATTEMPTS {
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        let straight = rng.random_bool(0.5);
        if i == j {
            continue;
        }
        let (a, b) = graph.edges()[i];
        let (c, d) = graph.edges()[j];
        let (e1, e2) = if straight { ((a, d), (c, b)) } else { ((a, c), (b, d)) };
        if e1.0 == e1.1 || e2.0 == e2.1 || graph.has_edge(e1.0, e1.1) || graph.has_edge(e2.0, e2.1) {
            continue;
        }
        if (e1.0.min(e1.1), e1.0.max(e1.1)) == (e2.0.min(e2.1), e2.0.max(e2.1)) {
            continue;
        }
        graph.replace_edge(i, e1.0, e1.1);
        graph.replace_edge(j, e2.0, e2.1);
        if graph.is_connected() {
            return true;
        }
        graph.replace_edge(j, c, d);
        graph.replace_edge(i, a, b);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_edge_is_always_chosen() {
        let g = Graph::path(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut clock = 0.0;
        for step in 0..1000 {
            let a = schedule_next(&g, 1.0, clock, step, &mut rng);
            assert_eq!(a.initiator + a.responder, 1);
            assert!(a.time > clock);
            assert_eq!(a.step, step + 1);
            clock = a.time;
        }
        assert!((clock / 1000.0 - 1.0).abs() < 0.15);
    }

    #[test]
    fn swaps_preserve_degrees_and_connectivity() {
        let mut g = Graph::cycle(8).unwrap();
        let mut extra = g.edges().to_vec();
        extra.extend([(0, 4), (2, 6)]);
        g = Graph::new(8, extra, "cycle+chords").unwrap();
        let degrees: Vec<usize> = (0..8).map(|v| g.degree(v)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut changed = 0;
        for step in 1..=500 {
            changed += usize::from(rewire(&mut g, RewirePolicy::EdgeSwap { period: 1 }, step, &mut rng));
            assert!(g.is_connected());
            assert_eq!((0..8).map(|v| g.degree(v)).collect::<Vec<_>>(), degrees);
            assert!(Graph::new(8, g.edges().to_vec(), "check").is_ok());
        }
        assert!(changed > 0);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("none".parse::<RewirePolicy>().unwrap(), RewirePolicy::None);
        assert_eq!("swap:6".parse::<RewirePolicy>().unwrap(), RewirePolicy::EdgeSwap { period: 6 });
        assert!("swap:0".parse::<RewirePolicy>().is_err());
        assert!("shuffle".parse::<RewirePolicy>().is_err());
        let mut g = Graph::cycle(5).unwrap();
        let before = g.clone();
        assert!(!rewire(&mut g, RewirePolicy::None, 1, &mut ChaCha8Rng::seed_from_u64(0)));
        assert_eq!(g, before);
    }
}
