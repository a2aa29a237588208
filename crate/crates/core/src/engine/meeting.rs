use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::Graph;
use super::schedule::schedule_next;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetingStats {
    pub trials: u64,
    pub mean_steps: f64,
    pub stderr_steps: f64,
    pub mean_time: f64,
    pub stderr_time: f64,
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Activations (and continuous time) until two tokens share an edge
/// activation. Tokens start on distinct uniform nodes and follow the
/// swap semantics of the protocols: a token moves across every activated
/// edge touching its host.
pub fn measure_meeting_time(graph: &Graph, trials: u64, seed: u64, rate: f64) -> MeetingStats {
    assert!(trials >= 1, "need at least one trial");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = graph.n() as u32;
    let mut steps = Vec::with_capacity(trials as usize);
    let mut times = Vec::with_capacity(trials as usize);
    for _ in 0..trials {
        let mut a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let (mut clock, mut step) = (0.0, 0u64);
        loop {
            let act = schedule_next(graph, rate, clock, step, &mut rng);
            clock = act.time;
            step = act.step;
            let (u, v) = (act.initiator, act.responder);
            if (u == a && v == b) || (u == b && v == a) {
                break;
            }
            for t in [&mut a, &mut b] {
                if *t == u {
                    *t = v;
                } else if *t == v {
                    *t = u;
                }
            }
        }
        steps.push(step as f64);
        times.push(clock);
    }
    let (mean_steps, stderr_steps) = mean_stderr(&steps);
    let (mean_time, stderr_time) = mean_stderr(&times);
    MeetingStats { trials, mean_steps, stderr_steps, mean_time, stderr_time }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacent_pair_meets_immediately() {
        let s = measure_meeting_time(&Graph::path(2).unwrap(), 50, 1, 1.0);
        assert_eq!(s.mean_steps, 1.0);
        assert_eq!(s.stderr_steps, 0.0);
    }

    #[test]
    fn complete_meets_faster_than_cycle() {
        let c = measure_meeting_time(&Graph::cycle(16).unwrap(), 400, 2, 1.0);
        let k = measure_meeting_time(&Graph::complete(16).unwrap(), 400, 2, 1.0);
        assert!(k.mean_time < c.mean_time, "{k:?} vs {c:?}");
    }
}
