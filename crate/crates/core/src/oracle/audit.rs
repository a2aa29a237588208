use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::exhaustive::{all_inputs, explore, Exploration};
use super::value::{color_counts, oracle_value, FunctionId};
use crate::engine::{run_observed, EngineError, Graph, RunLimits, RunOptions};
use crate::protocols::{bits_for, Color, Protocol, ProtocolError};

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("exhaustive enumeration on {graph}: {source}")]
    Exhaustive { graph: String, source: ProtocolError },
    #[error("sampled run on {graph}: {source}")]
    Sampled { graph: String, source: EngineError },
}

/// Instances whose reachable states are collected.
#[derive(Debug, Clone)]
pub struct AuditPlan {
    /// Enumerated exhaustively (skipped past `guard` configurations).
    pub exhaustive: Vec<(Graph, Vec<Color>)>,
    /// Simulated once each with the given seed.
    pub sampled: Vec<(Graph, Vec<Color>, u64)>,
    pub max_steps: u64,
    pub guard: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub protocol: String,
    pub declared_bits: u32,
    pub distinct_states: usize,
    pub measured_bits: u32,
    pub within_budget: bool,
    pub exhaustive_instances: usize,
    pub skipped_instances: usize,
    pub sampled_runs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// A few observed states, listed when the budget is exceeded.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub offending: Vec<String>,
}

/// Collects every agent state reachable in the plan's instances and
/// compares `ceil(log2 count)` with the declared budget.
pub fn audit_memory<P: Protocol>(protocol: &P, plan: &AuditPlan) -> Result<AuditReport, AuditError> {
    let mut seen: HashSet<P::State> = HashSet::new();
    let (mut exhaustive, mut skipped) = (0, 0);
    let enumerated: Vec<Exploration<P::State>> = plan
        .exhaustive
        .par_iter()
        .map(|(graph, input)| {
            explore(protocol, graph, input, plan.guard)
                .map_err(|source| AuditError::Exhaustive { graph: graph.tag().to_string(), source })
        })
        .collect::<Result<_, _>>()?;
    for e in enumerated {
        match e {
            Exploration::Complete(cg) => {
                exhaustive += 1;
                seen.extend(cg.states);
            }
            Exploration::GuardExceeded { .. } => skipped += 1,
        }
    }
    for (graph, input, seed) in &plan.sampled {
        let opts = RunOptions {
            limits: RunLimits { max_steps: plan.max_steps, confirmation_window: None },
            ..RunOptions::seeded(*seed)
        };
        for &c in input {
            seen.insert(protocol.init(c).map_err(|e| AuditError::Sampled {
                graph: graph.tag().to_string(),
                source: EngineError::Protocol { step: 0, source: e },
            })?);
        }
        run_observed(protocol, graph, input, &opts, |act, states| {
            seen.insert(states[act.initiator as usize].clone());
            seen.insert(states[act.responder as usize].clone());
        })
        .map_err(|source| AuditError::Sampled { graph: graph.tag().to_string(), source })?;
    }
    let measured_bits = bits_for(seen.len() as u64);
    let declared_bits = protocol.budget_bits();
    let within_budget = measured_bits <= declared_bits;
    let offending = if within_budget { Vec::new() } else { seen.iter().take(16).map(|s| format!("{s:?}")).collect() };
    Ok(AuditReport {
        schema_version: crate::SCHEMA_VERSION,
        protocol: protocol.name(),
        declared_bits,
        distinct_states: seen.len(),
        measured_bits,
        within_budget,
        exhaustive_instances: exhaustive,
        skipped_instances: skipped,
        sampled_runs: plan.sampled.len(),
        note: protocol.budget_note(),
        offending,
    })
}

/// Random counts for `n` agents over `arity` colors. For plurality the
/// largest count is made unique.
fn random_counts(function: &FunctionId, n: usize, arity: u32, rng: &mut impl Rng) -> Vec<Color> {
    loop {
        let input: Vec<Color> = (0..n).map(|_| rng.random_range(0..arity)).collect();
        if oracle_value(function, &color_counts(&input, arity as usize)).is_ok() {
            return input;
        }
    }
}

/// Default audit instances: every input on `path:3`, `cycle:4` and
/// `complete:4` where that is at most 256 inputs, plus seeded runs on
/// complete, cycle and G(n, 0.4) graphs up to `max_n` agents, including
/// all-red populations that drive binary counters to their top level.
pub fn default_plan(function: &FunctionId, max_n: usize, seed: u64) -> AuditPlan {
    let arity = function.arity() as u32;
    let mut exhaustive = Vec::new();
    for graph in [Graph::path(3), Graph::cycle(4), Graph::complete(4)].into_iter().flatten() {
        let n = graph.n();
        if (arity as u64).pow(n as u32) <= 256 {
            for input in all_inputs(n, arity) {
                if oracle_value(function, &color_counts(&input, arity as usize)).is_ok() {
                    exhaustive.push((graph.clone(), input));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled = Vec::new();
    let mut n = 8;
    while n <= max_n.max(8) {
        let graphs = [Graph::complete(n), Graph::cycle(n), Graph::gnp(n, 0.4, &mut rng)];
        for graph in graphs.into_iter().flatten() {
            for _ in 0..3 {
                let input = random_counts(function, n, arity, &mut rng);
                sampled.push((graph.clone(), input, rng.random()));
            }
            if arity == 2 {
                sampled.push((graph.clone(), vec![0; n], rng.random()));
            }
        }
        n *= 2;
    }
    AuditPlan { exhaustive, sampled, max_steps: 2_000_000, guard: 200_000 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::LsbCounterProtocol;

    #[test]
    fn lsb2_fills_its_budget() {
        let p = LsbCounterProtocol::new(2).unwrap();
        let report = audit_memory(&p, &default_plan(&p.function(), 16, 1)).unwrap();
        assert_eq!(report.declared_bits, 3);
        assert_eq!(report.distinct_states, 8);
        assert!(report.within_budget);
    }
}
