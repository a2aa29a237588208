use std::collections::HashMap;
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use super::value::{color_counts, oracle_value, OracleError};
use crate::engine::Graph;
use crate::protocols::{Color, Protocol, ProtocolError};

/// Default cap on explored configurations.
pub const DEFAULT_GUARD: usize = 10_000_000;

/// Reachable configurations of one instance and the activation arcs
/// between them (self-loops omitted). Agent states are interned: a
/// configuration is a vector of indices into `states`.
#[derive(Debug, Clone)]
pub struct ConfigGraph<S> {
    pub states: Vec<S>,
    pub configs: Vec<Box<[u32]>>,
    pub arcs: Vec<Vec<u32>>,
}

#[derive(Debug)]
pub enum Exploration<S> {
    Complete(ConfigGraph<S>),
    GuardExceeded { explored: usize },
}

struct Interner<S> {
    states: Vec<S>,
    ids: HashMap<S, u32>,
}

impl<S: Clone + Eq + std::hash::Hash> Interner<S> {
    fn id(&mut self, s: S) -> u32 {
        if let Some(&id) = self.ids.get(&s) {
            return id;
        }
        let id = self.states.len() as u32;
        self.states.push(s.clone());
        self.ids.insert(s, id);
        id
    }
}

/// Breadth-first enumeration of every configuration reachable from the
/// initial one under activations of both orientations of every edge.
pub fn explore<P: Protocol>(
    protocol: &P,
    graph: &Graph,
    input: &[Color],
    guard: usize,
) -> Result<Exploration<P::State>, ProtocolError> {
    let mut interner = Interner { states: Vec::new(), ids: HashMap::new() };
    let mut init = Vec::with_capacity(input.len());
    for &c in input {
        init.push(interner.id(protocol.init(c)?));
    }
    let init: Box<[u32]> = init.into();
    let pairs: Vec<(usize, usize)> =
        graph.edges().iter().flat_map(|&(u, v)| [(u as usize, v as usize), (v as usize, u as usize)]).collect();
    let mut rules: HashMap<(u32, u32), (u32, u32)> = HashMap::new();
    let mut index: HashMap<Box<[u32]>, u32> = HashMap::new();
    let mut configs = vec![init.clone()];
    let mut arcs: Vec<Vec<u32>> = Vec::new();
    index.insert(init, 0);
    let mut next = 0;
    while next < configs.len() {
        let mut succ = Vec::with_capacity(pairs.len());
        for &(u, v) in &pairs {
            let (a, b) = (configs[next][u], configs[next][v]);
            let (x, y) = match rules.get(&(a, b)) {
                Some(&xy) => xy,
                None => {
                    let (sx, sy) = protocol.transition(&interner.states[a as usize], &interner.states[b as usize])?;
                    let xy = (interner.id(sx), interner.id(sy));
                    rules.insert((a, b), xy);
                    xy
                }
            };
            if (x, y) == (a, b) {
                continue;
            }
            let mut to = configs[next].clone();
            to[u] = x;
            to[v] = y;
            let id = match index.get(&to) {
                Some(&id) => id,
                None => {
                    if configs.len() >= guard {
                        return Ok(Exploration::GuardExceeded { explored: configs.len() });
                    }
                    let id = configs.len() as u32;
                    index.insert(to.clone(), id);
                    configs.push(to);
                    id
                }
            };
            succ.push(id);
        }
        succ.sort_unstable();
        succ.dedup();
        arcs.push(succ);
        next += 1;
    }
    Ok(Exploration::Complete(ConfigGraph { states: interner.states, configs, arcs }))
}

impl<S> ConfigGraph<S> {
    /// Configurations lying in terminal strongly connected components,
    /// i.e. components no arc leaves.
    pub fn terminal_configs(&self) -> Vec<usize> {
        let mut g: DiGraph<(), ()> = DiGraph::with_capacity(self.configs.len(), 0);
        for _ in 0..self.configs.len() {
            g.add_node(());
        }
        for (from, succ) in self.arcs.iter().enumerate() {
            for &to in succ {
                g.add_edge(NodeIndex::new(from), NodeIndex::new(to as usize), ());
            }
        }
        let sccs = tarjan_scc(&g);
        let mut component = vec![0usize; self.configs.len()];
        for (c, members) in sccs.iter().enumerate() {
            for m in members {
                component[m.index()] = c;
            }
        }
        let mut terminal = vec![true; sccs.len()];
        for (from, succ) in self.arcs.iter().enumerate() {
            if succ.iter().any(|&to| component[to as usize] != component[from]) {
                terminal[component[from]] = false;
            }
        }
        (0..self.configs.len()).filter(|&i| terminal[component[i]]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skipped => "SKIPPED",
        })
    }
}

/// Outcome of an exhaustive check of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRecord {
    pub schema_version: u32,
    pub protocol: String,
    pub graph: String,
    pub input: Vec<Color>,
    pub verdict: Verdict,
    pub states_explored: usize,
    pub value: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Decides whether every fair schedule from `input` stabilizes to the
/// oracle value: PASS iff every configuration in every terminal strongly
/// connected component of the reachable configuration graph is correct.
pub fn verify_exhaustive<P: Protocol>(
    protocol: &P,
    graph: &Graph,
    input: &[Color],
    guard: usize,
) -> Result<VerifyRecord, OracleError> {
    let function = protocol.function();
    let expected = oracle_value(&function, &color_counts(input, function.arity()))?;
    let mut record = VerifyRecord {
        schema_version: crate::SCHEMA_VERSION,
        protocol: protocol.name(),
        graph: graph.tag().to_string(),
        input: input.to_vec(),
        verdict: Verdict::Pass,
        states_explored: 0,
        value: expected.to_json(),
        detail: None,
    };
    let cg = match explore(protocol, graph, input, guard) {
        Err(e) => {
            record.verdict = Verdict::Fail;
            record.detail = Some(e.to_string());
            return Ok(record);
        }
        Ok(Exploration::GuardExceeded { explored }) => {
            record.verdict = Verdict::Skipped;
            record.states_explored = explored;
            record.detail = Some(format!("more than {guard} configurations"));
            return Ok(record);
        }
        Ok(Exploration::Complete(cg)) => cg,
    };
    record.states_explored = cg.configs.len();
    let state_outputs: Vec<_> = cg.states.iter().map(|s| protocol.output(s)).collect();
    for i in cg.terminal_configs() {
        let outputs: Vec<_> = cg.configs[i].iter().map(|&s| state_outputs[s as usize]).collect();
        if !expected.matches(&outputs) {
            record.verdict = Verdict::Fail;
            let shown: Vec<String> = outputs.iter().map(ToString::to_string).collect();
            record.detail = Some(format!("terminal configuration with outputs [{}]", shown.join(" ")));
            break;
        }
    }
    Ok(record)
}

/// Every input over `arity` colors for `n` nodes, in lexicographic order.
pub fn all_inputs(n: usize, arity: u32) -> Vec<Vec<Color>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..arity).map(move |c| {
                    let mut p = prefix.clone();
                    p.push(c);
                    p
                })
            })
            .collect();
    }
    out
}
