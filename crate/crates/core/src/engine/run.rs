use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::graph::Graph;
use super::schedule::{rewire, schedule_next, Activation, RewirePolicy};
use super::trace::Trace;
use crate::oracle::{color_counts, oracle_value, Expected, OracleError, Scorer};
use crate::protocols::{Color, Output, Protocol, ProtocolError};

pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("input has {got} colors but the graph has {n} nodes")]
    InputLength { got: usize, n: usize },
    #[error("interaction rate must be positive and finite, got {0}")]
    Rate(f64),
    #[error("protocol fault at step {step}: {source}")]
    Protocol { step: u64, source: ProtocolError },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLimits {
    pub max_steps: u64,
    /// Activations the correct outputs must survive; `None` means
    /// `10 * n * |E|`.
    pub confirmation_window: Option<u64>,
}

impl Default for RunLimits {
    fn default() -> Self {
        Self { max_steps: DEFAULT_MAX_STEPS, confirmation_window: None }
    }
}

impl RunLimits {
    pub fn window_for(&self, graph: &Graph) -> u64 {
        self.confirmation_window.unwrap_or(10 * (graph.n() * graph.num_edges()) as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub seed: u64,
    pub limits: RunLimits,
    /// Per-edge interaction rate.
    pub rate: f64,
    pub rewire: RewirePolicy,
    pub record_trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { seed: 0, limits: RunLimits::default(), rate: 1.0, rewire: RewirePolicy::None, record_trace: false }
    }
}

impl RunOptions {
    pub fn seeded(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Start of the final streak of correct configurations (0 is the
    /// initial configuration).
    pub first_correct_step: Option<u64>,
    pub stabilized: bool,
    /// Stabilization was certified by the protocol's quiescence predicate
    /// rather than by the confirmation window.
    pub quiescent: bool,
    pub confirmation_window: u64,
    pub final_outputs: Vec<Output>,
    pub total_steps: u64,
    pub elapsed_time: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome<S> {
    pub result: RunResult,
    pub expected: Expected,
    pub trace: Option<Trace>,
    pub final_states: Vec<S>,
    pub final_graph: Graph,
}

/// Global state of a run: node-indexed agent states and the activation
/// count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration<S> {
    pub states: Vec<S>,
    pub step: u64,
}

/// Sequential executor of one protocol on one graph.
///
/// All randomness comes from one ChaCha8 stream seeded by the run seed.
/// Per activation it draws the edge, the orientation, the holding time,
/// and then any rewiring due after that activation.
pub struct Simulation<'p, P: Protocol> {
    protocol: &'p P,
    graph: Graph,
    config: Configuration<P::State>,
    clock: f64,
    rate: f64,
    rewire: RewirePolicy,
    rng: ChaCha8Rng,
}

impl<'p, P: Protocol> Simulation<'p, P> {
    pub fn new(
        protocol: &'p P,
        graph: Graph,
        input: &[Color],
        seed: u64,
        rate: f64,
        rewire: RewirePolicy,
    ) -> Result<Self, EngineError> {
        if input.len() != graph.n() {
            return Err(EngineError::InputLength { got: input.len(), n: graph.n() });
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(EngineError::Rate(rate));
        }
        let states = input
            .iter()
            .map(|&c| protocol.init(c))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| EngineError::Protocol { step: 0, source })?;
        Ok(Self {
            protocol,
            graph,
            config: Configuration { states, step: 0 },
            clock: 0.0,
            rate,
            rewire,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn states(&self) -> &[P::State] {
        &self.config.states
    }

    pub fn configuration(&self) -> &Configuration<P::State> {
        &self.config
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn step_count(&self) -> u64 {
        self.config.step
    }

    pub fn rng(&mut self) -> &mut impl Rng {
        &mut self.rng
    }

    /// Schedules one activation and applies the transition rule to it.
    pub fn step(&mut self) -> Result<Activation, EngineError> {
        let act = schedule_next(&self.graph, self.rate, self.clock, self.config.step, &mut self.rng);
        let (u, v) = (act.initiator as usize, act.responder as usize);
        let states = &mut self.config.states;
        let (x, y) = self
            .protocol
            .transition(&states[u], &states[v])
            .map_err(|source| EngineError::Protocol { step: act.step, source })?;
        states[u] = x;
        states[v] = y;
        self.clock = act.time;
        self.config.step = act.step;
        rewire(&mut self.graph, self.rewire, act.step, &mut self.rng);
        Ok(act)
    }

    pub fn into_parts(self) -> (Vec<P::State>, Graph) {
        (self.config.states, self.graph)
    }
}

/// Runs `protocol` until the outputs stabilize at the oracle value or the
/// step limit is reached.
pub fn run<P: Protocol>(
    protocol: &P,
    graph: &Graph,
    input: &[Color],
    options: &RunOptions,
) -> Result<RunOutcome<P::State>, EngineError> {
    run_observed(protocol, graph, input, options, |_, _| {})
}

/// [`run`] with a callback invoked after every activation.
pub fn run_observed<P: Protocol>(
    protocol: &P,
    graph: &Graph,
    input: &[Color],
    options: &RunOptions,
    mut observer: impl FnMut(&Activation, &[P::State]),
) -> Result<RunOutcome<P::State>, EngineError> {
    let expected = oracle_value(&protocol.function(), &color_counts(input, protocol.function().arity()))?;
    let mut sim = Simulation::new(protocol, graph.clone(), input, options.seed, options.rate, options.rewire)?;
    let n = graph.n() as u64;
    let window = options.limits.window_for(graph);
    let mut outputs: Vec<Output> = sim.states().iter().map(|s| protocol.output(s)).collect();
    let mut scorer = Scorer::new(&expected, &outputs);
    let mut trace = options.record_trace.then(Trace::default);

    let mut streak: Option<u64> = scorer.is_correct().then_some(0);
    let mut stabilized = false;
    let mut quiescent = false;
    if streak.is_some() && protocol.quiescent(sim.states()) == Some(true) {
        stabilized = true;
        quiescent = true;
    }
    while !stabilized && sim.step_count() < options.limits.max_steps {
        let act = sim.step()?;
        for node in [act.initiator as usize, act.responder as usize] {
            let new = protocol.output(&sim.states()[node]);
            scorer.replace(&outputs[node], &new);
            outputs[node] = new;
        }
        if let Some(t) = trace.as_mut() {
            t.activations.push(act);
        }
        observer(&act, sim.states());
        if !scorer.is_correct() {
            streak = None;
            continue;
        }
        let start = *streak.get_or_insert(act.step);
        let held = act.step - start;
        // the predicate is O(n); test it when the streak begins and every n steps
        if held.is_multiple_of(n) && protocol.quiescent(sim.states()) == Some(true) {
            stabilized = true;
            quiescent = true;
        } else if held >= window {
            stabilized = true;
        }
    }

    let result = RunResult {
        first_correct_step: streak,
        stabilized,
        quiescent,
        confirmation_window: window,
        final_outputs: outputs.clone(),
        total_steps: sim.step_count(),
        elapsed_time: sim.clock(),
    };
    if let Some(t) = trace.as_mut() {
        t.final_outputs = outputs;
    }
    let (final_states, final_graph) = sim.into_parts();
    Ok(RunOutcome { result, expected, trace, final_states, final_graph })
}

/// Places `count` agents of each color in ascending blocks and shuffles
/// the placement with `seed`.
pub fn place_colors(counts: &[(Color, usize)], seed: u64) -> Vec<Color> {
    use rand::seq::SliceRandom;
    let mut sorted = counts.to_vec();
    sorted.sort_by_key(|&(c, _)| c);
    let mut input: Vec<Color> = sorted.iter().flat_map(|&(c, k)| std::iter::repeat_n(c, k)).collect();
    input.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    input
}
