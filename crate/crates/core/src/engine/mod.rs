//! Graphs, the random interaction scheduler, and protocol execution.

mod graph;
mod meeting;
mod run;
mod schedule;
mod trace;

pub use graph::{build_graph, Graph, GraphError, GraphFamily, GraphSpec, GNP_MAX_ATTEMPTS};
pub use meeting::{measure_meeting_time, MeetingStats};
pub use run::{
    place_colors, run, run_observed, Configuration, EngineError, RunLimits, RunOptions, RunOutcome, RunResult,
    Simulation, DEFAULT_MAX_STEPS,
};
pub use schedule::{edge_swap, rewire, schedule_next, Activation, RewirePolicy};
pub use trace::{Trace, TraceError};
