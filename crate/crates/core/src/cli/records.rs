use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{MeetingStats, RunResult};
use crate::oracle::{AuditReport, Expected, PowerFit, ScalingReport, VerifyRecord};

/// JSON record of a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub protocol: String,
    pub graph: String,
    pub n: usize,
    pub edges: usize,
    pub seed: u64,
    pub input: String,
    pub first_correct_step: Option<u64>,
    pub stabilized: bool,
    pub quiescent: bool,
    pub confirmation_window: u64,
    pub total_steps: u64,
    pub elapsed_time: f64,
    pub outputs_histogram: BTreeMap<String, usize>,
    pub oracle_value: serde_json::Value,
    #[serde(rename = "match")]
    pub matched: bool,
}

impl RunRecord {
    pub fn new(
        protocol: String,
        graph: &crate::engine::Graph,
        seed: u64,
        input: String,
        result: &RunResult,
        expected: &Expected,
    ) -> Self {
        let mut outputs_histogram = BTreeMap::new();
        for o in &result.final_outputs {
            *outputs_histogram.entry(o.to_string()).or_insert(0) += 1;
        }
        Self {
            schema_version: crate::SCHEMA_VERSION,
            protocol,
            graph: graph.tag().to_string(),
            n: graph.n(),
            edges: graph.num_edges(),
            seed,
            input,
            first_correct_step: result.first_correct_step,
            stabilized: result.stabilized,
            quiescent: result.quiescent,
            confirmation_window: result.confirmation_window,
            total_steps: result.total_steps,
            elapsed_time: result.elapsed_time,
            outputs_histogram,
            oracle_value: expected.to_json(),
            matched: result.stabilized && expected.matches(&result.final_outputs),
        }
    }

    pub fn row(&self) -> RunRow {
        RunRow {
            protocol: self.protocol.clone(),
            n: self.n,
            edges: self.edges,
            graph: self.graph.clone(),
            seed: self.seed,
            first_correct_step: self.first_correct_step,
            total_steps: self.total_steps,
            stabilized: self.stabilized,
            input: self.input.clone(),
            elapsed_time: self.elapsed_time,
            oracle_value: self.oracle_value.to_string(),
            matched: self.matched,
            error: None,
            schema_version: self.schema_version,
        }
    }
}

/// Flat CSV row of a run, as written by `sweep` and `run --format csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub protocol: String,
    pub n: usize,
    pub edges: usize,
    pub graph: String,
    pub seed: u64,
    pub first_correct_step: Option<u64>,
    pub total_steps: u64,
    pub stabilized: bool,
    pub input: String,
    pub elapsed_time: f64,
    pub oracle_value: String,
    #[serde(rename = "match")]
    pub matched: bool,
    pub error: Option<String>,
    pub schema_version: u32,
}

impl RunRow {
    pub fn failed(protocol: &str, n: usize, graph: &str, seed: u64, input: String, error: String) -> Self {
        Self {
            protocol: protocol.to_string(),
            n,
            edges: 0,
            graph: graph.to_string(),
            seed,
            first_correct_step: None,
            total_steps: 0,
            stabilized: false,
            input,
            elapsed_time: 0.0,
            oracle_value: String::new(),
            matched: false,
            error: Some(error),
            schema_version: crate::SCHEMA_VERSION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub protocol: String,
    pub family: String,
    pub rows: usize,
    pub matched: usize,
    pub unstabilized: usize,
    pub errors: usize,
    pub scaling: ScalingReport,
}

/// CSV form of an exhaustive verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub protocol: String,
    pub graph: String,
    pub input: String,
    pub verdict: String,
    pub states_explored: usize,
    pub value: String,
    pub detail: Option<String>,
    pub schema_version: u32,
}

impl From<&VerifyRecord> for VerifyRow {
    fn from(r: &VerifyRecord) -> Self {
        let input: Vec<String> = r.input.iter().map(ToString::to_string).collect();
        Self {
            protocol: r.protocol.clone(),
            graph: r.graph.clone(),
            input: input.join(","),
            verdict: r.verdict.to_string(),
            states_explored: r.states_explored,
            value: r.value.to_string(),
            detail: r.detail.clone(),
            schema_version: r.schema_version,
        }
    }
}

/// CSV form of an audit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub protocol: String,
    pub declared_bits: u32,
    pub measured_bits: u32,
    pub distinct_states: usize,
    pub within_budget: bool,
    pub note: Option<String>,
    pub schema_version: u32,
}

impl From<&AuditReport> for AuditRow {
    fn from(r: &AuditReport) -> Self {
        Self {
            protocol: r.protocol.clone(),
            declared_bits: r.declared_bits,
            measured_bits: r.measured_bits,
            distinct_states: r.distinct_states,
            within_budget: r.within_budget,
            note: r.note.clone(),
            schema_version: r.schema_version,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetRow {
    pub graph: String,
    pub n: usize,
    pub edges: usize,
    pub trials: u64,
    pub mean_steps: f64,
    pub stderr_steps: f64,
    pub mean_time: f64,
    pub stderr_time: f64,
    pub schema_version: u32,
}

impl MeetRow {
    pub fn new(graph: &crate::engine::Graph, s: &MeetingStats) -> Self {
        Self {
            graph: graph.tag().to_string(),
            n: graph.n(),
            edges: graph.num_edges(),
            trials: s.trials,
            mean_steps: s.mean_steps,
            stderr_steps: s.stderr_steps,
            mean_time: s.mean_time,
            stderr_time: s.stderr_time,
            schema_version: crate::SCHEMA_VERSION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetSummary {
    pub schema_version: u32,
    pub results: Vec<MeetRow>,
    /// Growth of the mean activation count with n.
    pub steps_fit: Option<PowerFit>,
    /// Growth of the mean continuous meeting time with n.
    pub time_fit: Option<PowerFit>,
}
