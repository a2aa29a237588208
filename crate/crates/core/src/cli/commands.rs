use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use super::records::{AuditRow, MeetRow, MeetSummary, RunRecord, RunRow, SweepSummary, VerifyRow};
use super::{
    parse_range_list, AuditArgs, Cli, Command, Format, GlobalOpts, InputSpec, MeetArgs, RunArgs, SweepArgs, VerifyArgs,
    EXIT_CONFIG, EXIT_FAILURE, EXIT_OK,
};
use crate::engine::{
    build_graph, measure_meeting_time, run, EngineError, Graph, GraphFamily, RunLimits, RunOptions, Trace,
};
use crate::oracle::{
    all_inputs, audit_memory, default_plan, fit_power_law, verify_exhaustive, ScalingReport, ScalingSample, Verdict,
    VerifyRecord,
};
use crate::protocols::{AnyProtocol, Color, Protocol};
use crate::with_protocol;

/// Errors that end a command before it produces results.
enum Fatal {
    Config(String),
    Failure(String),
}

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal::Config(e.to_string())
    }
}

type CmdResult = Result<i32, Fatal>;

pub(super) fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let g = &cli.global;
    let result = match &cli.command {
        Command::Run(a) => cmd_run(g, a, stdout),
        Command::Sweep(a) => cmd_sweep(g, a, stdout, stderr),
        Command::Verify(a) => cmd_verify(g, a, stdout, stderr),
        Command::Audit(a) => cmd_audit(g, a, stdout),
        Command::Meet(a) => cmd_meet(g, a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(Fatal::Config(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_CONFIG
        }
        Err(Fatal::Failure(msg)) => {
            let _ = writeln!(stderr, "failure: {msg}");
            EXIT_FAILURE
        }
    }
}

fn sink<'a>(g: &GlobalOpts, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, Fatal> {
    Ok(match &g.output {
        Some(path) => {
            Box::new(BufWriter::new(File::create(path).map_err(|e| Fatal::Config(format!("{}: {e}", path.display())))?))
        }
        None => Box::new(stdout),
    })
}

fn write_json_line<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Fatal> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_csv<T: Serialize>(out: &mut dyn Write, rows: &[T]) -> Result<(), Fatal> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn run_options(g: &GlobalOpts, n: usize, seed: u64) -> Result<RunOptions, Fatal> {
    Ok(RunOptions {
        seed,
        limits: RunLimits { max_steps: g.max_steps, confirmation_window: g.confirm_window },
        rate: g.rate,
        rewire: g.rewire_for(n)?,
        record_trace: g.trace.is_some(),
    })
}

fn run_record<P: Protocol>(
    p: &P,
    graph: &Graph,
    input: &[Color],
    spec: &InputSpec,
    opts: &RunOptions,
) -> Result<(RunRecord, Option<Trace>), EngineError> {
    let out = run(p, graph, input, opts)?;
    let record = RunRecord::new(p.name(), graph, opts.seed, spec.to_string(), &out.result, &out.expected);
    Ok((record, out.trace))
}

fn engine_fatal(e: EngineError) -> Fatal {
    match e {
        EngineError::Protocol { .. } => Fatal::Failure(e.to_string()),
        other => Fatal::Config(other.to_string()),
    }
}

fn cmd_run(g: &GlobalOpts, args: &RunArgs, stdout: &mut dyn Write) -> CmdResult {
    let protocol = AnyProtocol::parse(&args.protocol)?;
    let graph = build_graph(&args.graph, g.seed)?;
    let spec: InputSpec = args.input.parse().map_err(Fatal::Config)?;
    let input = spec.realize(graph.n(), g.seed).map_err(Fatal::Config)?;
    let opts = run_options(g, graph.n(), g.seed)?;
    let (record, trace) =
        with_protocol!(&protocol, p => run_record(p, &graph, &input, &spec, &opts)).map_err(engine_fatal)?;
    if let (Some(path), Some(trace)) = (&g.trace, trace) {
        let f = File::create(path).map_err(|e| Fatal::Config(format!("{}: {e}", path.display())))?;
        trace.write_to(BufWriter::new(f))?;
    }
    let mut out = sink(g, stdout)?;
    match g.format.unwrap_or(Format::Json) {
        Format::Json => write_json_line(&mut *out, &record)?,
        Format::Csv => write_csv(&mut *out, &[record.row()])?,
    }
    out.flush()?;
    Ok(if record.matched { EXIT_OK } else { EXIT_FAILURE })
}

fn sweep_cell(
    protocol: &AnyProtocol,
    g: &GlobalOpts,
    family: &GraphFamily,
    n: usize,
    spec: &InputSpec,
    seed: u64,
) -> RunRow {
    let name = protocol.name();
    let graph_spec = family.spec(n);
    let fail = |e: String| RunRow::failed(&name, n, &format!("{family}:{n}"), seed, spec.to_string(), e);
    let graph = match graph_spec.build(seed) {
        Ok(graph) => graph,
        Err(e) => return fail(e.to_string()),
    };
    let input = match spec.realize(n, seed) {
        Ok(input) => input,
        Err(e) => return fail(e),
    };
    let opts = match run_options(g, n, seed) {
        Ok(o) => RunOptions { record_trace: false, ..o },
        Err(Fatal::Config(e) | Fatal::Failure(e)) => return fail(e),
    };
    match with_protocol!(protocol, p => run_record(p, &graph, &input, spec, &opts)) {
        Ok((record, _)) => record.row(),
        Err(e) => fail(e.to_string()),
    }
}

fn cmd_sweep(g: &GlobalOpts, args: &SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let protocol = AnyProtocol::parse(&args.protocol)?;
    let family: GraphFamily = args.family.parse()?;
    let sizes = parse_range_list(&args.sizes).map_err(Fatal::Config)?;
    let seeds = parse_range_list(&args.seeds).map_err(Fatal::Config)?;
    let specs: Vec<InputSpec> = match &args.reds {
        Some(reds) => {
            parse_range_list(reds).map_err(Fatal::Config)?.into_iter().map(|r| InputSpec::Red(r as usize)).collect()
        }
        None => vec![args.input.parse().map_err(Fatal::Config)?],
    };
    if sizes.is_empty() || seeds.is_empty() || specs.is_empty() {
        return Err(Fatal::Config("sweep grid is empty".into()));
    }
    let mut grid = Vec::new();
    for &n in &sizes {
        for spec in &specs {
            for &seed in &seeds {
                grid.push((n as usize, spec, seed));
            }
        }
    }
    let rows: Vec<RunRow> =
        grid.par_iter().map(|&(n, spec, seed)| sweep_cell(&protocol, g, &family, n, spec, seed)).collect();

    let samples: Vec<ScalingSample> = rows
        .iter()
        .filter(|r| r.error.is_none())
        .map(|r| ScalingSample {
            n: r.n,
            seed: r.seed,
            steps: if r.stabilized { r.first_correct_step } else { None },
            time: r.elapsed_time,
        })
        .collect();
    let summary = SweepSummary {
        schema_version: crate::SCHEMA_VERSION,
        protocol: protocol.name(),
        family: family.to_string(),
        rows: rows.len(),
        matched: rows.iter().filter(|r| r.matched).count(),
        unstabilized: rows.iter().filter(|r| r.error.is_none() && !r.stabilized).count(),
        errors: rows.iter().filter(|r| r.error.is_some()).count(),
        scaling: ScalingReport::from_samples(&protocol.name(), &family.to_string(), &samples),
    };

    let mut out = sink(g, stdout)?;
    match g.format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(&mut *out, &rows)?,
        Format::Json => {
            for r in &rows {
                write_json_line(&mut *out, r)?;
            }
        }
    }
    out.flush()?;
    let summary_path: Option<PathBuf> = args.summary.clone().or_else(|| {
        g.output.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".summary.json");
            PathBuf::from(s)
        })
    });
    match summary_path {
        Some(path) => {
            let f = File::create(&path).map_err(|e| Fatal::Config(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(f);
            serde_json::to_writer_pretty(&mut w, &summary)?;
            writeln!(w)?;
        }
        None => write_json_line(stderr, &summary)?,
    }
    Ok(if summary.matched == summary.rows { EXIT_OK } else { EXIT_FAILURE })
}

fn verify_one<P: Protocol>(p: &P, graph: &Graph, input: &[Color], guard: usize) -> VerifyRecord {
    verify_exhaustive(p, graph, input, guard).unwrap_or_else(|e| VerifyRecord {
        schema_version: crate::SCHEMA_VERSION,
        protocol: p.name(),
        graph: graph.tag().to_string(),
        input: input.to_vec(),
        verdict: Verdict::Skipped,
        states_explored: 0,
        value: serde_json::Value::Null,
        detail: Some(format!("unsupported input: {e}")),
    })
}

fn cmd_verify(g: &GlobalOpts, args: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let protocol = AnyProtocol::parse(&args.protocol)?;
    let graph = build_graph(&args.graph, g.seed)?;
    let inputs = match (&args.input, args.all_inputs) {
        (_, true) => all_inputs(graph.n(), protocol.arity()),
        (Some(spec), false) => {
            let spec: InputSpec = spec.parse().map_err(Fatal::Config)?;
            vec![spec.realize(graph.n(), g.seed).map_err(Fatal::Config)?]
        }
        (None, false) => return Err(Fatal::Config("verify needs --input or --all-inputs".into())),
    };
    let records: Vec<VerifyRecord> = inputs
        .par_iter()
        .map(|input| with_protocol!(&protocol, p => verify_one(p, &graph, input, args.guard)))
        .collect();
    let mut out = sink(g, stdout)?;
    match g.format.unwrap_or(Format::Json) {
        Format::Json => {
            for r in &records {
                write_json_line(&mut *out, r)?;
            }
        }
        Format::Csv => write_csv(&mut *out, &records.iter().map(VerifyRow::from).collect::<Vec<_>>())?,
    }
    out.flush()?;
    let count = |v: Verdict| records.iter().filter(|r| r.verdict == v).count();
    let failed = count(Verdict::Fail);
    writeln!(stderr, "{} PASS, {failed} FAIL, {} SKIPPED", count(Verdict::Pass), count(Verdict::Skipped))?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILURE })
}

fn audit_population(protocol: &AnyProtocol) -> usize {
    match protocol {
        AnyProtocol::Bit(p) => 1 << (p.levels() - 1).min(6),
        AnyProtocol::Estimate(p) => 1 << (p.levels() - 1).min(6),
        _ => 16,
    }
}

fn cmd_audit(g: &GlobalOpts, args: &AuditArgs, stdout: &mut dyn Write) -> CmdResult {
    let mut reports = Vec::new();
    for spec in &args.protocols {
        let protocol = AnyProtocol::parse(spec)?;
        let max_n = args.max_n.unwrap_or_else(|| audit_population(&protocol));
        let plan = default_plan(&protocol.function(), max_n, g.seed);
        let report =
            with_protocol!(&protocol, p => audit_memory(p, &plan)).map_err(|e| Fatal::Failure(e.to_string()))?;
        reports.push(report);
    }
    let mut out = sink(g, stdout)?;
    match g.format.unwrap_or(Format::Json) {
        Format::Json => {
            for r in &reports {
                write_json_line(&mut *out, r)?;
            }
        }
        Format::Csv => write_csv(&mut *out, &reports.iter().map(AuditRow::from).collect::<Vec<_>>())?,
    }
    out.flush()?;
    Ok(if reports.iter().all(|r| r.within_budget) { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_meet(g: &GlobalOpts, args: &MeetArgs, stdout: &mut dyn Write) -> CmdResult {
    if args.trials == 0 {
        return Err(Fatal::Config("--trials must be at least 1".into()));
    }
    if !(g.rate.is_finite() && g.rate > 0.0) {
        return Err(Fatal::Config(format!("rate must be positive, got {}", g.rate)));
    }
    let graphs: Vec<Graph> = match (&args.graph, &args.family, &args.sizes) {
        (Some(spec), _, _) => vec![build_graph(spec, g.seed)?],
        (None, Some(family), Some(sizes)) => {
            let family: GraphFamily = family.parse()?;
            parse_range_list(sizes)
                .map_err(Fatal::Config)?
                .into_iter()
                .map(|n| family.spec(n as usize).build(g.seed))
                .collect::<Result<_, _>>()?
        }
        _ => return Err(Fatal::Config("meet needs --graph or --family with --sizes".into())),
    };
    let results: Vec<MeetRow> = graphs
        .par_iter()
        .map(|graph| MeetRow::new(graph, &measure_meeting_time(graph, args.trials, g.seed, g.rate)))
        .collect();
    let xs: Vec<f64> = results.iter().map(|r| r.n as f64).collect();
    let steps: Vec<f64> = results.iter().map(|r| r.mean_steps).collect();
    let times: Vec<f64> = results.iter().map(|r| r.mean_time).collect();
    let summary = MeetSummary {
        schema_version: crate::SCHEMA_VERSION,
        steps_fit: fit_power_law(&xs, &steps),
        time_fit: fit_power_law(&xs, &times),
        results,
    };
    let mut out = sink(g, stdout)?;
    match g.format.unwrap_or(Format::Json) {
        Format::Json => write_json_line(&mut *out, &summary)?,
        Format::Csv => write_csv(&mut *out, &summary.results)?,
    }
    out.flush()?;
    Ok(EXIT_OK)
}
