//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use std::sync::Arc;
use std::time::Instant;

use anonet::circuits::{collision_count_check, CircuitNode, ComparisonCircuit, CompiledCircuit, GateKind};
use anonet::engine::{
    build_graph, measure_meeting_time, place_colors, run, run_observed, Graph, RewirePolicy, RunLimits, RunOptions,
    Simulation, Trace,
};
use anonet::oracle::{
    all_inputs, audit_memory, default_plan, fit_power_law, scaling_report, verify_exhaustive, Verdict, DEFAULT_GUARD,
};
use anonet::protocols::{
    AnyProtocol, Color, EstimateProtocol, LsbCounterProtocol, Output, Protocol, ThresholdProtocol,
};
use anonet::with_protocol;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_STEPS: u64 = 10_000_000;
const FAMILIES: [&str; 3] = ["complete", "cycle", "gnp:0.4"];

struct Outcome {
    pass: bool,
    summary: String,
}

fn report(id: u32, title: &str, seconds: f64, outcome: &Outcome) -> bool {
    println!(
        "criterion {id} {title}: {} ({}) [{seconds:.1}s]",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.summary,
    );
    outcome.pass
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

fn graph_for(family: &str, n: usize, seed: u64) -> Graph {
    let spec = match family {
        "gnp:0.4" => format!("gnp:{n}:0.4"),
        f => format!("{f}:{n}"),
    };
    build_graph(&spec, seed).unwrap()
}

fn counts_input(counts: &[usize], seed: u64) -> Vec<Color> {
    let pairs: Vec<(Color, usize)> = counts.iter().enumerate().map(|(c, &k)| (c as Color, k)).collect();
    place_colors(&pairs, seed)
}

/// Random MAX tree over colors `0..k` with depth at most `depth`.
fn random_max_tree(k: u32, depth: u32, rng: &mut ChaCha8Rng) -> ComparisonCircuit {
    fn build(colors: &[Color], depth: u32, rng: &mut ChaCha8Rng) -> CircuitNode {
        if colors.len() == 1 {
            return CircuitNode::Leaf(colors[0]);
        }
        let cap = 1usize << (depth - 1);
        let lo = colors.len().saturating_sub(cap).max(1);
        let hi = cap.min(colors.len() - 1);
        let split = rng.random_range(lo..=hi);
        CircuitNode::gate(
            GateKind::Max,
            build(&colors[..split], depth - 1, rng),
            build(&colors[split..], depth - 1, rng),
        )
    }
    let mut colors: Vec<Color> = (0..k).collect();
    colors.shuffle(rng);
    ComparisonCircuit::new(build(&colors, depth, rng)).unwrap()
}

/// Input for a sampled run: uniform red count for binary functions, a
/// strict-plurality assignment for plurality, uniform colors otherwise.
fn random_input(p: &AnyProtocol, n: usize, rng: &mut ChaCha8Rng) -> Vec<Color> {
    let k = p.arity() as usize;
    if k == 2 {
        let r = rng.random_range(0..=n);
        return place_colors(&[(0, r), (1, n - r)], rng.random());
    }
    loop {
        let input: Vec<Color> = (0..n).map(|_| rng.random_range(0..k as Color)).collect();
        if !matches!(p, AnyProtocol::Plurality(_)) {
            return input;
        }
        let mut counts = vec![0; k];
        for &c in &input {
            counts[c as usize] += 1;
        }
        let top = *counts.iter().max().unwrap();
        if counts.iter().filter(|&&c| c == top).count() == 1 {
            return input;
        }
    }
}

#[derive(Default)]
struct SuiteStats {
    runs: usize,
    failures: Vec<String>,
    parity_checks: u64,
    threshold_checks: u64,
    conservation_violations: Vec<String>,
}

/// Runs one protocol on one instance, checking conservation invariants at
/// every activation for the counting protocols.
fn sampled_run(p: &AnyProtocol, g: &Graph, input: &[Color], opts: &RunOptions, stats: &mut SuiteStats) {
    let label = format!("{} on {} seed {}", p.name(), g.tag(), opts.seed);
    let r = input.iter().filter(|&&c| c == 0).count() as i64;
    let n = input.len() as i64;
    let outcome = match p {
        AnyProtocol::Lsb(lsb) => {
            let m = lsb.modulus();
            let mut bad = 0u64;
            let out = run_observed(lsb, g, input, opts, |_, s| {
                stats.parity_checks += 1;
                let sum = s.iter().filter(|x| x.active).map(|x| x.counter).sum::<u32>() % m;
                bad += u64::from(sum != (r as u32) % m);
            });
            if bad > 0 {
                stats.conservation_violations.push(format!("{label}: {bad} activations"));
            }
            out.map(|o| (o.result, o.expected))
        }
        AnyProtocol::Threshold(t) => {
            let want = t.b() as i64 * r - t.a() as i64 * (n - r);
            let mut bad = 0u64;
            let out = run_observed(t, g, input, opts, |_, s| {
                stats.threshold_checks += 1;
                bad += u64::from(ThresholdProtocol::strong_sum(s) != want);
            });
            if bad > 0 {
                stats.conservation_violations.push(format!("{label}: {bad} activations"));
            }
            out.map(|o| (o.result, o.expected))
        }
        other => with_protocol!(other, q => run(q, g, input, opts).map(|o| (o.result, o.expected))),
    };
    stats.runs += 1;
    match outcome {
        Ok((result, expected)) if result.stabilized && expected.matches(&result.final_outputs) => {}
        Ok((result, _)) => stats.failures.push(format!("{label}: stabilized={}", result.stabilized)),
        Err(e) => stats.failures.push(format!("{label}: {e}")),
    }
}

fn sampled_protocols() -> Vec<AnyProtocol> {
    [
        "or",
        "lsb:1",
        "lsb:2",
        "lsb:3",
        "threshold:1:1",
        "threshold:2:1",
        "threshold:1:3",
        "threshold:3:2",
        "bit:0",
        "bit:1",
        "bit:2",
        "bit:3",
        "estimate",
        "max",
        "min",
        "plurality:4",
    ]
    .iter()
    .map(|s| AnyProtocol::parse(s).unwrap())
    .collect()
}

/// 30 seeds on each family with n in 3..=16 for every protocol plus a
/// fresh random depth-≤3 MAX circuit per instance.
fn sampled_suite(rewired: bool) -> SuiteStats {
    let mut stats = SuiteStats::default();
    let protocols = sampled_protocols();
    for (fi, family) in FAMILIES.iter().enumerate() {
        for seed in 0..30u64 {
            let n = 3 + (seed as usize * 7 + fi) % 14;
            let g = graph_for(family, n, seed);
            let rewire = if rewired { RewirePolicy::EdgeSwap { period: n as u64 } } else { RewirePolicy::None };
            let opts = RunOptions {
                limits: RunLimits { max_steps: MAX_STEPS, confirmation_window: None },
                rewire,
                ..RunOptions::seeded(seed)
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed << 8 | fi as u64);
            for p in &protocols {
                let input = random_input(p, n, &mut rng);
                sampled_run(p, &g, &input, &opts, &mut stats);
            }
            let k = rng.random_range(2..=8);
            let tree = random_max_tree(k, 3, &mut rng);
            let circuit = AnyProtocol::Circuit(CompiledCircuit::new(Arc::new(tree)).unwrap());
            let input = random_input(&circuit, n, &mut rng);
            sampled_run(&circuit, &g, &input, &opts, &mut stats);
        }
    }
    stats
}

fn criterion_1() -> Outcome {
    let mut total = 0;
    let mut bad = Vec::new();
    for spec in ["or", "lsb:1", "lsb:2", "threshold:1:1", "threshold:2:1", "bit:0", "bit:1"] {
        let p = AnyProtocol::parse(spec).unwrap();
        for graph in ["path:3", "cycle:4", "complete:4"] {
            let g = build_graph(graph, 0).unwrap();
            for input in all_inputs(g.n(), 2) {
                total += 1;
                let rec = with_protocol!(&p, q => verify_exhaustive(q, &g, &input, DEFAULT_GUARD));
                match rec {
                    Ok(r) if r.verdict == Verdict::Pass => {}
                    Ok(r) => bad.push(format!("{spec} {graph} {input:?}: {}", r.verdict)),
                    Err(e) => bad.push(format!("{spec} {graph} {input:?}: {e}")),
                }
            }
        }
    }
    Outcome {
        pass: bad.is_empty(),
        summary: format!("{} of {total} instances PASS{}", total - bad.len(), first_few(&bad)),
    }
}

fn first_few(items: &[String]) -> String {
    if items.is_empty() {
        String::new()
    } else {
        format!("; e.g. {}", items.iter().take(3).cloned().collect::<Vec<_>>().join(" | "))
    }
}

fn suite_outcome(stats: &SuiteStats) -> Outcome {
    Outcome {
        pass: stats.failures.is_empty() && stats.runs > 0,
        summary: format!(
            "{} of {} runs stabilized to the oracle value{}",
            stats.runs - stats.failures.len(),
            stats.runs,
            first_few(&stats.failures)
        ),
    }
}

fn criterion_3(stats: &[&SuiteStats]) -> Outcome {
    let parity: u64 = stats.iter().map(|s| s.parity_checks).sum();
    let threshold: u64 = stats.iter().map(|s| s.threshold_checks).sum();
    let violations: Vec<String> = stats.iter().flat_map(|s| s.conservation_violations.clone()).collect();
    Outcome {
        pass: violations.is_empty() && parity > 0 && threshold > 0,
        summary: format!(
            "{parity} parity and {threshold} threshold activations checked, {} runs violated{}",
            violations.len(),
            first_few(&violations)
        ),
    }
}

/// Steps until no marks, debts or opposite charges remain.
fn settle(c: &CompiledCircuit, graph: Graph, input: &[Color], seed: u64) -> Option<Trace> {
    let mut sim = Simulation::new(c, graph, input, seed, 1.0, RewirePolicy::None).ok()?;
    let mut trace = Trace::default();
    while !c.settled(sim.states()) {
        if trace.activations.len() as u64 >= MAX_STEPS {
            return None;
        }
        trace.activations.push(sim.step().ok()?);
    }
    trace.final_outputs = sim.states().iter().map(|s| c.output(s)).collect();
    Some(trace)
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1ed9e5);
    let mut gates_checked = 0;
    let mut bad = Vec::new();
    for i in 0..100u64 {
        let k = rng.random_range(3..=4);
        let circuit = random_max_tree(k, 2, &mut rng);
        let c = CompiledCircuit::new(Arc::new(circuit)).unwrap();
        let counts: Vec<usize> = loop {
            let v: Vec<usize> = (0..k).map(|_| rng.random_range(0..=6)).collect();
            if v.iter().sum::<usize>() >= 3 {
                break v;
            }
        };
        let n = counts.iter().sum();
        let input = counts_input(&counts, i);
        let g = graph_for(FAMILIES[i as usize % 3], n, i);
        let Some(trace) = settle(&c, g, &input, i) else {
            bad.push(format!("{} {counts:?}: did not settle", c.circuit()));
            continue;
        };
        for gate in 0..c.circuit().gates().len() {
            gates_checked += 1;
            match collision_count_check(&c, &input, &trace, gate) {
                Ok(r) if r.holds() => {}
                Ok(r) => bad.push(format!("{} {counts:?} gate {gate}: {r:?}", c.circuit())),
                Err(e) => bad.push(format!("{} {counts:?} gate {gate}: {e}", c.circuit())),
            }
        }
    }
    Outcome {
        pass: bad.is_empty(),
        summary: format!(
            "100 circuits, {} of {gates_checked} gate ledgers hold{}",
            gates_checked - bad.len(),
            first_few(&bad)
        ),
    }
}

fn criterion_5() -> Outcome {
    let cases: [(&str, usize); 12] = [
        ("lsb:1", 16),
        ("lsb:2", 16),
        ("lsb:3", 16),
        ("threshold:1:1:1", 16),
        ("threshold:2:1:1", 16),
        ("threshold:1:3:2", 16),
        ("max-gate", 16),
        ("min-gate", 16),
        ("plurality:4", 16),
        ("bit:0:64", 64),
        ("bit:1:64", 64),
        ("bit:2:64", 64),
    ];
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for (spec, max_n) in cases {
        let p = AnyProtocol::parse(spec).unwrap();
        let plan = default_plan(&p.function(), max_n, 1);
        match with_protocol!(&p, q => audit_memory(q, &plan)) {
            Ok(r) => {
                rows.push(format!("{spec} {}/{}", r.measured_bits, r.declared_bits));
                // the bit protocol's declared budget already carries its +1 out register
                if !r.within_budget || r.measured_bits > r.declared_bits {
                    bad.push(format!(
                        "{spec}: {} states need {} bits > {}",
                        r.distinct_states, r.measured_bits, r.declared_bits
                    ));
                }
            }
            Err(e) => bad.push(format!("{spec}: {e}")),
        }
    }
    let plurality_declared = AnyProtocol::parse("plurality:4").unwrap().budget_bits();
    if plurality_declared != 12 {
        bad.push(format!("plurality:4 declares {plurality_declared} bits"));
    }
    Outcome { pass: bad.is_empty(), summary: format!("measured/declared bits: {}{}", rows.join(", "), first_few(&bad)) }
}

fn criterion_6() -> Outcome {
    let p = EstimateProtocol::new(64).unwrap();
    let mut runs = 0;
    let mut bad = Vec::new();
    for family in ["complete", "cycle"] {
        for seed in 0..10u64 {
            let g = graph_for(family, 64, seed);
            for r in 1..=32usize {
                runs += 1;
                let input = place_colors(&[(0, r), (1, 64 - r)], seed * 100 + r as u64);
                let want = Output::Value(u64::from(r.ilog2()));
                match run(&p, &g, &input, &RunOptions::seeded(seed)) {
                    Ok(o) if o.result.stabilized && o.result.final_outputs.iter().all(|x| *x == want) => {}
                    Ok(_) => bad.push(format!("{family} seed {seed} r={r}")),
                    Err(e) => bad.push(format!("{family} seed {seed} r={r}: {e}")),
                }
            }
        }
    }
    Outcome {
        pass: bad.is_empty(),
        summary: format!("{} of {runs} runs settled on floor(log2 r){}", runs - bad.len(), first_few(&bad)),
    }
}

fn criterion_7() -> Outcome {
    let sizes = [8, 16, 32, 64];
    let seeds: Vec<u64> = (0..20).collect();
    let parity = LsbCounterProtocol::new(1).unwrap();
    let family = "cycle".parse().unwrap();
    let options =
        RunOptions { limits: RunLimits { max_steps: MAX_STEPS, confirmation_window: None }, ..RunOptions::seeded(0) };
    let report = scaling_report(
        &parity,
        &family,
        &sizes,
        &seeds,
        |n, seed| place_colors(&[(0, n / 2), (1, n - n / 2)], seed),
        &options,
    );
    let mut bad = Vec::new();
    let parity_exp = match report {
        Ok(r) if r.excluded.is_empty() => r.fit.map(|f| f.exponent),
        Ok(r) => {
            bad.push(format!("{} parity runs hit the step limit", r.excluded.len()));
            r.fit.map(|f| f.exponent)
        }
        Err(e) => {
            bad.push(e.to_string());
            None
        }
    };
    let stats: Vec<_> =
        sizes.iter().map(|&n| measure_meeting_time(&graph_for("cycle", n, 0), 400, n as u64, 1.0)).collect();
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let time_exp = fit_power_law(&xs, &stats.iter().map(|s| s.mean_time).collect::<Vec<_>>()).map(|f| f.exponent);
    let steps_exp = fit_power_law(&xs, &stats.iter().map(|s| s.mean_steps).collect::<Vec<_>>()).map(|f| f.exponent);
    let pass = bad.is_empty() && parity_exp.is_some_and(|e| e <= 3.4) && time_exp.is_some_and(|e| e <= 2.3);
    Outcome {
        pass,
        summary: format!(
            "parity activation exponent {} (bound 3.4), meeting time exponent {} (bound 2.3), meeting activation exponent {}{}",
            fmt_exp(parity_exp),
            fmt_exp(time_exp),
            fmt_exp(steps_exp),
            first_few(&bad)
        ),
    }
}

fn fmt_exp(e: Option<f64>) -> String {
    e.map_or("n/a".into(), |e| format!("{e:.2}"))
}

fn main() {
    let all = Instant::now();
    let mut passed = Vec::new();

    let (o, secs) = timed(criterion_1);
    passed.push(report(1, "exhaustive stabilization", secs, &o));

    let (fixed, fixed_secs) = timed(|| sampled_suite(false));
    passed.push(report(2, "sampled correctness", fixed_secs, &suite_outcome(&fixed)));

    let (dynamic, dynamic_secs) = timed(|| sampled_suite(true));
    let o = criterion_3(&[&fixed, &dynamic]);
    passed.push(report(3, "conservation invariants", fixed_secs + dynamic_secs, &o));

    let (o, secs) = timed(criterion_4);
    passed.push(report(4, "collision ledger", secs, &o));

    let (o, secs) = timed(criterion_5);
    passed.push(report(5, "memory audits", secs, &o));

    let (o, secs) = timed(criterion_6);
    passed.push(report(6, "estimator accuracy", secs, &o));

    let (o, secs) = timed(criterion_7);
    passed.push(report(7, "scaling", secs, &o));

    let mut o = suite_outcome(&dynamic);
    o.summary.push_str(", one edge swap every n activations");
    passed.push(report(8, "dynamic networks", dynamic_secs, &o));

    let failed = passed.iter().filter(|p| !**p).count();
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        passed.len() - failed,
        passed.len(),
        all.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
