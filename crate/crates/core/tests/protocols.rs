use anonet::engine::{build_graph, place_colors, run, run_observed, Graph, RewirePolicy, RunOptions, Simulation};
use anonet::protocols::{
    BitProtocol, BitState, Color, EstimateProtocol, LsbCounterProtocol, OrProtocol, Output, ParityState, Protocol,
    ThresholdProtocol,
};
use proptest::prelude::*;

fn stabilize<P: Protocol>(p: &P, graph: &str, counts: &[(Color, usize)], seed: u64) -> Vec<Output> {
    let g = build_graph(graph, seed).unwrap();
    let input = place_colors(counts, seed);
    let out = run(p, &g, &input, &RunOptions::seeded(seed)).unwrap();
    assert!(out.result.stabilized, "{} on {graph} seed {seed} did not stabilize", p.name());
    assert!(out.expected.matches(&out.result.final_outputs));
    out.result.final_outputs
}

fn unanimous(outputs: &[Output]) -> Output {
    assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{outputs:?}");
    outputs[0]
}

#[test]
fn or_examples() {
    let g = build_graph("cycle:6", 0).unwrap();
    let out = run(&OrProtocol, &g, &[0; 6], &RunOptions::seeded(0)).unwrap();
    assert!(out.result.stabilized);
    assert_eq!(out.result.first_correct_step, Some(0));
    assert_eq!(unanimous(&out.result.final_outputs), Output::Value(0));
    for seed in 0..10 {
        assert_eq!(unanimous(&stabilize(&OrProtocol, "path:6", &[(0, 5), (1, 1)], seed)), Output::Value(1));
    }
}

#[test]
fn lsb_examples() {
    let parity = LsbCounterProtocol::new(1).unwrap();
    let two = LsbCounterProtocol::new(2).unwrap();
    for seed in 0..10 {
        assert_eq!(unanimous(&stabilize(&parity, "cycle:6", &[(0, 3), (1, 3)], seed)), Output::Value(1));
        assert_eq!(unanimous(&stabilize(&two, "complete:6", &[(1, 6)], seed)), Output::Value(0));
        assert_eq!(unanimous(&stabilize(&two, "cycle:6", &[(0, 5), (1, 1)], seed)), Output::Value(1));
        assert_eq!(unanimous(&stabilize(&two, "gnp:7:0.5", &[(0, 4), (1, 3)], seed)), Output::Value(0));
    }
}

#[test]
fn threshold_examples() {
    let majority = ThresholdProtocol::new(1, 1, 1).unwrap();
    let tie = ThresholdProtocol::new(2, 1, 2).unwrap();
    let third = ThresholdProtocol::new(1, 3, 2).unwrap();
    for seed in 0..10 {
        assert_eq!(unanimous(&stabilize(&majority, "complete:5", &[(0, 3), (1, 2)], seed)), Output::Value(1));
        assert_eq!(unanimous(&stabilize(&tie, "cycle:9", &[(0, 6), (1, 3)], seed)), Output::Value(0));
        assert_eq!(unanimous(&stabilize(&third, "gnp:8:0.4", &[(0, 3), (1, 5)], seed)), Output::Value(1));
    }
}

#[test]
fn bit_examples() {
    for (j, want) in [(0, 0), (1, 1), (2, 1)] {
        let p = BitProtocol::new(j, 64).unwrap();
        assert_eq!(unanimous(&stabilize(&p, "cycle:8", &[(0, 6), (1, 2)], 1)), Output::Value(want));
    }
    let graphs = ["complete:16", "cycle:16", "gnp:16:0.4", "path:16", "star:16"];
    for (j, want) in [(0, 1), (1, 0), (2, 1), (3, 1)] {
        let p = BitProtocol::new(j, 64).unwrap();
        for seed in 0..50 {
            let graph = graphs[seed as usize % graphs.len()];
            assert_eq!(unanimous(&stabilize(&p, graph, &[(0, 13), (1, 3)], seed)), Output::Value(want), "j={j}");
        }
    }
}

#[test]
fn estimate_examples() {
    let p = EstimateProtocol::new(64).unwrap();
    let est = |r: usize, seed| unanimous(&stabilize(&p, "complete:40", &[(0, r), (1, 40 - r)], seed));
    for seed in 0..5 {
        assert_eq!(est(1, seed), Output::Value(0));
        assert_eq!(EstimateProtocol::estimate(&est(12, seed)), Some(8));
        assert_eq!(est(32, seed), Output::Value(5));
        assert_eq!(EstimateProtocol::estimate(&est(32, seed)), Some(32));
    }
    let g = build_graph("cycle:6", 0).unwrap();
    let out = run(&p, &g, &[1; 6], &RunOptions::seeded(0)).unwrap();
    assert_eq!(unanimous(&out.result.final_outputs), Output::Empty);
}

#[test]
fn bit_rejects_populations_beyond_nmax() {
    let p = BitProtocol::new(0, 4).unwrap();
    let g = build_graph("complete:12", 0).unwrap();
    let err = run(&p, &g, &[0; 12], &RunOptions::seeded(0));
    assert!(err.is_err());
}

/// Weighted active mass: every active red token at level l stands for 2^l reds.
fn token_mass(states: &[BitState]) -> u64 {
    states.iter().filter(|s| s.active && s.color).map(|s| 1u64 << s.level).sum()
}

fn parity_sum(states: &[ParityState], modulus: u32) -> u32 {
    states.iter().filter(|s| s.active).map(|s| s.counter).sum::<u32>() % modulus
}

fn random_graph(kind: u8, n: usize, seed: u64) -> Graph {
    let spec = match kind % 3 {
        0 => format!("complete:{n}"),
        1 => format!("cycle:{n}"),
        _ => format!("gnp:{n}:0.4"),
    };
    build_graph(&spec, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parity_counter_sum_is_conserved(n in 3usize..14, red in 0usize..14, c in 1u32..4, kind in 0u8..3, seed in any::<u64>()) {
        let r = red.min(n);
        let p = LsbCounterProtocol::new(c).unwrap();
        let g = random_graph(kind, n, seed);
        let input = place_colors(&[(0, r), (1, n - r)], seed);
        let m = p.modulus();
        let mut active = r;
        let mut ok = true;
        let opts = RunOptions { rewire: RewirePolicy::EdgeSwap { period: n as u64 }, ..RunOptions::seeded(seed) };
        let out = run_observed(&p, &g, &input, &opts, |_, s| {
            let now = s.iter().filter(|x| x.active).count();
            ok &= parity_sum(s, m) == r as u32 % m && now <= active;
            active = now;
        }).unwrap();
        prop_assert!(ok);
        prop_assert!(out.result.stabilized);
    }

    #[test]
    fn threshold_strong_sum_is_conserved(n in 3usize..14, red in 0usize..14, a in 1u64..4, b in 1u64..4, kind in 0u8..3, seed in any::<u64>()) {
        let r = red.min(n);
        let p = ThresholdProtocol::with_min_width(a, b).unwrap();
        let g = random_graph(kind, n, seed);
        let input = place_colors(&[(0, r), (1, n - r)], seed);
        let want = b as i64 * r as i64 - a as i64 * (n - r) as i64;
        let mut ok = true;
        let out = run_observed(&p, &g, &input, &RunOptions::seeded(seed), |_, s| {
            ok &= ThresholdProtocol::strong_sum(s) == want;
        }).unwrap();
        prop_assert!(ok);
        prop_assert!(out.result.stabilized);
        prop_assert!(out.expected.matches(&out.result.final_outputs));
    }

    #[test]
    fn bit_levels_carry_in_binary(n in 3usize..14, red in 0usize..14, kind in 0u8..3, seed in any::<u64>()) {
        let r = red.min(n);
        let p = BitProtocol::new(1, 16).unwrap();
        let g = random_graph(kind, n, seed);
        let input = place_colors(&[(0, r), (1, n - r)], seed);
        let mut sim = Simulation::new(&p, g, &input, seed, 1.0, RewirePolicy::None).unwrap();
        let mut before = sim.states().to_vec();
        prop_assert_eq!(token_mass(&before), r as u64);
        for _ in 0..20 * n * n {
            let act = sim.step().unwrap();
            let after = sim.states();
            prop_assert_eq!(token_mass(after), r as u64);
            let (u, v) = (act.initiator as usize, act.responder as usize);
            let (x, y) = (before[u], before[v]);
            if x.active && y.active && x.level == y.level {
                let (nx, ny) = (after[u], after[v]);
                prop_assert!(nx.active && nx.level == x.level);
                if x.color && y.color {
                    prop_assert!(ny.active && ny.level == x.level + 1 && ny.color && !nx.color);
                } else {
                    prop_assert!(!ny.active);
                    prop_assert_eq!(nx.color, x.color ^ y.color);
                }
            } else {
                // no-merge meetings never change the multiset of tokens
                let mut old = [(x.active, x.level, x.color), (y.active, y.level, y.color)];
                let mut new = [(after[u].active, after[u].level, after[u].color), (after[v].active, after[v].level, after[v].color)];
                old.sort();
                new.sort();
                prop_assert_eq!(old, new);
            }
            before.copy_from_slice(after);
        }
        // once settled, actives at distinct levels spell r in binary
        let out = run(&p, &build_graph("complete:8", 0).unwrap(), &place_colors(&[(0, r.min(8)), (1, 8 - r.min(8))], seed), &RunOptions::seeded(seed)).unwrap();
        prop_assert!(out.result.stabilized);
        let (states, _) = (out.final_states, ());
        let mut levels: Vec<u8> = states.iter().filter(|s| s.active && s.color).map(|s| s.level).collect();
        levels.sort();
        let spelled: Vec<u8> = (0..8u8).filter(|i| r.min(8) >> i & 1 == 1).collect();
        prop_assert_eq!(levels, spelled);
    }
}
