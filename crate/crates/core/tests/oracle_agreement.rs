use rrfuzz::cfg::{assign_block_tags, build_cfg};
use rrfuzz::executor::{Executor, RunStatus};
use rrfuzz::frontend::{parse_program, Program};
use rrfuzz::fuzzer::{fuzz_loop, init_campaign, Budget, FuzzConfig};
use rrfuzz::gen::{generate, GenParams};
use rrfuzz::instrument::InstrumentationPlan;
use rrfuzz::oracle::{bfs_reachability, OracleResult};

fn oracle(p: &Program) -> OracleResult {
    let cfg = assign_block_tags(build_cfg(p), 0).unwrap();
    let ex = Executor::new(p, &cfg, &InstrumentationPlan::all_blocks(&cfg)).unwrap();
    bfs_reachability(&ex, 100_000, 1_000)
}

#[test]
fn finds_error_whose_shortest_witness_has_three_steps() {
    let (p, k) = (0..)
        .find_map(|seed| {
            let p = parse_program(&generate(&GenParams::default().with_seed(seed))).unwrap();
            let o = oracle(&p);
            let k = o.reachable.iter().find(|(_, w)| w.len() == 3).map(|(k, _)| *k)?;
            Some((p, k))
        })
        .unwrap();
    let mut c = init_campaign(&p, FuzzConfig::default(), 42).unwrap();
    let r = fuzz_loop(&mut c, Budget::execs(200_000));
    let w = &r.errors.get(&k).expect("error found").witness;
    assert!(w.len() >= 3);
    assert_eq!(c.executor.run(w, w.len()).status, RunStatus::Error(k));
}

#[test]
fn fuzzer_never_reports_what_bfs_cannot_reach() {
    for seed in 20..26 {
        let p = parse_program(&generate(&GenParams::default().with_seed(seed))).unwrap();
        let o = oracle(&p);
        assert!(o.complete);
        for baseline in [false, true] {
            let config = if baseline { FuzzConfig::baseline() } else { FuzzConfig::default() };
            let mut c = init_campaign(&p, config, seed).unwrap();
            let r = fuzz_loop(&mut c, Budget::execs(20_000));
            for k in r.errors.keys() {
                assert!(o.reachable.contains_key(k), "seed {seed}: error {k} not in oracle set");
            }
            // Witnesses may be longer than the BFS minimum, never shorter.
            for (k, e) in &r.errors {
                assert!(e.witness.len() >= o.reachable[k].len());
            }
        }
    }
}

#[test]
fn default_benchmarks_are_small_enough_to_explore() {
    let complete = (0..50)
        .filter(|&seed| oracle(&parse_program(&generate(&GenParams::default().with_seed(seed))).unwrap()).complete)
        .count();
    assert!(complete >= 45, "{complete}/50 complete");
}
