//! A full campaign on a generated benchmark, written to a directory.
//!
//! `cargo run --example fuzz_campaign -- [out_dir]`

use rrfuzz::frontend::parse_program;
use rrfuzz::fuzzer::{fuzz_loop, init_campaign, write_campaign, Budget, FuzzConfig};
use rrfuzz::gen::{generate, GenParams};

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "fuzz-out".into());
    let program = parse_program(&generate(&GenParams::default().with_seed(9))).unwrap();
    let mut campaign = init_campaign(&program, FuzzConfig::default(), 42).unwrap();
    let result = fuzz_loop(&mut campaign, Budget::execs(100_000));
    let s = &result.stats;
    println!(
        "{} execs, corpus {}, branch bits {}, state bits {}, found {}/{} errors",
        s.execs, s.corpus_size, s.branch_bits, s.state_bits, s.errors_found, s.errors_total
    );
    for (k, e) in &result.errors {
        println!("  error {k} at exec {}: {:?}", e.exec_index, e.witness);
    }
    write_campaign(out.as_ref(), &result).unwrap();
    println!("wrote {out}");
}
