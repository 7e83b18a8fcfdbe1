//! Full configuration against the baseline on a few generated programs.
//!
//! `cargo run --release --example ablation -- [programs] [execs]`

use rrfuzz::frontend::parse_program;
use rrfuzz::fuzzer::{fuzz_loop, init_campaign, Budget, FuzzConfig};
use rrfuzz::gen::{generate, GenParams};

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("integer argument"));
    let programs = args.next().unwrap_or(8);
    let execs = args.next().unwrap_or(20_000);
    let (mut full, mut base) = (0, 0);
    println!("{:>7} {:>5} {:>9}", "program", "full", "baseline");
    for seed in 0..programs {
        let p = parse_program(&generate(&GenParams { alphabet: 100, ..GenParams::default() }.with_seed(seed))).unwrap();
        let count = |config| {
            let mut c = init_campaign(&p, config, 42).unwrap();
            fuzz_loop(&mut c, Budget::execs(execs)).errors.len()
        };
        let (f, b) = (count(FuzzConfig::default()), count(FuzzConfig::baseline()));
        println!("{seed:>7} {f:>5} {b:>9}");
        full += f;
        base += b;
    }
    println!("{:>7} {full:>5} {base:>9}", "total");
}
