//! Execute inputs under instrumentation and watch map novelty.

use rrfuzz::cfg::{assign_block_tags, build_cfg};
use rrfuzz::executor::{CoverageMaps, Executor};
use rrfuzz::frontend::parse_program;
use rrfuzz::instrument::select_instrumentation;

fn main() {
    let program = parse_program(
        "inputs 1..5; var a = 0;
         step(in) { if (in == 3) { a = 2; emit 20; } else { a = 1; } if (a == 2 && in == 5) { error 4; } }",
    )
    .unwrap();
    let cfg = assign_block_tags(build_cfg(&program), 0).unwrap();
    let plan = select_instrumentation(&cfg).unwrap();
    let executor = Executor::new(&program, &cfg, &plan).unwrap();
    let mut maps = CoverageMaps::default();
    for input in [vec![3], vec![3], vec![1], vec![1, 1, 1, 1], vec![3, 5], vec![9]] {
        let r = executor.run(&input, 100);
        let n = maps.merge_and_report(&r);
        println!(
            "{input:?}: {} after {} steps, outputs {:?}, new branch bits {}, new state bits {}",
            r.status, r.steps, r.outputs, n.new_branch_bits, n.new_state_bits
        );
    }
}
