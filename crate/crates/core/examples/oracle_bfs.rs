//! Exhaustive ground truth: which errors are reachable, with shortest witnesses.

use rrfuzz::cfg::{assign_block_tags, build_cfg};
use rrfuzz::executor::Executor;
use rrfuzz::frontend::parse_program;
use rrfuzz::gen::{generate, GenParams};
use rrfuzz::instrument::InstrumentationPlan;
use rrfuzz::oracle::bfs_reachability;

fn main() {
    let program = parse_program(&generate(&GenParams::default().with_seed(16))).unwrap();
    let cfg = assign_block_tags(build_cfg(&program), 0).unwrap();
    let executor = Executor::new(&program, &cfg, &InstrumentationPlan::all_blocks(&cfg)).unwrap();
    print!("{}", bfs_reachability(&executor, 100_000, 1_000).render());
}
