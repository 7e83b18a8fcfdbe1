//! Lower a step body to a CFG and print blocks, edges and branch pairs.

use rrfuzz::cfg::{assign_block_tags, build_cfg, enumerate_branch_pairs};
use rrfuzz::frontend::parse_program;

fn main() {
    let program = parse_program(
        "inputs 1..5; var a = 0;
         step(in) { if (in == 3) { a = 2; } else { a = 1; } if (a > 1) { emit 7; } }",
    )
    .unwrap();
    let cfg = assign_block_tags(build_cfg(&program), 0).unwrap();
    print!("{}", cfg.dump(&program));
    println!("paths: {}", cfg.path_count());
    for path in cfg.paths() {
        println!("  {path:?}");
    }
    println!("branch pairs: {:?}", enumerate_branch_pairs(&cfg));
}
