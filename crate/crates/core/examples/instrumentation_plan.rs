//! Pick a minimal adequate instrumentation set and recover full paths from
//! the instrumented subsequence alone.

use rrfuzz::cfg::build_cfg;
use rrfuzz::gen::{generate, GenParams};
use rrfuzz::frontend::parse_program;
use rrfuzz::instrument::{project_trace, reconstruct_path, select_instrumentation};

fn main() {
    let program = parse_program(&generate(&GenParams::default().with_seed(1))).unwrap();
    let cfg = build_cfg(&program);
    let plan = select_instrumentation(&cfg).unwrap();
    println!(
        "{} of {} blocks instrumented (ratio {:.2}), {} paths checked",
        plan.instrumented.len(),
        cfg.len(),
        plan.ratio(&cfg),
        plan.certificate.paths_checked
    );
    for path in cfg.paths().into_iter().take(3) {
        let seen = project_trace(&path, &plan.instrumented);
        let back = reconstruct_path(&cfg, &plan.instrumented, &seen).unwrap();
        assert_eq!(back, path);
        println!("observed {seen:?} -> path {path:?}");
    }
}
