//! Step-boundary bounds on globals and the weighted input value pool.

use rrfuzz::frontend::parse_program;
use rrfuzz::interval::{analyze, is_stable};

fn main() {
    let program = parse_program(
        "inputs 0..20; var n = 0; var mode = 1;
         step(x) {
             if (x == 7) { n = n + 1; } else if (x > 15) { n = 0; }
             if (n > 9) { n = 9; mode = 2; }
             if (mode == 2 && x == 3) { error 1; }
         }",
    )
    .unwrap();
    let summary = analyze(&program);
    for (g, b) in program.globals.iter().zip(&summary.global_bounds) {
        println!("{} in {b}", g.name);
    }
    println!("stable: {}", is_stable(&program, &summary.global_bounds));
    println!("input constants: {:?}", summary.input_constants);
    let heavy: Vec<i64> = summary.value_pool.iter().filter(|e| e.1 > 1).map(|e| e.0).collect();
    println!("weighted symbols: {heavy:?}");
}
