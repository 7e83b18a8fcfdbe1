//! Parse a program, show diagnostics for a broken one, and pretty-print.

use rrfuzz::frontend::{list_error_ids, parse_with_warnings, pretty_print};

fn main() {
    let good = "inputs 1..5; var a = 0;
        step(in) { if (in == 3) { a = 2; emit 20; } else { a = 1; } if (a == 2 && in == 4) { error 1; reject; emit 0; } }";
    let outcome = parse_with_warnings(good);
    for w in &outcome.warnings {
        println!("{}", w.render("good.rrp"));
    }
    let program = outcome.result.expect("valid");
    println!("error ids: {:?}", list_error_ids(&program));
    print!("{}", pretty_print(&program));

    let bad = "inputs 5..1; var a = 0; var a = 1; step(in) { b = in; in = 2; }";
    for d in parse_with_warnings(bad).result.unwrap_err() {
        println!("{}", d.render("bad.rrp"));
    }
}
