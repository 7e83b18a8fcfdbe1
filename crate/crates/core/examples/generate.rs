//! Print a generated benchmark: `cargo run --example generate -- [seed]`.

use rrfuzz::gen::{generate, GenParams};

fn main() {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    print!("{}", generate(&GenParams::default().with_seed(seed)));
}
