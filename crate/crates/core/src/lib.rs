//! Coverage-guided greybox fuzzing for small reactive programs.
//!
//! A program in the RRP language consumes one input symbol per step and
//! updates integer globals. The pipeline parses it ([`frontend`]), lowers the
//! step body to a CFG ([`cfg`]), picks a small set of blocks to instrument
//! that still identifies every path ([`instrument`]), bounds the globals and
//! collects the input constants with interval analysis ([`interval`]), and
//! then fuzzes ([`fuzzer`]) with branch-pair and global-state coverage as
//! fitness ([`executor`]). [`oracle`] gives exact answers for programs small
//! enough to explore exhaustively, and [`gen`] produces benchmark programs.
//!
//! ```
//! use rrfuzz::frontend::parse_program;
//! use rrfuzz::fuzzer::{fuzz_loop, init_campaign, Budget, FuzzConfig};
//!
//! let program = parse_program(
//!     "inputs 1..4; var a = 0;
//!      step(in) { if (in == 2) { a = a + 1; } if (a == 2 && in == 4) { error 1; } }",
//! ).unwrap();
//! let mut campaign = init_campaign(&program, FuzzConfig::default(), 42).unwrap();
//! let result = fuzz_loop(&mut campaign, Budget::execs(20_000));
//! assert!(result.errors.contains_key(&1));
//! ```

pub mod cfg;
pub mod commands;
pub mod executor;
pub mod frontend;
pub mod fuzzer;
pub mod gen;
pub mod instrument;
pub mod interval;
pub mod oracle;
