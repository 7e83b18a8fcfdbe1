//! Random RRP benchmark generation.
//!
//! Programs are a full if/else cascade: the outermost test is on the input,
//! inner tests mix input and global comparisons. Leaves assign globals from
//! the value domain `0..domain` (constants or copies of other globals), so
//! the reachable state space is bounded by `domain^vars`. Error sites sit at
//! randomly chosen leaves, each behind a two-atom test on the globals.

use std::fmt::Write;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenParams {
    pub vars: usize,
    pub domain: i64,
    pub alphabet: i64,
    pub depth: usize,
    pub errors: usize,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams { vars: 4, domain: 4, alphabet: 5, depth: 4, errors: 10, seed: 0 }
    }
}

impl GenParams {
    pub fn with_seed(self, seed: u64) -> Self {
        GenParams { seed, ..self }
    }
}

pub fn generate(params: &GenParams) -> String {
    assert!(params.vars > 0 && params.domain > 0 && params.alphabet > 0 && params.depth > 0);
    let mut g = Generator { p: *params, rng: ChaCha8Rng::seed_from_u64(params.seed), out: String::new() };
    g.program();
    g.out
}

struct Generator {
    p: GenParams,
    rng: ChaCha8Rng,
    out: String,
}

impl Generator {
    fn program(&mut self) {
        let p = self.p;
        writeln!(self.out, "// generated: vars={} domain={} alphabet={} depth={} errors={} seed={}",
            p.vars, p.domain, p.alphabet, p.depth, p.errors, p.seed).unwrap();
        writeln!(self.out, "inputs 1..{};", p.alphabet).unwrap();
        for v in 0..p.vars {
            let init = self.rng.random_range(0..p.domain);
            writeln!(self.out, "var v{v} = {init};").unwrap();
        }
        let leaves = 1usize << p.depth;
        let mut slots: Vec<usize> = (0..leaves).collect();
        slots.shuffle(&mut self.rng);
        // Error ids 1..=errors spread over shuffled leaves.
        let mut sites: Vec<Vec<i64>> = vec![Vec::new(); leaves];
        for id in 1..=p.errors {
            sites[slots[(id - 1) % leaves]].push(id as i64);
        }
        self.out.push_str("step(in) {\n");
        let mut leaf = 0;
        self.cascade(p.depth, 1, &sites, &mut leaf, Some(&[]));
        self.out.push_str("}\n");
    }

    fn indent(&mut self, level: usize) {
        for _ in 0..level {
            self.out.push_str("    ");
        }
    }

    /// `excluded` lists the symbols already ruled out on this path; `None`
    /// means the path has fixed the input, so further input tests are dead.
    fn cascade(&mut self, depth: usize, level: usize, sites: &[Vec<i64>], leaf: &mut usize, excluded: Option<&[i64]>) {
        if depth == 0 {
            let here = sites[*leaf].clone();
            *leaf += 1;
            self.leaf(level, &here);
            return;
        }
        let symbol = match excluded {
            Some(ex) if level == 1 || self.rng.random_bool(0.5) => {
                let free: Vec<i64> = (1..=self.p.alphabet).filter(|c| !ex.contains(c)).collect();
                free.choose(&mut self.rng).copied()
            }
            _ => None,
        };
        let cond = match symbol {
            Some(c) => format!("in == {c}"),
            None => self.condition(),
        };
        let else_excluded: Option<Vec<i64>> = match (excluded, symbol) {
            (Some(ex), Some(c)) => Some(ex.iter().copied().chain([c]).collect()),
            (ex, _) => ex.map(<[i64]>::to_vec),
        };
        let then_excluded = if symbol.is_some() { None } else { excluded };
        self.indent(level);
        writeln!(self.out, "if ({cond}) {{").unwrap();
        self.cascade(depth - 1, level + 1, sites, leaf, then_excluded);
        self.indent(level);
        self.out.push_str("} else {\n");
        self.cascade(depth - 1, level + 1, sites, leaf, else_excluded.as_deref());
        self.indent(level);
        self.out.push_str("}\n");
    }

    fn global_atom(&mut self) -> String {
        let p = self.p;
        let v = self.rng.random_range(0..p.vars);
        let x = self.rng.random_range(0..p.domain);
        match self.rng.random_range(0..10) {
            0..=6 => format!("v{v} == {x}"),
            7..=8 => format!("v{v} != {x}"),
            _ => format!("v{v} < {}", x.max(1)),
        }
    }

    fn condition(&mut self) -> String {
        let first = self.global_atom();
        if self.rng.random_bool(0.25) {
            let second = self.global_atom();
            format!("{first} && {second}")
        } else {
            first
        }
    }

    /// One global update: a constant, a wrapping increment, or a copy.
    fn assignment(&mut self) -> String {
        let p = self.p;
        let target = self.rng.random_range(0..p.vars);
        match self.rng.random_range(0..20) {
            0..=3 if p.vars > 1 => {
                let mut src = self.rng.random_range(0..p.vars - 1);
                if src >= target {
                    src += 1;
                }
                format!("v{target} = v{src};")
            }
            4..=11 if p.domain > 1 => format!(
                "if (v{target} < {}) {{ v{target} = v{target} + 1; }} else {{ v{target} = 0; }}",
                p.domain - 1
            ),
            _ => format!("v{target} = {};", self.rng.random_range(0..p.domain)),
        }
    }

    /// A leaf checks its error sites against the state, then updates globals.
    fn leaf(&mut self, level: usize, errors: &[i64]) {
        for k in errors {
            let mut guard = self.global_atom();
            if self.rng.random_bool(0.5) {
                guard = format!("{guard} && {}", self.global_atom());
            }
            self.indent(level);
            writeln!(self.out, "if ({guard}) {{ error {k}; }}").unwrap();
        }
        if errors.is_empty() && self.rng.random_bool(0.1) {
            self.indent(level);
            self.out.push_str("reject;\n");
            return;
        }
        for _ in 0..self.rng.random_range(1..=2) {
            let a = self.assignment();
            self.indent(level);
            writeln!(self.out, "{a}").unwrap();
        }
        let o = self.rng.random_range(0..100);
        self.indent(level);
        writeln!(self.out, "emit {o};").unwrap();
    }
}
