//! Lowering of the step body into a basic-block DAG.
//!
//! Every `if` materializes both arm blocks and, when at least one arm falls
//! through, an explicit join block, so every branch-pair is a distinct edge.
//! Blocks are numbered in creation order and every edge goes from a lower id
//! to a higher one.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::frontend::{expr_to_string, Expr, Program, Stmt, StepOutcome};

pub type BlockId = usize;

/// Number of distinct 16-bit tags, and so the block capacity of a tagged CFG.
pub const TAG_SPACE: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExitStatus {
    Ok,
    Error(i64),
    InvalidInput,
}

impl From<ExitStatus> for StepOutcome {
    fn from(status: ExitStatus) -> Self {
        match status {
            ExitStatus::Ok => StepOutcome::Completed,
            ExitStatus::Error(k) => StepOutcome::Error(k),
            ExitStatus::InvalidInput => StepOutcome::Rejected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Assign(usize, Expr),
    Emit(i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Terminator {
    Jump(BlockId),
    Branch { cond: Expr, then_to: BlockId, else_to: BlockId },
    Exit(ExitStatus),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicBlock {
    pub id: BlockId,
    pub ops: Vec<Op>,
    pub term: Terminator,
}

impl BasicBlock {
    pub fn successors(&self) -> impl Iterator<Item = BlockId> {
        let (a, b) = match self.term {
            Terminator::Jump(t) => (Some(t), None),
            Terminator::Branch { then_to, else_to, .. } => (Some(then_to), Some(else_to)),
            Terminator::Exit(_) => (None, None),
        };
        a.into_iter().chain(b)
    }

    pub fn is_exit(&self) -> bool {
        matches!(self.term, Terminator::Exit(_))
    }

    pub fn is_branch(&self) -> bool {
        matches!(self.term, Terminator::Branch { .. })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CfgError {
    #[error("graph has {blocks} blocks; at most {TAG_SPACE} can carry distinct 16-bit tags")]
    Capacity { blocks: usize },
    #[error("malformed graph: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    blocks: Vec<BasicBlock>,
    entry: BlockId,
    preds: Vec<Vec<BlockId>>,
    tags: Option<Vec<u16>>,
}

impl Cfg {
    /// Builds a graph from explicit blocks. Block `i` must have id `i`, all
    /// targets must exist, and the graph must be an acyclic graph in which
    /// every block is reachable from `entry`.
    pub fn from_blocks(blocks: Vec<BasicBlock>, entry: BlockId) -> Result<Self, CfgError> {
        let n = blocks.len();
        if entry >= n {
            return Err(CfgError::Malformed(format!("entry {entry} out of range")));
        }
        let mut preds = vec![Vec::new(); n];
        for (i, b) in blocks.iter().enumerate() {
            if b.id != i {
                return Err(CfgError::Malformed(format!("block at index {i} has id {}", b.id)));
            }
            if let Terminator::Branch { then_to, else_to, .. } = b.term {
                if then_to == else_to {
                    return Err(CfgError::Malformed(format!("block {i} branches twice to {then_to}")));
                }
            }
            for s in b.successors() {
                if s >= n {
                    return Err(CfgError::Malformed(format!("edge {i} -> {s} leaves the graph")));
                }
                preds[s].push(i);
            }
        }
        let cfg = Cfg { blocks, entry, preds, tags: None };
        if cfg.topological_order().is_none() {
            return Err(CfgError::Malformed("graph has a cycle".into()));
        }
        let mut seen = vec![false; n];
        let mut stack = vec![entry];
        while let Some(b) = stack.pop() {
            if !std::mem::replace(&mut seen[b], true) {
                stack.extend(cfg.blocks[b].successors());
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return Err(CfgError::Malformed(format!("block {orphan} unreachable from entry")));
        }
        Ok(cfg)
    }

    pub fn blocks(&self) -> &[BasicBlock] {
        &self.blocks
    }

    pub fn block(&self, id: BlockId) -> &BasicBlock {
        &self.blocks[id]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn entry(&self) -> BlockId {
        self.entry
    }

    pub fn successors(&self, id: BlockId) -> impl Iterator<Item = BlockId> {
        self.blocks[id].successors()
    }

    pub fn predecessors(&self, id: BlockId) -> &[BlockId] {
        &self.preds[id]
    }

    pub fn in_degree(&self, id: BlockId) -> usize {
        self.preds[id].len()
    }

    pub fn edges(&self) -> BTreeSet<(BlockId, BlockId)> {
        self.blocks.iter().flat_map(|b| b.successors().map(move |s| (b.id, s))).collect()
    }

    pub fn tags(&self) -> Option<&[u16]> {
        self.tags.as_deref()
    }

    /// Kahn's algorithm; `None` iff the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<BlockId>> {
        let mut indeg: Vec<usize> = self.preds.iter().map(Vec::len).collect();
        let mut ready: Vec<BlockId> = (0..self.len()).filter(|&b| indeg[b] == 0).collect();
        ready.reverse();
        let mut order = Vec::with_capacity(self.len());
        while let Some(b) = ready.pop() {
            order.push(b);
            for s in self.blocks[b].successors() {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    ready.push(s);
                }
            }
        }
        (order.len() == self.len()).then_some(order)
    }

    /// Number of entry-to-exit paths, saturating at `u64::MAX`.
    pub fn path_count(&self) -> u64 {
        let order = self.topological_order().expect("cfg is acyclic");
        let mut count = vec![0u64; self.len()];
        for &b in order.iter().rev() {
            let block = &self.blocks[b];
            count[b] = if block.is_exit() {
                1
            } else {
                block.successors().fold(0u64, |acc, s| acc.saturating_add(count[s]))
            };
        }
        count[self.entry]
    }

    /// Calls `f` on every entry-to-exit path in depth-first, then-first order.
    pub fn for_each_path(&self, mut f: impl FnMut(&[BlockId])) {
        let mut path = vec![self.entry];
        self.paths_from(&mut path, &mut f);
    }

    fn paths_from(&self, path: &mut Vec<BlockId>, f: &mut impl FnMut(&[BlockId])) {
        let last = *path.last().unwrap();
        let block = &self.blocks[last];
        if block.is_exit() {
            f(path);
            return;
        }
        for s in block.successors() {
            path.push(s);
            self.paths_from(path, f);
            path.pop();
        }
    }

    pub fn paths(&self) -> Vec<Vec<BlockId>> {
        let mut out = Vec::new();
        self.for_each_path(|p| out.push(p.to_vec()));
        out
    }

    /// Executes one step by walking blocks from the entry, calling `visit` on
    /// each block before its operations run.
    #[inline]
    pub fn walk(
        &self,
        globals: &mut [i64],
        input: i64,
        outputs: &mut Vec<i64>,
        mut visit: impl FnMut(BlockId),
    ) -> ExitStatus {
        let mut at = self.entry;
        loop {
            visit(at);
            let block = &self.blocks[at];
            for op in &block.ops {
                match op {
                    Op::Assign(g, e) => globals[*g] = e.eval(globals, input),
                    Op::Emit(v) => outputs.push(*v),
                }
            }
            match &block.term {
                Terminator::Jump(t) => at = *t,
                Terminator::Branch { cond, then_to, else_to } => {
                    at = if cond.eval(globals, input) != 0 { *then_to } else { *else_to };
                }
                Terminator::Exit(status) => return *status,
            }
        }
    }

    /// Line-oriented dump: `block <id> [tag] : stmt…` then `edge <src> <dst>`.
    pub fn dump(&self, program: &Program) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            match self.tags() {
                Some(tags) => write!(out, "block {} [{}] :", b.id, tags[b.id]).unwrap(),
                None => write!(out, "block {} [-] :", b.id).unwrap(),
            }
            for op in &b.ops {
                match op {
                    Op::Assign(g, e) => {
                        write!(out, " {} = {};", program.globals[*g].name, expr_to_string(program, e))
                            .unwrap()
                    }
                    Op::Emit(v) => write!(out, " emit {v};").unwrap(),
                }
            }
            match &b.term {
                Terminator::Jump(t) => write!(out, " goto {t}").unwrap(),
                Terminator::Branch { cond, then_to, else_to } => {
                    write!(out, " if {} then {then_to} else {else_to}", expr_to_string(program, cond))
                        .unwrap()
                }
                Terminator::Exit(ExitStatus::Ok) => out.push_str(" exit ok"),
                Terminator::Exit(ExitStatus::Error(k)) => write!(out, " exit error {k}").unwrap(),
                Terminator::Exit(ExitStatus::InvalidInput) => out.push_str(" exit invalid_input"),
            }
            out.push('\n');
        }
        for (src, dst) in self.edges() {
            writeln!(out, "edge {src} {dst}").unwrap();
        }
        out
    }
}

/// Lowers a validated program's step body into a CFG without tags.
pub fn build_cfg(program: &Program) -> Cfg {
    let mut builder = Builder { blocks: Vec::new() };
    let entry = builder.new_block();
    if let Some(end) = builder.lower(&program.body, entry) {
        let has_preds = builder.blocks.iter().any(|b| b.term_targets(end));
        if end != entry && builder.blocks[end].ops.is_empty() && has_preds {
            builder.blocks[end].term = Some(Terminator::Exit(ExitStatus::Ok));
        } else {
            let exit = builder.new_block();
            builder.blocks[end].term = Some(Terminator::Jump(exit));
            builder.blocks[exit].term = Some(Terminator::Exit(ExitStatus::Ok));
        }
    }
    let blocks = builder
        .blocks
        .into_iter()
        .enumerate()
        .map(|(id, b)| BasicBlock { id, ops: b.ops, term: b.term.expect("every block terminated") })
        .collect();
    Cfg::from_blocks(blocks, entry).expect("lowering yields a well-formed DAG")
}

pub fn enumerate_branch_pairs(cfg: &Cfg) -> BTreeSet<(BlockId, BlockId)> {
    cfg.edges()
}

/// Draws one distinct 16-bit tag per block from a PRNG seeded with `seed`.
pub fn assign_block_tags(mut cfg: Cfg, seed: u64) -> Result<Cfg, CfgError> {
    if cfg.len() > TAG_SPACE {
        return Err(CfgError::Capacity { blocks: cfg.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = HashSet::with_capacity(cfg.len());
    let tags = (0..cfg.len())
        .map(|_| loop {
            let tag: u16 = rng.random();
            if used.insert(tag) {
                break tag;
            }
        })
        .collect();
    cfg.tags = Some(tags);
    Ok(cfg)
}

struct PendingBlock {
    ops: Vec<Op>,
    term: Option<Terminator>,
}

impl PendingBlock {
    fn term_targets(&self, id: BlockId) -> bool {
        match &self.term {
            Some(Terminator::Jump(t)) => *t == id,
            Some(Terminator::Branch { then_to, else_to, .. }) => *then_to == id || *else_to == id,
            _ => false,
        }
    }
}

struct Builder {
    blocks: Vec<PendingBlock>,
}

impl Builder {
    fn new_block(&mut self) -> BlockId {
        self.blocks.push(PendingBlock { ops: Vec::new(), term: None });
        self.blocks.len() - 1
    }

    /// Lowers `body` starting in block `cur`. Returns the open block control
    /// falls out of, or `None` when every path terminated.
    fn lower(&mut self, body: &[Stmt], mut cur: BlockId) -> Option<BlockId> {
        for stmt in body {
            match stmt {
                Stmt::Assign { target, value } => {
                    self.blocks[cur].ops.push(Op::Assign(*target, value.clone()))
                }
                Stmt::Emit(v) => self.blocks[cur].ops.push(Op::Emit(*v)),
                Stmt::Error(k) => {
                    self.blocks[cur].term = Some(Terminator::Exit(ExitStatus::Error(*k)));
                    return None;
                }
                Stmt::Reject => {
                    self.blocks[cur].term = Some(Terminator::Exit(ExitStatus::InvalidInput));
                    return None;
                }
                Stmt::If { cond, then_body, else_body } => {
                    let then_to = self.new_block();
                    let else_to = self.new_block();
                    self.blocks[cur].term = Some(Terminator::Branch { cond: cond.clone(), then_to, else_to });
                    let then_end = self.lower(then_body, then_to);
                    let else_end = self.lower(else_body.as_deref().unwrap_or(&[]), else_to);
                    if then_end.is_none() && else_end.is_none() {
                        return None;
                    }
                    let join = self.new_block();
                    for end in [then_end, else_end].into_iter().flatten() {
                        self.blocks[end].term = Some(Terminator::Jump(join));
                    }
                    cur = join;
                }
            }
        }
        Some(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{interpret_step, parse_program};
    use rand::Rng;

    fn cfg_of(body: &str) -> (Program, Cfg) {
        let p = parse_program(&format!("inputs 1..5; var a = 0; var b = 0; step(in){body}")).unwrap();
        let g = build_cfg(&p);
        (p, g)
    }

    /// Full binary if/else cascade of the given depth (2^depth - 1 conditionals).
    fn cascade(depth: usize, counter: &mut i64) -> String {
        if depth == 0 {
            *counter += 1;
            return format!("emit {};", *counter);
        }
        let c = *counter % 5 + 1;
        let then = cascade(depth - 1, counter);
        let els = cascade(depth - 1, counter);
        format!("if (in == {c}) {{ {then} }} else {{ {els} }}")
    }

    #[test]
    fn straight_line() {
        let (_, g) = cfg_of("{ a = 1; b = 2; }");
        assert_eq!(g.len(), 2);
        assert_eq!(g.block(0).ops.len(), 2);
        assert_eq!(g.block(1).term, Terminator::Exit(ExitStatus::Ok));
        assert_eq!(enumerate_branch_pairs(&g).len(), 1);
    }

    #[test]
    fn empty_body_has_entry_and_exit() {
        let (_, g) = cfg_of("{}");
        assert_eq!((g.len(), g.edges().len()), (2, 1));
    }

    #[test]
    fn diamond() {
        let (_, g) = cfg_of("{ if (in == 3) { a = 2; } else { a = 1; } }");
        assert_eq!(g.len(), 4);
        assert!(g.block(0).is_branch());
        assert_eq!(g.block(3).term, Terminator::Exit(ExitStatus::Ok));
        assert_eq!(
            enumerate_branch_pairs(&g),
            BTreeSet::from([(0, 1), (0, 2), (1, 3), (2, 3)])
        );
    }

    #[test]
    fn chain_of_blocks_has_n_minus_one_pairs() {
        assert_eq!(enumerate_branch_pairs(&chain(6)).len(), 5);
    }

    #[test]
    fn depth_three_cascade() {
        let mut counter = 0;
        let body = format!("{{ {} }}", cascade(3, &mut counter));
        let (_, g) = cfg_of(&body);
        let branches = g.blocks().iter().filter(|b| b.is_branch()).count();
        assert_eq!(branches, 7);

        // Oracle: explicit DFS enumeration, independent of the DP path count.
        let mut stack = vec![(g.entry(), 0usize)];
        let mut paths = 0;
        let mut edges = BTreeSet::new();
        while let Some((b, depth)) = stack.pop() {
            assert!(depth <= g.len());
            let succ: Vec<_> = g.successors(b).collect();
            if succ.is_empty() {
                paths += 1;
            }
            for s in succ {
                edges.insert((b, s));
                stack.push((s, depth + 1));
            }
        }
        assert_eq!(paths, 8);
        assert_eq!(g.path_count(), 8);
        assert_eq!(g.paths().len(), 8);
        // 2 edges out of each conditional plus 2 into each of its joins.
        assert_eq!(edges.len(), 2 * 7 + 2 * 7);
        assert_eq!(enumerate_branch_pairs(&g), edges);
    }

    #[test]
    fn error_and_reject_arms_terminate() {
        let (_, g) = cfg_of("{ if (in == 1) { error 4; } else { if (in == 2) { reject; } } a = 1; }");
        let exits: Vec<_> = g.blocks().iter().filter(|b| b.is_exit()).map(|b| b.term.clone()).collect();
        assert!(exits.contains(&Terminator::Exit(ExitStatus::Error(4))));
        assert!(exits.contains(&Terminator::Exit(ExitStatus::InvalidInput)));
        assert!(exits.contains(&Terminator::Exit(ExitStatus::Ok)));
        assert_eq!(g.path_count(), 3);
    }

    #[test]
    fn both_arms_terminating_cut_the_rest() {
        let (_, g) = cfg_of("{ if (in == 1) { error 1; } else { reject; } a = 5; }");
        assert_eq!(g.len(), 3);
        assert!(g.blocks().iter().all(|b| b.ops.is_empty()));
    }

    #[test]
    fn malformed_graphs_are_rejected() {
        let cyc = vec![
            BasicBlock { id: 0, ops: vec![], term: Terminator::Jump(1) },
            BasicBlock { id: 1, ops: vec![], term: Terminator::Jump(0) },
        ];
        assert!(Cfg::from_blocks(cyc, 0).is_err());
        let dangling = vec![BasicBlock { id: 0, ops: vec![], term: Terminator::Jump(3) }];
        assert!(Cfg::from_blocks(dangling, 0).is_err());
    }

    #[test]
    fn tags_are_deterministic_and_distinct() {
        let (_, g) = cfg_of("{ if (in == 3) { a = 2; } else { a = 1; } }");
        let t1 = assign_block_tags(g.clone(), 7).unwrap();
        let t2 = assign_block_tags(g.clone(), 7).unwrap();
        assert_eq!(t1.tags(), t2.tags());
        let tags: HashSet<_> = t1.tags().unwrap().iter().collect();
        assert_eq!(tags.len(), g.len());
        let (_, small) = cfg_of("{}");
        let small = assign_block_tags(small, 123).unwrap();
        assert_ne!(small.tags().unwrap()[0], small.tags().unwrap()[1]);
    }

    fn chain(n: usize) -> Cfg {
        let blocks = (0..n)
            .map(|id| BasicBlock {
                id,
                ops: vec![],
                term: if id + 1 < n { Terminator::Jump(id + 1) } else { Terminator::Exit(ExitStatus::Ok) },
            })
            .collect();
        Cfg::from_blocks(blocks, 0).unwrap()
    }

    #[test]
    fn seeds_change_tag_tables() {
        let g = chain(1000);
        let a = assign_block_tags(g.clone(), 1).unwrap();
        let b = assign_block_tags(g, 2).unwrap();
        assert_ne!(a.tags(), b.tags());
        assert_eq!(a.tags().unwrap().iter().collect::<HashSet<_>>().len(), 1000);
    }

    #[test]
    fn tags_spread_over_the_space() {
        let full = assign_block_tags(chain(TAG_SPACE), 3).unwrap();
        let mut seen = vec![false; TAG_SPACE];
        for &t in full.tags().unwrap() {
            assert!(!std::mem::replace(&mut seen[t as usize], true));
        }
        let g = assign_block_tags(chain(4096), 9).unwrap();
        let high = g.tags().unwrap().iter().filter(|&&t| t >= 0x8000).count();
        assert!((1800..2300).contains(&high), "{high}");
    }

    #[test]
    fn capacity_error() {
        let err = assign_block_tags(chain(TAG_SPACE + 1), 0).unwrap_err();
        assert_eq!(err, CfgError::Capacity { blocks: TAG_SPACE + 1 });
    }

    #[test]
    fn walk_matches_ast_interpretation() {
        let mut counter = 0;
        let src = format!(
            "inputs 1..5; var a = 0; var b = 3;
             step(in) {{
                 if (a == 2 && in > 3) {{ error 9; }}
                 {}
                 if (b < a) {{ b = b + in; }} else {{ a = a + 1; b = b - 1; }}
                 if (in == 5) {{ if (a > 6) {{ reject; }} emit 7; }}
             }}",
            cascade(3, &mut counter)
        );
        let p = parse_program(&src).unwrap();
        let g = build_cfg(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let state = vec![rng.random_range(-4..8), rng.random_range(-4..8)];
            let input = rng.random_range(0..7);
            let (mut s1, mut s2) = (state.clone(), state);
            let (mut o1, mut o2) = (Vec::new(), Vec::new());
            let r1 = interpret_step(&p, &mut s1, input, &mut o1);
            let r2: StepOutcome = g.walk(&mut s2, input, &mut o2, |_| {}).into();
            assert_eq!((r1, s1, o1), (r2, s2, o2));
        }
    }

    #[test]
    fn dump_format() {
        let (p, g) = cfg_of("{ if (in == 3) { a = 2; } else { error 1; } }");
        let g = assign_block_tags(g, 0).unwrap();
        let text = g.dump(&p);
        let tags = g.tags().unwrap();
        assert!(text.starts_with(&format!("block 0 [{}] : if (in == 3) then 1 else 2\n", tags[0])));
        assert!(text.contains(&format!("block 1 [{}] : a = 2; goto 3\n", tags[1])));
        assert!(text.contains(&format!("block 2 [{}] : exit error 1\n", tags[2])));
        assert!(text.ends_with("edge 0 1\nedge 0 2\nedge 1 3\n"));
    }
}
