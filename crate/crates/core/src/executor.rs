//! Instrumented execution and the two coverage maps.
//!
//! A run walks the CFG once per input symbol. Every visit of an instrumented
//! block `b` bumps the branch-pair slot `(prev_tag >> 1) ^ tag(b)` and sets
//! `prev_tag = tag(b)`; `prev_tag` starts at the entry tag and carries over
//! between steps. After every completed step the valuation of all globals is
//! hashed into the state map.

use std::collections::HashSet;

use thiserror::Error;

use crate::cfg::{BlockId, Cfg, ExitStatus};
use crate::frontend::{Alphabet, Program};
use crate::instrument::InstrumentationPlan;

pub const MAP_SIZE: usize = 1 << 16;
pub const DEFAULT_STATE_KEY_CAP: usize = 1_000_000;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over the little-endian encodings of `values`.
pub fn state_key(values: &[i64]) -> u64 {
    let mut hash = FNV_OFFSET;
    for v in values {
        for byte in v.to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(FNV_PRIME);
        }
    }
    hash
}

pub fn state_index(key: u64) -> u16 {
    (key % MAP_SIZE as u64) as u16
}

const fn bucket(count: u8) -> u8 {
    match count {
        0 => 0x00,
        1 => 0x01,
        2 => 0x02,
        3 => 0x04,
        4..=7 => 0x08,
        8..=15 => 0x10,
        16..=31 => 0x20,
        32..=127 => 0x40,
        128..=255 => 0x80,
    }
}

const BUCKETS: [u8; 256] = {
    let mut table = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        table[i] = bucket(i as u8);
        i += 1;
    }
    table
};

/// Maps a raw hit count to its logarithmic bucket bit.
#[inline]
pub fn classify_counts(raw: u8) -> u8 {
    BUCKETS[raw as usize]
}

/// Per-run branch-pair hit counts, stored sparsely as `(index, count)` in
/// ascending index order. Counts saturate at 255.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LocalBranchMap {
    entries: Vec<(u16, u8)>,
}

impl LocalBranchMap {
    fn from_raw_hits(mut hits: Vec<u16>) -> Self {
        hits.sort_unstable();
        let mut entries: Vec<(u16, u8)> = Vec::new();
        for idx in hits {
            match entries.last_mut() {
                Some((last, count)) if *last == idx => *count = count.saturating_add(1),
                _ => entries.push((idx, 1)),
            }
        }
        LocalBranchMap { entries }
    }

    pub fn get(&self, idx: u16) -> u8 {
        self.entries
            .binary_search_by_key(&idx, |e| e.0)
            .map_or(0, |i| self.entries[i].1)
    }

    pub fn entries(&self) -> &[(u16, u8)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Bucketed view `(index, bucket bit)`; equality of two of these is the
    /// coverage signature trimming preserves.
    pub fn classified(&self) -> Vec<(u16, u8)> {
        self.entries.iter().map(|&(i, c)| (i, classify_counts(c))).collect()
    }

    pub fn to_dense(&self) -> Vec<u8> {
        let mut dense = vec![0u8; MAP_SIZE];
        for &(i, c) in &self.entries {
            dense[i as usize] = c;
        }
        dense
    }
}

/// Accumulated branch-pair buckets over a campaign. Bits are only ever set.
#[derive(Clone)]
pub struct BranchMap {
    bits: Box<[u8]>,
    popcount: usize,
}

impl Default for BranchMap {
    fn default() -> Self {
        BranchMap { bits: vec![0u8; MAP_SIZE].into_boxed_slice(), popcount: 0 }
    }
}

impl std::fmt::Debug for BranchMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BranchMap").field("bits_set", &self.popcount).finish()
    }
}

impl BranchMap {
    pub fn get(&self, idx: u16) -> u8 {
        self.bits[idx as usize]
    }

    pub fn bits_set(&self) -> usize {
        self.popcount
    }

    /// Would merging `local` set a new bit?
    pub fn has_new_bits(&self, local: &LocalBranchMap) -> bool {
        local.entries.iter().any(|&(i, c)| classify_counts(c) & !self.bits[i as usize] != 0)
    }

    pub fn merge(&mut self, local: &LocalBranchMap) -> bool {
        let mut novel = false;
        for &(i, c) in &local.entries {
            let slot = &mut self.bits[i as usize];
            let fresh = classify_counts(c) & !*slot;
            if fresh != 0 {
                *slot |= fresh;
                self.popcount += fresh.count_ones() as usize;
                novel = true;
            }
        }
        novel
    }
}

impl PartialEq for BranchMap {
    fn eq(&self, other: &Self) -> bool {
        self.bits == other.bits
    }
}

/// 65,536-bit visited-state bitmap plus a capped exact key set for statistics.
#[derive(Clone)]
pub struct StateMap {
    bits: Box<[u64]>,
    popcount: usize,
    keys: HashSet<u64>,
    key_cap: usize,
}

impl Default for StateMap {
    fn default() -> Self {
        Self::with_key_cap(DEFAULT_STATE_KEY_CAP)
    }
}

impl std::fmt::Debug for StateMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StateMap")
            .field("bits_set", &self.popcount)
            .field("distinct_keys", &self.keys.len())
            .finish()
    }
}

impl StateMap {
    pub fn with_key_cap(key_cap: usize) -> Self {
        StateMap { bits: vec![0u64; MAP_SIZE / 64].into_boxed_slice(), popcount: 0, keys: HashSet::new(), key_cap }
    }

    pub fn is_set(&self, idx: u16) -> bool {
        self.bits[idx as usize / 64] & (1 << (idx % 64)) != 0
    }

    pub fn bits_set(&self) -> usize {
        self.popcount
    }

    /// Exact distinct keys seen, up to the cap.
    pub fn distinct_keys(&self) -> usize {
        self.keys.len()
    }

    pub fn has_new_bits(&self, states: &[StateVisit]) -> bool {
        states.iter().any(|s| !self.is_set(s.index))
    }

    pub fn merge(&mut self, states: &[StateVisit]) -> bool {
        let mut novel = false;
        for s in states {
            let word = &mut self.bits[s.index as usize / 64];
            let bit = 1u64 << (s.index % 64);
            if *word & bit == 0 {
                *word |= bit;
                self.popcount += 1;
                novel = true;
            }
            if self.keys.len() < self.key_cap {
                self.keys.insert(s.key);
            }
        }
        novel
    }
}

impl PartialEq for StateMap {
    fn eq(&self, other: &Self) -> bool {
        self.bits == other.bits
    }
}

/// Campaign-wide coverage: branch-pair buckets and visited states.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoverageMaps {
    pub branch: BranchMap,
    pub state: StateMap,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct NoveltyReport {
    pub new_branch_bits: bool,
    pub new_state_bits: bool,
}

impl NoveltyReport {
    pub fn any(&self) -> bool {
        self.new_branch_bits || self.new_state_bits
    }
}

impl CoverageMaps {
    /// ORs the run's classified branch buckets and state bits into the maps
    /// and reports which maps gained a bit.
    pub fn merge_and_report(&mut self, result: &ExecResult) -> NoveltyReport {
        NoveltyReport {
            new_branch_bits: self.branch.merge(&result.branch_hits),
            new_state_bits: self.state.merge(&result.states),
        }
    }

    pub fn peek_novelty(&self, result: &ExecResult) -> NoveltyReport {
        NoveltyReport {
            new_branch_bits: self.branch.has_new_bits(&result.branch_hits),
            new_state_bits: self.state.has_new_bits(&result.states),
        }
    }
}

pub fn merge_and_report(maps: &mut CoverageMaps, result: &ExecResult) -> NoveltyReport {
    maps.merge_and_report(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Ok,
    Error(i64),
    InvalidInput,
    StepLimit,
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunStatus::Ok => f.write_str("ok"),
            RunStatus::Error(k) => write!(f, "error({k})"),
            RunStatus::InvalidInput => f.write_str("invalid_input"),
            RunStatus::StepLimit => f.write_str("step_limit"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateVisit {
    pub index: u16,
    pub key: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecResult {
    pub status: RunStatus,
    /// Symbols consumed, including the one whose step ended the run.
    pub steps: usize,
    pub branch_hits: LocalBranchMap,
    /// One entry per completed step, in order.
    pub states: Vec<StateVisit>,
    pub outputs: Vec<i64>,
    pub final_globals: Vec<i64>,
}

impl ExecResult {
    /// Sorted, deduplicated state indices visited by the run.
    pub fn state_indices(&self) -> Vec<u16> {
        let mut idx: Vec<u16> = self.states.iter().map(|s| s.index).collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }
}

/// Outcome of a single uninstrumented step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepResult {
    Completed,
    Error(i64),
    Rejected,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExecError {
    #[error("cfg has no block tags; assign tags before execution")]
    Untagged,
    #[error("plan names block {0}, which is not in the cfg")]
    UnknownBlock(BlockId),
}

/// A program ready to execute under an instrumentation plan.
#[derive(Debug, Clone)]
pub struct Executor {
    alphabet: Alphabet,
    init: Vec<i64>,
    cfg: Cfg,
    tags: Vec<u16>,
    instrumented: Vec<bool>,
}

impl Executor {
    pub fn new(program: &Program, cfg: &Cfg, plan: &InstrumentationPlan) -> Result<Self, ExecError> {
        let tags = cfg.tags().ok_or(ExecError::Untagged)?.to_vec();
        let mut instrumented = vec![false; cfg.len()];
        for &b in &plan.instrumented {
            *instrumented.get_mut(b).ok_or(ExecError::UnknownBlock(b))? = true;
        }
        Ok(Executor { alphabet: program.alphabet, init: program.initial_state(), cfg: cfg.clone(), tags, instrumented })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn initial_state(&self) -> &[i64] {
        &self.init
    }

    pub fn cfg(&self) -> &Cfg {
        &self.cfg
    }

    /// Executes one step without instrumentation. Symbols outside the
    /// alphabet are rejected before the body runs.
    pub fn step(&self, globals: &mut [i64], symbol: i64, outputs: &mut Vec<i64>) -> StepResult {
        if !self.alphabet.contains(symbol) {
            return StepResult::Rejected;
        }
        to_step_result(self.cfg.walk(globals, symbol, outputs, |_| {}))
    }

    pub fn run(&self, input: &[i64], max_steps: usize) -> ExecResult {
        self.run_observed(input, max_steps, |_| {})
    }

    /// Like [`Executor::run`], also reporting every block visited in order.
    pub fn run_observed(&self, input: &[i64], max_steps: usize, mut observe: impl FnMut(BlockId)) -> ExecResult {
        let mut globals = self.init.clone();
        let mut outputs = Vec::new();
        let mut states = Vec::new();
        let mut hits = Vec::new();
        let mut prev_tag = self.tags[self.cfg.entry()];
        let mut status = RunStatus::Ok;
        let mut steps = 0;
        for (i, &symbol) in input.iter().enumerate() {
            if i >= max_steps {
                status = RunStatus::StepLimit;
                break;
            }
            steps += 1;
            if !self.alphabet.contains(symbol) {
                status = RunStatus::InvalidInput;
                break;
            }
            let exit = self.cfg.walk(&mut globals, symbol, &mut outputs, |b| {
                observe(b);
                if self.instrumented[b] {
                    let tag = self.tags[b];
                    hits.push((prev_tag >> 1) ^ tag);
                    prev_tag = tag;
                }
            });
            match exit {
                ExitStatus::Ok => {
                    let key = state_key(&globals);
                    states.push(StateVisit { index: state_index(key), key });
                }
                ExitStatus::Error(k) => {
                    status = RunStatus::Error(k);
                    break;
                }
                ExitStatus::InvalidInput => {
                    status = RunStatus::InvalidInput;
                    break;
                }
            }
        }
        ExecResult {
            status,
            steps,
            branch_hits: LocalBranchMap::from_raw_hits(hits),
            states,
            outputs,
            final_globals: globals,
        }
    }
}

fn to_step_result(exit: ExitStatus) -> StepResult {
    match exit {
        ExitStatus::Ok => StepResult::Completed,
        ExitStatus::Error(k) => StepResult::Error(k),
        ExitStatus::InvalidInput => StepResult::Rejected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::{assign_block_tags, build_cfg};
    use crate::frontend::parse_program;
    use crate::instrument::{project_trace, select_instrumentation};

    const EXAMPLE: &str =
        "inputs 1..5; var a = 1; step(in){ if (in == 3) { a = 2; emit 20; } else { reject; } }";

    fn executor(src: &str) -> Executor {
        let p = parse_program(src).unwrap();
        let cfg = assign_block_tags(build_cfg(&p), 11).unwrap();
        let plan = select_instrumentation(&cfg).unwrap();
        Executor::new(&p, &cfg, &plan).unwrap()
    }

    /// Byte-at-a-time FNV-1a written independently of `state_key`.
    fn reference_fnv1a(bytes: &[u8]) -> u64 {
        bytes.iter().fold(14695981039346656037u64, |h, &b| (h ^ u64::from(b)).wrapping_mul(1099511628211))
    }

    #[test]
    fn classify_table() {
        let expected = [
            (0u8, 0x00u8),
            (1, 0x01),
            (2, 0x02),
            (3, 0x04),
            (4, 0x08),
            (7, 0x08),
            (8, 0x10),
            (15, 0x10),
            (16, 0x20),
            (31, 0x20),
            (32, 0x40),
            (127, 0x40),
            (128, 0x80),
            (255, 0x80),
        ];
        for (raw, bits) in expected {
            assert_eq!(classify_counts(raw), bits, "raw {raw}");
        }
        assert_eq!(classify_counts(5), 0x08);
        assert_eq!(classify_counts(200), 0x80);
    }

    #[test]
    fn state_key_constants() {
        assert_eq!(state_key(&[]), 0xcbf29ce484222325);
        let mut bytes = 1i64.to_le_bytes().to_vec();
        bytes.extend(0i64.to_le_bytes());
        assert_eq!(state_key(&[1, 0]), reference_fnv1a(&bytes));
        assert_eq!(state_key(&[1, 0]), 0x3922_09f1_4dea_4c24);
        assert_eq!(state_key(&[7, 7]), state_key(&[7, 7]));
        assert_ne!(state_key(&[1, 0]), state_key(&[0, 1]));
    }

    #[test]
    fn example_run() {
        let ex = executor(EXAMPLE);
        let r = ex.run(&[3], 100);
        assert_eq!(r.status, RunStatus::Ok);
        assert_eq!(r.final_globals, vec![2]);
        assert_eq!(r.outputs, vec![20]);
        assert_eq!(r.states.len(), 1);
        assert_eq!(r.states[0].key, state_key(&[2]));
    }

    #[test]
    fn out_of_alphabet_symbol() {
        let r = executor(EXAMPLE).run(&[9], 100);
        assert_eq!((r.status, r.steps), (RunStatus::InvalidInput, 1));
        assert!(r.states.is_empty());
        assert!(r.branch_hits.is_empty());
    }

    #[test]
    fn empty_input() {
        let r = executor(EXAMPLE).run(&[], 100);
        assert_eq!((r.status, r.steps), (RunStatus::Ok, 0));
        assert!(r.branch_hits.is_empty());
    }

    #[test]
    fn reject_and_step_limit() {
        let ex = executor(EXAMPLE);
        assert_eq!(ex.run(&[3, 1, 3], 100).status, RunStatus::InvalidInput);
        let r = ex.run(&[3, 3, 3], 2);
        assert_eq!((r.status, r.steps, r.states.len()), (RunStatus::StepLimit, 2, 2));
    }

    #[test]
    fn error_status_and_replay() {
        let ex = executor("inputs 1..3; var a = 0; step(in){ if (a == 1 && in == 2) { error 5; } if (in == 1) { a = 1; } }");
        let r = ex.run(&[1, 2, 3], 10);
        assert_eq!((r.status, r.steps), (RunStatus::Error(5), 2));
        assert_eq!(ex.run(&[1, 2, 3], 10), r);
    }

    #[test]
    fn branch_index_formula() {
        let p = parse_program(EXAMPLE).unwrap();
        let cfg = assign_block_tags(build_cfg(&p), 3).unwrap();
        let plan = InstrumentationPlan::all_blocks(&cfg);
        let ex = Executor::new(&p, &cfg, &plan).unwrap();
        let t = cfg.tags().unwrap();
        // [3, 3]: blocks 0,1,3 twice; prev_tag carries over between steps.
        let r = ex.run(&[3, 3], 10);
        let mut expected = vec![
            (t[0] >> 1) ^ t[0],
            (t[0] >> 1) ^ t[1],
            (t[1] >> 1) ^ t[3],
            (t[3] >> 1) ^ t[0],
            (t[0] >> 1) ^ t[1],
            (t[1] >> 1) ^ t[3],
        ];
        expected.sort_unstable();
        let mut got = Vec::new();
        for &(i, c) in r.branch_hits.entries() {
            got.extend(std::iter::repeat_n(i, c as usize));
        }
        assert_eq!(got, expected);
    }

    #[test]
    fn instrumented_visits_match_projection() {
        let src = "inputs 1..4; var a = 0; step(in){ if (in == 1) { a = a + 1; } else if (in == 2) { if (a > 1) { emit 3; } } else { a = 0; } }";
        let p = parse_program(src).unwrap();
        let cfg = assign_block_tags(build_cfg(&p), 3).unwrap();
        let plan = select_instrumentation(&cfg).unwrap();
        let ex = Executor::new(&p, &cfg, &plan).unwrap();
        let input = [1, 2, 1, 2, 4, 3, 2];
        let mut trace = Vec::new();
        let r = ex.run_observed(&input, 100, |b| trace.push(b));
        let projected = project_trace(&trace, &plan.instrumented);

        // Recompute hit indices from the projected trace alone.
        let t = cfg.tags().unwrap();
        let mut prev = t[cfg.entry()];
        let mut hits: Vec<u16> = projected
            .iter()
            .map(|&b| {
                let idx = (prev >> 1) ^ t[b];
                prev = t[b];
                idx
            })
            .collect();
        hits.sort_unstable();
        assert_eq!(LocalBranchMap::from_raw_hits(hits), r.branch_hits);
    }

    #[test]
    fn saturating_counts() {
        let ex = executor("inputs 1..1; step(in){}");
        let r = ex.run(&vec![1; 300], 1000);
        assert!(r.branch_hits.entries().iter().any(|&(_, c)| c == 255));
    }

    #[test]
    fn merge_novelty() {
        let ex = executor(EXAMPLE);
        let mut maps = CoverageMaps::default();
        let r = ex.run(&[3], 10);
        let first = maps.merge_and_report(&r);
        assert!(first.new_branch_bits && first.new_state_bits);
        let again = maps.merge_and_report(&r);
        assert_eq!(again, NoveltyReport::default());
    }

    #[test]
    fn state_only_novelty() {
        // Both runs take the same single path; only the stored value differs.
        let ex = executor("inputs 1..3; var a = 0; step(in){ a = in; }");
        let mut maps = CoverageMaps::default();
        maps.merge_and_report(&ex.run(&[1], 10));
        let r = ex.run(&[2], 10);
        assert_eq!(
            maps.merge_and_report(&r),
            NoveltyReport { new_branch_bits: false, new_state_bits: true }
        );
    }

    #[test]
    fn untagged_cfg_is_refused() {
        let p = parse_program(EXAMPLE).unwrap();
        let cfg = build_cfg(&p);
        let plan = InstrumentationPlan::all_blocks(&cfg);
        assert_eq!(Executor::new(&p, &cfg, &plan).unwrap_err(), ExecError::Untagged);
    }
}
