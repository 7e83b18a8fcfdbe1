//! The evolutionary loop.
//!
//! A campaign starts from one single-symbol input per alphabet value plus a
//! few random sequences, then cycles round-robin over its queue. Each entry
//! is trimmed once, then mutated `schedule_energy` times; a candidate joins
//! the queue when it sets any new bit in the branch or state map. The
//! baseline configuration turns off the weighted value pool and all use of
//! the state map, which leaves plain branch-pair coverage fuzzing.

pub mod mutate;
pub mod output;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cfg::{assign_block_tags, build_cfg, Cfg, CfgError};
use crate::executor::{CoverageMaps, ExecError, ExecResult, Executor, NoveltyReport, RunStatus};
use crate::frontend::Program;
use crate::instrument::{select_instrumentation, InstrumentError, InstrumentationPlan};
use crate::interval::{analyze_with, AnalysisConfig, IntervalSummary, DEFAULT_CONST_WEIGHT};

pub use mutate::ValuePool;
pub use output::{format_symbols, parse_symbols, write_campaign, OutputError};

pub const DEFAULT_MAX_LEN: usize = 4096;
pub const SEED_CAP: usize = 256;
const RANDOM_SEEDS: usize = 10;
const RANDOM_SEED_LEN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FuzzConfig {
    pub max_len: usize,
    pub max_steps: usize,
    pub const_weight: u32,
    pub baseline: bool,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            max_len: DEFAULT_MAX_LEN,
            max_steps: DEFAULT_MAX_LEN,
            const_weight: DEFAULT_CONST_WEIGHT,
            baseline: false,
        }
    }
}

impl FuzzConfig {
    pub fn baseline() -> Self {
        FuzzConfig { baseline: true, ..Self::default() }
    }
}

/// Stop conditions. Exec counts exclude the seeding runs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Budget {
    pub max_execs: Option<u64>,
    pub max_seconds: Option<f64>,
}

impl Budget {
    pub fn execs(n: u64) -> Self {
        Budget { max_execs: Some(n), max_seconds: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub id: usize,
    pub input: Vec<i64>,
    pub parent: Option<usize>,
    pub novelty: NoveltyReport,
    /// Ordinal of the run that produced it, counting seeding runs.
    pub exec_index: u64,
    pub is_seed: bool,
    pub trimmed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorRecord {
    pub witness: Vec<i64>,
    pub exec_index: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignStats {
    pub seed: u64,
    pub baseline: bool,
    pub seed_execs: u64,
    /// Runs after seeding: mutated candidates plus trimming runs.
    pub execs: u64,
    pub corpus_size: usize,
    pub branch_bits: usize,
    pub state_bits: usize,
    pub distinct_states: usize,
    pub errors_total: usize,
    pub errors_found: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub stats: CampaignStats,
    pub errors: BTreeMap<i64, ErrorRecord>,
    pub corpus: Vec<TestCase>,
}

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error(transparent)]
    Cfg(#[from] CfgError),
    #[error(transparent)]
    Instrument(#[from] InstrumentError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

pub struct Campaign {
    pub program: Program,
    pub cfg: Cfg,
    pub plan: InstrumentationPlan,
    pub summary: IntervalSummary,
    pub pool: ValuePool,
    pub executor: Executor,
    pub queue: Vec<TestCase>,
    pub maps: CoverageMaps,
    pub errors: BTreeMap<i64, ErrorRecord>,
    pub config: FuzzConfig,
    seed: u64,
    rng: ChaCha8Rng,
    error_universe: BTreeSet<i64>,
    total_execs: u64,
    seed_execs: u64,
    cursor: usize,
    started: Instant,
}

/// Builds the executor (tags seeded by `seed`), runs and merges every seed
/// input, and records errors they hit.
pub fn init_campaign(program: &Program, config: FuzzConfig, seed: u64) -> Result<Campaign, CampaignError> {
    let cfg = assign_block_tags(build_cfg(program), seed)?;
    let plan = select_instrumentation(&cfg)?;
    let summary = analyze_with(program, AnalysisConfig { const_weight: config.const_weight, ..Default::default() });
    let pool = if config.baseline {
        ValuePool::uniform(program.alphabet)
    } else {
        ValuePool::new(&summary.value_pool)
    };
    let executor = Executor::new(program, &cfg, &plan)?;
    let mut c = Campaign {
        program: program.clone(),
        cfg,
        plan,
        summary,
        pool,
        executor,
        queue: Vec::new(),
        maps: CoverageMaps::default(),
        errors: BTreeMap::new(),
        config,
        seed,
        rng: ChaCha8Rng::seed_from_u64(seed),
        error_universe: program.error_ids(),
        total_execs: 0,
        seed_execs: 0,
        cursor: 0,
        started: Instant::now(),
    };
    let mut seeds: Vec<Vec<i64>> = program.alphabet.symbols().take(SEED_CAP).map(|s| vec![s]).collect();
    for _ in 0..RANDOM_SEEDS {
        let len = RANDOM_SEED_LEN.min(config.max_len);
        seeds.push((0..len).map(|_| c.pool.sample(&mut c.rng)).collect());
    }
    for input in seeds {
        let (_, novelty) = c.execute(&input);
        let exec_index = c.total_execs;
        c.queue.push(TestCase {
            id: c.queue.len(),
            input,
            parent: None,
            novelty,
            exec_index,
            is_seed: true,
            trimmed: false,
        });
    }
    c.seed_execs = c.total_execs;
    Ok(c)
}

/// Mutations per scheduling of `t`.
pub fn schedule_energy(t: &TestCase, config: &FuzzConfig) -> u32 {
    let mut e: u32 = 128;
    if t.novelty.new_state_bits && !config.baseline {
        e *= 2;
    }
    if t.input.len() > 512 {
        e /= 2;
    }
    e.clamp(16, 1024)
}

/// What trimming must preserve about a solo run.
#[derive(Debug, PartialEq, Eq)]
struct Signature {
    branches: Vec<(u16, u8)>,
    states: Vec<u16>,
    status: RunStatus,
}

impl Signature {
    fn of(r: &ExecResult) -> Self {
        Signature { branches: r.branch_hits.classified(), states: r.state_indices(), status: r.status }
    }
}

impl Campaign {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Runs after seeding.
    pub fn execs(&self) -> u64 {
        self.total_execs - self.seed_execs
    }

    pub fn error_universe(&self) -> &BTreeSet<i64> {
        &self.error_universe
    }

    /// False for programs without error sites, so they still get fuzzed
    /// for coverage.
    pub fn all_errors_found(&self) -> bool {
        !self.error_universe.is_empty() && self.error_universe.iter().all(|k| self.errors.contains_key(k))
    }

    /// Runs `input`, merges it into the maps and records a new error.
    /// The baseline reports only branch novelty.
    fn execute(&mut self, input: &[i64]) -> (ExecResult, NoveltyReport) {
        let result = self.executor.run(input, self.config.max_steps);
        self.total_execs += 1;
        let mut novelty = self.maps.merge_and_report(&result);
        if self.config.baseline {
            novelty.new_state_bits = false;
        }
        self.record_error(input, &result);
        (result, novelty)
    }

    fn record_error(&mut self, input: &[i64], result: &ExecResult) {
        if let RunStatus::Error(k) = result.status {
            let (exec_index, elapsed) = (self.total_execs, self.started.elapsed());
            self.errors.entry(k).or_insert_with(|| ErrorRecord {
                witness: input[..result.steps].to_vec(),
                exec_index,
                elapsed,
            });
        }
    }

    fn budget_left(&self, budget: &Budget) -> bool {
        if budget.max_execs.is_some_and(|n| self.execs() >= n) {
            return false;
        }
        !budget.max_seconds.is_some_and(|s| self.started.elapsed().as_secs_f64() >= s)
    }

    /// Shrinks queue entry `id` by chunk removal while its signature holds.
    /// Returns false if the budget ran out first; the entry is then left
    /// untouched and will be trimmed on its next turn.
    fn trim_entry(&mut self, id: usize, budget: &Budget) -> bool {
        let original = self.queue[id].input.clone();
        let Some(trimmed) = self.trim_input(&original, budget) else {
            return false;
        };
        let entry = &mut self.queue[id];
        entry.input = trimmed;
        entry.trimmed = true;
        true
    }

    fn trim_input(&mut self, input: &[i64], budget: &Budget) -> Option<Vec<i64>> {
        let run = |c: &mut Campaign, seq: &[i64]| -> Option<Signature> {
            if !c.budget_left(budget) {
                return None;
            }
            c.total_execs += 1;
            Some(Signature::of(&c.executor.run(seq, c.config.max_steps)))
        };
        let target = run(self, input)?;
        let mut seq = input.to_vec();
        let mut chunk = (seq.len() / 16).max(1);
        loop {
            let mut pos = 0;
            while pos < seq.len() && seq.len() > 1 {
                let end = (pos + chunk).min(seq.len());
                let candidate: Vec<i64> = seq[..pos].iter().chain(&seq[end..]).copied().collect();
                if !candidate.is_empty() && run(self, &candidate)? == target {
                    seq = candidate;
                } else {
                    pos += chunk;
                }
            }
            if chunk == 1 {
                break;
            }
            chunk /= 2;
        }
        if seq.len() < input.len() && run(self, &seq)? != target {
            return Some(input.to_vec());
        }
        Some(seq)
    }

    pub fn result(&self) -> CampaignResult {
        CampaignResult {
            stats: CampaignStats {
                seed: self.seed,
                baseline: self.config.baseline,
                seed_execs: self.seed_execs,
                execs: self.execs(),
                corpus_size: self.queue.len(),
                branch_bits: self.maps.branch.bits_set(),
                state_bits: self.maps.state.bits_set(),
                distinct_states: self.maps.state.distinct_keys(),
                errors_total: self.error_universe.len(),
                errors_found: self.errors.len(),
                elapsed: self.started.elapsed(),
            },
            errors: self.errors.clone(),
            corpus: self.queue.clone(),
        }
    }
}

/// Solo trim of `input` under the campaign's executor, outside any budget.
/// The classified branch map, state-index set and status are preserved.
pub fn trim(c: &mut Campaign, t: &TestCase) -> TestCase {
    let input = c.trim_input(&t.input, &Budget::default()).expect("unbounded budget");
    TestCase { input, trimmed: true, ..t.clone() }
}

pub fn fuzz_loop(c: &mut Campaign, budget: Budget) -> CampaignResult {
    'outer: while c.budget_left(&budget) && !c.all_errors_found() && !c.queue.is_empty() {
        let id = c.cursor % c.queue.len();
        c.cursor = id + 1;
        if !c.queue[id].trimmed && !c.trim_entry(id, &budget) {
            break;
        }
        let energy = schedule_energy(&c.queue[id], &c.config);
        for _ in 0..energy {
            if !c.budget_left(&budget) || c.all_errors_found() {
                break 'outer;
            }
            let donor_id = c.rng.random_range(0..c.queue.len());
            let candidate = {
                let (parent, donor) = (&c.queue[id].input, &c.queue[donor_id].input);
                mutate::havoc(parent, donor, &c.pool, c.config.max_len, &mut c.rng)
            };
            let (_, novelty) = c.execute(&candidate);
            if novelty.any() {
                let exec_index = c.total_execs;
                c.queue.push(TestCase {
                    id: c.queue.len(),
                    input: candidate,
                    parent: Some(id),
                    novelty,
                    exec_index,
                    is_seed: false,
                    trimmed: false,
                });
            }
        }
    }
    c.result()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;

    fn campaign(src: &str, config: FuzzConfig, seed: u64) -> Campaign {
        init_campaign(&parse_program(src).unwrap(), config, seed).unwrap()
    }

    const TOGGLE: &str = "inputs 1..5; var a = 0;
        step(in){ if (in == 3) { a = 1; } }";

    #[test]
    fn seeds_cover_alphabet() {
        let c = campaign(TOGGLE, FuzzConfig::default(), 1);
        let singles: Vec<Vec<i64>> = c.queue.iter().filter(|t| t.input.len() == 1).map(|t| t.input.clone()).collect();
        assert_eq!(singles, (1..=5).map(|s| vec![s]).collect::<Vec<_>>());
        assert_eq!(c.queue.len(), 15);
        assert!(c.queue[5..].iter().all(|t| t.input.len() == 20));
        assert_eq!(c.execs(), 0);
    }

    #[test]
    fn seeding_is_deterministic() {
        let a = campaign(TOGGLE, FuzzConfig::default(), 7);
        let b = campaign(TOGGLE, FuzzConfig::default(), 7);
        assert_eq!(a.queue, b.queue);
        assert_eq!(a.maps, b.maps);
    }

    #[test]
    fn seeding_records_single_symbol_error() {
        let mut c = campaign("inputs 1..5; step(in){ if (in == 2) { error 7; } }", FuzzConfig::default(), 0);
        assert_eq!(c.errors[&7].witness, vec![2]);
        let r = fuzz_loop(&mut c, Budget::execs(0));
        assert_eq!(r.stats.execs, 0);
        assert_eq!(r.errors.keys().copied().collect::<Vec<_>>(), vec![7]);
    }

    #[test]
    fn large_alphabet_truncates_single_seeds() {
        let c = campaign("inputs 0..999; step(in){ }", FuzzConfig::default(), 0);
        assert_eq!(c.queue.iter().filter(|t| t.input.len() == 1).count(), SEED_CAP);
        assert_eq!(c.queue[SEED_CAP - 1].input, vec![255]);
    }

    fn case(len: usize, state: bool) -> TestCase {
        TestCase {
            id: 0,
            input: vec![1; len],
            parent: None,
            novelty: NoveltyReport { new_branch_bits: !state, new_state_bits: state },
            exec_index: 0,
            is_seed: false,
            trimmed: false,
        }
    }

    #[test]
    fn energy_table() {
        let full = FuzzConfig::default();
        assert_eq!(schedule_energy(&case(10, false), &full), 128);
        assert_eq!(schedule_energy(&case(10, true), &full), 256);
        assert_eq!(schedule_energy(&case(600, true), &full), 128);
        assert_eq!(schedule_energy(&case(600, false), &full), 64);
        assert_eq!(schedule_energy(&case(10, true), &FuzzConfig::baseline()), 128);
    }

    #[test]
    fn trim_drops_steps_that_change_nothing() {
        // Repeating symbol 3 keeps a = 1 and only raises hit counts, so
        // every shorter run of 3s is reachable by chunk removal. Trimming
        // must stop at the shortest length whose signature, and that of
        // every length above it, matches the original.
        let mut c = campaign(TOGGLE, FuzzConfig::default(), 0);
        let sig = |c: &Campaign, n: usize| Signature::of(&c.executor.run(&vec![3; n], 100));
        let target = sig(&c, 6);
        let shortest = (1..=6).find(|&k| (k..=6).all(|j| sig(&c, j) == target)).unwrap();
        assert!(shortest < 6);
        let t = TestCase { input: vec![3; 6], ..case(1, false) };
        assert_eq!(trim(&mut c, &t).input, vec![3; shortest]);
    }

    #[test]
    fn trim_fixpoint_and_error_status() {
        let mut c = campaign(TOGGLE, FuzzConfig::default(), 0);
        let t = TestCase { input: vec![3], ..case(1, false) };
        assert_eq!(trim(&mut c, &t).input, vec![3]);

        let mut c = campaign(
            "inputs 1..4; var a = 0; step(in){ if (in == 2) { a = a + 1; } if (a == 3 && in == 4) { error 1; } }",
            FuzzConfig::default(),
            0,
        );
        let t = TestCase { input: vec![1, 2, 1, 2, 1, 1, 2, 4], ..case(1, false) };
        let trimmed = trim(&mut c, &t);
        assert!(trimmed.input.len() <= t.input.len());
        assert_eq!(c.executor.run(&trimmed.input, 100).status, RunStatus::Error(1));
    }

    #[test]
    fn finds_sequenced_error_and_stops_early() {
        let src = "inputs 1..4; var a = 0;
            step(in){ if (in == 2) { a = a + 1; } if (a > 3) { a = 0; } if (a == 3 && in == 4) { error 1; } }";
        let mut c = campaign(src, FuzzConfig::default(), 42);
        let r = fuzz_loop(&mut c, Budget::execs(200_000));
        let w = &r.errors[&1].witness;
        assert_eq!(c.executor.run(w, 100).status, RunStatus::Error(1));
        assert!(r.stats.execs < 200_000, "stop-early rule");
    }

    #[test]
    fn budget_is_exact_and_deterministic() {
        let src = "inputs 1..4; var a = 0; step(in){ if (in == 2) { a = a + 1; } if (a > 5) { a = 0; } }";
        let run = |seed| {
            let mut c = campaign(src, FuzzConfig::default(), seed);
            fuzz_loop(&mut c, Budget::execs(3000))
        };
        let (a, b) = (run(5), run(5));
        assert_eq!(a.stats.execs, 3000);
        assert_eq!(a.corpus, b.corpus);
        assert_eq!((a.stats.branch_bits, a.stats.state_bits), (b.stats.branch_bits, b.stats.state_bits));
    }

    #[test]
    fn baseline_ignores_state_novelty() {
        let src = "inputs 1..4; var a = 0; step(in){ a = in; }";
        let mut c = campaign(src, FuzzConfig::baseline(), 1);
        let r = fuzz_loop(&mut c, Budget::execs(2000));
        assert!(r.corpus.iter().all(|t| !t.novelty.new_state_bits));
        assert!(r.corpus.iter().filter(|t| !t.is_seed).all(|t| t.novelty.new_branch_bits));
    }
}
