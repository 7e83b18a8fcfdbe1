//! The `rrfuzz` command surface. Each verb writes its report to `out`,
//! diagnostics to `err`, and returns the process exit code: 0 on success,
//! 1 for an invalid program, 2 for I/O or capacity failures.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cfg::{assign_block_tags, build_cfg};
use crate::executor::{CoverageMaps, Executor, RunStatus};
use crate::frontend::{list_error_ids, parse_with_warnings, Program};
use crate::fuzzer::output::{read_errors, read_queue, read_stats, read_symbols};
use crate::fuzzer::{fuzz_loop, init_campaign, write_campaign, Budget, FuzzConfig};
use crate::gen::{generate, GenParams};
use crate::instrument::select_instrumentation;
use crate::interval::{analyze_with, AnalysisConfig, DEFAULT_CONST_WEIGHT};
use crate::oracle::bfs_reachability;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;

/// Exec budget used when `fuzz` is given neither limit.
pub const DEFAULT_MAX_EXECS: u64 = 100_000;

#[derive(Debug, Parser)]
#[command(name = "rrfuzz", version, about = "Greybox fuzzing for reactive programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a program.
    Check { file: PathBuf },
    /// Print CFG, instrumentation plan and interval results.
    Analyze(AnalyzeArgs),
    /// Run a fuzzing campaign.
    Fuzz(FuzzArgs),
    /// Print one verdict line per error id of a finished campaign.
    Report { out: PathBuf, file: PathBuf },
    /// Generate a random benchmark program.
    Gen(GenArgs),
    /// Execute one input file and print what it did.
    Replay(ReplayArgs),
    /// Breadth-first ground truth for small programs.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub file: PathBuf,
    /// Dump every basic block and edge.
    #[arg(long)]
    pub cfg: bool,
    #[arg(long)]
    pub plan: bool,
    #[arg(long)]
    pub intervals: bool,
    #[arg(long, default_value_t = DEFAULT_CONST_WEIGHT)]
    pub const_weight: u32,
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_execs: Option<u64>,
    #[arg(long)]
    pub max_seconds: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Uniform symbol pool and branch-only retention.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long, default_value_t = DEFAULT_CONST_WEIGHT)]
    pub const_weight: u32,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 4)]
    pub vars: usize,
    #[arg(long, default_value_t = 4)]
    pub domain: i64,
    #[arg(long, default_value_t = 5)]
    pub alphabet: i64,
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[arg(long, default_value_t = 10)]
    pub errors: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub file: PathBuf,
    pub input: PathBuf,
    /// Campaign directory whose queue rebuilds the coverage maps first.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value_t = crate::fuzzer::DEFAULT_MAX_LEN)]
    pub max_steps: usize,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub state_cap: usize,
    #[arg(long, default_value_t = 1_000)]
    pub depth_cap: usize,
}

/// Failure carrying its exit code; the message goes to stderr.
struct Failure(i32, String);

type CmdResult = Result<(), Failure>;

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_IO, e.to_string())
}

pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Check { file } => load(file, err).map(|_| ()),
        Command::Analyze(a) => analyze(a, out, err),
        Command::Fuzz(a) => fuzz(a, out, err),
        Command::Report { out: dir, file } => report(dir, file, out, err),
        Command::Gen(a) => gen(a, out),
        Command::Replay(a) => replay(a, out, err),
        Command::Oracle(a) => oracle(a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure(code, msg)) => {
            if !msg.is_empty() {
                let _ = writeln!(err, "rrfuzz: {msg}");
            }
            code
        }
    }
}

/// Reads and validates a program, printing warnings and diagnostics.
fn load(file: &Path, err: &mut dyn Write) -> Result<Program, Failure> {
    let text = fs::read_to_string(file).map_err(|e| io_failure(format!("{}: {e}", file.display())))?;
    let name = file.display().to_string();
    let outcome = parse_with_warnings(&text);
    for w in &outcome.warnings {
        let _ = writeln!(err, "{}", w.render(&name));
    }
    outcome.result.map_err(|diags| {
        for d in &diags {
            let _ = writeln!(err, "{}", d.render(&name));
        }
        Failure(EXIT_INVALID, String::new())
    })
}

fn emit(out: &mut dyn Write, text: &str) -> CmdResult {
    out.write_all(text.as_bytes()).map_err(io_failure)
}

fn analyze(a: &AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let program = load(&a.file, err)?;
    let cfg = build_cfg(&program);
    let all = !(a.cfg || a.plan || a.intervals);
    let mut text = String::new();
    if a.cfg || all {
        writeln!(text, "blocks={} edges={} paths={}", cfg.len(), cfg.edges().len(), cfg.path_count()).unwrap();
    }
    if a.cfg {
        text.push_str(&cfg.dump(&program));
    }
    if a.plan || all {
        let plan = select_instrumentation(&cfg).map_err(|e| Failure(EXIT_IO, e.to_string()))?;
        let ids: Vec<String> = plan.instrumented.iter().map(usize::to_string).collect();
        writeln!(text, "S = {{{}}}", ids.join(", ")).unwrap();
        writeln!(
            text,
            "|S|={} |V|={} ratio={:.3}",
            plan.instrumented.len(),
            cfg.len(),
            plan.ratio(&cfg)
        )
        .unwrap();
    }
    if a.intervals || all {
        let summary = analyze_with(&program, AnalysisConfig { const_weight: a.const_weight, ..Default::default() });
        for (g, bound) in program.globals.iter().zip(&summary.global_bounds) {
            writeln!(text, "{} in {bound}", g.name).unwrap();
        }
        let consts: Vec<String> = summary.input_constants.iter().map(i64::to_string).collect();
        writeln!(text, "input constants: {}", consts.join(" ")).unwrap();
        let pool: Vec<String> = summary.value_pool.iter().map(|(s, w)| format!("{s}:{w}")).collect();
        writeln!(text, "value pool: {}", pool.join(" ")).unwrap();
        writeln!(text, "iterations: {}", summary.iterations).unwrap();
    }
    emit(out, &text)
}

fn fuzz(a: &FuzzArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let program = load(&a.file, err)?;
    let config = FuzzConfig { baseline: a.baseline, const_weight: a.const_weight, ..FuzzConfig::default() };
    let mut budget = Budget { max_execs: a.max_execs, max_seconds: a.max_seconds };
    if budget.max_execs.is_none() && budget.max_seconds.is_none() {
        budget.max_execs = Some(DEFAULT_MAX_EXECS);
    }
    fs::create_dir_all(&a.out).map_err(|e| io_failure(format!("{}: {e}", a.out.display())))?;
    let mut campaign = init_campaign(&program, config, a.seed).map_err(|e| Failure(EXIT_IO, e.to_string()))?;
    let result = fuzz_loop(&mut campaign, budget);
    write_campaign(&a.out, &result).map_err(io_failure)?;
    emit(
        out,
        &format!(
            "found {}/{} errors in {} execs\n",
            result.stats.errors_found, result.stats.errors_total, result.stats.execs
        ),
    )
}

fn executor_for(program: &Program, tag_seed: u64) -> Result<Executor, Failure> {
    let cfg = assign_block_tags(build_cfg(program), tag_seed).map_err(|e| Failure(EXIT_IO, e.to_string()))?;
    let plan = select_instrumentation(&cfg).map_err(|e| Failure(EXIT_IO, e.to_string()))?;
    Executor::new(program, &cfg, &plan).map_err(|e| Failure(EXIT_IO, e.to_string()))
}

fn stats_seed(dir: &Path) -> Result<u64, Failure> {
    let stats = read_stats(dir).map_err(io_failure)?;
    stats
        .get("seed")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Failure(EXIT_IO, format!("{}: stats.json has no seed", dir.display())))
}

/// Verdict lines; a stored witness only counts once it replays.
fn report(dir: &Path, file: &Path, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let seed = stats_seed(dir)?;
    let program = load(file, err)?;
    let executor = executor_for(&program, seed)?;
    let witnesses = read_errors(dir).map_err(io_failure)?;
    let mut text = String::new();
    for k in list_error_ids(&program) {
        let verified = witnesses
            .iter()
            .filter(|(id, _)| *id == k)
            .any(|(_, w)| executor.run(w, w.len().max(1)).status == RunStatus::Error(k));
        if !verified && witnesses.iter().any(|(id, _)| *id == k) {
            let _ = writeln!(err, "rrfuzz: witness for error {k} does not replay");
        }
        writeln!(text, "{k},{}", if verified { "error_reachable" } else { "UNKNOWN" }).unwrap();
    }
    emit(out, &text)
}

fn gen(a: &GenArgs, out: &mut dyn Write) -> CmdResult {
    if a.vars == 0 || a.domain <= 0 || a.alphabet <= 0 || a.depth == 0 {
        return Err(Failure(EXIT_INVALID, "gen parameters must be positive".into()));
    }
    let params = GenParams {
        vars: a.vars,
        domain: a.domain,
        alphabet: a.alphabet,
        depth: a.depth,
        errors: a.errors,
        seed: a.seed,
    };
    let text = generate(&params);
    match &a.output {
        Some(path) => fs::write(path, text).map_err(|e| io_failure(format!("{}: {e}", path.display()))),
        None => emit(out, &text),
    }
}

fn replay(a: &ReplayArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let program = load(&a.file, err)?;
    let input = read_symbols(&a.input).map_err(io_failure)?;
    let seed = match &a.corpus {
        Some(dir) => stats_seed(dir)?,
        None => 0,
    };
    let executor = executor_for(&program, seed)?;
    let mut maps = CoverageMaps::default();
    if let Some(dir) = &a.corpus {
        for entry in read_queue(dir).map_err(io_failure)? {
            maps.merge_and_report(&executor.run(&entry, a.max_steps));
        }
    }
    let result = executor.run(&input, a.max_steps);
    let novelty = maps.peek_novelty(&result);
    let outputs: Vec<String> = result.outputs.iter().map(i64::to_string).collect();
    emit(
        out,
        &format!(
            "status: {}\nsteps: {}\noutputs: {}\nnovelty: branch={} state={}\n",
            result.status,
            result.steps,
            outputs.join(" "),
            novelty.new_branch_bits,
            novelty.new_state_bits
        ),
    )
}

fn oracle(a: &OracleArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let program = load(&a.file, err)?;
    let executor = executor_for(&program, 0)?;
    emit(out, &bfs_reachability(&executor, a.state_cap, a.depth_cap).render())
}
