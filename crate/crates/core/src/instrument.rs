//! Minimal instrumentation placement.
//!
//! A node set `S` is *adequate* when the projection of every entry-to-exit
//! path onto `S` is unique, so the sequence of instrumented blocks an
//! execution reports determines the full path it took. Adequacy is decided
//! exactly by enumerating the paths of the DAG.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use crate::cfg::{BlockId, Cfg};

pub const DEFAULT_PATH_CAP: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstrumentError {
    #[error("adequacy inconclusive: graph has {paths} paths, enumeration cap is {cap}")]
    Inconclusive { paths: u64, cap: u64 },
    #[error("projection {0:?} matches no path")]
    InvalidProjection(Vec<BlockId>),
    #[error("projection {projection:?} matches {matches} paths")]
    AdequacyViolation { projection: Vec<BlockId>, matches: usize },
}

/// How adequacy of a plan was established.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdequacyCertificate {
    pub method: &'static str,
    pub paths_checked: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstrumentationPlan {
    pub instrumented: BTreeSet<BlockId>,
    pub certificate: AdequacyCertificate,
}

impl InstrumentationPlan {
    /// Instruments every block. Trivially adequate.
    pub fn all_blocks(cfg: &Cfg) -> Self {
        InstrumentationPlan {
            instrumented: (0..cfg.len()).collect(),
            certificate: AdequacyCertificate { method: "all blocks", paths_checked: 0 },
        }
    }

    pub fn ratio(&self, cfg: &Cfg) -> f64 {
        self.instrumented.len() as f64 / cfg.len() as f64
    }

    pub fn contains(&self, block: BlockId) -> bool {
        self.instrumented.contains(&block)
    }
}

pub fn project_trace(trace: &[BlockId], s: &BTreeSet<BlockId>) -> Vec<BlockId> {
    trace.iter().copied().filter(|b| s.contains(b)).collect()
}

pub fn is_adequate(cfg: &Cfg, s: &BTreeSet<BlockId>) -> Result<bool, InstrumentError> {
    is_adequate_with_cap(cfg, s, DEFAULT_PATH_CAP)
}

pub fn is_adequate_with_cap(cfg: &Cfg, s: &BTreeSet<BlockId>, cap: u64) -> Result<bool, InstrumentError> {
    let paths = checked_path_count(cfg, cap)?;
    let member = membership(cfg, s);
    let mut seen = HashSet::with_capacity(paths as usize);
    let mut adequate = true;
    cfg.for_each_path(|path| {
        if adequate {
            let projection: Vec<BlockId> = path.iter().copied().filter(|&b| member[b]).collect();
            adequate = seen.insert(projection);
        }
    });
    Ok(adequate)
}

fn checked_path_count(cfg: &Cfg, cap: u64) -> Result<u64, InstrumentError> {
    let paths = cfg.path_count();
    if paths > cap {
        Err(InstrumentError::Inconclusive { paths, cap })
    } else {
        Ok(paths)
    }
}

fn membership(cfg: &Cfg, s: &BTreeSet<BlockId>) -> Vec<bool> {
    let mut member = vec![false; cfg.len()];
    for &b in s {
        if b < member.len() {
            member[b] = true;
        }
    }
    member
}

/// Candidate set before greedy reduction: the entry, every join (in-degree
/// of two or more) and the then-successor of every branch.
pub fn initial_candidates(cfg: &Cfg) -> BTreeSet<BlockId> {
    let mut s = BTreeSet::from([cfg.entry()]);
    for b in cfg.blocks() {
        if cfg.in_degree(b.id) >= 2 {
            s.insert(b.id);
        }
        if b.is_branch() {
            s.insert(b.successors().next().unwrap());
        }
    }
    s
}

pub fn select_instrumentation(cfg: &Cfg) -> Result<InstrumentationPlan, InstrumentError> {
    select_instrumentation_with_cap(cfg, DEFAULT_PATH_CAP)
}

/// Greedy local minimization: removal is attempted for every block in
/// descending id order and kept whenever adequacy survives. Adequacy is
/// monotone in `S`, so one pass leaves a locally minimal set.
pub fn select_instrumentation_with_cap(cfg: &Cfg, cap: u64) -> Result<InstrumentationPlan, InstrumentError> {
    let paths = checked_path_count(cfg, cap)?;
    let mut s = initial_candidates(cfg);
    if !is_adequate_with_cap(cfg, &s, cap)? {
        s = (0..cfg.len()).collect();
    }
    let order: Vec<BlockId> = s.iter().rev().copied().collect();
    for b in order {
        if b == cfg.entry() {
            continue;
        }
        s.remove(&b);
        if !is_adequate_with_cap(cfg, &s, cap)? {
            s.insert(b);
        }
    }
    Ok(InstrumentationPlan {
        instrumented: s,
        certificate: AdequacyCertificate { method: "exhaustive DAG path enumeration", paths_checked: paths },
    })
}

/// Recovers the unique full path whose projection onto `s` is `projection`.
pub fn reconstruct_path(
    cfg: &Cfg,
    s: &BTreeSet<BlockId>,
    projection: &[BlockId],
) -> Result<Vec<BlockId>, InstrumentError> {
    checked_path_count(cfg, DEFAULT_PATH_CAP)?;
    let member = membership(cfg, s);
    let mut found: Option<Vec<BlockId>> = None;
    let mut matches = 0;
    cfg.for_each_path(|path| {
        if path.iter().copied().filter(|&b| member[b]).eq(projection.iter().copied()) {
            matches += 1;
            if found.is_none() {
                found = Some(path.to_vec());
            }
        }
    });
    match (found, matches) {
        (Some(path), 1) => Ok(path),
        (None, _) => Err(InstrumentError::InvalidProjection(projection.to_vec())),
        (Some(_), matches) => {
            Err(InstrumentError::AdequacyViolation { projection: projection.to_vec(), matches })
        }
    }
}
