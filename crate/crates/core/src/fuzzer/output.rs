//! Campaign directory layout.
//!
//! ```text
//! <out>/queue/id_<n>.txt      retained inputs
//! <out>/errors/error_<k>.txt  first witness per error id
//! <out>/stats.json            deterministic counters
//! <out>/timing.json           wall-clock times
//! ```
//!
//! Symbol files hold whitespace-separated decimal integers. `stats.json`
//! carries nothing time-dependent, so two runs with the same seed and exec
//! budget produce identical bytes.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use thiserror::Error;

use super::CampaignResult;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: invalid symbol {token:?}")]
    BadSymbol { path: PathBuf, token: String },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.to_path_buf(), source }
}

pub fn format_symbols(symbols: &[i64]) -> String {
    let mut s: String = symbols.iter().map(i64::to_string).collect::<Vec<_>>().join(" ");
    s.push('\n');
    s
}

pub fn parse_symbols(text: &str) -> Result<Vec<i64>, String> {
    text.split_whitespace().map(|t| t.parse::<i64>().map_err(|_| t.to_string())).collect()
}

pub fn read_symbols(path: &Path) -> Result<Vec<i64>, OutputError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_symbols(&text).map_err(|token| OutputError::BadSymbol { path: path.to_path_buf(), token })
}

fn write(path: &Path, contents: &str) -> Result<(), OutputError> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Flat JSON object, keys in sorted order.
pub fn stats_json(result: &CampaignResult) -> Value {
    let s = &result.stats;
    let mut m = Map::new();
    m.insert("seed".into(), s.seed.into());
    m.insert("baseline".into(), s.baseline.into());
    m.insert("seed_execs".into(), s.seed_execs.into());
    m.insert("execs".into(), s.execs.into());
    m.insert("corpus_size".into(), s.corpus_size.into());
    m.insert("branch_bits".into(), s.branch_bits.into());
    m.insert("state_bits".into(), s.state_bits.into());
    m.insert("distinct_states".into(), s.distinct_states.into());
    m.insert("errors_total".into(), s.errors_total.into());
    m.insert("errors_found".into(), s.errors_found.into());
    for (k, e) in &result.errors {
        m.insert(format!("error_{k}_exec"), e.exec_index.into());
        m.insert(format!("error_{k}_len"), e.witness.len().into());
    }
    Value::Object(m)
}

fn timing_json(result: &CampaignResult) -> Value {
    let mut m = Map::new();
    m.insert("elapsed_seconds".into(), result.stats.elapsed.as_secs_f64().into());
    for (k, e) in &result.errors {
        m.insert(format!("error_{k}_seconds"), e.elapsed.as_secs_f64().into());
    }
    Value::Object(m)
}

/// Replaces `queue/` and `errors/` under `dir` and rewrites both JSON files.
pub fn write_campaign(dir: &Path, result: &CampaignResult) -> Result<(), OutputError> {
    let queue = dir.join("queue");
    let errors = dir.join("errors");
    for sub in [&queue, &errors] {
        if sub.exists() {
            fs::remove_dir_all(sub).map_err(io_err(sub))?;
        }
        fs::create_dir_all(sub).map_err(io_err(sub))?;
    }
    for t in &result.corpus {
        write(&queue.join(format!("id_{}.txt", t.id)), &format_symbols(&t.input))?;
    }
    for (k, e) in &result.errors {
        write(&errors.join(format!("error_{k}.txt")), &format_symbols(&e.witness))?;
    }
    let pretty = |v: &Value| serde_json::to_string_pretty(v).expect("json values serialize") + "\n";
    write(&dir.join("stats.json"), &pretty(&stats_json(result)))?;
    write(&dir.join("timing.json"), &pretty(&timing_json(result)))?;
    Ok(())
}

pub fn read_stats(dir: &Path) -> Result<Map<String, Value>, OutputError> {
    let path = dir.join("stats.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|source| OutputError::Json { path, source })
}

/// Queue entries in id order.
pub fn read_queue(dir: &Path) -> Result<Vec<Vec<i64>>, OutputError> {
    let queue = dir.join("queue");
    let mut ids = Vec::new();
    for entry in fs::read_dir(&queue).map_err(io_err(&queue))? {
        let entry = entry.map_err(io_err(&queue))?;
        let name = entry.file_name();
        let id = name.to_str().and_then(|n| n.strip_prefix("id_")?.strip_suffix(".txt")?.parse::<usize>().ok());
        if let Some(id) = id {
            ids.push(id);
        }
    }
    ids.sort_unstable();
    ids.iter().map(|id| read_symbols(&queue.join(format!("id_{id}.txt")))).collect()
}

/// Error witnesses keyed by id.
pub fn read_errors(dir: &Path) -> Result<Vec<(i64, Vec<i64>)>, OutputError> {
    let path = dir.join("errors");
    let mut out = Vec::new();
    if !path.exists() {
        return Ok(out);
    }
    for entry in fs::read_dir(&path).map_err(io_err(&path))? {
        let entry = entry.map_err(io_err(&path))?;
        let name = entry.file_name();
        let k = name.to_str().and_then(|n| n.strip_prefix("error_")?.strip_suffix(".txt")?.parse::<i64>().ok());
        if let Some(k) = k {
            out.push((k, read_symbols(&entry.path())?));
        }
    }
    out.sort_by_key(|e| e.0);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_round_trip() {
        assert_eq!(format_symbols(&[3, -1, 20]), "3 -1 20\n");
        assert_eq!(parse_symbols(" 3\n-1\t20 \n").unwrap(), vec![3, -1, 20]);
        assert_eq!(parse_symbols("1 x").unwrap_err(), "x");
        assert!(parse_symbols("").unwrap().is_empty());
    }
}
