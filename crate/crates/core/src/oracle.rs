//! Breadth-first exploration of the reactive state space.
//!
//! Nodes are exact global valuations; each is expanded by every alphabet
//! symbol through [`Executor::step`], the same step semantics the fuzzer
//! runs. The first time an error id is hit, the BFS parent chain is the
//! shortest witness for it.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write;

use crate::executor::{Executor, StepResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    /// Error id → shortest witness.
    pub reachable: BTreeMap<i64, Vec<i64>>,
    pub explored_states: usize,
    /// False iff a state or depth cap cut the search short.
    pub complete: bool,
}

impl OracleResult {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, w) in &self.reachable {
            let symbols: Vec<String> = w.iter().map(i64::to_string).collect();
            writeln!(out, "error {k}: reachable, witness={}, len={}", symbols.join(" "), w.len()).unwrap();
        }
        writeln!(out, "complete: {}, states: {}", self.complete, self.explored_states).unwrap();
        out
    }
}

struct Node {
    parent: Option<(usize, i64)>,
    depth: usize,
}

pub fn bfs_reachability(executor: &Executor, state_cap: usize, depth_cap: usize) -> OracleResult {
    let init = executor.initial_state().to_vec();
    let mut index: HashMap<Vec<i64>, usize> = HashMap::from([(init.clone(), 0)]);
    let mut nodes = vec![Node { parent: None, depth: 0 }];
    let mut valuations = vec![init];
    let mut queue = VecDeque::from([0usize]);
    let mut reachable = BTreeMap::new();
    let mut complete = true;
    let mut scratch = Vec::new();

    'search: while let Some(id) = queue.pop_front() {
        if nodes[id].depth >= depth_cap {
            complete = false;
            continue;
        }
        for symbol in executor.alphabet().symbols() {
            let mut next = valuations[id].clone();
            scratch.clear();
            match executor.step(&mut next, symbol, &mut scratch) {
                StepResult::Rejected => {}
                StepResult::Error(k) => {
                    reachable.entry(k).or_insert_with(|| {
                        let mut w = witness(&nodes, id);
                        w.push(symbol);
                        w
                    });
                }
                StepResult::Completed => {
                    if index.contains_key(&next) {
                        continue;
                    }
                    if nodes.len() >= state_cap {
                        complete = false;
                        break 'search;
                    }
                    let child = nodes.len();
                    nodes.push(Node { parent: Some((id, symbol)), depth: nodes[id].depth + 1 });
                    index.insert(next.clone(), child);
                    valuations.push(next);
                    queue.push_back(child);
                }
            }
        }
    }
    OracleResult { reachable, explored_states: nodes.len(), complete }
}

fn witness(nodes: &[Node], mut id: usize) -> Vec<i64> {
    let mut rev = Vec::with_capacity(nodes[id].depth + 1);
    while let Some((parent, symbol)) = nodes[id].parent {
        rev.push(symbol);
        id = parent;
    }
    rev.reverse();
    rev
}
