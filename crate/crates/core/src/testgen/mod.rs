//! Coverage-driven test generation over a [`NavModel`], the test ripper that
//! repairs invalid cases, and coverage measurement.
//!
//! Every case starts at the model's start state on a freshly booted device and
//! carries the events the model predicts for each key press. Those predicted
//! events are what the oracle later compares against.

mod coverage;
mod rip;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::creeper::Transition;
use crate::emulator::EventKind;
use crate::key::KeyKind;
use crate::navmodel::{path_in_tree, NavModel, State};

pub use coverage::{coverage_of, CoverageError, CoverageReport};
pub use rip::{rip, RepairEntry, RipAction, RipPattern, RipPatternKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "criterion")]
pub enum CoverageCriterion {
    /// Every state visited.
    ViewCoverage,
    /// Every edge walked.
    TransitionCoverage,
    /// For every state `a` and every other state `b` reachable from it, some
    /// case visits `a` and later `b`.
    ViewPairCoverage,
    /// `n_cases` seeded random walks of at most `max_len` keys.
    RandomWalk { n_cases: u32, max_len: u32 },
}

impl fmt::Display for CoverageCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverageCriterion::ViewCoverage => f.write_str("view"),
            CoverageCriterion::TransitionCoverage => f.write_str("transition"),
            CoverageCriterion::ViewPairCoverage => f.write_str("pair"),
            CoverageCriterion::RandomWalk { n_cases, max_len } => write!(f, "random:{n_cases}:{max_len}"),
        }
    }
}

impl FromStr for CoverageCriterion {
    type Err = GenError;

    /// `view`, `transition`, `pair`, or `random[:n_cases[:max_len]]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split(':');
        let bad = || GenError::InvalidCriterion(s.to_string());
        let criterion = match parts.next() {
            Some("view") => CoverageCriterion::ViewCoverage,
            Some("transition") => CoverageCriterion::TransitionCoverage,
            Some("pair") => CoverageCriterion::ViewPairCoverage,
            Some("random") => {
                let n_cases = parts.next().map_or(Ok(10), str::parse).map_err(|_| bad())?;
                let max_len = parts.next().map_or(Ok(20), str::parse).map_err(|_| bad())?;
                CoverageCriterion::RandomWalk { n_cases, max_len }
            }
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(criterion)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestCase {
    pub id: String,
    pub start: State,
    pub keys: Vec<KeyKind>,
    /// Predicted events, one group per key.
    pub expected: Vec<Vec<EventKind>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSuite {
    pub id: String,
    pub cases: Vec<TestCase>,
}

impl TestSuite {
    /// The suite file: a JSON array of cases.
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(&self.cases).expect("suite serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(id: impl Into<String>, bytes: &[u8]) -> Result<Self, serde_json::Error> {
        Ok(TestSuite { id: id.into(), cases: serde_json::from_slice(bytes)? })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("invalid coverage criterion {0:?}")]
    InvalidCriterion(String),
}

pub(crate) fn case_id(n: usize) -> String {
    format!("tc{:04}", n + 1)
}

/// Events a fault-free device reports for one model edge.
pub fn expected_events(from: &State, key: KeyKind, to: &State) -> Vec<EventKind> {
    let focus = EventKind::FocusChanged { from: Some(from.clone()), to: to.clone() };
    match key {
        KeyKind::Ok => vec![EventKind::ActivityOpened { id: to.activity.clone() }, focus],
        KeyKind::Back => vec![EventKind::ActivityClosed { id: from.activity.clone() }, focus],
        _ => vec![focus],
    }
}

/// Builds a case from a key sequence, deriving its expected events from the
/// model. Returns the first invalid index on failure.
pub fn model_case(model: &NavModel, id: String, start: &State, keys: Vec<KeyKind>) -> Result<TestCase, usize> {
    let trace = model.walk(start, &keys).map_err(|(at, _)| at)?;
    let expected = keys
        .iter()
        .zip(trace.windows(2))
        .map(|(&key, pair)| expected_events(&pair[0], key, &pair[1]))
        .collect();
    Ok(TestCase { id, start: start.clone(), keys, expected })
}

/// States in breadth-first order from `from`, with the predecessor tree.
fn bfs_order(model: &NavModel, from: &State) -> (Vec<State>, BTreeMap<State, (State, KeyKind)>) {
    let tree = model.bfs_tree(from);
    let mut order = vec![from.clone()];
    let mut seen = BTreeSet::from([from.clone()]);
    let mut queue = VecDeque::from([from.clone()]);
    while let Some(at) = queue.pop_front() {
        for (_, next) in model.successors(&at) {
            if seen.insert(next.clone()) {
                order.push(next.clone());
                queue.push_back(next.clone());
            }
        }
    }
    (order, tree)
}

/// Appends the tree path to `target` to `keys`, returning the states passed.
fn follow(
    model: &NavModel,
    tree: &BTreeMap<State, (State, KeyKind)>,
    from: &State,
    target: &State,
    keys: &mut Vec<KeyKind>,
) -> Vec<State> {
    let path = path_in_tree(tree, target);
    let trace = model.walk(from, &path).expect("tree paths are model paths");
    keys.extend(path);
    trace
}

/// Generates a suite meeting `criterion` on `model`. Every criterion yields
/// at least one case; on a model with nothing to cover that is the empty
/// case at the start state.
pub fn generate(model: &NavModel, criterion: CoverageCriterion, seed: u64) -> Result<TestSuite, GenError> {
    let sequences = match criterion {
        CoverageCriterion::ViewCoverage => view_walks(model),
        CoverageCriterion::TransitionCoverage => transition_walks(model),
        CoverageCriterion::ViewPairCoverage => pair_walks(model),
        CoverageCriterion::RandomWalk { n_cases, max_len } => {
            if n_cases == 0 || max_len == 0 {
                return Err(GenError::InvalidCriterion(criterion.to_string()));
            }
            random_walks(model, n_cases, max_len, seed)
        }
    };
    let sequences = if sequences.is_empty() { vec![Vec::new()] } else { sequences };
    let cases = sequences
        .into_iter()
        .enumerate()
        .map(|(n, keys)| model_case(model, case_id(n), model.start(), keys).expect("generated walks follow the model"))
        .collect();
    Ok(TestSuite { id: format!("{criterion}-s{seed}"), cases })
}

/// Greedy walks: repeatedly head for the nearest state satisfying `wanted`,
/// starting a new case whenever nothing wanted is reachable from here.
fn greedy_walks(
    model: &NavModel,
    mut pending: impl FnMut() -> bool,
    mut step: impl FnMut(&State, &[State], &mut Vec<KeyKind>) -> Option<State>,
) -> Vec<Vec<KeyKind>> {
    let mut cases = Vec::new();
    while pending() {
        let mut at = model.start().clone();
        let mut keys = Vec::new();
        loop {
            let (order, _) = bfs_order(model, &at);
            match step(&at, &order, &mut keys) {
                Some(next) => at = next,
                None => break,
            }
        }
        if keys.is_empty() {
            break;
        }
        cases.push(keys);
    }
    cases
}

fn view_walks(model: &NavModel) -> Vec<Vec<KeyKind>> {
    let unvisited = std::cell::RefCell::new(model.states().clone());
    unvisited.borrow_mut().remove(model.start());
    greedy_walks(
        model,
        || !unvisited.borrow().is_empty(),
        |at, order, keys| {
            let target = order.iter().find(|s| unvisited.borrow().contains(*s))?.clone();
            let tree = model.bfs_tree(at);
            for s in follow(model, &tree, at, &target, keys) {
                unvisited.borrow_mut().remove(&s);
            }
            Some(target)
        },
    )
}

fn transition_walks(model: &NavModel) -> Vec<Vec<KeyKind>> {
    let uncovered: std::cell::RefCell<BTreeSet<Transition>> = std::cell::RefCell::new(model.edges().collect());
    greedy_walks(
        model,
        || !uncovered.borrow().is_empty(),
        |at, order, keys| {
            let (source, key) = order.iter().find_map(|s| {
                model
                    .successors(s)
                    .find(|(k, to)| uncovered.borrow().contains(&Transition::new(s.clone(), *k, (*to).clone())))
                    .map(|(k, _)| (s.clone(), k))
            })?;
            let tree = model.bfs_tree(at);
            let trace = follow(model, &tree, at, &source, keys);
            let target = model.step(&source, key).expect("edge exists").clone();
            keys.push(key);
            let mut done = uncovered.borrow_mut();
            for (pair, k) in trace.windows(2).zip(&keys[keys.len() - trace.len()..]) {
                done.remove(&Transition::new(pair[0].clone(), *k, pair[1].clone()));
            }
            done.remove(&Transition::new(source, key, target.clone()));
            Some(target)
        },
    )
}

/// Ordered pairs `(a, b)`, `a != b`, with `b` reachable from `a`.
pub(crate) fn reachable_pairs(model: &NavModel) -> BTreeSet<(State, State)> {
    let mut pairs = BTreeSet::new();
    for a in model.states() {
        for b in model.reachable_from(a) {
            if &b != a {
                pairs.insert((a.clone(), b));
            }
        }
    }
    pairs
}

/// Pairs `(a, b)` with `a` visited at some position and `b` at a later one.
pub(crate) fn pairs_in_trace(trace: &[State]) -> BTreeSet<(State, State)> {
    let mut first: BTreeMap<&State, usize> = BTreeMap::new();
    let mut last: BTreeMap<&State, usize> = BTreeMap::new();
    for (i, s) in trace.iter().enumerate() {
        first.entry(s).or_insert(i);
        last.insert(s, i);
    }
    let mut out = BTreeSet::new();
    for (a, &fa) in &first {
        for (b, &lb) in &last {
            if a != b && fa < lb {
                out.insert(((*a).clone(), (*b).clone()));
            }
        }
    }
    out
}

fn pair_walks(model: &NavModel) -> Vec<Vec<KeyKind>> {
    let mut needed = reachable_pairs(model);
    let mut cases = Vec::new();
    for a in model.states() {
        while needed.iter().any(|(x, _)| x == a) {
            let mut keys = model.shortest_path(model.start(), a).expect("all states are reachable from the start");
            let mut at = a.clone();
            loop {
                let (order, tree) = bfs_order(model, &at);
                let Some(b) = order.iter().find(|b| needed.contains(&(a.clone(), (*b).clone()))).cloned() else {
                    break;
                };
                follow(model, &tree, &at, &b, &mut keys);
                needed.remove(&(a.clone(), b.clone()));
                at = b;
            }
            let trace = model.walk(model.start(), &keys).expect("valid walk");
            for pair in pairs_in_trace(&trace) {
                needed.remove(&pair);
            }
            cases.push(keys);
        }
    }
    cases
}

fn random_walks(model: &NavModel, n_cases: u32, max_len: u32, seed: u64) -> Vec<Vec<KeyKind>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_cases)
        .map(|_| {
            let mut at = model.start();
            let mut keys = Vec::new();
            for _ in 0..max_len {
                let options: Vec<(KeyKind, &State)> = model.successors(at).collect();
                let Some(&(key, next)) = options.choose(&mut rng) else { break };
                keys.push(key);
                at = next;
            }
            keys
        })
        .collect()
}
