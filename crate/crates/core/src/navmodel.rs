//! State-machine navigation model built from an exploration.
//!
//! States are views (a [`ViewId`] already names its activity) and every edge
//! is a single key press, so the distance between two states is simply the
//! length of the path between them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::appspec::ViewId;
use crate::creeper::{ExplorationResult, Transition};
use crate::key::KeyKind;

/// A model state: an `(activity, view)` pair, carried by the view id.
pub type State = ViewId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NavModel {
    start: State,
    states: BTreeSet<State>,
    edges: BTreeMap<State, BTreeMap<KeyKind, State>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("exploration result has no views")]
    EmptyResult,
    #[error("inconsistent exploration result: {0}")]
    InconsistentResult(String),
    #[error("unknown state {0}")]
    UnknownState(State),
    #[error("no path from {from} to {to}")]
    Unreachable { from: State, to: State },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "validity")]
pub enum Validity {
    Valid,
    Invalid { at: usize, reason: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    start: State,
    states: Vec<State>,
    edges: Vec<Transition>,
}

impl NavModel {
    /// Builds a model from a start state and a set of edges, checking edge
    /// determinism and reachability.
    pub fn from_edges(
        start: State,
        states: impl IntoIterator<Item = State>,
        edges: impl IntoIterator<Item = Transition>,
    ) -> Result<Self, ModelError> {
        let mut all: BTreeSet<State> = states.into_iter().collect();
        all.insert(start.clone());
        let mut map: BTreeMap<State, BTreeMap<KeyKind, State>> = BTreeMap::new();
        for t in edges {
            for end in [&t.from, &t.to] {
                if !all.contains(end) {
                    return Err(ModelError::InconsistentResult(format!(
                        "edge {} {} {} leaves the state set",
                        t.from, t.key, t.to
                    )));
                }
            }
            let slot = map.entry(t.from.clone()).or_default();
            if let Some(existing) = slot.get(&t.key) {
                if existing != &t.to {
                    return Err(ModelError::InconsistentResult(format!(
                        "{} {} leads to both {existing} and {}",
                        t.from, t.key, t.to
                    )));
                }
            }
            slot.insert(t.key, t.to);
        }
        let model = NavModel { start, states: all, edges: map };
        let reached = model.reachable_from(&model.start);
        if let Some(orphan) = model.states.iter().find(|s| !reached.contains(*s)) {
            return Err(ModelError::InconsistentResult(format!("{orphan} is unreachable from the start")));
        }
        Ok(model)
    }

    pub fn start(&self) -> &State {
        &self.start
    }

    pub fn states(&self) -> &BTreeSet<State> {
        &self.states
    }

    pub fn contains(&self, state: &State) -> bool {
        self.states.contains(state)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().map(BTreeMap::len).sum()
    }

    /// All edges in `(from, key)` order.
    pub fn edges(&self) -> impl Iterator<Item = Transition> + '_ {
        self.edges.iter().flat_map(|(from, out)| {
            out.iter()
                .map(move |(key, to)| Transition::new(from.clone(), *key, to.clone()))
        })
    }

    /// Outgoing edges of `state` in key-precedence order.
    pub fn successors<'a>(&'a self, state: &State) -> impl Iterator<Item = (KeyKind, &'a State)> + 'a {
        self.edges.get(state).into_iter().flatten().map(|(k, s)| (*k, s))
    }

    pub fn step(&self, state: &State, key: KeyKind) -> Option<&State> {
        self.edges.get(state)?.get(&key)
    }

    /// States reachable from `from`, including itself.
    pub fn reachable_from(&self, from: &State) -> BTreeSet<State> {
        let mut seen = BTreeSet::from([from.clone()]);
        let mut queue = VecDeque::from([from.clone()]);
        while let Some(at) = queue.pop_front() {
            for (_, next) in self.successors(&at) {
                if seen.insert(next.clone()) {
                    queue.push_back(next.clone());
                }
            }
        }
        seen
    }

    /// A minimum-length key sequence from `from` to `to`. Among equally short
    /// paths the one whose keys come first in precedence order wins.
    pub fn shortest_path(&self, from: &State, to: &State) -> Result<Vec<KeyKind>, ModelError> {
        for s in [from, to] {
            if !self.contains(s) {
                return Err(ModelError::UnknownState(s.clone()));
            }
        }
        let tree = self.bfs_tree(from);
        if !tree.contains_key(to) && from != to {
            return Err(ModelError::Unreachable { from: from.clone(), to: to.clone() });
        }
        Ok(path_in_tree(&tree, to))
    }

    /// Breadth-first predecessor tree rooted at `from`. Queue order plus
    /// key-ordered expansion makes every tree path the precedence-least
    /// shortest path.
    pub(crate) fn bfs_tree(&self, from: &State) -> BTreeMap<State, (State, KeyKind)> {
        let mut parent = BTreeMap::new();
        let mut seen = BTreeSet::from([from.clone()]);
        let mut queue = VecDeque::from([from.clone()]);
        while let Some(at) = queue.pop_front() {
            for (key, next) in self.successors(&at) {
                if seen.insert(next.clone()) {
                    parent.insert(next.clone(), (at.clone(), key));
                    queue.push_back(next.clone());
                }
            }
        }
        parent
    }

    /// Walks `keys` from `start`, returning the visited states (start
    /// included) or the first index with no outgoing edge.
    pub fn walk(&self, start: &State, keys: &[KeyKind]) -> Result<Vec<State>, (usize, String)> {
        if !self.contains(start) {
            return Err((0, format!("{start} is not a model state")));
        }
        let mut trace = Vec::with_capacity(keys.len() + 1);
        trace.push(start.clone());
        let mut at = start;
        for (i, &key) in keys.iter().enumerate() {
            match self.step(at, key) {
                Some(next) => {
                    trace.push(next.clone());
                    at = next;
                }
                None => return Err((i, format!("no {key} edge from {at}"))),
            }
        }
        Ok(trace)
    }

    pub fn validate_sequence(&self, start: &State, keys: &[KeyKind]) -> Validity {
        match self.walk(start, keys) {
            Ok(_) => Validity::Valid,
            Err((at, reason)) => Validity::Invalid { at, reason },
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        let doc = ModelDoc {
            start: self.start.clone(),
            states: self.states.iter().cloned().collect(),
            edges: self.edges().collect(),
        };
        let mut out = serde_json::to_vec_pretty(&doc).expect("model serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, ModelError> {
        let doc: ModelDoc =
            serde_json::from_slice(bytes).map_err(|e| ModelError::InconsistentResult(e.to_string()))?;
        NavModel::from_edges(doc.start, doc.states, doc.edges)
    }
}

pub(crate) fn path_in_tree(tree: &BTreeMap<State, (State, KeyKind)>, to: &State) -> Vec<KeyKind> {
    let mut keys = Vec::new();
    let mut cur = to;
    while let Some((prev, key)) = tree.get(cur) {
        keys.push(*key);
        cur = prev;
    }
    keys.reverse();
    keys
}

/// Turns an exploration into a navigation model: the discovered views become
/// states, and both probe transitions and transitions witnessed on the way
/// back become edges.
pub fn build_model(result: &ExplorationResult) -> Result<NavModel, ModelError> {
    if result.views.is_empty() {
        return Err(ModelError::EmptyResult);
    }
    let edges = result.transitions.iter().chain(&result.returns).cloned();
    NavModel::from_edges(result.start.clone(), result.views.iter().cloned(), edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appspec::{pilot_app, synth_app, ActivityId, LayoutPattern, PatternKind};
    use crate::creeper::{explore, CreeperConfig, StopReason};
    use crate::emulator::EmulatorSession;
    use petgraph::graph::{DiGraph, NodeIndex};
    use proptest::prelude::*;

    fn v(i: u32) -> ViewId {
        ViewId::new(&ActivityId::new("main").unwrap(), i)
    }

    fn pilot_model() -> NavModel {
        let mut session = EmulatorSession::boot(pilot_app());
        let config = CreeperConfig { start: Some(v(1)), it_max: 3, probe_ok: false, ..CreeperConfig::default() };
        build_model(&explore(&mut session, &config).unwrap()).unwrap()
    }

    fn grid_model(rows: u32, cols: u32) -> NavModel {
        let spec = synth_app(LayoutPattern { kind: PatternKind::B, rows, cols }, 1, 0, 0).unwrap();
        let mut session = EmulatorSession::boot(spec);
        let config = CreeperConfig { it_max: CreeperConfig::UNBOUNDED, ..CreeperConfig::default() };
        build_model(&explore(&mut session, &config).unwrap()).unwrap()
    }

    #[test]
    fn pilot_model_has_the_discovered_states() {
        let model = pilot_model();
        assert_eq!(model.states().len(), 10);
        assert_eq!(model.step(&v(1), KeyKind::Right), Some(&v(2)));
        assert_eq!(model.start(), &v(1));
    }

    #[test]
    fn single_view_model() {
        let result = ExplorationResult {
            start: v(1),
            views: vec![v(1)],
            transitions: BTreeSet::new(),
            returns: BTreeSet::new(),
            levels: vec![],
            stop_reason: StopReason::Exhausted,
            probes: 4,
            warnings: vec![],
        };
        let model = build_model(&result).unwrap();
        assert_eq!(model.states().len(), 1);
        assert_eq!(model.edge_count(), 0);
    }

    #[test]
    fn full_grid_edge_count_matches_enumeration() {
        // every ordered pair of orthogonally adjacent cells
        let (rows, cols) = (3i64, 4i64);
        let mut expected = 0;
        for r in 0..rows {
            for c in 0..cols {
                for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                    let (nr, nc) = (r + dr, c + dc);
                    if (0..rows).contains(&nr) && (0..cols).contains(&nc) {
                        expected += 1;
                    }
                }
            }
        }
        assert_eq!(expected, 34);
        let model = grid_model(3, 4);
        assert_eq!(model.states().len(), 12);
        assert_eq!(model.edge_count(), expected);
    }

    #[test]
    fn conflicting_transitions_are_inconsistent() {
        let mut result = explore(
            &mut EmulatorSession::boot(pilot_app()),
            &CreeperConfig { start: Some(v(1)), it_max: 1, probe_ok: false, ..CreeperConfig::default() },
        )
        .unwrap();
        result.returns.insert(Transition::new(v(1), KeyKind::Right, v(5)));
        assert!(matches!(build_model(&result), Err(ModelError::InconsistentResult(_))));
        result.views.clear();
        assert_eq!(build_model(&result), Err(ModelError::EmptyResult));
    }

    #[test]
    fn unreachable_fragments_are_rejected() {
        let err = NavModel::from_edges(v(1), [v(1), v(2)], []).unwrap_err();
        assert!(matches!(err, ModelError::InconsistentResult(_)));
    }

    #[test]
    fn shortest_paths() {
        let pilot = pilot_model();
        assert_eq!(pilot.shortest_path(&v(1), &v(2)).unwrap(), [KeyKind::Right]);
        assert_eq!(pilot.shortest_path(&v(1), &v(1)).unwrap(), []);
        let grid = grid_model(3, 4);
        let a = grid.start().activity.clone();
        let g = |i| ViewId::new(&a, i);
        assert_eq!(grid.shortest_path(&g(1), &g(6)).unwrap(), [KeyKind::Right, KeyKind::Down]);
        assert!(matches!(pilot.shortest_path(&v(1), &v(99)), Err(ModelError::UnknownState(_))));
    }

    #[test]
    fn unreachable_target() {
        let model = NavModel::from_edges(v(1), [v(1), v(2)], [Transition::new(v(1), KeyKind::Right, v(2))]).unwrap();
        assert!(matches!(model.shortest_path(&v(2), &v(1)), Err(ModelError::Unreachable { .. })));
    }

    #[test]
    fn validate_sequences() {
        let pilot = pilot_model();
        assert_eq!(pilot.validate_sequence(&v(1), &[KeyKind::Right, KeyKind::Down]), Validity::Valid);
        assert!(matches!(pilot.validate_sequence(&v(1), &[KeyKind::Up]), Validity::Invalid { at: 0, .. }));
        assert_eq!(pilot.validate_sequence(&v(1), &[]), Validity::Valid);
    }

    #[test]
    fn json_round_trip() {
        let model = pilot_model();
        assert_eq!(NavModel::from_json(&model.to_json()).unwrap(), model);
    }

    #[test]
    fn build_is_deterministic() {
        let mut session = EmulatorSession::boot(pilot_app());
        let config = CreeperConfig { start: Some(v(1)), it_max: 4, probe_ok: false, ..CreeperConfig::default() };
        let result = explore(&mut session, &config).unwrap();
        assert_eq!(build_model(&result).unwrap(), build_model(&result.clone()).unwrap());
    }

    /// Plain BFS distances from petgraph, independent of `shortest_path`.
    fn oracle_distances(model: &NavModel) -> BTreeMap<(State, State), usize> {
        let mut graph = DiGraph::<State, ()>::new();
        let index: BTreeMap<State, NodeIndex> = model.states().iter().map(|s| (s.clone(), graph.add_node(s.clone()))).collect();
        for t in model.edges() {
            graph.add_edge(index[&t.from], index[&t.to], ());
        }
        let mut out = BTreeMap::new();
        for (s, &i) in &index {
            let dist = petgraph::algo::dijkstra(&graph, i, None, |_| 1usize);
            for (j, d) in dist {
                out.insert((s.clone(), graph[j].clone()), d);
            }
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn shortest_paths_are_optimal_and_valid(seed in 0u64..10_000, kind in 0u8..3, rows in 1u32..5, cols in 1u32..5, acts in 1u32..4) {
            let kind = [PatternKind::A, PatternKind::B, PatternKind::C][kind as usize];
            let rows = if kind == PatternKind::A { 1 } else { rows };
            let spec = synth_app(LayoutPattern { kind, rows, cols }, acts, 0, seed).unwrap();
            let mut session = EmulatorSession::boot(spec);
            let config = CreeperConfig { it_max: CreeperConfig::UNBOUNDED, ..CreeperConfig::default() };
            let model = build_model(&explore(&mut session, &config).unwrap()).unwrap();
            prop_assume!(model.states().len() <= 50);
            let oracle = oracle_distances(&model);
            for a in model.states() {
                for b in model.states() {
                    match (model.shortest_path(a, b), oracle.get(&(a.clone(), b.clone()))) {
                        (Ok(path), Some(&d)) => {
                            prop_assert_eq!(path.len(), d);
                            prop_assert_eq!(model.validate_sequence(a, &path), Validity::Valid);
                            let trace = model.walk(a, &path).unwrap();
                            prop_assert_eq!(trace.last(), Some(b));
                        }
                        (Err(ModelError::Unreachable { .. }), None) => {}
                        (got, want) => prop_assert!(false, "{a}->{b}: {got:?} vs {want:?}"),
                    }
                }
            }
        }
    }
}
