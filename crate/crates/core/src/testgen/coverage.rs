use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{pairs_in_trace, reachable_pairs, TestSuite};
use crate::creeper::Transition;
use crate::navmodel::NavModel;

/// Coverage of a suite over a model. Percentages are 100 when there is
/// nothing to cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub states: f64,
    pub edges: f64,
    pub pairs: f64,
    pub states_covered: usize,
    pub states_total: usize,
    pub edges_covered: usize,
    pub edges_total: usize,
    pub pairs_covered: usize,
    pub pairs_total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoverageError {
    #[error("case {case} leaves the model at step {at}")]
    InvalidSuite { case: String, at: usize },
}

fn percent(covered: usize, total: usize) -> f64 {
    if total == 0 {
        100.0
    } else {
        covered as f64 * 100.0 / total as f64
    }
}

pub fn coverage_of(suite: &TestSuite, model: &NavModel) -> Result<CoverageReport, CoverageError> {
    let mut states = BTreeSet::new();
    let mut edges = BTreeSet::new();
    let mut pairs = BTreeSet::new();
    for case in &suite.cases {
        let trace = model
            .walk(&case.start, &case.keys)
            .map_err(|(at, _)| CoverageError::InvalidSuite { case: case.id.clone(), at })?;
        for (pair, key) in trace.windows(2).zip(&case.keys) {
            edges.insert(Transition::new(pair[0].clone(), *key, pair[1].clone()));
        }
        pairs.extend(pairs_in_trace(&trace));
        states.extend(trace);
    }
    let pairs_total = reachable_pairs(model).len();
    Ok(CoverageReport {
        states: percent(states.len(), model.states().len()),
        edges: percent(edges.len(), model.edge_count()),
        pairs: percent(pairs.len(), pairs_total),
        states_covered: states.len(),
        states_total: model.states().len(),
        edges_covered: edges.len(),
        edges_total: model.edge_count(),
        pairs_covered: pairs.len(),
        pairs_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appspec::{pilot_app, ActivityId, ViewId};
    use crate::creeper::{explore, CreeperConfig};
    use crate::emulator::EmulatorSession;
    use crate::key::KeyKind;
    use crate::navmodel::build_model;
    use crate::testgen::TestCase;

    fn pilot_model() -> NavModel {
        let v1 = ViewId::new(&ActivityId::new("main").unwrap(), 1);
        let mut session = EmulatorSession::boot(pilot_app());
        let config = CreeperConfig { start: Some(v1), it_max: 3, probe_ok: false, ..CreeperConfig::default() };
        build_model(&explore(&mut session, &config).unwrap()).unwrap()
    }

    #[test]
    fn empty_suite_covers_nothing() {
        let model = pilot_model();
        let report = coverage_of(&TestSuite { id: "e".into(), cases: vec![] }, &model).unwrap();
        assert_eq!(report.states, 0.0);
        assert_eq!(report.states_total, 10);
    }

    #[test]
    fn single_case_counts() {
        let model = pilot_model();
        let case = TestCase {
            id: "c".into(),
            start: model.start().clone(),
            keys: vec![KeyKind::Right, KeyKind::Down],
            expected: vec![],
        };
        let report = coverage_of(&TestSuite { id: "s".into(), cases: vec![case] }, &model).unwrap();
        assert_eq!(report.states_covered, 3);
        assert_eq!(report.edges_covered, 2);
        assert_eq!(report.pairs_covered, 3);
        assert_eq!(report.states, 30.0);
    }

    #[test]
    fn invalid_case_is_rejected() {
        let model = pilot_model();
        let case = TestCase { id: "c".into(), start: model.start().clone(), keys: vec![KeyKind::Left], expected: vec![] };
        let err = coverage_of(&TestSuite { id: "s".into(), cases: vec![case] }, &model).unwrap_err();
        assert_eq!(err, CoverageError::InvalidSuite { case: "c".into(), at: 0 });
    }
}
