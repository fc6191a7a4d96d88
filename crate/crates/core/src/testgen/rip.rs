//! The test ripper: finds key presses a model does not allow and repairs or
//! removes the cases containing them.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{model_case, TestCase, TestSuite};
use crate::appspec::ActivityId;
use crate::key::KeyKind;
use crate::navmodel::{NavModel, State};

/// Why a step is invalid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RipPatternKind {
    /// OK pressed on a view that opens nothing.
    OkOnNonActionable,
    /// A direction repeated after the previous press already reached the edge.
    StrandedEdgeRepeat,
    /// A key valid in the parent activity, pressed without first going Back.
    MissingBackAfterActivity,
    /// Any other key with no model edge.
    OffModelStep,
}

impl RipPatternKind {
    pub const ALL: [RipPatternKind; 4] = [
        RipPatternKind::OkOnNonActionable,
        RipPatternKind::StrandedEdgeRepeat,
        RipPatternKind::MissingBackAfterActivity,
        RipPatternKind::OffModelStep,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RipAction {
    /// Insert the shortest detour to a state where the key is valid.
    Splice,
    /// Cut the case just before the invalid step.
    Truncate,
    /// Remove the whole case.
    Drop,
}

impl fmt::Display for RipAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RipAction::Splice => "splice",
            RipAction::Truncate => "truncate",
            RipAction::Drop => "drop",
        })
    }
}

impl FromStr for RipAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "splice" => Ok(RipAction::Splice),
            "truncate" => Ok(RipAction::Truncate),
            "drop" => Ok(RipAction::Drop),
            _ => Err(format!("unknown rip action {s:?}")),
        }
    }
}

/// Which action to take for one kind of invalid step. Kinds without a
/// pattern are spliced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RipPattern {
    pub kind: RipPatternKind,
    pub action: RipAction,
}

impl RipPattern {
    /// The same action for every kind.
    pub fn all(action: RipAction) -> Vec<RipPattern> {
        RipPatternKind::ALL.into_iter().map(|kind| RipPattern { kind, action }).collect()
    }
}

/// One repair, indexed by the step's position in the original case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepairEntry {
    pub case: String,
    pub index: usize,
    pub pattern: RipPatternKind,
    pub action: RipAction,
}

/// Repairs every case of `suite` so that it is valid on `model`.
///
/// Valid keys pass through untouched, so ripping a ripped suite changes
/// nothing. Expected events are always re-derived from the model. A case
/// whose start state is unknown is dropped.
pub fn rip(suite: &TestSuite, model: &NavModel, patterns: &[RipPattern]) -> (TestSuite, Vec<RepairEntry>) {
    let mut cases = Vec::new();
    let mut log = Vec::new();
    for case in &suite.cases {
        if !model.contains(&case.start) {
            log.push(RepairEntry {
                case: case.id.clone(),
                index: 0,
                pattern: RipPatternKind::OffModelStep,
                action: RipAction::Drop,
            });
            continue;
        }
        if let Some(repaired) = rip_case(case, model, patterns, &mut log) {
            cases.push(repaired);
        }
    }
    (TestSuite { id: suite.id.clone(), cases }, log)
}

fn rip_case(case: &TestCase, model: &NavModel, patterns: &[RipPattern], log: &mut Vec<RepairEntry>) -> Option<TestCase> {
    let mut keys = Vec::new();
    let mut at = case.start.clone();
    for (index, &key) in case.keys.iter().enumerate() {
        if let Some(next) = model.step(&at, key) {
            keys.push(key);
            at = next.clone();
            continue;
        }
        let pattern = classify(model, &at, key, keys.last().copied());
        let action = patterns.iter().find(|p| p.kind == pattern).map_or(RipAction::Splice, |p| p.action);
        let mut entry = RepairEntry { case: case.id.clone(), index, pattern, action };
        match action {
            RipAction::Drop => {
                log.push(entry);
                return None;
            }
            RipAction::Truncate => {
                log.push(entry);
                break;
            }
            RipAction::Splice => match splice_target(model, &at, key, pattern) {
                Some(target) => {
                    keys.extend(model.shortest_path(&at, &target).expect("target was found by search"));
                    keys.push(key);
                    at = model.step(&target, key).expect("key is valid at target").clone();
                    log.push(entry);
                }
                None => {
                    entry.action = RipAction::Truncate;
                    log.push(entry);
                    break;
                }
            },
        }
    }
    Some(model_case(model, case.id.clone(), &case.start, keys).expect("repaired keys follow the model"))
}

fn classify(model: &NavModel, at: &State, key: KeyKind, previous: Option<KeyKind>) -> RipPatternKind {
    if key == KeyKind::Ok {
        return RipPatternKind::OkOnNonActionable;
    }
    if key.direction().is_some() && previous == Some(key) {
        return RipPatternKind::StrandedEdgeRepeat;
    }
    if at.activity != model.start().activity {
        if let Some(parent) = ok_parent(model, &at.activity) {
            if model.step(&parent, key).is_some() {
                return RipPatternKind::MissingBackAfterActivity;
            }
        }
    }
    RipPatternKind::OffModelStep
}

/// The state whose OK edge opens `activity`, if the model has one.
fn ok_parent(model: &NavModel, activity: &ActivityId) -> Option<State> {
    model
        .edges()
        .find(|t| t.key == KeyKind::Ok && &t.to.activity == activity && &t.from.activity != activity)
        .map(|t| t.from)
}

/// Where to detour to before pressing `key`: the OK-parent for a missing
/// Back, otherwise the nearest state that accepts `key`.
fn splice_target(model: &NavModel, at: &State, key: KeyKind, pattern: RipPatternKind) -> Option<State> {
    if pattern == RipPatternKind::MissingBackAfterActivity {
        if let Some(parent) = ok_parent(model, &at.activity) {
            if model.shortest_path(at, &parent).is_ok() {
                return Some(parent);
            }
        }
    }
    let mut seen = BTreeSet::from([at.clone()]);
    let mut queue = VecDeque::from([at.clone()]);
    while let Some(s) = queue.pop_front() {
        if model.step(&s, key).is_some() {
            return Some(s);
        }
        for (_, next) in model.successors(&s) {
            if seen.insert(next.clone()) {
                queue.push_back(next.clone());
            }
        }
    }
    None
}
