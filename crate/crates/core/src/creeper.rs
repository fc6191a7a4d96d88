//! Black-box view discovery.
//!
//! Exploration is level-synchronous: level *k* probes every view found at
//! level *k − 1*, in discovery order, with each probe key. A probe that moves
//! focus records a transition; if the target is new it joins `L_v` and the
//! next frontier. After every focus-moving probe the creeper goes back to the
//! probed view before trying the next key. Exploration stops when a level
//! finds nothing new or after `it_max` levels.
//!
//! The creeper only sees what the device log reports. It tracks its own
//! position and activity stack from `FocusChanged`, `ActivityOpened` and
//! `ActivityClosed` events.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::appspec::ViewId;
use crate::emulator::{Driver, DriverError, EventKind, LogEvent};
use crate::key::KeyKind;

/// One observed key press that moved focus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(ViewId, KeyKind, ViewId)", into = "(ViewId, KeyKind, ViewId)")]
pub struct Transition {
    pub from: ViewId,
    pub key: KeyKind,
    pub to: ViewId,
}

impl Transition {
    pub fn new(from: ViewId, key: KeyKind, to: ViewId) -> Self {
        Transition { from, key, to }
    }
}

impl From<(ViewId, KeyKind, ViewId)> for Transition {
    fn from((from, key, to): (ViewId, KeyKind, ViewId)) -> Self {
        Transition { from, key, to }
    }
}

impl From<Transition> for (ViewId, KeyKind, ViewId) {
    fn from(t: Transition) -> Self {
        (t.from, t.key, t.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CreeperConfig {
    /// The tester-chosen start view. Without it the creeper starts from the
    /// app's focused view.
    pub start: Option<ViewId>,
    /// Maximum number of levels; [`CreeperConfig::UNBOUNDED`] disables the cap.
    pub it_max: u32,
    pub probe_ok: bool,
    /// OK is not probed once this many activities are stacked above the root.
    pub ok_depth: u32,
    pub probe_order: Vec<KeyKind>,
    /// Optional cap on the total number of probe presses.
    pub probe_budget: Option<u64>,
}

impl CreeperConfig {
    pub const UNBOUNDED: u32 = u32::MAX;

    pub fn default_probe_order() -> Vec<KeyKind> {
        vec![KeyKind::Up, KeyKind::Right, KeyKind::Down, KeyKind::Left, KeyKind::Ok]
    }

    fn enabled_probes(&self) -> Vec<KeyKind> {
        self.probe_order
            .iter()
            .copied()
            .filter(|&k| self.probe_ok || k != KeyKind::Ok)
            .collect()
    }

    fn validate(&self) -> Result<(), CreeperError> {
        if self.it_max == 0 {
            return Err(CreeperError::InvalidConfig("it_max must be at least 1".into()));
        }
        let mut seen = BTreeSet::new();
        for &key in &self.probe_order {
            if key.direction().is_none() && key != KeyKind::Ok {
                return Err(CreeperError::InvalidConfig(format!("{key} cannot be probed")));
            }
            if !seen.insert(key) {
                return Err(CreeperError::InvalidConfig(format!("{key} appears twice in probe_order")));
            }
        }
        if self.enabled_probes().is_empty() {
            return Err(CreeperError::InvalidConfig("no probe keys enabled".into()));
        }
        Ok(())
    }
}

impl Default for CreeperConfig {
    fn default() -> Self {
        CreeperConfig {
            start: None,
            it_max: 50,
            probe_ok: true,
            ok_depth: 4,
            probe_order: CreeperConfig::default_probe_order(),
            probe_budget: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    IterationCap,
    Exhausted,
    ProbeBudget,
    SessionDead,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorationResult {
    pub start: ViewId,
    /// `L_v`: every discovered view in discovery order, start first.
    pub views: Vec<ViewId>,
    /// Transitions seen by probes.
    pub transitions: BTreeSet<Transition>,
    /// Further transitions witnessed while navigating back, such as `Back`
    /// out of an opened activity.
    pub returns: BTreeSet<Transition>,
    /// Views first found at each level.
    pub levels: Vec<Vec<ViewId>>,
    pub stop_reason: StopReason,
    pub probes: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CreeperError {
    #[error("no start point: the app sets no focus and none was chosen")]
    NoStartPoint,
    #[error("invalid creeper configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot start at {view}: {source}")]
    BadStart { view: ViewId, source: DriverError },
    #[error("session died during exploration: {reason}")]
    SessionDead { reason: String, partial: Box<ExplorationResult> },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReturnError {
    #[error("no known path from {from} to {to}")]
    Unreachable { from: ViewId, to: ViewId },
    #[error(transparent)]
    Driver(#[from] DriverError),
}

fn landing(events: &[LogEvent]) -> Option<&ViewId> {
    events.iter().rev().find_map(|e| match &e.kind {
        EventKind::FocusChanged { to, .. } => Some(to),
        _ => None,
    })
}

/// Directional moves inside one activity: known transitions plus the
/// inverse of each one that nothing contradicts.
fn routing_graph(known: &BTreeSet<Transition>) -> BTreeMap<ViewId, BTreeMap<KeyKind, ViewId>> {
    let mut graph: BTreeMap<ViewId, BTreeMap<KeyKind, ViewId>> = BTreeMap::new();
    let directional = known
        .iter()
        .filter(|t| t.key.direction().is_some() && t.from.activity == t.to.activity);
    for t in directional.clone() {
        graph.entry(t.from.clone()).or_default().insert(t.key, t.to.clone());
    }
    for t in directional {
        let inverse = t.key.inverse().expect("directional keys have inverses");
        graph
            .entry(t.to.clone())
            .or_default()
            .entry(inverse)
            .or_insert_with(|| t.from.clone());
    }
    graph
}

fn route(graph: &BTreeMap<ViewId, BTreeMap<KeyKind, ViewId>>, from: &ViewId, to: &ViewId) -> Option<Vec<(KeyKind, ViewId)>> {
    let mut parent: BTreeMap<&ViewId, (&ViewId, KeyKind)> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen = BTreeSet::from([from]);
    while let Some(at) = queue.pop_front() {
        if at == to {
            let mut path = Vec::new();
            let mut cur = at;
            while let Some(&(prev, key)) = parent.get(cur) {
                path.push((key, cur.clone()));
                cur = prev;
            }
            path.reverse();
            return Some(path);
        }
        for (&key, next) in graph.get(at).into_iter().flatten() {
            if seen.insert(next) {
                parent.insert(next, (at, key));
                queue.push_back(next);
            }
        }
    }
    None
}

/// Brings focus from `current` back to `target`.
///
/// Tries the inverse of a known `target → current` transition first (`Back`
/// undoes `OK`), then walks the shortest route over known moves and their
/// inverses, re-planning from wherever focus actually lands.
pub fn return_to<D: Driver + ?Sized>(
    driver: &mut D,
    current: &ViewId,
    target: &ViewId,
    known: &BTreeSet<Transition>,
) -> Result<(), ReturnError> {
    if current == target {
        return Ok(());
    }
    let mut at = current.clone();
    let inverse = known
        .iter()
        .find(|t| &t.from == target && &t.to == current)
        .and_then(|t| t.key.inverse());
    if let Some(key) = inverse {
        let events = driver.press(key)?;
        if let Some(to) = landing(&events) {
            at = to.clone();
        }
        if &at == target {
            return Ok(());
        }
    }
    let mut graph = routing_graph(known);
    if let (Some(key), Some(moves)) = (inverse, graph.get_mut(current)) {
        if &at == current {
            moves.remove(&key);
        }
    }
    for _ in 0..8 {
        let Some(path) = route(&graph, &at, target) else { break };
        for (key, expected) in path {
            let from = at.clone();
            let events = driver.press(key)?;
            if let Some(to) = landing(&events) {
                at = to.clone();
            }
            if at != expected {
                // the assumed move was wrong; forget it and re-plan
                if let Some(moves) = graph.get_mut(&from) {
                    moves.remove(&key);
                }
                break;
            }
        }
        if &at == target {
            return Ok(());
        }
    }
    Err(ReturnError::Unreachable { from: current.clone(), to: target.clone() })
}

/// Wraps the driver, tracking position and activity stack from the log and
/// remembering every focus-moving press.
struct Walker<'d, D: Driver + ?Sized> {
    driver: &'d mut D,
    current: Option<ViewId>,
    /// Views OK was pressed on to open each stacked activity, bottom first.
    chain: Vec<ViewId>,
    observed: BTreeSet<Transition>,
    dead: Option<String>,
}

impl<D: Driver + ?Sized> Driver for Walker<'_, D> {
    fn boot(&mut self) {
        self.driver.boot();
        self.current = self.driver.focused();
        self.chain.clear();
    }

    fn set_focus(&mut self, view: &ViewId) -> Result<(), DriverError> {
        self.driver.set_focus(view)?;
        self.current = Some(view.clone());
        Ok(())
    }

    fn press(&mut self, key: KeyKind) -> Result<Vec<LogEvent>, DriverError> {
        let events = match self.driver.press(key) {
            Ok(events) => events,
            Err(e) => {
                self.dead = Some(e.to_string());
                return Err(e);
            }
        };
        let before = self.current.clone();
        for event in &events {
            match &event.kind {
                EventKind::ActivityOpened { .. } => {
                    if let Some(at) = &self.current {
                        self.chain.push(at.clone());
                    }
                }
                EventKind::ActivityClosed { .. } => {
                    self.chain.pop();
                }
                EventKind::FocusChanged { to, .. } => self.current = Some(to.clone()),
                kind if kind.ends_session() => {
                    self.dead = Some(format!("device reported {kind:?}"));
                    self.current = None;
                }
                _ => {}
            }
        }
        if let (Some(from), Some(to)) = (before, &self.current) {
            if &from != to {
                self.observed.insert(Transition::new(from, key, to.clone()));
            }
        }
        Ok(events)
    }

    fn read_log(&self, since_tick: u64) -> Vec<LogEvent> {
        self.driver.read_log(since_tick)
    }

    fn focused(&self) -> Option<ViewId> {
        self.current.clone()
    }
}

impl<D: Driver + ?Sized> Walker<'_, D> {
    fn alive(&self) -> Result<(), String> {
        match &self.dead {
            Some(reason) => Err(reason.clone()),
            None => Ok(()),
        }
    }

    /// Moves within the current activity.
    fn move_within(&mut self, target: &ViewId) -> Result<bool, String> {
        let Some(at) = self.current.clone() else { return Ok(false) };
        let known = self.observed.clone();
        let outcome = return_to(self, &at, target, &known);
        self.alive()?;
        Ok(outcome.is_ok())
    }

    /// Goes to `target`, whose activity was opened through `context`.
    fn go_to(&mut self, target: &ViewId, context: &[ViewId]) -> Result<bool, String> {
        while !context.starts_with(&self.chain) {
            let depth = self.chain.len();
            // errors mark the walker dead
            let _ = self.press(KeyKind::Back);
            self.alive()?;
            if self.chain.len() >= depth {
                return Ok(false);
            }
        }
        for ok_view in &context[self.chain.len()..] {
            if !self.move_within(ok_view)? || self.current.as_ref() != Some(ok_view) {
                return Ok(false);
            }
            let depth = self.chain.len();
            let _ = self.press(KeyKind::Ok);
            self.alive()?;
            if self.chain.len() != depth + 1 {
                return Ok(false);
            }
        }
        Ok(self.move_within(target)? && self.current.as_ref() == Some(target))
    }
}

/// Discovers views and one-step transitions reachable from the start view.
pub fn explore<D: Driver + ?Sized>(driver: &mut D, config: &CreeperConfig) -> Result<ExplorationResult, CreeperError> {
    config.validate()?;
    let start = match &config.start {
        Some(view) => {
            driver
                .set_focus(view)
                .map_err(|source| CreeperError::BadStart { view: view.clone(), source })?;
            view.clone()
        }
        None => driver.focused().ok_or(CreeperError::NoStartPoint)?,
    };
    let probes_enabled = config.enabled_probes();

    let mut walker = Walker {
        driver,
        current: Some(start.clone()),
        chain: Vec::new(),
        observed: BTreeSet::new(),
        dead: None,
    };
    let mut result = ExplorationResult {
        start: start.clone(),
        views: vec![start.clone()],
        transitions: BTreeSet::new(),
        returns: BTreeSet::new(),
        levels: Vec::new(),
        stop_reason: StopReason::Exhausted,
        probes: 0,
        warnings: Vec::new(),
    };
    let mut contexts: BTreeMap<ViewId, Vec<ViewId>> = BTreeMap::from([(start.clone(), Vec::new())]);
    let mut frontier = vec![start];

    let outcome: Result<StopReason, String> = 'levels: loop {
        if result.levels.len() as u64 >= u64::from(config.it_max) {
            break Ok(StopReason::IterationCap);
        }
        let mut fresh = Vec::new();
        for view in &frontier {
            match walker.go_to(view, &contexts[view]) {
                Ok(true) => {}
                Ok(false) => {
                    result.warnings.push(format!("could not navigate to {view}; its probes were skipped"));
                    continue;
                }
                Err(reason) => break 'levels Err(reason),
            }
            for &key in &probes_enabled {
                if key == KeyKind::Ok && walker.chain.len() as u64 >= u64::from(config.ok_depth) {
                    continue;
                }
                if config.probe_budget.is_some_and(|budget| result.probes >= budget) {
                    if !fresh.is_empty() {
                        result.levels.push(std::mem::take(&mut fresh));
                    }
                    break 'levels Ok(StopReason::ProbeBudget);
                }
                result.probes += 1;
                let _ = walker.press(key);
                if let Err(reason) = walker.alive() {
                    break 'levels Err(reason);
                }
                let Some(to) = walker.current.clone() else { continue };
                if &to == view {
                    continue;
                }
                result.transitions.insert(Transition::new(view.clone(), key, to.clone()));
                if !contexts.contains_key(&to) {
                    contexts.insert(to.clone(), walker.chain.clone());
                    result.views.push(to.clone());
                    fresh.push(to.clone());
                }
                match walker.go_to(view, &contexts[view]) {
                    Ok(true) => {}
                    Ok(false) => {
                        result
                            .warnings
                            .push(format!("no way back from {to} to {view}; remaining probes of {view} abandoned"));
                        break;
                    }
                    Err(reason) => break 'levels Err(reason),
                }
            }
        }
        if fresh.is_empty() {
            break Ok(StopReason::Exhausted);
        }
        result.levels.push(fresh.clone());
        frontier = fresh;
    };

    result.returns = walker.observed.difference(&result.transitions).cloned().collect();
    match outcome {
        Ok(reason) => {
            result.stop_reason = reason;
            Ok(result)
        }
        Err(reason) => {
            result.stop_reason = StopReason::SessionDead;
            Err(CreeperError::SessionDead { reason, partial: Box::new(result) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appspec::{pilot_app, synth_app, ActivityId, FaultKind, FaultPlant, LayoutPattern, PatternKind};
    use crate::emulator::EmulatorSession;

    fn v(i: u32) -> ViewId {
        ViewId::new(&ActivityId::new("main").unwrap(), i)
    }

    fn pilot_config(it_max: u32) -> CreeperConfig {
        CreeperConfig { start: Some(v(1)), it_max, probe_ok: false, ..CreeperConfig::default() }
    }

    #[test]
    fn pilot_three_iterations_match_the_worked_example() {
        let mut session = EmulatorSession::boot(pilot_app());
        let result = explore(&mut session, &pilot_config(3)).unwrap();
        let want = vec![vec![v(2), v(5)], vec![v(3), v(6), v(9)], vec![v(4), v(7), v(10), v(13)]];
        assert_eq!(result.levels, want);
        assert_eq!(result.views.len(), 10);
        assert_eq!(result.stop_reason, StopReason::IterationCap);
        assert!(result.transitions.contains(&Transition::new(v(5), KeyKind::Up, v(1))));
        assert!(result.returns.contains(&Transition::new(v(13), KeyKind::Up, v(9))));
    }

    #[test]
    fn single_view_app_is_exhausted_immediately() {
        let spec = synth_app(LayoutPattern { kind: PatternKind::A, rows: 1, cols: 1 }, 1, 0, 0).unwrap();
        let mut session = EmulatorSession::boot(spec.clone());
        let result = explore(&mut session, &CreeperConfig { it_max: 7, ..CreeperConfig::default() }).unwrap();
        assert_eq!(result.views, vec![spec.root_activity().views[0].clone()]);
        assert!(result.transitions.is_empty());
        assert!(result.levels.is_empty());
        assert_eq!(result.stop_reason, StopReason::Exhausted);
    }

    #[test]
    fn missing_start_point_is_an_error() {
        let mut session = EmulatorSession::boot(pilot_app());
        let config = CreeperConfig { it_max: 3, ..CreeperConfig::default() };
        assert_eq!(explore(&mut session, &config), Err(CreeperError::NoStartPoint));
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut session = EmulatorSession::boot(pilot_app());
        let zero = CreeperConfig { it_max: 0, ..pilot_config(1) };
        assert!(matches!(explore(&mut session, &zero), Err(CreeperError::InvalidConfig(_))));
        let dup = CreeperConfig { probe_order: vec![KeyKind::Up, KeyKind::Up], ..pilot_config(1) };
        assert!(matches!(explore(&mut session, &dup), Err(CreeperError::InvalidConfig(_))));
        let back = CreeperConfig { probe_order: vec![KeyKind::Back], ..pilot_config(1) };
        assert!(matches!(explore(&mut session, &back), Err(CreeperError::InvalidConfig(_))));
    }

    #[test]
    fn probe_budget_stops_early() {
        let mut session = EmulatorSession::boot(pilot_app());
        let config = CreeperConfig { probe_budget: Some(6), ..pilot_config(10) };
        let result = explore(&mut session, &config).unwrap();
        assert_eq!(result.stop_reason, StopReason::ProbeBudget);
        assert_eq!(result.probes, 6);
        // v1 takes four probes, v2 two more (Up, Right)
        assert_eq!(result.levels, vec![vec![v(2), v(5)], vec![v(3)]]);
    }

    #[test]
    fn halting_mid_exploration_returns_the_partial_result() {
        let mut spec = pilot_app();
        spec.plants.push(FaultPlant { kind: FaultKind::SystemHalt, view: v(2), key: Some(KeyKind::Down) });
        let mut session = EmulatorSession::boot(spec);
        match explore(&mut session, &pilot_config(3)) {
            Err(CreeperError::SessionDead { partial, .. }) => {
                assert_eq!(partial.stop_reason, StopReason::SessionDead);
                assert_eq!(partial.views, vec![v(1), v(2), v(5), v(3)]);
            }
            other => panic!("expected SessionDead, got {other:?}"),
        }
    }

    #[test]
    fn return_to_uses_the_inverse_key() {
        let mut session = EmulatorSession::boot(pilot_app());
        session.set_focus(&v(1)).unwrap();
        session.press(KeyKind::Right).unwrap();
        let known = BTreeSet::from([Transition::new(v(1), KeyKind::Right, v(2))]);
        let before = session.log().len();
        return_to(&mut session, &v(2), &v(1), &known).unwrap();
        assert_eq!(session.focus(), Some(&v(1)));
        assert_eq!(session.log().len(), before + 1);
    }

    #[test]
    fn return_to_self_presses_nothing() {
        let mut session = EmulatorSession::boot(pilot_app());
        session.set_focus(&v(6)).unwrap();
        let before = session.log().len();
        return_to(&mut session, &v(6), &v(6), &BTreeSet::new()).unwrap();
        assert_eq!(session.log().len(), before);
    }

    #[test]
    fn return_to_backs_out_of_an_opened_activity() {
        let spec = synth_app(LayoutPattern { kind: PatternKind::B, rows: 2, cols: 2 }, 2, 0, 4).unwrap();
        let (site, _) = spec.root_activity().ok_targets.iter().next().unwrap();
        let mut session = EmulatorSession::boot(spec.clone());
        session.set_focus(site).unwrap();
        let events = session.press(KeyKind::Ok).unwrap();
        let entry = landing(&events).unwrap().clone();
        let known = BTreeSet::from([Transition::new(site.clone(), KeyKind::Ok, entry.clone())]);
        return_to(&mut session, &entry, site, &known).unwrap();
        assert_eq!(session.focus(), Some(site));
        assert_eq!(session.top_activity(), &spec.root);
    }

    #[test]
    fn return_to_reroutes_around_asymmetric_moves() {
        let mut spec = pilot_app();
        // Left from v2 goes nowhere, so the way back from v2 to v1 is Down, Left, Up
        spec.plants.push(FaultPlant { kind: FaultKind::KeyNoResponse, view: v(2), key: Some(KeyKind::Left) });
        let mut session = EmulatorSession::boot(spec);
        session.set_focus(&v(2)).unwrap();
        let known = BTreeSet::from([
            Transition::new(v(1), KeyKind::Right, v(2)),
            Transition::new(v(2), KeyKind::Down, v(6)),
            Transition::new(v(6), KeyKind::Left, v(5)),
            Transition::new(v(5), KeyKind::Up, v(1)),
        ]);
        return_to(&mut session, &v(2), &v(1), &known).unwrap();
        assert_eq!(session.focus(), Some(&v(1)));
    }

    #[test]
    fn return_to_reports_unreachable() {
        let mut spec = pilot_app();
        spec.plants.push(FaultPlant { kind: FaultKind::KeyNoResponse, view: v(2), key: Some(KeyKind::Left) });
        let mut session = EmulatorSession::boot(spec);
        session.set_focus(&v(2)).unwrap();
        let known = BTreeSet::from([Transition::new(v(1), KeyKind::Right, v(2))]);
        assert!(matches!(
            return_to(&mut session, &v(2), &v(1), &known),
            Err(ReturnError::Unreachable { .. })
        ));
    }

    #[test]
    fn explores_across_activities() {
        let spec = synth_app(LayoutPattern { kind: PatternKind::C, rows: 2, cols: 3 }, 3, 0, 9).unwrap();
        let mut session = EmulatorSession::boot(spec.clone());
        let result = explore(&mut session, &CreeperConfig { it_max: CreeperConfig::UNBOUNDED, ..CreeperConfig::default() }).unwrap();
        assert_eq!(result.views.len(), 18);
        assert_eq!(result.stop_reason, StopReason::Exhausted);
        assert!(result.warnings.is_empty(), "{:?}", result.warnings);
        assert!(result.returns.iter().any(|t| t.key == KeyKind::Back));
    }

    #[test]
    fn exploration_is_deterministic() {
        let spec = synth_app(LayoutPattern { kind: PatternKind::B, rows: 4, cols: 4 }, 3, 0, 21).unwrap();
        let run = || {
            let mut session = EmulatorSession::boot(spec.clone());
            explore(&mut session, &CreeperConfig::default()).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn result_json_round_trips() {
        let mut session = EmulatorSession::boot(pilot_app());
        let result = explore(&mut session, &pilot_config(3)).unwrap();
        let json = serde_json::to_string(&result).unwrap();
        assert!(json.contains(r#"["main:v1","Right","main:v2"]"#));
        assert_eq!(serde_json::from_str::<ExplorationResult>(&json).unwrap(), result);
    }
}
