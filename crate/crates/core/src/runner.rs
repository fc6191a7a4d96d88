//! Replays test suites on the emulator and judges each case against the
//! events its model predicted.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::appspec::{AppSpec, FaultKind, ViewId};
use crate::emulator::{Driver, DriverError, EmulatorSession, EventKind, LogEvent};
use crate::key::KeyKind;
use crate::testgen::{CoverageReport, TestCase, TestSuite};

/// Responses delayed by more than this many ticks fail.
pub const DEFAULT_DELAY_THRESHOLD: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FaultClass {
    KeyNoResponse,
    WrongKeyResponse,
    AppExit,
    SystemHalt,
    SystemReboot,
    BlackScreen,
    BlurryScreen,
    VoiceNoImage,
    ExcessiveDelay,
    Unknown,
}

impl FaultClass {
    /// The class a run should report for a planted fault.
    pub fn of(kind: &FaultKind) -> FaultClass {
        match kind {
            FaultKind::KeyNoResponse => FaultClass::KeyNoResponse,
            FaultKind::WrongKeyResponse { .. } => FaultClass::WrongKeyResponse,
            FaultKind::AppExit => FaultClass::AppExit,
            FaultKind::BlackScreen => FaultClass::BlackScreen,
            FaultKind::SystemHalt => FaultClass::SystemHalt,
            FaultKind::SystemReboot => FaultClass::SystemReboot,
            FaultKind::ResponseDelay { .. } => FaultClass::ExcessiveDelay,
            FaultKind::BlurryScreen => FaultClass::BlurryScreen,
            FaultKind::VoiceNoImage => FaultClass::VoiceNoImage,
        }
    }
}

impl fmt::Display for FaultClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail { at: usize, fault: FaultClass },
    Blocked { reason: String },
}

/// Where a failure happened: the view focused before the failing press.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Site {
    pub case: String,
    pub step: usize,
    pub view: ViewId,
    pub key: KeyKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "VerdictDoc", try_from = "VerdictDoc")]
pub struct Verdict {
    pub case: String,
    pub outcome: Outcome,
    /// Events of the replayed steps, in order.
    pub observed: Vec<LogEvent>,
    /// Steps not executed because the session ended.
    pub blocked_steps: usize,
    pub site: Option<Site>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerdictDoc {
    id: String,
    outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fault: Option<FaultClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    site: Option<Site>,
    blocked_steps: usize,
    observed: Vec<LogEvent>,
}

impl From<Verdict> for VerdictDoc {
    fn from(v: Verdict) -> Self {
        let (outcome, fault, step, reason) = match v.outcome {
            Outcome::Pass => ("Pass", None, None, None),
            Outcome::Fail { at, fault } => ("Fail", Some(fault), Some(at), None),
            Outcome::Blocked { reason } => ("Blocked", None, None, Some(reason)),
        };
        VerdictDoc {
            id: v.case,
            outcome: outcome.into(),
            fault,
            step,
            reason,
            site: v.site,
            blocked_steps: v.blocked_steps,
            observed: v.observed,
        }
    }
}

impl TryFrom<VerdictDoc> for Verdict {
    type Error = String;

    fn try_from(d: VerdictDoc) -> Result<Self, Self::Error> {
        let outcome = match (d.outcome.as_str(), d.fault, d.step, d.reason) {
            ("Pass", None, None, None) => Outcome::Pass,
            ("Fail", Some(fault), Some(at), None) => Outcome::Fail { at, fault },
            ("Blocked", None, None, Some(reason)) => Outcome::Blocked { reason },
            (other, ..) => return Err(format!("inconsistent outcome {other:?} for case {}", d.id)),
        };
        Ok(Verdict { case: d.id, outcome, observed: d.observed, blocked_steps: d.blocked_steps, site: d.site })
    }
}

/// Run settings echoed into the report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub criterion: Option<String>,
    pub delay_threshold: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { seed: None, criterion: None, delay_threshold: DEFAULT_DELAY_THRESHOLD }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub suite: String,
    pub pass: usize,
    pub fail: usize,
    pub blocked: usize,
    pub faults: BTreeMap<FaultClass, usize>,
    pub fault_sites: BTreeMap<FaultClass, Vec<Site>>,
    pub coverage: Option<CoverageReport>,
    pub config: RunConfig,
    /// Emulator clock summed over all cases.
    pub duration_ticks: u64,
    pub cases: Vec<Verdict>,
}

impl RunReport {
    /// Builds the summary from verdicts, which are ordered by case id.
    pub fn new(suite: impl Into<String>, mut cases: Vec<Verdict>, config: RunConfig, duration_ticks: u64) -> Self {
        cases.sort_by(|a, b| a.case.cmp(&b.case));
        let mut report = RunReport {
            suite: suite.into(),
            pass: 0,
            fail: 0,
            blocked: 0,
            faults: BTreeMap::new(),
            fault_sites: BTreeMap::new(),
            coverage: None,
            config,
            duration_ticks,
            cases: Vec::new(),
        };
        for verdict in &cases {
            match verdict.outcome {
                Outcome::Pass => report.pass += 1,
                Outcome::Blocked { .. } => report.blocked += 1,
                Outcome::Fail { fault, .. } => {
                    report.fail += 1;
                    *report.faults.entry(fault).or_default() += 1;
                    if let Some(site) = &verdict.site {
                        report.fault_sites.entry(fault).or_default().push(site.clone());
                    }
                }
            }
        }
        report.cases = cases;
        report
    }

    pub fn all_passed(&self) -> bool {
        self.fail == 0 && self.blocked == 0
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("case {case} starts at {view}, which the app does not show after boot")]
    SpecMismatch { case: String, view: ViewId },
}

fn class_of_terminal(event: &EventKind) -> Option<FaultClass> {
    match event {
        EventKind::AppExited => Some(FaultClass::AppExit),
        EventKind::SystemHalted => Some(FaultClass::SystemHalt),
        EventKind::SystemRebooted => Some(FaultClass::SystemReboot),
        _ => None,
    }
}

fn class_of_symptom(event: &EventKind) -> Option<FaultClass> {
    match event {
        EventKind::ScreenBlack { .. } => Some(FaultClass::BlackScreen),
        EventKind::ScreenBlurry { .. } => Some(FaultClass::BlurryScreen),
        EventKind::AudioOnly { .. } => Some(FaultClass::VoiceNoImage),
        _ => None,
    }
}

fn landing(events: &[EventKind]) -> Option<&ViewId> {
    events.iter().rev().find_map(|e| match e {
        EventKind::FocusChanged { to, .. } => Some(to),
        _ => None,
    })
}

/// Judges one step. `None` means it matched.
fn classify_step(expected: &[EventKind], observed: &[EventKind], delay_threshold: u32) -> Option<FaultClass> {
    if let Some(class) = observed.iter().find_map(class_of_terminal) {
        return Some(class);
    }
    let delay: u64 = observed
        .iter()
        .map(|e| match e {
            EventKind::Delayed { ticks } => u64::from(*ticks),
            _ => 0,
        })
        .sum();
    if delay > u64::from(delay_threshold) {
        return Some(FaultClass::ExcessiveDelay);
    }
    let plain: Vec<&EventKind> = observed
        .iter()
        .filter(|e| !e.is_symptom() && !matches!(e, EventKind::Delayed { .. }))
        .collect();
    if plain.len() != expected.len() || plain.iter().zip(expected).any(|(o, e)| *o != e) {
        let plain: Vec<EventKind> = plain.into_iter().cloned().collect();
        return Some(match (landing(expected), landing(&plain)) {
            (Some(_), None) if matches!(plain.as_slice(), [EventKind::NoReaction { .. }]) => FaultClass::KeyNoResponse,
            (Some(want), Some(got)) if want != got => FaultClass::WrongKeyResponse,
            _ => FaultClass::Unknown,
        });
    }
    observed.iter().find_map(class_of_symptom)
}

/// Compares observed steps with expected ones. The first divergent step
/// decides the outcome. Within a step, a session-ending event wins, then an
/// excessive delay, then a mismatch of the navigation events, then a screen
/// or audio symptom.
pub fn classify(expected: &[Vec<EventKind>], observed: &[Vec<LogEvent>], delay_threshold: u32) -> Outcome {
    for (at, (want, got)) in expected.iter().zip(observed).enumerate() {
        let got: Vec<EventKind> = got.iter().map(|e| e.kind.clone()).collect();
        if let Some(fault) = classify_step(want, &got, delay_threshold) {
            return Outcome::Fail { at, fault };
        }
    }
    if observed.len() < expected.len() {
        return Outcome::Blocked { reason: format!("only {} of {} steps ran", observed.len(), expected.len()) };
    }
    Outcome::Pass
}

/// The view a case expects focus on before step `at`.
fn view_before(case: &TestCase, at: usize) -> ViewId {
    case.expected[..at]
        .iter()
        .rev()
        .find_map(|step| landing(step))
        .unwrap_or(&case.start)
        .clone()
}

/// Runs one case on a fresh boot. Returns the verdict and the ticks used.
pub fn run_case(case: &TestCase, spec: &AppSpec, delay_threshold: u32) -> Result<(Verdict, u64), RunError> {
    let mut session = EmulatorSession::boot(spec.clone());
    session
        .set_focus(&case.start)
        .map_err(|_| RunError::SpecMismatch { case: case.id.clone(), view: case.start.clone() })?;
    let before = session.clock();
    let mut steps: Vec<Vec<LogEvent>> = Vec::new();
    let mut refused = None;
    for &key in &case.keys {
        match session.press(key) {
            Ok(events) => {
                let ended = events.iter().any(|e| e.kind.ends_session());
                steps.push(events);
                if ended {
                    break;
                }
            }
            Err(err @ (DriverError::Halted | DriverError::Exited | DriverError::UnknownView(_))) => {
                refused = Some(err.to_string());
                break;
            }
        }
    }
    let mut outcome = classify(&case.expected, &steps, delay_threshold);
    if let (Outcome::Blocked { .. }, Some(reason)) = (&outcome, refused) {
        outcome = Outcome::Blocked { reason };
    }
    let site = match outcome {
        Outcome::Fail { at, .. } => Some(Site { case: case.id.clone(), step: at, view: view_before(case, at), key: case.keys[at] }),
        _ => None,
    };
    let verdict = Verdict {
        case: case.id.clone(),
        outcome,
        blocked_steps: case.keys.len() - steps.len(),
        observed: steps.into_iter().flatten().collect(),
        site,
    };
    Ok((verdict, session.clock() - before))
}

/// Runs every case of `suite` on its own freshly booted emulator.
pub fn run_suite(suite: &TestSuite, spec: &AppSpec, config: RunConfig) -> Result<RunReport, RunError> {
    let mut verdicts = Vec::with_capacity(suite.cases.len());
    let mut ticks = 0;
    for case in &suite.cases {
        let (verdict, used) = run_case(case, spec, config.delay_threshold)?;
        verdicts.push(verdict);
        ticks += used;
    }
    Ok(RunReport::new(suite.id.clone(), verdicts, config, ticks))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "text" => Ok(ReportFormat::Text),
            _ => Err(format!("unknown format {s:?}, expected json or text")),
        }
    }
}

pub fn emit_report(report: &RunReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
            out.push(b'\n');
            out
        }
        ReportFormat::Text => text_report(report).into_bytes(),
    }
}

fn text_report(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "suite {}", report.suite);
    let _ = writeln!(out, "pass {}  fail {}  blocked {}", report.pass, report.fail, report.blocked);
    if let Some(c) = &report.coverage {
        let _ = writeln!(
            out,
            "coverage  states {:.1}% ({}/{})  edges {:.1}% ({}/{})  pairs {:.1}% ({}/{})",
            c.states, c.states_covered, c.states_total, c.edges, c.edges_covered, c.edges_total, c.pairs,
            c.pairs_covered, c.pairs_total
        );
    }
    let _ = writeln!(out, "duration {} ticks", report.duration_ticks);
    for (class, count) in &report.faults {
        let _ = writeln!(out, "fault {class}: {count}");
        for site in report.fault_sites.get(class).into_iter().flatten() {
            let _ = writeln!(out, "  {} step {} at {} key {}", site.case, site.step, site.view, site.key);
        }
    }
    let width = report.cases.iter().map(|v| v.case.len()).max().unwrap_or(4).max(4);
    let _ = writeln!(out, "{:<width$}  outcome", "case");
    for verdict in &report.cases {
        let outcome = match &verdict.outcome {
            Outcome::Pass => "pass".to_string(),
            Outcome::Fail { at, fault } => format!("FAIL {fault} at step {at}"),
            Outcome::Blocked { reason } => format!("blocked: {reason}"),
        };
        let _ = writeln!(out, "{:<width$}  {outcome}", verdict.case);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appspec::{pilot_app, synth_app, ActivityId, FaultPlant, LayoutPattern, PatternKind};
    use crate::creeper::{explore, CreeperConfig};
    use crate::navmodel::{build_model, NavModel};
    use crate::testgen::{expected_events, generate, model_case, CoverageCriterion};

    fn v(i: u32) -> ViewId {
        ViewId::new(&ActivityId::new("main").unwrap(), i)
    }

    fn ev(tick: u64, kind: EventKind) -> LogEvent {
        LogEvent { tick, kind }
    }

    fn focus(from: u32, to: u32) -> EventKind {
        EventKind::FocusChanged { from: Some(v(from)), to: v(to) }
    }

    fn pilot_model() -> NavModel {
        let mut session = EmulatorSession::boot(pilot_app());
        let config = CreeperConfig { start: Some(v(1)), it_max: 3, probe_ok: false, ..CreeperConfig::default() };
        build_model(&explore(&mut session, &config).unwrap()).unwrap()
    }

    #[test]
    fn classify_examples() {
        let want = vec![vec![focus(1, 2)]];
        let no_reaction = vec![vec![ev(1, EventKind::NoReaction { key: KeyKind::Right })]];
        assert_eq!(classify(&want, &no_reaction, 3), Outcome::Fail { at: 0, fault: FaultClass::KeyNoResponse });
        let wrong = vec![vec![ev(1, focus(1, 5))]];
        assert_eq!(classify(&want, &wrong, 3), Outcome::Fail { at: 0, fault: FaultClass::WrongKeyResponse });
        let exact = vec![vec![ev(1, focus(1, 2))]];
        assert_eq!(classify(&want, &exact, 3), Outcome::Pass);
    }

    #[test]
    fn classify_delays_against_the_threshold() {
        let want = vec![vec![focus(1, 2)]];
        let slow = |ticks| vec![vec![ev(1, EventKind::Delayed { ticks }), ev(2 + u64::from(ticks), focus(1, 2))]];
        assert_eq!(classify(&want, &slow(3), 3), Outcome::Pass);
        assert_eq!(classify(&want, &slow(4), 3), Outcome::Fail { at: 0, fault: FaultClass::ExcessiveDelay });
    }

    #[test]
    fn classify_terminal_and_visual_events() {
        let want = vec![vec![focus(1, 2)], vec![focus(2, 3)]];
        let halted = vec![vec![ev(1, focus(1, 2))], vec![ev(2, EventKind::SystemHalted)]];
        assert_eq!(classify(&want, &halted, 3), Outcome::Fail { at: 1, fault: FaultClass::SystemHalt });
        let blurry = vec![vec![ev(1, focus(1, 2)), ev(2, EventKind::ScreenBlurry { view: v(2) })], vec![]];
        assert_eq!(classify(&want, &blurry, 3), Outcome::Fail { at: 0, fault: FaultClass::BlurryScreen });
        let odd = vec![vec![ev(1, EventKind::ActivityClosed { id: ActivityId::new("main").unwrap() })]];
        assert_eq!(classify(&want, &odd, 3), Outcome::Fail { at: 0, fault: FaultClass::Unknown });
    }

    #[test]
    fn fault_free_pilot_passes() {
        let model = pilot_model();
        let suite = generate(&model, CoverageCriterion::TransitionCoverage, 0).unwrap();
        let report = run_suite(&suite, &pilot_app(), RunConfig::default()).unwrap();
        assert_eq!(report.pass, suite.cases.len());
        assert!(report.all_passed());
        assert!(report.faults.is_empty());
    }

    #[test]
    fn key_no_response_is_localized() {
        let mut spec = pilot_app();
        spec.plants.push(FaultPlant { kind: FaultKind::KeyNoResponse, view: v(1), key: Some(KeyKind::Right) });
        let model = pilot_model();
        let case = model_case(&model, "c".into(), &v(1), vec![KeyKind::Down, KeyKind::Up, KeyKind::Right]).unwrap();
        let suite = TestSuite { id: "s".into(), cases: vec![case] };
        let report = run_suite(&suite, &spec, RunConfig::default()).unwrap();
        assert_eq!(report.cases[0].outcome, Outcome::Fail { at: 2, fault: FaultClass::KeyNoResponse });
        let site = &report.fault_sites[&FaultClass::KeyNoResponse][0];
        assert_eq!((site.view.clone(), site.key, site.step), (v(1), KeyKind::Right, 2));
    }

    #[test]
    fn halt_blocks_remaining_steps() {
        let spec = synth_app(LayoutPattern { kind: PatternKind::B, rows: 2, cols: 2 }, 2, 0, 1).unwrap();
        let mut session = EmulatorSession::boot(spec.clone());
        let config = CreeperConfig { it_max: CreeperConfig::UNBOUNDED, ..CreeperConfig::default() };
        let model = build_model(&explore(&mut session, &config).unwrap()).unwrap();
        let open = model.edges().find(|t| t.key == KeyKind::Ok).expect("synthesized app has an OK link");
        let mut keys = model.shortest_path(model.start(), &open.from).unwrap();
        let at = keys.len();
        keys.extend([KeyKind::Ok, KeyKind::Back, KeyKind::Ok]);
        let case = model_case(&model, "c".into(), model.start(), keys).unwrap();
        let mut planted = spec.clone();
        planted.plants.push(FaultPlant { kind: FaultKind::SystemHalt, view: open.from.clone(), key: Some(KeyKind::Ok) });
        let report = run_suite(&TestSuite { id: "s".into(), cases: vec![case] }, &planted, RunConfig::default()).unwrap();
        assert_eq!(report.cases[0].outcome, Outcome::Fail { at, fault: FaultClass::SystemHalt });
        assert_eq!(report.cases[0].blocked_steps, 2);
        assert_eq!(report.fail, 1);
    }

    #[test]
    fn unmaterializable_start_is_a_spec_mismatch() {
        let case = TestCase { id: "c".into(), start: v(13), keys: vec![], expected: vec![] };
        let err = run_suite(&TestSuite { id: "s".into(), cases: vec![case] }, &pilot_app(), RunConfig::default());
        assert!(matches!(err, Err(RunError::SpecMismatch { .. })));
    }

    #[test]
    fn json_report_summary_and_round_trip() {
        let expected = vec![expected_events(&v(1), KeyKind::Right, &v(2))];
        let cases = (0..3)
            .map(|i| TestCase { id: format!("c{i}"), start: v(1), keys: vec![KeyKind::Right], expected: expected.clone() })
            .collect();
        let report = run_suite(&TestSuite { id: "s".into(), cases }, &pilot_app(), RunConfig::default()).unwrap();
        let json = emit_report(&report, ReportFormat::Json);
        let value: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert_eq!(value["pass"], 3);
        assert_eq!(value["fail"], 0);
        assert_eq!(value["cases"][0]["outcome"], "Pass");
        assert_eq!(RunReport::from_json(&json).unwrap(), report);
        assert_eq!(emit_report(&report, ReportFormat::Json), json);
        let text = String::from_utf8(emit_report(&report, ReportFormat::Text)).unwrap();
        assert!(text.contains("pass 3  fail 0  blocked 0"));
    }

    #[test]
    fn wrong_key_response_summary_names_the_site() {
        let mut spec = pilot_app();
        spec.plants.push(FaultPlant {
            kind: FaultKind::WrongKeyResponse { target: v(5) },
            view: v(1),
            key: Some(KeyKind::Right),
        });
        let case = model_case(&pilot_model(), "c".into(), &v(1), vec![KeyKind::Right]).unwrap();
        let report = run_suite(&TestSuite { id: "s".into(), cases: vec![case] }, &spec, RunConfig::default()).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&emit_report(&report, ReportFormat::Json)).unwrap();
        assert_eq!(value["faults"], serde_json::json!({"WrongKeyResponse": 1}));
        assert_eq!(value["fault_sites"]["WrongKeyResponse"][0]["view"], "main:v1");
        assert_eq!(value["cases"][0]["fault"], "WrongKeyResponse");
        assert_eq!(value["cases"][0]["step"], 0);
    }
}
