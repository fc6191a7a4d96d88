use std::collections::BTreeSet;

use proptest::prelude::*;

use tvtest::appspec::{parse_spec, serialize_spec, synth_app, AppSpec, LayoutPattern, PatternKind};
use tvtest::creeper::{explore, CreeperConfig};
use tvtest::emulator::{Driver, EmulatorSession, EventKind};
use tvtest::key::{Direction, KeyKind};
use tvtest::navmodel::build_model;
use tvtest::runner::{run_suite, FaultClass, Outcome, RunConfig};
use tvtest::testgen::{generate, rip, CoverageCriterion, RipAction, RipPattern};

fn app(kind: u8, rows: u32, cols: u32, acts: u32, faults: u32, seed: u64) -> Option<AppSpec> {
    let kind = [PatternKind::A, PatternKind::B, PatternKind::C][kind as usize];
    let rows = if kind == PatternKind::A { 1 } else { rows };
    let cols = if kind == PatternKind::C { cols.max(2) } else { cols };
    synth_app(LayoutPattern { kind, rows, cols }, acts, faults, seed).ok()
}

fn any_app(max_faults: u32) -> impl Strategy<Value = AppSpec> {
    (0u8..3, 1u32..6, 1u32..6, 1u32..4, 0..=max_faults, any::<u64>())
        .prop_filter_map("too few fault sites", |(k, r, c, a, f, s)| app(k, r, c, a, f, s))
}

fn unbounded() -> CreeperConfig {
    CreeperConfig { it_max: CreeperConfig::UNBOUNDED, ..CreeperConfig::default() }
}

fn key() -> impl Strategy<Value = KeyKind> {
    prop_oneof![
        Just(KeyKind::Up),
        Just(KeyKind::Right),
        Just(KeyKind::Down),
        Just(KeyKind::Left),
        Just(KeyKind::Ok),
        Just(KeyKind::Back),
        Just(KeyKind::Power),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spec_documents_round_trip(spec in any_app(4)) {
        let bytes = serialize_spec(&spec);
        prop_assert_eq!(parse_spec(&bytes).unwrap(), spec);
    }

    #[test]
    fn grid_adjacency_is_symmetric(spec in any_app(0)) {
        for activity in spec.activities.values() {
            for view in &activity.views {
                for dir in Direction::ALL {
                    if let Some(next) = spec.neighbor(view, dir).unwrap() {
                        prop_assert_eq!(spec.neighbor(&next, dir.inverse()).unwrap(), Some(view.clone()));
                    }
                }
            }
        }
    }

    #[test]
    fn emulator_logs_are_deterministic(spec in any_app(3), script in proptest::collection::vec(key(), 0..40)) {
        let run = || {
            let mut session = EmulatorSession::boot(spec.clone());
            for k in &script {
                if session.press(*k).is_err() {
                    break;
                }
            }
            serde_json::to_vec(session.log()).unwrap()
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn fault_free_presses_follow_the_spec(spec in any_app(0)) {
        let root = spec.root_activity();
        for view in &root.views {
            for dir in Direction::ALL {
                let mut session = EmulatorSession::boot(spec.clone());
                session.set_focus(view).unwrap();
                let got: Vec<EventKind> = session.press(dir.key()).unwrap().into_iter().map(|e| e.kind).collect();
                let want = match spec.neighbor(view, dir).unwrap() {
                    Some(to) => EventKind::FocusChanged { from: Some(view.clone()), to },
                    None => EventKind::NoReaction { key: dir.key() },
                };
                prop_assert_eq!(got, vec![want]);
            }
        }
    }

    #[test]
    fn exploration_is_sound_and_deterministic(spec in any_app(0), it_max in 1u32..8) {
        let config = CreeperConfig { it_max, ..CreeperConfig::default() };
        let result = explore(&mut EmulatorSession::boot(spec.clone()), &config).unwrap();
        let again = explore(&mut EmulatorSession::boot(spec.clone()), &config).unwrap();
        prop_assert_eq!(&result, &again);

        let unique: BTreeSet<_> = result.views.iter().collect();
        prop_assert_eq!(unique.len(), result.views.len());
        let levelled: Vec<_> = std::iter::once(&result.start).chain(result.levels.iter().flatten()).collect();
        prop_assert_eq!(levelled, result.views.iter().collect::<Vec<_>>());
        prop_assert!(result.levels.len() <= it_max as usize);

        // Sources are reached through the model of the fully explored app.
        let model = build_model(&explore(&mut EmulatorSession::boot(spec.clone()), &unbounded()).unwrap()).unwrap();
        for t in &result.transitions {
            let mut session = EmulatorSession::boot(spec.clone());
            for k in model.shortest_path(model.start(), &t.from).unwrap() {
                session.press(k).unwrap();
            }
            let events = session.press(t.key).unwrap();
            let landed = events.iter().rev().find_map(|e| match &e.kind {
                EventKind::FocusChanged { from, to } => Some((from.clone(), to.clone())),
                _ => None,
            });
            prop_assert_eq!(landed, Some((Some(t.from.clone()), t.to.clone())));
        }
    }

    #[test]
    fn fault_free_runs_pass(spec in any_app(0), criterion in 0usize..4, seed in any::<u64>(), action in 0usize..3) {
        let model = build_model(&explore(&mut EmulatorSession::boot(spec.clone()), &unbounded()).unwrap()).unwrap();
        let criterion = [
            CoverageCriterion::ViewCoverage,
            CoverageCriterion::TransitionCoverage,
            CoverageCriterion::ViewPairCoverage,
            CoverageCriterion::RandomWalk { n_cases: 4, max_len: 15 },
        ][criterion];
        let suite = generate(&model, criterion, seed).unwrap();
        prop_assert_eq!(&suite, &generate(&model, criterion, seed).unwrap());
        let action = [RipAction::Splice, RipAction::Truncate, RipAction::Drop][action];
        let (suite, _) = rip(&suite, &model, &RipPattern::all(action));
        let report = run_suite(&suite, &spec, RunConfig::default()).unwrap();
        prop_assert_eq!(report.pass, suite.cases.len());
        prop_assert!(report.faults.is_empty());
    }

    #[test]
    fn single_plants_are_detected_with_their_class(spec in any_app(1)) {
        prop_assume!(spec.plants.len() == 1);
        let plant = &spec.plants[0];
        let clean = spec.without_plants();
        let model = build_model(&explore(&mut EmulatorSession::boot(clean), &unbounded()).unwrap()).unwrap();
        prop_assume!(model.edge_count() > 0);
        let suite = generate(&model, CoverageCriterion::TransitionCoverage, 0).unwrap();
        let report = run_suite(&suite, &spec, RunConfig::default()).unwrap();
        let want = FaultClass::of(&plant.kind);
        let classes: BTreeSet<FaultClass> = report
            .cases
            .iter()
            .filter_map(|v| match v.outcome {
                Outcome::Fail { fault, .. } => Some(fault),
                _ => None,
            })
            .collect();
        prop_assert_eq!(classes, BTreeSet::from([want]));
    }
}
