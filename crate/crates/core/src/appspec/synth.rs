//! Seeded generation of benchmark apps.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Activity, ActivityId, AppSpec, FaultKind, FaultPlant, LayoutPattern, PatternKind, SpecError, ViewId};
use crate::key::{Direction, KeyKind};

/// Builds a cloud-free app of `n_activities` activities sharing `pattern`.
///
/// Activity `a0` is the root; every later activity hangs off exactly one OK
/// site of an earlier one (sidebar views for pattern C), so the activity graph
/// is a tree. Every activity starts focused on `v1`. `fault_budget` plants go
/// to distinct sites: key-triggered kinds only on presses that do something
/// in the fault-free app.
pub fn synth_app(
    pattern: LayoutPattern,
    n_activities: u32,
    fault_budget: u32,
    seed: u64,
) -> Result<AppSpec, SpecError> {
    let pattern = LayoutPattern::new(pattern.kind, pattern.rows, pattern.cols).map_err(SpecError::InvalidParams)?;
    if n_activities == 0 {
        return Err(SpecError::InvalidParams("at least one activity is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let ids: Vec<ActivityId> = (0..n_activities)
        .map(|i| ActivityId::new(format!("a{i}")).expect("valid id"))
        .collect();
    let mut activities: BTreeMap<ActivityId, Activity> = ids
        .iter()
        .map(|id| {
            let views: Vec<ViewId> = (1..=pattern.cells()).map(|i| ViewId::new(id, i)).collect();
            let activity = Activity {
                id: id.clone(),
                layout: pattern,
                initial_focus: Some(views[0].clone()),
                views,
                ok_targets: BTreeMap::new(),
                cloud: None,
            };
            (id.clone(), activity)
        })
        .collect();

    for (child_pos, child) in ids.iter().enumerate().skip(1) {
        let candidates: Vec<&ActivityId> = ids[..child_pos]
            .iter()
            .filter(|id| !free_ok_sites(&activities[*id]).is_empty())
            .collect();
        let parent = (*candidates.choose(&mut rng).expect("previous activity always has a free site")).clone();
        let sites = free_ok_sites(&activities[&parent]);
        let site = sites.choose(&mut rng).expect("non-empty").clone();
        activities
            .get_mut(&parent)
            .expect("parent exists")
            .ok_targets
            .insert(site, child.clone());
    }

    let mut spec = AppSpec {
        name: format!("synth-{:?}-{}x{}-{}act-s{}", pattern.kind, pattern.rows, pattern.cols, n_activities, seed),
        root: ids[0].clone(),
        activities,
        plants: Vec::new(),
        seed,
    };
    spec.plants = plant_faults(&spec, fault_budget, &mut rng)?;
    spec.validate()?;
    Ok(spec)
}

fn free_ok_sites(activity: &Activity) -> Vec<ViewId> {
    let cols = activity.layout.cols;
    activity
        .views
        .iter()
        .enumerate()
        .filter(|(i, _)| activity.layout.kind != PatternKind::C || (*i as u32).is_multiple_of(cols))
        .map(|(_, v)| v)
        .filter(|v| !activity.ok_targets.contains_key(*v))
        .cloned()
        .collect()
}

fn plant_faults(spec: &AppSpec, budget: u32, rng: &mut ChaCha8Rng) -> Result<Vec<FaultPlant>, SpecError> {
    if budget == 0 {
        return Ok(Vec::new());
    }
    let keys = Direction::ALL.map(Direction::key).into_iter().chain([KeyKind::Ok]);
    let mut sites: Vec<(ViewId, Option<KeyKind>)> = Vec::new();
    for activity in spec.activities.values() {
        for view in &activity.views {
            for key in keys.clone() {
                if spec.fault_free_target(view, key).is_some() {
                    sites.push((view.clone(), Some(key)));
                }
            }
            sites.push((view.clone(), None));
        }
    }
    if sites.len() < budget as usize {
        return Err(SpecError::InvalidParams(format!(
            "fault budget {budget} exceeds the {} available sites",
            sites.len()
        )));
    }
    sites.shuffle(rng);
    sites.truncate(budget as usize);
    sites.sort();

    let mut plants = Vec::with_capacity(sites.len());
    for (view, key) in sites {
        let kind = match key {
            None => [FaultKind::BlackScreen, FaultKind::BlurryScreen, FaultKind::VoiceNoImage]
                .choose(rng)
                .expect("non-empty")
                .clone(),
            Some(key) => match rng.gen_range(0..6) {
                0 => FaultKind::KeyNoResponse,
                1 => {
                    let truth = spec.fault_free_target(&view, key);
                    let activity = &spec.activities[&view.activity];
                    let wrong: Vec<&ViewId> = activity
                        .views
                        .iter()
                        .filter(|v| Some(*v) != truth.as_ref())
                        .collect();
                    match wrong.choose(rng) {
                        Some(target) => FaultKind::WrongKeyResponse { target: (*target).clone() },
                        None => FaultKind::KeyNoResponse,
                    }
                }
                2 => FaultKind::AppExit,
                3 => FaultKind::SystemHalt,
                4 => FaultKind::SystemReboot,
                _ => FaultKind::ResponseDelay { ticks: rng.gen_range(4..=8) },
            },
        };
        plants.push(FaultPlant { kind, view, key });
    }
    Ok(plants)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(kind: PatternKind, rows: u32, cols: u32) -> LayoutPattern {
        LayoutPattern { kind, rows, cols }
    }

    #[test]
    fn same_seed_same_app() {
        let a = synth_app(layout(PatternKind::B, 3, 4), 1, 0, 7).unwrap();
        let b = synth_app(layout(PatternKind::B, 3, 4), 1, 0, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pattern_a_has_no_vertical_neighbors() {
        let spec = synth_app(layout(PatternKind::A, 1, 5), 1, 0, 1).unwrap();
        let views = &spec.root_activity().views;
        assert_eq!(views.len(), 5);
        for v in views {
            assert_eq!(spec.neighbor(v, Direction::Up).unwrap(), None);
            assert_eq!(spec.neighbor(v, Direction::Down).unwrap(), None);
        }
    }

    #[test]
    fn fault_budget_plants_distinct_sites() {
        let spec = synth_app(layout(PatternKind::B, 3, 4), 1, 2, 3).unwrap();
        assert_eq!(spec.plants.len(), 2);
        let sites: std::collections::BTreeSet<_> = spec.plants.iter().map(|p| (&p.view, p.key)).collect();
        assert_eq!(sites.len(), 2);
    }

    #[test]
    fn pattern_c_ok_targets_sit_in_the_sidebar() {
        for seed in 0..20 {
            let spec = synth_app(layout(PatternKind::C, 3, 3), 3, 0, seed).unwrap();
            for activity in spec.activities.values() {
                for view in activity.ok_targets.keys() {
                    assert_eq!((view.index - 1) % 3, 0, "seed {seed}: {view} is not in column 0");
                }
            }
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(matches!(synth_app(layout(PatternKind::A, 2, 3), 1, 0, 0), Err(SpecError::InvalidParams(_))));
        assert!(matches!(synth_app(layout(PatternKind::B, 2, 3), 0, 0, 0), Err(SpecError::InvalidParams(_))));
        assert!(matches!(synth_app(layout(PatternKind::A, 1, 1), 1, 10, 0), Err(SpecError::InvalidParams(_))));
    }

    #[test]
    fn single_view_activities_chain() {
        let spec = synth_app(layout(PatternKind::A, 1, 1), 3, 0, 11).unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.activities.values().map(|a| a.ok_targets.len()).sum::<usize>(), 2);
    }
}
