//! Exhaustive reachability, used as the reference answer for exploration.

use std::collections::BTreeSet;

use super::{AppSpec, SpecError, ViewId};
use crate::key::Direction;

/// Every view reachable from `start` over fault-free directional and OK
/// edges, materializing at most `spawn_cap` cloud spawns per activity.
pub fn brute_force_reachable(spec: &AppSpec, start: &ViewId, spawn_cap: u32) -> Result<BTreeSet<ViewId>, SpecError> {
    reachable_in_order(spec, start, spawn_cap, |pending| pending.pop().expect("non-empty"))
}

/// Same search, with the caller choosing which pending view to expand next.
pub(crate) fn reachable_in_order(
    spec: &AppSpec,
    start: &ViewId,
    spawn_cap: u32,
    mut next: impl FnMut(&mut Vec<ViewId>) -> ViewId,
) -> Result<BTreeSet<ViewId>, SpecError> {
    if !within_cap(spec, start, spawn_cap) {
        return Err(SpecError::UnknownView(start.clone()));
    }
    let mut seen = BTreeSet::from([start.clone()]);
    let mut pending = vec![start.clone()];
    while !pending.is_empty() {
        let view = next(&mut pending);
        let mut successors: Vec<ViewId> = Direction::ALL
            .into_iter()
            .filter_map(|d| spec.neighbor(&view, d).ok().flatten())
            .collect();
        successors.extend(spec.ok_target(&view).cloned());
        for succ in successors {
            if within_cap(spec, &succ, spawn_cap) && seen.insert(succ.clone()) {
                pending.push(succ);
            }
        }
    }
    Ok(seen)
}

fn within_cap(spec: &AppSpec, view: &ViewId, spawn_cap: u32) -> bool {
    spec.activity(&view.activity)
        .and_then(|a| a.grid().position(view.index))
        .is_some_and(|cell| cell.spawn.is_none_or(|ordinal| ordinal < spawn_cap))
}
