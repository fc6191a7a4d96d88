//! Deterministic simulated TV device.
//!
//! [`EmulatorSession`] plays an [`AppSpec`]: it keeps the focus and the
//! activity stack, materializes cloud rows on demand, fires planted faults and
//! appends everything it does to a tick-stamped log. Exploration and replay
//! only talk to it through the [`Driver`] trait, which is where a real device
//! transport would plug in.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::appspec::{ActivityId, AppSpec, FaultKind, ViewId};
use crate::key::KeyKind;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "event")]
pub enum EventKind {
    FocusChanged { from: Option<ViewId>, to: ViewId },
    NoReaction { key: KeyKind },
    ActivityOpened { id: ActivityId },
    ActivityClosed { id: ActivityId },
    AppExited,
    SystemHalted,
    SystemRebooted,
    ScreenBlack { view: ViewId },
    ScreenBlurry { view: ViewId },
    AudioOnly { view: ViewId },
    Delayed { ticks: u32 },
}

impl EventKind {
    /// Screen and audio symptom events.
    pub fn is_symptom(&self) -> bool {
        matches!(
            self,
            EventKind::ScreenBlack { .. } | EventKind::ScreenBlurry { .. } | EventKind::AudioOnly { .. }
        )
    }

    /// Events after which the session no longer follows the script.
    pub fn ends_session(&self) -> bool {
        matches!(self, EventKind::AppExited | EventKind::SystemHalted | EventKind::SystemRebooted)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LogEvent {
    pub tick: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DriverError {
    #[error("unknown view {0}")]
    UnknownView(ViewId),
    #[error("device halted")]
    Halted,
    #[error("application exited")]
    Exited,
}

/// The operations exploration and replay use to drive a device.
pub trait Driver {
    /// Restarts the app from scratch. The log is kept.
    fn boot(&mut self);
    /// Moves focus directly to `view`, as a tester picking a starting point.
    fn set_focus(&mut self, view: &ViewId) -> Result<(), DriverError>;
    fn press(&mut self, key: KeyKind) -> Result<Vec<LogEvent>, DriverError>;
    fn read_log(&self, since_tick: u64) -> Vec<LogEvent>;
    /// The highlighted view, if any.
    fn focused(&self) -> Option<ViewId>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Power {
    On,
    Halted,
    Exited,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmulatorSession {
    spec: AppSpec,
    /// Activities below the top one, each with the focus it had when covered.
    stack: Vec<(ActivityId, ViewId)>,
    top: ActivityId,
    focus: Option<ViewId>,
    spawned: BTreeMap<ActivityId, u32>,
    power: Power,
    clock: u64,
    log: Vec<LogEvent>,
}

impl EmulatorSession {
    pub fn boot(spec: AppSpec) -> Self {
        let top = spec.root.clone();
        let focus = spec.root_activity().initial_focus.clone();
        EmulatorSession {
            spec,
            stack: Vec::new(),
            top,
            focus,
            spawned: BTreeMap::new(),
            power: Power::On,
            clock: 0,
            log: Vec::new(),
        }
    }

    pub fn spec(&self) -> &AppSpec {
        &self.spec
    }

    pub fn focus(&self) -> Option<&ViewId> {
        self.focus.as_ref()
    }

    pub fn top_activity(&self) -> &ActivityId {
        &self.top
    }

    /// Activity stack from the root up, including the top activity.
    pub fn activity_stack(&self) -> Vec<ActivityId> {
        self.stack.iter().map(|(a, _)| a.clone()).chain([self.top.clone()]).collect()
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn log(&self) -> &[LogEvent] {
        &self.log
    }

    pub fn spawns(&self, activity: &ActivityId) -> u32 {
        self.spawned.get(activity).copied().unwrap_or(0)
    }

    pub fn is_halted(&self) -> bool {
        self.power == Power::Halted
    }

    pub fn is_exited(&self) -> bool {
        self.power == Power::Exited
    }

    /// Resets app state as a fresh boot would, keeping log and clock.
    fn restart(&mut self) {
        self.stack.clear();
        self.top = self.spec.root.clone();
        self.focus = self.spec.root_activity().initial_focus.clone();
        self.spawned.clear();
        self.power = Power::On;
    }

    fn emit(&mut self, out: &mut Vec<LogEvent>, kind: EventKind) {
        self.clock += 1;
        let event = LogEvent { tick: self.clock, kind };
        if let EventKind::Delayed { ticks } = event.kind {
            self.clock += u64::from(ticks);
        }
        self.log.push(event.clone());
        out.push(event);
    }

    fn is_materialized(&self, view: &ViewId) -> bool {
        if view.activity != self.top {
            return false;
        }
        let activity = &self.spec.activities[&self.top];
        match activity.grid().position(view.index) {
            Some(cell) => cell.spawn.is_none_or(|k| k < self.spawns(&self.top)),
            None => false,
        }
    }

    fn move_focus(&mut self, out: &mut Vec<LogEvent>, to: ViewId) {
        let from = self.focus.replace(to.clone());
        self.emit(out, EventKind::FocusChanged { from, to: to.clone() });
        let symptoms: Vec<EventKind> = self
            .spec
            .view_plants(&to)
            .map(|p| match p.kind {
                FaultKind::BlackScreen => EventKind::ScreenBlack { view: to.clone() },
                FaultKind::BlurryScreen => EventKind::ScreenBlurry { view: to.clone() },
                _ => EventKind::AudioOnly { view: to.clone() },
            })
            .collect();
        for symptom in symptoms {
            self.emit(out, symptom);
        }
    }

    fn fault_free_press(&mut self, out: &mut Vec<LogEvent>, focus: ViewId, key: KeyKind) {
        if let Some(dir) = key.direction() {
            let activity = &self.spec.activities[&self.top];
            let grid = activity.grid();
            let target = grid
                .position(focus.index)
                .and_then(|cell| grid.step(cell, dir))
                .filter(|cell| cell.spawn.is_none_or(|k| k <= self.spawns(&self.top)));
            match target {
                Some(cell) => {
                    if let Some(k) = cell.spawn {
                        if k == self.spawns(&self.top) {
                            self.spawned.insert(self.top.clone(), k + 1);
                        }
                    }
                    let to = ViewId::new(&self.top, cell.index);
                    self.move_focus(out, to);
                }
                None => self.emit(out, EventKind::NoReaction { key }),
            }
            return;
        }
        match key {
            KeyKind::Ok => {
                let target = self.spec.activities[&self.top].ok_targets.get(&focus).cloned();
                match target {
                    Some(next) => {
                        let entry = self.spec.activities[&next].entry_view().clone();
                        let covered = std::mem::replace(&mut self.top, next.clone());
                        self.stack.push((covered, focus));
                        self.emit(out, EventKind::ActivityOpened { id: next });
                        self.move_focus(out, entry);
                    }
                    None => self.emit(out, EventKind::NoReaction { key }),
                }
            }
            KeyKind::Back => match self.stack.pop() {
                Some((below, saved)) => {
                    let closed = std::mem::replace(&mut self.top, below);
                    self.emit(out, EventKind::ActivityClosed { id: closed });
                    self.move_focus(out, saved);
                }
                None => self.emit(out, EventKind::NoReaction { key }),
            },
            _ => self.emit(out, EventKind::NoReaction { key }),
        }
    }
}

impl Driver for EmulatorSession {
    fn boot(&mut self) {
        self.restart();
    }

    fn set_focus(&mut self, view: &ViewId) -> Result<(), DriverError> {
        match self.power {
            Power::Halted => return Err(DriverError::Halted),
            Power::Exited => return Err(DriverError::Exited),
            Power::On => {}
        }
        if !self.is_materialized(view) {
            return Err(DriverError::UnknownView(view.clone()));
        }
        let mut sink = Vec::new();
        self.move_focus(&mut sink, view.clone());
        Ok(())
    }

    fn press(&mut self, key: KeyKind) -> Result<Vec<LogEvent>, DriverError> {
        match self.power {
            Power::Halted => return Err(DriverError::Halted),
            Power::Exited => return Err(DriverError::Exited),
            Power::On => {}
        }
        let mut out = Vec::new();
        let Some(focus) = self.focus.clone() else {
            self.emit(&mut out, EventKind::NoReaction { key });
            return Ok(out);
        };
        let plant = self.spec.plant_at(&focus, key).map(|p| p.kind.clone());
        match plant {
            None => self.fault_free_press(&mut out, focus, key),
            Some(FaultKind::KeyNoResponse) => self.emit(&mut out, EventKind::NoReaction { key }),
            Some(FaultKind::WrongKeyResponse { target }) => self.move_focus(&mut out, target),
            Some(FaultKind::AppExit) => {
                self.emit(&mut out, EventKind::AppExited);
                self.power = Power::Exited;
            }
            Some(FaultKind::SystemHalt) => {
                self.emit(&mut out, EventKind::SystemHalted);
                self.power = Power::Halted;
            }
            Some(FaultKind::SystemReboot) => {
                self.emit(&mut out, EventKind::SystemRebooted);
                self.restart();
            }
            Some(FaultKind::ResponseDelay { ticks }) => {
                self.emit(&mut out, EventKind::Delayed { ticks });
                self.fault_free_press(&mut out, focus, key);
            }
            Some(FaultKind::BlackScreen | FaultKind::BlurryScreen | FaultKind::VoiceNoImage) => {
                unreachable!("view-scoped plants carry no key")
            }
        }
        Ok(out)
    }

    fn read_log(&self, since_tick: u64) -> Vec<LogEvent> {
        let start = self.log.partition_point(|e| e.tick <= since_tick);
        self.log[start..].to_vec()
    }

    fn focused(&self) -> Option<ViewId> {
        self.focus.clone()
    }
}
