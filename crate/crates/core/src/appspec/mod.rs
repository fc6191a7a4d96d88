//! Declarative ground-truth description of an app under test.
//!
//! An [`AppSpec`] is a set of activities, each a grid of focusable views laid
//! out row-major. Focus moves one grid cell per directional key press, `OK`
//! on a view with an OK target opens another activity, and an optional cloud
//! rule appends fresh rows (or columns) when focus is pushed past the last
//! one. Faults can be planted at (view, key) sites or on views.

mod doc;
mod grid;
mod oracle;
mod synth;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::key::{Direction, KeyKind};

pub use doc::{parse_spec, serialize_spec};
pub use grid::Grid;
pub use oracle::brute_force_reachable;
pub use synth::synth_app;

/// Name of an activity (one application window).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActivityId(String);

impl ActivityId {
    pub fn new(name: impl Into<String>) -> Result<Self, ViewIdError> {
        let name = name.into();
        if name.is_empty() || name.contains(':') || name.chars().any(char::is_whitespace) {
            return Err(ViewIdError(name));
        }
        Ok(ActivityId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActivityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A focusable view: `(activity, index)`, written `activity:vN`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ViewId {
    pub activity: ActivityId,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed view or activity id {0:?}")]
pub struct ViewIdError(pub String);

impl ViewId {
    pub fn new(activity: &ActivityId, index: u32) -> Self {
        ViewId { activity: activity.clone(), index }
    }

    /// The `vN` label used inside an activity.
    pub fn label(&self) -> String {
        format!("v{}", self.index)
    }

    /// Parses a `vN` label (N >= 1).
    pub fn parse_label(label: &str) -> Option<u32> {
        let digits = label.strip_prefix('v')?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok().filter(|&n| n >= 1)
    }

    /// Parses either `activity:vN` or a bare `vN`, which resolves against
    /// `default_activity`.
    pub fn parse_in(text: &str, default_activity: &ActivityId) -> Result<Self, ViewIdError> {
        match text.split_once(':') {
            Some(_) => text.parse(),
            None => ViewId::parse_label(text)
                .map(|index| ViewId::new(default_activity, index))
                .ok_or_else(|| ViewIdError(text.to_string())),
        }
    }
}

impl fmt::Display for ViewId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:v{}", self.activity, self.index)
    }
}

impl FromStr for ViewId {
    type Err = ViewIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (activity, label) = s.split_once(':').ok_or_else(|| ViewIdError(s.to_string()))?;
        let activity = ActivityId::new(activity).map_err(|_| ViewIdError(s.to_string()))?;
        let index = ViewId::parse_label(label).ok_or_else(|| ViewIdError(s.to_string()))?;
        Ok(ViewId { activity, index })
    }
}

impl Serialize for ViewId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ViewId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for ActivityId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for ActivityId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ActivityId::new(s).map_err(serde::de::Error::custom)
    }
}

/// The three window layouts common on TV apps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternKind {
    /// A single row of tiles.
    A,
    /// A grid of rows.
    B,
    /// A sidebar (column 0) next to a grid.
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LayoutPattern {
    pub kind: PatternKind,
    pub rows: u32,
    pub cols: u32,
}

impl LayoutPattern {
    pub fn new(kind: PatternKind, rows: u32, cols: u32) -> Result<Self, String> {
        if rows == 0 || cols == 0 {
            return Err(format!("layout needs rows >= 1 and cols >= 1, got {rows}x{cols}"));
        }
        if kind == PatternKind::A && rows != 1 {
            return Err(format!("pattern A is a single row, got {rows} rows"));
        }
        Ok(LayoutPattern { kind, rows, cols })
    }

    pub fn cells(&self) -> u32 {
        self.rows * self.cols
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CloudDirection {
    Down,
    Right,
}

impl CloudDirection {
    pub fn direction(self) -> Direction {
        match self {
            CloudDirection::Down => Direction::Down,
            CloudDirection::Right => Direction::Right,
        }
    }
}

/// Infinite-scroll content: pushing focus past the last row (or column)
/// appends `row_width` fresh views, up to `max_spawns` times (`None` means
/// unbounded).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CloudSpawnRule {
    pub direction: CloudDirection,
    pub row_width: u32,
    pub max_spawns: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Activity {
    pub id: ActivityId,
    pub layout: LayoutPattern,
    /// Declared views, row-major.
    pub views: Vec<ViewId>,
    pub initial_focus: Option<ViewId>,
    pub ok_targets: BTreeMap<ViewId, ActivityId>,
    pub cloud: Option<CloudSpawnRule>,
}

impl Activity {
    pub fn grid(&self) -> Grid<'_> {
        Grid::new(self)
    }

    /// Where focus lands when this activity is opened.
    pub fn entry_view(&self) -> &ViewId {
        self.initial_focus.as_ref().unwrap_or(&self.views[0])
    }
}

/// What a planted fault does. Payloads live on the variants that need them.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FaultKind {
    KeyNoResponse,
    WrongKeyResponse { target: ViewId },
    AppExit,
    BlackScreen,
    SystemHalt,
    SystemReboot,
    ResponseDelay { ticks: u32 },
    BlurryScreen,
    VoiceNoImage,
}

impl FaultKind {
    /// View-scoped kinds fire when focus lands on the view; all others fire
    /// on a key press at a (view, key) site.
    pub fn is_view_scoped(&self) -> bool {
        matches!(self, FaultKind::BlackScreen | FaultKind::BlurryScreen | FaultKind::VoiceNoImage)
    }

    pub fn name(&self) -> &'static str {
        match self {
            FaultKind::KeyNoResponse => "KeyNoResponse",
            FaultKind::WrongKeyResponse { .. } => "WrongKeyResponse",
            FaultKind::AppExit => "AppExit",
            FaultKind::BlackScreen => "BlackScreen",
            FaultKind::SystemHalt => "SystemHalt",
            FaultKind::SystemReboot => "SystemReboot",
            FaultKind::ResponseDelay { .. } => "ResponseDelay",
            FaultKind::BlurryScreen => "BlurryScreen",
            FaultKind::VoiceNoImage => "VoiceNoImage",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FaultPlant {
    pub kind: FaultKind,
    pub view: ViewId,
    /// `Some` for key-triggered kinds, `None` for view-scoped ones.
    pub key: Option<KeyKind>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppSpec {
    pub name: String,
    pub activities: BTreeMap<ActivityId, Activity>,
    pub root: ActivityId,
    pub plants: Vec<FaultPlant>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("syntax error at {path}: {message}")]
    Syntax { path: String, message: String },
    #[error("semantic error at {path}: {message}")]
    Semantic { path: String, message: String },
    #[error("unknown view {0}")]
    UnknownView(ViewId),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

impl AppSpec {
    pub fn root_activity(&self) -> &Activity {
        &self.activities[&self.root]
    }

    pub fn activity(&self, id: &ActivityId) -> Option<&Activity> {
        self.activities.get(id)
    }

    /// True if `view` is a declared view or a view some cloud spawn could
    /// produce.
    pub fn contains(&self, view: &ViewId) -> bool {
        self.activity(&view.activity)
            .is_some_and(|a| a.grid().position(view.index).is_some())
    }

    /// The grid-adjacent view of `view` in `dir`, counting views a cloud rule
    /// would spawn. `None` at an edge with no growth in that direction.
    pub fn neighbor(&self, view: &ViewId, dir: Direction) -> Result<Option<ViewId>, SpecError> {
        let activity = self
            .activity(&view.activity)
            .ok_or_else(|| SpecError::UnknownView(view.clone()))?;
        let grid = activity.grid();
        let pos = grid
            .position(view.index)
            .ok_or_else(|| SpecError::UnknownView(view.clone()))?;
        Ok(grid.step(pos, dir).map(|cell| ViewId::new(&activity.id, cell.index)))
    }

    /// Where `OK` on `view` leads in a fault-free app: the entry view of its
    /// OK target, if it has one.
    pub fn ok_target(&self, view: &ViewId) -> Option<&ViewId> {
        let activity = self.activity(&view.activity)?;
        let target = activity.ok_targets.get(view)?;
        Some(self.activities[target].entry_view())
    }

    /// The plant at a (view, key) site, if any.
    pub fn plant_at(&self, view: &ViewId, key: KeyKind) -> Option<&FaultPlant> {
        self.plants.iter().find(|p| p.key == Some(key) && &p.view == view)
    }

    /// View-scoped plants on `view`.
    pub fn view_plants<'a>(&'a self, view: &'a ViewId) -> impl Iterator<Item = &'a FaultPlant> + 'a {
        self.plants
            .iter()
            .filter(move |p| p.key.is_none() && &p.view == view)
    }

    /// The same app with every fault removed: the reference build that test
    /// models are derived from.
    pub fn without_plants(&self) -> AppSpec {
        AppSpec { plants: Vec::new(), ..self.clone() }
    }

    /// Resolves `vN` against the root activity and `act:vN` as written.
    pub fn parse_view(&self, text: &str) -> Result<ViewId, SpecError> {
        let view = ViewId::parse_in(text, &self.root).map_err(|e| SpecError::Syntax {
            path: "view".into(),
            message: e.to_string(),
        })?;
        if !self.contains(&view) {
            return Err(SpecError::UnknownView(view));
        }
        Ok(view)
    }

    /// Checks every structural invariant; `parse_spec` and `synth_app` both
    /// funnel through here.
    pub fn validate(&self) -> Result<(), SpecError> {
        let semantic = |path: String, message: String| Err(SpecError::Semantic { path, message });
        if !self.activities.contains_key(&self.root) {
            return semantic("root".into(), format!("undeclared activity {:?}", self.root.as_str()));
        }
        for (id, activity) in &self.activities {
            let base = format!("activities.{id}");
            if &activity.id != id {
                return semantic(base, "activity id does not match its key".into());
            }
            if activity.views.len() as u64 != u64::from(activity.layout.cells()) {
                return semantic(
                    format!("{base}.views"),
                    format!(
                        "{} views do not fill a {}x{} layout",
                        activity.views.len(),
                        activity.layout.rows,
                        activity.layout.cols
                    ),
                );
            }
            let mut seen = std::collections::BTreeSet::new();
            for (i, view) in activity.views.iter().enumerate() {
                if &view.activity != id {
                    return semantic(format!("{base}.views[{i}]"), "view belongs to another activity".into());
                }
                if !seen.insert(view.index) {
                    return semantic(format!("{base}.views[{i}]"), format!("duplicate view {}", view.label()));
                }
            }
            if let Some(focus) = &activity.initial_focus {
                if !seen.contains(&focus.index) || &focus.activity != id {
                    return semantic(
                        format!("{base}.initial_focus"),
                        format!("{} is not a declared view", focus.label()),
                    );
                }
            }
            for (view, target) in &activity.ok_targets {
                if !seen.contains(&view.index) || &view.activity != id {
                    return semantic(
                        format!("{base}.ok_targets.{}", view.label()),
                        "OK target on an undeclared view".into(),
                    );
                }
                if !self.activities.contains_key(target) {
                    return semantic(
                        format!("{base}.ok_targets.{}", view.label()),
                        format!("undeclared activity {:?}", target.as_str()),
                    );
                }
            }
            if let Some(cloud) = &activity.cloud {
                if cloud.row_width == 0 {
                    return semantic(format!("{base}.cloud.row_width"), "row_width must be >= 1".into());
                }
            }
        }
        self.validate_reachability()?;
        self.validate_plants()
    }

    fn validate_reachability(&self) -> Result<(), SpecError> {
        let mut reached = std::collections::BTreeSet::from([self.root.clone()]);
        let mut stack = vec![self.root.clone()];
        while let Some(id) = stack.pop() {
            for target in self.activities[&id].ok_targets.values() {
                if reached.insert(target.clone()) {
                    stack.push(target.clone());
                }
            }
        }
        match self.activities.keys().find(|id| !reached.contains(*id)) {
            Some(orphan) => Err(SpecError::Semantic {
                path: format!("activities.{orphan}"),
                message: "activity is not reachable from the root".into(),
            }),
            None => Ok(()),
        }
    }

    fn validate_plants(&self) -> Result<(), SpecError> {
        let mut sites = std::collections::BTreeSet::new();
        for (i, plant) in self.plants.iter().enumerate() {
            let path = format!("plants[{i}]");
            let fail = |field: &str, message: String| {
                Err(SpecError::Semantic { path: format!("{path}.{field}"), message })
            };
            if !self.contains(&plant.view) {
                return fail("view", format!("no view {} to plant on", plant.view));
            }
            match (plant.kind.is_view_scoped(), plant.key) {
                (true, Some(_)) => return fail("key", format!("{} is view-scoped and takes no key", plant.kind.name())),
                (false, None) => return fail("key", format!("{} needs a key", plant.kind.name())),
                _ => {}
            }
            if !sites.insert((plant.view.clone(), plant.key)) {
                return fail("view", format!("second plant at site {}", plant.view));
            }
            if let FaultKind::WrongKeyResponse { target } = &plant.kind {
                if target.activity != plant.view.activity || !self.contains(target) {
                    return fail("payload", format!("{target} is not a view of the same activity"));
                }
                let truth = self.fault_free_target(&plant.view, plant.key.expect("checked above"));
                if truth.as_ref() == Some(target) {
                    return fail("payload", format!("{target} is the correct response"));
                }
            }
        }
        Ok(())
    }

    /// Where focus goes after a fault-free press of `key` on `view`, ignoring
    /// activity-stack effects of `Back`.
    pub(crate) fn fault_free_target(&self, view: &ViewId, key: KeyKind) -> Option<ViewId> {
        match key {
            KeyKind::Ok => self.ok_target(view).cloned(),
            other => other
                .direction()
                .and_then(|d| self.neighbor(view, d).ok().flatten()),
        }
    }
}

/// The cloud-based demo app: one activity, a 3x4 grid `v1..v12`, and a
/// downward cloud rule that appends four views per spawn (`v13..v16` first).
/// No initial focus and no faults.
pub fn pilot_app() -> AppSpec {
    let root = ActivityId::new("main").expect("valid id");
    let activity = Activity {
        id: root.clone(),
        layout: LayoutPattern::new(PatternKind::B, 3, 4).expect("valid layout"),
        views: (1..=12).map(|i| ViewId::new(&root, i)).collect(),
        initial_focus: None,
        ok_targets: BTreeMap::new(),
        cloud: Some(CloudSpawnRule {
            direction: CloudDirection::Down,
            row_width: 4,
            max_spawns: None,
        }),
    };
    AppSpec {
        name: "pilot".into(),
        activities: BTreeMap::from([(root.clone(), activity)]),
        root,
        plants: Vec::new(),
        seed: 0,
    }
}
