//! The JSON spec document.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    Activity, ActivityId, AppSpec, CloudDirection, CloudSpawnRule, FaultKind, FaultPlant, LayoutPattern,
    PatternKind, SpecError, ViewId,
};
use crate::key::KeyKind;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    name: String,
    root: String,
    #[serde(default)]
    seed: u64,
    activities: BTreeMap<String, ActivityDoc>,
    #[serde(default)]
    plants: Vec<PlantDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActivityDoc {
    layout: LayoutDoc,
    views: Vec<String>,
    #[serde(default)]
    initial_focus: Option<String>,
    #[serde(default)]
    ok_targets: BTreeMap<String, String>,
    #[serde(default)]
    cloud: Option<CloudDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutDoc {
    kind: PatternDoc,
    rows: u32,
    cols: u32,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
enum PatternDoc {
    A,
    B,
    C,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CloudDoc {
    direction: DirectionDoc,
    row_width: u32,
    /// `null` means unbounded.
    #[serde(default)]
    max_spawns: Option<u32>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
enum DirectionDoc {
    Down,
    Right,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantDoc {
    kind: PlantKindDoc,
    view: String,
    #[serde(default)]
    key: Option<KeyKind>,
    #[serde(default)]
    payload: Option<PayloadDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum PlantKindDoc {
    KeyNoResponse,
    WrongKeyResponse,
    AppExit,
    BlackScreen,
    SystemHalt,
    SystemReboot,
    ResponseDelay,
    BlurryScreen,
    VoiceNoImage,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum PayloadDoc {
    Ticks(u32),
    View(String),
}

fn semantic(path: impl Into<String>, message: impl Into<String>) -> SpecError {
    SpecError::Semantic { path: path.into(), message: message.into() }
}

/// Parses and validates a spec document.
pub fn parse_spec(bytes: &[u8]) -> Result<AppSpec, SpecError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let doc: SpecDoc = serde_path_to_error::deserialize(&mut de).map_err(|e| SpecError::Syntax {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    de.end().map_err(|e| SpecError::Syntax { path: ".".into(), message: e.to_string() })?;
    let spec = from_doc(doc)?;
    spec.validate()?;
    Ok(spec)
}

fn from_doc(doc: SpecDoc) -> Result<AppSpec, SpecError> {
    let root = ActivityId::new(doc.root).map_err(|e| semantic("root", e.to_string()))?;
    let mut activities = BTreeMap::new();
    for (name, adoc) in doc.activities {
        let base = format!("activities.{name}");
        let id = ActivityId::new(name).map_err(|e| semantic(&base, e.to_string()))?;
        let kind = match adoc.layout.kind {
            PatternDoc::A => PatternKind::A,
            PatternDoc::B => PatternKind::B,
            PatternDoc::C => PatternKind::C,
        };
        let layout = LayoutPattern::new(kind, adoc.layout.rows, adoc.layout.cols)
            .map_err(|m| semantic(format!("{base}.layout"), m))?;
        let label = |text: &str, path: String| {
            ViewId::parse_label(text)
                .map(|index| ViewId::new(&id, index))
                .ok_or_else(|| semantic(path, format!("malformed view label {text:?}")))
        };
        let views = adoc
            .views
            .iter()
            .enumerate()
            .map(|(i, text)| label(text, format!("{base}.views[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let initial_focus = adoc
            .initial_focus
            .as_deref()
            .map(|text| label(text, format!("{base}.initial_focus")))
            .transpose()?;
        let mut ok_targets = BTreeMap::new();
        for (view, target) in &adoc.ok_targets {
            let path = format!("{base}.ok_targets.{view}");
            let view = label(view, path.clone())?;
            let target = ActivityId::new(target.as_str()).map_err(|e| semantic(path, e.to_string()))?;
            ok_targets.insert(view, target);
        }
        let cloud = adoc.cloud.map(|c| CloudSpawnRule {
            direction: match c.direction {
                DirectionDoc::Down => CloudDirection::Down,
                DirectionDoc::Right => CloudDirection::Right,
            },
            row_width: c.row_width,
            max_spawns: c.max_spawns,
        });
        activities.insert(
            id.clone(),
            Activity { id, layout, views, initial_focus, ok_targets, cloud },
        );
    }
    let mut plants = Vec::with_capacity(doc.plants.len());
    for (i, p) in doc.plants.into_iter().enumerate() {
        let base = format!("plants[{i}]");
        let view = ViewId::parse_in(&p.view, &root).map_err(|e| semantic(format!("{base}.view"), e.to_string()))?;
        let kind = match (p.kind, p.payload) {
            (PlantKindDoc::WrongKeyResponse, Some(PayloadDoc::View(target))) => FaultKind::WrongKeyResponse {
                target: ViewId::parse_in(&target, &view.activity)
                    .map_err(|e| semantic(format!("{base}.payload"), e.to_string()))?,
            },
            (PlantKindDoc::ResponseDelay, Some(PayloadDoc::Ticks(ticks))) => FaultKind::ResponseDelay { ticks },
            (PlantKindDoc::WrongKeyResponse, _) => {
                return Err(semantic(format!("{base}.payload"), "WrongKeyResponse needs a target view"))
            }
            (PlantKindDoc::ResponseDelay, _) => {
                return Err(semantic(format!("{base}.payload"), "ResponseDelay needs a tick count"))
            }
            (_, Some(_)) => return Err(semantic(format!("{base}.payload"), "this kind takes no payload")),
            (PlantKindDoc::KeyNoResponse, None) => FaultKind::KeyNoResponse,
            (PlantKindDoc::AppExit, None) => FaultKind::AppExit,
            (PlantKindDoc::BlackScreen, None) => FaultKind::BlackScreen,
            (PlantKindDoc::SystemHalt, None) => FaultKind::SystemHalt,
            (PlantKindDoc::SystemReboot, None) => FaultKind::SystemReboot,
            (PlantKindDoc::BlurryScreen, None) => FaultKind::BlurryScreen,
            (PlantKindDoc::VoiceNoImage, None) => FaultKind::VoiceNoImage,
        };
        plants.push(FaultPlant { kind, view, key: p.key });
    }
    Ok(AppSpec { name: doc.name, activities, root, plants, seed: doc.seed })
}

/// Writes the spec document (pretty-printed JSON, trailing newline).
pub fn serialize_spec(spec: &AppSpec) -> Vec<u8> {
    let activities = spec
        .activities
        .iter()
        .map(|(id, a)| {
            let doc = ActivityDoc {
                layout: LayoutDoc {
                    kind: match a.layout.kind {
                        PatternKind::A => PatternDoc::A,
                        PatternKind::B => PatternDoc::B,
                        PatternKind::C => PatternDoc::C,
                    },
                    rows: a.layout.rows,
                    cols: a.layout.cols,
                },
                views: a.views.iter().map(ViewId::label).collect(),
                initial_focus: a.initial_focus.as_ref().map(ViewId::label),
                ok_targets: a
                    .ok_targets
                    .iter()
                    .map(|(v, t)| (v.label(), t.to_string()))
                    .collect(),
                cloud: a.cloud.map(|c| CloudDoc {
                    direction: match c.direction {
                        CloudDirection::Down => DirectionDoc::Down,
                        CloudDirection::Right => DirectionDoc::Right,
                    },
                    row_width: c.row_width,
                    max_spawns: c.max_spawns,
                }),
            };
            (id.to_string(), doc)
        })
        .collect();
    let plants = spec
        .plants
        .iter()
        .map(|p| {
            let (kind, payload) = match &p.kind {
                FaultKind::KeyNoResponse => (PlantKindDoc::KeyNoResponse, None),
                FaultKind::WrongKeyResponse { target } => {
                    (PlantKindDoc::WrongKeyResponse, Some(PayloadDoc::View(target.to_string())))
                }
                FaultKind::AppExit => (PlantKindDoc::AppExit, None),
                FaultKind::BlackScreen => (PlantKindDoc::BlackScreen, None),
                FaultKind::SystemHalt => (PlantKindDoc::SystemHalt, None),
                FaultKind::SystemReboot => (PlantKindDoc::SystemReboot, None),
                FaultKind::ResponseDelay { ticks } => (PlantKindDoc::ResponseDelay, Some(PayloadDoc::Ticks(*ticks))),
                FaultKind::BlurryScreen => (PlantKindDoc::BlurryScreen, None),
                FaultKind::VoiceNoImage => (PlantKindDoc::VoiceNoImage, None),
            };
            PlantDoc { kind, view: p.view.to_string(), key: p.key, payload }
        })
        .collect();
    let doc = SpecDoc {
        name: spec.name.clone(),
        root: spec.root.to_string(),
        seed: spec.seed,
        activities,
        plants,
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("spec document serializes");
    out.push(b'\n');
    out
}
