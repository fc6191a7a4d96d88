//! The whole flow in one call: explore, model, generate, rip, run.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::appspec::{AppSpec, ViewId};
use crate::creeper::{explore, CreeperConfig, CreeperError, ExplorationResult};
use crate::emulator::EmulatorSession;
use crate::navmodel::{build_model, ModelError, NavModel};
use crate::runner::{run_suite, RunConfig, RunError, RunReport, DEFAULT_DELAY_THRESHOLD};
use crate::testgen::{coverage_of, generate, rip, CoverageCriterion, GenError, RepairEntry, RipPattern, TestSuite};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub start: Option<ViewId>,
    pub it_max: u32,
    pub probe_ok: bool,
    pub criterion: CoverageCriterion,
    pub seed: u64,
    pub rip_patterns: Vec<RipPattern>,
    pub delay_threshold: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            start: None,
            it_max: CreeperConfig::default().it_max,
            probe_ok: true,
            criterion: CoverageCriterion::TransitionCoverage,
            seed: 0,
            rip_patterns: Vec::new(),
            delay_threshold: DEFAULT_DELAY_THRESHOLD,
        }
    }
}

/// Every intermediate product of a run.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub exploration: ExplorationResult,
    pub model: NavModel,
    pub suite: TestSuite,
    pub ripped: TestSuite,
    pub repairs: Vec<RepairEntry>,
    pub report: RunReport,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Explore(#[from] CreeperError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Generate(#[from] GenError),
    #[error(transparent)]
    Run(#[from] RunError),
}

/// Runs the pipeline. Exploration sees the app with its planted faults
/// removed, so the model describes intended behavior; the suite then runs
/// against the app as given.
pub fn run_pipeline(spec: &AppSpec, config: &PipelineConfig) -> Result<Artifacts, PipelineError> {
    let mut session = EmulatorSession::boot(spec.without_plants());
    let creeper = CreeperConfig {
        start: config.start.clone(),
        it_max: config.it_max,
        probe_ok: config.probe_ok,
        ..CreeperConfig::default()
    };
    let exploration = explore(&mut session, &creeper)?;
    let model = build_model(&exploration)?;
    let suite = generate(&model, config.criterion, config.seed)?;
    let (ripped, repairs) = rip(&suite, &model, &config.rip_patterns);
    let run_config = RunConfig {
        seed: Some(config.seed),
        criterion: Some(config.criterion.to_string()),
        delay_threshold: config.delay_threshold,
    };
    let mut report = run_suite(&ripped, spec, run_config)?;
    report.coverage = Some(coverage_of(&ripped, &model).expect("ripped suites are valid"));
    Ok(Artifacts { exploration, model, suite, ripped, repairs, report })
}

pub(crate) fn pretty<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("artifact serializes");
    out.push(b'\n');
    out
}

impl Artifacts {
    /// Writes the intermediates `<stem>.exploration.json`, `.model.json`,
    /// `.suite.json`, `.ripped.json` and `.ripped.repairs.json` into `dir`.
    /// The report is left to the caller, who picks its format.
    pub fn write(&self, dir: &Path, stem: &str) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let files = [
            ("exploration", pretty(&self.exploration)),
            ("model", self.model.to_json()),
            ("suite", self.suite.to_json()),
            ("ripped", self.ripped.to_json()),
            ("ripped.repairs", pretty(&self.repairs)),
        ];
        let mut paths = Vec::new();
        for (name, bytes) in files {
            let path = dir.join(format!("{stem}.{name}.json"));
            fs::write(&path, bytes)?;
            paths.push(path);
        }
        Ok(paths)
    }
}
