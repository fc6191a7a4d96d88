use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tvtest::appspec::{parse_spec, pilot_app, serialize_spec, synth_app, AppSpec, LayoutPattern, PatternKind};
use tvtest::creeper::{explore, CreeperConfig, CreeperError, ExplorationResult};
use tvtest::emulator::EmulatorSession;
use tvtest::navmodel::{build_model, NavModel};
use tvtest::pipeline::{run_pipeline, PipelineConfig};
use tvtest::runner::{emit_report, run_suite, ReportFormat, RunConfig, RunReport, DEFAULT_DELAY_THRESHOLD};
use tvtest::testgen::{coverage_of, generate, rip, CoverageCriterion, RipAction, RipPattern, TestSuite};

#[derive(Parser)]
#[command(name = "tvtest", version, about = "Model-based testing for D-pad navigated TV apps")]
struct Cli {
    /// Seed for synthesis and test generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file. Without it results go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Rendering of run reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Text => ReportFormat::Text,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Pattern {
    A,
    B,
    C,
}

#[derive(Clone, Copy, ValueEnum)]
enum Action {
    Splice,
    Truncate,
    Drop,
}

impl From<Action> for RipAction {
    fn from(a: Action) -> Self {
        match a {
            Action::Splice => RipAction::Splice,
            Action::Truncate => RipAction::Truncate,
            Action::Drop => RipAction::Drop,
        }
    }
}

#[derive(clap::Args)]
struct ExploreArgs {
    /// Start view, `vN` for the root activity or `activity:vN`.
    #[arg(long)]
    start: Option<String>,
    /// Level cap, a positive number or `inf`.
    #[arg(long, default_value = "50", value_parser = parse_it_max)]
    itmax: u32,
    /// Probe OK as well as the arrow keys (the default).
    #[arg(long, overrides_with = "no_ok")]
    ok: bool,
    /// Probe the arrow keys only.
    #[arg(long)]
    no_ok: bool,
}

impl ExploreArgs {
    fn creeper(&self, spec: &AppSpec) -> Result<CreeperConfig, Failure> {
        let start = self.start.as_deref().map(|s| spec.parse_view(s)).transpose().map_err(infra)?;
        Ok(CreeperConfig { start, it_max: self.itmax, probe_ok: !self.no_ok, ..CreeperConfig::default() })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthesized app spec.
    Synth {
        #[arg(long, value_enum, default_value_t = Pattern::B)]
        pattern: Pattern,
        /// Defaults to 1 for pattern a and 3 otherwise.
        #[arg(long)]
        rows: Option<u32>,
        #[arg(long, default_value_t = 4)]
        cols: u32,
        #[arg(long, default_value_t = 1)]
        activities: u32,
        /// Number of planted faults.
        #[arg(long, default_value_t = 0)]
        faults: u32,
        /// Write the built-in 3x4 pilot app with a cloud row instead.
        #[arg(long, conflicts_with_all = ["pattern", "rows", "cols", "activities", "faults"])]
        pilot: bool,
    },
    /// Explore an app and write what was found.
    Explore {
        spec: PathBuf,
        #[command(flatten)]
        args: ExploreArgs,
        /// Explore with planted faults active.
        #[arg(long)]
        faulty: bool,
    },
    /// Build a navigation model from an exploration file.
    Model { exploration: PathBuf },
    /// Generate a test suite from a model.
    Gen {
        model: PathBuf,
        /// `view`, `transition`, `pair` or `random[:cases[:length]]`.
        #[arg(long, default_value = "transition", value_parser = parse_criterion)]
        criterion: CoverageCriterion,
    },
    /// Repair a suite against a model. Repairs go to `<out>.repairs.json`,
    /// or to stderr without `--out`.
    Rip {
        suite: PathBuf,
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Action::Splice)]
        action: Action,
    },
    /// Run a suite against an app and report.
    Run {
        suite: PathBuf,
        spec: PathBuf,
        /// Model used to compute coverage.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_DELAY_THRESHOLD)]
        delay_threshold: u32,
    },
    /// Explore, model, generate, rip and run in one go. With `--out`, the
    /// intermediate files are written beside the report.
    Pipeline {
        spec: PathBuf,
        #[arg(long, default_value = "transition", value_parser = parse_criterion)]
        criterion: CoverageCriterion,
        #[command(flatten)]
        args: ExploreArgs,
        #[arg(long, value_enum, default_value_t = Action::Splice)]
        action: Action,
        #[arg(long, default_value_t = DEFAULT_DELAY_THRESHOLD)]
        delay_threshold: u32,
    },
    /// Render a saved run report.
    Report { report: PathBuf },
}

fn parse_it_max(s: &str) -> Result<u32, String> {
    if s == "inf" {
        return Ok(CreeperConfig::UNBOUNDED);
    }
    match s.parse::<u32>() {
        Ok(0) | Err(_) => Err(format!("expected a positive number or `inf`, got {s:?}")),
        Ok(n) => Ok(n),
    }
}

fn parse_criterion(s: &str) -> Result<CoverageCriterion, String> {
    s.parse().map_err(|e: tvtest::testgen::GenError| e.to_string())
}

/// Exit status 1 for failing tests, 2 for everything that kept them from
/// running.
struct Failure {
    code: u8,
    message: String,
}

fn infra(e: impl std::fmt::Display) -> Failure {
    Failure { code: 2, message: e.to_string() }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| infra(format!("{}: {e}", path.display())))
}

fn read_spec(path: &Path) -> Result<AppSpec, Failure> {
    parse_spec(&read(path)?).map_err(|e| infra(format!("{}: {e}", path.display())))
}

fn read_model(path: &Path) -> Result<NavModel, Failure> {
    NavModel::from_json(&read(path)?).map_err(|e| infra(format!("{}: {e}", path.display())))
}

fn read_suite(path: &Path) -> Result<TestSuite, Failure> {
    let id = path.file_stem().map_or("suite".into(), |s| s.to_string_lossy().into_owned());
    TestSuite::from_json(id, &read(path)?).map_err(|e| infra(format!("{}: {e}", path.display())))
}

fn pretty<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| infra(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).map_err(infra)
        }
    }
}

/// `dir/name.json` becomes `dir/name.<suffix>.json`.
fn beside(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.{suffix}.json"))
}

fn explore_failure(e: CreeperError) -> Failure {
    match e {
        CreeperError::NoStartPoint => infra(
            "no start point: the app has no pre-selected view after boot; choose one with --start",
        ),
        other => infra(other),
    }
}

fn verdict_code(report: &RunReport) -> u8 {
    u8::from(!report.all_passed())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Synth { pattern, rows, cols, activities, faults, pilot } => {
            let spec = if pilot {
                pilot_app()
            } else {
                let kind = match pattern {
                    Pattern::A => PatternKind::A,
                    Pattern::B => PatternKind::B,
                    Pattern::C => PatternKind::C,
                };
                let rows = rows.unwrap_or(if kind == PatternKind::A { 1 } else { 3 });
                synth_app(LayoutPattern { kind, rows, cols }, activities, faults, cli.seed).map_err(infra)?
            };
            emit(out, &serialize_spec(&spec))?;
        }
        Command::Explore { spec, args, faulty } => {
            let spec = read_spec(&spec)?;
            let config = args.creeper(&spec)?;
            let spec = if faulty { spec } else { spec.without_plants() };
            let mut session = EmulatorSession::boot(spec);
            let result = explore(&mut session, &config).map_err(explore_failure)?;
            emit(out, &pretty(&result))?;
        }
        Command::Model { exploration } => {
            let bytes = read(&exploration)?;
            let result: ExplorationResult =
                serde_json::from_slice(&bytes).map_err(|e| infra(format!("{}: {e}", exploration.display())))?;
            let model = build_model(&result).map_err(infra)?;
            emit(out, &model.to_json())?;
        }
        Command::Gen { model, criterion } => {
            let model = read_model(&model)?;
            let suite = generate(&model, criterion, cli.seed).map_err(infra)?;
            emit(out, &suite.to_json())?;
        }
        Command::Rip { suite, model, action } => {
            let suite = read_suite(&suite)?;
            let model = read_model(&model)?;
            let (ripped, repairs) = rip(&suite, &model, &RipPattern::all(action.into()));
            emit(out, &ripped.to_json())?;
            match out {
                Some(path) => emit(Some(&beside(path, "repairs")), &pretty(&repairs))?,
                None => eprint!("{}", String::from_utf8_lossy(&pretty(&repairs))),
            }
        }
        Command::Run { suite, spec, model, delay_threshold } => {
            let suite = read_suite(&suite)?;
            let spec = read_spec(&spec)?;
            let config = RunConfig { seed: None, criterion: None, delay_threshold };
            let mut report = run_suite(&suite, &spec, config).map_err(infra)?;
            if let Some(model) = model {
                let model = read_model(&model)?;
                report.coverage = Some(coverage_of(&suite, &model).map_err(infra)?);
            }
            emit(out, &emit_report(&report, cli.format.into()))?;
            return Ok(verdict_code(&report));
        }
        Command::Pipeline { spec, criterion, args, action, delay_threshold } => {
            let spec = read_spec(&spec)?;
            let creeper = args.creeper(&spec)?;
            let config = PipelineConfig {
                start: creeper.start,
                it_max: creeper.it_max,
                probe_ok: creeper.probe_ok,
                criterion,
                seed: cli.seed,
                rip_patterns: RipPattern::all(action.into()),
                delay_threshold,
            };
            let artifacts = run_pipeline(&spec, &config).map_err(|e| match e {
                tvtest::pipeline::PipelineError::Explore(e) => explore_failure(e),
                other => infra(other),
            })?;
            if let Some(path) = out {
                let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
                let stem = path.file_stem().map_or("pipeline".into(), |s| s.to_string_lossy().into_owned());
                let stem = stem.strip_suffix(".report").unwrap_or(&stem).to_string();
                artifacts.write(dir, &stem).map_err(infra)?;
            }
            emit(out, &emit_report(&artifacts.report, cli.format.into()))?;
            return Ok(verdict_code(&artifacts.report));
        }
        Command::Report { report } => {
            let bytes = read(&report)?;
            let parsed = RunReport::from_json(&bytes).map_err(|e| infra(format!("{}: {e}", report.display())))?;
            emit(out, &emit_report(&parsed, cli.format.into()))?;
            return Ok(verdict_code(&parsed));
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, message }) => {
            eprintln!("tvtest: {message}");
            ExitCode::from(code)
        }
    }
}
