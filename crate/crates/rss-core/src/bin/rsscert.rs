//! Command-line surface for the safety-envelope library: distance checks,
//! scenario simulation, STPA analysis and certification-project management.
//!
//! Exit codes: 0 success; 1 safety violation or gate refusal; 2 invalid
//! input or parameter invariant violation; 3 file or parse error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use rss_core::kinematics::{
    effective_braking, lateral_safe_distance, longitudinal_safe_distance, two_second_gap,
    AdhesionContext, LateralPair, LateralParams, LongitudinalPair, LongitudinalParams,
};
use rss_core::pipeline::{pegasus_phase, stage_table, ArgumentationLayer, CertificationProject};
use rss_core::report::LinePlot;
use rss_core::scenarios::{build_catalog, catalog_entry, ScenarioSpec};
use rss_core::simulator::{assign_blame, run, AdversaryPolicy, EgoPolicy, Trace};
use rss_core::stpa::{
    analyze_model, default_table, emit_safety_concept, traceability_closure, uca_candidate_grid,
    AsilTable, StpaModel,
};

const EXIT_OK: i32 = 0;
const EXIT_SAFETY: i32 = 1;
const EXIT_INVALID: i32 = 2;
const EXIT_IO: i32 = 3;

#[derive(Debug)]
enum CliError {
    /// Parameter or invariant violations: exit 2.
    Invalid(String),
    /// File or parse problems: exit 3.
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

fn invalid<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Invalid(e.to_string())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("read {}: {e}", path.display())))
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("mkdir {}: {e}", parent.display())))?;
        }
    }
    fs::write(path, content).map_err(|e| CliError::Io(format!("write {}: {e}", path.display())))
}

fn default_out_dir() -> PathBuf {
    std::env::var_os("RSSCERT_OUT_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Parser)]
#[command(
    name = "rsscert",
    version,
    about = "Safety envelopes, scenario simulation, STPA analysis and certification pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute safe longitudinal/lateral distances, optionally sweeping v_r
    Distance(DistanceArgs),
    /// Simulate a scenario and export trace, plots and verdicts
    Simulate(SimulateArgs),
    /// List or export the built-in scenario catalog
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
    /// STPA/HARA analysis over a model file
    Stpa {
        #[command(subcommand)]
        command: StpaCommand,
    },
    /// Manage an evidence-gated certification project
    Pipeline {
        #[command(subcommand)]
        command: PipelineCommand,
    },
}

#[derive(Args)]
struct DistanceArgs {
    /// Rear vehicle speed (m/s)
    #[arg(long)]
    vr: f64,
    /// Front vehicle speed (m/s)
    #[arg(long)]
    vf: f64,
    /// Response time P (s)
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Max acceleration during response (m/s²)
    #[arg(long, default_value_t = 2.0)]
    amax: f64,
    /// Guaranteed minimum braking of the rear vehicle (m/s²)
    #[arg(long, default_value_t = 4.0)]
    bmin: f64,
    /// Maximum braking of the front vehicle (m/s²)
    #[arg(long, default_value_t = 8.0)]
    bmax: f64,
    /// Left vehicle lateral speed (m/s, rightward positive)
    #[arg(long, default_value_t = 0.0)]
    v1: f64,
    /// Right vehicle lateral speed (m/s, rightward positive)
    #[arg(long, default_value_t = 0.0)]
    v2: f64,
    /// Max lateral acceleration during response (m/s²)
    #[arg(long = "lat-accel", default_value_t = 1.0)]
    lat_accel: f64,
    /// Lateral braking of the left vehicle (m/s²)
    #[arg(long, default_value_t = 2.0)]
    b1: f64,
    /// Lateral braking of the right vehicle (m/s²)
    #[arg(long, default_value_t = 2.0)]
    b2: f64,
    /// Lateral fluctuation margin μ (m)
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    /// Road adhesion coefficient; caps braking at μ_adh·g
    #[arg(long)]
    adhesion: Option<f64>,
    /// Sweep v_r over a range (A..B or v_r=A..B), emitting CSV and SVG
    #[arg(long, value_name = "A..B")]
    sweep: Option<String>,
    /// Sweep sample count
    #[arg(long, default_value_t = 50)]
    steps: usize,
    /// Output directory for sweep artifacts (default: $RSSCERT_OUT_DIR or .)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum EgoPolicyArg {
    Rss,
    Scripted,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum AdversaryPolicyArg {
    Scripted,
    WorstCase,
}

#[derive(Args)]
struct SimulateArgs {
    /// Catalog scenario id (or 'all')
    #[arg(long, conflicts_with = "file")]
    catalog: Option<String>,
    /// Scenario file path
    #[arg(long)]
    file: Option<PathBuf>,
    /// Ego control policy
    #[arg(long, value_enum, default_value_t = EgoPolicyArg::Rss)]
    ego: EgoPolicyArg,
    /// Non-ego control policy
    #[arg(long, value_enum, default_value_t = AdversaryPolicyArg::Scripted)]
    adversary: AdversaryPolicyArg,
    /// Also compute and write the blame report
    #[arg(long)]
    blame: bool,
    /// Override scenario dt (s)
    #[arg(long)]
    dt: Option<f64>,
    /// Override scenario horizon (s)
    #[arg(long)]
    horizon: Option<f64>,
    /// Output directory (default: $RSSCERT_OUT_DIR or .)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Print catalog ids, families and descriptions
    List,
    /// Write every catalog entry as a scenario file
    Export {
        /// Output directory (default: $RSSCERT_OUT_DIR or .)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum StpaCommand {
    /// Validate a model file (step 0 and cross-references)
    Validate(StpaModelArgs),
    /// Run HARA and print the hazardous events
    Hara(StpaModelArgs),
    /// Print the control-action × UCA-type worksheet
    UcaGrid(StpaModelArgs),
    /// Emit the functional safety concept
    Concept {
        #[command(flatten)]
        model: StpaModelArgs,
        /// Output directory (default: $RSSCERT_OUT_DIR or .)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct StpaModelArgs {
    /// Model file (JSON)
    model: PathBuf,
    /// ASIL determination table file (default: shipped table)
    #[arg(long)]
    asil_table: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PipelineCommand {
    /// Create a new project file
    Create {
        /// Project file path
        project: PathBuf,
        /// Project id (default: file stem)
        #[arg(long)]
        id: Option<String>,
    },
    /// Print stage table, evidence, deficiencies and PEGASUS status
    Status { project: PathBuf },
    /// Add evidence for the current stage and advance if the gate passes
    Advance {
        project: PathBuf,
        /// Evidence as kind=reference (repeatable)
        #[arg(long = "evidence", value_name = "KIND=REF")]
        evidence: Vec<String>,
        /// Record evidence as supplementary (kind not gate-checked)
        #[arg(long)]
        supplementary: bool,
        /// Logical timestamp (default: event sequence number)
        #[arg(long)]
        timestamp: Option<u64>,
    },
    /// Roll back to an earlier stage, preserving evidence
    Rollback {
        project: PathBuf,
        /// Target stage
        #[arg(long)]
        to: u8,
    },
    /// Record a production unit cycle (stages 10-12 per unit)
    Unit {
        project: PathBuf,
        /// Unit identifier
        #[arg(long)]
        unit_id: String,
        /// Evidence as kind=reference (repeatable)
        #[arg(long = "evidence", value_name = "KIND=REF")]
        evidence: Vec<String>,
        /// Logical timestamp (default: event sequence number)
        #[arg(long)]
        timestamp: Option<u64>,
    },
    /// PEGASUS step and argumentation tracking
    Pegasus {
        project: PathBuf,
        #[command(subcommand)]
        command: PegasusCommand,
    },
}

#[derive(Subcommand)]
enum PegasusCommand {
    /// Mark a PEGASUS step (1-20) complete
    StepDone { step: u8 },
    /// Mark an argumentation layer done (requires steps 1-19)
    LayerDone {
        #[arg(value_enum)]
        layer: LayerArg,
    },
    /// Print the five-layer argumentation checklist
    Layers,
    /// Print the phase membership of every step
    Phases,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum LayerArg {
    Structure,
    Formalization,
    Consistency,
    Completeness,
    Conformity,
}

impl From<LayerArg> for ArgumentationLayer {
    fn from(value: LayerArg) -> Self {
        match value {
            LayerArg::Structure => ArgumentationLayer::Structure,
            LayerArg::Formalization => ArgumentationLayer::Formalization,
            LayerArg::Consistency => ArgumentationLayer::Consistency,
            LayerArg::Completeness => ArgumentationLayer::Completeness,
            LayerArg::Conformity => ArgumentationLayer::Conformity,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    };
    std::process::exit(code);
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Distance(args) => cmd_distance(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Scenario { command } => cmd_scenario(command),
        Command::Stpa { command } => cmd_stpa(command),
        Command::Pipeline { command } => cmd_pipeline(command),
    }
}

fn cmd_distance(args: DistanceArgs) -> Result<i32, CliError> {
    let mut lon =
        LongitudinalParams::new(args.p, args.amax, args.bmin, args.bmax).map_err(invalid)?;
    let lat =
        LateralParams::new(args.p, args.lat_accel, args.b1, args.b2, args.mu).map_err(invalid)?;
    if let Some(mu_adh) = args.adhesion {
        let ctx = AdhesionContext::new(mu_adh).map_err(invalid)?;
        lon = effective_braking(&lon, &ctx);
        println!(
            "adhesion {:.3}: effective brake_min {:.4} m/s², brake_max {:.4} m/s²",
            mu_adh, lon.brake_min, lon.brake_max
        );
    }

    let pair = LongitudinalPair::new(args.vr, args.vf, 0.0).map_err(invalid)?;
    let d_lon = longitudinal_safe_distance(&pair, &lon);
    let heuristic = two_second_gap(args.vr).map_err(invalid)?;
    println!("longitudinal safe distance: {:.4} m (two-second rule: {:.4} m)", d_lon, heuristic);

    let lat_pair = LateralPair::new(args.v1, args.v2, 0.0).map_err(invalid)?;
    let d_lat = lateral_safe_distance(&lat_pair, &lat);
    println!("lateral safe distance: {:.4} m", d_lat);

    if let Some(sweep) = &args.sweep {
        let (a, b) = parse_range(sweep)?;
        if args.steps < 2 {
            return Err(CliError::Invalid("sweep needs at least 2 steps".into()));
        }
        let out = args.out.unwrap_or_else(default_out_dir);
        let mut csv = String::from("v_rear,d_min,two_second\n");
        let mut min_series = Vec::new();
        let mut heuristic_series = Vec::new();
        for i in 0..args.steps {
            let v = a + (b - a) * i as f64 / (args.steps - 1) as f64;
            let pair = LongitudinalPair::new(v, args.vf, 0.0).map_err(invalid)?;
            let d = longitudinal_safe_distance(&pair, &lon);
            let h = two_second_gap(v).map_err(invalid)?;
            let _ = writeln!(csv, "{:.4},{:.4},{:.4}", v, d, h);
            min_series.push((v, d));
            heuristic_series.push((v, h));
        }
        let mut plot = LinePlot::new(
            &format!("safe distance vs v_rear (v_front {:.1} m/s)", args.vf),
            "v_rear [m/s]",
            "distance [m]",
        );
        plot.add_series("d_min", min_series);
        plot.add_series("two-second rule", heuristic_series);
        write_file(&out.join("distance_sweep.csv"), &csv)?;
        write_file(&out.join("distance_sweep.svg"), &plot.render())?;
        println!("sweep written to {}", out.display());
    }
    Ok(EXIT_OK)
}

fn parse_range(text: &str) -> Result<(f64, f64), CliError> {
    let text = text.strip_prefix("v_r=").unwrap_or(text);
    let parts: Vec<&str> = text.split("..").collect();
    if parts.len() != 2 {
        return Err(CliError::Invalid(format!("range '{text}' must look like A..B or v_r=A..B")));
    }
    let a: f64 =
        parts[0].parse().map_err(|_| CliError::Invalid(format!("bad number {}", parts[0])))?;
    let b: f64 =
        parts[1].parse().map_err(|_| CliError::Invalid(format!("bad number {}", parts[1])))?;
    Ok((a, b))
}

fn load_scenarios(args: &SimulateArgs) -> Result<Vec<ScenarioSpec>, CliError> {
    if let Some(path) = &args.file {
        let text = read_file(path)?;
        let spec = ScenarioSpec::from_json(&text)
            .map_err(|e| CliError::Io(format!("parse {}: {e}", path.display())))?;
        return Ok(vec![spec]);
    }
    match args.catalog.as_deref() {
        Some("all") => Ok(build_catalog()),
        Some(id) => catalog_entry(id)
            .map(|s| vec![s])
            .ok_or_else(|| CliError::Invalid(format!("unknown catalog id '{id}'"))),
        None => Err(CliError::Invalid("pass --catalog <id> or --file <path>".into())),
    }
}

fn sanitize(id: &str) -> String {
    id.replace(['/', ' '], "_")
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32, CliError> {
    let mut specs = load_scenarios(&args)?;
    let out = args.out.clone().unwrap_or_else(default_out_dir);
    let multiple = specs.len() > 1;
    let mut all_clean = true;

    for spec in &mut specs {
        if let Some(dt) = args.dt {
            spec.dt = dt;
        }
        if let Some(horizon) = args.horizon {
            spec.horizon = horizon;
        }
        spec.validate().map_err(invalid)?;
        let ego = match args.ego {
            EgoPolicyArg::Rss => EgoPolicy::Rss,
            EgoPolicyArg::Scripted => EgoPolicy::Scripted,
        };
        let adversary = match args.adversary {
            AdversaryPolicyArg::Scripted => AdversaryPolicy::Scripted,
            AdversaryPolicyArg::WorstCase => AdversaryPolicy::WorstCase,
        };
        let trace = run(spec, ego, adversary).map_err(invalid)?;
        let dir = if multiple { out.join(sanitize(&spec.id)) } else { out.clone() };
        let clean = export_trace(&trace, &dir, args.blame)?;
        all_clean &= clean;
    }
    Ok(if all_clean { EXIT_OK } else { EXIT_SAFETY })
}

/// Writes trace artifacts and prints the verdict summary. Returns false when
/// the run had a collision or an ego rule violation.
fn export_trace(trace: &Trace, dir: &Path, blame: bool) -> Result<bool, CliError> {
    write_file(&dir.join("trace.csv"), &trace.to_csv())?;
    write_file(&dir.join("trace.json"), &trace.to_json())?;

    let lon_series = trace.longitudinal_gap_series();
    let mut plot = LinePlot::new(
        &format!("{}: gap vs required distance", trace.scenario_id),
        "time [s]",
        "distance [m]",
    );
    plot.add_series("actual gap", lon_series.iter().map(|&(t, g, _)| (t, g)).collect());
    plot.add_series("d_min", lon_series.iter().map(|&(t, _, d)| (t, d)).collect());
    write_file(&dir.join("gap_longitudinal.svg"), &plot.render())?;

    let lat_series = trace.lateral_gap_series();
    let mut plot = LinePlot::new(
        &format!("{}: lateral gap vs required distance", trace.scenario_id),
        "time [s]",
        "distance [m]",
    );
    plot.add_series("actual lateral gap", lat_series.iter().map(|&(t, g, _)| (t, g)).collect());
    plot.add_series("d_lat_min", lat_series.iter().map(|&(t, _, d)| (t, d)).collect());
    write_file(&dir.join("gap_lateral.svg"), &plot.render())?;

    let violations = trace.ego_violations();
    println!("scenario {}: {} frames", trace.scenario_id, trace.frames.len());
    match &trace.collision {
        Some(c) => println!(
            "  collision at t={:.3} s between agents {} and {} (closing speed {:.2} m/s)",
            c.time, c.agents.0, c.agents.1, c.relative_speed
        ),
        None => println!("  no collision"),
    }
    if violations.is_empty() {
        println!("  no ego rule violations");
    } else {
        let first = &violations[0];
        println!(
            "  {} frame(s) with ego outside the proper response, first at t={:.3} s (rules {:?})",
            violations.len(),
            first.time,
            first.rules
        );
    }
    if blame {
        let report = assign_blame(trace);
        write_file(&dir.join("blame.json"), &serde_json::to_string_pretty(&report).unwrap())?;
        if report.blamed.is_empty() {
            println!("  blame: nobody (no collision or no rule transition found)");
        } else {
            for id in &report.blamed {
                let why = report
                    .rationale
                    .get(id)
                    .map(|r| {
                        r.iter()
                            .map(|(t, rule)| format!("rule {} at t={:.3} s", rule, t))
                            .collect::<Vec<_>>()
                            .join(", ")
                    })
                    .unwrap_or_default();
                println!("  blame: agent {} ({})", id, why);
            }
        }
    }
    println!("  artifacts in {}", dir.display());
    Ok(trace.collision.is_none() && violations.is_empty())
}

fn cmd_scenario(command: ScenarioCommand) -> Result<i32, CliError> {
    match command {
        ScenarioCommand::List => {
            for spec in build_catalog() {
                println!(
                    "{:<24} {:<15} {}",
                    spec.id,
                    format!("{:?}", spec.family),
                    spec.description
                );
            }
            Ok(EXIT_OK)
        }
        ScenarioCommand::Export { out } => {
            let out = out.unwrap_or_else(default_out_dir);
            for spec in build_catalog() {
                let path = out.join(format!("{}.json", sanitize(&spec.id)));
                write_file(&path, &spec.to_json())?;
                println!("wrote {}", path.display());
            }
            Ok(EXIT_OK)
        }
    }
}

fn load_model(args: &StpaModelArgs) -> Result<(StpaModel, AsilTable), CliError> {
    let text = read_file(&args.model)?;
    let model = StpaModel::from_json(&text)
        .map_err(|e| CliError::Io(format!("parse {}: {e}", args.model.display())))?;
    let table = match &args.asil_table {
        Some(path) => AsilTable::from_json(&read_file(path)?)
            .map_err(|e| CliError::Io(format!("parse {}: {e}", path.display())))?,
        None => default_table(),
    };
    Ok((model, table))
}

fn cmd_stpa(command: StpaCommand) -> Result<i32, CliError> {
    match command {
        StpaCommand::Validate(args) => {
            let (model, table) = load_model(&args)?;
            let (base, events, ucas, factors) = analyze_model(&model, &table).map_err(invalid)?;
            println!(
                "OK: {} accident(s), {} hazard(s), {} constraint(s), {} control action(s)",
                base.accidents.len(),
                base.hazards.len(),
                base.constraints.len(),
                base.control_structure.control_actions.len()
            );
            println!(
                "    {} hazardous event(s), {} confirmed UCA(s), {} causal factor(s)",
                events.len(),
                ucas.len(),
                factors.len()
            );
            Ok(EXIT_OK)
        }
        StpaCommand::Hara(args) => {
            let (model, table) = load_model(&args)?;
            let (_, events, _, _) = analyze_model(&model, &table).map_err(invalid)?;
            println!("{} hazardous event(s):", events.len());
            for e in &events {
                println!(
                    "  {:<32} {:?}/{:?}/{:?} -> ASIL {:<2} goal: {}",
                    e.id, e.severity, e.exposure, e.controllability, e.asil, e.safety_goal
                );
            }
            Ok(EXIT_OK)
        }
        StpaCommand::UcaGrid(args) => {
            let (model, table) = load_model(&args)?;
            let (base, _, ucas, _) = analyze_model(&model, &table).map_err(invalid)?;
            for candidate in uca_candidate_grid(&base) {
                let confirmed = ucas.iter().find(|u| {
                    u.control_action_id == candidate.control_action_id
                        && u.uca_type == candidate.uca_type
                });
                let mark = match confirmed {
                    Some(u) => format!("CONFIRMED as {}", u.id),
                    None => "-".into(),
                };
                println!(
                    "  {:<16} {:<30} {}",
                    candidate.control_action_name,
                    format!("{:?}", candidate.uca_type),
                    mark
                );
            }
            Ok(EXIT_OK)
        }
        StpaCommand::Concept { model, out } => {
            let (parsed, table) = load_model(&model)?;
            let (base, events, ucas, factors) = analyze_model(&parsed, &table).map_err(invalid)?;
            let concept = emit_safety_concept(&base, &events, &ucas, &factors).map_err(invalid)?;
            let chains = traceability_closure(&base, &events, &ucas, &concept).map_err(invalid)?;
            let out = out.unwrap_or_else(default_out_dir);
            write_file(&out.join("safety-concept.json"), &concept.to_json())?;
            write_file(&out.join("safety-concept.txt"), &concept.render_text())?;
            print!("{}", concept.render_text());
            println!("traceability: {} requirement-to-accident chain(s) verified", chains);
            println!("written to {}", out.display());
            Ok(EXIT_OK)
        }
    }
}

fn parse_evidence(items: &[String]) -> Result<Vec<(String, String)>, CliError> {
    items
        .iter()
        .map(|item| {
            item.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| CliError::Invalid(format!("evidence '{item}' must be KIND=REF")))
        })
        .collect()
}

fn load_project(path: &Path) -> Result<CertificationProject, CliError> {
    CertificationProject::from_json(&read_file(path)?)
        .map_err(|e| CliError::Io(format!("parse {}: {e}", path.display())))
}

fn save_project(path: &Path, project: &CertificationProject) -> Result<(), CliError> {
    write_file(path, &project.to_json())
}

fn cmd_pipeline(command: PipelineCommand) -> Result<i32, CliError> {
    match command {
        PipelineCommand::Create { project, id } => {
            if project.exists() {
                return Err(CliError::Invalid(format!("{} already exists", project.display())));
            }
            let id = id.unwrap_or_else(|| {
                project.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            });
            let state = CertificationProject::create(&id);
            save_project(&project, &state)?;
            println!("created project '{}' at stage 1 ({})", state.id, project.display());
            Ok(EXIT_OK)
        }
        PipelineCommand::Status { project } => {
            let state = load_project(&project)?;
            print_status(&state);
            Ok(EXIT_OK)
        }
        PipelineCommand::Advance { project, evidence, supplementary, timestamp } => {
            let mut state = load_project(&project)?;
            let batch = parse_evidence(&evidence)?;
            let outcome = state.advance_stage(&batch, supplementary, timestamp).map_err(invalid)?;
            save_project(&project, &state)?;
            if outcome.advanced {
                println!("advanced to stage {} ({})", outcome.stage, stage_name(outcome.stage));
                Ok(EXIT_OK)
            } else {
                println!("refused at stage {} ({}):", outcome.stage, stage_name(outcome.stage));
                for d in &outcome.deficiencies {
                    println!("  deficiency: {d}");
                }
                Ok(EXIT_SAFETY)
            }
        }
        PipelineCommand::Rollback { project, to } => {
            let mut state = load_project(&project)?;
            state.rollback(to).map_err(invalid)?;
            save_project(&project, &state)?;
            println!("rolled back to stage {} ({})", to, stage_name(to));
            Ok(EXIT_OK)
        }
        PipelineCommand::Unit { project, unit_id, evidence, timestamp } => {
            let mut state = load_project(&project)?;
            let batch = parse_evidence(&evidence)?;
            let outcome = state.record_unit_cycle(&unit_id, &batch, timestamp).map_err(invalid)?;
            save_project(&project, &state)?;
            if outcome.licensed {
                println!("unit {} licensed", outcome.unit_id);
                Ok(EXIT_OK)
            } else {
                println!("unit {} not licensed:", outcome.unit_id);
                for d in &outcome.deficiencies {
                    println!("  deficiency: {d}");
                }
                Ok(EXIT_SAFETY)
            }
        }
        PipelineCommand::Pegasus { project, command } => cmd_pegasus(&project, command),
    }
}

fn cmd_pegasus(path: &Path, command: PegasusCommand) -> Result<i32, CliError> {
    match command {
        PegasusCommand::StepDone { step } => {
            let mut state = load_project(path)?;
            match state.mark_pegasus_step(step) {
                Ok(()) => {
                    save_project(path, &state)?;
                    println!("PEGASUS step {step} done");
                    Ok(EXIT_OK)
                }
                Err(e) => {
                    println!("refused: {e}");
                    Ok(EXIT_SAFETY)
                }
            }
        }
        PegasusCommand::LayerDone { layer } => {
            let mut state = load_project(path)?;
            match state.mark_pegasus_layer(layer.into()) {
                Ok(()) => {
                    save_project(path, &state)?;
                    let done20 = state.pegasus.completed_steps.contains(&20);
                    println!(
                        "argumentation layer marked done{}",
                        if done20 { "; step 20 complete" } else { "" }
                    );
                    Ok(EXIT_OK)
                }
                Err(e) => {
                    println!("refused: {e}");
                    Ok(EXIT_SAFETY)
                }
            }
        }
        PegasusCommand::Layers => {
            let state = load_project(path)?;
            for (layer, done) in state.argumentation_checklist() {
                println!(
                    "  {:<14} {}",
                    format!("{:?}", layer),
                    if done { "done" } else { "pending" }
                );
            }
            Ok(EXIT_OK)
        }
        PegasusCommand::Phases => {
            for step in 1..=20u8 {
                let phases = pegasus_phase(step).map_err(invalid)?;
                let names: Vec<String> = phases.iter().map(|p| format!("{:?}", p)).collect();
                println!("  step {:>2}: {}", step, names.join(", "));
            }
            Ok(EXIT_OK)
        }
    }
}

fn stage_name(index: u8) -> &'static str {
    stage_table()[(index - 1) as usize].name
}

fn print_status(state: &CertificationProject) {
    println!(
        "project '{}' at stage {} ({})",
        state.id,
        state.current_stage,
        stage_name(state.current_stage)
    );
    println!("stages:");
    let mut evidence_by_stage: BTreeMap<u8, usize> = BTreeMap::new();
    for e in &state.evidence {
        *evidence_by_stage.entry(e.stage_index).or_default() += 1;
    }
    for def in stage_table() {
        let marker = if def.index < state.current_stage {
            "done"
        } else if def.index == state.current_stage {
            "HERE"
        } else {
            "    "
        };
        let methods: Vec<String> = def.methods.iter().map(|m| format!("{:?}", m)).collect();
        let actors: Vec<String> = def.actors.iter().map(|a| format!("{:?}", a)).collect();
        println!(
            "  [{:>4}] {:>2} {:<34} evidence {}  methods [{}]  actors [{}]",
            marker,
            def.index,
            def.name,
            evidence_by_stage.get(&def.index).unwrap_or(&0),
            methods.join(", "),
            actors.join(", ")
        );
    }
    let deficiencies = state.deficiencies_for_stage(state.current_stage);
    if deficiencies.is_empty() {
        println!("current stage gate: satisfied");
    } else {
        for d in deficiencies {
            println!("current stage deficiency: {d}");
        }
    }
    println!(
        "PEGASUS: {}/20 steps done; layers: {}",
        state.pegasus.completed_steps.len(),
        state
            .argumentation_checklist()
            .iter()
            .map(|(l, done)| format!("{:?}={}", l, if *done { "done" } else { "pending" }))
            .collect::<Vec<_>>()
            .join(" ")
    );
    if !state.unit_cycles.is_empty() {
        println!("units:");
        for (unit, cycle) in &state.unit_cycles {
            println!(
                "  {}: production {} routine {} licensed {}",
                unit,
                if cycle.production_conformity { "ok" } else { "missing" },
                if cycle.routine_tests { "ok" } else { "missing" },
                if cycle.licensed { "yes" } else { "no" }
            );
        }
    }
}
