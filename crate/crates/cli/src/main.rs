//! Command-line pipeline for day-ahead community battery scheduling:
//! per-entity baselines, the community optimization under a chosen
//! objective, and the reward settlement, plus MILP export and oracle
//! verification for cross-checking.

mod verify;

use clap::{Parser, Subcommand, ValueEnum};
use recdr::community::{self, CommunityError, CommunitySolution, Objective};
use recdr::dr;
use recdr::io::{self, Format, IoError, Report};
use recdr::model::{Finding, Series};
use recdr::settlement::{self, EntitySettlement, Settlement, SettlementError};
use recdr::standalone::{self, StandaloneError};
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "recdr",
    version,
    about = "Day-ahead battery scheduling for renewable energy communities \
             under price-volume demand-response programs"
)]
struct Cli {
    /// Worker threads for concurrent solves (fallback: REC_DR_WORKERS,
    /// then all logical CPUs)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// File format for generated reports
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every entity's baseline day on its own (pipeline step 1)
    Standalone {
        /// Scenario JSON file
        #[arg(long)]
        scenario: PathBuf,
        /// Restrict the run to one entity id
        #[arg(long)]
        entity: Option<String>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full three-step pipeline for one day
    Community {
        /// Scenario JSON file
        #[arg(long)]
        scenario: PathBuf,
        /// Whose take to maximize
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the pipeline for every scenario file in a directory
    Simulate {
        /// Directory of per-day scenario JSON files
        #[arg(long)]
        scenario_dir: PathBuf,
        /// Whose take to maximize
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        /// Output directory (per-day subdirectories plus an aggregate summary)
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the community problem as an LP-format MILP file
    ExportMilp {
        /// Scenario JSON file
        #[arg(long)]
        scenario: PathBuf,
        /// Whose take to maximize
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        /// Output file
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-check the solvers against independent brute-force oracles
    Verify {
        /// Scenario JSON file
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    /// Total entity profit including the entity share of the rewards
    Entities,
    /// The manager's share of the rewards
    Manager,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Objective {
        match o {
            ObjectiveArg::Entities => Objective::Entities,
            ObjectiveArg::Manager => Objective::Manager,
        }
    }
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_TOO_MANY_REQUESTS: u8 = 4;
const EXIT_VERIFY_FAILED: u8 = 5;

/// A command failure with its exit code already decided.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn validation(message: impl Display) -> Failure {
        Failure { code: EXIT_VALIDATION, message: message.to_string() }
    }

    fn io(message: impl Display) -> Failure {
        Failure { code: 1, message: message.to_string() }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Failure {
        let code = match e {
            IoError::WriteFile { .. } => 1,
            _ => EXIT_VALIDATION,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<StandaloneError> for Failure {
    fn from(e: StandaloneError) -> Failure {
        Failure { code: EXIT_SOLVER, message: e.to_string() }
    }
}

impl From<CommunityError> for Failure {
    fn from(e: CommunityError) -> Failure {
        let code = match e {
            CommunityError::TooManyRequests { .. } => EXIT_TOO_MANY_REQUESTS,
            _ => EXIT_SOLVER,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<SettlementError> for Failure {
    fn from(e: SettlementError) -> Failure {
        Failure { code: EXIT_SOLVER, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_workers(cli.workers);
    let format = cli.format.into();
    let result = match cli.command {
        Command::Standalone { scenario, entity, out } => {
            cmd_standalone(&scenario, entity.as_deref(), &out, format)
        }
        Command::Community { scenario, objective, out } => {
            cmd_community(&scenario, objective.into(), &out, format)
        }
        Command::Simulate { scenario_dir, objective, out } => {
            cmd_simulate(&scenario_dir, objective.into(), &out, format)
        }
        Command::ExportMilp { scenario, objective, out } => {
            cmd_export_milp(&scenario, objective.into(), &out)
        }
        Command::Verify { scenario } => verify::run(&scenario),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Installs the global worker pool when an override is present; rayon's
/// own default (all logical CPUs) applies otherwise.
fn configure_workers(flag: Option<usize>) {
    let from_env = || {
        std::env::var("REC_DR_WORKERS").ok().and_then(|v| match v.parse::<usize>() {
            Ok(n) => Some(n),
            Err(_) => {
                eprintln!("warning: ignoring non-numeric REC_DR_WORKERS={v:?}");
                None
            }
        })
    };
    if let Some(n) = flag.or_else(from_env) {
        if n > 0 {
            // Failure means a pool already exists, which only happens in
            // tests that call this twice; the first pool wins.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn print_warnings(warnings: &[Finding]) {
    for w in warnings {
        eprintln!("warning [{}]: {}", w.code, w.message);
    }
}

fn day_label(path: &Path) -> String {
    path.file_stem().map_or_else(|| "day".to_string(), |s| s.to_string_lossy().into_owned())
}

fn write_run_meta(out: &Path, value: serde_json::Value) -> Result<(), Failure> {
    let path = out.join("run_meta.json");
    let mut text = serde_json::to_string_pretty(&value).expect("meta serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
}

fn cmd_standalone(
    scenario_path: &Path,
    entity: Option<&str>,
    out: &Path,
    format: Format,
) -> Result<u8, Failure> {
    let loaded = io::load_scenario(scenario_path)?;
    print_warnings(&loaded.warnings);
    let mut scenario = loaded.scenario;
    // Baselines ignore the program by definition; a cleared program also
    // makes the report's no-reward columns self-explanatory.
    scenario.program.requests.clear();
    if let Some(id) = entity {
        scenario.entities.retain(|e| e.id == id);
        if scenario.entities.is_empty() {
            return Err(Failure::validation(format!("no entity with id {id:?} in the scenario")));
        }
    }

    let started = Instant::now();
    let results = standalone::solve_all(&scenario)?;
    let wall = started.elapsed().as_secs_f64();

    let baselines: Vec<f64> = results.iter().map(|r| r.profit).collect();
    let schedules: Vec<_> = results.into_iter().map(|r| r.schedule).collect();
    let net = community::net_injection(&scenario, &schedules);
    let total: f64 = baselines.iter().sum();
    let solution = CommunitySolution {
        schedules,
        psi: baselines.clone(),
        gamma: Vec::new(),
        regime: Vec::new(),
        e_dr: Vec::new(),
        net_injection: Series::kwh(net),
        objective_value: total,
        baseline_total: total,
    };
    let settlement = Settlement {
        xi_total: 0.0,
        rho: 0.0,
        entities: baselines
            .iter()
            .map(|&b| EntitySettlement { baseline: b, psi: b, xi: 0.0, profit: b, delta: 0.0 })
            .collect(),
    };
    let day = day_label(scenario_path);
    let report = Report::assemble(&day, &scenario, Objective::Entities, &solution, &settlement);
    io::write_report(&report, out, format)?;
    write_run_meta(out, serde_json::json!({ "day": day, "wall_seconds": wall }))?;

    for e in &report.entities {
        println!("entity {}: baseline profit {:.4}", e.entity, e.baseline);
    }
    println!("baseline total {total:.4}, wall {wall:.3} s, results in {}", out.display());
    Ok(0)
}

/// Loads one scenario and runs the full three-step pipeline on it.
fn run_day(
    scenario_path: &Path,
    objective: Objective,
) -> Result<(Report, f64, Vec<Finding>), Failure> {
    let loaded = io::load_scenario(scenario_path)?;
    let scenario = loaded.scenario;
    let started = Instant::now();
    let baselines: Vec<f64> =
        standalone::solve_all(&scenario)?.iter().map(|r| r.profit).collect();
    let solution = community::solve_community(&scenario, objective, &baselines)?;
    let settlement = settlement::settle(
        &baselines,
        &solution.psi,
        &solution.gamma,
        scenario.program.alpha,
        Default::default(),
    )?;
    let wall = started.elapsed().as_secs_f64();
    let day = day_label(scenario_path);
    let report = Report::assemble(&day, &scenario, objective, &solution, &settlement);
    Ok((report, wall, loaded.warnings))
}

fn print_day_summary(report: &Report, wall: f64) {
    println!(
        "day {}: objective {} -> J0 {:.4}, sum_gamma {:.4}, rho {:.6}, wall {wall:.3} s",
        report.day, report.objective, report.baseline_total, report.sum_gamma, report.rho
    );
    for e in &report.entities {
        if e.negative_xi {
            println!(
                "note: entity {} pays {:.4} into the pot (negative reward share)",
                e.entity, -e.xi
            );
        }
    }
}

fn cmd_community(
    scenario_path: &Path,
    objective: Objective,
    out: &Path,
    format: Format,
) -> Result<u8, Failure> {
    let (report, wall, warnings) = run_day(scenario_path, objective)?;
    print_warnings(&warnings);
    io::write_report(&report, out, format)?;
    write_run_meta(out, serde_json::json!({ "day": report.day, "wall_seconds": wall }))?;
    print_day_summary(&report, wall);
    Ok(0)
}

fn cmd_simulate(
    scenario_dir: &Path,
    objective: Objective,
    out: &Path,
    format: Format,
) -> Result<u8, Failure> {
    let entries = fs::read_dir(scenario_dir)
        .map_err(|e| Failure::validation(format!("cannot read {}: {e}", scenario_dir.display())))?;
    let mut day_files: Vec<PathBuf> = entries
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    day_files.sort();
    if day_files.is_empty() {
        return Err(Failure::validation(format!(
            "no .json scenario files in {}",
            scenario_dir.display()
        )));
    }

    let mut reports = Vec::new();
    let mut metas = Vec::new();
    let mut failed = 0usize;
    for path in &day_files {
        match run_day(path, objective) {
            Ok((report, wall, warnings)) => {
                print_warnings(&warnings);
                io::write_report(&report, &out.join(&report.day), format)?;
                print_day_summary(&report, wall);
                metas.push(serde_json::json!({ "day": report.day, "wall_seconds": wall }));
                reports.push(report);
            }
            Err(f) => {
                eprintln!("day {}: failed: {}", day_label(path), f.message);
                failed += 1;
            }
        }
    }
    io::write_summary(&reports, out, format)?;
    write_run_meta(out, serde_json::Value::Array(metas))?;
    println!("{} of {} days processed", reports.len(), day_files.len());
    Ok(if failed == 0 { 0 } else { 1 })
}

fn cmd_export_milp(
    scenario_path: &Path,
    objective: Objective,
    out: &Path,
) -> Result<u8, Failure> {
    let loaded = io::load_scenario(scenario_path)?;
    print_warnings(&loaded.warnings);
    let scenario = loaded.scenario;
    let big_ms = dr::default_big_ms(&scenario);
    let text = dr::export_milp(&scenario, objective, &big_ms)
        .map_err(|e| Failure { code: EXIT_SOLVER, message: e.to_string() })?;
    fs::write(out, &text)
        .map_err(|e| Failure::io(format!("cannot write {}: {e}", out.display())))?;
    println!("wrote MILP ({} lines) to {}", text.lines().count(), out.display());
    Ok(0)
}
