//! `frameless` - exact finite-length analysis, simulation, and parameter
//! optimization of frameless ALOHA on the collision channel with successive
//! interference cancellation.
//!
//! Exit codes: 0 success, 2 usage error, 3 numeric degeneracy,
//! 4 oracle-verification failure, 1 anything else.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use frameless_core::optimizer::{FloorSearchOptions, PeakSearchOptions};
use frameless_core::{
    analyze, enumerate_exact, omega_for_config, optimize_floor, optimize_peak, per_lower_bound,
    simulate, sweep, AnalyzeOptions, Error as CoreError, OmegaMode, ProtocolConfig, Schedule,
    SweepOptions,
};

use output::{emit, fmt12, sig12, to_json_pretty, CsvDoc, RunSpec};

#[derive(Parser)]
#[command(
    name = "frameless",
    version,
    about = "Finite-length analysis of frameless ALOHA with successive interference cancellation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact PER and throughput for one configuration.
    Analyze(AnalyzeArgs),
    /// Monte Carlo estimate over simulated contention periods.
    Simulate(SimulateArgs),
    /// Exact analysis across a range of contention period lengths.
    Sweep(SweepArgs),
    /// Search for the load that maximizes peak throughput.
    OptimizePeak(OptimizePeakArgs),
    /// Search for the second-stage load minimizing the PER at a target m.
    OptimizeFloor(OptimizeFloorArgs),
    /// PER lower bounds for one configuration.
    Bound(BoundArgs),
    /// Compare the analysis against exhaustive enumeration of tiny
    /// instances; fails (exit 4) on any mismatch beyond 1e-12.
    VerifyOracle(VerifyOracleArgs),
}

#[derive(Args)]
struct ScheduleArgs {
    /// Number of contending users.
    #[arg(long)]
    n: u32,
    /// Load of a single-stage schedule (slot access probability beta/n).
    #[arg(long, conflicts_with_all = ["beta1", "beta2", "m_star"])]
    beta: Option<f64>,
    /// First-stage load of a two-stage schedule.
    #[arg(long, requires = "beta2", requires = "m_star")]
    beta1: Option<f64>,
    /// Second-stage load, active after slot m-star.
    #[arg(long, requires = "beta1")]
    beta2: Option<f64>,
    /// Last slot (1-based) of the first stage.
    #[arg(long, requires = "beta1")]
    m_star: Option<u32>,
}

impl ScheduleArgs {
    fn schedule(&self) -> Result<Schedule, CliError> {
        match (self.beta, self.beta1, self.beta2, self.m_star) {
            (Some(beta), None, None, None) => Ok(Schedule::Single { beta }),
            (None, Some(beta1), Some(beta2), Some(m_star)) => Ok(Schedule::TwoStage {
                beta1,
                beta2,
                m_star,
            }),
            _ => Err(CliError::usage(
                "specify either --beta or all of --beta1/--beta2/--m-star",
            )),
        }
    }

    fn config(&self, m: u32) -> Result<ProtocolConfig, CliError> {
        let config = ProtocolConfig {
            n: self.n,
            schedule: self.schedule()?,
            m,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Write here instead of stdout; relative paths resolve under
    /// $FRAMELESS_OUT_DIR when set. The write is atomic.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Contention period length.
    #[arg(long)]
    m: u32,
    /// Use the Poisson slot-degree approximation instead of the exact
    /// binomial.
    #[arg(long)]
    poisson: bool,
    /// Probability below which decoder states are pruned (and ledgered).
    #[arg(long, default_value_t = 1e-15)]
    prune_threshold: f64,
    /// Include the slot-degree distribution in JSON output.
    #[arg(long)]
    emit_omega: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long)]
    m: u32,
    /// Number of simulated contention periods.
    #[arg(long, default_value_t = 10_000)]
    trials: u32,
    /// Master seed; trial generators derive from (seed, trial index).
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long)]
    m_from: u32,
    #[arg(long)]
    m_to: u32,
    #[arg(long, default_value_t = 1)]
    m_step: u32,
    #[arg(long)]
    poisson: bool,
    #[arg(long, default_value_t = 1e-15)]
    prune_threshold: f64,
    /// Also simulate this many trials per row as an overlay.
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct OptimizePeakArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 1.5)]
    beta_from: f64,
    #[arg(long, default_value_t = 3.5)]
    beta_to: f64,
    #[arg(long, default_value_t = 1e-15)]
    prune_threshold: f64,
    /// Write the full search trace as CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct OptimizeFloorArgs {
    #[arg(long)]
    n: u32,
    /// First-stage load; defaults to the peak-throughput optimum for n.
    #[arg(long)]
    beta1: Option<f64>,
    /// Switch slot; defaults to the peak-throughput optimum for n.
    #[arg(long)]
    m_star: Option<u32>,
    #[arg(long, default_value_t = 2.0)]
    beta2_from: f64,
    #[arg(long, default_value_t = 8.0)]
    beta2_to: f64,
    /// The PER is minimized at m = round(target-ratio * n).
    #[arg(long, default_value_t = 2.0)]
    target_ratio: f64,
    #[arg(long, default_value_t = 1e-15)]
    prune_threshold: f64,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long)]
    m: u32,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct VerifyOracleArgs {
    #[arg(long, default_value_t = 3)]
    max_n: u32,
    #[arg(long, default_value_t = 5)]
    max_m: u32,
    /// Write the comparison table as CSV here.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(CoreError),
    Io(std::io::Error),
    OracleMismatch(u32),
}

impl CliError {
    fn usage(msg: &str) -> Self {
        CliError::Usage(msg.to_string())
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(CoreError::DegenerateDistribution { .. }) => "degenerate",
            CliError::Core(_) => "invalid-config",
            CliError::Io(_) => "io",
            CliError::OracleMismatch(_) => "oracle-mismatch",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(msg) => msg.clone(),
            CliError::Core(e) => e.to_string(),
            CliError::Io(e) => e.to_string(),
            CliError::OracleMismatch(count) => {
                format!("{count} instance(s) disagree with the exhaustive oracle")
            }
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(CoreError::DegenerateDistribution { .. }) => 3,
            CliError::OracleMismatch(_) => 4,
            _ => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let record = serde_json::json!({
                "error": { "kind": err.kind(), "message": err.message() }
            });
            eprintln!("{record}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Analyze(args) => run_analyze(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Sweep(args) => run_sweep(args),
        Command::OptimizePeak(args) => run_optimize_peak(args),
        Command::OptimizeFloor(args) => run_optimize_floor(args),
        Command::Bound(args) => run_bound(args),
        Command::VerifyOracle(args) => run_verify_oracle(args),
    }
}

/// Schedule parameters as flat optional JSON/CSV fields.
fn schedule_fields(
    config: &ProtocolConfig,
) -> (Option<f64>, Option<f64>, Option<f64>, Option<u32>) {
    match config.schedule {
        Schedule::Single { beta } => (Some(beta), None, None, None),
        Schedule::TwoStage {
            beta1,
            beta2,
            m_star,
        } => (None, Some(beta1), Some(beta2), Some(m_star)),
    }
}

fn schedule_header_and_cells(config: &ProtocolConfig) -> (&'static str, Vec<String>) {
    match config.schedule {
        Schedule::Single { beta } => ("beta", vec![fmt12(beta)]),
        Schedule::TwoStage {
            beta1,
            beta2,
            m_star,
        } => (
            "beta1,beta2,m_star",
            vec![fmt12(beta1), fmt12(beta2), m_star.to_string()],
        ),
    }
}

#[derive(Serialize)]
struct AnalyzeOutput {
    n: u32,
    m: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_star: Option<u32>,
    per: f64,
    throughput: f64,
    failure_profile: Vec<f64>,
    conservation_defect: f64,
    pruned_mass: f64,
    approximate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega: Option<Vec<f64>>,
    run_spec: RunSpec,
}

fn run_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let config = args.schedule.config(args.m)?;
    let omega_mode = if args.poisson {
        OmegaMode::Poisson
    } else {
        OmegaMode::Binomial
    };
    let options = AnalyzeOptions {
        omega_mode,
        prune_threshold: args.prune_threshold,
        ..AnalyzeOptions::default()
    };
    let result = analyze(&config, &options)?;

    let spec = RunSpec {
        command: "analyze".into(),
        m: Some(args.m),
        omega: Some(if args.poisson { "poisson" } else { "binomial" }.into()),
        prune_threshold: Some(args.prune_threshold),
        format: args.format.name().into(),
        ..RunSpec::default()
    }
    .with_config(&config);

    let content = match args.format {
        Format::Json => {
            let (beta, beta1, beta2, m_star) = schedule_fields(&config);
            let omega = if args.emit_omega {
                Some(
                    omega_for_config(&config, omega_mode)?
                        .as_slice()
                        .iter()
                        .map(|&w| sig12(w))
                        .collect(),
                )
            } else {
                None
            };
            to_json_pretty(&AnalyzeOutput {
                n: config.n,
                m: config.m,
                beta,
                beta1,
                beta2,
                m_star,
                per: sig12(result.per),
                throughput: sig12(result.throughput),
                failure_profile: result.failure_profile.iter().map(|&w| sig12(w)).collect(),
                conservation_defect: sig12(result.conservation_defect),
                pruned_mass: sig12(result.pruned_mass),
                approximate: result.approximate,
                omega,
                run_spec: spec,
            })
        }
        Format::Csv => {
            let (schedule_header, schedule_cells) = schedule_header_and_cells(&config);
            let mut doc = CsvDoc::new(
                &spec,
                &format!("n,m,m_over_n,{schedule_header},per,throughput"),
            );
            let mut cells = vec![
                config.n.to_string(),
                config.m.to_string(),
                fmt12(config.m as f64 / config.n as f64),
            ];
            cells.extend(schedule_cells);
            cells.push(fmt12(result.per));
            cells.push(fmt12(result.throughput));
            doc.row(&cells);
            doc.finish()
        }
    };
    emit(args.out.output.as_deref(), &content)?;
    Ok(())
}

#[derive(Serialize)]
struct SimulateOutput {
    n: u32,
    m: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_star: Option<u32>,
    per: f64,
    throughput: f64,
    trials: u32,
    stderr_per: f64,
    stderr_throughput: f64,
    seed: u64,
    run_spec: RunSpec,
}

fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let config = args.schedule.config(args.m)?;
    let result = simulate(&config, args.trials, args.seed)?;

    let spec = RunSpec {
        command: "simulate".into(),
        m: Some(args.m),
        trials: Some(args.trials),
        seed: Some(args.seed),
        format: args.format.name().into(),
        ..RunSpec::default()
    }
    .with_config(&config);

    let content = match args.format {
        Format::Json => {
            let (beta, beta1, beta2, m_star) = schedule_fields(&config);
            to_json_pretty(&SimulateOutput {
                n: config.n,
                m: config.m,
                beta,
                beta1,
                beta2,
                m_star,
                per: sig12(result.mean_per),
                throughput: sig12(result.mean_throughput),
                trials: result.trials,
                stderr_per: sig12(result.stderr_per),
                stderr_throughput: sig12(result.stderr_throughput),
                seed: result.seed,
                run_spec: spec,
            })
        }
        Format::Csv => {
            let (schedule_header, schedule_cells) = schedule_header_and_cells(&config);
            let mut doc = CsvDoc::new(
                &spec,
                &format!(
                    "n,m,m_over_n,{schedule_header},per,throughput,trials,stderr_per,stderr_throughput,seed"
                ),
            );
            let mut cells = vec![
                config.n.to_string(),
                config.m.to_string(),
                fmt12(config.m as f64 / config.n as f64),
            ];
            cells.extend(schedule_cells);
            cells.extend([
                fmt12(result.mean_per),
                fmt12(result.mean_throughput),
                result.trials.to_string(),
                fmt12(result.stderr_per),
                fmt12(result.stderr_throughput),
                result.seed.to_string(),
            ]);
            doc.row(&cells);
            doc.finish()
        }
    };
    emit(args.out.output.as_deref(), &content)?;
    Ok(())
}

#[derive(Serialize)]
struct SweepJsonRow {
    n: u32,
    m: u32,
    m_over_n: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_star: Option<u32>,
    per: f64,
    throughput: f64,
    approximate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    sim_per: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sim_throughput: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stderr_per: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stderr_throughput: Option<f64>,
}

#[derive(Serialize)]
struct SweepOutput {
    rows: Vec<SweepJsonRow>,
    run_spec: RunSpec,
}

fn run_sweep(args: SweepArgs) -> Result<(), CliError> {
    if args.m_from == 0 || args.m_to < args.m_from || args.m_step == 0 {
        return Err(CliError::usage(
            "need 1 <= --m-from <= --m-to and --m-step >= 1",
        ));
    }
    let base = args.schedule.config(args.m_from)?;
    let ms: Vec<u32> = (args.m_from..=args.m_to)
        .step_by(args.m_step as usize)
        .collect();
    let options = SweepOptions {
        omega_mode: if args.poisson {
            OmegaMode::Poisson
        } else {
            OmegaMode::Binomial
        },
        prune_threshold: args.prune_threshold,
        simulate_trials: args.trials,
        seed: args.seed,
    };
    let rows = sweep(&base, &ms, &options)?;

    let spec = RunSpec {
        command: "sweep".into(),
        m_from: Some(args.m_from),
        m_to: Some(args.m_to),
        m_step: Some(args.m_step),
        trials: args.trials,
        seed: args.trials.map(|_| args.seed),
        omega: Some(if args.poisson { "poisson" } else { "binomial" }.into()),
        prune_threshold: Some(args.prune_threshold),
        format: args.format.name().into(),
        ..RunSpec::default()
    }
    .with_config(&base);

    let content = match args.format {
        Format::Csv => {
            let (schedule_header, _) = schedule_header_and_cells(&base);
            let sim_header = if args.trials.is_some() {
                ",sim_per,sim_throughput,stderr_per,stderr_throughput,trials,seed"
            } else {
                ""
            };
            let mut doc = CsvDoc::new(
                &spec,
                &format!("n,m,m_over_n,{schedule_header},per,throughput{sim_header}"),
            );
            for row in &rows {
                let (_, schedule_cells) = schedule_header_and_cells(&row.config);
                let mut cells = vec![
                    row.config.n.to_string(),
                    row.config.m.to_string(),
                    fmt12(row.m_over_n),
                ];
                cells.extend(schedule_cells);
                cells.push(fmt12(row.per));
                cells.push(fmt12(row.throughput));
                if let Some(sim) = &row.simulation {
                    cells.extend([
                        fmt12(sim.mean_per),
                        fmt12(sim.mean_throughput),
                        fmt12(sim.stderr_per),
                        fmt12(sim.stderr_throughput),
                        sim.trials.to_string(),
                        sim.seed.to_string(),
                    ]);
                }
                doc.row(&cells);
            }
            doc.finish()
        }
        Format::Json => {
            let json_rows = rows
                .iter()
                .map(|row| {
                    let (beta, beta1, beta2, m_star) = schedule_fields(&row.config);
                    SweepJsonRow {
                        n: row.config.n,
                        m: row.config.m,
                        m_over_n: sig12(row.m_over_n),
                        beta,
                        beta1,
                        beta2,
                        m_star,
                        per: sig12(row.per),
                        throughput: sig12(row.throughput),
                        approximate: row.approximate,
                        sim_per: row.simulation.map(|s| sig12(s.mean_per)),
                        sim_throughput: row.simulation.map(|s| sig12(s.mean_throughput)),
                        stderr_per: row.simulation.map(|s| sig12(s.stderr_per)),
                        stderr_throughput: row.simulation.map(|s| sig12(s.stderr_throughput)),
                    }
                })
                .collect();
            to_json_pretty(&SweepOutput {
                rows: json_rows,
                run_spec: spec,
            })
        }
    };
    emit(args.out.output.as_deref(), &content)?;
    Ok(())
}

#[derive(Serialize)]
struct PeakOutput {
    n: u32,
    beta_max: f64,
    t_max: f64,
    m_max: u32,
    evaluated_points: usize,
    worst_conservation_defect: f64,
    worst_pruned_mass: f64,
    run_spec: RunSpec,
}

fn run_optimize_peak(args: OptimizePeakArgs) -> Result<(), CliError> {
    let options = PeakSearchOptions {
        beta_range: (args.beta_from, args.beta_to),
        prune_threshold: args.prune_threshold,
        ..PeakSearchOptions::default()
    };
    let result = optimize_peak(args.n, &options)?;

    let spec = RunSpec {
        command: "optimize-peak".into(),
        n: Some(args.n),
        beta_from: Some(args.beta_from),
        beta_to: Some(args.beta_to),
        prune_threshold: Some(args.prune_threshold),
        format: "json".into(),
        ..RunSpec::default()
    };

    if let Some(trace_path) = &args.trace {
        let mut doc = CsvDoc::new(&spec, "beta,m,m_over_n,per,throughput");
        for point in &result.search_trace {
            doc.row(&[
                fmt12(point.beta),
                point.m.to_string(),
                fmt12(point.m as f64 / args.n as f64),
                fmt12(point.per),
                fmt12(point.throughput),
            ]);
        }
        emit(Some(trace_path), &doc.finish())?;
    }

    let content = to_json_pretty(&PeakOutput {
        n: result.n,
        beta_max: sig12(result.beta_max),
        t_max: sig12(result.t_max),
        m_max: result.m_max,
        evaluated_points: result.search_trace.len(),
        worst_conservation_defect: sig12(result.worst_conservation_defect),
        worst_pruned_mass: sig12(result.worst_pruned_mass),
        run_spec: spec,
    });
    emit(args.out.output.as_deref(), &content)?;
    Ok(())
}

#[derive(Serialize)]
struct FloorOutput {
    n: u32,
    beta1: f64,
    beta2: f64,
    m_star: u32,
    target_m: u32,
    per_at_target: f64,
    evaluated_points: usize,
    worst_conservation_defect: f64,
    worst_pruned_mass: f64,
    run_spec: RunSpec,
}

fn run_optimize_floor(args: OptimizeFloorArgs) -> Result<(), CliError> {
    // The first stage defaults to the peak-throughput optimum.
    let (beta1, m_star) = match (args.beta1, args.m_star) {
        (Some(beta1), Some(m_star)) => (beta1, m_star),
        (beta1, m_star) => {
            let peak = optimize_peak(
                args.n,
                &PeakSearchOptions {
                    prune_threshold: args.prune_threshold,
                    ..PeakSearchOptions::default()
                },
            )?;
            (beta1.unwrap_or(peak.beta_max), m_star.unwrap_or(peak.m_max))
        }
    };
    let options = FloorSearchOptions {
        beta2_range: (args.beta2_from, args.beta2_to),
        target_ratio: args.target_ratio,
        prune_threshold: args.prune_threshold,
        ..FloorSearchOptions::default()
    };
    let result = optimize_floor(args.n, beta1, m_star, &options)?;

    let spec = RunSpec {
        command: "optimize-floor".into(),
        n: Some(args.n),
        beta1: Some(beta1),
        m_star: Some(m_star),
        beta2_from: Some(args.beta2_from),
        beta2_to: Some(args.beta2_to),
        target_ratio: Some(args.target_ratio),
        prune_threshold: Some(args.prune_threshold),
        format: "json".into(),
        ..RunSpec::default()
    };

    if let Some(trace_path) = &args.trace {
        let mut doc = CsvDoc::new(&spec, "beta2,per,throughput");
        for point in &result.search_trace {
            doc.row(&[
                fmt12(point.beta2),
                fmt12(point.per),
                fmt12(point.throughput),
            ]);
        }
        emit(Some(trace_path), &doc.finish())?;
    }

    let content = to_json_pretty(&FloorOutput {
        n: result.n,
        beta1: sig12(result.beta1),
        beta2: sig12(result.beta2),
        m_star: result.m_star,
        target_m: result.target_m,
        per_at_target: sig12(result.per_at_target),
        evaluated_points: result.search_trace.len(),
        worst_conservation_defect: sig12(result.worst_conservation_defect),
        worst_pruned_mass: sig12(result.worst_pruned_mass),
        run_spec: spec,
    });
    emit(args.out.output.as_deref(), &content)?;
    Ok(())
}

#[derive(Serialize)]
struct BoundOutput {
    n: u32,
    m: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_star: Option<u32>,
    exact_bound: f64,
    exp_bound: f64,
    /// "never-transmitted probability": the bound is the probability that a
    /// user stays silent for the whole contention period.
    bound_form: &'static str,
    two_stage_extension: bool,
    run_spec: RunSpec,
}

fn run_bound(args: BoundArgs) -> Result<(), CliError> {
    let config = args.schedule.config(args.m)?;
    let bound = per_lower_bound(&config);

    let spec = RunSpec {
        command: "bound".into(),
        m: Some(args.m),
        format: args.format.name().into(),
        ..RunSpec::default()
    }
    .with_config(&config);

    let content = match args.format {
        Format::Csv => {
            let (schedule_header, schedule_cells) = schedule_header_and_cells(&config);
            let mut doc = CsvDoc::new(
                &spec,
                &format!("n,m,{schedule_header},exact_bound,exp_bound"),
            );
            let mut cells = vec![config.n.to_string(), config.m.to_string()];
            cells.extend(schedule_cells);
            cells.push(fmt12(bound.exact_bound));
            cells.push(fmt12(bound.exponential_bound));
            doc.row(&cells);
            doc.finish()
        }
        Format::Json => {
            let (beta, beta1, beta2, m_star) = schedule_fields(&config);
            to_json_pretty(&BoundOutput {
                n: config.n,
                m: config.m,
                beta,
                beta1,
                beta2,
                m_star,
                exact_bound: sig12(bound.exact_bound),
                exp_bound: sig12(bound.exponential_bound),
                bound_form: "never-transmitted probability",
                two_stage_extension: bound.two_stage_extension,
                run_spec: spec,
            })
        }
    };
    emit(args.out.output.as_deref(), &content)?;
    Ok(())
}

fn run_verify_oracle(args: VerifyOracleArgs) -> Result<(), CliError> {
    let spec = RunSpec {
        command: "verify-oracle".into(),
        max_n: Some(args.max_n),
        max_m: Some(args.max_m),
        format: "csv".into(),
        ..RunSpec::default()
    };
    let mut doc = CsvDoc::new(&spec, "n,m,beta,analysis_per,oracle_per,diff,ok");
    let mut mismatches = 0u32;
    println!(
        "{:>3} {:>3} {:>5} {:>24} {:>24} {:>10} ok",
        "n", "m", "beta", "analysis_per", "oracle_per", "diff"
    );
    for n in 1..=args.max_n {
        for m in 1..=args.max_m {
            if n * m > frameless_core::oracle::MAX_ENUMERATION_EDGES {
                continue;
            }
            for &beta in &[0.5f64, 1.0, 1.5, 2.5] {
                if beta > n as f64 {
                    continue;
                }
                let config = ProtocolConfig::single(n, beta, m)?;
                let analysis = analyze(&config, &AnalyzeOptions::default())?;
                let oracle = enumerate_exact(&config)?;
                let diff = (analysis.per - oracle.exact_per).abs();
                let ok = diff <= 1e-12;
                if !ok {
                    mismatches += 1;
                }
                println!(
                    "{n:>3} {m:>3} {beta:>5} {:>24} {:>24} {diff:>10.2e} {}",
                    fmt12(analysis.per),
                    fmt12(oracle.exact_per),
                    if ok { "yes" } else { "NO" }
                );
                doc.row(&[
                    n.to_string(),
                    m.to_string(),
                    beta.to_string(),
                    fmt12(analysis.per),
                    fmt12(oracle.exact_per),
                    format!("{diff:e}"),
                    ok.to_string(),
                ]);
            }
        }
    }
    if let Some(path) = &args.output {
        emit(Some(path), &doc.finish())?;
    }
    if mismatches > 0 {
        return Err(CliError::OracleMismatch(mismatches));
    }
    println!("all instances agree within 1e-12");
    Ok(())
}
