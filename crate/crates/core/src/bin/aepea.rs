use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aepea::batch;
use aepea::dynamics::{LoadModel, Payload};
use aepea::params::{self, FORCE_RATIO_WARN};
use aepea::scenario::{self, RunConfig, RunOutput, ScenarioScript};
use aepea::{ConfigError, Fault};

const EXIT_USAGE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_FAULT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "aepea", version, about = "Adjustable-equilibrium parallel elastic actuator simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write telemetry.
    Run(RunArgs),
    /// Print the design force ratio and warnings.
    Validate(ConfigArg),
    /// Print the static rest angle of the load for an equilibrium angle.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Config file; the reference configuration when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Config file; repeat to run several configurations concurrently.
    #[arg(long)]
    config: Vec<PathBuf>,
    /// `reference` or a scenario file.
    #[arg(long, default_value = "reference")]
    scenario: String,
    /// Integrator step, s.
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    /// Multiplies every hold duration.
    #[arg(long, allow_negative_numbers = true)]
    duration_scale: Option<f64>,
    /// Telemetry CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Equilibrium angle, rad.
    #[arg(long, allow_hyphen_values = true)]
    q_eq: f64,
    /// Read --q-eq in degrees.
    #[arg(long)]
    deg: bool,
    #[arg(long, requires = "payload_lever")]
    payload_mass: Option<f64>,
    #[arg(long, requires = "payload_mass")]
    payload_lever: Option<f64>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Config(String),
    Fault(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<Fault> for CliError {
    fn from(e: Fault) -> Self {
        CliError::Fault(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Validate(args) => validate(args),
        Command::Oracle(args) => oracle(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Fault(msg)) => {
            eprintln!("simulation fault: {msg}");
            ExitCode::from(EXIT_FAULT)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::reference()),
    }
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let script = if args.scenario == "reference" {
        scenario::reference_experiment().0
    } else {
        ScenarioScript::load(Path::new(&args.scenario))?
    };

    let paths: Vec<Option<PathBuf>> =
        if args.config.is_empty() { vec![None] } else { args.config.iter().cloned().map(Some).collect() };
    let mut configs = Vec::with_capacity(paths.len());
    for path in &paths {
        let mut cfg = load_config(path.as_deref())?;
        if let Some(dt) = args.dt {
            cfg.dt = dt;
        }
        if let Some(scale) = args.duration_scale {
            cfg.duration_scale = scale;
        }
        if let Some(out) = &args.out {
            cfg.output = Some(if paths.len() > 1 { per_config_output(out, path.as_deref()) } else { out.clone() });
        }
        cfg.validate()?;
        configs.push(cfg);
    }

    let jobs: Vec<batch::Job> = configs.into_iter().map(|config| batch::Job { script: script.clone(), config }).collect();
    let results = batch::run_batch(&jobs);

    let mut first_err = None;
    let mut faults = 0;
    for ((job, result), path) in jobs.iter().zip(results).zip(&paths) {
        let label = path.as_ref().map_or_else(|| "reference".to_string(), |p| p.display().to_string());
        match result {
            Ok(out) => {
                print_summary(&label, &out);
                if let Some(dest) = &job.config.output {
                    if let Err(e) = scenario::write_csv(&out.records, dest) {
                        first_err.get_or_insert(CliError::Config(e.to_string()));
                    } else {
                        println!("wrote {} records to {}", out.records.len(), dest.display());
                    }
                }
            }
            Err(e) => {
                eprintln!("{label}: {e}");
                faults += 1;
            }
        }
    }
    if faults > 0 {
        return Err(CliError::Fault(format!("{faults} of {} runs failed", jobs.len())));
    }
    first_err.map_or(Ok(()), Err)
}

fn per_config_output(out: &Path, config: Option<&Path>) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("telemetry");
    let tag = config.and_then(|p| p.file_stem()).and_then(|s| s.to_str()).unwrap_or("reference");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}-{tag}.{ext}"))
}

fn print_summary(label: &str, out: &RunOutput) {
    let s = &out.summary;
    println!("== {label}");
    println!(
        "{:>3} {:>5} {:<28} {:>9} {:>9} {:>9} {:>9} {:>10} {:>10} {:>9} {:>9}",
        "#", "stage", "phase", "t_end", "max|dl|", "max|tau_M|", "max|tau_m|", "E_M", "E_m", "q_eq deg", "trans s"
    );
    for p in &s.phases {
        println!(
            "{:>3} {:>5} {:<28} {:>9.3} {:>9.2e} {:>9.3} {:>9.2e} {:>10.4} {:>10.4} {:>9.3} {:>9}",
            p.index,
            p.stage,
            p.phase.to_string(),
            p.t_end,
            p.max_abs_deflection,
            p.max_abs_tau_main,
            p.max_abs_tau_adjuster,
            p.e_main,
            p.e_adjuster,
            p.final_q_eq.to_degrees(),
            p.transition_duration.map_or_else(|| "-".into(), |d| format!("{d:.3}")),
        );
    }
    for p in &s.phases {
        if let Some(w) = p.counterfactual_power {
            if w > 0.0 {
                println!(
                    "phase {}: spring holds {:.3} Nm at {} W; a springless drive would draw {:.1} W",
                    p.index,
                    p.final_spring_torque,
                    p.max_p_main_elec + p.max_p_adjuster_elec,
                    w
                );
            }
        }
    }
    println!(
        "electrical energy: main {:.4} J, adjuster {:.4} J; energy residual {:.3e} J",
        s.e_main, s.e_adjuster, s.energy_residual
    );
}

fn validate(args: ConfigArg) -> Result<(), CliError> {
    let cfg = load_config(args.config.as_deref())?;
    let plant = cfg.params.with_load_inertia(cfg.load.inertia());
    let report = params::validate_design(&plant);
    let m_load = params::equivalent_inertia_load(&plant);
    let m_adj = params::equivalent_inertia_adjuster(&plant);
    println!("main-side inertia M_eq = {m_load:.6e} kg m^2 (rotor + reflected load + bar)");
    println!("adjuster inertia  m_eq = {m_adj:.6e} kg m^2");
    println!("force ratio n*m_eq/M_eq = {:.6e}", report.force_ratio);
    if report.flagged {
        println!("warning: force ratio >= {FORCE_RATIO_WARN}; the small motor carries a large share of the main motor torque");
    }
    let needed = report.force_ratio * cfg.params.main_torque_limit;
    if needed > cfg.params.adjuster_torque_limit {
        println!(
            "warning: at full main torque the spring-nulling torque {needed:.4e} Nm exceeds the small motor limit {:.4e} Nm",
            cfg.params.adjuster_torque_limit
        );
    }
    if scenario::static_equilibrium_solve(&cfg.params, &cfg.load, cfg.initial_equilibrium).is_err() {
        println!("warning: the spring cannot hold the base load at the initial equilibrium");
    }
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<(), CliError> {
    let cfg = load_config(args.config.as_deref())?;
    let q_eq = if args.deg { args.q_eq.to_radians() } else { args.q_eq };
    let load = match (args.payload_mass, args.payload_lever, &cfg.load) {
        (Some(mass), Some(lever), LoadModel::Gravity(p)) => LoadModel::Gravity(p.with_payload(Payload { mass, lever })),
        (Some(_), _, _) => return Err(CliError::Usage("a payload needs a gravity load in the config".into())),
        _ => cfg.load.clone(),
    };
    load.validate()?;
    let q = scenario::static_equilibrium_solve(&cfg.params, &load, q_eq)?;
    println!("q_eq = {q_eq:.12} rad ({:.6} deg)", q_eq.to_degrees());
    println!("q_M_rest = {q:.12} rad ({:.6} deg)", q.to_degrees());
    println!("spring torque = {:.9} Nm", cfg.params.stiffness * (q - q_eq));
    Ok(())
}
