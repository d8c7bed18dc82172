//! `ddgate`: compile, simulate and sweep decoherence-protected gates.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ddgate_core::compiler::Gate;
use ddgate_core::harness::{self, ExperimentConfig, NoiseConfig, Scheme};
use ddgate_core::Error;

#[derive(Parser, Debug)]
#[command(name = "ddgate", version, about = "Decoherence-protected single-qubit gate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted (calibrate defaults to calibration.json).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct Cell {
    #[arg(long)]
    gate: String,
    #[arg(long)]
    scheme: String,
    /// Inter-pulse delay, seconds.
    #[arg(long)]
    tau: f64,
    /// Relative amplitude error; overrides the config.
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the dephasing model to the config's T2*/T2 targets and save it.
    Calibrate {
        #[command(flatten)]
        common: Common,
    },
    /// Emit the schedule JSON of one gate/scheme/τ.
    Compile {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cell: Cell,
    },
    /// Score one gate/scheme/τ cell.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cell: Cell,
    },
    /// Score every gate × scheme × τ of the config.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Summary JSON path (default: next to --out).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Score the table gates at their listed gate times.
    Table1 {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Config(String),
    Simulation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Simulation(_) => 2,
        }
    }
}

fn config_err(e: Error) -> Failure {
    Failure::Config(e.to_string())
}

fn sim_err(e: Error) -> Failure {
    Failure::Simulation(e.to_string())
}

fn default_config() -> ExperimentConfig {
    ExperimentConfig::new(
        NoiseConfig::desk_calibration(),
        Gate::ALL.to_vec(),
        Scheme::ALL.to_vec(),
        vec![3e-6, 1e-5, 3e-5, 1e-4],
    )
}

fn load_config(common: &Common, required: bool) -> Result<ExperimentConfig, Failure> {
    let cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path).map_err(config_err)?,
        None if required => return Err(Failure::Config("--config is required".into())),
        None => default_config(),
    };
    let cfg = cfg.with_seed(common.seed).with_realizations(common.realizations);
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

fn cell_config(common: &Common, cell: &Cell) -> Result<(ExperimentConfig, Gate, Scheme), Failure> {
    let mut cfg = load_config(common, false)?;
    let gate: Gate = cell.gate.parse().map_err(config_err)?;
    let scheme: Scheme = cell.scheme.parse().map_err(config_err)?;
    if let Some(eps) = cell.epsilon {
        cfg.epsilon = eps;
    }
    cfg.gates = vec![gate];
    cfg.schemes = vec![scheme];
    cfg.tau_grid = vec![cell.tau];
    cfg.validate().map_err(config_err)?;
    Ok((cfg, gate, scheme))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Simulation(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Simulation(format!("stdout: {e}"))),
    }
}

fn jobs<T: Send>(common: &Common, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    harness::with_jobs(common.jobs, f).map_err(config_err)
}

fn calibrate(common: &Common) -> Result<(), Failure> {
    let mut cfg = load_config(common, false)?;
    if let Some(seed) = common.seed {
        cfg.calibration.seed = seed;
    }
    if let Some(r) = common.realizations {
        cfg.calibration.realizations = r;
    }
    if !matches!(cfg.noise, NoiseConfig::Calibrate { .. }) {
        return Err(Failure::Config("config noise must be of kind `calibrate`".into()));
    }
    let result = jobs(common, || harness::run_calibration(&cfg))?.map_err(sim_err)?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("calibration.json"));
    harness::write_calibration(&result, &out).map_err(sim_err)?;
    eprintln!(
        "T2* {:.1} us (target {:.1}), T2 {:.1} us (target {:.1}) -> {}",
        result.fitted_t2_star * 1e6,
        result.target_t2_star * 1e6,
        result.fitted_t2_hahn * 1e6,
        result.target_t2_hahn * 1e6,
        out.display()
    );
    Ok(())
}

fn compile(common: &Common, cell: &Cell) -> Result<(), Failure> {
    let (cfg, gate, scheme) = cell_config(common, cell)?;
    let schedule = harness::build_schedule(gate, scheme, cell.tau, &cfg).map_err(sim_err)?;
    let mut text = schedule.to_json().map_err(sim_err)?;
    text.push('\n');
    emit(common.out.as_deref(), &text)
}

fn write_rows(rows: &[harness::ResultRow], out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => harness::write_rows_csv(rows, path),
        None => harness::write_rows(rows, std::io::stdout().lock()),
    }
    .map_err(sim_err)
}

fn check_rows<'a>(errors: impl Iterator<Item = &'a str>) -> Result<(), Failure> {
    let failed: Vec<&str> = errors.filter(|e| !e.is_empty()).collect();
    match failed.first() {
        None => Ok(()),
        Some(first) => Err(Failure::Simulation(format!("{} cell(s) failed; first: {first}", failed.len()))),
    }
}

fn simulate(common: &Common, cell: &Cell) -> Result<(), Failure> {
    let (cfg, gate, scheme) = cell_config(common, cell)?;
    let row = jobs(common, || -> Result<_, Failure> {
        let noise = harness::resolve_noise(&cfg).map_err(sim_err)?;
        Ok(harness::run_cell(gate, scheme, cell.tau, 0, &cfg, &noise))
    })??;
    write_rows(std::slice::from_ref(&row), common.out.as_deref())?;
    check_rows(std::iter::once(row.error.as_str()))
}

fn sweep(common: &Common, summary: Option<&Path>) -> Result<(), Failure> {
    let cfg = load_config(common, true)?;
    let rows = jobs(common, || harness::run_sweep(&cfg))?.map_err(sim_err)?;
    write_rows(&rows, common.out.as_deref())?;
    let summary_path = summary
        .map(Path::to_path_buf)
        .or_else(|| common.out.as_ref().map(|p| p.with_extension("summary.json")));
    if let Some(path) = summary_path {
        let s = harness::summarize(&rows, cfg.epsilon, cfg.realizations, cfg.seed);
        harness::write_summary_json(&s, &path).map_err(sim_err)?;
    }
    check_rows(rows.iter().map(|r| r.error.as_str()))
}

fn table1(common: &Common) -> Result<(), Failure> {
    let mut cfg = load_config(common, false)?;
    if common.config.is_none() {
        cfg.schemes = vec![Scheme::Xy8];
    }
    let rows = jobs(common, || harness::run_table1(&cfg))?.map_err(sim_err)?;
    match common.out.as_deref() {
        Some(path) => harness::write_table1_csv(&rows, path),
        None => harness::write_table1(&rows, std::io::stdout().lock()),
    }
    .map_err(sim_err)?;
    check_rows(rows.iter().map(|r| r.error.as_str()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Calibrate { common } => calibrate(common),
        Command::Compile { common, cell } => compile(common, cell),
        Command::Simulate { common, cell } => simulate(common, cell),
        Command::Sweep { common, summary } => sweep(common, summary.as_deref()),
        Command::Table1 { common } => table1(common),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Config(msg) | Failure::Simulation(msg)) = &f;
            eprintln!("ddgate: {msg}");
            ExitCode::from(f.code())
        }
    }
}
