use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use fris_core::channel::{equivalent_channel, ChannelModel};
use fris_core::config::{ConfigError, Mode, SystemConfig};
use fris_core::harness::{
    ber_csv, convergence_csv, convergence_rows, run_ber, run_convergence, timing_csv, timing_report,
    trial_csv, ExperimentSpec, HarnessError, RunManifest,
};
use fris_core::numerics::ComplexVector;
use fris_core::optimizer::{ao_solve, exhaustive_config_search, AoConfig};
use fris_core::rng::{stream, Purpose};
use fris_core::validate::{mutated_coefficients, Validator};

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "fris-lab", version, about = "FRIS-assisted atomic MIMO link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for Monte-Carlo trials.
    #[arg(long, env = "FRIS_LAB_WORKERS")]
    workers: Option<usize>,
    /// Configuration override `key=value`; repeatable.
    #[arg(long = "set", value_name = "K=V")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMode {
    Fris,
    #[value(name = "ris_fixed")]
    RisFixed,
    Exhaustive,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Self {
        match m {
            CliMode::Fris => Mode::Fris,
            CliMode::RisFixed => Mode::RisFixed,
            CliMode::Exhaustive => Mode::Exhaustive,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Fault {
    /// Flip the sign of the linear coordinate-descent coefficient.
    CdAlphaSign,
}

#[derive(Subcommand)]
enum Command {
    /// Run the oracle suite and print a pass/fail table.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Only run checks whose name contains this text.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, hide = true)]
        inject: Option<Fault>,
    },
    /// Optimize one channel realization end to end.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<CliMode>,
    },
    /// BER of every configured scheme at the configured operating point.
    Ber {
        #[command(flatten)]
        common: Common,
    },
    /// Per-iteration leakage traces over many realizations.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<CliMode>,
    },
    /// BER over the configured sweep axis.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Wallclock of the optimization blocks across problem sizes.
    Timing {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Validation,
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(c) => Failure::Config(c.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

fn load_config(common: &Common, mode: Option<CliMode>) -> Result<SystemConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => SystemConfig::from_file(path)?,
        None => SystemConfig::default(),
    };
    for assignment in &common.overrides {
        cfg.apply_override(assignment)?;
    }
    if let Some(seed) = common.seed {
        cfg.init_seed = seed;
    }
    if let Some(workers) = common.workers {
        cfg.workers = workers;
    }
    if let Some(mode) = mode {
        cfg.mode = mode.into();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_manifest(dir: &Path, command: &str, cfg: &SystemConfig) -> Result<(), Failure> {
    RunManifest::new(command, cfg).write(&dir.join(format!("{command}_manifest.json")))?;
    Ok(())
}

fn complex_json(v: &ComplexVector) -> serde_json::Value {
    json!(v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>())
}

fn cmd_validate(common: &Common, filter: Option<&str>, inject: Option<Fault>) -> Result<(), Failure> {
    let cfg = load_config(common, None)?;
    let mut validator = Validator { seed: cfg.init_seed, ..Validator::default() };
    if let Some(Fault::CdAlphaSign) = inject {
        validator.coefficients = mutated_coefficients;
    }
    let results = validator.run(filter);
    if results.is_empty() {
        return Err(Failure::Config(format!("filter {:?} matches no check", filter.unwrap_or(""))));
    }
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:width$}  {}", r.name, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} checks, {failed} failed", results.len());
    if failed > 0 {
        Err(Failure::Validation)
    } else {
        Ok(())
    }
}

fn cmd_optimize(common: &Common, mode: Option<CliMode>) -> Result<(), Failure> {
    let cfg = load_config(common, mode)?;
    prepare_out(&common.out)?;
    let model = ChannelModel::from_config(&cfg).map_err(runtime)?;
    let cs = model.sample(&mut stream(cfg.init_seed, 0, Purpose::Channel));
    let ao = AoConfig::from_config(&cfg).map_err(runtime)?;

    if cfg.mode == Mode::Exhaustive {
        let res = exhaustive_config_search(&cs, cfg.m_o, cfg.m_p, ao.kappa, cfg.power_p).map_err(runtime)?;
        let certificate = json!({
            "configurations": res.configurations,
            "global_leakage": res.leakage,
            "runner_up_leakage": res.runner_up,
            "ports": res.state.ports,
            "phase_idx": res.state.phase_idx,
            "phases_rad": res.state.phases(),
            "w": complex_json(&res.w),
            "seed": cfg.init_seed,
        });
        write(&common.out, "certificate.json", &(serde_json::to_string_pretty(&certificate).map_err(runtime)? + "\n"))?;
        write_manifest(&common.out, "optimize", &cfg)?;
        println!(
            "global optimum over {} configurations: leakage {:e}, ports {:?}, phases {:?}",
            res.configurations, res.leakage, res.state.ports, res.state.phase_idx
        );
        return Ok(());
    }

    let purpose = if cfg.mode == Mode::RisFixed { Purpose::OptimizerRis } else { Purpose::OptimizerFris };
    let report = ao_solve(&cs, &ao, cfg.mode, &mut stream(cfg.init_seed, 0, purpose)).map_err(runtime)?;
    let h = equivalent_channel(&cs, &report.state).map_err(runtime)?;
    let solution = json!({
        "mode": cfg.mode.as_str(),
        "ports": report.state.ports,
        "phase_idx": report.state.phase_idx,
        "phases_rad": report.state.phases(),
        "w": complex_json(&report.w),
        "leakage": report.leakage,
        "signal_power": (h * &report.w).norm_squared(),
        "iterations": report.iterations,
        "converged_at": report.converged_at,
        "seed": cfg.init_seed,
    });
    write(&common.out, "convergence.csv", &convergence_csv(&convergence_rows(0, &report)))?;
    write(&common.out, "solution.json", &(serde_json::to_string_pretty(&solution).map_err(runtime)? + "\n"))?;
    write_manifest(&common.out, "optimize", &cfg)?;
    println!(
        "{} after {} iterations{}: leakage {:e}, ports {:?}",
        cfg.mode,
        report.iterations,
        if report.converged_at.is_some() { " (converged)" } else { "" },
        report.leakage,
        report.state.ports
    );
    Ok(())
}

fn cmd_ber(common: &Common, sweep: bool) -> Result<(), Failure> {
    let cfg = load_config(common, None)?;
    prepare_out(&common.out)?;
    let spec = if sweep { ExperimentSpec::sweep(&cfg) } else { ExperimentSpec::single_point(&cfg) };
    let out = run_ber(&spec)?;
    let name = if sweep { "sweep" } else { "ber" };
    write(&common.out, &format!("{name}.csv"), &ber_csv(&out.records))?;
    write(&common.out, &format!("{name}_trials.csv"), &trial_csv(&out.trials))?;
    write_manifest(&common.out, name, &cfg)?;
    if out.failed_trials > 0 {
        eprintln!("{} trial(s) failed and were skipped", out.failed_trials);
    }
    for r in &out.records {
        println!("{:>14} {}={:<6} ber {:.6} ({} / {})", r.scheme, r.axis, r.axis_value, r.ber, r.bit_errors, r.total_bits);
    }
    Ok(())
}

fn cmd_convergence(common: &Common, mode: Option<CliMode>) -> Result<(), Failure> {
    let cfg = load_config(common, mode)?;
    if cfg.mode == Mode::Exhaustive {
        return Err(Failure::Config("mode: convergence traces need fris or ris_fixed".into()));
    }
    prepare_out(&common.out)?;
    let rows = run_convergence(&ExperimentSpec::sweep(&cfg), cfg.mode)?;
    write(&common.out, "convergence.csv", &convergence_csv(&rows))?;
    write_manifest(&common.out, "convergence", &cfg)?;
    Ok(())
}

fn cmd_timing(common: &Common) -> Result<(), Failure> {
    let cfg = load_config(common, None)?;
    prepare_out(&common.out)?;
    let rows = timing_report(&cfg)?;
    write(&common.out, "timing.csv", &timing_csv(&rows))?;
    write_manifest(&common.out, "timing", &cfg)?;
    for r in &rows {
        println!("{:>6} {}={:<5} {:>10.3} ms ± {:.3}", r.block, r.param, r.value, r.mean_ms, r.std_ms);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { common, filter, inject } => cmd_validate(common, filter.as_deref(), *inject),
        Command::Optimize { common, mode } => cmd_optimize(common, *mode),
        Command::Ber { common } => cmd_ber(common, false),
        Command::Convergence { common, mode } => cmd_convergence(common, *mode),
        Command::Sweep { common } => cmd_ber(common, true),
        Command::Timing { common } => cmd_timing(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(EXIT_VALIDATION),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
