//! `xxz`: exact dynamics and effective-model predictions for XXZ chains with
//! on-site defects.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use xxz_defects::scenario::{
    output_dir, run_compare_sweep, run_scenario, write_sweep, QuenchSection, RunMode, ScenarioConfig, ScenarioName,
    SweepParameter, SWEEP_FILE,
};
use xxz_defects::Error;

#[derive(Parser)]
#[command(
    name = "xxz",
    version,
    about = "Entangled-state generation in XXZ chains with defects"
)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sector eigenvalues with their weight on the tracked configurations.
    Spectrum(ScenarioArgs),
    /// Exact probability, fidelity and concurrence traces.
    Evolve(ScenarioArgs),
    /// Effective-model energies, gap, period and entanglement instants.
    Predict(ScenarioArgs),
    /// Exact dynamics against the effective model.
    Compare(ScenarioArgs),
    /// Compare over a list of values of one parameter.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// TOML scenario file.
    #[arg(short, long, conflicts_with = "scenario", required_unless_present = "scenario")]
    config: Option<PathBuf>,
    /// Built-in preset instead of a config file.
    #[arg(short, long, value_parser = parse_scenario)]
    scenario: Option<ScenarioName>,
    /// Output directory (default: [output] dir, then `out`).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Number of sample times.
    #[arg(long)]
    samples: Option<usize>,
    /// End of the time window, in units of 1/B.
    #[arg(long)]
    t_max: Option<f64>,
    /// Apply a detuning quench at this time.
    #[arg(long)]
    quench_at: Option<f64>,
    /// Detuning added by the quench, in units of B.
    #[arg(long)]
    detuning: Option<f64>,
    /// Site to detune; repeat for several.
    #[arg(long = "quench-site")]
    quench_sites: Vec<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Parameter to vary: g, delta, mu or n.
    #[arg(short, long)]
    param: SweepParameter,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
}

fn parse_scenario(s: &str) -> Result<ScenarioName, String> {
    s.parse::<ScenarioName>().map_err(|e| e.to_string())
}

impl ScenarioArgs {
    fn config(&self) -> Result<ScenarioConfig, Error> {
        let mut cfg = match (&self.config, self.scenario) {
            (Some(path), _) => ScenarioConfig::load(path)?,
            (None, Some(name)) => ScenarioConfig::preset(name),
            (None, None) => unreachable!("clap requires one of --config and --scenario"),
        };
        if let Some(n) = self.samples {
            cfg.time.samples = Some(n);
        }
        if let Some(t) = self.t_max {
            cfg.time.t_max = Some(t);
        }
        if self.quench_at.is_some() || self.detuning.is_some() || !self.quench_sites.is_empty() {
            let q = cfg.quench.get_or_insert_with(QuenchSection::default);
            if let Some(at) = self.quench_at {
                q.at = Some(at);
            }
            if let Some(d) = self.detuning {
                q.detuning = d;
            }
            if !self.quench_sites.is_empty() {
                q.sites = Some(self.quench_sites.clone());
            }
        }
        Ok(cfg)
    }
}

fn report(path: &Option<PathBuf>) {
    if let Some(p) = path {
        println!("wrote {}", p.display());
    }
}

fn print_quantities(path: &Path) -> Result<(), Error> {
    let text = std::fs::read_to_string(path)?;
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        if let Some((k, v)) = line.split_once(',') {
            println!("  {k:<30} {v}");
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let (args, mode) = match &cli.command {
        Command::Spectrum(a) => (a, RunMode::Spectrum),
        Command::Evolve(a) => (a, RunMode::Evolve),
        Command::Predict(a) => (a, RunMode::Predict),
        Command::Compare(a) => (a, RunMode::Compare),
        Command::Sweep(s) => {
            let cfg = s.scenario.config()?;
            let dir = output_dir(&cfg, s.scenario.out.as_deref());
            let rows = run_compare_sweep(&cfg, s.param, &s.values)?;
            let path = dir.join(SWEEP_FILE);
            write_sweep(&path, &cfg, s.param, &rows)?;
            println!("wrote {}", path.display());
            return Ok(());
        }
    };
    let cfg = args.config()?;
    let dir = output_dir(&cfg, args.out.as_deref());
    let out = run_scenario(&cfg, mode, &dir)?;
    report(&out.spectrum);
    report(&out.trace);
    report(&out.prediction);
    if mode == RunMode::Predict && out.prediction.is_none() {
        println!("{} has no closed-form prediction", cfg.scenario);
    }
    if let Some(p) = &out.comparison {
        println!("wrote {}", p.display());
        print_quantities(p)?;
    } else if let Some(p) = &out.prediction {
        print_quantities(p)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numeric(_) => ExitCode::from(3),
                Error::Domain(_) | Error::Config(_) | Error::Io(_) => ExitCode::from(2),
            }
        }
    }
}
