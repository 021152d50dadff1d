use clap::{Args, Parser, Subcommand};
use csilab::harness::{self, HarnessError, Scenario};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "csilab", version, about = "Twin-beam Cauchy-Schwarz simulator and analyzer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// TOML configuration with [model], [acquisition] and [analysis] sections
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario: G2, G5, G8 or G10
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a trace file
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        sets: Option<usize>,
    },
    /// Correlation and spectral analysis of a trace file
    Analyze {
        trace: PathBuf,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory for g2_curves.csv, spectra.csv and summary.txt
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_compensate_delay: bool,
    },
    /// Violation factor against the upper filter cutoff
    Sweep {
        trace: PathBuf,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated upper cutoffs in MHz
        #[arg(long, value_delimiter = ',')]
        cutoffs: Option<Vec<f64>>,
        /// Output directory for vsweep.csv
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form predictions
    Theory {
        /// Gains to tabulate
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,8,10")]
        gain: Vec<f64>,
        /// Detection efficiency for the squeezing column
        #[arg(long, default_value_t = 0.8)]
        eta: f64,
        /// Probe seed amplitude |alpha|
        #[arg(long, default_value_t = harness::PRESET_SEED_AMPLITUDE)]
        alpha: f64,
        /// Compare against the truncated-Fock oracle at squeeze parameter --s
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 0.3)]
        s: f64,
    },
    /// Simulate, analyze and sweep a scenario in one go
    Report {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        sets: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        cutoffs: Option<Vec<f64>>,
        #[arg(long)]
        no_compensate_delay: bool,
    },
}

fn load_scenario(args: &ScenarioArgs) -> Result<Scenario, HarnessError> {
    match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            Scenario::from_toml_str(&text)
        }
        (None, Some(name)) => {
            harness::preset(name).ok_or_else(|| HarnessError::Config(format!("preset: unknown preset {name:?}")))
        }
        (None, None) => Ok(harness::preset("G10").expect("built-in")),
    }
}

fn override_run(sc: &mut Scenario, seed: Option<u64>, sets: Option<usize>) -> Result<(), HarnessError> {
    if let Some(s) = seed {
        sc.acquisition.rng_seed = s;
    }
    if let Some(n) = sets {
        sc.acquisition.num_sets = n;
    }
    sc.validate()
}

fn cutoffs_hz(list: &Option<Vec<f64>>, sc: &Scenario) -> Vec<f64> {
    match list {
        Some(v) => v.iter().map(|f| f * 1e6).collect(),
        None => sc.cutoffs.clone(),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    harness::write_atomic(path, text.as_bytes())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Simulate { scenario, out, seed, sets } => {
            let mut sc = load_scenario(&scenario)?;
            override_run(&mut sc, seed, sets)?;
            let ts = harness::simulate(&sc)?;
            harness::write_trace_file(&out, &ts)?;
            print!("scenario         {}\n{}", sc.name, harness::trace_summary(&ts));
        }
        Command::Analyze { trace, scenario, out, no_compensate_delay } => {
            let sc = load_scenario(&scenario)?;
            let ts = harness::read_trace_file(&trace)?;
            let result = harness::analyze(&ts, &sc.analysis, !no_compensate_delay)?;
            harness::write_analysis(&out, &ts, &result)?;
            print!("{}", harness::summary_text(&ts, &result));
        }
        Command::Sweep { trace, scenario, cutoffs, out } => {
            let sc = load_scenario(&scenario)?;
            let ts = harness::read_trace_file(&trace)?;
            let points = harness::sweep(&ts, &cutoffs_hz(&cutoffs, &sc), &sc.analysis)?;
            harness::write_sweep(&out, &points)?;
            print!("{}", harness::sweep_csv(&points));
        }
        Command::Theory { gain, eta, alpha, oracle, s } => {
            print!("{}", harness::theory_table(&gain, eta, alpha)?);
            if oracle {
                print!("{}", harness::oracle_table(s, alpha)?);
            }
        }
        Command::Report { scenario, out, seed, sets, cutoffs, no_compensate_delay } => {
            let mut sc = load_scenario(&scenario)?;
            override_run(&mut sc, seed, sets)?;
            let cutoffs = cutoffs_hz(&cutoffs, &sc);
            harness::validate_cutoffs(&cutoffs, &sc.analysis.filter, sc.acquisition.sample_rate)?;
            let ts = harness::simulate(&sc)?;
            let result = harness::analyze(&ts, &sc.analysis, !no_compensate_delay)?;
            harness::write_analysis(&out, &ts, &result)?;
            let points = harness::sweep(&ts, &cutoffs, &sc.analysis)?;
            harness::write_sweep(&out, &points)?;
            let theory = harness::theory_table(&[sc.model.gain()], sc.model.eta, sc.model.squeeze.alpha().norm())?;
            write_text(&out.join("theory.csv"), &theory)?;
            print!("scenario         {}\n{}", sc.name, harness::summary_text(&ts, &result));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("CSILAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("csilab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
