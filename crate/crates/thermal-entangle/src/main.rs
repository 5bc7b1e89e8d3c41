use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thermal_entangle::commands::{self, Output};
use thermal_entangle::table::sibling;
use thermal_entangle::{verify, CliError, RunConfig};

const UNITS: &str = "Units: hbar = 1, qubit-oscillator coupling = 1, temperatures in units of \
omega/k_B, times in inverse coupling units.\n\nWorker threads: set THERMAL_ENTANGLE_THREADS.\n\
Exit codes: 2 configuration error, 3 numerical failure, 4 verification failure.";

#[derive(Parser)]
#[command(version, about = "Qubit-mediated entanglement of thermally damped oscillators", after_help = UNITS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Outcome probabilities, evolution functions and conditioned Wigner samples
    Evolve,
    /// Bell value surface over temperature and time
    Bell,
    /// Transfer the oscillator entanglement to two fresh qubits
    Reciprocate,
    /// Compare the closed-form solutions with the Fock-space oracle
    Verify,
}

/// Every flag can also be given as `name=value` in the file passed to
/// `--config`; flags win.
#[derive(Args)]
struct Flags {
    /// Read settings from a key=value file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Oscillator damping rate
    #[arg(long, global = true)]
    kappa: Option<String>,
    /// Qubit dephasing rate
    #[arg(long, global = true)]
    gamma: Option<String>,
    /// Bath temperature
    #[arg(long, global = true)]
    temp: Option<String>,
    /// Entangling interaction time
    #[arg(long, global = true)]
    time: Option<String>,
    /// Reciprocation interaction time (defaults to --time)
    #[arg(long, global = true)]
    t2: Option<String>,
    /// Optimizer seed
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Optimizer start points
    #[arg(long, global = true)]
    starts: Option<String>,
    /// Entangling-qubit outcome: g or e
    #[arg(long, global = true)]
    outcome: Option<String>,
    /// sim or seq
    #[arg(long, global = true)]
    interaction: Option<String>,
    /// Reciprocation readout: momentum or parity
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Sector average: probability or uniform
    #[arg(long, global = true)]
    weighting: Option<String>,
    /// Time grid start:stop:step
    #[arg(long = "t-grid", global = true)]
    t_grid: Option<String>,
    /// Temperature grid start:stop:step
    #[arg(long = "temp-grid", global = true)]
    temp_grid: Option<String>,
    /// Momentum / phase-space grid start:stop:step
    #[arg(long = "p-grid", global = true)]
    p_grid: Option<String>,
    /// Also write the (T, t) grid for reciprocate
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    sweep: Option<String>,
    /// Fock cutoff for verify (0 = tail rule)
    #[arg(long, global = true)]
    cutoff: Option<String>,
    /// RK4 step for verify
    #[arg(long, global = true)]
    dt: Option<String>,
    /// Multiplies lambda(t); diagnostic only
    #[arg(long = "lambda-scale", global = true)]
    lambda_scale: Option<String>,
    /// Output path (stdout if absent)
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<String>,
    /// csv or json
    #[arg(long, global = true)]
    format: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        [
            ("kappa", &self.kappa),
            ("gamma", &self.gamma),
            ("temp", &self.temp),
            ("time", &self.time),
            ("t2", &self.t2),
            ("seed", &self.seed),
            ("starts", &self.starts),
            ("outcome", &self.outcome),
            ("interaction", &self.interaction),
            ("mode", &self.mode),
            ("weighting", &self.weighting),
            ("t-grid", &self.t_grid),
            ("temp-grid", &self.temp_grid),
            ("p-grid", &self.p_grid),
            ("sweep", &self.sweep),
            ("cutoff", &self.cutoff),
            ("dt", &self.dt),
            ("lambda-scale", &self.lambda_scale),
            ("out", &self.out),
            ("format", &self.format),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}

fn config(flags: &Flags) -> Result<RunConfig, CliError> {
    let file = match &flags.config {
        Some(p) => RunConfig::read_pairs(p)?,
        None => Default::default(),
    };
    let mut pairs: Vec<(&str, &str)> = file.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    pairs.extend(flags.pairs());
    RunConfig::from_pairs(pairs)
}

fn emit(cfg: &RunConfig, outputs: Vec<Output>) -> Result<(), CliError> {
    for (suffix, table) in outputs {
        match (&cfg.out, suffix) {
            (Some(path), None) => table.write(path, cfg.format)?,
            (Some(path), Some(s)) => table.write(&sibling(path, s), cfg.format)?,
            (None, _) => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                table.write_to(&mut lock, cfg.format)?;
                writeln!(lock)?;
            }
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = config(&cli.flags)?;
    match cli.command {
        Command::Evolve => emit(&cfg, commands::evolve(&cfg)?),
        Command::Bell => emit(&cfg, commands::bell(&cfg)?),
        Command::Reciprocate => emit(&cfg, commands::reciprocate(&cfg)?),
        Command::Verify => {
            let checks = verify::run(&cfg);
            match &cfg.out {
                Some(p) => verify::write(&checks, &cfg, std::io::BufWriter::new(std::fs::File::create(p)?))?,
                None => verify::write(&checks, &cfg, std::io::stdout().lock())?,
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                Err(CliError::VerifyFailed(failed))
            } else {
                Ok(())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("THERMAL_ENTANGLE_THREADS").ok().and_then(|v| v.parse().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
