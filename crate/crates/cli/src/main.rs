mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;
use config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(
    name = "modenergy",
    version,
    about = "Splitting schemes and modified energies for linear Schrödinger on the torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write the observables as CSV.
    Evolve(Common),
    /// Sweep the step size and record the truncated H¹ oscillation.
    Sweep(Common),
    /// Compare truncated modified generators with the unitary logarithm of one step.
    BchCheck(Common),
    /// Print the built-in schemes.
    ListSchemes {
        /// Emit `name.key=value` lines.
        #[arg(long)]
        machine: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<String>,
    /// Custom stage list, e.g. "P:0.5, R:1.0, P:0.5".
    #[arg(long)]
    stages: Option<String>,
    #[arg(long)]
    order: Option<u32>,
    #[arg(long = "K")]
    cutoff: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    h_min: Option<f64>,
    #[arg(long)]
    h_max: Option<f64>,
    #[arg(long)]
    h_count: Option<usize>,
    #[arg(long = "T")]
    final_time: Option<f64>,
    #[arg(long)]
    band: Option<usize>,
    #[arg(long = "L")]
    truncation: Option<usize>,
    #[arg(long)]
    potential: Option<String>,
    #[arg(long)]
    initial: Option<String>,
    #[arg(long)]
    spike_factor: Option<f64>,
    #[arg(long)]
    flat_factor: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    dump_config: bool,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            config.apply_text(&text)?;
        }
        let overrides: [(&str, Option<String>); 17] = [
            ("scheme", self.scheme.clone()),
            ("stages", self.stages.clone()),
            ("order", self.order.map(|x| x.to_string())),
            ("K", self.cutoff.map(|x| x.to_string())),
            ("h", self.h.map(|x| format!("{x:?}"))),
            ("h_min", self.h_min.map(|x| format!("{x:?}"))),
            ("h_max", self.h_max.map(|x| format!("{x:?}"))),
            ("h_count", self.h_count.map(|x| x.to_string())),
            ("T", self.final_time.map(|x| format!("{x:?}"))),
            ("band", self.band.map(|x| x.to_string())),
            ("L", self.truncation.map(|x| x.to_string())),
            ("potential", self.potential.clone()),
            ("initial", self.initial.clone()),
            ("spike_factor", self.spike_factor.map(|x| format!("{x:?}"))),
            ("flat_factor", self.flat_factor.map(|x| format!("{x:?}"))),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("threads", self.threads.map(|x| x.to_string())),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                config.set("", key, &value)?;
            }
        }
        Ok(config)
    }
}

type Action = fn(&RunConfig) -> Result<(), CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, action): (Common, Action) = match cli.command {
        Command::ListSchemes { machine, out } => {
            let config = RunConfig {
                out,
                ..RunConfig::default()
            };
            return commands::cmd_list_schemes(&config, machine);
        }
        Command::Evolve(c) => (c, commands::cmd_evolve),
        Command::Sweep(c) => (c, commands::cmd_sweep),
        Command::BchCheck(c) => (c, commands::cmd_bch_check),
    };
    let config = common.resolve()?;
    if common.dump_config {
        print!("{}", config.dump());
        return Ok(());
    }
    action(&config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
