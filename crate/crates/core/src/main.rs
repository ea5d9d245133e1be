use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ergophase::cli::config::{load_config, BathMode, EvaluatorChoice, OutputFormat, PartialConfig};
use ergophase::cli::output::emit;
use ergophase::cli::sweep::{SweepAxis, SweepSpec};
use ergophase::cli::{cmd_figure, cmd_sweep, cmd_verify, CliError};

/// Geometric phase, dynamic phase and ergotropy of a dephasing qubit.
#[derive(Parser)]
#[command(name = "ergophase", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the dataset behind one figure.
    Figure {
        /// dephasing-factor, gp-cycles, gp-vs-ergotropy, ergotropy-bars,
        /// delta-approx or gp-vs-dyn
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep one parameter and tabulate every quantity per point.
    Sweep {
        /// theta, gamma0, time (in units of τ) or n_cycles
        #[arg(long)]
        axis: String,
        #[arg(long)]
        start: f64,
        #[arg(long)]
        stop: f64,
        #[arg(long)]
        count: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Print residuals of the cross-checks; exit 1 if any exceeds its tolerance.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Initial Bloch angle in radians
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Initial Bloch angle in degrees
    #[arg(long, conflicts_with = "theta", allow_negative_numbers = true)]
    theta_deg: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma0: Option<f64>,
    /// k_BT/ħΩ
    #[arg(long = "kT", allow_negative_numbers = true)]
    kt: Option<f64>,
    /// Λ/Ω
    #[arg(long, allow_negative_numbers = true)]
    cutoff: Option<f64>,
    /// zero-t, finite-t or high-t
    #[arg(long)]
    bath: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    cycles: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    steps: Option<i64>,
    /// all, kinematic, exact-gp3, compact-ergotropy, closed-ohmic-high-t,
    /// weak-coupling-high-t or weak-coupling-zero-t
    #[arg(long)]
    evaluator: Option<String>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    /// File layer with the flags on top.
    fn layer(&self) -> Result<PartialConfig, CliError> {
        let file = match &self.config {
            Some(path) => load_config(path)?,
            None => PartialConfig::default(),
        };
        let bad = |flag: &str, v: &str| CliError::Config(format!("--{flag}: unrecognized value `{v}`"));
        let flags = PartialConfig {
            theta: self.theta,
            theta_deg: self.theta_deg,
            gamma0: self.gamma0,
            kt_over_omega: self.kt,
            cutoff_over_omega: self.cutoff,
            bath_mode: self
                .bath
                .as_deref()
                .map(|v| BathMode::parse(v).ok_or_else(|| bad("bath", v)))
                .transpose()?,
            n_cycles: self.cycles,
            steps_per_cycle: self.steps,
            evaluator: self
                .evaluator
                .as_deref()
                .map(|v| EvaluatorChoice::parse(v).ok_or_else(|| bad("evaluator", v)))
                .transpose()?,
            output_format: self
                .format
                .as_deref()
                .map(|v| match v {
                    "csv" => Ok(OutputFormat::Csv),
                    "json" => Ok(OutputFormat::Json),
                    _ => Err(bad("format", v)),
                })
                .transpose()?,
            output_path: self.out.clone(),
            seed: self.seed,
        };
        Ok(file.overlay(&flags))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Figure { name, common } => {
            let (cfg, data) = cmd_figure(&name, &common.layer()?)?;
            emit(&data, &cfg)
        }
        Command::Sweep {
            axis,
            start,
            stop,
            count,
            common,
        } => {
            let axis = SweepAxis::parse(&axis)
                .ok_or_else(|| CliError::Config(format!("--axis: unrecognized value `{axis}`")))?;
            let spec = SweepSpec {
                axis,
                start,
                stop,
                count,
            };
            let (cfg, data) = cmd_sweep(&common.layer()?, &spec)?;
            emit(&data, &cfg)
        }
        Command::Verify { common } => {
            let (cfg, report) = cmd_verify(&common.layer()?)?;
            println!("# ergophase {}", ergophase::cli::VERSION);
            println!(
                "# config: {}",
                serde_json::to_string(&cfg).expect("config serializes")
            );
            print!("{report}");
            if report.passed() {
                Ok(())
            } else {
                let failed = report.checks.iter().filter(|c| !c.passed()).count();
                Err(CliError::Verification(format!("{failed} check(s) above tolerance")))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
