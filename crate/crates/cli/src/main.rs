use std::path::{Path, PathBuf};
use std::process::ExitCode as ProcessExit;

use clap::{Args, Parser, Subcommand};
use zerosum_cli::commands::{
    cmd_backward, cmd_classify, cmd_simulate, cmd_spectrum, cmd_sweep, sweep_csv,
};
use zerosum_cli::output::to_json;
use zerosum_cli::{load_scenario, CliError, ExitCode, FamilySpec, Scenario};

#[derive(Parser)]
#[command(
    name = "zerosum",
    version,
    about = "Conserved-sum species evolution simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML)
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario seed
    #[arg(long)]
    seed: Option<u64>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario, CliError> {
        let mut scenario = load_scenario(&self.scenario)?;
        if self.seed.is_some() {
            scenario.seed = self.seed;
            scenario.matrix()?;
        }
        Ok(scenario)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evolve forward and write the trajectory CSV plus a JSON summary
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Trajectory CSV path
        #[arg(long)]
        out: PathBuf,
        /// Summary path; defaults to <out>.summary.json
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Eigenvalues, stationary mix and biorthogonality check
    Spectrum {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-species regime and predicted survivor
    #[command(allow_negative_numbers = true)]
    Classify {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// Initial share of species 1
        #[arg(long)]
        a: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steps the populations can be run backward before leaving [0, 1]
    Backward {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steps to first elimination across a one-parameter family
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// `two-species:<alpha_coef>:<beta_coef>` or `scaled-generator`
        #[arg(long)]
        family: String,
        /// Comma-separated coupling scales
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        scales: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_steps: Option<usize>,
    },
}

fn default_summary_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".summary.json");
    PathBuf::from(name)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => zerosum_cli::output::write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            scenario,
            out,
            summary,
            max_steps,
        } => {
            let mut s = scenario.load()?;
            if let Some(n) = max_steps {
                s.config.max_steps = n;
            }
            let summary_path = summary.unwrap_or_else(|| default_summary_path(&out));
            let result = cmd_simulate(&s, &out, &summary_path)?;
            println!(
                "{:?} after {} steps, {} event(s)",
                result.exit_reason,
                result.steps_taken,
                result.events.len()
            );
        }
        Command::Spectrum { scenario, out } => {
            let s = scenario.load()?;
            let digest = cmd_spectrum(&s, None)?;
            emit(&to_json(&digest), out.as_deref())?;
        }
        Command::Classify {
            alpha,
            beta,
            a,
            out,
        } => {
            let report = cmd_classify(alpha, beta, a)?;
            println!("{}", report.line(None));
            if let Some(path) = out {
                emit(&to_json(&report), Some(&path))?;
            }
        }
        Command::Backward {
            scenario,
            max_steps,
            out,
        } => {
            let s = scenario.load()?;
            let n = max_steps.unwrap_or(s.config.max_steps);
            let report = cmd_backward(&s, n)?;
            println!("horizon {}", report.horizon);
            println!("offender {}", report.offender.as_deref().unwrap_or("none"));
            if let Some(path) = out {
                emit(&to_json(&report), Some(&path))?;
            }
        }
        Command::Sweep {
            scenario,
            family,
            scales,
            out,
            max_steps,
        } => {
            let family: FamilySpec = family.parse()?;
            if scales.is_empty() {
                return Err(CliError::Usage("--scales needs at least one value".into()));
            }
            let mut s = scenario.load()?;
            if let Some(n) = max_steps {
                s.config.max_steps = n;
            }
            let rows = cmd_sweep(&s, family, &scales, None)?;
            emit(&sweep_csv(&rows), out.as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ProcessExit {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ProcessExit::from(ExitCode::Success as u8),
        Err(e) => {
            eprintln!("zerosum: {e}");
            ProcessExit::from(e.exit_code() as u8)
        }
    }
}
