use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use icn_agents::runner::{self, RunOptions};
use icn_core::scenario::{load_scenario, Scenario, ScenarioError};

const EXIT_INVALID: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "icn", version, about = "Agent-based industrial control network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and print the report as JSON.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Simulated seconds to run.
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        no_noise: bool,
        /// Serve the operator API on this port; the run then follows the wall clock.
        #[arg(long)]
        gateway_port: Option<u16>,
    },
    /// Demo commands.
    Demo {
        #[command(subcommand)]
        what: Demo,
    },
    /// Check a scenario file and list every problem found.
    Validate { file: PathBuf },
}

#[derive(Subcommand)]
enum Demo {
    /// Write the trend, dependency and synchronization CSVs.
    Figures {
        #[arg(long)]
        out: PathBuf,
        /// Scenario to use instead of the bundled default.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

fn load(path: &PathBuf) -> Result<Scenario, ExitCode> {
    load_scenario(path).map_err(|e| {
        report_scenario_error(path, &e);
        ExitCode::from(EXIT_INVALID)
    })
}

fn report_scenario_error(path: &PathBuf, e: &ScenarioError) {
    match e {
        ScenarioError::Invalid(violations) => {
            eprintln!("{}: {} problem(s)", path.display(), violations.len());
            for v in violations {
                eprintln!("  {}: {v}", v.name());
            }
        }
        other => eprintln!("{}: {other}", path.display()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { file } => load(&file).map(|sc| {
            println!(
                "{}: ok ({} processes, {} links)",
                file.display(),
                sc.processes.len(),
                sc.links.len()
            );
        }),
        Command::Run {
            scenario,
            duration,
            seed,
            no_noise,
            gateway_port,
        } => load(&scenario).and_then(|mut sc| {
            if !(duration.is_finite() && duration >= 0.0) {
                eprintln!("--duration must be a non-negative number of seconds");
                return Err(ExitCode::from(EXIT_INVALID));
            }
            if let Some(seed) = seed {
                sc.reseed(seed);
            }
            if no_noise {
                sc.noise = false;
            }
            let opts = RunOptions {
                duration: Duration::from_secs_f64(duration),
                gateway_port,
            };
            match runner::run(&sc, &opts) {
                Ok(report) => {
                    print!("{}", report.to_json());
                    Ok(())
                }
                Err(e) => {
                    eprintln!("run failed: {e}");
                    Err(ExitCode::from(EXIT_RUNTIME))
                }
            }
        }),
        Command::Demo {
            what: Demo::Figures { out, scenario },
        } => {
            let sc = match scenario {
                Some(p) => load(&p),
                None => Ok(Scenario::default_scenario()),
            };
            sc.and_then(|sc| match runner::demo_figures(&sc, &out) {
                Ok(files) => {
                    for f in files {
                        println!("{}", f.display());
                    }
                    Ok(())
                }
                Err(e) => {
                    eprintln!("demo failed: {e}");
                    Err(ExitCode::from(EXIT_RUNTIME))
                }
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
