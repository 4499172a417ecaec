use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phase_oracle::hilbert::N_MAX_DEFAULT;
use phase_oracle::report::{emit_report, Format};
use phase_oracle::scenario::{output_target, run_scenario, RunOptions, Scenario};

#[derive(Parser)]
#[command(
    name = "phase-oracle",
    version,
    about = "Phase-decorated quantum oracle experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and write its report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Master seed; overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Largest register width accepted.
        #[arg(long, default_value_t = N_MAX_DEFAULT)]
        n_max: u32,
        /// Print each final state as a JSON line on stderr.
        #[arg(long)]
        dump_state: bool,
        /// Also simulate N projector-measurement shots per run (JSON only).
        #[arg(long)]
        shots: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            seed,
            trials,
            out,
            format,
            n_max,
            dump_state,
            shots,
        } => {
            let opts = RunOptions {
                seed,
                trials,
                out,
                format,
                n_max,
                dump_state,
                shots,
            };
            let result = Scenario::load(&scenario).and_then(|sc| {
                let results = run_scenario(&sc, &opts)?;
                for (trial, state) in &results.state_dumps {
                    let line = serde_json::json!({ "trial": trial, "state": state });
                    eprintln!("{line}");
                }
                let target = output_target(&sc, &opts);
                emit_report(&results, target.format, target.path.as_deref())
            });
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
