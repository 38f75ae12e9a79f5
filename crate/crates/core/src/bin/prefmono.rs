use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use prefmono::report::{self, Experiment, Format, RunOptions};

// a closed pipe (`prefmono ... | head`) is not an error worth a panic
macro_rules! out {
    ($($arg:tt)*) => {
        let _ = writeln!(std::io::stdout(), $($arg)*);
    };
}

#[derive(Parser)]
#[command(version, about = "Monotonicity audits for preference-learning losses")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Report directory; falls back to the config, then `reports`.
    #[arg(long, global = true, env = report::OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every audit in a config and write the reports.
    Audit { config: PathBuf },
    /// Run the gradient-step trace of a config.
    Figure1 { config: PathBuf },
    /// Check the inverse-difference property on random dominant matrices.
    CheckLemma {
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

fn run(cli: Cli) -> prefmono::Result<ExitCode> {
    let options = RunOptions {
        out_dir: cli.out_dir,
        format: cli.format,
        seed: cli.seed,
    };
    match cli.command {
        Command::Audit { config } => {
            let outcome = report::run_config(&config, &options)?;
            let violated = outcome.run.records.iter().filter(|r| r.verdict == "violated").count();
            out!("{} records, {} violated", outcome.run.records.len(), violated);
            for (id, message) in &outcome.run.errors {
                eprintln!("error in audit `{id}`: {message}");
            }
            for file in &outcome.files {
                out!("wrote {}", file.display());
            }
            Ok(ExitCode::from(outcome.exit_code() as u8))
        }
        Command::Figure1 { config } => {
            let (trace, files) = report::run_figure1_config(&config, &options)?;
            let negative = trace.iter().filter(|r| r.chosen_delta < 0.0).count();
            out!("{} steps, {} with a negative chosen delta", trace.len(), negative);
            for file in &files {
                out!("wrote {}", file.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckLemma { dim, trials } => {
            let summary = report::check_lemma(dim, trials, cli.seed.unwrap_or(0))?;
            out!("{}", serde_json::to_string_pretty(&summary).expect("plain summary"));
            Ok(if summary.passed == summary.trials {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Validate { config } => {
            let exp = Experiment::load(&config)?;
            out!(
                "{}: ok ({} audits, {} comparisons, {} parameters)",
                config.display(),
                exp.config.audit.len(),
                exp.problem.dataset().len(),
                exp.problem.dim()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
