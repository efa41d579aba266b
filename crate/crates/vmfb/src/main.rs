use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vmfb::config::{ExperimentConfig, PolicySpec};
use vmfb::error::CliError;
use vmfb::fixtures::BUNDLED;
use vmfb::runner::{self, Overrides, EXIT_ERROR, EXIT_VALIDATION};

#[derive(Parser)]
#[command(name = "vmfb", version, about = "Run variable-metric forward-backward experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write a CSV trace and a summary.
    Run(RunArgs),
    /// Print the hypothesis report without running.
    Validate(CommonArgs),
    /// List the bundled configurations.
    ListFixtures,
}

#[derive(Args)]
struct CommonArgs {
    /// Config file, or the name of a bundled fixture.
    #[arg(long)]
    config: String,
    /// Refuse to run when a hypothesis fails.
    #[arg(long, conflicts_with = "warn")]
    strict: bool,
    /// Record failed hypotheses and run anyway.
    #[arg(long)]
    warn: bool,
    /// Seed for randomly generated problem data.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the iteration budget of the config.
    #[arg(long)]
    max_iter_override: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Directory receiving the trace and the summary.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            policy: if self.strict {
                Some(PolicySpec::Strict)
            } else if self.warn {
                Some(PolicySpec::Warn)
            } else {
                None
            },
            seed: self.seed,
            max_iter: self.max_iter_override,
        }
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        CliError::Validation(_) => ExitCode::from(EXIT_VALIDATION as u8),
        _ => ExitCode::from(EXIT_ERROR as u8),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListFixtures => {
            for (name, text) in BUNDLED {
                let desc = ExperimentConfig::parse(text)
                    .ok()
                    .and_then(|c| c.description)
                    .unwrap_or_default();
                println!("{name:<36} {desc}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate(args) => {
            let loaded = match runner::load_config(&args.config, &args.overrides()) {
                Ok(l) => l,
                Err(e) => return fail(&e),
            };
            match runner::validate_config(&loaded) {
                Ok((lines, passed)) => {
                    for l in lines {
                        println!("{l}");
                    }
                    println!(
                        "{}",
                        if passed {
                            "all hypotheses hold"
                        } else {
                            "some hypotheses fail"
                        }
                    );
                    if passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_VALIDATION as u8)
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::Run(args) => {
            let loaded = match runner::load_config(&args.common.config, &args.common.overrides()) {
                Ok(l) => l,
                Err(e) => return fail(&e),
            };
            match runner::run_experiment(&loaded, &args.out_dir) {
                Ok(report) => {
                    let s = &report.summary;
                    println!(
                        "{}: {} after {} iterations, residual {:e}",
                        s.name.as_deref().unwrap_or(&args.common.config),
                        s.termination,
                        s.iterations,
                        s.final_residual
                    );
                    if !s.validation_passed {
                        eprintln!("warning: some hypotheses fail (see {})", report.summary_path.display());
                    }
                    println!("trace: {}", report.trace_path.display());
                    println!("summary: {}", report.summary_path.display());
                    ExitCode::from(report.exit_code as u8)
                }
                Err(e) => fail(&e),
            }
        }
    }
}
