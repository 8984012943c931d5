use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ravine_cli::experiment::{self, Command, Options};

#[derive(Parser)]
#[command(
    name = "ravine",
    version,
    about = "Run accelerated gradient experiments from a JSON config"
)]
struct Cli {
    /// Skip the step-size and damping guards.
    #[arg(long, global = true)]
    force: bool,
    /// Output directory (overrides the config's `output`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every solver, ODE and resolution entry.
    Run { config: PathBuf },
    /// Run the solvers side by side and add cross-run checks.
    Compare { config: PathBuf },
    /// Integrate the ODE entries and the resolution table.
    Ode { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, path) = match cli.command {
        Cmd::Run { config } => (Command::Run, config),
        Cmd::Compare { config } => (Command::Compare, config),
        Cmd::Ode { config } => (Command::Ode, config),
    };
    let opts = Options {
        force: cli.force,
        out: cli.out,
        jobs: cli.jobs,
    };
    let outcome = match experiment::execute(command, &path, &opts) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if command == Command::Compare {
        print!("{}", experiment::comparison_table(&outcome.report));
    }
    for v in &outcome.report.verdicts {
        let measured = v.measured.map_or_else(String::new, |m| format!(" measured={m:.6e}"));
        let threshold = v.threshold.map_or_else(String::new, |t| format!(" threshold={t:.6e}"));
        println!(
            "{} {} {}{measured}{threshold} ({})",
            v.status.tag(),
            v.run,
            v.check,
            v.detail
        );
    }
    for run in &outcome.report.runs {
        if let Some(err) = run_error(run) {
            eprintln!("error: {err}");
        }
    }
    println!("report: {}", outcome.out_dir.join(experiment::REPORT_JSON).display());
    ExitCode::from(outcome.exit_code() as u8)
}

fn run_error(run: &ravine_cli::report::RunReport) -> Option<&str> {
    use ravine_cli::report::{RunReport, RunStatus};
    match run {
        RunReport::Solver(s) if s.status == RunStatus::Error => s.error.as_deref(),
        RunReport::Ode(o) if o.status == RunStatus::Error => o.error.as_deref(),
        RunReport::Resolution(r) => r.error.as_deref(),
        _ => None,
    }
}
