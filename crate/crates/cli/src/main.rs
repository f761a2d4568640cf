use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lqn_cli::{
    cmd_analyze, cmd_classify, cmd_generate, cmd_oracle, render_analyze, render_oracle, render_verdict, to_json,
    verify_files, CliError, CliResult, Exit, InstanceFile,
};
use lqn_core::generate::GeneratorForm;
use lqn_core::nilpotency::Budget;

#[derive(Parser)]
#[command(name = "lqn", version, about = "Decide and certify local nilpotency of elementary operators")]
struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Grid-point budget for exact searches.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Random trials for sampling searches.
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Length, coefficient spaces, local dimensions and Gram matrix.
    Analyze { instance: PathBuf },
    /// Classify and write a certificate.
    Classify {
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a seeded instance of a structured family.
    Generate {
        #[arg(long)]
        form: GeneratorForm,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a certificate against its instance.
    Verify { instance: PathBuf, certificate: PathBuf },
    /// Search for a non-nilpotent phi(x) by random sampling only.
    Oracle { instance: PathBuf },
}

fn write_out(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::new(Exit::BadInput, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult<Exit> {
    let mut budget = Budget::default();
    if let Some(b) = cli.budget {
        budget.grid_points = b;
    }
    if let Some(t) = cli.trials {
        budget.trials = t;
    }
    match cli.command {
        Command::Analyze { instance } => {
            let inst = InstanceFile::load(&instance)?;
            let report = cmd_analyze(&inst, cli.seed, budget.trials)?;
            print!("{}", if cli.json { to_json(&report) } else { render_analyze(&report) });
            Ok(Exit::Success)
        }
        Command::Classify { instance, out } => {
            let inst = InstanceFile::load(&instance)?;
            let (cert, exit) = cmd_classify(&inst, &budget, cli.seed)?;
            let json = to_json(&cert);
            if let Some(p) = &out {
                write_out(Some(p), &json)?;
            }
            if cli.json {
                print!("{json}");
            } else {
                print!("{}", render_verdict(&cert.verdict));
            }
            Ok(exit)
        }
        Command::Generate { form, n, dim, out } => {
            let inst = cmd_generate(form, n, dim, cli.seed)?;
            write_out(out.as_deref(), &to_json(&inst))?;
            Ok(Exit::Success)
        }
        Command::Verify { instance, certificate } => {
            verify_files(&instance, &certificate)?;
            println!("certificate verified");
            Ok(Exit::Success)
        }
        Command::Oracle { instance } => {
            let inst = InstanceFile::load(&instance)?;
            let trials = cli.trials.unwrap_or(500);
            let (report, exit) = cmd_oracle(&inst, trials, cli.seed)?;
            print!("{}", if cli.json { to_json(&report) } else { render_oracle(&report) });
            Ok(exit)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::BadInput.code() } else { 0 });
        }
    };
    match run(cli) {
        Ok(exit) => ExitCode::from(exit.code()),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit.code())
        }
    }
}
