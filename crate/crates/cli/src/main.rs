mod config;
mod error;
mod output;
mod runner;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twostage_core::scenarios::{Case, ExperimentId};

use config::{Overrides, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "twostage",
    version,
    about = "Online two-stage allocation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the replications of one configuration and write CSV summaries.
    Run(Flags),
    /// Print the exp1 relative-regret grid. With --config, first runs cases
    /// a-d into `<out>/case_<x>`; otherwise reads summaries already in --out.
    Table1(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            reps: self.reps,
        }
    }

    fn load(&self) -> Result<RunConfig, CliError> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| CliError::Config("--config is required".into()))?;
        RunConfig::load(path, &self.overrides())
    }
}

fn run(cfg: &RunConfig, quiet: bool) -> Result<(), CliError> {
    let out = runner::execute(cfg, !quiet)?;
    let files = output::write_all(cfg.out_dir()?, &out)?;
    if !quiet {
        eprintln!(
            "wrote {} files to {}",
            files.len(),
            cfg.out_dir()?.display()
        );
    }
    Ok(())
}

fn table1(flags: &Flags) -> Result<(), CliError> {
    let dir = match &flags.config {
        Some(_) => {
            let base = flags.load()?;
            if base.scenario.experiment != ExperimentId::Exp1 {
                return Err(CliError::Config("table1 runs exp1 scenarios".into()));
            }
            let root = base.out_dir()?.to_path_buf();
            for case in Case::all() {
                let mut cfg = base.clone();
                cfg.scenario.case = case;
                cfg.out = Some(root.join(format!("case_{}", case.label())));
                run(&cfg, flags.quiet)?;
            }
            root
        }
        None => flags
            .out
            .clone()
            .ok_or_else(|| CliError::Config("pass --out or --config".into()))?,
    };
    let means = table::collect(&table::summary_files(&dir)?)?;
    print!("{}", table::render(&means)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Run(flags) => flags.load().and_then(|cfg| run(&cfg, flags.quiet)),
        Command::Table1(flags) => table1(flags),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
