use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vaxalloc::pipeline::{
    cmd_census, cmd_fair_share, cmd_generate, cmd_plot, cmd_run, PipelineError, RunConfig,
};

#[derive(Parser)]
#[command(name = "vaxalloc", version, about = "Vaccine priority and reserve allocation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic population and risk survey.
    Generate(RunArgs),
    /// Run every stage and write the output bundle.
    Run(RunArgs),
    /// Render SVG charts from a bundle.
    Plot {
        /// Bundle directory written by `run`.
        #[arg(long = "out", value_name = "DIR")]
        out: PathBuf,
    },
    /// Write the weighted tier census.
    Census(RunArgs),
    /// Write state fair-share indices.
    FairShare(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// `r=FLOAT,eligibility=NAME`; replaces the configured list.
    #[arg(long = "policy", value_name = "SPEC")]
    policies: Vec<String>,
    #[arg(long, value_name = "SPEC")]
    supply_grid: Option<String>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, PipelineError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            let abs = std::env::current_dir().map(|d| d.join(o)).unwrap_or_else(|_| o.clone());
            cfg.output_dir = Some(abs.display().to_string());
        }
        if !self.policies.is_empty() {
            cfg.policies = self.policies.clone();
        }
        if let Some(g) = &self.supply_grid {
            cfg.supply_grid = g.clone();
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let report = |m: vaxalloc::pipeline::Manifest, dir: PathBuf| {
        for d in &m.diagnostics {
            eprintln!("note: {d}");
        }
        println!("wrote {} file(s) to {}", m.files.len() + 1, dir.display());
    };
    match cli.command {
        Command::Plot { out } => {
            for p in cmd_plot(&out)? {
                println!("{}", p.display());
            }
        }
        Command::Generate(a) => {
            let cfg = a.config()?;
            report(cmd_generate(&cfg)?, cfg.output_dir());
        }
        Command::Run(a) => {
            let cfg = a.config()?;
            report(cmd_run(&cfg)?, cfg.output_dir());
        }
        Command::Census(a) => {
            let cfg = a.config()?;
            report(cmd_census(&cfg)?, cfg.output_dir());
        }
        Command::FairShare(a) => {
            let cfg = a.config()?;
            report(cmd_fair_share(&cfg)?, cfg.output_dir());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
