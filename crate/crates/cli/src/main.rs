use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nagi_cli::commands::{export_curves, inspect, test_champion, test_report_csv};
use nagi_cli::{evolve_run, ChampionRecord, CliError, Profile, RunConfig, RunOptions};
use nagi_core::TaskKind;

#[derive(Parser)]
#[command(name = "nagi", version, about = "Evolve plastic spiking controllers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a population on a task and write a run directory.
    Evolve {
        /// food-foraging, logic-gate or cart-pole
        task: TaskKind,
        #[arg(long, default_value = "paper")]
        profile: Profile,
        #[arg(long)]
        seed: Option<u64>,
        /// TOML file merged over the profile defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run directory (default: runs/<task>-<profile>-s<seed>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from the checkpoint in the run directory.
        #[arg(long)]
        resume: bool,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Replay a champion on the test conditions and print a CSV report.
    Test {
        champion: PathBuf,
        #[arg(long, default_value_t = 10)]
        sims: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a champion's topology as JSON and write a Graphviz file.
    Inspect { champion: PathBuf },
    /// Write per-metric min/mean/max curves from a run's stats.csv.
    ExportCurves { run_dir: PathBuf },
}

fn run(cli: Cli) -> nagi_cli::Result<()> {
    match cli.command {
        Command::Evolve { task, profile, seed, config, out, resume, quiet } => {
            let cfg = RunConfig::resolve(task, profile, config.as_deref(), seed)?;
            let dir = out.unwrap_or_else(|| {
                PathBuf::from("runs").join(format!("{task}-{profile}-s{}", cfg.evolution.master_seed))
            });
            let summary = evolve_run(&cfg, &dir, &RunOptions { resume, progress: !quiet })?;
            println!("{}", summary.dir.display());
            for (kind, rec) in &summary.champions {
                eprintln!(
                    "{:<12} gen {:>4}  fitness {:.3}  acc {:.3}  eos {:.3}",
                    kind.label(),
                    rec.generation,
                    rec.fitness,
                    rec.accuracy,
                    rec.eos_accuracy
                );
            }
        }
        Command::Test { champion, sims, seed } => {
            let rec = ChampionRecord::load(&champion)?;
            let evals = test_champion(&rec, sims, seed)?;
            print!("{}", test_report_csv(&rec, &evals));
        }
        Command::Inspect { champion } => {
            let (json, dot) = inspect(&champion)?;
            print!("{json}");
            eprintln!("wrote {}", dot.display());
        }
        Command::ExportCurves { run_dir } => {
            for p in export_curves(&run_dir)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CliError::exit_code(&e) as u8)
        }
    }
}
