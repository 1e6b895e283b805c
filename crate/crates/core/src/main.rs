use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use groupoid_weyl::geometry::ExampleName;
use groupoid_weyl::harness::{catalog, crosscheck, run::plot_records, run_experiment, ExperimentConfig};

/// Strict Weyl quantization experiments on Lie groupoids.
#[derive(Parser)]
#[command(name = "gwq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the shipped examples and their observables.
    ListExamples,
    /// Run the defect ladders of a configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare pair-groupoid and translation-groupoid norms on matched grids.
    Crosscheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render SVG plots from a records CSV.
    Plot {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn list_examples() {
    for name in ExampleName::SHIPPED.iter().chain([ExampleName::TransfLineTrivial].iter()) {
        println!("{name}: {}", name.description());
        for entry in catalog(*name) {
            println!("    {:<8} {}", entry.id, entry.description);
        }
    }
}

fn run(command: Command) -> groupoid_weyl::Result<()> {
    match command {
        Command::ListExamples => list_examples(),
        Command::Run { config, out } => {
            let config = ExperimentConfig::load(&config)?;
            let record = run_experiment(&config, Some(&out))?;
            for s in &record.summaries {
                let order = |f: &Option<groupoid_weyl::harness::run::FitSummary>| match f {
                    None => "n/a".to_string(),
                    Some(fit) => fit.order.map_or("exact zero".into(), |o| format!("{o:.3}")),
                };
                println!(
                    "{} ({}, {}): Dirac order {}, von Neumann order {}, max sa defect {:.2e}",
                    config.example,
                    s.f_id,
                    s.g_id,
                    order(&s.dirac_fit),
                    order(&s.vn_fit),
                    s.max_sa_defect
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Crosscheck { config } => {
            let config = ExperimentConfig::load(&config)?;
            let rows = crosscheck(&config)?;
            println!("f_id,hbar,pair_norm,transformation_norm,relative_difference");
            for r in &rows {
                println!("{},{},{:e},{:e},{:e}", r.f_id, r.hbar, r.pair_norm, r.transformation_norm, r.relative_difference);
            }
        }
        Command::Plot { records, out } => {
            for path in plot_records(&records, &out)? {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
