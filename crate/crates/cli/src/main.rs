//! Command line interface: `ingest`, `run`, `reference`, `report`.
//!
//! Every subcommand takes `--config <path>` (TOML or JSON). Exit codes:
//! 0 on success, 2 on configuration errors, 3 on numerical failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sparsefront::harness::{
    build_reference_from_csvs, ingest, report, run_pipeline, ExperimentConfig, IngestConfig,
    ReferenceConfig, ReportConfig,
};
use sparsefront::model::ProblemInstance;
use sparsefront::{Error, Result};

#[derive(Parser)]
#[command(
    name = "sparsefront",
    about = "Pareto front reconstruction for cardinality-constrained portfolio problems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML or JSON, chosen by extension).
    #[arg(long)]
    config: PathBuf,
    /// Override the output location of the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a problem instance from price and ESG CSV files.
    Ingest(Common),
    /// Run one solver pipeline over its seeds and persist fronts.
    Run {
        #[command(flatten)]
        common: Common,
        /// Replace the configured seed list with a single seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Merge persisted fronts into a reference front.
    Reference(Common),
    /// Score runs against a reference and emit metric/profile CSVs.
    Report(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(common) => {
            let mut cfg = IngestConfig::load(&common.config)?;
            if let Some(out) = common.out {
                cfg.out = out;
            }
            let instance = ingest(&cfg)?;
            println!(
                "ingested '{}': {} assets, cardinality bound {}, written to {}",
                instance.name,
                instance.n,
                instance.s,
                cfg.out.display()
            );
            Ok(())
        }
        Command::Run { common, seed } => {
            let mut cfg = ExperimentConfig::load(&common.config)?;
            if let Some(out) = common.out {
                cfg.out_dir = out;
            }
            if let Some(seed) = seed {
                cfg.seeds = vec![seed];
            }
            let records = run_pipeline(&cfg)?;
            for record in &records {
                println!(
                    "{} seed {}: {:.2}s, front {}{}",
                    record.pipeline,
                    record.seed,
                    record.wall_seconds,
                    record.front_csv.display(),
                    if record.selected { " (best)" } else { "" }
                );
            }
            Ok(())
        }
        Command::Reference(common) => {
            let mut cfg = ReferenceConfig::load(&common.config)?;
            if let Some(out) = common.out {
                cfg.out = out;
            }
            let reference = build_reference_from_csvs(&cfg)?;
            let text = std::fs::read_to_string(&cfg.instance)
                .map_err(|e| Error::Config(format!("cannot read instance: {e}")))?;
            let instance = ProblemInstance::from_json(&text)?;
            sparsefront::harness::write_reference_csv(&cfg.out, &reference, &instance)?;
            println!(
                "reference front: {} points over {} supports, written to {}",
                reference.points.len(),
                reference.supports().len(),
                cfg.out.display()
            );
            Ok(())
        }
        Command::Report(common) => {
            let mut cfg = ReportConfig::load(&common.config)?;
            if let Some(out) = common.out {
                cfg.out_dir = out;
            }
            let rows = report(&cfg)?;
            for row in &rows {
                println!(
                    "{} on {}: purity {:.3}, gamma {:.4}, hv {:.4}, recall {:.3}",
                    row.solver, row.problem, row.purity, row.gamma_spread, row.hypervolume,
                    row.recall
                );
            }
            println!("metric and profile CSVs written to {}", cfg.out_dir.display());
            Ok(())
        }
    }
}
