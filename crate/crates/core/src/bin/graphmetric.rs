use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use graphmetric::experiment::{cmd_baseline, cmd_generate, cmd_gradcheck, cmd_train, ExperimentConfig};
use graphmetric::Result;

#[derive(Parser)]
#[command(name = "graphmetric", version, about = "Learned metrics for graph-based label propagation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (JSON).
    config: PathBuf,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds; overrides `seeds` from the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Write generated datasets as CSV with a JSON sidecar.
    Generate(Common),
    /// Score the untrained euclidean graph.
    Baseline(Common),
    /// Train the embedding and compare against the baseline.
    Train(Common),
    /// Check analytic gradients against finite differences.
    Gradcheck(Common),
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seeds) = &common.seeds {
        cfg.seeds = seeds.clone();
        cfg.validate()?;
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.out_dir());
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(c) => {
            let (cfg, out) = load(&c)?;
            for path in cmd_generate(&cfg, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Baseline(c) => {
            let (cfg, out) = load(&c)?;
            let report = cmd_baseline(&cfg, &out)?;
            for row in &report.rows {
                println!("seed {:>4}  baseline {:.4}  abstain {}", row.seed, row.baseline_accuracy, row.abstain_count);
            }
            println!("median baseline accuracy {:.4}", report.aggregate.baseline_median);
        }
        Command::Train(c) => {
            let (cfg, out) = load(&c)?;
            let report = cmd_train(&cfg, &out)?;
            for row in &report.rows {
                println!(
                    "seed {:>4}  baseline {:.4}  learned {:.4}  best_epoch {}",
                    row.seed,
                    row.baseline_accuracy,
                    row.learned_accuracy.unwrap_or(f64::NAN),
                    row.best_epoch.unwrap_or(0)
                );
            }
            if let Some(m) = report.aggregate.improvement_median {
                println!("median improvement {:+.4}", m);
            }
        }
        Command::Gradcheck(c) => {
            let (cfg, out) = load(&c)?;
            let rows = match cmd_gradcheck(&cfg, &out) {
                Ok(rows) => rows,
                Err(e) => {
                    let path = out.join("gradcheck.json");
                    if let Ok(text) = std::fs::read_to_string(&path) {
                        eprintln!("{text}");
                    }
                    return Err(e);
                }
            };
            println!("seed  block     coords  max_rel_err  result");
            for row in &rows {
                for b in &row.report.blocks {
                    println!(
                        "{:>4}  {:<8}  {:>6}  {:>11.3e}  {}",
                        row.seed,
                        b.block,
                        b.coords,
                        b.max_rel_err,
                        if b.pass { "PASS" } else { "FAIL" }
                    );
                }
                for s in &row.report.sweep {
                    println!("{:>4}  h = {:.0e}  max_abs_err {:.3e}", row.seed, s.h, s.max_abs_err);
                }
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
            if e.is_numerical() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
