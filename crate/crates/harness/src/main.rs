use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use pbit_forge::commands::{self, GenerateSpec, Overrides};
use pbit_forge::config::ModeKind;
use pbit_forge::HarnessError;

#[derive(Parser)]
#[command(
    name = "pbit-forge",
    version,
    about = "Memristor/SMTJ Ising machine experiments"
)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [env: PBIT_FORGE_OUT, default: pbit-forge-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config trial count.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Overrides the sampler mode.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeKind>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Model statistics and the conductance map.
    Map,
    /// Run an annealing campaign.
    Run,
    /// Certify the optimum by exhaustive search.
    Oracle,
    /// Run a campaign at every point of a parameter grid.
    Sweep {
        /// `dotted.key=v1,v2,...`; repeat for more axes. Defaults to the config's [sweep] table.
        #[arg(long)]
        grid: Vec<String>,
    },
    /// Fresh run, then the same arrays after drift in ideal mode.
    DriftRerun,
    /// Write a seeded benchmark graph.
    Generate {
        #[arg(value_enum)]
        problem: GenProblem,
        /// Destination graph file.
        path: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenProblem {
    Maxcut,
    Coloring,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn config_path(cli: &Cli) -> Result<PathBuf, HarnessError> {
    cli.config
        .clone()
        .ok_or_else(|| HarnessError::Validation("--config is required".into()))
}

fn run(cli: Cli) -> Result<u8, HarnessError> {
    let overrides = Overrides {
        seed: cli.seed,
        trials: cli.trials,
        mode: cli.mode,
    };
    let out = commands::output_dir(cli.out.clone());
    match &cli.command {
        Command::Generate { problem, path } => {
            let seed = cli.seed.unwrap_or(1);
            let spec = match problem {
                GenProblem::Maxcut => GenerateSpec::maxcut_benchmark(seed),
                GenProblem::Coloring => GenerateSpec::coloring_benchmark(seed),
            };
            let g = commands::cmd_generate(&spec, path)?;
            println!(
                "wrote {} ({} vertices, {} edges)",
                path.display(),
                g.n_vertices(),
                g.edges().len()
            );
            Ok(0)
        }
        command => {
            let loaded = commands::load(&config_path(&cli)?, &overrides)?;
            match command {
                Command::Map => {
                    let r = commands::cmd_map(&loaded, &out)?;
                    println!(
                        "n={} nonzeros={} sparsity={:.4} map={}x{}",
                        r.n, r.nonzeros, r.sparsity, r.rows, r.columns
                    );
                    Ok(0)
                }
                Command::Oracle => {
                    let start = Instant::now();
                    let o = commands::cmd_oracle(&loaded, &out)?;
                    println!("min_energy={}", o.energy);
                    if let Some(w) = o.cut_weight {
                        println!("cut_weight={w}");
                    }
                    if let Some(n) = o.ground_state_count {
                        println!("ground_states={n}");
                    }
                    if let Some(c) = &o.coloring {
                        println!("feasible coloring={c:?}");
                    }
                    println!("elapsed={:.2?}", start.elapsed());
                    Ok(0)
                }
                Command::Run => {
                    let s = commands::cmd_run(&loaded, &out)?;
                    println!(
                        "{}/{} trials reached the optimum {} (median updates {:?})",
                        s.successes, s.trials, s.optimum.energy, s.median_updates_to_optimum
                    );
                    Ok(if s.successes == 0 { 3 } else { 0 })
                }
                Command::Sweep { grid } => {
                    let grid = if grid.is_empty() {
                        None
                    } else {
                        Some(commands::parse_grid(grid)?)
                    };
                    let r = commands::cmd_sweep(&loaded, grid, &out)?;
                    for p in &r.points {
                        match (&p.success_rate, &p.error) {
                            (Some(rate), _) => println!("{:?} success_rate={rate:.3}", p.overrides),
                            (None, Some(e)) => println!("{:?} error: {e}", p.overrides),
                            _ => {}
                        }
                    }
                    if let Some(t) = r.monotonicity {
                        println!("trend={t:?}");
                    }
                    Ok(if r.points.iter().all(|p| p.successes.unwrap_or(0) == 0) {
                        3
                    } else {
                        0
                    })
                }
                Command::DriftRerun => {
                    let r = commands::cmd_drift_rerun(&loaded, &out)?;
                    println!(
                        "fresh {}/{} aged {}/{} delta={:+.3}",
                        r.fresh.successes,
                        r.fresh.trials,
                        r.aged.successes,
                        r.aged.trials,
                        r.success_rate_delta
                    );
                    Ok(if r.aged.successes == 0 { 3 } else { 0 })
                }
                Command::Generate { .. } => unreachable!(),
            }
        }
    }
}
