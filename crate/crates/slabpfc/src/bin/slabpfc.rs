use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slabpfc::config::{parse_config_for, Model, Overrides};
use slabpfc::snapshot::read_snapshot;
use slabpfc::{bench, run, RunError};

/// Slab-decomposed pseudo-spectral phase-field-crystal simulations.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conserved phase-field-crystal dynamics.
    Pfc {
        #[command(subcommand)]
        action: RunAction,
    },
    /// Phase-field crystal coupled to a coarse-grained velocity field.
    Hydro {
        #[command(subcommand)]
        action: RunAction,
    },
    /// Time the PFC step loop for several worker counts.
    Bench(RunArgs),
    /// Inspect snapshot files.
    Snapshot {
        #[command(subcommand)]
        action: SnapshotAction,
    },
}

#[derive(Subcommand)]
enum RunAction {
    Run(RunArgs),
}

#[derive(Subcommand)]
enum SnapshotAction {
    /// Print the header and value statistics of a snapshot.
    Dump { path: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the worker count.
    #[arg(long, value_name = "G")]
    workers: Option<usize>,
    /// Override the output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override the number of time steps.
    #[arg(long, value_name = "N")]
    steps: Option<u64>,
    /// Override the initial-condition seed.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
}

fn load(args: &RunArgs, model: Option<Model>) -> Result<slabpfc::RunConfig, RunError> {
    let cfg = parse_config_for(&args.config, model)?;
    let overrides = Overrides {
        model,
        workers: args.workers,
        out_dir: args.out.clone(),
        steps: args.steps,
        seed: args.seed,
    };
    Ok(cfg.with_overrides(&overrides)?)
}

fn execute(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Pfc { action: RunAction::Run(args) } => {
            let summary = run::run_pfc(&load(&args, Some(Model::Pfc))?)?;
            for w in &summary.warnings {
                log::warn!("{w}");
            }
            if let Some(last) = summary.rows.last() {
                println!(
                    "pfc: {} steps, F = {:.12e}, mean psi = {:.6}, output in {}",
                    last.step,
                    last.free_energy,
                    last.mean_psi,
                    summary.out_dir.display()
                );
            }
        }
        Command::Hydro { action: RunAction::Run(args) } => {
            let summary = run::run_hydro(&load(&args, Some(Model::Hydro))?)?;
            for w in &summary.warnings {
                log::warn!("{w}");
            }
            if let Some(last) = summary.rows.last() {
                println!(
                    "hydro: {} steps, F = {:.12e}, max|v| = [{:.3e}, {:.3e}, {:.3e}], output in {}",
                    last.step,
                    last.free_energy,
                    last.max_abs_v1,
                    last.max_abs_v2,
                    last.max_abs_v3,
                    summary.out_dir.display()
                );
            }
        }
        Command::Bench(args) => {
            let report = bench::bench(&load(&args, None)?)?;
            for r in &report.rows {
                let speedup = r.speedup_vs_g1.map_or_else(|| "-".to_string(), |s| format!("{s:.2}"));
                println!("G={} {}: {:.4e} s/step median, speedup {speedup}", r.workers, r.grid, r.seconds_per_step_median);
            }
            println!("wrote {} and {}", report.csv.display(), report.details_csv.display());
        }
        Command::Snapshot { action: SnapshotAction::Dump { path } } => {
            let snap = read_snapshot(&path)?;
            let stats = snap.stats();
            println!("file: {}", path.display());
            println!("dims: {} x {} x {}", snap.dims[0], snap.dims[1], snap.dims[2]);
            println!("step: {}", snap.step);
            println!("time: {}", snap.time);
            println!("min: {:.17e}", stats.min);
            println!("max: {:.17e}", stats.max);
            println!("mean: {:.17e}", stats.mean);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
