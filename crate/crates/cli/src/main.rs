use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semflow_cli::{parse_config, run_bench, run_commsim, run_solve, run_validate_report, Overrides};

#[derive(Parser)]
#[command(name = "semflow", version, about = "Spectral-element incompressible flow solver")]
struct Cli {
    /// Worker threads for element-parallel kernels (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for CSV and checkpoint output.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Seed for randomized inputs; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step a flow case.
    Solve { config: PathBuf },
    /// Run the built-in correctness checks.
    Validate,
    /// Kernel throughput sweep.
    Bench { config: PathBuf },
    /// Communication-volume model of a partitioned mesh.
    Commsim { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be >= 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .expect("global pool is configured once");
    }
    let opts = Overrides {
        workers: cli.workers,
        output_dir: cli.output_dir,
        seed: cli.seed,
    };
    match run(cli.command, &opts) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command, opts: &Overrides) -> anyhow::Result<ExitCode> {
    match command {
        Command::Solve { config } => {
            let mut cfg = parse_config(&config)?;
            if let Some(s) = opts.seed {
                cfg.seed = s;
            }
            let s = run_solve(&cfg, opts)?;
            println!("case: {}", cfg.case);
            println!("steps: {}", s.steps);
            println!("final divergence: {:.3e}", s.final_divergence);
            if let Some(err) = s.reference_error {
                println!("max error vs reference: {err:.3e}");
            }
            println!("total seconds: {:.3}", s.seconds);
            if let Some(t) = &s.telemetry {
                println!("telemetry: {}", t.display());
            }
            println!("checkpoint: {}", s.checkpoint.display());
        }
        Command::Validate => {
            let (_, table, ok) = run_validate_report();
            print!("{table}");
            if !ok {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Bench { config } => {
            let (rows, path) = run_bench(&config, opts)?;
            for r in &rows {
                match r.min_s {
                    Some(min) => println!(
                        "{:<10} E={:<6} N={:<3} workers={:<3} min {:.3e} s  {:.3e} dof/s",
                        r.kernel,
                        r.num_elements,
                        r.order,
                        r.workers,
                        min,
                        r.dof_per_s.unwrap_or(0.0)
                    ),
                    None => println!("{:<10} E={:<6} N={:<3} {}", r.kernel, r.num_elements, r.order, r.status),
                }
            }
            println!("results: {}", path.display());
        }
        Command::Commsim { config } => {
            let (cut, reports, path) = run_commsim(&config, opts)?;
            println!("edge cuts: {}  volume: {}  messages: {}", cut.edge_cuts, cut.volume, cut.messages);
            for r in &reports {
                println!(
                    "n={:<4} intra {:>6} msgs {:>9} nodes   inter {:>6} msgs {:>9} nodes",
                    r.n, r.intra_msgs, r.intra_volume, r.inter_msgs, r.inter_volume
                );
            }
            println!("results: {}", path.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}
