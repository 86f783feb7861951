use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use mvstab_core::cli;

/// Particle simulation and stability certificates for McKean–Vlasov SDEs
/// with discrete-observation feedback control.
///
/// Worker threads: `--threads` wins over the MVSTAB_THREADS environment
/// variable, which wins over the rayon default. Outputs never depend on it.
#[derive(Debug, Parser)]
#[command(name = "mvstab", version)]
struct Args {
    /// Worker threads (results are identical for any value).
    #[arg(long, global = true, env = "MVSTAB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the particle system; writes trajectory CSV and run manifest.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides output.directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the stability conditions over observation gaps.
    Conditions {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated gaps, e.g. 1e-3,0.01,0.02.
        #[arg(long)]
        deltas: String,
    },
    /// Propagation-of-chaos scaling experiment.
    Chaos {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated ensemble sizes (at least 4, ascending).
        #[arg(long, default_value = "250,500,1000,2000,4000")]
        sizes: String,
        #[arg(long, default_value_t = 20)]
        reps: usize,
    },
    /// Self-contained reference example with verdict block.
    Example {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(command: &Command, report: &mut dyn Write) -> mvstab_core::Result<i32> {
    match command {
        Command::Simulate { config, out } => cli::cmd_simulate(config, out.as_deref(), report),
        Command::Conditions {
            config,
            out,
            deltas,
        } => {
            let deltas = cli::parse_list::<f64>(deltas, "delta")?;
            cli::cmd_conditions(config, out.as_deref(), &deltas, report)
        }
        Command::Chaos {
            config,
            out,
            sizes,
            reps,
        } => {
            let sizes = cli::parse_list::<usize>(sizes, "size")?;
            cli::cmd_chaos(config, out.as_deref(), &sizes, *reps, report)
        }
        Command::Example { out } => cli::cmd_example(out.as_deref(), report),
    }
}

fn main() -> anyhow::Result<ExitCode> {
    let args = Args::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("building worker pool")?;

    let mut report = std::io::stdout();
    let code = match pool.install(|| dispatch(&args.command, &mut report)) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            cli::exit_code(&err)
        }
    };
    report.flush()?;
    Ok(ExitCode::from(code as u8))
}
