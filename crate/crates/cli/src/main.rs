use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use strainlim_cli::{commands, load_config, CliError};

#[derive(Parser)]
#[command(name = "strainlim", version, about = "Strain-limiting viscoelastic dynamics: runs, studies and self-checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation; writes energy.csv, monitor.csv and state snapshots.
    Run { config: PathBuf },
    /// Run the study named by the `study` key; writes report.csv.
    Sweep { config: PathBuf },
    /// Run the built-in constitutive and lift property suite.
    Verify {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => match load_config(&config).and_then(|c| commands::run(&c).map(|s| (c, s))) {
            Ok((c, s)) => {
                println!(
                    "{} steps, {} snapshots in {}; final energy {}, max |a eps + b eps_t| {:.6}",
                    s.steps,
                    s.snapshot_files.len(),
                    c.out_dir.display(),
                    s.final_energy,
                    s.max_strain_expr
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Sweep { config } => match load_config(&config).and_then(|c| commands::sweep(&c)) {
            Ok(r) => {
                for (x, y) in r.axis_values.iter().zip(&r.values) {
                    println!("{} = {x:e}: {y:.6e}", r.axis.label());
                }
                if let Some(p) = r.fitted_order {
                    println!("fitted order {p:.3}");
                }
                if let Some(s) = r.spread {
                    println!("spread {s:.3e}");
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Verify { samples, seed } => ExitCode::from(commands::verify(samples, seed) as u8),
    }
}
