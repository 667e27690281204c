use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use relaysel::Scheme;
use relaysel_cli::{cmd_complexity, cmd_plot, cmd_run, CliError, Overrides};

/// Joint transmit diversity and relay selection simulator.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the BER experiment described by a config file.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated scheme labels, e.g. no_tds,iterative_tds_rs.
        #[arg(long, value_delimiter = ',')]
        schemes: Option<Vec<Scheme>>,
    },
    /// Print complex-multiplication counts per time instant.
    Complexity { config: PathBuf },
    /// Draw an SVG figure from ber_vs_snr.csv or ber_vs_symbol.csv.
    Plot { csv: PathBuf, out: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            schemes,
        } => cmd_run(&config, &out, &Overrides { seed, schemes }).map(|paths| {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }),
        Command::Complexity { config } => cmd_complexity(&config).map(|table| print!("{table}")),
        Command::Plot { csv, out } => {
            cmd_plot(&csv, &out).map(|()| println!("wrote {}", out.display()))
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
