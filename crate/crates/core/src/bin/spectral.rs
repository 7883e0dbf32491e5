use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spectral_core::cli::{parse_bands, parse_interval, run, Command, RunConfig};
use spectral_core::par::Exec;
use spectral_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "spectral",
    version,
    about = "Kirchhoff Laplacians on equilateral graphs via the transition operator"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Spectrum of P and the Laplacian eigenvalues it produces in each band.
    Spectrum(Opts),
    /// Check the intertwiner identities on one interval per band.
    Verify(Opts),
    /// Compare against a finite-element discretization.
    Oracle(Opts),
    /// Bound states of a coupled dot array.
    Dots(Opts),
    /// Riemann-Stieltjes convergence table.
    Stieltjes(Opts),
}

#[derive(Args)]
struct Opts {
    /// Graph JSON file.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Dot array JSON file with a coupling matrix "T".
    #[arg(long)]
    dots: Option<PathBuf>,
    /// Band index K or range K-L.
    #[arg(long)]
    band: Option<String>,
    /// Closed interval A,B inside the band.
    #[arg(long, allow_hyphen_values = true)]
    interval: Option<String>,
    /// Finite-element nodes per edge (per unit length for dots).
    #[arg(long, default_value_t = 200)]
    nodes: usize,
    /// Samples per edge in CSV output.
    #[arg(long, default_value_t = 33)]
    samples: usize,
    /// Write eigenfunction samples as CSV files into this directory.
    #[arg(long)]
    csv_dir: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the random checks.
    #[arg(long, default_value_t = spectral_core::cli::DEFAULT_SEED)]
    seed: u64,
    /// Truncation length of the dot oracle.
    #[arg(long, default_value_t = 10.0)]
    length: f64,
    /// Run every job on the calling thread.
    #[arg(long)]
    sequential: bool,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

fn config(command: Command, o: &Opts) -> Result<RunConfig> {
    let input = match (command, &o.graph, &o.dots) {
        (Command::Dots, _, Some(p)) => p.clone(),
        (Command::Dots, _, None) => return Err(Error::InvalidArgument("dots needs --dots FILE".into())),
        (_, Some(p), _) => p.clone(),
        (_, None, _) => return Err(Error::InvalidArgument("--graph FILE is required".into())),
    };
    let mut cfg = RunConfig::new(command, input);
    if let Some(b) = &o.band {
        cfg.bands = parse_bands(b)?;
    }
    if let Some(i) = &o.interval {
        cfg.interval = Some(parse_interval(i)?);
    }
    cfg.nodes = o.nodes;
    cfg.samples = o.samples;
    cfg.csv_dir = o.csv_dir.clone();
    cfg.seed = o.seed;
    cfg.length = o.length;
    cfg.inject_fault = o.inject_fault;
    if o.sequential {
        cfg.exec = Exec::Sequential;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = match &cli.command {
        Sub::Spectrum(o) => (Command::Spectrum, o),
        Sub::Verify(o) => (Command::Verify, o),
        Sub::Oracle(o) => (Command::Oracle, o),
        Sub::Dots(o) => (Command::Dots, o),
        Sub::Stieltjes(o) => (Command::Stieltjes, o),
    };
    let outcome = config(command, opts).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(out) => {
            let text = out.render() + "\n";
            match &opts.out {
                Some(path) => {
                    if let Err(e) = fs::write(path, text) {
                        eprintln!("error: {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
