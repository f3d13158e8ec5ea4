//! Command-line front end for the headroom simulation suite.
//!
//! Thin by design: flag parsing, config loading, and thread-pool setup live
//! here; everything else is the library's `run_suite`. Exit codes classify
//! failures — 1 for usage and configuration errors, 2 for numeric failures,
//! 3 for I/O failures.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use headroom::config::{parse_config, OutputFormat};
use headroom::report::{run_suite, Selection};

#[derive(Parser)]
#[command(
    name = "headroom",
    version,
    about = "Deterministic collapse-threshold experiments on the inference headroom ratio"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration file; omitted fields take their defaults
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed override, cascading into every experiment
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,

    /// Output directory override
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Artifact classes to write (plot data is always written)
    #[arg(long, global = true, value_enum, value_name = "FORMAT")]
    format: Option<FormatArg>,

    /// Worker thread count; results are identical for any value
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Monte Carlo collapse study with logistic threshold fit
    Exp1,
    /// Noise sensitivity sweep over the drift process
    Exp2,
    /// Proportional capacity control versus uncontrolled drift
    Exp3,
    /// All three experiments
    All,
}

#[derive(ValueEnum, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Both => OutputFormat::Both,
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful outcomes; everything else is a
            // usage error.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            process::exit(code);
        }
    };
    process::exit(run(cli));
}

fn run(cli: Cli) -> i32 {
    let source = match &cli.config {
        Some(path) => match fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) => {
                eprintln!("cannot read config {}: {e}", path.display());
                return 1;
            }
        },
        None => "{}".to_string(),
    };
    let mut config = match parse_config(&source) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("{e}");
            return 1;
        }
    };
    if let Some(seed) = cli.seed {
        config = config.with_master_seed(seed);
    }
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    if let Some(format) = cli.format {
        config.format = format.into();
    }

    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("--threads must be at least 1");
            return 1;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("failed to configure thread pool: {e}");
            return 2;
        }
    }

    let selection = match cli.command {
        Command::Exp1 => Selection::only_exp1(),
        Command::Exp2 => Selection::only_exp2(),
        Command::Exp3 => Selection::only_exp3(),
        Command::All => Selection::all(),
    };

    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run_suite(&config, selection, &mut out) {
        Ok(()) => {
            let _ = out.flush();
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
