use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lipcover::cli::{self, Outcome, EXIT_USAGE};

#[derive(Parser)]
#[command(
    name = "lipcover",
    version,
    about = "Build and verify coverings of squares by countable function families"
)]
struct Args {
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check the ordinal covering of {0..N-1}^2 and export the Ulam matrix.
    Sierpinski {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        fns: u64,
    },
    /// Build a chain of Cantor points by diagonal extension and verify it.
    Chain {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the generic filter simulation and verify the resulting family.
    Forcing {
        #[arg(long)]
        k: u64,
        /// Comma-separated ordinal labels.
        #[arg(long)]
        labels: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Count or enumerate the 1-Lipschitz self-maps of 2^n.
    Lipschitz {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        count_only: bool,
    },
    /// Re-verify a chain or forcing artifact.
    Verify { input: PathBuf },
}

fn run(args: &Args) -> Outcome {
    match &args.command {
        Command::Sierpinski { n, fns } => cli::cmd_sierpinski(*n, *fns),
        Command::Chain { n, depth, seed } => cli::cmd_chain(*n, *depth, *seed),
        Command::Forcing { k, labels, seed } => match cli::parse_labels(labels) {
            Ok(labels) => cli::cmd_forcing(*k, &labels, *seed),
            Err(e) => Outcome {
                code: EXIT_USAGE,
                json: None,
                message: Some(e),
            },
        },
        Command::Lipschitz { n, count_only } => cli::cmd_lipschitz(*n, *count_only),
        Command::Verify { input } => match std::fs::read_to_string(input) {
            Ok(text) => cli::cmd_verify(&text),
            Err(e) => Outcome {
                code: EXIT_USAGE,
                json: None,
                message: Some(format!("{}: {e}", input.display())),
            },
        },
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let Format::Json = args.format;
    let outcome = run(&args);
    if let Some(msg) = &outcome.message {
        eprintln!("lipcover: {msg}");
    }
    if let Some(json) = &outcome.json {
        let written = match &args.output {
            Some(path) => std::fs::write(path, format!("{json}\n")),
            None => writeln!(io::stdout().lock(), "{json}"),
        };
        match written {
            Ok(()) => {}
            // the reader went away (`| head`); nothing left to report to
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
            Err(e) => {
                eprintln!("lipcover: cannot write output: {e}");
                return ExitCode::from(EXIT_USAGE as u8);
            }
        }
    }
    ExitCode::from(outcome.code as u8)
}
