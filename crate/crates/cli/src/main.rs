//! `streamcore` command-line driver.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::Format;

#[derive(Parser, Debug)]
#[command(name = "streamcore", version, about = "Compiler and interpreter for a core calculus of stream programs")]
struct Cli {
    /// Output format for reports and diagnostics.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and check programs, reporting the form and shape of every definition.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Rewrite first-form definitions to second or third form.
    Normalize {
        file: PathBuf,
        /// Target form.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
        to: u8,
        /// Keep the copies introduced by the rewrite rules.
        #[arg(long)]
        no_copyprop: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check pattern matches for missing and overlapping cases.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        select: Select,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Execute a definition on an input stream.
    Run(RunArgs),
    /// Print the data-flow graph of a definition in DOT syntax.
    Graph {
        file: PathBuf,
        #[command(flatten)]
        select: Select,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Enumerate the internal, external and deterministic relations of a definition.
    Relations {
        file: PathBuf,
        #[command(flatten)]
        select: Select,
        #[command(flatten)]
        domain: DomainArgs,
    },
}

#[derive(Args, Debug)]
struct Select {
    /// Definition to use; defaults to the last one.
    #[arg(long = "fun")]
    fun: Option<String>,
}

#[derive(Args, Debug)]
struct DomainArgs {
    /// JSON domain spec file.
    #[arg(long)]
    domain: Option<PathBuf>,
    /// Numeric carrier, e.g. `0,1,2`; ignored when --domain is given.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    numbers: Option<Vec<f64>>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum TraceFormat {
    Csv,
    Jsonl,
}

#[derive(Args, Debug)]
struct RunArgs {
    file: PathBuf,
    #[command(flatten)]
    select: Select,
    /// Number of steps; required for generated inputs, truncates CSV input.
    #[arg(long)]
    steps: Option<usize>,
    /// `expr:<generators>` or `csv:<path>` (a bare path is read as CSV).
    #[arg(long)]
    input: Option<String>,
    /// Seed for random generators.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Prefix every row with the pre-state of its step.
    #[arg(long)]
    trace_state: bool,
    /// Initial state as comma-separated values, overriding the initializers.
    #[arg(long)]
    init: Option<String>,
    /// Execute blocks of this many steps through the unrolled step function.
    #[arg(long, default_value_t = 1)]
    unroll: usize,
    #[arg(long, value_enum, default_value_t = TraceFormat::Csv)]
    out: TraceFormat,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 2 } else { 0 });
        }
    };
    let code = commands::dispatch(cli.format, cli.command);
    ExitCode::from(code)
}
