use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bitblast::lang::{self, EvalConfig};
use bitblast::library::PieceKind;
use bitblast::Error;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "bitblast",
    version,
    about = "Exact inference for hybrid probabilistic programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a program and answer its query.
    Run(RunArgs),
    /// Parse and check a program, then print it in canonical form.
    Fmt { file: PathBuf },
}

#[derive(clap::Args)]
struct RunArgs {
    file: PathBuf,
    /// Bits per continuous variable.
    #[arg(long, default_value_t = 8)]
    bits: u32,
    /// Pieces for densities outside the exactly compiled family.
    #[arg(long, default_value_t = 16)]
    pieces: u32,
    #[arg(long, value_enum, default_value_t = Kind::Exponential)]
    piece_kind: Kind,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report flips, diagram sizes, evidence weight and wall time.
    #[arg(long)]
    stats: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Linear,
    Exponential,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

const EXIT_PROGRAM: u8 = 1;
const EXIT_ZERO_EVIDENCE: u8 = 2;

fn main() -> ExitCode {
    // Usage errors exit with 1; 2 is reserved for zero evidence.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_PROGRAM)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    // Diagram operations recurse once per variable level.
    let worker = std::thread::Builder::new()
        .stack_size(512 << 20)
        .spawn(move || dispatch(cli))
        .expect("spawn worker thread");
    match worker.join() {
        Ok(code) => code,
        Err(_) => ExitCode::from(EXIT_PROGRAM),
    }
}

fn dispatch(cli: Cli) -> ExitCode {
    match cli.command {
        Command::Run(args) => run(args),
        Command::Fmt { file } => {
            let result =
                read(&file).and_then(|src| lang::validate(&src).map_err(|e| e.to_string()));
            match result {
                Ok(prog) => {
                    print!("{prog}");
                    ExitCode::SUCCESS
                }
                Err(msg) => {
                    eprintln!("{}: {msg}", file.display());
                    ExitCode::from(EXIT_PROGRAM)
                }
            }
        }
    }
}

fn read(path: &PathBuf) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read: {e}"))
}

fn run(args: RunArgs) -> ExitCode {
    let src = match read(&args.file) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("{}: {msg}", args.file.display());
            return ExitCode::from(EXIT_PROGRAM);
        }
    };
    let config = EvalConfig {
        bits: args.bits,
        pieces: args.pieces,
        piece_kind: match args.piece_kind {
            Kind::Linear => PieceKind::Linear,
            Kind::Exponential => PieceKind::Exponential,
        },
    };
    let out = match lang::run(&src, &config) {
        Ok(out) => out,
        Err(Error::ZeroEvidence) => {
            eprintln!("{}: {}", args.file.display(), Error::ZeroEvidence);
            return ExitCode::from(EXIT_ZERO_EVIDENCE);
        }
        Err(e) => {
            eprintln!("{}: {e}", args.file.display());
            return ExitCode::from(EXIT_PROGRAM);
        }
    };
    let stats = out.stats.clone();
    let out = if args.stats { out } else { out.without_stats() };
    let text = match args.format {
        Format::Json => out.to_json() + "\n",
        Format::Csv => {
            if let (true, Some(s)) = (args.stats, &stats) {
                eprintln!(
                    "flips={} nodes_formula={} nodes_evidence={} evidence_wmc={:e} millis={}",
                    s.flips, s.nodes_formula, s.nodes_evidence, s.evidence_wmc, s.millis
                );
            }
            out.to_csv()
        }
    };
    let written = match &args.out {
        Some(path) => fs::write(path, text.as_bytes()),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("cannot write output: {e}");
        return ExitCode::from(EXIT_PROGRAM);
    }
    ExitCode::SUCCESS
}
