use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use equilef_core::report::{render_text, run, Command, Overrides, Report};
use equilef_core::scenario::Scenario;
use equilef_core::Error;

const EXIT_DISCREPANCY: u8 = 1;
const EXIT_TRANSVERSALITY: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    /// Schema and equivariance checks
    Validate,
    /// Lefschetz number from the basic cohomology
    Lhs,
    /// Sum over fixed orbits
    Rhs,
    /// Both sides and their comparison
    Verify,
    /// Lowest eigenvalues of the Laplace-type operator per degree
    Spectrum,
    /// Projector checks for the averaging operator
    Avcheck,
    /// Kernel-approximant convergence study
    Mollifier,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Validate => Command::Validate,
            Cmd::Lhs => Command::Lhs,
            Cmd::Rhs => Command::Rhs,
            Cmd::Verify => Command::Verify,
            Cmd::Spectrum => Command::Spectrum,
            Cmd::Avcheck => Command::Avcheck,
            Cmd::Mollifier => Command::Mollifier,
        }
    }
}

/// Verifies an equivariant Lefschetz fixed-point formula on declarative scenarios.
///
/// Exit status: 0 pass, 1 discrepancy or non-equivariant map, 2 transversality
/// failure, 64 usage, parse or schema error. EQUILEF_THREADS caps worker threads.
#[derive(Debug, Parser)]
#[command(name = "equilef", version)]
struct Cli {
    command: Cmd,
    /// Scenario file (JSON)
    file: PathBuf,
    /// Fourier cutoff for the basic complex
    #[arg(long)]
    cutoff: Option<i64>,
    /// Quadrature resolution per axis
    #[arg(long)]
    grid: Option<usize>,
    /// Tolerance for the command's main comparison
    #[arg(long)]
    tolerance: Option<f64>,
    /// Also write the JSON report here
    #[arg(long, value_name = "out.json")]
    json: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        e if e.is_transversality_failure() => EXIT_TRANSVERSALITY,
        Error::NotEquivariant(_) | Error::NotBasic(_) => EXIT_DISCREPANCY,
        Error::Parse { .. } | Error::Schema { .. } | Error::Unsupported(_) | Error::GridTooCoarse(_) => EXIT_USAGE,
        _ => EXIT_DISCREPANCY,
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("EQUILEF_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| format!("EQUILEF_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn execute(cli: &Cli) -> Result<Report, (u8, String)> {
    let text = std::fs::read_to_string(&cli.file).map_err(|e| (EXIT_USAGE, format!("cannot read {}: {e}", cli.file.display())))?;
    let fail = |e: Error| (exit_code(&e), e.to_string());
    let scenario = Scenario::parse(&text).map_err(fail)?;
    let overrides = Overrides { cutoff: cli.cutoff, grid: cli.grid, tolerance: cli.tolerance };
    if overrides.cutoff.is_some_and(|c| !(1..=64).contains(&c)) {
        return Err((EXIT_USAGE, "--cutoff must lie in 1..=64".into()));
    }
    if overrides.grid == Some(0) || overrides.tolerance.is_some_and(|t| !(t >= 0.0)) {
        return Err((EXIT_USAGE, "--grid must be positive and --tolerance nonnegative".into()));
    }
    run(cli.command.into(), &scenario, &overrides).map_err(fail)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    match execute(&cli) {
        Ok(report) => {
            print!("{}", render_text(&report));
            if let Some(path) = &cli.json {
                if let Err(e) = std::fs::write(path, report.to_json()) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(EXIT_USAGE);
                }
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_DISCREPANCY)
            }
        }
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
