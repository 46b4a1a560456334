//! Thin command-line front end: load a scenario, run one check battery, and
//! print the report. See the library documentation and `scenarios/README.md`
//! for the scenario schema.

use bislant::report::Format;
use bislant::runner::{run, Command, Overrides};
use bislant::scenario::{builtin, Scenario, BUILTIN_NAMES};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "bislant",
    version,
    about = "Pointwise checks for bi-slant warped-product submanifolds of conformal Kähler spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ambient structure equations on the chart image.
    AmbientCheck(RunArgs),
    /// Frames, operator-block identities, slant angles, and connection relations.
    FrameReport(RunArgs),
    /// Involutivity / totally geodesic / totally umbilic condition batteries.
    SlantCheck(RunArgs),
    /// Warp validation, identity battery, and the warped-product characterization.
    WarpedCheck(RunArgs),
    /// Lower bound for the squared norm of the second fundamental form.
    Chen(RunArgs),
    /// Every battery above.
    All(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to a scenario JSON file.
    #[arg(long, conflicts_with = "builtin")]
    scenario: Option<PathBuf>,
    /// Name of a bundled scenario: paper-example, paper-example-flat, kahler-product.
    #[arg(long)]
    builtin: Option<String>,
    /// Output format.
    #[arg(long, default_value = "text")]
    format: String,
    /// Override the first-derivative tolerance.
    #[arg(long)]
    tol_first: Option<f64>,
    /// Override the second-derivative tolerance.
    #[arg(long)]
    tol_second: Option<f64>,
    /// Override the per-parameter grid count.
    #[arg(long)]
    grid: Option<usize>,
    /// Seed for random sampling mode.
    #[arg(long)]
    seed: Option<u64>,
    /// Process points with nearly degenerate slant angles instead of skipping them.
    #[arg(long)]
    allow_degenerate_angles: bool,
    /// Negative control: report the Lee form with the opposite sign.
    #[arg(long)]
    flip_lee_sign: bool,
    /// Negative control: replace the warping function by its reciprocal.
    #[arg(long)]
    invert_lambda: bool,
}

fn main() {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::AmbientCheck(a) => (Command::AmbientCheck, a),
        Cmd::FrameReport(a) => (Command::FrameReport, a),
        Cmd::SlantCheck(a) => (Command::SlantCheck, a),
        Cmd::WarpedCheck(a) => (Command::WarpedCheck, a),
        Cmd::Chen(a) => (Command::Chen, a),
        Cmd::All(a) => (Command::All, a),
    };
    std::process::exit(execute(command, args));
}

fn execute(command: Command, args: &RunArgs) -> i32 {
    let format = match args.format.parse::<Format>() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let (scenario, label) = match (&args.scenario, &args.builtin) {
        (Some(path), None) => match Scenario::load(path) {
            Ok(s) => (s, format!("file:{}", path.display())),
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        },
        (None, Some(name)) => match builtin(name) {
            Some(text) => match Scenario::from_json(text) {
                Ok(s) => (s, format!("builtin:{name}")),
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            },
            None => {
                eprintln!(
                    "error: unknown builtin `{name}` (available: {})",
                    BUILTIN_NAMES.join(", ")
                );
                return 2;
            }
        },
        _ => {
            eprintln!("error: exactly one of --scenario or --builtin is required");
            return 2;
        }
    };
    let overrides = Overrides {
        tol_first: args.tol_first,
        tol_second: args.tol_second,
        grid: args.grid,
        seed: args.seed,
        allow_degenerate_angles: args.allow_degenerate_angles,
        flip_lee_sign: args.flip_lee_sign,
        invert_lambda: args.invert_lambda,
    };
    match run(command, &scenario, &label, &overrides) {
        Ok((report, code)) => {
            print!("{}", report.emit(format));
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
