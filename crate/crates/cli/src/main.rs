use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dressing_forge::export::report_table;
use dressing_forge::{execute, Options, Stage};

#[derive(Parser)]
#[command(name = "dressing-forge", version, about = "Dressing transformations of flat Lagrangian immersions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Oracle integration step (overrides the scenario).
    #[arg(long)]
    step: Option<f64>,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Vacuum metric table.
    Seed(Common),
    /// Dressed metric table.
    Dress(Common),
    /// Run the enabled checks and write report.json.
    Verify(Common),
    /// Immersion slices (CSV/OBJ), one per λ.
    Export(Common),
    /// Immersion slices over the λ list; the λ = 0 slice must be real.
    Sweep(Common),
    /// Both orders of a two-factor dressing and their discrepancy.
    PermuteCheck(Common),
    /// dress + verify + export.
    Run(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, common) = match cli.command {
        Command::Seed(c) => (Stage::Seed, c),
        Command::Dress(c) => (Stage::Dress, c),
        Command::Verify(c) => (Stage::Verify, c),
        Command::Export(c) => (Stage::Export, c),
        Command::Sweep(c) => (Stage::Sweep, c),
        Command::PermuteCheck(c) => (Stage::PermuteCheck, c),
        Command::Run(c) => (Stage::Run, c),
    };
    let opts = Options { out: common.out, step: common.step, tol_scale: common.tol_scale };
    let result = execute(stage, &common.scenario, &opts).and_then(|outcome| {
        print!("{}", report_table(&outcome.report));
        for f in &outcome.files {
            println!("wrote {}", f.display());
        }
        outcome.into_result()
    });
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

