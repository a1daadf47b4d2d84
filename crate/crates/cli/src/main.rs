//! `autoasm`: runs the assembly pipeline stages from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use autoasm::feasibility::DirectionMode;
use autoasm::fixtures;
use autoasm::pipeline::{run_pipeline, write_inputs, Command, Options, Paths};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "autoasm",
    version,
    about = "Design to assembly program to simulated cell run"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate and geometrically filter assembly sequences.
    Plan(RunArgs),
    /// Bind feasible sequences to tooling and a cell.
    Match(RunArgs),
    /// Generate the process-language program for the selected BOP.
    Codegen(RunArgs),
    /// Execute the program in the digital twin.
    Simulate(RunArgs),
    /// Run every stage.
    All(RunArgs),
    /// Write the built-in example inputs (triplet design, tooling, cell).
    Fixtures {
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Move the B-C screws out of the screwdriver's reach.
        #[arg(long)]
        far: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Directions {
    Axes,
    Joints,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    design: Option<PathBuf>,
    #[arg(long)]
    tooling: Option<PathBuf>,
    #[arg(long)]
    cells: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Maximum number of sequences to enumerate.
    #[arg(long, default_value_t = autoasm::sequencer::DEFAULT_CAP)]
    cap: usize,
    /// Sweep step as a fraction of the smallest part bounding-box diagonal.
    #[arg(long, default_value_t = autoasm::feasibility::DEFAULT_STEP_RATIO)]
    step_ratio: f64,
    #[arg(long, value_enum, default_value = "axes")]
    directions: Directions,
    /// Seed for the twin's IK restarts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    json: bool,
}

fn run(command: Command, a: RunArgs) -> ExitCode {
    let paths = Paths {
        design: a.design,
        tooling: a.tooling,
        cells: a.cells,
        out: a.out,
    };
    let opts = Options {
        cap: a.cap,
        step_ratio: a.step_ratio,
        directions: match a.directions {
            Directions::Axes => DirectionMode::Axes,
            Directions::Joints => DirectionMode::Joints,
        },
        seed: a.seed,
        ..Options::default()
    };
    let report = run_pipeline(command, &paths, &opts);
    if a.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.summary());
    }
    ExitCode::from(report.exit_code)
}

fn write_fixtures(out: PathBuf, far: bool) -> anyhow::Result<()> {
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let design = if far {
        fixtures::triplet_far_design()
    } else {
        fixtures::triplet_design()
    };
    let p = write_inputs(&out, &design, &fixtures::tooling_db(), &[fixtures::cell()])?;
    for f in [p.design, p.tooling, p.cells].into_iter().flatten() {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Cmd::Plan(a) => run(Command::Plan, a),
        Cmd::Match(a) => run(Command::Match, a),
        Cmd::Codegen(a) => run(Command::Codegen, a),
        Cmd::Simulate(a) => run(Command::Simulate, a),
        Cmd::All(a) => run(Command::All, a),
        Cmd::Fixtures { out, far } => match write_fixtures(out, far) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}
