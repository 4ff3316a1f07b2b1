use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use shapelab::scene::{parse_grid_arg, run, CliOverrides, SceneConfig};

/// Numerical laboratory for shape-operator-preserving deformations:
/// runs a JSON scene file and writes a deterministic summary plus
/// mode-specific artifacts (rotation data, frames, OBJ meshes).
///
/// Exit status: 0 when every residual gate in the scene passes, 1 on a
/// numerical gate failure, 2 on validation or I/O errors.
#[derive(Parser)]
#[command(name = "shapelab", version)]
struct Cli {
    /// scene JSON file
    #[arg(long)]
    scene: PathBuf,
    /// output directory for the summary and artifacts
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// override the scene's residual tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// override the grid resolution, e.g. 64x64 or 24x24x24
    #[arg(long, value_parser = parse_grid_arg)]
    grid: Option<Vec<usize>>,
    /// override the lambda list (comma-separated)
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.scene) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read scene {}: {e}", cli.scene.display());
            return ExitCode::from(2);
        }
    };
    let config: SceneConfig = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid scene {}: {e}", cli.scene.display());
            return ExitCode::from(2);
        }
    };
    let overrides = CliOverrides {
        tol: cli.tol,
        grid: cli.grid,
        lambdas: cli.lambda,
    };
    match run(&config, &overrides, &cli.out) {
        Ok(outcome) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&outcome.summary).expect("summary serialization")
            );
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!(
                    "gate failed; see report at {}",
                    outcome.summary_path.display()
                );
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
