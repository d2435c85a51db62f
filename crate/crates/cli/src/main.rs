use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mvlab_cli::{config, presets, runner};

#[derive(Parser)]
#[command(
    name = "mvlab",
    about = "Finite-volume and particle laboratory for aggregation-diffusion dynamics on the torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the PDE scenario described by a config document.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output.directory` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named preset scenario.
    Scenario {
        /// One of: fig1, fig2, ex1, ex2, fig5, fig6, hk.
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bisect the critical noise strength of the coexistence boundary.
    SweepSigmaC {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the interacting-particle system described by a config document.
    Particles {
        #[arg(long)]
        config: PathBuf,
        /// Random stream identifier; overrides `seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() {
    if let Ok(value) = std::env::var("MVLAB_THREADS") {
        match value.trim().parse::<usize>() {
            Ok(0) => {} // auto
            Ok(k) => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build_global();
            }
            Err(_) => eprintln!("ignoring unparsable MVLAB_THREADS={value}"),
        }
    }
}

fn output_dir(
    explicit: Option<PathBuf>,
    config: &config::SimulationConfig,
) -> anyhow::Result<PathBuf> {
    explicit
        .or_else(|| config.output.directory.clone().map(PathBuf::from))
        .ok_or_else(|| anyhow::anyhow!("no output directory: pass --out or set output.directory"))
}

fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run { config: path, out } => {
            let text = std::fs::read_to_string(&path)?;
            let cfg = config::parse_config(&text)?;
            let dir = output_dir(out, &cfg)?;
            runner::run_simulation(
                path.file_stem().and_then(|s| s.to_str()).unwrap_or("run"),
                &cfg,
                &dir,
            )
        }
        Command::Scenario { name, out } => match presets::preset(&name) {
            Some(cfg) => runner::run_simulation(&name, &cfg, &out),
            None => anyhow::bail!(
                "unknown preset '{name}'; known presets: {}",
                presets::PRESET_NAMES.join(", ")
            ),
        },
        Command::SweepSigmaC { out } => runner::run_sweep(&out),
        Command::Particles {
            config: path,
            seed,
            out,
        } => {
            let text = std::fs::read_to_string(&path)?;
            let cfg = config::parse_config(&text)?;
            let dir = output_dir(out, &cfg)?;
            runner::run_particles(
                path.file_stem().and_then(|s| s.to_str()).unwrap_or("run"),
                &cfg,
                seed,
                &dir,
            )
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // machine-readable error record on stderr
            let record = serde_json::json!({ "error": format!("{err:#}") });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
