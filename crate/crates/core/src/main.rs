use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use edgelab::experiments::{run_experiment, ExperimentConfig};
use edgelab::snapshot::{heatmap_sidecar, read_snapshot, write_heatmap};
use edgelab::EdgeError;

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_THRESHOLD: u8 = 4;

#[derive(Parser)]
#[command(name = "edgelab", version, about = "Dirac wavepackets on curved domain walls")]
struct Cli {
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the FFT and solver pools.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `section.key=value`, may be repeated.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Quick invariant suite; exits 4 when a threshold fails.
    Check,
    /// Render a snapshot's density as a 16-bit PGM.
    ExportHeatmap { snapshot: PathBuf, pgm: PathBuf },
}

fn exit_code(e: &EdgeError) -> u8 {
    match e {
        EdgeError::Config(_) | EdgeError::InvalidParameter(_) | EdgeError::Resolution(_) | EdgeError::Format(_) => {
            EXIT_CONFIG
        }
        _ => EXIT_SOLVER,
    }
}

fn fail(e: &EdgeError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(e))
}

fn prepare_out_dir(dir: &Path) -> Result<(), EdgeError> {
    let probe = dir.join(".edgelab-write-test");
    std::fs::create_dir_all(dir)
        .and_then(|_| std::fs::write(&probe, b""))
        .and_then(|_| std::fs::remove_file(&probe))
        .map_err(|e| EdgeError::Config(format!("output directory {} is not writable: {e}", dir.display())))
}

fn run(cli: &Cli, config: &Path) -> ExitCode {
    let mut cfg = match ExperimentConfig::load(config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    for o in &cli.overrides {
        if let Err(e) = cfg.apply_override(o) {
            return fail(&e);
        }
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = &cli.out {
        cfg.out_dir = d.clone();
    }
    if let Err(e) = cfg.validate().and_then(|_| prepare_out_dir(&cfg.out_dir)) {
        return fail(&e);
    }
    match run_experiment(&cfg, Some(&cfg.out_dir)) {
        Ok(report) => {
            for line in report.summary() {
                println!("{line}");
            }
            println!("results in {}", cfg.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn check(cli: &Cli) -> ExitCode {
    let results = match edgelab::check::smoke_suite(cli.seed.unwrap_or(0)) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let mut ok = true;
    for c in &results {
        ok &= c.pass;
        println!(
            "{:<32} {:>11.3e} <= {:.0e}  {}",
            c.name,
            c.value,
            c.threshold,
            if c.pass { "ok" } else { "FAIL" }
        );
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_THRESHOLD)
    }
}

fn export_heatmap(snapshot: &Path, pgm: &Path) -> ExitCode {
    let result = read_snapshot(snapshot).and_then(|(_, field)| write_heatmap(pgm, &field));
    match result {
        Ok(max) => {
            println!(
                "wrote {} (max density {max:e}, see {})",
                pgm.display(),
                heatmap_sidecar(pgm).display()
            );
            ExitCode::SUCCESS
        }
        Err(EdgeError::Io(e)) => fail(&EdgeError::Config(e.to_string())),
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(&EdgeError::Config(e.to_string()));
        }
    }
    match &cli.command {
        Command::Run { config } => run(&cli, config),
        Command::Check => check(&cli),
        Command::ExportHeatmap { snapshot, pgm } => export_heatmap(snapshot, pgm),
    }
}
