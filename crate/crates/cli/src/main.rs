use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use iqr::geometry::{load_unstructured_tri_mesh, Domain};
use iqr::harness::{convergence_csv, convergence_study, run_case, write_convergence_csv, RunConfig};
use iqr::reconstruction::ReconstructionMode;

#[derive(Parser)]
#[command(name = "iqr", version, about = "Finite-volume runs with integrated quadratic reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// CFL number, overriding the case file
    #[arg(long, global = true)]
    cfl: Option<f64>,
    /// Reconstruction: iqr or kexact
    #[arg(long, global = true)]
    recon: Option<ReconstructionMode>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report invariants and exit with status 2 if one fails
    #[arg(long, global = true)]
    check_invariants: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one case
    Run { config: PathBuf },
    /// Run the case at each `[convergence] levels` resolution
    Converge { config: PathBuf },
    /// Print a summary of a Triangle mesh (`.node`; the `.ele` sits beside it)
    MeshInfo { mesh: PathBuf },
}

fn load(cli: &Cli, path: &Path) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(c) = cli.cfl {
        cfg.case.cfl = Some(c);
    }
    if let Some(r) = cli.recon {
        cfg.case.reconstruction = r;
    }
    if let Some(o) = &cli.out {
        cfg.case.output = Some(std::env::current_dir()?.join(o));
    }
    cfg.case.check_invariants |= cli.check_invariants;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(cli, config)?;
            let out = run_case(&cfg)?;
            println!("cells = {}", out.mesh.n_cells());
            println!("steps = {}", out.dt_count);
            println!("t = {}", out.state.t);
            println!("seconds = {:.2}", out.seconds);
            if let Some(e) = out.errors {
                println!("h = {:.6e}", e.h);
                println!("L1 = {:.6e}", e.l1);
                println!("Linf = {:.6e}", e.linf);
            }
            if cfg.case.check_invariants {
                print!("{}", out.invariants);
                return Ok(out.invariants.passed());
            }
            Ok(true)
        }
        Command::Converge { config } => {
            let cfg = load(cli, config)?;
            let Some(conv) = &cfg.convergence else {
                bail!("{}: no [convergence] table", config.display());
            };
            let rows = convergence_study(&cfg, &conv.levels)?;
            print!("{}", convergence_csv(&rows));
            if let Some(dir) = &cfg.case.output {
                std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
                write_convergence_csv(&dir.join(format!("{}_convergence.csv", cfg.case.model)), &rows)?;
            }
            Ok(true)
        }
        Command::MeshInfo { mesh } => {
            let node = std::fs::read_to_string(mesh).with_context(|| mesh.display().to_string())?;
            let ele_path = mesh.with_extension("ele");
            let ele = std::fs::read_to_string(&ele_path).with_context(|| ele_path.display().to_string())?;
            // the domain only matters for periodic identification
            let m = load_unstructured_tri_mesh(&node, &ele, Domain::unit(2, false))?;
            print!("{}", m.summary());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
