use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use chillwave::field2d::snapshot::{self, SnapshotMeta};
use chillwave::harness::{
    self, convergence_study, run_simulation, sweep_min_stabilizer, write_outputs,
    ConvergenceConfig, RunConfig, SweepConfig, PREPARE_STEPS,
};
use chillwave::{Basis1D, BasisKind, PotentialSpec};

/// Stabilized linear BDF2 / Crank-Nicolson solver for the Cahn-Hilliard
/// equation on [-1, 1]^2.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation; writes trace.csv, summary.json and snapshots.
    Run {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Output directory (overrides `out_dir` in the config).
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Minimum-stabilizer sweep; writes a table CSV.
    Sweep {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Steps per verdict (overrides `steps`).
        #[arg(long)]
        steps: Option<usize>,
        /// Tolerated per-step energy increase (overrides `threshold`).
        #[arg(long)]
        threshold: Option<f64>,
        /// Output CSV (overrides `out`; stdout when neither is set).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Convergence study against a fine-step reference; writes a CSV.
    Converge {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Write the seeded noise `phi0.csv` and the prepared `phi1.csv`.
    PrepareInitial {
        #[arg(long = "M")]
        m: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "printed")]
        basis: BasisArg,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum BasisArg {
    Printed,
    Neumann,
}

impl From<BasisArg> for BasisKind {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Printed => BasisKind::Printed,
            BasisArg::Neumann => BasisKind::Neumann,
        }
    }
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn write_or_print(
    out: Option<&Path>,
    write: impl Fn(&mut dyn std::io::Write) -> chillwave::Result<()>,
) -> AnyResult<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
            write(&mut file)?;
        }
        None => write(&mut std::io::stdout().lock())?,
    }
    Ok(())
}

fn run(config: &Path, out_dir: Option<PathBuf>) -> AnyResult<()> {
    let cfg = RunConfig::from_json_file(config)?;
    let dir = out_dir
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let out = run_simulation(&cfg)?;
    write_outputs(&out, &dir)?;
    let last = out.trace.last();
    eprintln!(
        "{} steps to t = {:.6}, termination {:?}, E_eps = {}, max residual {:e}; outputs in {}",
        out.final_state.n,
        out.final_state.t,
        out.trace.termination,
        last.map_or(f64::NAN, |r| r.e_eps),
        out.max_residual,
        dir.display()
    );
    Ok(())
}

fn sweep(
    config: &Path,
    steps: Option<usize>,
    threshold: Option<f64>,
    out: Option<PathBuf>,
) -> AnyResult<()> {
    let mut cfg = SweepConfig::from_json_file(config)?;
    if let Some(s) = steps {
        cfg.steps = s;
    }
    if let Some(t) = threshold {
        cfg.threshold = t;
    }
    let table = sweep_min_stabilizer(&cfg)?;
    for cell in table.anomalies() {
        eprintln!(
            "anomaly: non-monotone verdicts at gamma = {}, fixed = {}, tau = {}: {:?}",
            cell.gamma, cell.fixed, cell.tau, cell.verdicts
        );
    }
    write_or_print(out.or(cfg.out).as_deref(), |w| table.write_csv(w))
}

fn converge(config: &Path, out: Option<PathBuf>) -> AnyResult<()> {
    let cfg = ConvergenceConfig::from_json_file(config)?;
    let table = convergence_study(&cfg.base, &cfg.taus, cfg.tau_ref)?;
    write_or_print(out.or(cfg.out).as_deref(), |w| table.write_csv(w))
}

fn prepare_initial(m: usize, eps: f64, seed: u64, out: &Path, basis: BasisKind) -> AnyResult<()> {
    let basis = Arc::new(Basis1D::assemble_kind(basis, m)?);
    let spec = PotentialSpec::default();
    let phi0 = harness::generate_phi0_in(&basis, seed);
    let phi1 = harness::prepare_phi1(&phi0, eps, &spec)?;
    std::fs::create_dir_all(out)?;
    let meta = |t: f64, step: usize| SnapshotMeta {
        m,
        eps,
        gamma: 1.0,
        t,
        step,
    };
    snapshot::save(&out.join("phi0.csv"), &phi0, &meta(0.0, 0))?;
    snapshot::save(
        &out.join("phi1.csv"),
        &phi1,
        &meta(PREPARE_STEPS as f64 * eps.powi(3), PREPARE_STEPS),
    )?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out_dir } => run(&config, out_dir),
        Command::Sweep {
            config,
            steps,
            threshold,
            out,
        } => sweep(&config, steps, threshold, out),
        Command::Converge { config, out } => converge(&config, out),
        Command::PrepareInitial {
            m,
            eps,
            seed,
            out,
            basis,
        } => prepare_initial(m, eps, seed, &out, basis.into()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
