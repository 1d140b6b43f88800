//! The `sbn` command line: single runs, convergence tables, integrator
//! comparisons and mesh export.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use crate::assembly::Assembler;
use crate::error::{Error, Result};
use crate::mesh::write_mesh;
use crate::timestepping::{EnergyLedger, LedgerBuilder, Stepper};
use crate::verification::{oracle_compare, run_convergence_study, ConvergenceReport, OracleReport, StudyConfig};

pub use config::{ChannelSpec, IniDocument, Mapping, MeshSpec, RunConfig, Scenario, SourceSpec};

#[derive(Debug, Parser)]
#[command(name = "sbn", version, about = "Coupled Stokes / poroelasticity solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time-step one configuration, writing ledger.csv and VTK snapshots.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the number of steps implied by t_final.
        #[arg(long)]
        steps: Option<usize>,
        /// Also write every coefficient to dofs_<n>.csv at each snapshot.
        #[arg(long)]
        dump_dofs: bool,
    },
    /// Spatial convergence table against a fine reference run.
    Converge {
        config: PathBuf,
        /// Number of halvings of the configured mesh.
        #[arg(long, default_value_t = 4)]
        levels: usize,
        /// Target mesh size of the reference run.
        #[arg(long)]
        ref_h: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decoupled against monolithic integration over a time-step sweep.
    Compare {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        dt_sweep: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes a structured channel mesh in the MESH v1 format.
    Mesh {
        #[arg(long)]
        nx: usize,
        /// Rows in each of the two regions.
        #[arg(long)]
        ny: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Geometry::Test1)]
        geometry: Geometry,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Geometry {
    /// [0,1]×[−1,1] split at y = 0.
    Test1,
    /// The mapped injection domain.
    Test2,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub steps: Option<usize>,
    pub dump_dofs: bool,
}

#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub steps: usize,
    pub ledger: EnergyLedger,
    pub snapshots: Vec<PathBuf>,
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::from(e).context(format!("creating {}", dir.display())))
}

pub fn cmd_run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary> {
    let out_dir = opts.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    prepare_dir(&out_dir)?;
    let mesh = cfg.mesh.build()?;
    let setup = cfg.setup_for(&mesh)?;
    let asm = Assembler::new(mesh, setup)?;
    let steps = opts.steps.unwrap_or_else(|| cfg.steps());
    let mut stepper = Stepper::new(asm.clone());
    let mut state = stepper.initial_state();
    let mut ledger = LedgerBuilder::new(&asm, cfg.dt, &state)?;
    let mut csv = output::LedgerCsv::create(&out_dir.join("ledger.csv"))?;
    let mut snapshots = Vec::new();
    for n in 1..=steps {
        let (next, report) = stepper.advance(cfg.integrator, &state, cfg.dt)?;
        csv.push(ledger.push(&next, &report)?)?;
        if n % cfg.stride == 0 {
            let path = out_dir.join(format!("fields_{n}.vtk"));
            output::write_snapshot(&asm, &next, &path)?;
            snapshots.push(path);
            if opts.dump_dofs {
                std::fs::write(out_dir.join(format!("dofs_{n}.csv")), output::dofs_csv(&asm, &next))?;
            }
        }
        log::info!("step {n}/{steps} t={} residual {:e}", next.time, report.max_residual());
        state = next;
    }
    Ok(RunSummary { out_dir, steps, ledger: ledger.finish(), snapshots })
}

/// Levels are the configured channel refined `levels` times by halving.
pub fn cmd_converge(cfg: &RunConfig, levels: usize, ref_h: Option<f64>, out: Option<&Path>) -> Result<ConvergenceReport> {
    let MeshSpec::Channel(channel) = cfg.mesh else {
        return Err(Error::Usage("convergence studies need a built-in channel mesh, not a mesh file".into()));
    };
    if levels == 0 {
        return Err(Error::Usage("at least one level is needed".into()));
    }
    let factors: Vec<usize> = (0..levels).map(|k| 1 << k).collect();
    let finest = *factors.last().unwrap();
    let reference = match ref_h {
        None => 3 * finest,
        Some(h) if h > 0.0 && h.is_finite() => {
            let h0 = channel.build(1)?.h_max();
            (h0 / h).ceil() as usize
        }
        Some(h) => return Err(Error::Parameter(format!("ref-h must be positive, got {h}"))),
    };
    let base = channel.build(1)?;
    let study = StudyConfig {
        setup: cfg.setup_for(&base)?,
        levels: factors,
        reference,
        dt: cfg.dt,
        t_final: cfg.t_final,
        mesh: Arc::new(move |f| channel.build(f)),
        integrator: cfg.integrator,
    };
    let report = run_convergence_study(&study)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.out_dir.clone());
    prepare_dir(&dir)?;
    std::fs::write(dir.join("table1.csv"), report.to_csv())?;
    Ok(report)
}

/// Runs both integrators to the last multiple of the largest step not after t_final.
pub fn cmd_compare(cfg: &RunConfig, dt_sweep: &[f64], out: Option<&Path>) -> Result<OracleReport> {
    let dt_max = dt_sweep.iter().copied().fold(f64::NAN, f64::max);
    if !(dt_max > 0.0) {
        return Err(Error::Usage("time steps must be positive".into()));
    }
    let n = ((cfg.t_final / dt_max) * (1.0 + 1e-12)).floor().max(1.0);
    let t_final = n * dt_max;
    let mesh = cfg.mesh.build()?;
    let report = oracle_compare(&cfg.setup_for(&mesh)?, &mesh, dt_sweep, t_final)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.out_dir.clone());
    prepare_dir(&dir)?;
    std::fs::write(dir.join("oracle.csv"), report.to_csv())?;
    Ok(report)
}

pub fn cmd_mesh(nx: usize, ny: usize, geometry: Geometry, out: &Path) -> Result<()> {
    let spec = match geometry {
        Geometry::Test1 => ChannelSpec { nx, ny, ..ChannelSpec::test1(1) },
        Geometry::Test2 => ChannelSpec::test2(nx, ny),
    };
    write_mesh(&spec.build(1)?, out)
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, steps, dump_dofs } => {
            let cfg = RunConfig::load(&config)?;
            let s = cmd_run(&cfg, &RunOptions { out, steps, dump_dofs })?;
            if s.ledger.blow_up {
                log::warn!("energy exceeded the blow-up threshold");
            }
            println!("{} steps written to {}", s.steps, s.out_dir.display());
        }
        Command::Converge { config, levels, ref_h, out } => {
            let cfg = RunConfig::load(&config)?;
            print!("{}", cmd_converge(&cfg, levels, ref_h, out.as_deref())?.to_csv());
        }
        Command::Compare { config, dt_sweep, out } => {
            let cfg = RunConfig::load(&config)?;
            print!("{}", cmd_compare(&cfg, &dt_sweep, out.as_deref())?.to_csv());
        }
        Command::Mesh { nx, ny, out, geometry } => cmd_mesh(nx, ny, geometry, &out)?,
    }
    Ok(())
}

/// Parses `args` and runs the command; errors go to stderr.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
