use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use visco_emc::commands::{self, default_material, CliError};
use visco_emc::config::{parse_config, MaterialPointSpec, RunConfig};
use visco_core::integrators::SchemeKind;

/// Finite-strain incompressible viscoelastodynamics driver.
#[derive(Parser)]
#[command(name = "visco-emc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Output directory.
    #[arg(long, default_value = "visco-out")]
    out: PathBuf,
    /// Time integrator: 1, 2 or mp.
    #[arg(long)]
    scheme: Option<SchemeKind>,
    /// Grad-div stabilization parameter.
    #[arg(long)]
    gamma: Option<f64>,
    /// Time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time.
    #[arg(long)]
    t_end: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a problem and write CSV history, probes and VTK snapshots.
    Run {
        config: PathBuf,
        #[command(flatten)]
        o: Overrides,
        /// Continue from a state file written by a previous run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Temporal convergence study of the full discretization.
    Converge {
        config: PathBuf,
        #[command(flatten)]
        o: Overrides,
        /// Comma-separated list of steps.
        #[arg(long, value_delimiter = ',')]
        dts: Option<Vec<f64>>,
        #[arg(long)]
        overkill: Option<f64>,
    },
    /// Step-size study of the constitutive update along a deformation path.
    MaterialPoint {
        config: Option<PathBuf>,
        #[command(flatten)]
        o: Overrides,
        #[arg(long, value_delimiter = ',')]
        dts: Option<Vec<f64>>,
        #[arg(long)]
        overkill: Option<f64>,
    },
    /// Finite-difference checks of the consistent tangents.
    VerifyTangent {
        config: Option<PathBuf>,
        #[command(flatten)]
        o: Overrides,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(path: &Path, o: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = parse_config(path).map_err(CliError::Config)?;
    apply(&mut cfg, o)?;
    Ok(cfg)
}

fn apply(cfg: &mut RunConfig, o: &Overrides) -> Result<(), CliError> {
    if let Some(s) = o.scheme {
        cfg.scheme = s;
    }
    if let Some(g) = o.gamma {
        cfg.gamma = g;
    }
    if let Some(dt) = o.dt {
        cfg.solver.dt = dt;
        cfg.material_point.t_end = cfg.material_point.t_end.max(dt);
    }
    if let Some(t) = o.t_end {
        cfg.solver.t_end = t;
        cfg.converge.t_end = t;
        cfg.material_point.t_end = t;
    }
    let mut problems = Vec::new();
    if let Err(e) = cfg.solver.validate() {
        problems.push(e.to_string());
    }
    if !(cfg.gamma >= 0.0) {
        problems.push(format!("gamma must be non-negative (got {})", cfg.gamma));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Config(visco_emc::config::ConfigError { messages: problems }))
    }
}

/// Configuration for subcommands that may run without a file.
fn standalone(o: &Overrides) -> RunConfig {
    RunConfig {
        mesh: visco_emc::config::MeshSource::Box { lengths: [1.0; 3], divisions: [1; 3] },
        material: default_material(),
        loads: Default::default(),
        solver: Default::default(),
        scheme: o.scheme.unwrap_or(SchemeKind::Scheme2),
        gamma: 0.0,
        z_cut: visco_core::integrators::DEFAULT_Z_CUT,
        output: Default::default(),
        converge: Default::default(),
        material_point: MaterialPointSpec::default(),
        verify: Default::default(),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, o, resume } => {
            let cfg = load(&config, &o)?;
            println!(
                "{}: {} steps of {} with dt = {}",
                config.display(),
                cfg.solver.n_steps(),
                cfg.scheme,
                cfg.solver.dt
            );
            let s = commands::run(&cfg, &o.out, resume.as_deref())?;
            println!(
                "completed {} steps, max |energy balance residual| {:.3e}, {} snapshot(s) in {}",
                s.steps,
                s.max_balance,
                s.snapshots.len(),
                o.out.display()
            );
        }
        Command::Converge { config, o, dts, overkill } => {
            let mut cfg = load(&config, &o)?;
            if let Some(d) = dts {
                cfg.converge.dts = d;
            }
            if let Some(k) = overkill {
                cfg.converge.overkill = k;
            }
            let table = commands::converge(&cfg, &o.out)?;
            print!("{}", commands::format_table(&table));
        }
        Command::MaterialPoint { config, o, dts, overkill } => {
            let mut cfg = match &config {
                Some(p) => load(p, &o)?,
                None => {
                    let mut c = standalone(&o);
                    apply(&mut c, &o)?;
                    c
                }
            };
            if let Some(d) = dts {
                cfg.material_point.dts = d;
            }
            if let Some(k) = overkill {
                cfg.material_point.overkill = k;
            }
            let table = commands::material_point(&cfg, &o.out)?;
            println!("{} along {}, overkill dt = {}", cfg.scheme, cfg.material_point.deformation, cfg.material_point.overkill);
            print!("{}", commands::format_table(&table));
        }
        Command::VerifyTangent { config, o, samples, tolerance, seed } => {
            let cfg = match &config {
                Some(p) => Some(load(p, &o)?),
                None => None,
            };
            let spec = cfg.as_ref().map(|c| c.verify.clone()).unwrap_or_default();
            let schemes = match (o.scheme, &cfg) {
                (Some(s), _) => vec![s],
                (None, Some(c)) => vec![c.scheme],
                (None, None) => vec![SchemeKind::Scheme1, SchemeKind::Scheme2, SchemeKind::Midpoint],
            };
            let tol = tolerance.unwrap_or(spec.tolerance);
            let reports = commands::verify_tangent(
                cfg.as_ref().map(|c| &c.material),
                &schemes,
                samples.unwrap_or(spec.samples),
                tol,
                seed.unwrap_or(spec.seed),
                o.gamma.or(cfg.as_ref().map(|c| c.gamma)).unwrap_or(0.0),
                cfg.as_ref().map_or(visco_core::integrators::DEFAULT_Z_CUT, |c| c.z_cut),
            );
            match reports {
                Ok(rs) => {
                    for r in rs {
                        println!("ok   {:<22} {:>4} sample(s), worst relative error {:.2e}", r.label, r.samples, r.worst);
                    }
                    println!("all tangents agree with finite differences to {tol:.1e}");
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
