//! Subcommand drivers.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use visco_core::diagnostics::{
    convergence_study, div_velocity_norm, momenta, ConvergenceTable, EnergyBudget, FieldSample,
};
use visco_core::fem::{generate_box_mesh, DirichletBc, FemProblem, LoadSpec, TimeFn, Traction};
use visco_core::integrators::{algorithmic_stress, algorithmic_tangent, material_point_run, SchemeKind};
use visco_core::kinematics::{unimodular, StepPair};
use visco_core::materials::{conjugate_q, BranchKind, EquilibriumModel, MaterialParams, ViscoBranch};
use visco_core::solver::{Simulation, SolverConfig};
use visco_core::tensors::{SymTensor2, Tensor2, WEIGHTS};

use crate::config::{ConfigError, RunConfig};
use crate::output::{write_vtk_file, CsvWriter, HistoryRow, HISTORY_HEADER};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    NonConvergence(String),
    Verification(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::NonConvergence(m) | CliError::Verification(m) | CliError::Other(m) => f.write_str(m),
        }
    }
}

impl From<visco_core::Error> for CliError {
    fn from(e: visco_core::Error) -> Self {
        match e {
            visco_core::Error::NonConvergence { .. } => CliError::NonConvergence(e.to_string()),
            visco_core::Error::InvalidInput(_) | visco_core::Error::UnknownSet(_) => {
                CliError::Config(ConfigError { messages: vec![e.to_string()] })
            }
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("i/o error: {e}"))
    }
}

type CliResult<T> = Result<T, CliError>;

pub fn build_problem(cfg: &RunConfig) -> CliResult<FemProblem> {
    let mesh = cfg.mesh.build()?;
    Ok(FemProblem::new(mesh, cfg.material.clone(), cfg.loads.clone(), cfg.scheme, cfg.gamma, cfg.z_cut)?)
}

fn prepare_dir(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| CliError::Other(format!("cannot create {}: {e}", out.display())))
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub steps: usize,
    pub max_balance: f64,
    pub snapshots: Vec<PathBuf>,
}

/// Time integration with per-step diagnostics, probes and VTK snapshots.
pub fn run(cfg: &RunConfig, out: &Path, resume: Option<&Path>) -> CliResult<RunSummary> {
    prepare_dir(out)?;
    let mut sim = Simulation::new(build_problem(cfg)?, cfg.solver.clone())?;
    if let Some(state) = resume {
        let f = File::open(state).map_err(|e| CliError::Other(format!("cannot open {}: {e}", state.display())))?;
        sim.load_state(BufReader::new(f))?;
    }
    let mut history = CsvWriter::create(&out.join(&cfg.output.csv), &HISTORY_HEADER)?;
    let probes: Vec<(usize, [f64; 3])> = cfg
        .output
        .probes
        .iter()
        .map(|&x| {
            sim.problem.space.locate(&sim.problem.mesh, x).ok_or_else(|| {
                CliError::Config(ConfigError { messages: vec![format!("probe {x:?} lies outside the mesh")] })
            })
        })
        .collect::<CliResult<_>>()?;
    let mut probe_csv = if probes.is_empty() {
        None
    } else {
        let mut header = vec!["t".to_string()];
        for i in 0..probes.len() {
            header.extend(["ux", "uy", "uz", "p"].map(|c| format!("{c}_{i}")));
        }
        let refs: Vec<&str> = header.iter().map(String::as_str).collect();
        Some(CsvWriter::create(&out.join("probes.csv"), &refs)?)
    };

    let dt = cfg.solver.dt;
    let wants_snapshot = |step: usize, t: f64| {
        let every = cfg.output.snapshot_every;
        (every > 0 && step % every == 0) || cfg.output.snapshot_times.iter().any(|&s| (s - t).abs() < 0.5 * dt)
    };
    let mut snapshots = Vec::new();
    if wants_snapshot(sim.step, sim.time()) {
        let path = out.join(format!("snapshot_{:05}.vtk", sim.step));
        write_vtk_file(&path, &sim.problem, &sim.state, sim.time())?;
        snapshots.push(path);
    }

    let mut max_balance: f64 = 0.0;
    let mut steps = 0;
    let n_steps = cfg.solver.n_steps();
    while sim.step < n_steps {
        let mut io_err = None;
        sim.advance(|rec| {
            let budget = EnergyBudget::from_record(rec)?;
            max_balance = max_balance.max(budget.balance_residual.abs());
            let row = HistoryRow {
                t: rec.report.time,
                momenta: momenta(rec.problem, rec.y_new),
                divnorm: div_velocity_norm(rec.problem, rec.y_new),
                newton_iters: rec.report.iterations,
                final_residual: rec.report.final_residual(),
                budget,
            };
            let mut write = || -> std::io::Result<()> {
                history.history(&row)?;
                if let Some(csv) = probe_csv.as_mut() {
                    let mut v = vec![rec.report.time];
                    for &(e, xi) in &probes {
                        let (u, p) = rec.problem.space.evaluate(e, xi, &rec.y_new.u, &rec.y_new.p);
                        v.extend(u);
                        v.push(p);
                    }
                    csv.row(&v)?;
                }
                Ok(())
            };
            if let Err(e) = write() {
                io_err = Some(e);
            }
            Ok(())
        })?;
        if let Some(e) = io_err {
            return Err(e.into());
        }
        steps += 1;
        if wants_snapshot(sim.step, sim.time()) {
            let path = out.join(format!("snapshot_{:05}.vtk", sim.step));
            write_vtk_file(&path, &sim.problem, &sim.state, sim.time())?;
            snapshots.push(path);
        }
    }
    history.flush()?;
    if let Some(csv) = probe_csv.as_mut() {
        csv.flush()?;
    }
    let mut w = BufWriter::new(File::create(out.join("final_state.txt"))?);
    sim.save_state(&mut w)?;
    w.flush()?;
    Ok(RunSummary { steps, max_balance, snapshots })
}

fn check_divides(t_end: f64, dts: &[f64]) -> CliResult<()> {
    let bad: Vec<String> = dts
        .iter()
        .filter(|&&dt| ((t_end / dt) - (t_end / dt).round()).abs() > 1e-8)
        .map(|dt| format!("step {dt} does not divide t_end = {t_end}"))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Config(ConfigError { messages: bad }))
    }
}

fn write_table(path: &Path, table: &ConvergenceTable) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "field,dt,error")?;
    for (k, f) in table.fields.iter().enumerate() {
        for (dt, errs) in table.dts.iter().zip(&table.errors) {
            writeln!(w, "{f},{dt:e},{:e}", errs[k])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Human-readable summary of a convergence table.
pub fn format_table(table: &ConvergenceTable) -> String {
    let mut s = format!("{:>10}", "dt");
    for f in &table.fields {
        s += &format!(" {f:>12}");
    }
    s.push('\n');
    for (i, dt) in table.dts.iter().enumerate() {
        s += &format!("{dt:>10.3e}");
        for e in &table.errors[i] {
            s += &format!(" {e:>12.4e}");
        }
        s.push('\n');
    }
    s += &format!("{:>10}", "slope");
    for sl in &table.slopes {
        s += &format!(" {sl:>12.3}");
    }
    s.push('\n');
    s
}

/// Temporal convergence of the full discretization against an overkill run.
pub fn converge(cfg: &RunConfig, out: &Path) -> CliResult<ConvergenceTable> {
    prepare_dir(out)?;
    let spec = &cfg.converge;
    let mut all = spec.dts.clone();
    all.push(spec.overkill);
    check_divides(spec.t_end, &all)?;
    let problem = build_problem(cfg)?;
    let run = |dt: f64| -> visco_core::Result<Vec<FieldSample>> {
        let solver = SolverConfig { dt, t_end: spec.t_end, ..cfg.solver.clone() };
        let mut sim = Simulation::new(problem.clone(), solver)?;
        sim.run(|_| Ok(()))?;
        let gammas: Vec<f64> = sim.qp.committed.iter().flat_map(|g| g.0).collect();
        Ok(vec![
            FieldSample::new("U", sim.state.u.clone()),
            FieldSample::new("V", sim.state.v.clone()),
            FieldSample::new("P", sim.state.p.clone()),
            FieldSample::new("Gamma", gammas),
        ])
    };
    let table = convergence_study(run, &spec.dts, spec.overkill)?;
    write_table(&out.join("convergence.csv"), &table)?;
    Ok(table)
}

/// Material used by `material-point` and `verify-tangent` when no
/// configuration is given.
pub fn default_material() -> MaterialParams {
    let eq = EquilibriumModel::new(1.0, 0.5).expect("valid constants");
    let branches = vec![
        ViscoBranch::new(BranchKind::Hs, 2.0, 0.3, 1.0, &eq).expect("valid branch"),
        ViscoBranch::new(BranchKind::Mipc, 1.5, 0.2, 0.8, &eq).expect("valid branch"),
    ];
    MaterialParams::new(1.0, eq, branches).expect("valid material")
}

/// Step-size study along a prescribed deformation path, plus the trajectory
/// at the finest listed step.
pub fn material_point(cfg: &RunConfig, out: &Path) -> CliResult<ConvergenceTable> {
    prepare_dir(out)?;
    let spec = &cfg.material_point;
    let mat = &cfg.material;
    if mat.branches.is_empty() {
        return Err(CliError::Config(ConfigError { messages: vec!["material-point needs at least one [branch]".into()] }));
    }
    let mut all = spec.dts.clone();
    all.push(spec.overkill);
    check_divides(spec.t_end, &all)?;
    let path = |t: f64| spec.deformation.gradient(t);
    let grid = |dt: f64| {
        let n = (spec.t_end / dt).round() as usize;
        (0..=n).map(|i| spec.t_end * i as f64 / n as f64).collect::<Vec<_>>()
    };
    let run = |dt: f64| -> visco_core::Result<Vec<FieldSample>> {
        let traj = material_point_run(path, &grid(dt), &mat.rest_gammas(), cfg.scheme, mat, cfg.z_cut)?;
        let last = traj.last().expect("non-empty trajectory");
        let ct = unimodular(&last.c)?;
        let mut samples = Vec::new();
        for (a, b) in mat.branches.iter().enumerate() {
            samples.push(FieldSample::new(&format!("Gamma{}", a + 1), last.gammas[a].0.to_vec()));
            let q = conjugate_q(&ct, &last.gammas[a], b, &mat.equilibrium);
            samples.push(FieldSample::new(&format!("Q{}", a + 1), q.0.to_vec()));
        }
        Ok(samples)
    };
    let table = convergence_study(run, &spec.dts, spec.overkill)?;
    write_table(&out.join("material_point_rates.csv"), &table)?;

    let finest = spec.dts.iter().copied().fold(f64::INFINITY, f64::min);
    let traj = material_point_run(path, &grid(finest), &mat.rest_gammas(), cfg.scheme, mat, cfg.z_cut)?;
    let mut csv = CsvWriter::create(
        &out.join("material_point.csv"),
        &["t", "G_iso", "Upsilon", "dissipation", "directionality_residual", "S_enh_norm", "S11", "S22", "S33", "S12", "S23", "S13"],
    )?;
    for s in &traj {
        let mut row = vec![s.t, s.g_iso, s.upsilon, s.dissipation, s.directionality_residual, s.s_enh.norm()];
        row.extend(s.s_alg.0);
        csv.row(&row)?;
    }
    csv.flush()?;
    Ok(table)
}

#[derive(Clone, Debug)]
pub struct TangentReport {
    pub label: String,
    pub samples: usize,
    pub worst: f64,
}

fn random_f(rng: &mut StdRng, eps: f64) -> Tensor2 {
    loop {
        let f = Tensor2(std::array::from_fn(|i| std::array::from_fn(|j| (i == j) as u8 as f64 + rng.gen_range(-eps..eps))));
        if f.det() > 0.2 {
            return f;
        }
    }
}

/// Worst relative deviation between the consistent material tangent and
/// central differences of the algorithmic stress.
fn material_fd(scheme: SchemeKind, mat: &MaterialParams, rng: &mut StdRng, z_cut: f64) -> CliResult<f64> {
    let fa = random_f(rng, 0.3);
    let fb = fa + random_f(rng, 0.1) - Tensor2::identity();
    let pair = StepPair::from_c(&fa.gram(), &fb.gram(), &(fa + fb).scale(0.5))?;
    let g_n: Vec<SymTensor2> = (0..mat.n_branches())
        .map(|_| SymTensor2::identity() + SymTensor2(std::array::from_fn(|_| rng.gen_range(-0.2..0.2))))
        .collect();
    let dt = rng.gen_range(1e-2..1e-1) * mat.branches.first().map_or(1.0, |b| b.relaxation_time());
    let tangent = algorithmic_tangent(scheme, &pair, &g_n, dt, mat, z_cut)?;
    let scale = tangent.d_np1.max_abs();
    let h = 1e-6 * pair.c_np1.max_abs();
    let mut worst: f64 = 0.0;
    for j in 0..6 {
        let stress = |sign: f64| -> CliResult<SymTensor2> {
            let mut c = pair.c_np1;
            c.0[j] += sign * h;
            let p = StepPair::from_c(&pair.c_n, &c, &pair.f_half)?;
            Ok(algorithmic_stress(scheme, &p, &g_n, dt, mat, z_cut)?.s_alg)
        };
        let fd = (stress(1.0)? - stress(-1.0)?).scale(1.0 / (2.0 * h));
        for i in 0..6 {
            worst = worst.max((fd.0[i] - 0.5 * WEIGHTS[j] * tangent.d_np1.0[i][j]).abs() / scale);
        }
    }
    Ok(worst)
}

/// Worst relative deviation between the assembled tangent of one clamped
/// element and central differences of its residual.
fn element_fd(scheme: SchemeKind, mat: &MaterialParams, rng: &mut StdRng, gamma: f64) -> CliResult<f64> {
    let mut loads = LoadSpec::default();
    loads.dirichlet.push(DirichletBc { set: "z0".into(), components: vec![0, 1, 2], value: 0.0 });
    loads.tractions.push(Traction { set: "x1".into(), direction: [0.3, 0.1, -0.2], time: TimeFn::Const(1.0) });
    let mesh = generate_box_mesh([1.0, 0.8, 1.2], [1, 1, 1])?;
    let p = FemProblem::new(mesh, mat.clone(), loads, scheme, gamma, visco_core::integrators::DEFAULT_Z_CUT)?;
    let dt = 0.05 * mat.branches.first().map_or(1.0, |b| b.relaxation_time());
    let nv = p.space.n_vdofs();
    let mut y_old = p.initial_state();
    let mut y_new = y_old.clone();
    for d in (0..nv).filter(|&d| !p.constrained[d]) {
        y_old.u[d] = rng.gen_range(-0.05..0.05);
        y_old.v[d] = rng.gen_range(-0.2..0.2);
        y_new.v[d] = y_old.v[d] + rng.gen_range(-0.2..0.2);
        y_new.u[d] = y_old.u[d] + 0.5 * dt * (y_old.v[d] + y_new.v[d]);
    }
    let p_scale = mat.equilibrium.c1 + mat.equilibrium.c2;
    for i in 0..y_new.p.len() {
        y_old.p[i] = rng.gen_range(-0.5..0.5) * p_scale;
        y_new.p[i] = y_old.p[i] + rng.gen_range(-0.5..0.5) * p_scale;
    }
    let mut qp = p.rest_qp_states();
    for g in qp.committed.iter_mut() {
        *g = SymTensor2::identity() + SymTensor2(std::array::from_fn(|_| rng.gen_range(-0.05..0.05)));
    }
    let (_, vals) = p.assemble_system(&y_new, &y_old, &mut qp, dt, 0.0)?;
    let k = p.pattern().to_dense(&vals);
    let n = p.space.n_dofs();
    let free: Vec<usize> = (0..n).filter(|&d| d >= nv || !p.constrained[d]).collect();
    let mut fd = vec![vec![0.0; n]; n];
    for &col in &free {
        let h = if col < nv { 1e-6 * y_new.v.iter().fold(1e-3_f64, |a, v| a.max(v.abs())) } else { 1e-6 * p_scale };
        let eval = |sign: f64| -> CliResult<Vec<f64>> {
            let mut y = y_new.clone();
            if col < nv {
                y.v[col] += sign * h;
                y.u[col] += sign * 0.5 * dt * h;
            } else {
                y.p[col - nv] += sign * h;
            }
            let mut q = qp.clone();
            Ok(p.assemble_residuals(&y, &y_old, &mut q, dt, 0.0)?.stacked())
        };
        let (rp, rm) = (eval(1.0)?, eval(-1.0)?);
        for &row in &free {
            fd[row][col] = (rp[row] - rm[row]) / (2.0 * h);
        }
    }
    // Velocity and pressure columns carry different units; compare blockwise.
    let block = |d: usize| usize::from(d >= nv);
    let mut scale = [[0.0_f64; 2]; 2];
    for &r in &free {
        for &c in &free {
            let s = &mut scale[block(r)][block(c)];
            *s = s.max(k[r][c].abs());
        }
    }
    let mut worst: f64 = 0.0;
    for &r in &free {
        for &c in &free {
            let s = scale[block(r)][block(c)];
            if s > 0.0 {
                worst = worst.max((fd[r][c] - k[r][c]).abs() / s);
            }
        }
    }
    Ok(worst)
}

/// Finite-difference checks of the material and assembled tangents.
///
/// With `material = None` every sample draws a fresh random material with one
/// branch of each kind.
pub fn verify_tangent(
    material: Option<&MaterialParams>,
    schemes: &[SchemeKind],
    samples: usize,
    tolerance: f64,
    seed: u64,
    gamma: f64,
    z_cut: f64,
) -> CliResult<Vec<TangentReport>> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut reports = Vec::new();
    let draw = |rng: &mut StdRng| -> MaterialParams {
        match material {
            Some(m) => m.clone(),
            None => {
                let eq = EquilibriumModel::new(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)).expect("positive");
                let branches = [BranchKind::Hs, BranchKind::Mipc]
                    .map(|k| {
                        ViscoBranch::new(k, rng.gen_range(0.5..2.0), rng.gen_range(0.05..1.0), rng.gen_range(0.5..1.5), &eq)
                            .expect("positive")
                    })
                    .to_vec();
                MaterialParams::new(1.0, eq, branches).expect("valid")
            }
        }
    };
    for &scheme in schemes {
        if scheme != SchemeKind::Midpoint {
            let mut worst: f64 = 0.0;
            for _ in 0..samples {
                let mat = draw(&mut rng);
                worst = worst.max(material_fd(scheme, &mat, &mut rng, z_cut)?);
            }
            reports.push(TangentReport { label: format!("{scheme} material"), samples, worst });
        }
        let mat = draw(&mut rng);
        let worst = element_fd(scheme, &mat, &mut rng, gamma)?;
        reports.push(TangentReport { label: format!("{scheme} element"), samples: 1, worst });
    }
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !(r.worst <= tolerance))
        .map(|r| format!("{}: {:.2e} exceeds {tolerance:.1e}", r.label, r.worst))
        .collect();
    if failed.is_empty() {
        Ok(reports)
    } else {
        Err(CliError::Verification(failed.join("; ")))
    }
}
