//! Predictor multi-corrector time stepping.
//!
//! The predictor `(U_n + dt V_n, P_n, V_n)` satisfies the kinematic relation
//! `U_{n+1} − U_n = dt (V_n + V_{n+1})/2`, and each Newton correction only
//! solves for `(ΔV, ΔP)` with `ΔU = (dt/2) ΔV`, so that relation is kept for
//! every iterate.

use std::io::{BufRead, Write};
use std::time::Instant;

use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::linalg::solvers::Solve;

use crate::error::{Error, Result};
use crate::fem::assembly::{FemProblem, FieldState, QpStates, SparsePattern};
use crate::tensors::SymTensor2;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    /// Final time.
    pub t_end: f64,
    /// Relative stopping tolerance on `‖R‖/‖R_0‖`.
    pub tol_r: f64,
    /// Absolute stopping tolerance on `‖R‖`.
    pub tol_a: f64,
    /// Maximum number of corrector passes per step.
    pub l_max: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { dt: 0.1, t_end: 1.0, tol_r: 1e-10, tol_a: 1e-10, l_max: 10 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            bad.push(format!("dt must be positive (got {})", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            bad.push(format!("T must be non-negative (got {})", self.t_end));
        }
        if !(self.tol_r > 0.0) || !(self.tol_a > 0.0) {
            bad.push(format!("tolerances must be positive (got tol_R = {}, tol_A = {})", self.tol_r, self.tol_a));
        }
        if self.l_max == 0 {
            bad.push("l_max must be at least 1".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(bad.join("; ")))
        }
    }

    /// Number of steps to reach `t_end`, rounding to the nearest integer.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub step: usize,
    /// Time at the end of the step.
    pub time: f64,
    /// Corrector passes performed.
    pub iterations: usize,
    /// `‖R‖` before each corrector and after the last one.
    pub residual_norms: Vec<f64>,
    pub converged: bool,
    /// Seconds spent in the step.
    pub wall_time: f64,
    /// Largest `‖(U_{n+1} − U_n)/dt − (V_n + V_{n+1})/2‖∞` over all iterates.
    pub rk_max: f64,
}

impl StepReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_norms.last().copied().unwrap_or(0.0)
    }
}

/// Sparse LU with the symbolic analysis reused across factorizations.
#[derive(Clone, Debug)]
pub struct LinearSolver {
    symbolic: SymbolicLu<usize>,
    n: usize,
}

impl LinearSolver {
    pub fn new(pattern: &SparsePattern) -> Result<LinearSolver> {
        faer::set_global_parallelism(faer::Par::Seq);
        let sym = SymbolicSparseColMatRef::new_checked(pattern.n, pattern.n, &pattern.col_ptr, None, &pattern.row_idx);
        let symbolic =
            SymbolicLu::try_new(sym).map_err(|e| Error::LinearSolve(format!("symbolic analysis failed: {e:?}")))?;
        Ok(LinearSolver { symbolic, n: pattern.n })
    }

    /// Solves `K x = rhs` in place.
    pub fn solve(&self, pattern: &SparsePattern, values: &[f64], rhs: &mut [f64]) -> Result<()> {
        let sym = SymbolicSparseColMatRef::new_checked(self.n, self.n, &pattern.col_ptr, None, &pattern.row_idx);
        let mat = SparseColMatRef::new(sym, values);
        let lu = Lu::try_new_with_symbolic(self.symbolic.clone(), mat)
            .map_err(|e| Error::LinearSolve(format!("factorization failed: {e:?}")))?;
        lu.solve_in_place(faer::MatMut::from_column_major_slice_mut(rhs, self.n, 1));
        if rhs.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::LinearSolve(format!("singular system of size {} (non-finite solution)", self.n)))
        }
    }
}

/// `(U_n + dt V_n, P_n, V_n)`.
pub fn predictor(y_n: &FieldState, dt: f64) -> FieldState {
    let mut y = FieldState {
        u: y_n.u.iter().zip(&y_n.v).map(|(u, v)| u + dt * v).collect(),
        v: y_n.v.clone(),
        p: y_n.p.clone(),
    };
    sync_velocity(&mut y, y_n, dt);
    y
}

/// Re-derives `V_{n+1} = 2 (U_{n+1} − U_n)/dt − V_n` from the stored
/// displacement, so the rounding of `U` does not show up in the kinematic
/// residual.
fn sync_velocity(y: &mut FieldState, y_n: &FieldState, dt: f64) {
    for d in 0..y.v.len() {
        y.v[d] = 2.0 * ((y.u[d] - y_n.u[d]) / dt) - y_n.v[d];
    }
}

/// `‖(U_{n+1} − U_n)/dt − (V_n + V_{n+1})/2‖∞`.
pub fn kinematic_residual(y_new: &FieldState, y_old: &FieldState, dt: f64) -> f64 {
    (0..y_new.u.len())
        .map(|d| ((y_new.u[d] - y_old.u[d]) / dt - 0.5 * (y_old.v[d] + y_new.v[d])).abs())
        .fold(0.0, f64::max)
}

/// Applies a Newton increment `[ΔV | ΔP]`, with `ΔU = (dt/2) ΔV`.
pub fn apply_increment(y: &mut FieldState, y_n: &FieldState, delta: &[f64], dt: f64) {
    let nv = y.v.len();
    for d in 0..nv {
        y.u[d] += 0.5 * dt * delta[d];
    }
    sync_velocity(y, y_n, dt);
    for (p, dp) in y.p.iter_mut().zip(&delta[nv..]) {
        *p += dp;
    }
}

/// True when an update moved no entry by more than a few units in the last
/// place of the field's largest entry.
fn at_round_off(before: &[f64], after: &[f64]) -> bool {
    let scale = before.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let change = before.iter().zip(after).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
    scale > 0.0 && change <= 8.0 * f64::EPSILON * scale
}

/// One corrector pass: assembles and solves the linearized system at `y`,
/// updates `y` in place and returns the residual norm before the update.
pub fn newton_correct(
    problem: &FemProblem,
    lin: &LinearSolver,
    y: &mut FieldState,
    y_n: &FieldState,
    qp: &mut QpStates,
    dt: f64,
    t_mid: f64,
) -> Result<f64> {
    let (r, k) = problem.assemble_system(y, y_n, qp, dt, t_mid)?;
    let mut rhs: Vec<f64> = r.stacked().iter().map(|x| -x).collect();
    lin.solve(problem.pattern(), &k, &mut rhs)?;
    apply_increment(y, y_n, &rhs, dt);
    Ok(r.norm())
}

/// Advances one step from `t_n = step · dt`. On convergence the trial internal
/// variables are committed.
pub fn advance_step(
    problem: &FemProblem,
    lin: &LinearSolver,
    cfg: &SolverConfig,
    y_n: &FieldState,
    qp: &mut QpStates,
    step: usize,
) -> Result<(FieldState, StepReport)> {
    let start = Instant::now();
    let dt = cfg.dt;
    let t_n = step as f64 * dt;
    let t_mid = t_n + 0.5 * dt;
    let mut y = predictor(y_n, dt);
    let mut rk_max = kinematic_residual(&y, y_n, dt);
    let mut norms = Vec::new();
    let mut r0 = None;
    let mut iterations = 0;
    let mut u_frozen = false;
    let converged = loop {
        let r = problem.assemble_residuals(&y, y_n, qp, dt, t_mid)?;
        let norm = r.norm();
        norms.push(norm);
        let r0v = *r0.get_or_insert(norm);
        if norm <= cfg.tol_a || norm <= cfg.tol_r * r0v {
            break true;
        }
        // The last correction could not move U, so V and the inertia term are
        // fixed too; the remaining residual is their round-off.
        if u_frozen && norm > 0.5 * norms[norms.len() - 2] {
            break true;
        }
        if iterations == cfg.l_max {
            break false;
        }
        let k = problem.assemble_tangent(&y, y_n, qp, dt, t_mid)?;
        let mut rhs: Vec<f64> = r.stacked().iter().map(|x| -x).collect();
        lin.solve(problem.pattern(), &k, &mut rhs)?;
        let u_prev = y.u.clone();
        apply_increment(&mut y, y_n, &rhs, dt);
        rk_max = rk_max.max(kinematic_residual(&y, y_n, dt));
        iterations += 1;
        u_frozen = at_round_off(&u_prev, &y.u);
    };
    let report = StepReport {
        step: step + 1,
        time: (step + 1) as f64 * dt,
        iterations,
        residual_norms: norms,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
        rk_max,
    };
    if !converged {
        return Err(Error::NonConvergence {
            step: step + 1,
            time: report.time,
            residual: report.final_residual(),
            iterations,
        });
    }
    qp.commit();
    Ok((y, report))
}

/// Everything an observer sees after an accepted step.
pub struct StepRecord<'a> {
    pub problem: &'a FemProblem,
    pub y_old: &'a FieldState,
    pub y_new: &'a FieldState,
    /// Internal variables at `t_n`.
    pub gammas_old: &'a [SymTensor2],
    /// Internal variables at `t_{n+1}`.
    pub gammas_new: &'a [SymTensor2],
    pub dt: f64,
    pub report: &'a StepReport,
}

/// A discretized problem together with its current state.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub problem: FemProblem,
    pub cfg: SolverConfig,
    pub state: FieldState,
    pub qp: QpStates,
    /// Number of completed steps; the current time is `step · dt`.
    pub step: usize,
    lin: LinearSolver,
}

impl Simulation {
    pub fn new(problem: FemProblem, cfg: SolverConfig) -> Result<Simulation> {
        cfg.validate()?;
        let lin = LinearSolver::new(problem.pattern())?;
        let state = problem.initial_state();
        let qp = problem.rest_qp_states();
        Ok(Simulation { problem, cfg, state, qp, step: 0, lin })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.cfg.dt
    }

    /// Advances one step and hands the step to `observer`.
    pub fn advance<F>(&mut self, mut observer: F) -> Result<StepReport>
    where
        F: FnMut(&StepRecord<'_>) -> Result<()>,
    {
        let gammas_old = self.qp.committed.clone();
        let (y_new, report) = advance_step(&self.problem, &self.lin, &self.cfg, &self.state, &mut self.qp, self.step)?;
        observer(&StepRecord {
            problem: &self.problem,
            y_old: &self.state,
            y_new: &y_new,
            gammas_old: &gammas_old,
            gammas_new: &self.qp.committed,
            dt: self.cfg.dt,
            report: &report,
        })?;
        self.state = y_new;
        self.step += 1;
        Ok(report)
    }

    /// Marches until `cfg.t_end`; returns one report per step.
    pub fn run<F>(&mut self, mut observer: F) -> Result<Vec<StepReport>>
    where
        F: FnMut(&StepRecord<'_>) -> Result<()>,
    {
        let mut reports = Vec::new();
        while self.step < self.cfg.n_steps() {
            reports.push(self.advance(&mut observer)?);
        }
        Ok(reports)
    }

    /// Writes the step counter, fields and committed internal variables as
    /// text with round-trip float formatting.
    pub fn save_state<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(e.to_string());
        writeln!(w, "visco-state 1").map_err(io)?;
        writeln!(w, "step {}", self.step).map_err(io)?;
        let mut block = |name: &str, vals: &mut dyn Iterator<Item = f64>| -> Result<()> {
            let vals: Vec<String> = vals.map(|x| format!("{x:?}")).collect();
            writeln!(w, "{name} {}", vals.len()).map_err(io)?;
            writeln!(w, "{}", vals.join(" ")).map_err(io)
        };
        block("u", &mut self.state.u.iter().copied())?;
        block("v", &mut self.state.v.iter().copied())?;
        block("p", &mut self.state.p.iter().copied())?;
        block("gamma", &mut self.qp.committed.iter().flat_map(|g| g.0))?;
        Ok(())
    }

    /// Restores a state written by [`Simulation::save_state`] into a
    /// simulation built from the same problem.
    pub fn load_state<R: BufRead>(&mut self, r: R) -> Result<()> {
        let bad = |msg: &str| Error::InvalidInput(format!("bad state file: {msg}"));
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines.next().ok_or_else(|| bad("unexpected end of file"))?.map_err(|e| Error::Io(e.to_string()))
        };
        if next()?.trim() != "visco-state 1" {
            return Err(bad("missing header"));
        }
        let step_line = next()?;
        let step = step_line
            .strip_prefix("step ")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| bad("missing step"))?;
        let mut read_block = |name: &str, len: usize| -> Result<Vec<f64>> {
            let head = next()?;
            let mut it = head.split_whitespace();
            if it.next() != Some(name) || it.next().and_then(|n| n.parse::<usize>().ok()) != Some(len) {
                return Err(bad(&format!("expected block '{name}' of length {len}")));
            }
            let vals: Vec<f64> = next()?
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| bad(&format!("bad number '{t}'"))))
                .collect::<Result<_>>()?;
            if vals.len() != len {
                return Err(bad(&format!("block '{name}' has {} values, expected {len}", vals.len())));
            }
            Ok(vals)
        };
        let u = read_block("u", self.state.u.len())?;
        let v = read_block("v", self.state.v.len())?;
        let p = read_block("p", self.state.p.len())?;
        let g = read_block("gamma", 6 * self.qp.committed.len())?;
        self.state = FieldState { u, v, p };
        for (k, t) in self.qp.committed.iter_mut().enumerate() {
            t.0.copy_from_slice(&g[6 * k..6 * k + 6]);
        }
        self.qp.trial.clone_from(&self.qp.committed);
        self.step = step;
        Ok(())
    }
}
