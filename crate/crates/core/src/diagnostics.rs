//! Energy budgets, momenta, divergence norms and convergence rates.
//!
//! All integrals use the quadrature rule and interpolation of the assembly, so
//! the discrete energy identity can be checked at round-off level.

use crate::error::{Error, Result};
use crate::fem::assembly::{qp_kinematics, ElementLocal, FemProblem, FieldState};
use crate::kinematics::unimodular;
use crate::materials::gibbs_iso;
use crate::solver::StepRecord;
use crate::tensors::SymTensor2;

/// Energy quantities of one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBudget {
    /// Kinetic energy at `t_{n+1}`.
    pub kinetic: f64,
    /// Stored isochoric energy at `t_{n+1}`.
    pub potential: f64,
    /// `kinetic + potential` at `t_{n+1}`.
    pub h: f64,
    /// Same at `t_n`.
    pub h_old: f64,
    /// `½ Σ_α ∫ η^α |ΔΓ^α/dt|²`.
    pub d_phy: f64,
    /// `∫ γ J_{n+½} (∇V_{n+½} : F_{n+½}^{-T})²`.
    pub d_num: f64,
    /// Power of tractions and body forces at `V_{n+½}`.
    pub p_ext: f64,
    /// `H_{n+1} − H_n + (D_phy + D_num − P_ext) dt`.
    pub balance_residual: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MomentumRecord {
    pub linear: [f64; 3],
    pub angular: [f64; 3],
}

/// `∫ ρ0 |V|²/2`.
pub fn kinetic_energy(problem: &FemProblem, y: &FieldState) -> f64 {
    fold_qps(problem, y, y, 0.0, |acc, g, k, _| acc + 0.5 * problem.mat.rho0 * g.wdet * dot(&k.v_new, &k.v_new))
}

/// `∫ G_iso(C̃, Γ)` with the internal variables stored per quadrature point.
pub fn potential_energy(problem: &FemProblem, y: &FieldState, gammas: &[SymTensor2]) -> Result<f64> {
    let m = problem.mat.n_branches();
    let nqp = problem.space.nqp;
    let mut total = 0.0;
    for e in 0..problem.space.n_cells() {
        let loc = ElementLocal::gather(&problem.space, e, y, y);
        for (q, g) in problem.space.element_qps(e).iter().enumerate() {
            let k = qp_kinematics(g, &loc);
            let ct = unimodular(&k.f_np1.gram()).map_err(|_| Error::ElementInversion {
                element: e,
                point: q,
                jacobian: k.f_np1.det(),
            })?;
            let base = (e * nqp + q) * m;
            total += g.wdet * gibbs_iso(&ct, &gammas[base..base + m], &problem.mat);
        }
    }
    Ok(total)
}

/// Budget of the step `y_old → y_new` with mid-step time `t_mid`.
pub fn energy_budget(
    problem: &FemProblem,
    y_old: &FieldState,
    y_new: &FieldState,
    gammas_old: &[SymTensor2],
    gammas_new: &[SymTensor2],
    dt: f64,
    t_mid: f64,
) -> Result<EnergyBudget> {
    let kinetic = kinetic_energy(problem, y_new);
    let potential = potential_energy(problem, y_new, gammas_new)?;
    let h_old = kinetic_energy(problem, y_old) + potential_energy(problem, y_old, gammas_old)?;
    let m = problem.mat.n_branches();
    let d_phy = if m == 0 {
        0.0
    } else {
        let nqp = problem.space.nqp;
        let mut total = 0.0;
        for e in 0..problem.space.n_cells() {
            for (q, g) in problem.space.element_qps(e).iter().enumerate() {
                let base = (e * nqp + q) * m;
                for (a, b) in problem.mat.branches.iter().enumerate() {
                    let rate = (gammas_new[base + a] - gammas_old[base + a]).scale(1.0 / dt);
                    total += 0.5 * g.wdet * b.eta * rate.norm_sq();
                }
            }
        }
        total
    };
    let body = problem.loads.body_force(t_mid);
    let rho = problem.mat.rho0;
    let gamma = problem.gamma;
    let (d_num, p_body) = fold_qps(problem, y_new, y_old, (0.0, 0.0), |(dn, pb), g, k, _| {
        (dn + gamma * g.wdet * k.j_h * k.div_v * k.div_v, pb + rho * g.wdet * dot(&body, &k.v_h))
    });
    let fext = problem.surface_traction_vector(t_mid);
    let p_surf: f64 = fext.iter().enumerate().map(|(d, f)| f * 0.5 * (y_old.v[d] + y_new.v[d])).sum();
    let p_ext = p_surf + p_body;
    let h = kinetic + potential;
    Ok(EnergyBudget {
        kinetic,
        potential,
        h,
        h_old,
        d_phy,
        d_num,
        p_ext,
        balance_residual: h - h_old + (d_phy + d_num - p_ext) * dt,
    })
}

impl EnergyBudget {
    pub fn from_record(rec: &StepRecord<'_>) -> Result<EnergyBudget> {
        let t_mid = rec.report.time - 0.5 * rec.dt;
        energy_budget(rec.problem, rec.y_old, rec.y_new, rec.gammas_old, rec.gammas_new, rec.dt, t_mid)
    }
}

/// `L = ∫ ρ0 V`, `J = ∫ ρ0 (X + U) × V`.
pub fn momenta(problem: &FemProblem, y: &FieldState) -> MomentumRecord {
    let rho = problem.mat.rho0;
    fold_qps(problem, y, y, MomentumRecord::default(), |mut acc, g, k, _| {
        let w = rho * g.wdet;
        let x: [f64; 3] = std::array::from_fn(|i| g.x[i] + k.u_new[i]);
        let v = k.v_new;
        let c = [x[1] * v[2] - x[2] * v[1], x[2] * v[0] - x[0] * v[2], x[0] * v[1] - x[1] * v[0]];
        for i in 0..3 {
            acc.linear[i] += w * v[i];
            acc.angular[i] += w * c[i];
        }
        acc
    })
}

/// `‖∇_x · v‖` in `L²` of the current configuration:
/// `(∫ (∇V : F^{-T})² J dX)^{1/2}` with `F = I + ∇U`.
pub fn div_velocity_norm(problem: &FemProblem, y: &FieldState) -> f64 {
    // with y_old = y_new the mid-step quantities are those of y
    fold_qps(problem, y, y, 0.0, |acc, g, k, _| acc + g.wdet * k.j_h * k.div_v * k.div_v).sqrt()
}

fn fold_qps<T, F>(problem: &FemProblem, y_new: &FieldState, y_old: &FieldState, init: T, mut f: F) -> T
where
    F: FnMut(T, &crate::fem::space::QpGeom, &crate::fem::assembly::QpKinematics, usize) -> T,
{
    let mut acc = init;
    for e in 0..problem.space.n_cells() {
        let loc = ElementLocal::gather(&problem.space, e, y_new, y_old);
        for g in problem.space.element_qps(e) {
            let k = qp_kinematics(g, &loc);
            acc = f(acc, g, &k, e);
        }
    }
    acc
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Named vector of values sampled from a run.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub name: String,
    pub values: Vec<f64>,
}

impl FieldSample {
    pub fn new(name: &str, values: Vec<f64>) -> FieldSample {
        FieldSample { name: name.to_string(), values }
    }
}

/// Errors against a reference run and least-squares log-log slopes.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub fields: Vec<String>,
    /// Step sizes that produced a result.
    pub dts: Vec<f64>,
    /// `errors[i][f]`: max-norm error of field `f` at `dts[i]`.
    pub errors: Vec<Vec<f64>>,
    /// Slope per field, `NaN` with fewer than two positive errors.
    pub slopes: Vec<f64>,
    /// Runs that failed, with the reason.
    pub excluded: Vec<(f64, String)>,
}

impl ConvergenceTable {
    pub fn slope(&self, field: &str) -> Option<f64> {
        self.fields.iter().position(|f| f == field).map(|i| self.slopes[i])
    }
}

/// Runs `run(dt)` for every step size and compares against `run(dt_overkill)`.
///
/// # Errors
///
/// Fails if the reference run fails or a run returns fields that do not match
/// the reference layout.
pub fn convergence_study<F>(mut run: F, dt_list: &[f64], dt_overkill: f64) -> Result<ConvergenceTable>
where
    F: FnMut(f64) -> Result<Vec<FieldSample>>,
{
    let reference = run(dt_overkill)?;
    let fields: Vec<String> = reference.iter().map(|f| f.name.clone()).collect();
    let mut dts = Vec::new();
    let mut errors = Vec::new();
    let mut excluded = Vec::new();
    for &dt in dt_list {
        match run(dt) {
            Ok(sample) => {
                if sample.len() != reference.len()
                    || sample.iter().zip(&reference).any(|(a, b)| a.name != b.name || a.values.len() != b.values.len())
                {
                    return Err(Error::InvalidInput(format!("run at dt = {dt} returned a different field layout")));
                }
                let row: Vec<f64> = sample
                    .iter()
                    .zip(&reference)
                    .map(|(a, b)| a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
                    .collect();
                dts.push(dt);
                errors.push(row);
            }
            Err(e) => excluded.push((dt, e.to_string())),
        }
    }
    let slopes = (0..fields.len())
        .map(|f| {
            let pts: Vec<(f64, f64)> =
                dts.iter().zip(&errors).filter(|(_, e)| e[f] > 0.0).map(|(dt, e)| (dt.ln(), e[f].ln())).collect();
            loglog_fit(&pts)
        })
        .collect();
    Ok(ConvergenceTable { fields, dts, errors, slopes, excluded })
}

/// Least-squares slope of `y` against `x`.
pub fn loglog_fit(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Signed area enclosed by a polyline, closed from its last point back to
/// the first.
pub fn loop_area(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    (0..n).map(|i| {
        let j = (i + 1) % n;
        xs[i] * ys[j] - xs[j] * ys[i]
    }).sum::<f64>()
        * 0.5
}
