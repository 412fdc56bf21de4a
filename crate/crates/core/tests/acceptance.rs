//! Acceptance suite: one line per criterion, non-zero exit status on failure.
//!
//! Pass criterion names (or prefixes) as arguments to run a subset, e.g.
//! `cargo test -p visco-core --test acceptance -- c6 c7`.

use std::process::ExitCode;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use visco_core::diagnostics::{
    convergence_study, div_velocity_norm, loop_area, momenta, ConvergenceTable, EnergyBudget, FieldSample,
    MomentumRecord,
};
use visco_core::fem::{
    generate_box_mesh, generate_lblock_mesh, DirichletBc, FemProblem, LBlockDims, LBlockDivisions, LoadSpec, TimeFn,
    Traction,
};
use visco_core::integrators::{
    algorithmic_stress, algorithmic_tangent, material_point_run, q_alg, update_gammas, SchemeKind, DEFAULT_Z_CUT,
};
use visco_core::kinematics::{unimodular, StepPair};
use visco_core::materials::{
    conjugate_q, gibbs_iso, upsilon, BranchKind, EquilibriumModel, MaterialParams, ViscoBranch,
};
use visco_core::solver::{Simulation, SolverConfig, StepReport};
use visco_core::tensors::{ddot, SymTensor2, Tensor2, WEIGHTS};

type Check = std::result::Result<String, String>;

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------------------------------------------------------------- problems

fn lblock_material() -> MaterialParams {
    let c1 = 25_000.0 / 6.0;
    let eq = EquilibriumModel::new(c1, c1).unwrap();
    let b = ViscoBranch::new(BranchKind::Mipc, c1, 0.1 * c1, 1.0, &eq).unwrap();
    MaterialParams::new(1e3, eq, vec![b]).unwrap()
}

fn lblock_loads() -> LoadSpec {
    let hat = TimeFn::Hat { peak: 2.5, end: 5.0 };
    LoadSpec {
        body: None,
        tractions: vec![
            Traction { set: "H1".into(), direction: [-250.0, 100.0, -300.0], time: hat },
            Traction { set: "H2".into(), direction: [150.0, -250.0, 350.0], time: hat },
        ],
        dirichlet: vec![],
    }
}

/// Desk-scale L-block: 48 cells.
fn lblock_problem(scheme: SchemeKind, gamma: f64) -> FemProblem {
    let div = LBlockDivisions { width: 2, arm: 3, thickness: 3 };
    let mesh = generate_lblock_mesh(LBlockDims::default(), div).unwrap();
    FemProblem::new(mesh, lblock_material(), lblock_loads(), scheme, gamma, DEFAULT_Z_CUT).unwrap()
}

fn shear_material() -> MaterialParams {
    let c1 = 625.72e3 / 6.0;
    let mu = 536.224e3;
    let eq = EquilibriumModel::new(c1, c1).unwrap();
    let b = ViscoBranch::new(BranchKind::Hs, mu, 0.5 * mu, 1.0, &eq).unwrap();
    MaterialParams::new(1e3, eq, vec![b]).unwrap()
}

fn shear_loads(omega: f64) -> LoadSpec {
    LoadSpec {
        body: None,
        tractions: vec![Traction {
            set: "z1".into(),
            direction: [1.0, 0.0, 0.0],
            time: TimeFn::Sin { amplitude: 6.895e3, omega },
        }],
        dirichlet: vec![
            DirichletBc { set: "z0".into(), components: vec![0, 1, 2], value: 0.0 },
            DirichletBc { set: "z1".into(), components: vec![1, 2], value: 0.0 },
        ],
    }
}

fn shear_problem(scheme: SchemeKind, omega: f64, gamma: f64, cells: usize) -> FemProblem {
    let mesh = generate_box_mesh([0.05; 3], [cells; 3]).unwrap();
    FemProblem::new(mesh, shear_material(), shear_loads(omega), scheme, gamma, DEFAULT_Z_CUT).unwrap()
}

fn random_material(rng: &mut StdRng, kinds: &[BranchKind]) -> MaterialParams {
    let eq = EquilibriumModel::new(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)).unwrap();
    let branches = kinds
        .iter()
        .map(|&k| {
            ViscoBranch::new(k, rng.gen_range(0.5..2.0), rng.gen_range(0.05..1.0), rng.gen_range(0.5..1.5), &eq).unwrap()
        })
        .collect();
    MaterialParams::new(1.0, eq, branches).unwrap()
}

fn random_f(rng: &mut StdRng, eps: f64) -> Tensor2 {
    loop {
        let f = Tensor2(std::array::from_fn(|i| {
            std::array::from_fn(|j| (i == j) as u8 as f64 + rng.gen_range(-eps..eps))
        }));
        if f.det() > 0.2 {
            return f;
        }
    }
}

fn random_state(rng: &mut StdRng, mat: &MaterialParams, eps: f64) -> (StepPair, Vec<SymTensor2>) {
    let fa = random_f(rng, 0.3);
    let fb = fa + random_f(rng, eps) - Tensor2::identity();
    let pair = StepPair::from_c(&fa.gram(), &fb.gram(), &(fa + fb).scale(0.5)).unwrap();
    let gammas = (0..mat.n_branches())
        .map(|_| SymTensor2::identity() + SymTensor2(std::array::from_fn(|_| rng.gen_range(-0.2..0.2))))
        .collect();
    (pair, gammas)
}

fn dissipation(mat: &MaterialParams, g0: &[SymTensor2], g1: &[SymTensor2], dt: f64) -> f64 {
    mat.branches
        .iter()
        .zip(g0.iter().zip(g1))
        .map(|(b, (a, c))| 0.5 * dt * b.eta * (*c - *a).scale(1.0 / dt).norm_sq())
        .sum()
}

/// Isochoric uniaxial oscillation.
fn uniaxial(t: f64) -> Tensor2 {
    let l = 1.0 + 0.2 * (10.0 * t).sin();
    let r = 1.0 / l.sqrt();
    Tensor2([[l, 0.0, 0.0], [0.0, r, 0.0], [0.0, 0.0, r]])
}

/// Isochoric path combining stretch and simple shear.
fn stretch_shear(t: f64) -> Tensor2 {
    let l = 1.0 + 0.15 * (8.0 * t).sin();
    let r = 1.0 / l.sqrt();
    let s = 0.2 * (1.0 - (5.0 * t).cos());
    Tensor2([[l, s, 0.0], [0.0, r, 0.0], [0.0, 0.0, r]])
}

fn grid(t_end: f64, dt: f64) -> Vec<f64> {
    let n = (t_end / dt).round() as usize;
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

// ---------------------------------------------------------------- L-block runs

struct LBlockRun {
    budgets: Vec<EnergyBudget>,
    momenta: Vec<(f64, MomentumRecord)>,
    reports: Vec<StepReport>,
    v_scale: f64,
}

fn run_lblock(scheme: SchemeKind, gamma: f64, steps: usize) -> Result<LBlockRun, String> {
    let cfg = SolverConfig { dt: 0.1, t_end: 0.1 * steps as f64, ..Default::default() };
    let mut sim = Simulation::new(lblock_problem(scheme, gamma), cfg).map_err(err)?;
    let mut budgets = Vec::new();
    let mut mom = Vec::new();
    let mut v_scale: f64 = 0.0;
    let reports = sim
        .run(|rec| {
            budgets.push(EnergyBudget::from_record(rec)?);
            mom.push((rec.report.time, momenta(rec.problem, rec.y_new)));
            v_scale = rec.y_new.v.iter().fold(v_scale, |a, v| a.max(v.abs()));
            Ok(())
        })
        .map_err(err)?;
    Ok(LBlockRun { budgets, momenta: mom, reports, v_scale })
}

fn lblock_runs() -> &'static [(SchemeKind, LBlockRun)] {
    use std::sync::OnceLock;
    static RUNS: OnceLock<Vec<(SchemeKind, LBlockRun)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        [SchemeKind::Scheme1, SchemeKind::Scheme2]
            .into_iter()
            .map(|s| (s, run_lblock(s, 0.0, 200).unwrap_or_else(|e| panic!("L-block {s} run failed: {e}"))))
            .collect()
    })
}

fn momentum_drift(history: &[(f64, MomentumRecord)], t_ref: f64) -> (f64, f64, f64) {
    let reference = history.iter().find(|(t, _)| (*t - t_ref).abs() < 1e-9).expect("reference time").1;
    let peak_l = history.iter().flat_map(|(_, m)| m.linear).fold(0.0_f64, |a, v| a.max(v.abs()));
    let peak_j = history.iter().flat_map(|(_, m)| m.angular).fold(0.0_f64, |a, v| a.max(v.abs()));
    let (mut dl, mut dj) = (0.0_f64, 0.0_f64);
    for (_, m) in history.iter().filter(|(t, _)| *t > t_ref) {
        for i in 0..3 {
            dl = dl.max((m.linear[i] - reference.linear[i]).abs());
            dj = dj.max((m.angular[i] - reference.angular[i]).abs());
        }
    }
    (dl / peak_l, dj / peak_j, peak_l.max(peak_j))
}

// ---------------------------------------------------------------- criteria

fn c1_energy_consistency() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (scheme, run) in lblock_runs() {
        let scale = run.budgets.iter().map(|b| b.h.max(b.h_old)).fold(0.0, f64::max);
        let worst = run.budgets.iter().map(|b| b.balance_residual.abs()).fold(0.0, f64::max);
        let free = run.budgets[50..].iter().map(|b| b.balance_residual.abs()).fold(0.0, f64::max);
        ok &= worst <= 1e-9 * scale && run.budgets.iter().all(|b| b.d_phy >= 0.0 && b.d_num >= 0.0);
        parts.push(format!("{scheme}: max|res| {worst:.2e} (free flight {free:.2e}), H scale {scale:.3e}"));
    }
    verdict(ok, parts.join("; "))
}

fn c2_momentum_conservation() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (scheme, run) in lblock_runs() {
        let (dl, dj, _) = momentum_drift(&run.momenta, 5.0);
        ok &= dl <= 1e-9 && dj <= 1e-9;
        parts.push(format!("{scheme}: rel drift L {dl:.2e}, J {dj:.2e}"));
    }
    verdict(ok, parts.join("; "))
}

fn c3_kinematic_residual() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (scheme, run) in lblock_runs() {
        let rk = run.reports.iter().map(|r| r.rk_max).fold(0.0, f64::max);
        ok &= rk <= 1e-14 * run.v_scale;
        parts.push(format!("{scheme}: max R^k {rk:.2e} vs |V| {:.3e}", run.v_scale));
    }
    verdict(ok, parts.join("; "))
}

fn mp_fields(scheme: SchemeKind, mat: &MaterialParams, t_end: f64) -> impl Fn(f64) -> visco_core::Result<Vec<FieldSample>> + '_ {
    move |dt| {
        let traj = material_point_run(stretch_shear, &grid(t_end, dt), &mat.rest_gammas(), scheme, mat, DEFAULT_Z_CUT)?;
        let last = traj.last().unwrap();
        let ct = unimodular(&last.c)?;
        let b = &mat.branches[0];
        let q = conjugate_q(&ct, &last.gammas[0], b, &mat.equilibrium);
        Ok(vec![FieldSample::new("Gamma1", last.gammas[0].0.to_vec()), FieldSample::new("Q1", q.0.to_vec())])
    }
}

/// Single clamped element under a smooth shear traction.
fn fem_unit_problem(scheme: SchemeKind) -> FemProblem {
    let eq = EquilibriumModel::new(1.0, 0.5).unwrap();
    let b = ViscoBranch::new(BranchKind::Hs, 2.0, 0.1, 1.0, &eq).unwrap();
    let mat = MaterialParams::new(1e-2, eq, vec![b]).unwrap();
    let mut loads = LoadSpec::default();
    loads.dirichlet.push(DirichletBc { set: "z0".into(), components: vec![0, 1, 2], value: 0.0 });
    loads.tractions.push(Traction { set: "z1".into(), direction: [1.0, 0.3, -0.2], time: TimeFn::Sin { amplitude: 0.4, omega: 25.0 } });
    let mesh = generate_box_mesh([1.0; 3], [1, 1, 1]).unwrap();
    FemProblem::new(mesh, mat, loads, scheme, 0.0, DEFAULT_Z_CUT).unwrap()
}

fn fem_fields(scheme: SchemeKind, t_end: f64) -> impl Fn(f64) -> visco_core::Result<Vec<FieldSample>> {
    move |dt| {
        let cfg = SolverConfig { dt, t_end, tol_r: 1e-12, tol_a: 1e-13, l_max: 15 };
        let mut sim = Simulation::new(fem_unit_problem(scheme), cfg)?;
        sim.run(|_| Ok(()))?;
        let p = &sim.problem;
        let b = &p.mat.branches[0];
        let gam: Vec<f64> = sim.qp.committed.iter().flat_map(|g| g.0).collect();
        let mut q = Vec::new();
        let y = &sim.state;
        for e in 0..p.space.n_cells() {
            let loc = visco_core::fem::assembly::ElementLocal::gather(&p.space, e, y, y);
            for (k, g) in p.space.element_qps(e).iter().enumerate() {
                let kin = visco_core::fem::assembly::qp_kinematics(g, &loc);
                let ct = unimodular(&kin.f_np1.gram())?;
                q.extend(conjugate_q(&ct, &sim.qp.at(p.space.nqp, e, k)[0], b, &p.mat.equilibrium).0);
            }
        }
        Ok(vec![
            FieldSample::new("U", y.u.clone()),
            FieldSample::new("V", y.v.clone()),
            FieldSample::new("P", y.p.clone()),
            FieldSample::new("Gamma1", gam),
            FieldSample::new("Q1", q),
        ])
    }
}

fn describe(label: &str, t: &ConvergenceTable) -> String {
    let slopes: Vec<String> = t.fields.iter().zip(&t.slopes).map(|(f, s)| format!("{f} {s:.2}")).collect();
    format!("{label}[{}]", slopes.join(", "))
}

fn slopes_within(t: &ConvergenceTable, fields: &[&str], target: f64) -> bool {
    fields.iter().all(|f| t.slope(f).is_some_and(|s| (s - target).abs() <= 0.15)) && t.excluded.is_empty()
}

fn c4_temporal_convergence() -> Check {
    let dts = [4e-3, 2e-3, 1e-3, 5e-4, 2.5e-4];
    let fine = [4e-4, 2e-4, 1e-4, 5e-5];
    let overkill = 1e-5;
    let mut ok = true;
    let mut parts = Vec::new();
    let mut rng = StdRng::seed_from_u64(4);
    let mat = random_material(&mut rng, &[BranchKind::Hs]);
    let mat_m = random_material(&mut rng, &[BranchKind::Mipc]);
    for (label, m) in [("mp-HS", &mat), ("mp-MIPC", &mat_m)] {
        let t2 = convergence_study(mp_fields(SchemeKind::Scheme2, m, 0.2), &dts, overkill).map_err(err)?;
        let t1 = convergence_study(mp_fields(SchemeKind::Scheme1, m, 0.2), &dts, overkill).map_err(err)?;
        ok &= slopes_within(&t2, &["Gamma1", "Q1"], 2.0) && slopes_within(&t1, &["Gamma1", "Q1"], 1.0);
        parts.push(describe(&format!("{label} S2"), &t2));
        parts.push(describe(&format!("{label} S1"), &t1));
    }
    let t_end = 0.04;
    let t2 = convergence_study(fem_fields(SchemeKind::Scheme2, t_end), &dts, overkill).map_err(err)?;
    ok &= slopes_within(&t2, &["U", "V", "P", "Gamma1", "Q1"], 2.0);
    parts.push(describe("fem S2", &t2));
    let t1 = convergence_study(fem_fields(SchemeKind::Scheme1, t_end), &dts, overkill).map_err(err)?;
    ok &= slopes_within(&t1, &["Gamma1", "Q1"], 1.0);
    parts.push(describe("fem S1", &t1));
    let t1f = convergence_study(fem_fields(SchemeKind::Scheme1, t_end), &fine, overkill).map_err(err)?;
    ok &= slopes_within(&t1f, &["U", "V", "P"], 1.0);
    parts.push(describe("fem S1 dt<=4e-4", &t1f));
    verdict(ok, parts.join("; "))
}

fn c5_enhancement_orders() -> Check {
    let mut rng = StdRng::seed_from_u64(5);
    let mat = random_material(&mut rng, &[BranchKind::Hs, BranchKind::Mipc]);
    let mut ok = true;
    let mut parts = Vec::new();
    for (scheme, order) in [(SchemeKind::Scheme1, 1.0), (SchemeKind::Scheme2, 2.0)] {
        let mut maxima = Vec::new();
        for n in [100, 200, 400, 800] {
            let traj =
                material_point_run(uniaxial, &grid(0.2, 0.2 / n as f64), &mat.rest_gammas(), scheme, &mat, DEFAULT_Z_CUT)
                    .map_err(err)?;
            maxima.push(traj.iter().map(|s| s.s_enh.norm()).fold(0.0, f64::max));
        }
        let slopes: Vec<f64> = maxima.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        ok &= slopes.iter().all(|s| (s - order).abs() <= 0.15);
        parts.push(format!("{scheme}: |S_enh| halving slopes {:?}", slopes.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>()));
    }
    verdict(ok, parts.join("; "))
}

fn c6_directionality() -> Check {
    let mut rng = StdRng::seed_from_u64(6);
    let mut worst = [0.0_f64; 4];
    for _ in 0..1000 {
        let mat = random_material(&mut rng, &[BranchKind::Hs, BranchKind::Mipc]);
        let eq = &mat.equilibrium;
        let eps = rng.gen_range(1e-3..0.2);
        let (pair, g_n) = random_state(&mut rng, &mat, eps);
        let dt = rng.gen_range(1e-3..0.2);
        for (slot, scheme) in [(0, SchemeKind::Scheme1), (1, SchemeKind::Scheme2)] {
            // directionality: Z : S_alg = ΔG_iso + dissipation
            let r = algorithmic_stress(scheme, &pair, &g_n, dt, &mat, DEFAULT_Z_CUT).map_err(err)?;
            let dg = gibbs_iso(&pair.ctilde_np1, &r.gammas_np1, &mat) - gibbs_iso(&pair.ctilde_n, &g_n, &mat);
            let diss = dissipation(&mat, &g_n, &r.gammas_np1, dt);
            let lhs = ddot(&pair.z, &r.s_alg);
            worst[slot] = worst[slot].max((lhs - dg - diss).abs() / lhs.abs().max(dg.abs()).max(diss));
            // algorithmic conjugate force equals η ΔΓ/dt
            for (a, b) in mat.branches.iter().enumerate() {
                let q = q_alg(scheme, &pair.ctilde_n, &pair.ctilde_np1, &g_n[a], &r.gammas_np1[a], b, eq).map_err(err)?;
                let rate = (r.gammas_np1[a] - g_n[a]).scale(b.eta / dt);
                worst[slot] = worst[slot].max((q - rate).max_abs() / q.max_abs().max(1e-300));
            }
        }
        // explicit scheme: Q : ΔΓ = −2 ΔΥ at fixed C̃_n
        let g1 = update_gammas(SchemeKind::Scheme1, &pair, &g_n, dt, &mat);
        for (a, b) in mat.branches.iter().enumerate() {
            let q = q_alg(SchemeKind::Scheme1, &pair.ctilde_n, &pair.ctilde_np1, &g_n[a], &g1[a], b, eq).map_err(err)?;
            let lhs = ddot(&q, &(g1[a] - g_n[a]));
            let rhs = -2.0 * (upsilon(&pair.ctilde_n, &g1[a], b, eq) - upsilon(&pair.ctilde_n, &g_n[a], b, eq));
            worst[2] = worst[2].max((lhs - rhs).abs() / lhs.abs().max(1e-300));
        }
        // mid-point scheme: four-point identity of Υ
        let g1 = update_gammas(SchemeKind::Scheme2, &pair, &g_n, dt, &mat);
        let gh: Vec<_> = g_n.iter().zip(&g1).map(|(a, b)| (*a + *b).scale(0.5)).collect();
        let (c0, c1) = (&pair.ctilde_n, &pair.ctilde_np1);
        for (a, b) in mat.branches.iter().enumerate() {
            let four = upsilon(c1, &g1[a], b, eq) - upsilon(c0, &g_n[a], b, eq) - upsilon(c1, &gh[a], b, eq)
                + upsilon(c0, &gh[a], b, eq);
            let q = q_alg(SchemeKind::Scheme2, c0, c1, &g_n[a], &g1[a], b, eq).map_err(err)?;
            let expected = -0.5 * ddot(&q, &(g1[a] - g_n[a]));
            worst[3] = worst[3].max((four - expected).abs() / expected.abs().max(1e-300));
        }
    }
    let ok = worst.iter().all(|w| *w <= 1e-11);
    verdict(
        ok,
        format!(
            "1000 states: scheme-1 {:.1e}, scheme-2 {:.1e}, explicit Υ identity {:.1e}, four-point identity {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn fd_material_tangent(scheme: SchemeKind, mat: &MaterialParams, pair: &StepPair, g_n: &[SymTensor2], dt: f64) -> f64 {
    let t = algorithmic_tangent(scheme, pair, g_n, dt, mat, DEFAULT_Z_CUT).unwrap();
    let h = 1e-6;
    let scale = t.d_np1.max_abs();
    let mut worst: f64 = 0.0;
    for j in 0..6 {
        let stress = |sign: f64| {
            let mut c1 = pair.c_np1;
            c1.0[j] += sign * h;
            let p = StepPair::from_c(&pair.c_n, &c1, &pair.f_half).unwrap();
            algorithmic_stress(scheme, &p, g_n, dt, mat, DEFAULT_Z_CUT).unwrap().s_alg
        };
        let fd = (stress(1.0) - stress(-1.0)).scale(1.0 / (2.0 * h));
        for i in 0..6 {
            worst = worst.max((fd.0[i] - 0.5 * t.d_np1.0[i][j] * WEIGHTS[j]).abs() / scale);
        }
    }
    worst
}

fn fd_global_tangent(scheme: SchemeKind) -> f64 {
    let eq = EquilibriumModel::new(1.3, 0.6).unwrap();
    let branches = vec![
        ViscoBranch::new(BranchKind::Hs, 1.1, 0.4, 1.0, &eq).unwrap(),
        ViscoBranch::new(BranchKind::Mipc, 0.9, 0.3, 0.8, &eq).unwrap(),
    ];
    let mat = MaterialParams::new(2.0, eq, branches).unwrap();
    let mut loads = LoadSpec::default();
    loads.dirichlet.push(DirichletBc { set: "z0".into(), components: vec![0, 1, 2], value: 0.0 });
    loads.tractions.push(Traction { set: "x1".into(), direction: [0.3, 0.1, -0.2], time: TimeFn::Const(1.0) });
    let mesh = generate_box_mesh([1.0, 0.8, 1.2], [1, 1, 1]).unwrap();
    let p = FemProblem::new(mesh, mat, loads, scheme, 0.7, DEFAULT_Z_CUT).unwrap();
    let mut rng = StdRng::seed_from_u64(77);
    let dt = 0.05;
    let mut y_old = p.initial_state();
    let nv = p.space.n_vdofs();
    for d in 0..nv {
        if !p.constrained[d] {
            y_old.u[d] = rng.gen_range(-0.05..0.05);
            y_old.v[d] = rng.gen_range(-0.2..0.2);
        }
    }
    for x in y_old.p.iter_mut() {
        *x = rng.gen_range(-0.5..0.5);
    }
    let mut y_new = y_old.clone();
    for d in 0..nv {
        if !p.constrained[d] {
            y_new.v[d] += rng.gen_range(-0.2..0.2);
            y_new.u[d] = y_old.u[d] + 0.5 * dt * (y_old.v[d] + y_new.v[d]);
        }
    }
    for x in y_new.p.iter_mut() {
        *x += rng.gen_range(-0.5..0.5);
    }
    let mut qp = p.rest_qp_states();
    for g in qp.committed.iter_mut() {
        *g = SymTensor2::identity() + SymTensor2(std::array::from_fn(|_| rng.gen_range(-0.05..0.05)));
    }
    let (_, vals) = p.assemble_system(&y_new, &y_old, &mut qp, dt, 0.0).unwrap();
    let k = p.pattern().to_dense(&vals);
    let scale = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for col in 0..p.space.n_dofs() {
        if col < nv && p.constrained[col] {
            continue;
        }
        let eval = |sign: f64| {
            let mut y = y_new.clone();
            if col < nv {
                y.v[col] += sign * h;
                y.u[col] += sign * 0.5 * dt * h;
            } else {
                y.p[col - nv] += sign * h;
            }
            let mut q = qp.clone();
            p.assemble_residuals(&y, &y_old, &mut q, dt, 0.0).unwrap().stacked()
        };
        let (rp, rm) = (eval(1.0), eval(-1.0));
        for row in 0..p.space.n_dofs() {
            if row < nv && p.constrained[row] {
                continue;
            }
            worst = worst.max(((rp[row] - rm[row]) / (2.0 * h) - k[row][col]).abs() / scale);
        }
    }
    worst
}

fn c7_algorithmic_tangents() -> Check {
    let mut rng = StdRng::seed_from_u64(7);
    let mut parts = Vec::new();
    let mut ok = true;
    for (label, scheme, kinds) in [
        ("scheme-1", SchemeKind::Scheme1, &[BranchKind::Hs, BranchKind::Mipc][..]),
        ("scheme-2 HS", SchemeKind::Scheme2, &[BranchKind::Hs]),
        ("scheme-2 MIPC", SchemeKind::Scheme2, &[BranchKind::Mipc]),
    ] {
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let mat = random_material(&mut rng, kinds);
            let (pair, g_n) = random_state(&mut rng, &mat, 0.1);
            worst = worst.max(fd_material_tangent(scheme, &mat, &pair, &g_n, rng.gen_range(1e-2..1e-1)));
        }
        ok &= worst <= 1e-6;
        parts.push(format!("{label} {worst:.1e}"));
    }
    for scheme in [SchemeKind::Scheme1, SchemeKind::Scheme2, SchemeKind::Midpoint] {
        let w = fd_global_tangent(scheme);
        ok &= w <= 1e-5;
        parts.push(format!("1-element {scheme} {w:.1e}"));
    }
    verdict(ok, parts.join("; "))
}

struct ShearRun {
    residuals: Vec<f64>,
    h_scale: f64,
    div_mean: f64,
    probe: Vec<(f64, f64, f64)>,
}

fn run_shear(scheme: SchemeKind, omega: f64, gamma: f64, dt: f64, steps: usize) -> Result<ShearRun, String> {
    let cfg = SolverConfig { dt, t_end: dt * steps as f64, ..Default::default() };
    let mut sim = Simulation::new(shear_problem(scheme, omega, gamma, 2), cfg).map_err(err)?;
    let (elem, xi) = sim.problem.space.locate(&sim.problem.mesh, [0.025, 0.025, 0.05]).ok_or("probe outside mesh")?;
    let mut residuals = Vec::new();
    let mut h_scale: f64 = 0.0;
    let mut div_sum = 0.0;
    let mut probe = Vec::new();
    sim.run(|rec| {
        let b = EnergyBudget::from_record(rec)?;
        residuals.push(b.balance_residual.abs());
        h_scale = h_scale.max(b.h);
        div_sum += div_velocity_norm(rec.problem, rec.y_new);
        let (u, _) = rec.problem.space.evaluate(elem, xi, &rec.y_new.u, &rec.y_new.p);
        probe.push((rec.report.time, u[0], 6.895e3 * (omega * rec.report.time).sin()));
        Ok(())
    })
    .map_err(err)?;
    Ok(ShearRun { residuals, h_scale, div_mean: div_sum / steps as f64, probe })
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s[s.len() / 2]
}

fn c8_midpoint_contrast() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for omega in [0.1, 0.5] {
        let s2 = run_shear(SchemeKind::Scheme2, omega, 0.0, 0.01, 2000)?;
        let mp = run_shear(SchemeKind::Midpoint, omega, 0.0, 0.01, 2000)?;
        let (m2, mm) = (median(&s2.residuals), median(&mp.residuals));
        let worst2 = s2.residuals.iter().copied().fold(0.0, f64::max);
        let worst_mp = mp.residuals.iter().copied().fold(0.0, f64::max);
        let ratio = mm / m2;
        ok &= ratio >= 100.0 && worst2 <= 1e-12 * s2.h_scale;
        parts.push(format!(
            "w={omega}: median |res| scheme-2 {m2:.2e} (max {:.2e} rel), mid-point {mm:.2e} (max {worst_mp:.2e}), median ratio {ratio:.0}",
            worst2 / s2.h_scale
        ));
    }
    verdict(ok, parts.join("; "))
}

fn c9_grad_div() -> Check {
    let mut means = Vec::new();
    for gamma in [0.0, 1e2, 1e4, 1e6] {
        means.push(run_shear(SchemeKind::Scheme2, 0.5, gamma, 0.01, 500)?.div_mean);
    }
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let free = run_lblock(SchemeKind::Scheme2, 1e4, 80)?;
    let (dl, dj, _) = momentum_drift(&free.momenta, 5.0);
    let ok = decreasing && dl <= 1e-9 && dj <= 1e-9;
    verdict(
        ok,
        format!(
            "mean div norm for γ = 0, 1e2, 1e4, 1e6: {}; L-block with γ = 1e4 drift L {dl:.2e}, J {dj:.2e}",
            means.iter().map(|m| format!("{m:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn c10_relaxation() -> Check {
    let eq = EquilibriumModel::new(1.0, 0.5).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in [BranchKind::Hs, BranchKind::Mipc] {
        let b = ViscoBranch::new(kind, 2.0, 0.5, 0.7, &eq).unwrap();
        let mat = MaterialParams::new(1.0, eq, vec![b]).unwrap();
        let f = stretch_shear(0.3);
        let dt = 0.05;
        let n = 2000;
        let traj = material_point_run(|_| f, &grid(dt * n as f64, dt), &[SymTensor2::identity()], SchemeKind::Scheme2, &mat, 0.0)
            .map_err(err)?;
        let ct = unimodular(&f.gram()).map_err(err)?;
        let r = (1.0 - b.mu * dt / (2.0 * b.eta)) / (1.0 + b.mu * dt / (2.0 * b.eta));
        let q0 = conjugate_q(&ct, &SymTensor2::identity(), &b, &eq);
        let mut worst: f64 = 0.0;
        for (k, s) in traj.iter().enumerate() {
            let q = conjugate_q(&ct, &s.gammas[0], &b, &eq);
            worst = worst.max((q - q0.scale(r.powi(k as i32))).max_abs() / q0.max_abs());
        }
        let q_end = conjugate_q(&ct, &traj.last().unwrap().gammas[0], &b, &eq).max_abs() / q0.max_abs();
        // the continuous solution decays like exp(−μ t/η); the discrete factor matches it to O(dt³) per step
        let exact = (-b.mu * dt / b.eta).exp();
        let per_step = (r - exact).abs();
        ok &= worst <= 1e-12 && q_end <= 1e-12 && per_step <= (b.mu * dt / b.eta).powi(3);
        parts.push(format!("{kind:?}: amplification error {worst:.1e}, |Q_end|/|Q_0| {q_end:.1e}, |r − e^(−μdt/η)| {per_step:.1e}"));
    }
    verdict(ok, parts.join("; "))
}

/// Probe value at `t` by linear interpolation of a time series.
fn sample_at(series: &[(f64, f64, f64)], t: f64) -> f64 {
    let k = series.partition_point(|p| p.0 < t).clamp(1, series.len() - 1);
    let (a, b) = (series[k - 1], series[k]);
    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
}

fn hysteresis() -> Check {
    let dt = 0.1;
    let amplitude = 6.895e3;
    let mut loops = Vec::new();
    let mut ok = true;
    let mut parts = Vec::new();
    for omega in [0.1, 0.5] {
        let period = std::f64::consts::TAU / omega;
        let steps = (3.0 * period / dt).ceil() as usize;
        let run = run_shear(SchemeKind::Scheme2, omega, 0.0, dt, steps)?;
        let t_end = run.probe.last().unwrap().0;
        let start = t_end - period;
        let cycle: Vec<_> = run.probe.iter().filter(|p| p.0 >= start).collect();
        let mut xs = vec![sample_at(&run.probe, start)];
        let mut ys = vec![amplitude * (omega * start).sin()];
        xs.extend(cycle.iter().map(|p| p.1));
        ys.extend(cycle.iter().map(|p| p.2));
        let area = loop_area(&xs, &ys).abs();
        let width = xs.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v)) - xs.iter().fold(f64::INFINITY, |a, v| a.min(*v));
        // the load is exactly periodic, so the gap is the drift of the response over one cycle
        let gap = (xs[xs.len() - 1] - xs[0]).abs() * 2.0 * amplitude / area;
        ok &= gap <= 0.01;
        parts.push(format!(
            "w={omega}: {steps} steps, loop area {area:.3e}, displacement range {width:.3e}, closure defect {:.3}%",
            100.0 * gap
        ));
        loops.push((area, width));
    }
    let distinct = (loops[0].0 / loops[1].0 - 1.0).abs() > 0.2 || (loops[0].1 / loops[1].1 - 1.0).abs() > 0.2;
    ok &= distinct;
    parts.push(format!("area ratio w=0.5/w=0.1 {:.2}", loops[1].0 / loops[0].0));
    verdict(ok, parts.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, fn() -> Check); 11] = [
        ("c1", "energy consistency (L-block)", c1_energy_consistency),
        ("c2", "momentum conservation (L-block)", c2_momentum_conservation),
        ("c3", "kinematic residual", c3_kinematic_residual),
        ("c4", "temporal convergence", c4_temporal_convergence),
        ("c5", "stress enhancement orders", c5_enhancement_orders),
        ("c6", "directionality identities", c6_directionality),
        ("c7", "algorithmic tangents", c7_algorithmic_tangents),
        ("c8", "mid-point contrast (shear test)", c8_midpoint_contrast),
        ("c9", "grad-div efficacy", c9_grad_div),
        ("c10", "relaxation oracle", c10_relaxation),
        ("hyst", "hysteresis loops", hysteresis),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| id == f) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:<4} {name}: {detail} ({secs:.1} s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id:<4} {name}: {detail} ({secs:.1} s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
