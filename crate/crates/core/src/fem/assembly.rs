//! Residuals and consistent tangents of the mixed `(U, P, V)` scheme.
//!
//! With `Y_{n+½} = (Y_n + Y_{n+1})/2`, the momentum residual of node `a`,
//! component `i` is
//!
//! ```text
//! Rm = ∫ ρ0 N_a (V_{n+1} − V_n)_i / dt + (F_{n+½} S_alg ∇N_a)_i
//!        − J_{n+½} P_{n+½} (F_{n+½}^{-T} ∇N_a)_i − ρ0 N_a B_i
//!        + γ J_{n+½} (∇V_{n+½} : F_{n+½}^{-T}) (F_{n+½}^{-T} ∇N_a)_i dΩ
//!    − ∫ N_a H_i(t_{n+½}) dΓ
//! ```
//!
//! and the mass residual of pressure node `c` is
//! `Rp = ∫ M_c J_{n+½} ∇V_{n+½} : F_{n+½}^{-T} dΩ`. The tangent is taken with
//! respect to `(V_{n+1}, P_{n+1})` with `δU_{n+1} = (dt/2) δV_{n+1}`.

use crate::error::{Error, Result};
use crate::fem::basis::{N_Q1, N_Q2};
use crate::fem::loads::{LoadSpec, TimeFn};
use crate::fem::mesh::HexMesh;
use crate::fem::space::{QpGeom, TaylorHoodSpace};
use crate::integrators::{algorithmic_response, algorithmic_stress, SchemeKind};
use crate::kinematics::StepPair;
use crate::materials::MaterialParams;
use crate::tensors::{SymTensor2, SymTensor4, Tensor2, WEIGHTS};

/// Local unknowns per element: 81 velocity, 8 pressure.
pub const NE: usize = 3 * N_Q2 + N_Q1;

/// Nodal fields: `u`, `v` of length `3·n_nodes`, `p` of length `n_pnodes`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
}

impl FieldState {
    pub fn zeros(space: &TaylorHoodSpace) -> FieldState {
        FieldState { u: vec![0.0; space.n_vdofs()], v: vec![0.0; space.n_vdofs()], p: vec![0.0; space.n_pnodes()] }
    }
}

/// Internal variables at every quadrature point, indexed
/// `(cell · nqp + q) · m + α`.
#[derive(Clone, Debug, PartialEq)]
pub struct QpStates {
    pub n_branches: usize,
    /// Values at `t_n`; only changed by [`QpStates::commit`].
    pub committed: Vec<SymTensor2>,
    /// Values at `t_{n+1}` for the latest residual evaluation.
    pub trial: Vec<SymTensor2>,
}

impl QpStates {
    pub fn at_rest(space: &TaylorHoodSpace, mat: &MaterialParams) -> QpStates {
        let len = space.n_cells() * space.nqp * mat.n_branches();
        QpStates {
            n_branches: mat.n_branches(),
            committed: vec![SymTensor2::identity(); len],
            trial: vec![SymTensor2::identity(); len],
        }
    }

    pub fn commit(&mut self) {
        self.committed.copy_from_slice(&self.trial);
    }

    /// Committed values of one quadrature point.
    pub fn at(&self, nqp: usize, elem: usize, q: usize) -> &[SymTensor2] {
        let k = (elem * nqp + q) * self.n_branches;
        &self.committed[k..k + self.n_branches]
    }
}

/// Momentum and mass residuals; constrained momentum rows are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Residuals {
    pub rm: Vec<f64>,
    pub rp: Vec<f64>,
}

impl Residuals {
    /// `ℓ2` norm of the stacked residual.
    pub fn norm(&self) -> f64 {
        self.rm.iter().chain(&self.rp).map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `[Rm | Rp]`, in the ordering of the global unknowns.
    pub fn stacked(&self) -> Vec<f64> {
        self.rm.iter().chain(&self.rp).copied().collect()
    }
}

/// Compressed-column pattern of the monolithic matrix with a scatter map per
/// element.
#[derive(Clone, Debug)]
pub struct SparsePattern {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    elem_map: Vec<u32>,
    /// Value slots in a constrained row or column.
    constrained_slots: Vec<usize>,
    /// Diagonal slots of constrained unknowns.
    constrained_diag: Vec<usize>,
}

impl SparsePattern {
    fn build(space: &TaylorHoodSpace, constrained: &[bool]) -> SparsePattern {
        let n = space.n_dofs();
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in 0..space.n_cells() {
            let dofs = space.element_dofs(e);
            for &c in &dofs {
                cols[c].extend_from_slice(&dofs);
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for c in cols.iter_mut() {
            c.sort_unstable();
            c.dedup();
            row_idx.extend_from_slice(c);
            col_ptr.push(row_idx.len());
        }
        let slot = |r: usize, c: usize| -> usize {
            let range = col_ptr[c]..col_ptr[c + 1];
            col_ptr[c] + row_idx[range].binary_search(&r).expect("entry in pattern")
        };
        let mut elem_map = Vec::with_capacity(space.n_cells() * NE * NE);
        for e in 0..space.n_cells() {
            let dofs = space.element_dofs(e);
            for &r in &dofs {
                for &c in &dofs {
                    elem_map.push(slot(r, c) as u32);
                }
            }
        }
        let is_c = |d: usize| d < constrained.len() && constrained[d];
        let mut constrained_slots = Vec::new();
        let mut constrained_diag = Vec::new();
        for c in 0..n {
            for (k, &r) in row_idx[col_ptr[c]..col_ptr[c + 1]].iter().enumerate() {
                if is_c(r) || is_c(c) {
                    constrained_slots.push(col_ptr[c] + k);
                    if r == c {
                        constrained_diag.push(col_ptr[c] + k);
                    }
                }
            }
        }
        SparsePattern { n, col_ptr, row_idx, elem_map, constrained_slots, constrained_diag }
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Dense copy of a value array (tests and small diagnostics only).
    pub fn to_dense(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                m[self.row_idx[k]][c] = values[k];
            }
        }
        m
    }
}

/// Kinematic quantities at one quadrature point.
#[derive(Clone, Copy, Debug)]
pub struct QpKinematics {
    pub f_n: Tensor2,
    pub f_np1: Tensor2,
    pub f_h: Tensor2,
    /// `F_{n+½}^{-T}`.
    pub finv_t: Tensor2,
    pub j_h: f64,
    pub grad_v_h: Tensor2,
    pub v_new: [f64; 3],
    pub v_old: [f64; 3],
    pub v_h: [f64; 3],
    pub u_new: [f64; 3],
    pub u_old: [f64; 3],
    pub p_h: f64,
    /// `∇V_{n+½} : F_{n+½}^{-T}`.
    pub div_v: f64,
}

/// Element-local copies of the nodal fields.
#[derive(Clone, Debug)]
pub struct ElementLocal {
    pub u_new: [[f64; 3]; N_Q2],
    pub u_old: [[f64; 3]; N_Q2],
    pub v_new: [[f64; 3]; N_Q2],
    pub v_old: [[f64; 3]; N_Q2],
    pub p_new: [f64; N_Q1],
    pub p_old: [f64; N_Q1],
}

impl ElementLocal {
    pub fn gather(space: &TaylorHoodSpace, elem: usize, y_new: &FieldState, y_old: &FieldState) -> ElementLocal {
        let nodes = &space.elem_nodes[elem];
        let pn = &space.elem_pnodes[elem];
        let vec3 = |f: &[f64], a: usize| [f[3 * nodes[a]], f[3 * nodes[a] + 1], f[3 * nodes[a] + 2]];
        ElementLocal {
            u_new: std::array::from_fn(|a| vec3(&y_new.u, a)),
            u_old: std::array::from_fn(|a| vec3(&y_old.u, a)),
            v_new: std::array::from_fn(|a| vec3(&y_new.v, a)),
            v_old: std::array::from_fn(|a| vec3(&y_old.v, a)),
            p_new: std::array::from_fn(|c| y_new.p[pn[c]]),
            p_old: std::array::from_fn(|c| y_old.p[pn[c]]),
        }
    }
}

/// Interpolates the step kinematics at a quadrature point.
pub fn qp_kinematics(g: &QpGeom, loc: &ElementLocal) -> QpKinematics {
    let mut f_n = Tensor2::identity();
    let mut f_np1 = Tensor2::identity();
    let mut grad_v_h = Tensor2::zero();
    let mut v_new = [0.0; 3];
    let mut v_old = [0.0; 3];
    let mut u_new = [0.0; 3];
    let mut u_old = [0.0; 3];
    for a in 0..N_Q2 {
        let (n, gr) = (g.n[a], &g.grad[a]);
        for i in 0..3 {
            let vh = 0.5 * (loc.v_new[a][i] + loc.v_old[a][i]);
            v_new[i] += n * loc.v_new[a][i];
            v_old[i] += n * loc.v_old[a][i];
            u_new[i] += n * loc.u_new[a][i];
            u_old[i] += n * loc.u_old[a][i];
            for j in 0..3 {
                f_np1.0[i][j] += loc.u_new[a][i] * gr[j];
                f_n.0[i][j] += loc.u_old[a][i] * gr[j];
                grad_v_h.0[i][j] += vh * gr[j];
            }
        }
    }
    let f_h = (f_n + f_np1).scale(0.5);
    let j_h = f_h.det();
    let finv_t = f_h.cofactor().scale(1.0 / j_h);
    let p_h: f64 = (0..N_Q1).map(|c| g.m[c] * 0.5 * (loc.p_new[c] + loc.p_old[c])).sum();
    let v_h = std::array::from_fn(|i| 0.5 * (v_new[i] + v_old[i]));
    let div_v = grad_v_h.ddot(&finv_t);
    QpKinematics { f_n, f_np1, f_h, finv_t, j_h, grad_v_h, v_new, v_old, v_h, u_new, u_old, p_h, div_v }
}

/// Spatial discretization together with material, loads and time-integration
/// settings.
#[derive(Clone, Debug)]
pub struct FemProblem {
    pub mesh: HexMesh,
    pub space: TaylorHoodSpace,
    pub mat: MaterialParams,
    pub loads: LoadSpec,
    pub scheme: SchemeKind,
    /// Grad-div stabilization parameter.
    pub gamma: f64,
    pub z_cut: f64,
    /// Per velocity unknown.
    pub constrained: Vec<bool>,
    prescribed: Vec<(usize, f64)>,
    traction_terms: Vec<(Vec<(usize, f64)>, [f64; 3], TimeFn)>,
    pattern: SparsePattern,
}

impl FemProblem {
    /// # Errors
    ///
    /// Unknown set names, invalid components, a negative `gamma`, or inverted
    /// cells.
    pub fn new(
        mesh: HexMesh,
        mat: MaterialParams,
        loads: LoadSpec,
        scheme: SchemeKind,
        gamma: f64,
        z_cut: f64,
    ) -> Result<FemProblem> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidInput(format!("grad-div parameter must be >= 0 (got {gamma})")));
        }
        if !(z_cut >= 0.0) {
            return Err(Error::InvalidInput(format!("z_cut must be >= 0 (got {z_cut})")));
        }
        let space = TaylorHoodSpace::new(&mesh)?;
        let mut constrained = vec![false; space.n_vdofs()];
        let mut prescribed = Vec::new();
        for bc in &loads.dirichlet {
            if bc.components.is_empty() || bc.components.iter().any(|&c| c > 2) {
                return Err(Error::InvalidInput(format!("Dirichlet set '{}' needs components in 0..=2", bc.set)));
            }
            for node in space.face_set_nodes(&mesh, &bc.set)? {
                for &c in &bc.components {
                    let d = 3 * node + c;
                    constrained[d] = true;
                    prescribed.push((d, bc.value));
                }
            }
        }
        let mut traction_terms = Vec::new();
        for t in &loads.tractions {
            traction_terms.push((space.face_set_weights(&mesh, &t.set)?, t.direction, t.time));
        }
        let pattern = SparsePattern::build(&space, &constrained);
        Ok(FemProblem { mesh, space, mat, loads, scheme, gamma, z_cut, constrained, prescribed, traction_terms, pattern })
    }

    pub fn pattern(&self) -> &SparsePattern {
        &self.pattern
    }

    /// Zero velocity and pressure; displacement equal to the Dirichlet data.
    pub fn initial_state(&self) -> FieldState {
        let mut y = FieldState::zeros(&self.space);
        for &(d, val) in &self.prescribed {
            y.u[d] = val;
        }
        y
    }

    pub fn rest_qp_states(&self) -> QpStates {
        QpStates::at_rest(&self.space, &self.mat)
    }

    /// `∫ N_a H(t) dΓ` for every velocity unknown.
    pub fn surface_traction_vector(&self, t: f64) -> Vec<f64> {
        let mut f = vec![0.0; self.space.n_vdofs()];
        for (weights, dir, time) in &self.traction_terms {
            let s = time.eval(t);
            if s == 0.0 {
                continue;
            }
            for &(node, w) in weights {
                for i in 0..3 {
                    f[3 * node + i] += w * dir[i] * s;
                }
            }
        }
        f
    }

    /// Evaluates `(Rm, Rp)` and stores the trial internal variables in `qp`.
    pub fn assemble_residuals(
        &self,
        y_new: &FieldState,
        y_old: &FieldState,
        qp: &mut QpStates,
        dt: f64,
        t_mid: f64,
    ) -> Result<Residuals> {
        Ok(self.assemble(y_new, y_old, qp, dt, t_mid, false)?.0)
    }

    /// Monolithic matrix `[A B; Cb 0]` over [`FemProblem::pattern`], with
    /// constrained rows and columns replaced by the identity.
    pub fn assemble_tangent(
        &self,
        y_new: &FieldState,
        y_old: &FieldState,
        qp: &mut QpStates,
        dt: f64,
        t_mid: f64,
    ) -> Result<Vec<f64>> {
        Ok(self.assemble(y_new, y_old, qp, dt, t_mid, true)?.1.expect("tangent requested"))
    }

    /// Residuals and tangent in one pass.
    pub fn assemble_system(
        &self,
        y_new: &FieldState,
        y_old: &FieldState,
        qp: &mut QpStates,
        dt: f64,
        t_mid: f64,
    ) -> Result<(Residuals, Vec<f64>)> {
        let (r, k) = self.assemble(y_new, y_old, qp, dt, t_mid, true)?;
        Ok((r, k.expect("tangent requested")))
    }

    fn assemble(
        &self,
        y_new: &FieldState,
        y_old: &FieldState,
        qp: &mut QpStates,
        dt: f64,
        t_mid: f64,
        want_k: bool,
    ) -> Result<(Residuals, Option<Vec<f64>>)> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!("time step must be positive (got {dt})")));
        }
        let space = &self.space;
        let nv = space.n_vdofs();
        let mut rm = vec![0.0; nv];
        let mut rp = vec![0.0; space.n_pnodes()];
        let mut values = if want_k { Some(vec![0.0; self.pattern.nnz()]) } else { None };
        let body = self.loads.body_force(t_mid);
        let m = self.mat.n_branches();
        let per_elem = space.nqp * m;
        let mut re = [0.0; NE];
        let mut ke = if want_k { vec![0.0; NE * NE] } else { Vec::new() };
        for e in 0..space.n_cells() {
            let loc = ElementLocal::gather(space, e, y_new, y_old);
            re.fill(0.0);
            ke.fill(0.0);
            let range = e * per_elem..(e + 1) * per_elem;
            self.element(
                e,
                &loc,
                &qp.committed[range.clone()],
                &mut qp.trial[range],
                dt,
                body,
                &mut re,
                if want_k { Some(&mut ke) } else { None },
            )?;
            let dofs = space.element_dofs(e);
            for (l, &d) in dofs.iter().enumerate() {
                if d < nv {
                    rm[d] += re[l];
                } else {
                    rp[d - nv] += re[l];
                }
            }
            if let Some(vals) = values.as_mut() {
                let map = &self.pattern.elem_map[e * NE * NE..(e + 1) * NE * NE];
                for (slot, v) in map.iter().zip(&ke) {
                    vals[*slot as usize] += v;
                }
            }
        }
        let fext = self.surface_traction_vector(t_mid);
        for (r, f) in rm.iter_mut().zip(&fext) {
            *r -= f;
        }
        for (r, &c) in rm.iter_mut().zip(&self.constrained) {
            if c {
                *r = 0.0;
            }
        }
        if let Some(vals) = values.as_mut() {
            for &s in &self.pattern.constrained_slots {
                vals[s] = 0.0;
            }
            for &s in &self.pattern.constrained_diag {
                vals[s] = 1.0;
            }
        }
        Ok((Residuals { rm, rp }, values))
    }

    #[allow(clippy::too_many_arguments)]
    fn element(
        &self,
        e: usize,
        loc: &ElementLocal,
        gammas_n: &[SymTensor2],
        gammas_trial: &mut [SymTensor2],
        dt: f64,
        body: [f64; 3],
        re: &mut [f64; NE],
        mut ke: Option<&mut Vec<f64>>,
    ) -> Result<()> {
        let m = self.mat.n_branches();
        let rho = self.mat.rho0;
        let gamma = self.gamma;
        for (q, g) in self.space.element_qps(e).iter().enumerate() {
            let k = qp_kinematics(g, loc);
            let det1 = k.f_np1.det();
            if !(k.j_h > 0.0 && det1 > 0.0 && k.f_n.det() > 0.0) {
                return Err(Error::ElementInversion { element: e, point: q, jacobian: k.j_h.min(det1) });
            }
            let pair = StepPair::from_c(&k.f_n.gram(), &k.f_np1.gram(), &k.f_h)
                .map_err(|_| Error::ElementInversion { element: e, point: q, jacobian: det1 })?;
            let gn = &gammas_n[q * m..(q + 1) * m];
            let (res, tangent) = if ke.is_some() {
                let (r, t) = algorithmic_response(self.scheme, &pair, gn, dt, &self.mat, self.z_cut)?;
                (r, Some(t))
            } else {
                (algorithmic_stress(self.scheme, &pair, gn, dt, &self.mat, self.z_cut)?, None)
            };
            gammas_trial[q * m..(q + 1) * m].copy_from_slice(&res.gammas_np1);
            let s = res.s_alg;
            let w = g.wdet;
            let fs = k.f_h.mul_sym(&s);
            let qv: [[f64; 3]; N_Q2] = std::array::from_fn(|a| k.finv_t.mul_vec(&g.grad[a]));
            let jh = k.j_h;
            for a in 0..N_Q2 {
                let fsg = fs.mul_vec(&g.grad[a]);
                for i in 0..3 {
                    let dv = k.v_new[i] - k.v_old[i];
                    re[3 * a + i] += w
                        * (rho * g.n[a] * dv / dt + fsg[i] - k.p_h * jh * qv[a][i] - g.n[a] * rho * body[i]
                            + gamma * jh * qv[a][i] * k.div_v);
                }
            }
            for c in 0..N_Q1 {
                re[3 * N_Q2 + c] += w * g.m[c] * jh * k.div_v;
            }

            let Some(ke) = ke.as_deref_mut() else { continue };
            let t = tangent.expect("tangent computed");
            self.element_tangent(g, &k, &s, &t, &qv, dt, ke);
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn element_tangent(
        &self,
        g: &QpGeom,
        k: &QpKinematics,
        s: &SymTensor2,
        t: &crate::integrators::AlgTangent,
        qv: &[[f64; 3]; N_Q2],
        dt: f64,
        ke: &mut [f64],
    ) {
        let w = g.wdet;
        let rho = self.mat.rho0;
        let gamma = self.gamma;
        let jh = k.j_h;
        let q4 = 0.25 * dt;

        // material stiffness: (dt/2) E_ai : T : D_bk (+ (dt/4) E_ai : T_mid : E_bk)
        let sym_outer = |f: &[f64; 3], gv: &[f64; 3]| -> [f64; 6] {
            [
                f[0] * gv[0],
                f[1] * gv[1],
                f[2] * gv[2],
                0.5 * (f[0] * gv[1] + f[1] * gv[0]),
                0.5 * (f[1] * gv[2] + f[2] * gv[1]),
                0.5 * (f[0] * gv[2] + f[2] * gv[0]),
            ]
        };
        let rows_h = k.f_h.0;
        let rows_1 = k.f_np1.0;
        let mid = self.scheme == SchemeKind::Midpoint;
        // r_ai = w ⊙ E_ai · T ⊙ w, so that r_ai · D_bk = E_ai : T : D_bk
        let weighted_rows = |tt: &SymTensor4| -> Vec<[f64; 6]> {
            let mut out = Vec::with_capacity(3 * N_Q2);
            for a in 0..N_Q2 {
                for row in &rows_h {
                    let ea = sym_outer(row, &g.grad[a]);
                    let mut r = [0.0; 6];
                    for (ii, eai) in ea.iter().enumerate() {
                        let c = eai * WEIGHTS[ii];
                        for (jj, rj) in r.iter_mut().enumerate() {
                            *rj += c * tt.0[ii][jj];
                        }
                    }
                    for (jj, rj) in r.iter_mut().enumerate() {
                        *rj *= WEIGHTS[jj];
                    }
                    out.push(r);
                }
            }
            out
        };
        const NV: usize = 3 * N_Q2;
        // column data in struct-of-arrays form, column index 3b + k
        let soa = |rows: &[[f64; 3]; 3]| -> [[f64; NV]; 6] {
            let mut out = [[0.0; NV]; 6];
            for col in 0..NV {
                let d = sym_outer(&rows[col % 3], &g.grad[col / 3]);
                for j in 0..6 {
                    out[j][col] = d[j];
                }
            }
            out
        };
        let r1 = weighted_rows(&t.d_np1);
        let d1 = soa(&rows_1);
        let (rmid, dmid) = if mid { (weighted_rows(&t.d_mid), soa(&rows_h)) } else { (Vec::new(), [[0.0; NV]; 6]) };

        // M = ∇V_{n+½} F_{n+½}^{-1}; (Mᵀ q_b) = F^{-T} ∇Vᵀ q_b
        let gvt = k.grad_v_h.transpose();
        let mut qf = [0.0; NV];
        let mut wbf = [0.0; NV];
        let mut qb_i = [[0.0; NV]; 3];
        for b in 0..N_Q2 {
            let mt_q = k.finv_t.mul_vec(&gvt.mul_vec(&qv[b]));
            for kk in 0..3 {
                qf[3 * b + kk] = qv[b][kk];
                // w_b = ½ q_b − (dt/4) Mᵀ q_b
                wbf[3 * b + kk] = 0.5 * qv[b][kk] - q4 * mt_q[kk];
                for (i, row) in qb_i.iter_mut().enumerate() {
                    row[3 * b + kk] = qv[b][i];
                }
            }
        }
        let sm = s.to_matrix();
        let alpha = w * q4 * jh * (gamma * k.div_v - k.p_h);
        let gj = w * gamma * jh;
        let cm = 0.5 * dt * w;
        let cmid = 0.25 * dt * w;
        for a in 0..N_Q2 {
            let sg: [f64; 3] =
                std::array::from_fn(|i| sm[i][0] * g.grad[a][0] + sm[i][1] * g.grad[a][1] + sm[i][2] * g.grad[a][2]);
            let diag: [f64; N_Q2] = std::array::from_fn(|b| {
                let gsg = g.grad[b][0] * sg[0] + g.grad[b][1] * sg[1] + g.grad[b][2] * sg[2];
                w * (rho * g.n[a] * g.n[b] / dt + q4 * gsg)
            });
            let qa_rep: [f64; NV] = std::array::from_fn(|col| -alpha * qv[a][col % 3]);
            for i in 0..3 {
                let row = 3 * a + i;
                let out = &mut ke[row * NE..row * NE + NV];
                let ra = r1[row].map(|x| cm * x);
                let (u, v) = (alpha * qv[a][i], gj * qv[a][i]);
                let qbi = &qb_i[i];
                for col in 0..NV {
                    out[col] += ra[0] * d1[0][col]
                        + ra[1] * d1[1][col]
                        + ra[2] * d1[2][col]
                        + ra[3] * d1[3][col]
                        + ra[4] * d1[4][col]
                        + ra[5] * d1[5][col]
                        + u * qf[col]
                        + v * wbf[col]
                        + qa_rep[col] * qbi[col];
                }
                if mid {
                    let rm = rmid[row].map(|x| cmid * x);
                    for col in 0..NV {
                        out[col] += rm[0] * dmid[0][col]
                            + rm[1] * dmid[1][col]
                            + rm[2] * dmid[2][col]
                            + rm[3] * dmid[3][col]
                            + rm[4] * dmid[4][col]
                            + rm[5] * dmid[5][col];
                    }
                }
                for b in 0..N_Q2 {
                    out[3 * b + i] += diag[b];
                }
            }
        }
        // pressure coupling and mass-equation rows
        for c in 0..N_Q1 {
            let mc = g.m[c];
            let col = 3 * N_Q2 + c;
            for a in 0..N_Q2 {
                for i in 0..3 {
                    ke[(3 * a + i) * NE + col] += -0.5 * w * mc * jh * qv[a][i];
                }
            }
            let base = col * NE;
            for b in 0..N_Q2 {
                for kk in 0..3 {
                    ke[base + 3 * b + kk] += w * mc * jh * (q4 * qv[b][kk] * k.div_v + wbf[3 * b + kk]);
                }
            }
        }
    }
}
