//! Time-discrete constitutive integration.
//!
//! Both energy-momentum schemes evaluate the isochoric stress at the averaged
//! Cauchy-Green tensor `C_{n+½} = (C_n + C_{n+1})/2` with `Γ_{n+½}` and add a
//! stress enhancement along `Z_n = (C_{n+1} − C_n)/2`, so that
//!
//! ```text
//! Z_n : S_alg = G_iso(C̃_{n+1}, Γ_{n+1}) − G_iso(C̃_n, Γ_n) + dt/2 Σ_α η^α |ΔΓ^α/dt|²
//! ```
//!
//! holds exactly. Scheme-1 updates `Γ` explicitly from `C̃_n`; Scheme-2 uses
//! the average of the branch stresses at both ends and is second-order
//! accurate. The mid-point comparator evaluates the stress at
//! `F_{n+½}ᵀ F_{n+½}` without any enhancement.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kinematics::{projection_from_parts, StepPair};
use crate::materials::{
    branch_stress, branch_tangent, gibbs_iso, gibbs_iso_increment, iso_pk2, iso_pk2_tangent, q_from_stress, EquilibriumModel,
    MaterialParams, ViscoBranch,
};
use crate::tensors::{ddot, sym_inverse, SymTensor2, SymTensor4, Tensor2};

/// Default cutoff on `|Z_n|` below which the stress enhancement is dropped.
pub const DEFAULT_Z_CUT: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Scheme1,
    Scheme2,
    Midpoint,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Scheme1 => "scheme-1",
            SchemeKind::Scheme2 => "scheme-2",
            SchemeKind::Midpoint => "midpoint",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "s1" | "scheme1" | "scheme-1" => Ok(SchemeKind::Scheme1),
            "2" | "s2" | "scheme2" | "scheme-2" => Ok(SchemeKind::Scheme2),
            "mp" | "midpoint" | "mid-point" => Ok(SchemeKind::Midpoint),
            other => Err(Error::InvalidInput(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Result of one algorithmic stress evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgStressResult {
    pub s_alg: SymTensor2,
    pub gammas_np1: Vec<SymTensor2>,
    pub enhancement_active: bool,
    /// `G_iso(C̃_{n+1}, ·)` with the scheme's internal-variable argument.
    pub g_iso_plus: f64,
    /// `G_iso(C̃_n, ·)` with the same argument.
    pub g_iso_minus: f64,
    pub z_norm: f64,
    /// Stress before enhancement.
    pub s_half: SymTensor2,
    pub s_enh: SymTensor2,
}

/// Derivatives of the algorithmic stress.
///
/// `d_np1 = 2 ∂S_alg/∂C_{n+1}` with `F_{n+½}` held fixed, and
/// `d_mid = 2 ∂S_alg/∂(F_{n+½}ᵀF_{n+½})`, which is nonzero only for the
/// mid-point comparator.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgTangent {
    pub d_np1: SymTensor4,
    pub d_mid: SymTensor4,
}

#[inline]
fn gain(dt: f64, b: &ViscoBranch) -> f64 {
    dt / (b.eta + 0.5 * b.mu * dt)
}

/// Scheme-1 update of one branch, explicit in `C̃_n`.
pub fn update_gamma_s1(
    ctilde_n: &SymTensor2,
    gamma_n: &SymTensor2,
    dt: f64,
    b: &ViscoBranch,
    eq: &EquilibriumModel,
) -> SymTensor2 {
    let s = branch_stress(ctilde_n, b, eq);
    update_from_stress(&s, gamma_n, dt, b)
}

/// Scheme-2 update of one branch, using the averaged branch stress.
pub fn update_gamma_s2(
    ctilde_n: &SymTensor2,
    ctilde_np1: &SymTensor2,
    gamma_n: &SymTensor2,
    dt: f64,
    b: &ViscoBranch,
    eq: &EquilibriumModel,
) -> SymTensor2 {
    let s = (branch_stress(ctilde_n, b, eq) + branch_stress(ctilde_np1, b, eq)).scale(0.5);
    update_from_stress(&s, gamma_n, dt, b)
}

fn update_from_stress(s: &SymTensor2, gamma_n: &SymTensor2, dt: f64, b: &ViscoBranch) -> SymTensor2 {
    let rhs = *s - b.s_hat0 + gamma_n.scale(b.eta / dt - 0.5 * b.mu) + SymTensor2::identity().scale(b.mu);
    rhs.scale(gain(dt, b))
}

/// Algorithmic conjugate variable of one branch.
///
/// # Errors
///
/// [`Error::UnsupportedScheme`] for the mid-point comparator.
pub fn q_alg(
    scheme: SchemeKind,
    ctilde_n: &SymTensor2,
    ctilde_np1: &SymTensor2,
    gamma_n: &SymTensor2,
    gamma_np1: &SymTensor2,
    b: &ViscoBranch,
    eq: &EquilibriumModel,
) -> Result<SymTensor2> {
    let s = match scheme {
        SchemeKind::Scheme1 => branch_stress(ctilde_n, b, eq),
        SchemeKind::Scheme2 => (branch_stress(ctilde_n, b, eq) + branch_stress(ctilde_np1, b, eq)).scale(0.5),
        SchemeKind::Midpoint => return Err(Error::UnsupportedScheme(SchemeKind::Midpoint.name())),
    };
    Ok(q_from_stress(&s, &(*gamma_n + *gamma_np1).scale(0.5), b))
}

/// Updated internal variables of every branch for the given scheme.
pub fn update_gammas(
    scheme: SchemeKind,
    pair: &StepPair,
    gammas_n: &[SymTensor2],
    dt: f64,
    mat: &MaterialParams,
) -> Vec<SymTensor2> {
    let eq = &mat.equilibrium;
    mat.branches
        .iter()
        .zip(gammas_n)
        .map(|(b, g)| match scheme {
            SchemeKind::Scheme1 => update_gamma_s1(&pair.ctilde_n, g, dt, b, eq),
            _ => update_gamma_s2(&pair.ctilde_n, &pair.ctilde_np1, g, dt, b, eq),
        })
        .collect()
}

/// Algorithmic stress of the chosen scheme.
///
/// # Errors
///
/// Kinematic errors (non-positive determinants) of the step pair.
pub fn algorithmic_stress(
    scheme: SchemeKind,
    pair: &StepPair,
    gammas_n: &[SymTensor2],
    dt: f64,
    mat: &MaterialParams,
    z_cut: f64,
) -> Result<AlgStressResult> {
    Ok(evaluate(scheme, pair, gammas_n, dt, mat, z_cut, false)?.0)
}

/// Consistent tangent of [`algorithmic_stress`].
pub fn algorithmic_tangent(
    scheme: SchemeKind,
    pair: &StepPair,
    gammas_n: &[SymTensor2],
    dt: f64,
    mat: &MaterialParams,
    z_cut: f64,
) -> Result<AlgTangent> {
    Ok(evaluate(scheme, pair, gammas_n, dt, mat, z_cut, true)?.1.expect("tangent requested"))
}

/// Stress and tangent in a single pass.
pub fn algorithmic_response(
    scheme: SchemeKind,
    pair: &StepPair,
    gammas_n: &[SymTensor2],
    dt: f64,
    mat: &MaterialParams,
    z_cut: f64,
) -> Result<(AlgStressResult, AlgTangent)> {
    let (s, t) = evaluate(scheme, pair, gammas_n, dt, mat, z_cut, true)?;
    Ok((s, t.expect("tangent requested")))
}

/// `[(ΔG − S_{n+½} : Z)/|Z|²] Z`, or `None` when `|Z| < z_cut`.
pub fn stress_enhancement(delta_g: f64, s_half: &SymTensor2, z: &SymTensor2, z_cut: f64) -> Option<SymTensor2> {
    let z2 = z.norm_sq();
    if z2.sqrt() < z_cut {
        return None;
    }
    Some(z.scale((delta_g - ddot(s_half, z)) / z2))
}

/// `∂Γ^α_{n+1}/∂C_{n+1}` of the Scheme-2 update.
fn gamma_sensitivity(b: &ViscoBranch, eq: &EquilibriumModel, dt: f64, s1: f64, proj1_t: &SymTensor4) -> SymTensor4 {
    branch_tangent(b, eq).compose(proj1_t).scale(0.5 * gain(dt, b) * s1)
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    scheme: SchemeKind,
    pair: &StepPair,
    gammas_n: &[SymTensor2],
    dt: f64,
    mat: &MaterialParams,
    z_cut: f64,
    want_tangent: bool,
) -> Result<(AlgStressResult, Option<AlgTangent>)> {
    if gammas_n.len() != mat.branches.len() {
        return Err(Error::InvalidInput(format!(
            "{} internal variables for {} branches",
            gammas_n.len(),
            mat.branches.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive (got {dt})")));
    }
    let eq = &mat.equilibrium;
    let gammas_np1 = update_gammas(scheme, pair, gammas_n, dt, mat);
    let gammas_h: Vec<SymTensor2> = gammas_n.iter().zip(&gammas_np1).map(|(a, b)| (*a + *b).scale(0.5)).collect();
    let z = pair.z;
    let z_norm = z.norm();

    // Sensitivities of Γ_{n+1} are only needed when Γ_{n+1} depends on C_{n+1}.
    let sens = if want_tangent && scheme != SchemeKind::Scheme1 && !mat.branches.is_empty() {
        let c1 = &pair.c_np1;
        let det1 = c1.det();
        if !(det1 > 0.0) {
            return Err(Error::NonPositiveJacobian { jacobian: det1 });
        }
        let s1 = det1.powf(-1.0 / 3.0);
        let p1t = projection_from_parts(c1, &sym_inverse(c1)?).transpose();
        mat.branches.iter().map(|b| gamma_sensitivity(b, eq, dt, s1, &p1t)).collect()
    } else {
        Vec::new()
    };

    if scheme == SchemeKind::Midpoint {
        let c_mp = pair.c_mid_config();
        let g_plus = gibbs_iso(&pair.ctilde_np1, &gammas_np1, mat);
        let g_minus = gibbs_iso(&pair.ctilde_n, gammas_n, mat);
        let (s, tangent) = if want_tangent {
            let r = iso_pk2_tangent(&c_mp, &gammas_h, mat)?;
            let mut d_np1 = SymTensor4::zero();
            for (b, dg) in mat.branches.iter().zip(&sens) {
                d_np1 += r.d_gamma(b, eq).compose(dg);
            }
            (r.s, Some(AlgTangent { d_np1, d_mid: r.tangent }))
        } else {
            (iso_pk2(&c_mp, &gammas_h, mat)?, None)
        };
        let res = AlgStressResult {
            s_alg: s,
            gammas_np1,
            enhancement_active: false,
            g_iso_plus: g_plus,
            g_iso_minus: g_minus,
            z_norm,
            s_half: s,
            s_enh: SymTensor2::zero(),
        };
        return Ok((res, tangent));
    }

    let (g_plus, g_minus) = {
        let eg = if scheme == SchemeKind::Scheme1 { &gammas_np1 } else { &gammas_h };
        (gibbs_iso(&pair.ctilde_np1, eg, mat), gibbs_iso(&pair.ctilde_n, eg, mat))
    };
    let active = z_norm >= z_cut;

    let (s_half, kh) = if want_tangent {
        let r = iso_pk2_tangent(&pair.c_half, &gammas_h, mat)?;
        let mut kh = r.tangent.scale(0.5);
        for (b, dg) in mat.branches.iter().zip(&sens) {
            kh += r.d_gamma(b, eq).compose(dg);
        }
        (r.s, Some(kh))
    } else {
        (iso_pk2(&pair.c_half, &gammas_h, mat)?, None)
    };

    let mut result = AlgStressResult {
        s_alg: s_half,
        gammas_np1,
        enhancement_active: active,
        g_iso_plus: g_plus,
        g_iso_minus: g_minus,
        z_norm,
        s_half,
        s_enh: SymTensor2::zero(),
    };
    if !active {
        return Ok((result, kh.map(|d_np1| AlgTangent { d_np1, d_mid: SymTensor4::zero() })));
    }

    let z2 = z_norm * z_norm;
    let dg = {
        let eg = if scheme == SchemeKind::Scheme1 { &result.gammas_np1 } else { &gammas_h };
        gibbs_iso_increment(&pair.ctilde_n, &pair.ctilde_np1, &pair.dctilde, eg, mat)
    };
    let beta = (dg - ddot(&s_half, &z)) / z2;
    result.s_enh = stress_enhancement(dg, &s_half, &z, z_cut).unwrap_or_default();
    result.s_alg = s_half + result.s_enh;

    let tangent = match kh {
        None => None,
        Some(kh) => {
            // 2 ∂ΔG/∂C_{n+1}
            let eg = if scheme == SchemeKind::Scheme1 { &result.gammas_np1 } else { &gammas_h };
            let mut g = iso_pk2(&pair.c_np1, eg, mat)?;
            if scheme == SchemeKind::Scheme2 {
                for (b, dg) in mat.branches.iter().zip(&sens) {
                    let ds = branch_stress(&pair.ctilde_np1, b, eq) - branch_stress(&pair.ctilde_n, b, eq);
                    g -= dg.transpose().apply(&ds).scale(0.5);
                }
            }
            let w = g - kh.transpose().apply(&z) - s_half;
            let mut t = kh;
            t += (SymTensor4::identity() - SymTensor4::dyad(&z, &z).scale(2.0 / z2)).scale(beta);
            t += SymTensor4::dyad(&z, &w).scale(1.0 / z2);
            Some(AlgTangent { d_np1: t, d_mid: SymTensor4::zero() })
        }
    };
    Ok((result, tangent))
}

/// One step of a material-point trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialPointStep {
    pub t: f64,
    pub c: SymTensor2,
    pub gammas: Vec<SymTensor2>,
    /// `η (Γ_{n+1} − Γ_n)/dt` per branch; zero for the initial state.
    pub qs: Vec<SymTensor2>,
    pub s_alg: SymTensor2,
    pub s_enh: SymTensor2,
    /// `Σ_α Υ^α` at the end of the step.
    pub upsilon: f64,
    pub g_iso: f64,
    /// `dt/2 Σ_α η^α |ΔΓ^α/dt|²` over the step.
    pub dissipation: f64,
    /// `Z_n : S_alg − (ΔG_iso + dissipation)`.
    pub directionality_residual: f64,
}

/// Integrates the internal variables along a prescribed deformation path.
///
/// `path(t)` returns the deformation gradient; its Cauchy-Green tensor drives
/// the two energy-momentum schemes and its mid-step average drives the
/// mid-point comparator. The first entry of the result is the initial state
/// at `times[0]` with `initial_gammas`.
///
/// # Errors
///
/// [`Error::InvalidInput`] for a non-increasing time grid or a wrong number of
/// internal variables, and kinematic errors for invalid path samples.
pub fn material_point_run<P>(
    path: P,
    times: &[f64],
    initial_gammas: &[SymTensor2],
    scheme: SchemeKind,
    mat: &MaterialParams,
    z_cut: f64,
) -> Result<Vec<MaterialPointStep>>
where
    P: Fn(f64) -> Tensor2,
{
    if times.is_empty() {
        return Err(Error::InvalidInput("empty time grid".into()));
    }
    if initial_gammas.len() != mat.branches.len() {
        return Err(Error::InvalidInput("one internal variable per branch required".into()));
    }
    let sample = |t: f64| -> Result<(Tensor2, SymTensor2)> {
        let f = path(t);
        if !f.is_finite() || !(f.det() > 0.0) {
            return Err(Error::InvalidInput(format!("invalid path sample at t = {t}")));
        }
        Ok((f, f.gram()))
    };
    let (mut f_n, mut c_n) = sample(times[0])?;
    let mut gammas = initial_gammas.to_vec();
    let ct0 = crate::kinematics::unimodular(&c_n)?;
    let eq = &mat.equilibrium;
    let ups = |ct: &SymTensor2, gs: &[SymTensor2]| -> f64 {
        mat.branches.iter().zip(gs).map(|(b, g)| crate::materials::upsilon(ct, g, b, eq)).sum()
    };
    let mut out = Vec::with_capacity(times.len());
    out.push(MaterialPointStep {
        t: times[0],
        c: c_n,
        gammas: gammas.clone(),
        qs: vec![SymTensor2::zero(); gammas.len()],
        s_alg: iso_pk2(&c_n, &gammas, mat)?,
        s_enh: SymTensor2::zero(),
        upsilon: ups(&ct0, &gammas),
        g_iso: gibbs_iso(&ct0, &gammas, mat),
        dissipation: 0.0,
        directionality_residual: 0.0,
    });
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        if !(dt > 0.0) {
            return Err(Error::InvalidInput("time grid must be strictly increasing".into()));
        }
        let (f1, c1) = sample(w[1])?;
        let pair = StepPair::from_c(&c_n, &c1, &(f_n + f1).scale(0.5))?;
        let r = algorithmic_stress(scheme, &pair, &gammas, dt, mat, z_cut)?;
        let qs: Vec<SymTensor2> = mat
            .branches
            .iter()
            .zip(gammas.iter().zip(&r.gammas_np1))
            .map(|(b, (g0, g1))| (*g1 - *g0).scale(b.eta / dt))
            .collect();
        let dissipation: f64 = mat
            .branches
            .iter()
            .zip(&qs)
            .map(|(b, q)| 0.5 * dt * q.norm_sq() / b.eta)
            .sum();
        let g_prev = gibbs_iso(&pair.ctilde_n, &gammas, mat);
        let g_next = gibbs_iso(&pair.ctilde_np1, &r.gammas_np1, mat);
        let residual = ddot(&pair.z, &r.s_alg) - (g_next - g_prev + dissipation);
        out.push(MaterialPointStep {
            t: w[1],
            c: c1,
            gammas: r.gammas_np1.clone(),
            qs,
            s_alg: r.s_alg,
            s_enh: r.s_enh,
            upsilon: ups(&pair.ctilde_np1, &r.gammas_np1),
            g_iso: g_next,
            dissipation,
            directionality_residual: residual,
        });
        gammas = r.gammas_np1;
        f_n = f1;
        c_n = c1;
    }
    Ok(out)
}
