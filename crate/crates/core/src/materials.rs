//! Mooney-Rivlin equilibrium response with linear viscoelastic branches.
//!
//! The isochoric Gibbs energy is `G_iso = G∞(C̃) + Σ_α Υ^α(C̃, Γ^α)` with the
//! configurational free energy
//!
//! ```text
//! Υ^α = |S̃^α(C̃) − Ŝ^α_0 − μ^α (Γ^α − I)|² / (4 μ^α) = |Q^α|² / (4 μ^α)
//! ```
//!
//! Two branch energies `G^α` are supported: `HS` (`μ |(C̃ − I)/2|²`) and
//! `MIPC` (`β∞ G∞`). Both have a constant `∂S̃^α/∂C̃`, which the tangent code
//! relies on.

use crate::error::{Error, Result};
use crate::kinematics::projection_from_parts;
use crate::tensors::{ddot, sym_inverse, SymTensor2, SymTensor4};

/// `G∞ = c1/2 (Ĩ1 − 3) + c2/2 (Ĩ2 − 3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriumModel {
    pub c1: f64,
    pub c2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BranchKind {
    Hs,
    Mipc,
}

/// One viscoelastic relaxation process.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViscoBranch {
    pub kind: BranchKind,
    pub mu: f64,
    pub eta: f64,
    /// Energy factor of the MIPC branch; ignored by HS.
    pub beta_inf: f64,
    pub s_hat0: SymTensor2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialParams {
    pub rho0: f64,
    pub equilibrium: EquilibriumModel,
    pub branches: Vec<ViscoBranch>,
}

/// Branch energy, fictitious stress and its derivative at one `C̃`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchEval {
    pub g: f64,
    pub s: SymTensor2,
    pub d: SymTensor4,
}

impl EquilibriumModel {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 >= 0.0 && c2 >= 0.0 && c1 + c2 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "Mooney-Rivlin constants need c1, c2 >= 0 and c1 + c2 > 0 (got {c1}, {c2})"
            )));
        }
        Ok(EquilibriumModel { c1, c2 })
    }
}

impl ViscoBranch {
    /// Branch at rest in the undeformed configuration: `Γ_0 = I`, `Q_0 = 0`,
    /// hence `Ŝ_0 = S̃^α(I)`.
    pub fn new(kind: BranchKind, mu: f64, eta: f64, beta_inf: f64, eq: &EquilibriumModel) -> Result<Self> {
        Self::with_initial_ctilde(kind, mu, eta, beta_inf, eq, &SymTensor2::identity())
    }

    /// Branch at equilibrium (`Q_0 = 0`, `Γ_0 = I`) in the configuration `C̃_0`.
    pub fn with_initial_ctilde(
        kind: BranchKind,
        mu: f64,
        eta: f64,
        beta_inf: f64,
        eq: &EquilibriumModel,
        ctilde0: &SymTensor2,
    ) -> Result<Self> {
        if !(mu > 0.0 && eta > 0.0) {
            return Err(Error::InvalidInput(format!("branch needs mu > 0 and eta > 0 (got {mu}, {eta})")));
        }
        if kind == BranchKind::Mipc && !(beta_inf > 0.0) {
            return Err(Error::InvalidInput(format!("MIPC branch needs beta_inf > 0 (got {beta_inf})")));
        }
        let mut b = ViscoBranch { kind, mu, eta, beta_inf, s_hat0: SymTensor2::zero() };
        b.s_hat0 = branch_eval(ctilde0, &b, eq).s;
        Ok(b)
    }

    /// `τ = η / μ`.
    pub fn relaxation_time(&self) -> f64 {
        self.eta / self.mu
    }
}

impl MaterialParams {
    pub fn new(rho0: f64, equilibrium: EquilibriumModel, branches: Vec<ViscoBranch>) -> Result<Self> {
        if !(rho0 > 0.0) {
            return Err(Error::InvalidInput(format!("rho0 must be positive (got {rho0})")));
        }
        Ok(MaterialParams { rho0, equilibrium, branches })
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    /// Internal variables of a material at rest.
    pub fn rest_gammas(&self) -> Vec<SymTensor2> {
        vec![SymTensor2::identity(); self.branches.len()]
    }
}

/// `(Ĩ1, Ĩ2)` with `Ĩ2 = ½(Ĩ1² − tr C̃²)`.
pub fn isochoric_invariants(ctilde: &SymTensor2) -> (f64, f64) {
    let i1 = ctilde.trace();
    let i2 = 0.5 * (i1 * i1 - ctilde.square().trace());
    (i1, i2)
}

/// `(G∞, S̃∞)` with `S̃∞ = c1 I + c2 (Ĩ1 I − C̃)`.
pub fn equilibrium_eval(ctilde: &SymTensor2, eq: &EquilibriumModel) -> (f64, SymTensor2) {
    let (i1, i2) = isochoric_invariants(ctilde);
    let g = 0.5 * eq.c1 * (i1 - 3.0) + 0.5 * eq.c2 * (i2 - 3.0);
    let s = SymTensor2::identity().scale(eq.c1 + eq.c2 * i1) - ctilde.scale(eq.c2);
    (g, s)
}

/// `∂S̃∞/∂C̃ = c2 (I ⊗ I − 𝕀)`, independent of `C̃`.
pub fn equilibrium_tangent(eq: &EquilibriumModel) -> SymTensor4 {
    let i = SymTensor2::identity();
    (SymTensor4::dyad(&i, &i) - SymTensor4::identity()).scale(eq.c2)
}

pub fn branch_eval(ctilde: &SymTensor2, b: &ViscoBranch, eq: &EquilibriumModel) -> BranchEval {
    match b.kind {
        BranchKind::Hs => {
            let e = *ctilde - SymTensor2::identity();
            BranchEval {
                g: 0.25 * b.mu * e.norm_sq(),
                s: e.scale(b.mu),
                d: SymTensor4::identity().scale(b.mu),
            }
        }
        BranchKind::Mipc => {
            let (g, s) = equilibrium_eval(ctilde, eq);
            BranchEval {
                g: b.beta_inf * g,
                s: s.scale(b.beta_inf),
                d: equilibrium_tangent(eq).scale(b.beta_inf),
            }
        }
    }
}

/// `∂S̃^α/∂C̃` (constant for the supported branch kinds).
pub fn branch_tangent(b: &ViscoBranch, eq: &EquilibriumModel) -> SymTensor4 {
    match b.kind {
        BranchKind::Hs => SymTensor4::identity().scale(b.mu),
        BranchKind::Mipc => equilibrium_tangent(eq).scale(b.beta_inf),
    }
}

/// Fictitious branch stress `S̃^α(C̃)` alone.
pub fn branch_stress(ctilde: &SymTensor2, b: &ViscoBranch, eq: &EquilibriumModel) -> SymTensor2 {
    match b.kind {
        BranchKind::Hs => (*ctilde - SymTensor2::identity()).scale(b.mu),
        BranchKind::Mipc => equilibrium_eval(ctilde, eq).1.scale(b.beta_inf),
    }
}

/// `Q^α = S̃^α(C̃) − Ŝ0 − μ (Γ − I) = −2 ∂Υ^α/∂Γ`.
pub fn conjugate_q(ctilde: &SymTensor2, gamma: &SymTensor2, b: &ViscoBranch, eq: &EquilibriumModel) -> SymTensor2 {
    q_from_stress(&branch_stress(ctilde, b, eq), gamma, b)
}

#[inline]
pub(crate) fn q_from_stress(s_alpha: &SymTensor2, gamma: &SymTensor2, b: &ViscoBranch) -> SymTensor2 {
    *s_alpha - b.s_hat0 - (*gamma - SymTensor2::identity()).scale(b.mu)
}

/// `Υ^α = |Q^α|² / (4 μ^α)`.
pub fn upsilon(ctilde: &SymTensor2, gamma: &SymTensor2, b: &ViscoBranch, eq: &EquilibriumModel) -> f64 {
    conjugate_q(ctilde, gamma, b, eq).norm_sq() / (4.0 * b.mu)
}

/// `S̃^α_neq = (1/μ) ∂S̃^α/∂C̃ : Q^α`.
pub fn noneq_fictitious_stress(
    ctilde: &SymTensor2,
    gamma: &SymTensor2,
    b: &ViscoBranch,
    eq: &EquilibriumModel,
) -> SymTensor2 {
    let q = conjugate_q(ctilde, gamma, b, eq);
    match b.kind {
        BranchKind::Hs => q,
        BranchKind::Mipc => branch_tangent(b, eq).apply(&q).scale(1.0 / b.mu),
    }
}

/// Total fictitious stress `S̃ = S̃∞ + Σ_α S̃^α_neq`.
pub fn fictitious_stress(ctilde: &SymTensor2, gammas: &[SymTensor2], mat: &MaterialParams) -> SymTensor2 {
    debug_assert_eq!(gammas.len(), mat.branches.len());
    let eq = &mat.equilibrium;
    let mut s = equilibrium_eval(ctilde, eq).1;
    for (b, g) in mat.branches.iter().zip(gammas) {
        s += noneq_fictitious_stress(ctilde, g, b, eq);
    }
    s
}

/// Isochoric second Piola-Kirchhoff stress `S_iso = det(C)^{-1/3} ℙ(C) : S̃`.
///
/// Every `C̃`-dependent term is evaluated at `det(C)^{-1/3} C`.
///
/// # Errors
///
/// [`Error::NonPositiveJacobian`] when `det C ≤ 0`.
pub fn iso_pk2(c: &SymTensor2, gammas: &[SymTensor2], mat: &MaterialParams) -> Result<SymTensor2> {
    let det = c.det();
    if !(det > 0.0) {
        return Err(Error::NonPositiveJacobian { jacobian: det });
    }
    let s = det.powf(-1.0 / 3.0);
    let cinv = sym_inverse(c)?;
    let st = fictitious_stress(&c.scale(s), gammas, mat);
    Ok(project(c, &cinv, &st).scale(s))
}

/// `ℙ : A = A − ⅓ (C : A) C⁻¹`.
#[inline]
fn project(c: &SymTensor2, cinv: &SymTensor2, a: &SymTensor2) -> SymTensor2 {
    *a - cinv.scale(ddot(c, a) / 3.0)
}

/// `G_iso = G∞ + Σ_α Υ^α`.
pub fn gibbs_iso(ctilde: &SymTensor2, gammas: &[SymTensor2], mat: &MaterialParams) -> f64 {
    debug_assert_eq!(gammas.len(), mat.branches.len());
    let eq = &mat.equilibrium;
    let mut g = equilibrium_eval(ctilde, eq).0;
    for (b, gam) in mat.branches.iter().zip(gammas) {
        g += upsilon(ctilde, gam, b, eq);
    }
    g
}

/// `G_iso(C̃_b, Γ) − G_iso(C̃_a, Γ)` given an accurate `ΔC̃ = C̃_b − C̃_a`.
///
/// Uses the polynomial structure of the energies, so the result keeps its
/// relative accuracy when `ΔC̃` is tiny.
pub fn gibbs_iso_increment(
    ctilde_a: &SymTensor2,
    ctilde_b: &SymTensor2,
    dctilde: &SymTensor2,
    gammas: &[SymTensor2],
    mat: &MaterialParams,
) -> f64 {
    debug_assert_eq!(gammas.len(), mat.branches.len());
    let eq = &mat.equilibrium;
    let di1 = dctilde.trace();
    let di2 = 0.5 * (di1 * (ctilde_a.trace() + ctilde_b.trace()) - ddot(&(*ctilde_a + *ctilde_b), dctilde));
    let mut dg = 0.5 * (eq.c1 * di1 + eq.c2 * di2);
    for (b, gam) in mat.branches.iter().zip(gammas) {
        let qa = conjugate_q(ctilde_a, gam, b, eq);
        let dq = branch_tangent(b, eq).apply(dctilde);
        dg += ddot(&dq, &(qa + qa + dq)) / (4.0 * b.mu);
    }
    dg
}

/// Stress and fixed-`Γ` tangent of [`iso_pk2`], with the pieces needed for
/// chain rules through `Γ`.
#[derive(Clone, Debug)]
pub struct IsoResponse {
    pub s: SymTensor2,
    /// `2 ∂S_iso/∂C` at fixed `Γ`.
    pub tangent: SymTensor4,
    /// `det(C)^{-1/3}`.
    pub scale: f64,
    pub proj: SymTensor4,
}

impl IsoResponse {
    /// `∂S_iso/∂Γ^α = −det(C)^{-1/3} ℙ ∘ ∂S̃^α/∂C̃`.
    pub fn d_gamma(&self, b: &ViscoBranch, eq: &EquilibriumModel) -> SymTensor4 {
        self.proj.compose(&branch_tangent(b, eq)).scale(-self.scale)
    }
}

/// [`iso_pk2`] together with `2 ∂S_iso/∂C` at fixed internal variables.
pub fn iso_pk2_tangent(c: &SymTensor2, gammas: &[SymTensor2], mat: &MaterialParams) -> Result<IsoResponse> {
    let det = c.det();
    if !(det > 0.0) {
        return Err(Error::NonPositiveJacobian { jacobian: det });
    }
    let s = det.powf(-1.0 / 3.0);
    let cinv = sym_inverse(c)?;
    let ctilde = c.scale(s);
    let eq = &mat.equilibrium;
    let st = fictitious_stress(&ctilde, gammas, mat);
    let stress = project(c, &cinv, &st).scale(s);

    // ∂S̃/∂C̃ = ∂S̃∞/∂C̃ + Σ (1/μ) 𝔻^α ∘ 𝔻^α
    let mut dst = equilibrium_tangent(eq);
    for b in &mat.branches {
        let d = branch_tangent(b, eq);
        dst += d.compose(&d).scale(1.0 / b.mu);
    }
    let proj = projection_from_parts(c, &cinv);
    let third = 1.0 / 3.0;
    let mut t = proj.compose(&dst).compose(&proj.transpose()).scale(2.0 * s * s);
    t += SymTensor4::dyad(&stress, &cinv).scale(-2.0 * third);
    t += SymTensor4::dyad(&cinv, &st).scale(-2.0 * third * s);
    t += SymTensor4::odot(&cinv, &cinv).scale(2.0 * third * s * ddot(c, &st));
    Ok(IsoResponse { s: stress, tangent: t, scale: s, proj })
}
