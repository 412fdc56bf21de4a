//! Deformation measures at a material point and the step-pair quantities
//! of the time-discrete scheme.

use crate::error::{Error, Result};
use crate::tensors::{ddot, sym_inverse, SymTensor2, SymTensor4, Tensor2};

/// Deformation state at one material point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeformationState {
    pub f: Tensor2,
    pub j: f64,
    pub c: SymTensor2,
    pub cinv: SymTensor2,
    pub ctilde: SymTensor2,
}

/// Quantities shared by the two ends of a time step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepPair {
    pub c_n: SymTensor2,
    pub c_np1: SymTensor2,
    /// Arithmetic mean of `c_n` and `c_np1` (not `F_halfᵀ F_half`).
    pub c_half: SymTensor2,
    pub ctilde_half: SymTensor2,
    /// `(C_{n+1} - C_n) / 2`.
    pub z: SymTensor2,
    pub f_half: Tensor2,
    pub j_half: f64,
    pub ctilde_n: SymTensor2,
    pub ctilde_np1: SymTensor2,
    /// `C̃_{n+1} − C̃_n`, formed without cancellation for small `Z`.
    pub dctilde: SymTensor2,
}

/// `det(C)^{-1/3} C`, the unimodular part of a right Cauchy-Green tensor.
pub fn unimodular(c: &SymTensor2) -> Result<SymTensor2> {
    let det = c.det();
    if !(det > 0.0) {
        return Err(Error::NonPositiveJacobian { jacobian: det });
    }
    Ok(c.scale(det.powf(-1.0 / 3.0)))
}

/// `det(A + B) − det(A)`, expanded so that it stays accurate for small `B`.
pub fn det_increment(a: &SymTensor2, b: &SymTensor2) -> f64 {
    ddot(&a.adjugate(), b) + ddot(a, &b.adjugate()) + b.det()
}

/// `unimodular(C + ΔC) − unimodular(C)` with relative accuracy in `ΔC`.
pub fn unimodular_increment(c: &SymTensor2, dc: &SymTensor2) -> Result<SymTensor2> {
    let det = c.det();
    let dd = det_increment(c, dc);
    if !(det > 0.0 && det + dd > 0.0) {
        return Err(Error::NonPositiveJacobian { jacobian: det.min(det + dd) });
    }
    let s = det.powf(-1.0 / 3.0);
    let ds = s * (-(dd / det).ln_1p() / 3.0).exp_m1();
    Ok(dc.scale(s + ds) + c.scale(ds))
}

/// Builds the state from a displacement gradient `∇U`, with `F = I + ∇U`.
///
/// # Errors
///
/// [`Error::NonPositiveJacobian`] when `det F ≤ 0`.
pub fn deformation_from_grad(grad_u: &Tensor2) -> Result<DeformationState> {
    deformation_from_f(&(Tensor2::identity() + *grad_u))
}

pub fn deformation_from_f(f: &Tensor2) -> Result<DeformationState> {
    let j = f.det();
    if !(j > 0.0) {
        return Err(Error::NonPositiveJacobian { jacobian: j });
    }
    let c = f.gram();
    let cinv = sym_inverse(&c)?;
    let ctilde = c.scale(j.powf(-2.0 / 3.0));
    Ok(DeformationState { f: *f, j, c, cinv, ctilde })
}

pub fn step_pair(state_n: &DeformationState, state_np1: &DeformationState, f_half: &Tensor2) -> StepPair {
    let c_half = (state_n.c + state_np1.c).scale(0.5);
    // Positive definite as the mean of two positive definite tensors.
    let ctilde_half = c_half.scale(c_half.det().powf(-1.0 / 3.0));
    let dctilde = unimodular_increment(&state_n.c, &(state_np1.c - state_n.c))
        .unwrap_or(state_np1.ctilde - state_n.ctilde);
    StepPair {
        c_n: state_n.c,
        c_np1: state_np1.c,
        c_half,
        ctilde_half,
        z: (state_np1.c - state_n.c).scale(0.5),
        f_half: *f_half,
        j_half: f_half.det(),
        ctilde_n: state_n.ctilde,
        ctilde_np1: state_np1.ctilde,
        dctilde,
    }
}

impl StepPair {
    /// Builds a pair directly from the two Cauchy-Green tensors.
    ///
    /// Used by material-point drivers and tangent checks, where `C_{n+1}` is
    /// perturbed without an underlying displacement field.
    pub fn from_c(c_n: &SymTensor2, c_np1: &SymTensor2, f_half: &Tensor2) -> Result<StepPair> {
        let c_half = (*c_n + *c_np1).scale(0.5);
        Ok(StepPair {
            c_n: *c_n,
            c_np1: *c_np1,
            c_half,
            ctilde_half: unimodular(&c_half)?,
            z: (*c_np1 - *c_n).scale(0.5),
            f_half: *f_half,
            j_half: f_half.det(),
            ctilde_n: unimodular(c_n)?,
            ctilde_np1: unimodular(c_np1)?,
            dctilde: unimodular_increment(c_n, &(*c_np1 - *c_n))?,
        })
    }

    /// `F_halfᵀ F_half`, the configuration used by the mid-point comparator.
    pub fn c_mid_config(&self) -> SymTensor2 {
        self.f_half.gram()
    }
}

/// Projection `ℙ = 𝕀 − ⅓ C⁻¹ ⊗ C`.
pub fn projection_tensor(c: &SymTensor2) -> Result<SymTensor4> {
    let cinv = sym_inverse(c)?;
    Ok(projection_from_parts(c, &cinv))
}

pub(crate) fn projection_from_parts(c: &SymTensor2, cinv: &SymTensor2) -> SymTensor4 {
    SymTensor4::identity() - SymTensor4::dyad(cinv, c).scale(1.0 / 3.0)
}
