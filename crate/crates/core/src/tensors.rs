//! Fixed-size tensor algebra in three dimensions.
//!
//! Storage conventions, used by every module of the crate:
//!
//! * [`SymTensor2`] keeps the six independent components of a symmetric
//!   3×3 tensor in the order `(11, 22, 33, 12, 23, 13)`.
//! * [`SymTensor4`] keeps the *true* components `T_ijkl` of a rank-four
//!   tensor with both minor symmetries in a 6×6 array, `T[I][J] = T_ijkl`
//!   with `I ~ (ij)` and `J ~ (kl)` in the same ordering. No factors of two
//!   are folded into the storage. Contractions over a symmetric index pair
//!   therefore carry the weight `w = (1, 1, 1, 2, 2, 2)`:
//!
//!   ```text
//!   (T : A)_I   = Σ_J T_IJ w_J A_J
//!   (A ∘ B)_IK  = Σ_J A_IJ w_J B_JK
//!   A : B       = Σ_I w_I A_I B_I
//!   ```
//!
//! The only places that translate to and from full index notation are
//! [`SymTensor2::from_matrix`]/[`SymTensor2::to_matrix`] and
//! [`SymTensor4::from_full`]/[`SymTensor4::to_full`].

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Contraction weights of the symmetric storage slots.
pub const WEIGHTS: [f64; 6] = [1.0, 1.0, 1.0, 2.0, 2.0, 2.0];

/// Full index pair of each storage slot.
pub const SLOT_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)];

/// Storage slot of a full index pair.
pub const SLOT: [[usize; 3]; 3] = [[0, 3, 5], [3, 1, 4], [5, 4, 2]];

/// Below this magnitude a determinant is treated as zero.
pub const SINGULAR_DET: f64 = 1e-300;

/// Symmetric rank-two tensor, components `(11, 22, 33, 12, 23, 13)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymTensor2(pub [f64; 6]);

/// General rank-two tensor, row-major `a[i][j]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Tensor2(pub [[f64; 3]; 3]);

/// Rank-four tensor with minor symmetries (true components, see module docs).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymTensor4(pub [[f64; 6]; 6]);

impl SymTensor2 {
    pub const fn zero() -> Self {
        SymTensor2([0.0; 6])
    }

    pub const fn identity() -> Self {
        SymTensor2([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    }

    pub const fn diag(a: f64, b: f64, c: f64) -> Self {
        SymTensor2([a, b, c, 0.0, 0.0, 0.0])
    }

    /// Builds from a full matrix; the off-diagonal pairs are averaged.
    pub fn from_matrix(m: &[[f64; 3]; 3]) -> Self {
        SymTensor2([
            m[0][0],
            m[1][1],
            m[2][2],
            0.5 * (m[0][1] + m[1][0]),
            0.5 * (m[1][2] + m[2][1]),
            0.5 * (m[0][2] + m[2][0]),
        ])
    }

    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        let a = &self.0;
        [[a[0], a[3], a[5]], [a[3], a[1], a[4]], [a[5], a[4], a[2]]]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[SLOT[i][j]]
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    pub fn det(&self) -> f64 {
        let [a11, a22, a33, a12, a23, a13] = self.0;
        a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13)
            + a13 * (a12 * a23 - a22 * a13)
    }

    /// Adjugate (transposed cofactor matrix), symmetric for symmetric input.
    pub fn adjugate(&self) -> Self {
        let [a11, a22, a33, a12, a23, a13] = self.0;
        SymTensor2([
            a22 * a33 - a23 * a23,
            a11 * a33 - a13 * a13,
            a11 * a22 - a12 * a12,
            a13 * a23 - a12 * a33,
            a12 * a13 - a11 * a23,
            a12 * a23 - a13 * a22,
        ])
    }

    pub fn inverse(&self) -> Result<Self> {
        sym_inverse(self)
    }

    #[inline]
    pub fn ddot(&self, other: &Self) -> f64 {
        ddot(self, other)
    }

    pub fn norm_sq(&self) -> f64 {
        ddot(self, self)
    }

    /// Frobenius norm `(A : A)^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Matrix square `A·A`.
    pub fn square(&self) -> Self {
        let m = self.to_matrix();
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| m[i][k] * m[k][j]).sum();
            }
        }
        SymTensor2::from_matrix(&out)
    }

    pub fn scale(&self, s: f64) -> Self {
        SymTensor2(self.0.map(|x| x * s))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

/// Double contraction `A : B = Σ_ij A_ij B_ij`.
#[inline]
pub fn ddot(a: &SymTensor2, b: &SymTensor2) -> f64 {
    let (x, y) = (&a.0, &b.0);
    x[0] * y[0] + x[1] * y[1] + x[2] * y[2] + 2.0 * (x[3] * y[3] + x[4] * y[4] + x[5] * y[5])
}

/// Inverse of a symmetric tensor.
///
/// # Errors
///
/// [`Error::SingularTensor`] when `|det A| < 1e-300`.
pub fn sym_inverse(a: &SymTensor2) -> Result<SymTensor2> {
    let det = a.det();
    if !(det.abs() >= SINGULAR_DET) {
        return Err(Error::SingularTensor { det });
    }
    Ok(a.adjugate().scale(1.0 / det))
}

/// Double contraction `T : A` (see the module docs for the weights).
#[inline]
pub fn rank4_apply(t: &SymTensor4, a: &SymTensor2) -> SymTensor2 {
    let mut aw = a.0;
    for j in 3..6 {
        aw[j] *= 2.0;
    }
    let mut out = [0.0; 6];
    for (o, row) in out.iter_mut().zip(t.0.iter()) {
        *o = row.iter().zip(aw.iter()).map(|(x, y)| x * y).sum();
    }
    SymTensor2(out)
}

impl Index<usize> for SymTensor2 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for SymTensor2 {
    type Output = SymTensor2;
    fn add(self, rhs: Self) -> Self {
        SymTensor2(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl Sub for SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, rhs: Self) -> Self {
        SymTensor2(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl Neg for SymTensor2 {
    type Output = SymTensor2;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul<SymTensor2> for f64 {
    type Output = SymTensor2;
    fn mul(self, rhs: SymTensor2) -> SymTensor2 {
        rhs.scale(self)
    }
}

impl AddAssign for SymTensor2 {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..6 {
            self.0[i] += rhs.0[i];
        }
    }
}

impl SubAssign for SymTensor2 {
    fn sub_assign(&mut self, rhs: Self) {
        for i in 0..6 {
            self.0[i] -= rhs.0[i];
        }
    }
}

impl Tensor2 {
    pub const fn zero() -> Self {
        Tensor2([[0.0; 3]; 3])
    }

    pub const fn identity() -> Self {
        Tensor2([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn det(&self) -> f64 {
        let a = &self.0;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }

    /// Cofactor matrix, `cof A = det(A) A^{-T}`.
    pub fn cofactor(&self) -> Self {
        let a = &self.0;
        Tensor2([
            [
                a[1][1] * a[2][2] - a[1][2] * a[2][1],
                a[1][2] * a[2][0] - a[1][0] * a[2][2],
                a[1][0] * a[2][1] - a[1][1] * a[2][0],
            ],
            [
                a[0][2] * a[2][1] - a[0][1] * a[2][2],
                a[0][0] * a[2][2] - a[0][2] * a[2][0],
                a[0][1] * a[2][0] - a[0][0] * a[2][1],
            ],
            [
                a[0][1] * a[1][2] - a[0][2] * a[1][1],
                a[0][2] * a[1][0] - a[0][0] * a[1][2],
                a[0][0] * a[1][1] - a[0][1] * a[1][0],
            ],
        ])
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        if !(det.abs() >= SINGULAR_DET) {
            return Err(Error::SingularTensor { det });
        }
        Ok(self.cofactor().transpose().scale(1.0 / det))
    }

    pub fn transpose(&self) -> Self {
        let a = &self.0;
        Tensor2(std::array::from_fn(|i| std::array::from_fn(|j| a[j][i])))
    }

    pub fn scale(&self, s: f64) -> Self {
        Tensor2(self.0.map(|r| r.map(|x| x * s)))
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Frobenius product `A : B = Σ_ij A_ij B_ij`.
    pub fn ddot(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.0[i][j] * other.0[i][j];
            }
        }
        s
    }

    /// `Aᵀ A`.
    pub fn gram(&self) -> SymTensor2 {
        let a = &self.0;
        let c = |i: usize, j: usize| a[0][i] * a[0][j] + a[1][i] * a[1][j] + a[2][i] * a[2][j];
        SymTensor2([c(0, 0), c(1, 1), c(2, 2), c(0, 1), c(1, 2), c(0, 2)])
    }

    /// `Aᵀ B`, symmetrized.
    pub fn sym_tmul(&self, b: &Tensor2) -> SymTensor2 {
        let (a, b) = (&self.0, &b.0);
        let m = |i: usize, j: usize| a[0][i] * b[0][j] + a[1][i] * b[1][j] + a[2][i] * b[2][j];
        SymTensor2([
            m(0, 0),
            m(1, 1),
            m(2, 2),
            0.5 * (m(0, 1) + m(1, 0)),
            0.5 * (m(1, 2) + m(2, 1)),
            0.5 * (m(0, 2) + m(2, 0)),
        ])
    }

    pub fn mul_vec(&self, v: &[f64; 3]) -> [f64; 3] {
        let a = &self.0;
        std::array::from_fn(|i| a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2])
    }

    /// `Aᵀ v`.
    pub fn tmul_vec(&self, v: &[f64; 3]) -> [f64; 3] {
        let a = &self.0;
        std::array::from_fn(|i| a[0][i] * v[0] + a[1][i] * v[1] + a[2][i] * v[2])
    }

    /// `A S` for a symmetric `S`.
    pub fn mul_sym(&self, s: &SymTensor2) -> Tensor2 {
        let m = s.to_matrix();
        let a = &self.0;
        Tensor2(std::array::from_fn(|i| {
            std::array::from_fn(|j| a[i][0] * m[0][j] + a[i][1] * m[1][j] + a[i][2] * m[2][j])
        }))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }
}

impl Add for Tensor2 {
    type Output = Tensor2;
    fn add(self, rhs: Self) -> Self {
        Tensor2(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j] + rhs.0[i][j])))
    }
}

impl Sub for Tensor2 {
    type Output = Tensor2;
    fn sub(self, rhs: Self) -> Self {
        Tensor2(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j] - rhs.0[i][j])))
    }
}

impl Mul for Tensor2 {
    type Output = Tensor2;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Tensor2(std::array::from_fn(|i| {
            std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j])
        }))
    }
}

impl SymTensor4 {
    pub const fn zero() -> Self {
        SymTensor4([[0.0; 6]; 6])
    }

    /// Symmetric identity `𝕀_ijkl = ½(δ_ik δ_jl + δ_il δ_jk)`, so `𝕀 : A = A`.
    pub fn identity() -> Self {
        let mut t = [[0.0; 6]; 6];
        for (i, row) in t.iter_mut().enumerate() {
            row[i] = if i < 3 { 1.0 } else { 0.5 };
        }
        SymTensor4(t)
    }

    /// Dyadic product `A ⊗ B`, so `(A ⊗ B) : X = A (B : X)`.
    pub fn dyad(a: &SymTensor2, b: &SymTensor2) -> Self {
        SymTensor4(std::array::from_fn(|i| std::array::from_fn(|j| a.0[i] * b.0[j])))
    }

    /// Symmetrized product `(A ⊙ B)_ijkl = ½(A_ik B_jl + A_il B_jk)`.
    ///
    /// For symmetric `A` this gives `(A ⊙ A) : X = A X A`.
    pub fn odot(a: &SymTensor2, b: &SymTensor2) -> Self {
        let mut t = [[0.0; 6]; 6];
        for (ii, &(i, j)) in SLOT_PAIRS.iter().enumerate() {
            for (jj, &(k, l)) in SLOT_PAIRS.iter().enumerate() {
                t[ii][jj] = 0.5 * (a.get(i, k) * b.get(j, l) + a.get(i, l) * b.get(j, k));
            }
        }
        SymTensor4(t)
    }

    /// Builds from full components; entries related by minor symmetry are averaged.
    pub fn from_full(full: &[[[[f64; 3]; 3]; 3]; 3]) -> Self {
        let mut t = [[0.0; 6]; 6];
        for (ii, &(i, j)) in SLOT_PAIRS.iter().enumerate() {
            for (jj, &(k, l)) in SLOT_PAIRS.iter().enumerate() {
                t[ii][jj] = 0.25 * (full[i][j][k][l] + full[j][i][k][l] + full[i][j][l][k] + full[j][i][l][k]);
            }
        }
        SymTensor4(t)
    }

    pub fn to_full(&self) -> [[[[f64; 3]; 3]; 3]; 3] {
        let mut full = [[[[0.0; 3]; 3]; 3]; 3];
        for (i, a) in full.iter_mut().enumerate() {
            for (j, b) in a.iter_mut().enumerate() {
                for (k, c) in b.iter_mut().enumerate() {
                    for (l, d) in c.iter_mut().enumerate() {
                        *d = self.0[SLOT[i][j]][SLOT[k][l]];
                    }
                }
            }
        }
        full
    }

    #[inline]
    pub fn apply(&self, a: &SymTensor2) -> SymTensor2 {
        rank4_apply(self, a)
    }

    /// Major transpose, `(Tᵀ)_ijkl = T_klij`.
    pub fn transpose(&self) -> Self {
        SymTensor4(std::array::from_fn(|i| std::array::from_fn(|j| self.0[j][i])))
    }

    /// Composition `(A ∘ B) : X = A : (B : X)`.
    pub fn compose(&self, b: &SymTensor4) -> Self {
        let mut t = [[0.0; 6]; 6];
        for (i, row) in t.iter_mut().enumerate() {
            for (k, out) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for j in 0..6 {
                    s += self.0[i][j] * WEIGHTS[j] * b.0[j][k];
                }
                *out = s;
            }
        }
        SymTensor4(t)
    }

    pub fn scale(&self, s: f64) -> Self {
        SymTensor4(self.0.map(|r| r.map(|x| x * s)))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

impl Add for SymTensor4 {
    type Output = SymTensor4;
    fn add(self, rhs: Self) -> Self {
        SymTensor4(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j] + rhs.0[i][j])))
    }
}

impl Sub for SymTensor4 {
    type Output = SymTensor4;
    fn sub(self, rhs: Self) -> Self {
        SymTensor4(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j] - rhs.0[i][j])))
    }
}

impl AddAssign for SymTensor4 {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..6 {
            for j in 0..6 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl Mul<SymTensor4> for f64 {
    type Output = SymTensor4;
    fn mul(self, rhs: SymTensor4) -> SymTensor4 {
        rhs.scale(self)
    }
}


#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn full_ddot(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += a[i][j] * b[i][j];
            }
        }
        s
    }

    fn full_apply(t: &[[[[f64; 3]; 3]; 3]; 3], a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        out[i][j] += t[i][j][k][l] * a[k][l];
                    }
                }
            }
        }
        out
    }

    /// Gauss-Jordan inverse with partial pivoting.
    fn gauss_jordan(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let mut a = *m;
        let mut inv = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for c in 0..3 {
            let p = (c..3).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
            a.swap(c, p);
            inv.swap(c, p);
            let d = a[c][c];
            for j in 0..3 {
                a[c][j] /= d;
                inv[c][j] /= d;
            }
            for r in 0..3 {
                if r != c {
                    let f = a[r][c];
                    for j in 0..3 {
                        a[r][j] -= f * a[c][j];
                        inv[r][j] -= f * inv[c][j];
                    }
                }
            }
        }
        inv
    }

    fn matmul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    #[test]
    fn inverse_of_identity_and_diagonal() {
        assert_eq!(sym_inverse(&SymTensor2::identity()).unwrap(), SymTensor2::identity());
        let inv = sym_inverse(&SymTensor2::diag(2.0, 4.0, 8.0)).unwrap();
        assert_eq!(inv, SymTensor2::diag(0.5, 0.25, 0.125));
    }

    #[test]
    fn inverse_matches_gauss_jordan() {
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..100 {
            let a = random_spd(&mut rng, 0.6);
            let inv = sym_inverse(&a).unwrap().to_matrix();
            let oracle = gauss_jordan(&a.to_matrix());
            let prod = matmul(&a.to_matrix(), &inv);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((inv[i][j] - oracle[i][j]).abs() < 1e-12 * (1.0 + oracle[i][j].abs()));
                    let delta = if i == j { 1.0 } else { 0.0 };
                    assert!((prod[i][j] - delta).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn singular_inverse_is_an_error() {
        let a = SymTensor2::diag(1.0, 0.0, 2.0);
        assert!(matches!(sym_inverse(&a), Err(Error::SingularTensor { .. })));
        assert!(sym_inverse(&SymTensor2([f64::NAN; 6])).is_err());
    }

    #[test]
    fn ddot_matches_index_loops() {
        assert_eq!(ddot(&SymTensor2::identity(), &SymTensor2::identity()), 3.0);
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..100 {
            let a = random_sym(&mut rng, 2.0);
            let b = random_sym(&mut rng, 2.0);
            let oracle = full_ddot(&a.to_matrix(), &b.to_matrix());
            assert!((ddot(&a, &b) - oracle).abs() <= 1e-14 * (1.0 + oracle.abs()));
        }
    }

    #[test]
    fn rank4_apply_matches_full_contraction() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..100 {
            let t = random_sym4(&mut rng);
            let a = random_sym(&mut rng, 1.0);
            let full = t.to_full();
            let oracle = SymTensor2::from_matrix(&full_apply(&full, &a.to_matrix()));
            let got = rank4_apply(&t, &a);
            let scale = oracle.max_abs().max(1.0);
            assert!((got - oracle).max_abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn identity_and_dyad_definitions() {
        let mut rng = StdRng::seed_from_u64(4);
        let a = random_sym(&mut rng, 1.0);
        let b = random_sym(&mut rng, 1.0);
        let c = random_sym(&mut rng, 1.0);
        assert!((SymTensor4::identity().apply(&a) - a).max_abs() < 1e-15);
        let lhs = SymTensor4::dyad(&b, &c).apply(&a);
        let rhs = b.scale(ddot(&c, &a));
        assert!((lhs - rhs).max_abs() < 1e-14);
    }

    #[test]
    fn full_adapters_round_trip() {
        let mut rng = StdRng::seed_from_u64(5);
        let t = random_sym4(&mut rng);
        assert_eq!(SymTensor4::from_full(&t.to_full()), t);
        let a = random_sym(&mut rng, 1.0);
        assert_eq!(SymTensor2::from_matrix(&a.to_matrix()), a);
    }

    #[test]
    fn identity_full_components() {
        let full = SymTensor4::identity().to_full();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let d = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
                        let e = 0.5 * (d(i, k) * d(j, l) + d(i, l) * d(j, k));
                        assert_eq!(full[i][j][k][l], e);
                    }
                }
            }
        }
    }

    #[test]
    fn compose_and_transpose_agree_with_full_loops() {
        let mut rng = StdRng::seed_from_u64(6);
        let a = random_sym4(&mut rng);
        let b = random_sym4(&mut rng);
        let x = random_sym(&mut rng, 1.0);
        let y = random_sym(&mut rng, 1.0);
        let lhs = a.compose(&b).apply(&x);
        let rhs = a.apply(&b.apply(&x));
        assert!((lhs - rhs).max_abs() < 1e-13);
        // y : (A : x) = (Aᵀ : y) : x
        let l = ddot(&y, &a.apply(&x));
        let r = ddot(&a.transpose().apply(&y), &x);
        assert!((l - r).abs() < 1e-13);
    }

    #[test]
    fn odot_is_sandwich_product() {
        let mut rng = StdRng::seed_from_u64(7);
        let c = random_spd(&mut rng, 0.4);
        let x = random_sym(&mut rng, 1.0);
        let lhs = SymTensor4::odot(&c, &c).apply(&x);
        let cm = c.to_matrix();
        let rhs = SymTensor2::from_matrix(&matmul(&matmul(&cm, &x.to_matrix()), &cm));
        assert!((lhs - rhs).max_abs() < 1e-13);
    }

    #[test]
    fn tensor2_inverse_cofactor_and_gram() {
        let mut rng = StdRng::seed_from_u64(8);
        let f = random_deformation(&mut rng, 0.4);
        let inv = f.inverse().unwrap();
        let prod = (f * inv).0;
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i][j] - d).abs() < 1e-13);
            }
        }
        let cof = f.cofactor();
        let expected = inv.transpose().scale(f.det());
        assert!((cof - expected).ddot(&(cof - expected)).sqrt() < 1e-13);
        let c = f.gram().to_matrix();
        let oracle = matmul(&f.transpose().0, &f.0);
        for i in 0..3 {
            for j in 0..3 {
                assert!((c[i][j] - oracle[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn determinant_and_adjugate() {
        let mut rng = StdRng::seed_from_u64(9);
        let a = random_spd(&mut rng, 0.5);
        let t = Tensor2(a.to_matrix());
        assert!((a.det() - t.det()).abs() < 1e-14);
        let adj = a.adjugate();
        let prod = matmul(&a.to_matrix(), &adj.to_matrix());
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { a.det() } else { 0.0 };
                assert!((prod[i][j] - d).abs() < 1e-13);
            }
        }
    }
}
