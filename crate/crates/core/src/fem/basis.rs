//! Reference-element shape functions and Gauss-Legendre rules.
//!
//! Trilinear (`Q1`) functions follow the VTK vertex order. Triquadratic (`Q2`)
//! functions use the tensor index `a = i + 3 j + 9 k` with 1D nodes at
//! `{-1, 0, 1}`.

/// Reference coordinates of the eight vertices in VTK order, as `{0, 1}` bits.
pub const VTK_CORNERS: [[usize; 3]; 8] =
    [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]];

pub const N_Q2: usize = 27;
pub const N_Q1: usize = 8;

/// Gauss-Legendre points and weights on `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// `n`-point rule, exact for polynomials of degree `2n − 1`.
    pub fn gauss(n: usize) -> QuadratureRule {
        assert!(n >= 1, "quadrature needs at least one point");
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let dp = legendre(n, x).1;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            points[i] = -x;
            points[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            points[n / 2] = 0.0;
        }
        QuadratureRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Quadratic Lagrange functions on `{-1, 0, 1}` and their derivatives.
#[inline]
pub fn lagrange2(x: f64) -> ([f64; 3], [f64; 3]) {
    (
        [0.5 * x * (x - 1.0), 1.0 - x * x, 0.5 * x * (x + 1.0)],
        [x - 0.5, -2.0 * x, x + 0.5],
    )
}

#[inline]
pub fn lagrange1(x: f64) -> ([f64; 2], [f64; 2]) {
    ([0.5 * (1.0 - x), 0.5 * (1.0 + x)], [-0.5, 0.5])
}

/// Values and reference gradients of the 27 triquadratic functions.
pub fn q2_shape(xi: [f64; 3]) -> ([f64; N_Q2], [[f64; 3]; N_Q2]) {
    let (l0, d0) = lagrange2(xi[0]);
    let (l1, d1) = lagrange2(xi[1]);
    let (l2, d2) = lagrange2(xi[2]);
    let mut n = [0.0; N_Q2];
    let mut g = [[0.0; 3]; N_Q2];
    for k in 0..3 {
        for j in 0..3 {
            for i in 0..3 {
                let a = i + 3 * j + 9 * k;
                n[a] = l0[i] * l1[j] * l2[k];
                g[a] = [d0[i] * l1[j] * l2[k], l0[i] * d1[j] * l2[k], l0[i] * l1[j] * d2[k]];
            }
        }
    }
    (n, g)
}

/// Values and reference gradients of the 8 trilinear functions (VTK order).
pub fn q1_shape(xi: [f64; 3]) -> ([f64; N_Q1], [[f64; 3]; N_Q1]) {
    let (l0, d0) = lagrange1(xi[0]);
    let (l1, d1) = lagrange1(xi[1]);
    let (l2, d2) = lagrange1(xi[2]);
    let mut n = [0.0; N_Q1];
    let mut g = [[0.0; 3]; N_Q1];
    for (v, [i, j, k]) in VTK_CORNERS.iter().copied().enumerate() {
        n[v] = l0[i] * l1[j] * l2[k];
        g[v] = [d0[i] * l1[j] * l2[k], l0[i] * d1[j] * l2[k], l0[i] * l1[j] * d2[k]];
    }
    (n, g)
}

/// Tensor indices `(i, j, k)` of a local Q2 node.
#[inline]
pub fn q2_index(a: usize) -> [usize; 3] {
    [a % 3, (a / 3) % 3, a / 9]
}

/// Local Q2 nodes lying on local face `f = 2·axis + side`.
pub fn q2_face_nodes(f: usize) -> [usize; 9] {
    let (axis, side) = (f / 2, f % 2);
    let mut out = [0; 9];
    let mut m = 0;
    for a in 0..N_Q2 {
        if q2_index(a)[axis] == 2 * side {
            out[m] = a;
            m += 1;
        }
    }
    out
}

/// Local vertices (VTK order) lying on local face `f`.
pub fn q1_face_vertices(f: usize) -> [usize; 4] {
    let (axis, side) = (f / 2, f % 2);
    let mut out = [0; 4];
    let mut m = 0;
    for (v, c) in VTK_CORNERS.iter().enumerate() {
        if c[axis] == side {
            out[m] = v;
            m += 1;
        }
    }
    out
}
