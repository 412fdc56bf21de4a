//! Hexahedral meshes with named boundary sets.
//!
//! Cells list their eight vertices in VTK order. A boundary face is stored as
//! `(cell, local face)` with `local face = 2·axis + side`, i.e. faces 0/1 sit at
//! `ξ = ∓1`, 2/3 at `η = ∓1` and 4/5 at `ζ = ∓1`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::basis::{q1_face_vertices, VTK_CORNERS};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct HexMesh {
    pub vertices: Vec<[f64; 3]>,
    pub cells: Vec<[usize; 8]>,
    pub face_sets: BTreeMap<String, Vec<(usize, usize)>>,
    pub vertex_sets: BTreeMap<String, Vec<usize>>,
}

/// Arm width `a`, arm length `l` beyond the corner block, thickness `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LBlockDims {
    pub a: f64,
    pub l: f64,
    pub t: f64,
}

impl Default for LBlockDims {
    fn default() -> Self {
        LBlockDims { a: 3.0, l: 7.0, t: 3.0 }
    }
}

/// Element counts across the arm width, along each arm and through the thickness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LBlockDivisions {
    pub width: usize,
    pub arm: usize,
    pub thickness: usize,
}

impl LBlockDivisions {
    /// `thickness · width · (width + 2 arm)` elements.
    pub fn element_count(&self) -> usize {
        self.thickness * self.width * (self.width + 2 * self.arm)
    }
}

impl Default for LBlockDivisions {
    fn default() -> Self {
        LBlockDivisions { width: 3, arm: 6, thickness: 4 }
    }
}

impl HexMesh {
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn face_set(&self, name: &str) -> Result<&[(usize, usize)]> {
        self.face_sets.get(name).map(|v| v.as_slice()).ok_or_else(|| Error::UnknownSet(name.to_string()))
    }

    /// Global vertex ids of a boundary face, in the order of [`q1_face_vertices`].
    pub fn face_vertices(&self, cell: usize, face: usize) -> [usize; 4] {
        q1_face_vertices(face).map(|v| self.cells[cell][v])
    }

    fn check(&self) -> Result<()> {
        for (e, c) in self.cells.iter().enumerate() {
            if c.iter().any(|&v| v >= self.vertices.len()) {
                return Err(Error::InvalidInput(format!("cell {e} references a missing vertex")));
            }
        }
        for (name, faces) in &self.face_sets {
            if faces.iter().any(|&(e, f)| e >= self.cells.len() || f >= 6) {
                return Err(Error::InvalidInput(format!("face set '{name}' references a missing face")));
            }
        }
        for (name, vs) in &self.vertex_sets {
            if vs.iter().any(|&v| v >= self.vertices.len()) {
                return Err(Error::InvalidInput(format!("vertex set '{name}' references a missing vertex")));
            }
        }
        Ok(())
    }

    /// Parses the ASCII format written by [`HexMesh::to_ascii`].
    ///
    /// ```text
    /// <n_vertices> <n_cells>
    /// x y z                       (n_vertices lines)
    /// v0 v1 v2 v3 v4 v5 v6 v7     (n_cells lines, VTK order)
    /// set <name> face <cell> <local face>
    /// set <name> vertex <vertex>
    /// ```
    ///
    /// Blank lines and `#` comments are ignored.
    pub fn from_ascii(text: &str) -> Result<HexMesh> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let bad = |line: usize, msg: &str| Error::InvalidInput(format!("mesh line {line}: {msg}"));
        let (ln, header) = lines.next().ok_or_else(|| Error::InvalidInput("empty mesh file".into()))?;
        let counts: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(ln, "expected '<n_vertices> <n_cells>'")))
            .collect::<Result<_>>()?;
        if counts.len() != 2 {
            return Err(bad(ln, "expected '<n_vertices> <n_cells>'"));
        }
        let mut mesh = HexMesh::default();
        for _ in 0..counts[0] {
            let (ln, l) = lines.next().ok_or_else(|| Error::InvalidInput("truncated vertex list".into()))?;
            let x: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(ln, "bad coordinate")))
                .collect::<Result<_>>()?;
            if x.len() != 3 {
                return Err(bad(ln, "expected three coordinates"));
            }
            mesh.vertices.push([x[0], x[1], x[2]]);
        }
        for _ in 0..counts[1] {
            let (ln, l) = lines.next().ok_or_else(|| Error::InvalidInput("truncated cell list".into()))?;
            let v: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(ln, "bad vertex index")))
                .collect::<Result<_>>()?;
            if v.len() != 8 {
                return Err(bad(ln, "expected eight vertex indices"));
            }
            mesh.cells.push(std::array::from_fn(|i| v[i]));
        }
        for (ln, l) in lines {
            let tok: Vec<&str> = l.split_whitespace().collect();
            let idx = |s: &str| s.parse::<usize>().map_err(|_| bad(ln, "bad index"));
            match tok.as_slice() {
                ["set", name, "face", e, f] => {
                    mesh.face_sets.entry(name.to_string()).or_default().push((idx(e)?, idx(f)?))
                }
                ["set", name, "vertex", v] => mesh.vertex_sets.entry(name.to_string()).or_default().push(idx(v)?),
                _ => return Err(bad(ln, "expected 'set <name> face <cell> <face>' or 'set <name> vertex <id>'")),
            }
        }
        mesh.check()?;
        Ok(mesh)
    }

    pub fn to_ascii(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.vertices.len(), self.cells.len());
        for x in &self.vertices {
            let _ = writeln!(s, "{} {} {}", x[0], x[1], x[2]);
        }
        for c in &self.cells {
            let parts: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{}", parts.join(" "));
        }
        for (name, faces) in &self.face_sets {
            for (e, f) in faces {
                let _ = writeln!(s, "set {name} face {e} {f}");
            }
        }
        for (name, vs) in &self.vertex_sets {
            for v in vs {
                let _ = writeln!(s, "set {name} vertex {v}");
            }
        }
        s
    }

    pub fn read(path: &Path) -> Result<HexMesh> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        HexMesh::from_ascii(&text)
    }

    /// Adds the vertex set of every face set (vertices touched by its faces).
    fn derive_vertex_sets(&mut self) {
        for (name, faces) in &self.face_sets {
            let mut vs: Vec<usize> = faces.iter().flat_map(|&(e, f)| self.face_vertices(e, f)).collect();
            vs.sort_unstable();
            vs.dedup();
            self.vertex_sets.insert(name.clone(), vs);
        }
    }
}

/// Structured grid on `[0, Lx] × [0, Ly] × [0, Lz]` with face sets
/// `x0, x1, y0, y1, z0, z1`.
///
/// # Errors
///
/// [`Error::InvalidInput`] for a zero division count or a non-positive length.
pub fn generate_box_mesh(lengths: [f64; 3], divisions: [usize; 3]) -> Result<HexMesh> {
    if divisions.iter().any(|&n| n == 0) {
        return Err(Error::InvalidInput("box mesh needs at least one division per direction".into()));
    }
    if lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidInput(format!("box lengths must be positive (got {lengths:?})")));
    }
    let coords: Vec<Vec<f64>> =
        (0..3).map(|d| (0..=divisions[d]).map(|i| lengths[d] * i as f64 / divisions[d] as f64).collect()).collect();
    let keep = |_: [usize; 3]| true;
    let mut mesh = structured(&coords, keep);
    for (axis, names) in [["x0", "x1"], ["y0", "y1"], ["z0", "z1"]].iter().enumerate() {
        for (side, name) in names.iter().enumerate() {
            let target = if side == 0 { 0 } else { divisions[axis] - 1 };
            let faces = boundary_faces(&mesh, &coords, axis, side, |idx| idx[axis] == target);
            mesh.face_sets.insert(name.to_string(), faces);
        }
    }
    mesh.derive_vertex_sets();
    Ok(mesh)
}

/// L-shaped block as the union of a corner box `[0,a] × [0,t] × [0,a]`, a
/// vertical arm reaching `z = a + l` and a horizontal arm reaching
/// `x = a + l`.
///
/// Face sets: `H1` (end of the horizontal arm, `x = a + l`), `H2` (end of the
/// vertical arm, `z = a + l`), plus `y0` and `y1` on the two flat sides.
pub fn generate_lblock_mesh(dims: LBlockDims, div: LBlockDivisions) -> Result<HexMesh> {
    if [div.width, div.arm, div.thickness].contains(&0) {
        return Err(Error::InvalidInput("L-block needs at least one division per direction".into()));
    }
    if [dims.a, dims.l, dims.t].iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidInput(format!("L-block dimensions must be positive (got {dims:?})")));
    }
    let span = |n_w: usize, n_a: usize| -> Vec<f64> {
        let mut v: Vec<f64> = (0..=n_w).map(|i| dims.a * i as f64 / n_w as f64).collect();
        v.extend((1..=n_a).map(|i| dims.a + dims.l * i as f64 / n_a as f64));
        v
    };
    let coords = vec![
        span(div.width, div.arm),
        (0..=div.thickness).map(|i| dims.t * i as f64 / div.thickness as f64).collect(),
        span(div.width, div.arm),
    ];
    let w = div.width;
    let keep = |idx: [usize; 3]| idx[0] < w || idx[2] < w;
    let mut mesh = structured(&coords, keep);
    let last = w + div.arm - 1;
    let sets = [
        ("H1", 0, 1, Box::new(move |i: [usize; 3]| i[0] == last) as Box<dyn Fn([usize; 3]) -> bool>),
        ("H2", 2, 1, Box::new(move |i: [usize; 3]| i[2] == last)),
        ("y0", 1, 0, Box::new(|i: [usize; 3]| i[1] == 0)),
        ("y1", 1, 1, Box::new(move |i: [usize; 3]| i[1] == div.thickness - 1)),
    ];
    for (name, axis, side, pred) in sets {
        let faces = boundary_faces(&mesh, &coords, axis, side, pred);
        mesh.face_sets.insert(name.to_string(), faces);
    }
    mesh.derive_vertex_sets();
    debug_assert_eq!(mesh.cells.len(), div.element_count());
    Ok(mesh)
}

/// Cell grid index recovered from the cell's first vertex coordinate.
fn cell_index(mesh: &HexMesh, coords: &[Vec<f64>], cell: usize) -> [usize; 3] {
    let x0 = mesh.vertices[mesh.cells[cell][0]];
    std::array::from_fn(|d| coords[d].iter().position(|&c| c == x0[d]).expect("grid coordinate"))
}

fn boundary_faces<P: Fn([usize; 3]) -> bool>(
    mesh: &HexMesh,
    coords: &[Vec<f64>],
    axis: usize,
    side: usize,
    pred: P,
) -> Vec<(usize, usize)> {
    (0..mesh.cells.len()).filter(|&e| pred(cell_index(mesh, coords, e))).map(|e| (e, 2 * axis + side)).collect()
}

/// Tensor-product grid restricted to the cells accepted by `keep`; only the
/// vertices of kept cells are emitted.
fn structured<K: Fn([usize; 3]) -> bool>(coords: &[Vec<f64>], keep: K) -> HexMesh {
    let n: [usize; 3] = std::array::from_fn(|d| coords[d].len() - 1);
    let grid_id = |i: usize, j: usize, k: usize| i + (n[0] + 1) * (j + (n[1] + 1) * k);
    let mut map = vec![usize::MAX; (n[0] + 1) * (n[1] + 1) * (n[2] + 1)];
    let mut mesh = HexMesh::default();
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                if !keep([i, j, k]) {
                    continue;
                }
                let cell = VTK_CORNERS.map(|[di, dj, dk]| {
                    let g = grid_id(i + di, j + dj, k + dk);
                    if map[g] == usize::MAX {
                        map[g] = mesh.vertices.len();
                        mesh.vertices.push([coords[0][i + di], coords[1][j + dj], coords[2][k + dk]]);
                    }
                    map[g]
                });
                mesh.cells.push(cell);
            }
        }
    }
    mesh
}
