//! CSV time series and legacy ASCII VTK snapshots.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use visco_core::diagnostics::{EnergyBudget, MomentumRecord};
use visco_core::fem::{FemProblem, FieldState};

pub const HISTORY_HEADER: [&str; 17] = [
    "t", "K", "Pot", "H", "D_phy", "D_num", "P_ext", "balance_residual", "Lx", "Ly", "Lz", "Jx", "Jy", "Jz", "divnorm",
    "newton_iters", "final_residual",
];

/// One row of the per-step history.
#[derive(Clone, Debug)]
pub struct HistoryRow {
    pub t: f64,
    pub budget: EnergyBudget,
    pub momenta: MomentumRecord,
    pub divnorm: f64,
    pub newton_iters: usize,
    pub final_residual: f64,
}

pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> io::Result<CsvWriter> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", header.join(","))?;
        Ok(CsvWriter { out })
    }

    pub fn row(&mut self, values: &[f64]) -> io::Result<()> {
        let cells: Vec<String> = values.iter().map(|v| format!("{v:e}")).collect();
        writeln!(self.out, "{}", cells.join(","))
    }

    pub fn history(&mut self, r: &HistoryRow) -> io::Result<()> {
        let b = &r.budget;
        let m = &r.momenta;
        let mut v = vec![r.t, b.kinetic, b.potential, b.h, b.d_phy, b.d_num, b.p_ext, b.balance_residual];
        v.extend(m.linear);
        v.extend(m.angular);
        v.push(r.divnorm);
        let mut cells: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
        cells.push(r.newton_iters.to_string());
        cells.push(format!("{:e}", r.final_residual));
        writeln!(self.out, "{}", cells.join(","))
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// Corner offsets of a sub-hexahedron in VTK vertex order.
const SUB_CORNERS: [[usize; 3]; 8] =
    [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]];

/// Writes a legacy ASCII unstructured grid on the reference mesh.
///
/// Points are the `Q2` nodes; every element is split into eight linear
/// hexahedra through its nodes. Point data holds `U`, `V` and the pressure
/// interpolated to the nodes; cell data holds the pressure at each
/// sub-cell centre.
pub fn write_vtk<W: Write>(mut w: W, problem: &FemProblem, y: &FieldState, time: f64) -> io::Result<()> {
    let space = &problem.space;
    let n = space.n_nodes();
    let mut p_nodes = vec![0.0; n];
    let mut p_cells = Vec::with_capacity(8 * space.n_cells());
    let mut cells = Vec::with_capacity(8 * space.n_cells());
    let local = |i: usize, j: usize, k: usize| i + 3 * j + 9 * k;
    for e in 0..space.n_cells() {
        let nodes = &space.elem_nodes[e];
        for k in 0..3 {
            for j in 0..3 {
                for i in 0..3 {
                    let xi = [i as f64 - 1.0, j as f64 - 1.0, k as f64 - 1.0];
                    p_nodes[nodes[local(i, j, k)]] = space.evaluate(e, xi, &y.u, &y.p).1;
                }
            }
        }
        for sk in 0..2 {
            for sj in 0..2 {
                for si in 0..2 {
                    cells.push(SUB_CORNERS.map(|c| nodes[local(si + c[0], sj + c[1], sk + c[2])]));
                    let centre = [si as f64 - 0.5, sj as f64 - 0.5, sk as f64 - 0.5];
                    p_cells.push(space.evaluate(e, centre, &y.u, &y.p).1);
                }
            }
        }
    }

    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "visco-emc snapshot t = {time:e}")?;
    writeln!(w, "ASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {n} double")?;
    for x in &space.node_coords {
        writeln!(w, "{:e} {:e} {:e}", x[0], x[1], x[2])?;
    }
    writeln!(w, "CELLS {} {}", cells.len(), 9 * cells.len())?;
    for c in &cells {
        let ids: Vec<String> = c.iter().map(|v| v.to_string()).collect();
        writeln!(w, "8 {}", ids.join(" "))?;
    }
    writeln!(w, "CELL_TYPES {}", cells.len())?;
    for _ in &cells {
        writeln!(w, "12")?;
    }
    writeln!(w, "CELL_DATA {}", cells.len())?;
    writeln!(w, "SCALARS P double 1\nLOOKUP_TABLE default")?;
    for p in &p_cells {
        writeln!(w, "{p:e}")?;
    }
    writeln!(w, "POINT_DATA {n}")?;
    for (name, field) in [("U", &y.u), ("V", &y.v)] {
        writeln!(w, "VECTORS {name} double")?;
        for a in 0..n {
            writeln!(w, "{:e} {:e} {:e}", field[3 * a], field[3 * a + 1], field[3 * a + 2])?;
        }
    }
    writeln!(w, "SCALARS P double 1\nLOOKUP_TABLE default")?;
    for p in &p_nodes {
        writeln!(w, "{p:e}")?;
    }
    Ok(())
}

pub fn write_vtk_file(path: &Path, problem: &FemProblem, y: &FieldState, time: f64) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_vtk(&mut w, problem, y, time)?;
    w.flush()
}
