//! Run configuration: a line-oriented `key = value` format with `[section]`
//! headers.
//!
//! ```text
//! [mesh]
//! generator = box            # box | lblock | file
//! lengths = 0.05, 0.05, 0.05
//! divisions = 2, 2, 2
//!
//! [material]
//! rho0 = 1000
//! youngs_modulus = 625.72e3  # or c1 = ..., c2 = ...
//!
//! [branch]                   # repeat once per relaxation process
//! kind = hs
//! mu = 536.224e3
//! eta = 268.112e3
//!
//! [traction]                 # repeatable
//! set = z1
//! direction = 1, 0, 0
//! time = sin(6.895e3, 0.5)
//!
//! [solver]
//! dt = 0.01
//! t_end = 20
//! ```
//!
//! `[dirichlet]` sections are repeatable as well; `[body]`, `[output]`,
//! `[converge]`, `[material_point]` and `[verify]` are optional.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use visco_core::fem::{
    generate_box_mesh, generate_lblock_mesh, BodyForce, DirichletBc, HexMesh, LBlockDims, LBlockDivisions, LoadSpec,
    TimeFn, Traction,
};
use visco_core::integrators::{SchemeKind, DEFAULT_Z_CUT};
use visco_core::materials::{BranchKind, EquilibriumModel, MaterialParams, ViscoBranch};
use visco_core::solver::SolverConfig;
use visco_core::tensors::Tensor2;

/// Every problem found in a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub messages: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration error(s):", self.messages.len())?;
        for m in &self.messages {
            writeln!(f, "  {m}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSource {
    Box { lengths: [f64; 3], divisions: [usize; 3] },
    LBlock { dims: LBlockDims, divisions: LBlockDivisions },
    File(PathBuf),
}

impl MeshSource {
    pub fn build(&self) -> visco_core::Result<HexMesh> {
        match self {
            MeshSource::Box { lengths, divisions } => generate_box_mesh(*lengths, *divisions),
            MeshSource::LBlock { dims, divisions } => generate_lblock_mesh(*dims, *divisions),
            MeshSource::File(p) => HexMesh::read(p),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    pub csv: String,
    /// Times at which VTK snapshots are written.
    pub snapshot_times: Vec<f64>,
    /// Also write a snapshot every this many steps (0 disables).
    pub snapshot_every: usize,
    pub probes: Vec<[f64; 3]>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { csv: "history.csv".into(), snapshot_times: vec![], snapshot_every: 0, probes: vec![] }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergeSpec {
    pub dts: Vec<f64>,
    pub overkill: f64,
    pub t_end: f64,
}

impl Default for ConvergeSpec {
    fn default() -> Self {
        ConvergeSpec { dts: vec![4e-3, 2e-3, 1e-3, 5e-4], overkill: 1e-5, t_end: 0.04 }
    }
}

/// Prescribed isochoric deformation for material-point runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Deformation {
    /// `F = diag(λ, λ^{-1/2}, λ^{-1/2})`, `λ = 1 + a sin(ω t)`.
    Uniaxial { amplitude: f64, omega: f64 },
    /// `F = I + a sin(ω t) e1 ⊗ e2`.
    Shear { amplitude: f64, omega: f64 },
}

impl Deformation {
    pub fn gradient(&self, t: f64) -> Tensor2 {
        match *self {
            Deformation::Uniaxial { amplitude, omega } => {
                let l = 1.0 + amplitude * (omega * t).sin();
                let r = 1.0 / l.sqrt();
                Tensor2([[l, 0.0, 0.0], [0.0, r, 0.0], [0.0, 0.0, r]])
            }
            Deformation::Shear { amplitude, omega } => {
                let s = amplitude * (omega * t).sin();
                Tensor2([[1.0, s, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
            }
        }
    }
}

impl fmt::Display for Deformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Deformation::Uniaxial { amplitude, omega } => write!(f, "uniaxial({amplitude}, {omega})"),
            Deformation::Shear { amplitude, omega } => write!(f, "shear({amplitude}, {omega})"),
        }
    }
}

impl std::str::FromStr for Deformation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("bad deformation '{s}': expected uniaxial(a, w) or shear(a, w)");
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let args = list(inner, float).map_err(|_| bad())?;
        match (s[..open].trim(), args.as_slice()) {
            ("uniaxial", &[amplitude, omega]) if amplitude.abs() < 1.0 => Ok(Deformation::Uniaxial { amplitude, omega }),
            ("shear", &[amplitude, omega]) => Ok(Deformation::Shear { amplitude, omega }),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialPointSpec {
    pub deformation: Deformation,
    pub t_end: f64,
    pub dts: Vec<f64>,
    pub overkill: f64,
}

impl Default for MaterialPointSpec {
    fn default() -> Self {
        MaterialPointSpec {
            deformation: Deformation::Uniaxial { amplitude: 0.2, omega: 10.0 },
            t_end: 0.2,
            dts: vec![1e-2, 5e-3, 2.5e-3],
            overkill: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifySpec {
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { samples: 100, tolerance: 1e-6, seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub material: MaterialParams,
    pub loads: LoadSpec,
    pub solver: SolverConfig,
    pub scheme: SchemeKind,
    pub gamma: f64,
    pub z_cut: f64,
    pub output: OutputSpec,
    pub converge: ConvergeSpec,
    pub material_point: MaterialPointSpec,
    pub verify: VerifySpec,
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn lex(text: &str, errors: &mut Vec<String>) -> Vec<Section> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            sections.push(Section { name: name.trim().to_string(), line, entries: vec![] });
        } else if let Some((k, v)) = l.split_once('=') {
            match sections.last_mut() {
                Some(s) => s.entries.push(Entry { line, key: k.trim().to_string(), value: v.trim().to_string() }),
                None => errors.push(format!("line {line}: key outside of any [section]")),
            }
        } else {
            errors.push(format!("line {line}: expected '[section]' or 'key = value'"));
        }
    }
    sections
}

/// Typed access to one section, recording every problem in `errors`.
struct Reader<'a> {
    section: &'a Section,
    errors: &'a mut Vec<String>,
    used: Vec<bool>,
}

impl<'a> Reader<'a> {
    fn new(section: &'a Section, errors: &'a mut Vec<String>) -> Self {
        let used = vec![false; section.entries.len()];
        Reader { section, errors, used }
    }

    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        let mut found = None;
        for (i, e) in self.section.entries.iter().enumerate() {
            if e.key == key {
                if found.is_some() {
                    self.errors.push(format!("line {}: duplicate key '{key}' in [{}]", e.line, self.section.name));
                }
                self.used[i] = true;
                found = Some((e.line, e.value.clone()));
            }
        }
        found
    }

    fn all(&mut self, key: &str) -> Vec<(usize, String)> {
        let mut out = Vec::new();
        for (i, e) in self.section.entries.iter().enumerate() {
            if e.key == key {
                self.used[i] = true;
                out.push((e.line, e.value.clone()));
            }
        }
        out
    }

    fn parsed<T>(&mut self, key: &str, what: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        let (line, v) = self.raw(key)?;
        match parse(&v) {
            Ok(x) => Some(x),
            Err(msg) => {
                self.errors.push(format!("line {line}: [{}] {key}: {msg} (expected {what})", self.section.name));
                None
            }
        }
    }

    fn required<T>(&mut self, key: &str, what: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        if self.section.entries.iter().all(|e| e.key != key) {
            self.errors.push(format!("[{}] (line {}): missing required key '{key}'", self.section.name, self.section.line));
            return None;
        }
        self.parsed(key, what, parse)
    }

    fn float(&mut self, key: &str) -> Option<f64> {
        self.parsed(key, "a number", float)
    }

    fn positive(&mut self, key: &str) -> Option<f64> {
        self.parsed(key, "a positive number", positive)
    }

    fn finish(self) {
        for (e, used) in self.section.entries.iter().zip(self.used) {
            if !used {
                self.errors.push(format!("line {}: unknown key '{}' in [{}]", e.line, e.key, self.section.name));
            }
        }
    }
}

fn float(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("'{s}' is not a finite number")),
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let x = float(s)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("{x} is not positive"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let x = float(s)?;
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("{x} is negative"))
    }
}

fn count(s: &str) -> Result<usize, String> {
    s.parse::<usize>().map_err(|_| format!("'{s}' is not a non-negative integer"))
}

fn list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(',').map(|t| item(t.trim())).collect()
}

fn triple<T: Copy>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<[T; 3], String> {
    let v = list(s, item)?;
    if v.len() != 3 {
        return Err(format!("{} values given", v.len()));
    }
    Ok([v[0], v[1], v[2]])
}

fn time_fn(s: &str) -> Result<TimeFn, String> {
    s.parse::<TimeFn>().map_err(|e| e.to_string())
}

fn components(s: &str) -> Result<Vec<usize>, String> {
    let v = list(s, |t| match t {
        "0" | "x" => Ok(0),
        "1" | "y" => Ok(1),
        "2" | "z" => Ok(2),
        _ => Err(format!("'{t}' is not a component (0, 1, 2 or x, y, z)")),
    })?;
    if v.is_empty() {
        return Err("no components given".into());
    }
    Ok(v)
}

fn parse_mesh(r: &mut Reader, base: &Path) -> Option<MeshSource> {
    let generator = r.required("generator", "box, lblock or file", |s| match s {
        "box" | "lblock" | "file" => Ok(s.to_string()),
        _ => Err(format!("unknown generator '{s}'")),
    })?;
    match generator.as_str() {
        "box" => {
            let lengths = r.required("lengths", "three positive lengths", |s| triple(s, positive));
            let divisions = r.required("divisions", "three element counts", |s| triple(s, count));
            Some(MeshSource::Box { lengths: lengths?, divisions: divisions? })
        }
        "lblock" => {
            let d = LBlockDims::default();
            let dims = LBlockDims {
                a: r.positive("arm_width").unwrap_or(d.a),
                l: r.positive("arm_length").unwrap_or(d.l),
                t: r.positive("thickness").unwrap_or(d.t),
            };
            let divisions = r
                .parsed("divisions", "width, arm and thickness element counts", |s| triple(s, count))
                .map(|[width, arm, thickness]| LBlockDivisions { width, arm, thickness })
                .unwrap_or_default();
            Some(MeshSource::LBlock { dims, divisions })
        }
        _ => {
            let path = r.required("path", "a mesh file path", |s| Ok(PathBuf::from(s)))?;
            Some(MeshSource::File(if path.is_relative() { base.join(path) } else { path }))
        }
    }
}

fn parse_material(r: &mut Reader) -> (Option<f64>, Option<EquilibriumModel>) {
    let rho0 = r.required("rho0", "a positive density", positive);
    let e = r.positive("youngs_modulus");
    let has = |k: &str| r.section.entries.iter().any(|x| x.key == k);
    let eq = match e {
        Some(e) if !has("c1") && !has("c2") => EquilibriumModel::new(e / 6.0, e / 6.0).ok(),
        Some(_) => {
            r.errors.push(format!("[material] (line {}): give either youngs_modulus or c1/c2, not both", r.section.line));
            None
        }
        None if has("youngs_modulus") => None,
        None => {
            let c1 = r.required("c1", "a number", non_negative);
            let c2 = r.required("c2", "a number", non_negative);
            match (c1, c2) {
                (Some(a), Some(b)) => match EquilibriumModel::new(a, b) {
                    Ok(m) => Some(m),
                    Err(err) => {
                        r.errors.push(format!("[material]: {err}"));
                        None
                    }
                },
                _ => None,
            }
        }
    };
    (rho0, eq)
}

fn parse_branch(r: &mut Reader, eq: Option<&EquilibriumModel>) -> Option<ViscoBranch> {
    let kind = r.required("kind", "hs or mipc", |s| match s.to_ascii_lowercase().as_str() {
        "hs" => Ok(BranchKind::Hs),
        "mipc" => Ok(BranchKind::Mipc),
        _ => Err(format!("unknown branch kind '{s}'")),
    });
    let mu = r.required("mu", "a positive modulus", positive);
    let eta = r.required("eta", "a positive viscosity", positive);
    let beta = r.parsed("beta_inf", "a positive number", positive).unwrap_or(1.0);
    let line = r.section.line;
    match (kind, mu, eta, eq) {
        (Some(k), Some(mu), Some(eta), Some(eq)) => match ViscoBranch::new(k, mu, eta, beta, eq) {
            Ok(b) => Some(b),
            Err(e) => {
                r.errors.push(format!("[branch] (line {line}): {e}"));
                None
            }
        },
        _ => None,
    }
}

/// Parses and validates a configuration; relative mesh paths are resolved
/// against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let mut errors = Vec::new();
    let sections = lex(text, &mut errors);
    let mut mesh = None;
    let mut rho0 = None;
    let mut eq = None;
    let mut branch_sections = Vec::new();
    let mut loads = LoadSpec::default();
    let mut solver = SolverConfig::default();
    let mut scheme = SchemeKind::Scheme2;
    let mut gamma = 0.0;
    let mut z_cut = DEFAULT_Z_CUT;
    let mut output = OutputSpec::default();
    let mut converge = ConvergeSpec::default();
    let mut material_point = MaterialPointSpec::default();
    let mut verify = VerifySpec::default();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();

    for s in &sections {
        let repeatable = matches!(s.name.as_str(), "branch" | "traction" | "dirichlet");
        let n = seen.entry(s.name.as_str()).or_default();
        *n += 1;
        if *n > 1 && !repeatable {
            errors.push(format!("line {}: section [{}] given more than once", s.line, s.name));
            continue;
        }
        let mut r = Reader::new(s, &mut errors);
        match s.name.as_str() {
            "mesh" => mesh = parse_mesh(&mut r, base),
            "material" => (rho0, eq) = parse_material(&mut r),
            "branch" => {
                // parsed once the equilibrium model is known
                branch_sections.push(s);
                r.used.fill(true);
            }
            "traction" => {
                let set = r.required("set", "a face set name", |v| Ok(v.to_string()));
                let dir = r.required("direction", "three components", |v| triple(v, float));
                let time = r.parsed("time", "hat(a, b), sin(a, w) or const(v)", time_fn).unwrap_or(TimeFn::Const(1.0));
                if let (Some(set), Some(direction)) = (set, dir) {
                    loads.tractions.push(Traction { set, direction, time });
                }
            }
            "dirichlet" => {
                let set = r.required("set", "a face set name", |v| Ok(v.to_string()));
                let comps = r.required("components", "a list of components", components);
                let value = r.float("value").unwrap_or(0.0);
                if let (Some(set), Some(components)) = (set, comps) {
                    loads.dirichlet.push(DirichletBc { set, components, value });
                }
            }
            "body" => {
                let dir = r.required("direction", "three components", |v| triple(v, float));
                let time = r.parsed("time", "hat(a, b), sin(a, w) or const(v)", time_fn).unwrap_or(TimeFn::Const(1.0));
                loads.body = dir.map(|direction| BodyForce { direction, time });
            }
            "solver" => {
                let dt = r.required("dt", "a positive step", positive);
                let t_end = r.required("t_end", "a positive end time", positive);
                solver.dt = dt.unwrap_or(solver.dt);
                solver.t_end = t_end.unwrap_or(solver.t_end);
                solver.tol_r = r.positive("tol_r").unwrap_or(solver.tol_r);
                solver.tol_a = r.positive("tol_a").unwrap_or(solver.tol_a);
                solver.l_max = r.parsed("max_iterations", "an iteration count", count).unwrap_or(solver.l_max);
                scheme = r.parsed("scheme", "1, 2 or mp", |v| v.parse().map_err(|e: visco_core::Error| e.to_string())).unwrap_or(scheme);
                gamma = r.parsed("gamma", "a non-negative number", non_negative).unwrap_or(gamma);
                z_cut = r.parsed("z_cut", "a non-negative number", non_negative).unwrap_or(z_cut);
            }
            "output" => {
                output.csv = r.parsed("csv", "a file name", |v| Ok(v.to_string())).unwrap_or(output.csv);
                output.snapshot_times =
                    r.parsed("snapshot_times", "a list of times", |v| list(v, non_negative)).unwrap_or_default();
                output.snapshot_every = r.parsed("snapshot_every", "a step count", count).unwrap_or(0);
                for (line, v) in r.all("probe") {
                    match triple(&v, float) {
                        Ok(x) => output.probes.push(x),
                        Err(e) => r.errors.push(format!("line {line}: [output] probe: {e} (expected x, y, z)")),
                    }
                }
            }
            "converge" => {
                converge.dts = r.parsed("dts", "a list of steps", |v| list(v, positive)).unwrap_or(converge.dts);
                converge.overkill = r.positive("overkill").unwrap_or(converge.overkill);
                converge.t_end = r.positive("t_end").unwrap_or(converge.t_end);
            }
            "material_point" => {
                let mp = &mut material_point;
                mp.deformation = r.parsed("deformation", "uniaxial(a, w) or shear(a, w)", str::parse).unwrap_or(mp.deformation);
                mp.t_end = r.positive("t_end").unwrap_or(mp.t_end);
                mp.dts = r.parsed("dts", "a list of steps", |v| list(v, positive)).unwrap_or(mp.dts.clone());
                mp.overkill = r.positive("overkill").unwrap_or(mp.overkill);
            }
            "verify" => {
                verify.samples = r.parsed("samples", "a sample count", count).unwrap_or(verify.samples);
                verify.tolerance = r.positive("tolerance").unwrap_or(verify.tolerance);
                verify.seed = r.parsed("seed", "an integer", |v| v.parse().map_err(|_| format!("'{v}' is not an integer"))).unwrap_or(verify.seed);
            }
            other => {
                r.errors.push(format!("line {}: unknown section [{other}]", s.line));
                r.used.fill(true);
            }
        }
        r.finish();
    }

    for required in ["mesh", "material", "solver"] {
        if !seen.contains_key(required) {
            let keys = match required {
                "mesh" => "generator",
                "material" => "rho0, c1, c2 (or youngs_modulus)",
                _ => "dt, t_end",
            };
            errors.push(format!("missing section [{required}] with required keys: {keys}"));
        }
    }

    let mut branches = Vec::new();
    for s in branch_sections {
        let mut r = Reader::new(s, &mut errors);
        if let Some(b) = parse_branch(&mut r, eq.as_ref()) {
            branches.push(b);
        }
        r.finish();
    }

    if let Err(e) = solver.validate() {
        errors.push(format!("[solver]: {e}"));
    }
    if converge.dts.iter().any(|&d| d <= converge.overkill) {
        errors.push("[converge]: every dt must exceed the overkill step".into());
    }
    if material_point.dts.iter().any(|&d| d <= material_point.overkill) {
        errors.push("[material_point]: every dt must exceed the overkill step".into());
    }

    if let Some(m) = &mesh {
        match m.build() {
            Ok(hex) => {
                let sets = loads.tractions.iter().map(|t| &t.set).chain(loads.dirichlet.iter().map(|d| &d.set));
                for set in sets {
                    if !hex.face_sets.contains_key(set) {
                        let known: Vec<&str> = hex.face_sets.keys().map(String::as_str).collect();
                        errors.push(format!("unknown face set '{set}' (mesh has: {})", known.join(", ")));
                    }
                }
            }
            Err(e) => errors.push(format!("[mesh]: {e}")),
        }
    }

    if !errors.is_empty() {
        return Err(ConfigError { messages: errors });
    }
    let (Some(mesh), Some(rho0), Some(eq)) = (mesh, rho0, eq) else {
        return Err(ConfigError { messages: vec!["incomplete configuration".into()] });
    };
    let material = MaterialParams::new(rho0, eq, branches).map_err(|e| ConfigError { messages: vec![format!("[material]: {e}")] })?;
    Ok(RunConfig { mesh, material, loads, solver, scheme, gamma, z_cut, output, converge, material_point, verify })
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError { messages: vec![format!("cannot read {}: {e}", path.display())] })?;
    parse_config_str(&text, path.parent().unwrap_or(Path::new(".")))
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Writes the configuration back in the file format; parsing the result
    /// yields an equal configuration.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[mesh]");
        match &self.mesh {
            MeshSource::Box { lengths, divisions } => {
                let _ = writeln!(s, "generator = box\nlengths = {}\ndivisions = {}", join(lengths), join(divisions));
            }
            MeshSource::LBlock { dims, divisions } => {
                let _ = writeln!(
                    s,
                    "generator = lblock\narm_width = {}\narm_length = {}\nthickness = {}\ndivisions = {}, {}, {}",
                    dims.a, dims.l, dims.t, divisions.width, divisions.arm, divisions.thickness
                );
            }
            MeshSource::File(p) => {
                let _ = writeln!(s, "generator = file\npath = {}", p.display());
            }
        }
        let m = &self.material;
        let _ = writeln!(s, "\n[material]\nrho0 = {}\nc1 = {}\nc2 = {}", m.rho0, m.equilibrium.c1, m.equilibrium.c2);
        for b in &m.branches {
            let kind = match b.kind {
                BranchKind::Hs => "hs",
                BranchKind::Mipc => "mipc",
            };
            let _ = writeln!(s, "\n[branch]\nkind = {kind}\nmu = {}\neta = {}\nbeta_inf = {}", b.mu, b.eta, b.beta_inf);
        }
        for t in &self.loads.tractions {
            let _ = writeln!(s, "\n[traction]\nset = {}\ndirection = {}\ntime = {}", t.set, join(&t.direction), t.time);
        }
        for d in &self.loads.dirichlet {
            let _ = writeln!(s, "\n[dirichlet]\nset = {}\ncomponents = {}\nvalue = {}", d.set, join(&d.components), d.value);
        }
        if let Some(b) = &self.loads.body {
            let _ = writeln!(s, "\n[body]\ndirection = {}\ntime = {}", join(&b.direction), b.time);
        }
        let c = &self.solver;
        let _ = writeln!(
            s,
            "\n[solver]\nscheme = {}\ndt = {}\nt_end = {}\ntol_r = {}\ntol_a = {}\nmax_iterations = {}\ngamma = {}\nz_cut = {}",
            self.scheme, c.dt, c.t_end, c.tol_r, c.tol_a, c.l_max, self.gamma, self.z_cut
        );
        let o = &self.output;
        let _ = writeln!(
            s,
            "\n[output]\ncsv = {}\nsnapshot_times = {}\nsnapshot_every = {}",
            o.csv,
            join(&o.snapshot_times),
            o.snapshot_every
        );
        for p in &o.probes {
            let _ = writeln!(s, "probe = {}", join(p));
        }
        let cv = &self.converge;
        let _ = writeln!(s, "\n[converge]\ndts = {}\noverkill = {}\nt_end = {}", join(&cv.dts), cv.overkill, cv.t_end);
        let mp = &self.material_point;
        let _ = writeln!(
            s,
            "\n[material_point]\ndeformation = {}\nt_end = {}\ndts = {}\noverkill = {}",
            mp.deformation,
            mp.t_end,
            join(&mp.dts),
            mp.overkill
        );
        let v = &self.verify;
        let _ = writeln!(s, "\n[verify]\nsamples = {}\ntolerance = {}\nseed = {}", v.samples, v.tolerance, v.seed);
        s
    }
}
