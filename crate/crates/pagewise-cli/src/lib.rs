//! Benchmark harness: seven numbered benchmarks over the pagewise library,
//! each producing a table of values, errors and wall times in aligned-text
//! and CSV form. Values and errors are deterministic across runs; timings of
//! course are not.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pagewise::assembly::{mass_matrix, stiffness_matrix, write_matrix_market_vector};
use pagewise::bvp::{mark_dirichlet, solve_bvp, SolveOptions};
use pagewise::geometry::{element_normals, element_volumes, mesh_coords3d};
use pagewise::integrate::{scalar_field, surface_integral, vector_field3, volume_integral};
use pagewise::mesh::{
    augment_p2, count_all_faces, extract_boundary, mesh_cube, mesh_lshape, mesh_sphere,
    mesh_square, mesh_torus,
};
use pagewise::{ElementType, Error, Mesh, PageArray3};

pub const PI: f64 = std::f64::consts::PI;
const E: f64 = std::f64::consts::E;

/// Reference values the error columns are measured against.
pub mod exact {
    use super::{E, PI};

    /// Volume of the unit ball.
    pub fn sphere_volume() -> f64 {
        4.0 * PI / 3.0
    }

    /// Moment of inertia around the x-axis of the benchmark torus
    /// (R = 1, r = 1/4, density x1^2 + x2^2).
    pub fn torus_i1() -> f64 {
        2645.0 / 131072.0 * PI * PI
    }

    /// Quadratic forms of the 2D assembly benchmark:
    /// c = e^(x1+x2), v = sin(pi x1) sin(pi x2) on the unit square.
    pub fn i_k_2d() -> f64 {
        4.0 * PI.powi(4) * (E - 1.0).powi(2) * (1.0 + 2.0 * PI * PI)
            / (1.0 + 4.0 * PI * PI).powi(2)
    }

    pub fn i_m_2d() -> f64 {
        4.0 * PI.powi(4) * (E - 1.0).powi(2) / (1.0 + 4.0 * PI * PI).powi(2)
    }

    /// 3D analog: c = e^(x1+x2+x3), v = cos(pi x1) cos(pi x2) cos(pi x3).
    pub fn i_k_3d() -> f64 {
        6.0 * PI.powi(4) * (E - 1.0).powi(3) * (1.0 + 2.0 * PI * PI).powi(2)
            / (1.0 + 4.0 * PI * PI).powi(3)
    }

    pub fn i_m_3d() -> f64 {
        (E - 1.0).powi(3) * (1.0 + 2.0 * PI * PI).powi(3) / (1.0 + 4.0 * PI * PI).powi(3)
    }

    /// Minimum of the L-shape energy functional (solution
    /// u = cos(4 pi x1) cos(4 pi x2)): J = -(J1 + J2) with
    /// J1 = 289 pi^2 / 192 and J2 = (578 pi^2 + 21) / (12288 pi^2).
    pub fn lshape_energy() -> f64 {
        -(289.0 * PI * PI / 192.0 + (578.0 * PI * PI + 21.0) / (12288.0 * PI * PI))
    }
}

/// Wall time of `op`, best of three repetitions. Returns the result of the
/// final repetition and the minimal elapsed seconds.
pub fn timeit<T>(mut op: impl FnMut() -> T) -> (T, f64) {
    let mut best = f64::INFINITY;
    let mut out = None;
    for _ in 0..3 {
        let t0 = Instant::now();
        let value = op();
        best = best.min(t0.elapsed().as_secs_f64());
        out = Some(value);
    }
    (out.unwrap(), best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    /// Deterministic numeric output (value or error column).
    Value(f64),
    /// Wall time; excluded from determinism signatures.
    Time(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Display {
    Plain,
    Fixed6,
    Sci2,
}

#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub display: Display,
}

impl Column {
    fn new(name: &str, display: Display) -> Self {
        Self {
            name: name.into(),
            display,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub title: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl BenchReport {
    fn format_cell(&self, cell: &Cell, display: Display) -> String {
        match (cell, display) {
            (Cell::Int(v), _) => v.to_string(),
            (Cell::Value(v), Display::Fixed6) => format!("{v:.6}"),
            (Cell::Value(v), Display::Sci2) | (Cell::Time(v), Display::Sci2) => {
                format!("{v:.2e}")
            }
            (Cell::Value(v), _) => format!("{v:.6}"),
            (Cell::Time(v), _) => format!("{v:.2e}"),
        }
    }

    /// Aligned text table.
    pub fn to_text(&self) -> String {
        let mut grid: Vec<Vec<String>> = vec![self
            .columns
            .iter()
            .map(|c| c.name.clone())
            .collect()];
        for row in &self.rows {
            grid.push(
                row.iter()
                    .zip(&self.columns)
                    .map(|(cell, col)| self.format_cell(cell, col.display))
                    .collect(),
            );
        }
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|c| grid.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.title);
        for (ri, row) in grid.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:>w$}"))
                .collect();
            let _ = writeln!(out, "{}", line.join("  "));
            if ri == 0 {
                let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                let _ = writeln!(out, "{}", "-".repeat(total));
            }
        }
        out
    }

    /// CSV with full-precision floats (lossless beyond 12 significant digits).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        let _ = writeln!(out, "{}", names.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(v) => v.to_string(),
                    Cell::Value(v) | Cell::Time(v) => format!("{v:.15e}"),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Bit-exact signature of the deterministic columns (ints and values,
    /// timings excluded), for reproducibility checks.
    pub fn value_signature(&self) -> Vec<u64> {
        let mut sig = Vec::new();
        for row in &self.rows {
            for cell in row {
                match cell {
                    Cell::Int(v) => sig.push(*v),
                    Cell::Value(v) => sig.push(v.to_bits()),
                    Cell::Time(_) => {}
                }
            }
        }
        sig
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad benchmark id, level above the cap, invalid flag combination.
    Usage(String),
    /// The library reported a numerical failure.
    Numerical(Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numerical(e)
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchOptions {
    pub max_level: Option<u32>,
    pub etype: Option<ElementType>,
    pub gqo: Option<usize>,
    pub mesh_out: Option<PathBuf>,
    pub mm_out: Option<PathBuf>,
}

/// `path` with `.l<level>` (and an optional tag) inserted before the
/// extension: `out.txt` -> `out.l3.txt`, `out` -> `out.l3`.
fn suffixed(path: &Path, level: u32, tag: Option<&str>) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = path
        .extension()
        .map(|s| format!(".{}", s.to_string_lossy()))
        .unwrap_or_default();
    let tag = tag.map(|t| format!(".{t}")).unwrap_or_default();
    path.with_file_name(format!("{stem}.l{level}{tag}{ext}"))
}

fn dump_mesh(opts: &BenchOptions, mesh: &Mesh, level: u32) -> Result<(), CliError> {
    if let Some(path) = &opts.mesh_out {
        mesh.write_text_file(&suffixed(path, level, None))
            .map_err(CliError::Numerical)?;
    }
    Ok(())
}

struct LevelRange {
    start: u32,
    end: u32,
}

fn level_range(
    id: usize,
    min_level: u32,
    default_max: u32,
    cap: u32,
    requested: Option<u32>,
) -> Result<LevelRange, CliError> {
    let end = requested.unwrap_or(default_max);
    if end > cap {
        return Err(CliError::Usage(format!(
            "benchmark {id}: --max-level {end} exceeds the cap {cap}"
        )));
    }
    let start = min_level.max(end.saturating_sub(3));
    Ok(LevelRange { start, end })
}

fn benchmark1(opts: &BenchOptions) -> Result<Vec<BenchReport>, CliError> {
    let range = level_range(1, 1, 4, 5, opts.max_level)?;
    let exact = exact::sphere_volume();
    let mut rows = Vec::new();
    for level in range.start..=range.end {
        let (mesh, t_gen) = timeit(|| mesh_sphere(level, 1.0));
        dump_mesh(opts, &mesh, level)?;
        let (volume, t_eval) = timeit(|| {
            let (_, v3) = mesh_coords3d(&mesh);
            element_volumes(&v3, 3).map(|(_, total)| total)
        });
        let volume = volume?;
        rows.push(vec![
            Cell::Int(level as u64),
            Cell::Int(mesh.num_elems() as u64),
            Cell::Int(mesh.num_nodes() as u64),
            Cell::Value(volume),
            Cell::Value((volume - exact).abs()),
            Cell::Time(t_gen),
            Cell::Time(t_eval),
        ]);
    }
    Ok(vec![BenchReport {
        title: "sphere volumes".into(),
        columns: vec![
            Column::new("level", Display::Plain),
            Column::new("elements", Display::Plain),
            Column::new("nodes", Display::Plain),
            Column::new("volume", Display::Fixed6),
            Column::new("error", Display::Sci2),
            Column::new("gen [s]", Display::Sci2),
            Column::new("eval [s]", Display::Sci2),
        ],
        rows,
    }])
}

fn benchmark2(opts: &BenchOptions) -> Result<Vec<BenchReport>, CliError> {
    let range = level_range(2, 1, 4, 5, opts.max_level)?;
    let mut rows = Vec::new();
    for level in range.start..=range.end {
        let (mesh, t_gen) = timeit(|| mesh_sphere(level, 1.0));
        dump_mesh(opts, &mesh, level)?;
        let all_faces = count_all_faces(&mesh).map_err(CliError::Numerical)?;
        let boundary = extract_boundary(&mesh).map_err(CliError::Numerical)?;
        let (normals, t_eval) = timeit(|| {
            let (_, v3) = mesh_coords3d(&mesh);
            element_normals(&v3)
        });
        normals?;
        rows.push(vec![
            Cell::Int(level as u64),
            Cell::Int(mesh.num_elems() as u64),
            Cell::Int(mesh.num_nodes() as u64),
            Cell::Int(all_faces as u64),
            Cell::Int(boundary.len() as u64),
            Cell::Time(t_gen),
            Cell::Time(t_eval),
        ]);
    }
    Ok(vec![BenchReport {
        title: "normals of a sphere mesh".into(),
        columns: vec![
            Column::new("level", Display::Plain),
            Column::new("elements", Display::Plain),
            Column::new("nodes", Display::Plain),
            Column::new("all faces", Display::Plain),
            Column::new("bnd faces", Display::Plain),
            Column::new("gen [s]", Display::Sci2),
            Column::new("eval [s]", Display::Sci2),
        ],
        rows,
    }])
}

fn inertia_density() -> impl Fn(&PageArray3) -> PageArray3 + Sync {
    // rho(x) (x2^2 + x3^2) with rho = x1^2 + x2^2
    scalar_field(|p| (p[0] * p[0] + p[1] * p[1]) * (p[1] * p[1] + p[2] * p[2]))
}

fn flux_field() -> impl Fn(&PageArray3) -> PageArray3 + Sync {
    // divergence equals the inertia integrand above
    vector_field3(|p| {
        [
            p[0].powi(3) * (p[1] * p[1] + p[2] * p[2]) / 3.0,
            p[1].powi(5) / 5.0,
            p[1] * p[1] * p[2].powi(3) / 3.0,
        ]
    })
}

fn benchmark3(opts: &BenchOptions) -> Result<Vec<BenchReport>, CliError> {
    let range = level_range(3, 0, 3, 4, opts.max_level)?;
    let gqo = opts.gqo.unwrap_or(3);
    let exact = exact::torus_i1();
    let mut rows = Vec::new();
    for level in range.start..=range.end {
        let (mesh, t_gen) = timeit(|| mesh_torus(level, 1.0, 0.25));
        dump_mesh(opts, &mesh, level)?;
        let (value, t_eval) = timeit(|| volume_integral(&mesh, inertia_density(), gqo));
        let value = value?;
        rows.push(vec![
            Cell::Int(level as u64),
            Cell::Int(mesh.num_elems() as u64),
            Cell::Int(mesh.num_nodes() as u64),
            Cell::Value(value),
            Cell::Value((value - exact).abs()),
            Cell::Time(t_gen),
            Cell::Time(t_eval),
        ]);
    }
    Ok(vec![BenchReport {
        title: "torus moment of inertia, volume integration".into(),
        columns: vec![
            Column::new("level", Display::Plain),
            Column::new("elements", Display::Plain),
            Column::new("nodes", Display::Plain),
            Column::new("I1", Display::Fixed6),
            Column::new("error", Display::Sci2),
            Column::new("gen [s]", Display::Sci2),
            Column::new("eval [s]", Display::Sci2),
        ],
        rows,
    }])
}

fn benchmark4(opts: &BenchOptions) -> Result<Vec<BenchReport>, CliError> {
    let range = level_range(4, 0, 3, 4, opts.max_level)?;
    let gqo = opts.gqo.unwrap_or(3);
    let exact = exact::torus_i1();
    let mut rows = Vec::new();
    for level in range.start..=range.end {
        let (mesh, t_gen) = timeit(|| mesh_torus(level, 1.0, 0.25));
        dump_mesh(opts, &mesh, level)?;
        let boundary = extract_boundary(&mesh).map_err(CliError::Numerical)?;
        let bnd_nodes = {
            let mut seen = vec![false; mesh.num_nodes()];
            for &v in &boundary.faces {
                seen[v] = true;
            }
            seen.iter().filter(|s| **s).count()
        };
        let (value, t_eval) = timeit(|| surface_integral(&mesh, flux_field(), gqo));
        let value = value?;
        rows.push(vec![
            Cell::Int(level as u64),
            Cell::Int(boundary.len() as u64),
            Cell::Int(bnd_nodes as u64),
            Cell::Value(value),
            Cell::Value((value - exact).abs()),
            Cell::Time(t_gen),
            Cell::Time(t_eval),
        ]);
    }
    Ok(vec![BenchReport {
        title: "torus moment of inertia, surface integration".into(),
        columns: vec![
            Column::new("level", Display::Plain),
            Column::new("bnd faces", Display::Plain),
            Column::new("bnd nodes", Display::Plain),
            Column::new("I1", Display::Fixed6),
            Column::new("error", Display::Sci2),
            Column::new("gen [s]", Display::Sci2),
            Column::new("eval [s]", Display::Sci2),
        ],
        rows,
    }])
}

fn interpolate(mesh: &Mesh, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..mesh.num_nodes()).map(|i| f(mesh.node(i))).collect()
}

fn export_matrices(
    opts: &BenchOptions,
    level: u32,
    k: &pagewise::SparseMatrix,
    m: &pagewise::SparseMatrix,
    b: Option<&[f64]>,
) -> Result<(), CliError> {
    if let Some(path) = &opts.mm_out {
        let kp = suffixed(path, level, Some("K"));
        let mut out = BufWriter::new(File::create(kp).map_err(Error::Io)?);
        k.write_matrix_market(&mut out)?;
        let mp = suffixed(path, level, Some("M"));
        let mut out = BufWriter::new(File::create(mp).map_err(Error::Io)?);
        m.write_matrix_market(&mut out)?;
        if let Some(b) = b {
            let bp = suffixed(path, level, Some("b"));
            let mut out = BufWriter::new(File::create(bp).map_err(Error::Io)?);
            write_matrix_market_vector(b, &mut out)?;
        }
    }
    Ok(())
}

fn assembly_report(
    id: usize,
    dim: usize,
    etype: ElementType,
    opts: &BenchOptions,
) -> Result<BenchReport, CliError> {
    // levels are P1 grid levels; a P2 run at the same level has the matrix
    // size of the next P1 level, so its defaults sit one level lower
    let (default_max, cap) = match (dim, etype) {
        (2, ElementType::P1) => (8, 9),
        (2, ElementType::P2) => (7, 8),
        (3, ElementType::P1) => (5, 6),
        _ => (4, 5),
    };
    let range = level_range(id, 1, default_max, cap, opts.max_level)?;
    let (i_k_exact, i_m_exact) = if dim == 2 {
        (exact::i_k_2d(), exact::i_m_2d())
    } else {
        (exact::i_k_3d(), exact::i_m_3d())
    };
    let coeff = move |p: &[f64]| p.iter().sum::<f64>().exp();
    let test_fn = move |p: &[f64]| -> f64 {
        if dim == 2 {
            (PI * p[0]).sin() * (PI * p[1]).sin()
        } else {
            (PI * p[0]).cos() * (PI * p[1]).cos() * (PI * p[2]).cos()
        }
    };
    let mut rows = Vec::new();
    for level in range.start..=range.end {
        let p1 = if dim == 2 {
            mesh_square(level)
        } else {
            mesh_cube(level)
        };
        let mesh = match etype {
            ElementType::P1 => p1,
            ElementType::P2 => augment_p2(&p1),
        };
        dump_mesh(opts, &mesh, level)?;
        let (k_res, t_k) = timeit(|| stiffness_matrix(&mesh, scalar_field(coeff), opts.gqo));
        let (k, _) = k_res?;
        let (m_res, t_m) = timeit(|| mass_matrix(&mesh, scalar_field(coeff), opts.gqo));
        let (m, _) = m_res?;
        export_matrices(opts, level, &k, &m, None)?;
        let u = interpolate(&mesh, test_fn);
        let e_k = (k.quadratic_form(&u) - i_k_exact).abs();
        let e_m = (m.quadratic_form(&u) - i_m_exact).abs();
        rows.push(vec![
            Cell::Int(level as u64),
            Cell::Int(mesh.num_nodes() as u64),
            Cell::Value(e_k),
            Cell::Value(e_m),
            Cell::Time(t_k),
            Cell::Time(t_m),
        ]);
    }
    Ok(BenchReport {
        title: format!("{dim}D {etype} stiffness/mass assembly"),
        columns: vec![
            Column::new("level", Display::Plain),
            Column::new("K, M size", Display::Plain),
            Column::new("e_K", Display::Sci2),
            Column::new("e_M", Display::Sci2),
            Column::new("K [s]", Display::Sci2),
            Column::new("M [s]", Display::Sci2),
        ],
        rows,
    })
}

fn benchmark_assembly(id: usize, dim: usize, opts: &BenchOptions) -> Result<Vec<BenchReport>, CliError> {
    match opts.etype {
        Some(etype) => Ok(vec![assembly_report(id, dim, etype, opts)?]),
        None => Ok(vec![
            assembly_report(id, dim, ElementType::P1, opts)?,
            assembly_report(id, dim, ElementType::P2, opts)?,
        ]),
    }
}

fn benchmark7(opts: &BenchOptions) -> Result<Vec<BenchReport>, CliError> {
    let range = level_range(7, 1, 4, 5, opts.max_level)?;
    let etype = opts.etype.unwrap_or(ElementType::P2);
    let j_exact = exact::lshape_energy();
    let c_k = |p: &[f64]| 1.0 + p[0] * p[0] - p[1];
    let c_m = |p: &[f64]| 1.0 - p[0] + p[1] * p[1];
    let f = |p: &[f64]| {
        let (x1, x2) = (p[0], p[1]);
        8.0 * PI * x1 * (4.0 * PI * x1).sin() * (4.0 * PI * x2).cos()
            + (4.0 * PI * x1).cos()
                * (-4.0 * PI * (4.0 * PI * x2).sin()
                    + (1.0 - x1 + 32.0 * PI * PI * (1.0 + x1 * x1 - x2) + x2 * x2)
                        * (4.0 * PI * x2).cos())
    };
    let u_d = |p: &[f64]| (4.0 * PI * p[0]).cos();
    let mut rows = Vec::new();
    for level in range.start..=range.end {
        let p1 = mesh_lshape(level);
        let mesh = match etype {
            ElementType::P1 => p1,
            ElementType::P2 => augment_p2(&p1),
        };
        dump_mesh(opts, &mesh, level)?;
        let (nodes, values) = mark_dirichlet(&mesh, |p| (p[1] - 1.0).abs() <= 1e-12, u_d)
            .map_err(CliError::Numerical)?;
        let solve_opts = SolveOptions {
            gqo: opts.gqo,
            ..Default::default()
        };
        let (sol, t_solve) = timeit(|| {
            solve_bvp(
                &mesh,
                scalar_field(c_k),
                scalar_field(c_m),
                scalar_field(f),
                &nodes,
                &values,
                &solve_opts,
            )
        });
        let sol = sol?;
        if opts.mm_out.is_some() {
            let (k, _) = stiffness_matrix(&mesh, scalar_field(c_k), opts.gqo)?;
            let (m, _) = mass_matrix(&mesh, scalar_field(c_m), opts.gqo)?;
            let (b, _) = pagewise::assembly::rhs_vector(&mesh, scalar_field(f), opts.gqo)?;
            export_matrices(opts, level, &k, &m, Some(&b))?;
        }
        let e = &sol.energies;
        rows.push(vec![
            Cell::Int(level as u64),
            Cell::Int(mesh.num_elems() as u64),
            Cell::Int(mesh.num_nodes() as u64),
            Cell::Value(e.j1),
            Cell::Value(e.j2),
            Cell::Value(e.j3),
            Cell::Value(e.j),
            Cell::Value((e.j - j_exact).abs()),
            Cell::Int(sol.iterations as u64),
            Cell::Value(sol.residual),
            Cell::Time(t_solve),
        ]);
    }
    Ok(vec![BenchReport {
        title: format!("L-shape boundary value problem, {etype} elements"),
        columns: vec![
            Column::new("level", Display::Plain),
            Column::new("elements", Display::Plain),
            Column::new("nodes", Display::Plain),
            Column::new("J1", Display::Fixed6),
            Column::new("J2", Display::Fixed6),
            Column::new("J3", Display::Fixed6),
            Column::new("J", Display::Fixed6),
            Column::new("error", Display::Sci2),
            Column::new("iters", Display::Plain),
            Column::new("residual", Display::Sci2),
            Column::new("solve [s]", Display::Sci2),
        ],
        rows,
    }])
}

/// Run one of the seven benchmarks, returning one report per table.
pub fn run_benchmark(id: usize, opts: &BenchOptions) -> Result<Vec<BenchReport>, CliError> {
    match id {
        1 => benchmark1(opts),
        2 => benchmark2(opts),
        3 => benchmark3(opts),
        4 => benchmark4(opts),
        5 => benchmark_assembly(5, 2, opts),
        6 => benchmark_assembly(6, 3, opts),
        7 => benchmark7(opts),
        _ => Err(CliError::Usage(format!(
            "unknown benchmark id {id} (expected 1..=7)"
        ))),
    }
}
