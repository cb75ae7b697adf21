//! Discrete domains: node/element storage, generators for the benchmark
//! geometries, uniform refinement, boundary-face extraction and P2 (mid-edge)
//! augmentation.
//!
//! All generators are deterministic. Indices are 0-based in memory; the text
//! format is 1-based.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementType {
    P1,
    P2,
}

impl fmt::Display for ElementType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementType::P1 => write!(f, "P1"),
            ElementType::P2 => write!(f, "P2"),
        }
    }
}

impl ElementType {
    /// Local basis size `nlb` for a simplex in dimension `dim`.
    pub fn nlb(&self, dim: usize) -> usize {
        let v = dim + 1;
        match self {
            ElementType::P1 => v,
            ElementType::P2 => v + v * (v - 1) / 2,
        }
    }
}

/// Simplicial mesh: `nn x dim` node coordinates (row-major) and `ne x d`
/// element connectivity (row-major). For P2 the first `dim + 1` columns are
/// vertices, the rest edge midpoints in the canonical edge order
/// (2D: (0,1),(1,2),(0,2); 3D: (0,1),(0,2),(0,3),(1,2),(1,3),(2,3)).
#[derive(Debug, Clone)]
pub struct Mesh {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub elems: Vec<usize>,
    pub etype: ElementType,
    nn: usize,
    ne: usize,
    d: usize,
}

impl Mesh {
    pub fn new(
        dim: usize,
        coords: Vec<f64>,
        elems: Vec<usize>,
        etype: ElementType,
    ) -> Result<Self> {
        assert!(dim == 2 || dim == 3, "dim must be 2 or 3");
        let nn = coords.len() / dim;
        if coords.len() != nn * dim {
            return Err(Error::BufferLength {
                op: "Mesh::new coords",
                expected: nn * dim,
                got: coords.len(),
            });
        }
        let d = etype.nlb(dim);
        let ne = elems.len() / d;
        if elems.len() != ne * d {
            return Err(Error::BufferLength {
                op: "Mesh::new elems",
                expected: ne * d,
                got: elems.len(),
            });
        }
        for &v in &elems {
            if v >= nn {
                return Err(Error::IndexOutOfRange { index: v, nn });
            }
        }
        Ok(Self {
            dim,
            coords,
            elems,
            etype,
            nn,
            ne,
            d,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nn
    }

    pub fn num_elems(&self) -> usize {
        self.ne
    }

    /// Nodes per element row.
    pub fn nodes_per_elem(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn elem(&self, k: usize) -> &[usize] {
        &self.elems[k * self.d..(k + 1) * self.d]
    }

    /// Number of P1 vertex nodes. Vertex nodes occupy the low index range, so
    /// for P2 this is `max(elems[:, 0..dim+1]) + 1`.
    pub fn num_vertex_nodes(&self) -> usize {
        match self.etype {
            ElementType::P1 => self.nn,
            ElementType::P2 => {
                let v = self.dim + 1;
                let mut m = 0;
                for k in 0..self.ne {
                    for &idx in &self.elem(k)[..v] {
                        m = m.max(idx);
                    }
                }
                m + 1
            }
        }
    }

    /// The P1 vertex sub-connectivity (first `dim + 1` columns).
    pub fn vertex_elems(&self) -> Vec<usize> {
        let v = self.dim + 1;
        let mut out = Vec::with_capacity(self.ne * v);
        for k in 0..self.ne {
            out.extend_from_slice(&self.elem(k)[..v]);
        }
        out
    }

    /// Text export: line 1 `dim nn ne etype`, then `nn` coordinate lines,
    /// then `ne` connectivity lines (1-based).
    pub fn write_text(&self) -> String {
        let mut s = format!("{} {} {} {}\n", self.dim, self.nn, self.ne, self.etype);
        for i in 0..self.nn {
            let row: Vec<String> = self.node(i).iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        for k in 0..self.ne {
            let row: Vec<String> = self.elem(k).iter().map(|v| (v + 1).to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn write_text_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.write_text())?;
        Ok(())
    }

    pub fn read_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::MeshParse("empty file".into()))?;
        let mut it = header.split_whitespace();
        let mut num = |what: &str| -> Result<usize> {
            it.next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::MeshParse(format!("bad header field {what}")))
        };
        let dim = num("dim")?;
        let nn = num("nn")?;
        let ne = num("ne")?;
        let etype = match it.next() {
            Some("P1") => ElementType::P1,
            Some("P2") => ElementType::P2,
            other => return Err(Error::MeshParse(format!("bad etype {other:?}"))),
        };
        let mut coords = Vec::with_capacity(nn * dim);
        for _ in 0..nn {
            let line = lines
                .next()
                .ok_or_else(|| Error::MeshParse("missing coordinate line".into()))?;
            for tok in line.split_whitespace() {
                coords.push(
                    tok.parse()
                        .map_err(|e| Error::MeshParse(format!("bad coordinate: {e}")))?,
                );
            }
        }
        let mut elems = Vec::with_capacity(ne * etype.nlb(dim));
        for _ in 0..ne {
            let line = lines
                .next()
                .ok_or_else(|| Error::MeshParse("missing connectivity line".into()))?;
            for tok in line.split_whitespace() {
                let v: usize = tok
                    .parse()
                    .map_err(|e| Error::MeshParse(format!("bad index: {e}")))?;
                if v == 0 {
                    return Err(Error::MeshParse("index 0 in 1-based file".into()));
                }
                elems.push(v - 1);
            }
        }
        Mesh::new(dim, coords, elems, etype)
    }
}

/// The six path tetrahedra of the Kuhn split of the unit cube, as local
/// (i, j, k) in {0, 1} offsets. All share the main diagonal (0,0,0)-(1,1,1).
const KUHN: [[(usize, usize, usize); 4]; 6] = [
    [(0, 0, 0), (1, 0, 0), (1, 1, 0), (1, 1, 1)],
    [(0, 0, 0), (1, 0, 0), (1, 0, 1), (1, 1, 1)],
    [(0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 1, 1)],
    [(0, 0, 0), (0, 1, 0), (0, 1, 1), (1, 1, 1)],
    [(0, 0, 0), (0, 0, 1), (1, 0, 1), (1, 1, 1)],
    [(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)],
];

/// Kuhn-split tetrahedral grid over an axis-aligned box. `mirror[a]` reflects
/// the local split in axis `a` for cells in the upper half of that axis;
/// reflection through a shared face fixes the face, so the mesh stays
/// conforming while every boundary quad takes the mirrored diagonal.
fn kuhn_grid(
    n: [usize; 3],
    lo: [f64; 3],
    hi: [f64; 3],
    mirror: [bool; 3],
) -> (Vec<f64>, Vec<usize>) {
    let idx = |i: usize, j: usize, k: usize| (i * (n[1] + 1) + j) * (n[2] + 1) + k;
    let mut coords = Vec::with_capacity((n[0] + 1) * (n[1] + 1) * (n[2] + 1) * 3);
    for i in 0..=n[0] {
        for j in 0..=n[1] {
            for k in 0..=n[2] {
                coords.push(lo[0] + (hi[0] - lo[0]) * i as f64 / n[0] as f64);
                coords.push(lo[1] + (hi[1] - lo[1]) * j as f64 / n[1] as f64);
                coords.push(lo[2] + (hi[2] - lo[2]) * k as f64 / n[2] as f64);
            }
        }
    }
    let half = [n[0] / 2, n[1] / 2, n[2] / 2];
    let mut elems = Vec::with_capacity(6 * n[0] * n[1] * n[2] * 4);
    for i in 0..n[0] {
        for j in 0..n[1] {
            for k in 0..n[2] {
                let flip = [
                    mirror[0] && i >= half[0],
                    mirror[1] && j >= half[1],
                    mirror[2] && k >= half[2],
                ];
                for tet in &KUHN {
                    for &(a, b, c) in tet {
                        let aa = if flip[0] { 1 - a } else { a };
                        let bb = if flip[1] { 1 - b } else { b };
                        let cc = if flip[2] { 1 - c } else { c };
                        elems.push(idx(i + aa, j + bb, k + cc));
                    }
                }
            }
        }
    }
    (coords, elems)
}

/// Unit cube [0,1]^3 split into `n^3` subcubes (n = 2^level), each into six
/// Kuhn tetrahedra: `(n+1)^3` nodes, `6 n^3` elements.
pub fn mesh_cube(level: u32) -> Mesh {
    let n = 1usize << level;
    let (coords, elems) = kuhn_grid([n; 3], [0.0; 3], [1.0; 3], [false; 3]);
    Mesh::new(3, coords, elems, ElementType::P1).unwrap()
}

/// Unit square [0,1]^2, criss-cross pattern: `n^2` squares (n = 2^level),
/// each split into four triangles by a center node. `(n+1)^2 + n^2` nodes,
/// `4 n^2` elements.
pub fn mesh_square(level: u32) -> Mesh {
    let n = 1usize << level;
    criss_cross_rect(n, n, [0.0, 0.0], [1.0, 1.0])
}

fn criss_cross_rect(nx: usize, ny: usize, lo: [f64; 2], hi: [f64; 2]) -> Mesh {
    let hx = (hi[0] - lo[0]) / nx as f64;
    let hy = (hi[1] - lo[1]) / ny as f64;
    let nvert = (nx + 1) * (ny + 1);
    let mut coords = Vec::with_capacity((nvert + nx * ny) * 2);
    for i in 0..=nx {
        for j in 0..=ny {
            coords.push(lo[0] + hx * i as f64);
            coords.push(lo[1] + hy * j as f64);
        }
    }
    for i in 0..nx {
        for j in 0..ny {
            coords.push(lo[0] + hx * (i as f64 + 0.5));
            coords.push(lo[1] + hy * (j as f64 + 0.5));
        }
    }
    let vid = |i: usize, j: usize| i * (ny + 1) + j;
    let cid = |i: usize, j: usize| nvert + i * ny + j;
    let mut elems = Vec::with_capacity(4 * nx * ny * 3);
    for i in 0..nx {
        for j in 0..ny {
            let (c0, c1, c2, c3) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            let m = cid(i, j);
            for tri in [[c0, c1, m], [c1, c2, m], [c2, c3, m], [c3, c0, m]] {
                elems.extend_from_slice(&tri);
            }
        }
    }
    Mesh::new(2, coords, elems, ElementType::P1).unwrap()
}

/// Tangent-spread (equiangular) direction for a point on the surface of the
/// cube [-1,1]^dim. Minor coordinates are opened up by tan(pi/4 * q) so the
/// induced grid on the sphere is close to uniform; exact +-1 entries stay put.
fn equiangular_dir(q: &mut [f64]) {
    let mut dom = 0;
    for (a, &v) in q.iter().enumerate() {
        if v.abs() > q[dom].abs() {
            dom = a;
        }
    }
    let mut norm2 = 0.0;
    for (a, v) in q.iter_mut().enumerate() {
        if a == dom || v.abs() == 1.0 {
            *v = v.signum();
        } else {
            *v = (*v * std::f64::consts::FRAC_PI_4).tan();
        }
        norm2 += *v * *v;
    }
    let inv = 1.0 / norm2.sqrt();
    for v in q.iter_mut() {
        *v *= inv;
    }
}

/// Cube-to-ball node map: shell `s = max|x_i|` goes to radius `r * s`, the
/// direction is the equiangular spread of `x / s`.
fn ball_point(x: &[f64], r: f64) -> Vec<f64> {
    let s = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if s == 0.0 {
        return vec![0.0; x.len()];
    }
    let mut q: Vec<f64> = x.iter().map(|v| v / s).collect();
    equiangular_dir(&mut q);
    q.iter().map(|d| r * s * d).collect()
}

/// Tetrahedral mesh of the ball of radius `r`: Kuhn grid on [-1,1]^3 with
/// 2^(level+1) segments per edge, octant-mirrored split, nodes pushed onto
/// concentric spheres by the equiangular map. Level 1 gives 125 nodes and
/// 384 elements.
pub fn mesh_sphere(level: u32, r: f64) -> Mesh {
    assert!(level >= 1, "sphere levels start at 1");
    assert!(r > 0.0);
    let n = 1usize << (level + 1);
    let (mut coords, elems) = kuhn_grid([n; 3], [-1.0; 3], [1.0; 3], [true; 3]);
    for p in coords.chunks_mut(3) {
        let mapped = ball_point(p, r);
        p.copy_from_slice(&mapped);
    }
    Mesh::new(3, coords, elems, ElementType::P1).unwrap()
}

/// Sectors around the major circle at a given refinement level.
fn torus_sectors(level: u32) -> usize {
    let ideal = (std::f64::consts::PI * (1u64 << level) as f64).round() as usize;
    4 * ideal.max(4)
}

/// Tetrahedral mesh of the solid torus with major radius `big_r` and tube
/// radius `r`: `4*max(4, round(pi*2^level))` sweep sectors, cross-section a
/// 2^level grid on [-r, r]^2 pushed onto the tube disk by the equiangular
/// map, six tetrahedra per hexahedral cell (quadrant-mirrored in the
/// cross-section). Level 0 gives 64 nodes and 96 elements.
pub fn mesh_torus(level: u32, big_r: f64, r: f64) -> Mesh {
    assert!(r > 0.0 && r < big_r);
    let nu = torus_sectors(level);
    let m = 1usize << level;
    let npc = (m + 1) * (m + 1);
    let mut coords = Vec::with_capacity(nu * npc * 3);
    for j in 0..nu {
        let u = 2.0 * std::f64::consts::PI * j as f64 / nu as f64;
        let (su, cu) = u.sin_cos();
        for i in 0..=m {
            for k in 0..=m {
                let a = -1.0 + 2.0 * i as f64 / m as f64;
                let b = -1.0 + 2.0 * k as f64 / m as f64;
                let mapped = ball_point(&[a, b], r);
                // cross-section plane: radial offset and tube height
                coords.push((big_r + mapped[0]) * cu);
                coords.push(mapped[1]);
                coords.push((big_r + mapped[0]) * su);
            }
        }
    }
    let nid = |j: usize, i: usize, k: usize| (j % nu) * npc + i * (m + 1) + k;
    let half = m / 2;
    let mut elems = Vec::with_capacity(nu * m * m * 24);
    for j in 0..nu {
        for i in 0..m {
            for k in 0..m {
                let flip_i = m > 1 && i >= half;
                let flip_k = m > 1 && k >= half;
                for tet in &KUHN {
                    for &(a, b, c) in tet {
                        let bb = if flip_i { 1 - b } else { b };
                        let cc = if flip_k { 1 - c } else { c };
                        elems.push(nid(j + a, i + bb, k + cc));
                    }
                }
            }
        }
    }
    Mesh::new(3, coords, elems, ElementType::P1).unwrap()
}

/// L-shaped domain (0,1)^2 minus (0.25,1)^2: seven squares of side 1/4 in the
/// criss-cross pattern, uniformly refined `level` times. Level 1 has 112
/// triangles and 73 vertices (257 P2 nodes).
pub fn mesh_lshape(level: u32) -> Mesh {
    // cells (i, j) of the 4x4 grid that lie inside the L
    let cells: Vec<(usize, usize)> = (0..4usize)
        .flat_map(|i| (0..4usize).map(move |j| (i, j)))
        .filter(|&(i, j)| i == 0 || j == 0)
        .collect();
    let h = 0.25;
    let mut node_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut coords: Vec<f64> = Vec::new();
    // grid vertices first, scanned in cell order
    let vertex = |coords: &mut Vec<f64>, ids: &mut HashMap<(usize, usize), usize>, gi: usize, gj: usize| {
        *ids.entry((gi, gj)).or_insert_with(|| {
            coords.push(h * gi as f64);
            coords.push(h * gj as f64);
            coords.len() / 2 - 1
        })
    };
    let mut corner_ids = Vec::new();
    for &(i, j) in &cells {
        let c = [
            vertex(&mut coords, &mut node_ids, i, j),
            vertex(&mut coords, &mut node_ids, i + 1, j),
            vertex(&mut coords, &mut node_ids, i + 1, j + 1),
            vertex(&mut coords, &mut node_ids, i, j + 1),
        ];
        corner_ids.push(c);
    }
    let mut elems = Vec::new();
    for (ci, &(i, j)) in cells.iter().enumerate() {
        let center = coords.len() / 2;
        coords.push(h * (i as f64 + 0.5));
        coords.push(h * (j as f64 + 0.5));
        let [c0, c1, c2, c3] = corner_ids[ci];
        for tri in [[c0, c1, center], [c1, c2, center], [c2, c3, center], [c3, c0, center]] {
            elems.extend_from_slice(&tri);
        }
    }
    let mut mesh = Mesh::new(2, coords, elems, ElementType::P1).unwrap();
    for _ in 0..level {
        mesh = uniform_refine(&mesh);
    }
    mesh
}

/// Collect edge midpoints, appending new nodes after the existing ones.
/// Returns the extended coordinates and the edge -> node map.
fn edge_midpoints(mesh: &Mesh, edges: &[(usize, usize)]) -> (Vec<f64>, HashMap<(usize, usize), usize>) {
    let mut coords = mesh.coords.clone();
    let mut map: HashMap<(usize, usize), usize> = HashMap::new();
    for &(a, b) in edges {
        let key = (a.min(b), a.max(b));
        if !map.contains_key(&key) {
            let id = coords.len() / mesh.dim;
            for c in 0..mesh.dim {
                coords.push(0.5 * (mesh.node(key.0)[c] + mesh.node(key.1)[c]));
            }
            map.insert(key, id);
        }
    }
    (coords, map)
}

fn local_edges(dim: usize) -> &'static [(usize, usize)] {
    match dim {
        2 => &[(0, 1), (1, 2), (0, 2)],
        3 => &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
        _ => unreachable!(),
    }
}

fn element_edge_list(mesh: &Mesh) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(mesh.ne * local_edges(mesh.dim).len());
    for k in 0..mesh.ne {
        let e = mesh.elem(k);
        for &(a, b) in local_edges(mesh.dim) {
            edges.push((e[a], e[b]));
        }
    }
    edges
}

/// Uniform (red) refinement of a P1 mesh: each triangle into 4, each
/// tetrahedron into 8. The interior octahedron is always cut along the
/// m(0,2)-m(1,3) diagonal.
pub fn uniform_refine(mesh: &Mesh) -> Mesh {
    assert_eq!(mesh.etype, ElementType::P1, "refine expects a P1 mesh");
    let (coords, map) = edge_midpoints(mesh, &element_edge_list(mesh));
    let mid = |a: usize, b: usize| map[&(a.min(b), a.max(b))];
    let mut elems = Vec::new();
    for k in 0..mesh.ne {
        let e = mesh.elem(k);
        if mesh.dim == 2 {
            let (a, b, c) = (e[0], e[1], e[2]);
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            for tri in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
                elems.extend_from_slice(&tri);
            }
        } else {
            let (a, b, c, d) = (e[0], e[1], e[2], e[3]);
            let (ab, ac, ad) = (mid(a, b), mid(a, c), mid(a, d));
            let (bc, bd, cd) = (mid(b, c), mid(b, d), mid(c, d));
            for tet in [
                [a, ab, ac, ad],
                [ab, b, bc, bd],
                [ac, bc, c, cd],
                [ad, bd, cd, d],
                [ab, ac, ad, bd],
                [ab, ac, bc, bd],
                [ac, ad, bd, cd],
                [ac, bc, bd, cd],
            ] {
                elems.extend_from_slice(&tet);
            }
        }
    }
    Mesh::new(mesh.dim, coords, elems, ElementType::P1).unwrap()
}

/// Boundary facets of a P1 mesh: `|F| x dim` vertex indices, the owning
/// element of each facet, and the facet measures (length in 2D, area in 3D).
#[derive(Debug, Clone)]
pub struct BoundaryFaces {
    pub dim: usize,
    pub faces: Vec<usize>,
    pub elem_of_face: Vec<usize>,
    pub areas: Vec<f64>,
}

impl BoundaryFaces {
    pub fn len(&self) -> usize {
        self.elem_of_face.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elem_of_face.is_empty()
    }

    #[inline]
    pub fn face(&self, i: usize) -> &[usize] {
        &self.faces[i * self.dim..(i + 1) * self.dim]
    }
}

fn facet_local_indices(dim: usize) -> Vec<Vec<usize>> {
    match dim {
        2 => vec![vec![0, 1], vec![1, 2], vec![2, 0]],
        3 => vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]],
        _ => unreachable!(),
    }
}

fn facet_measure(mesh: &Mesh, verts: &[usize]) -> f64 {
    if mesh.dim == 2 {
        let (a, b) = (mesh.node(verts[0]), mesh.node(verts[1]));
        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
    } else {
        let (a, b, c) = (mesh.node(verts[0]), mesh.node(verts[1]), mesh.node(verts[2]));
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let n = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
    }
}

struct FacetScan {
    // key -> (count, owner element, facet vertices as first seen, first-seen rank)
    table: HashMap<Vec<usize>, (usize, usize, Vec<usize>, usize)>,
}

fn scan_facets(mesh: &Mesh) -> Result<FacetScan> {
    let locals = facet_local_indices(mesh.dim);
    let mut table: HashMap<Vec<usize>, (usize, usize, Vec<usize>, usize)> = HashMap::new();
    let mut rank = 0usize;
    for k in 0..mesh.ne {
        let e = mesh.elem(k);
        for loc in &locals {
            let verts: Vec<usize> = loc.iter().map(|&l| e[l]).collect();
            let mut key = verts.clone();
            key.sort_unstable();
            match table.get_mut(&key) {
                Some(entry) => {
                    entry.0 += 1;
                    if entry.0 > 2 {
                        return Err(Error::NonManifoldFacet { count: entry.0 });
                    }
                }
                None => {
                    table.insert(key, (1, k, verts, rank));
                    rank += 1;
                }
            }
        }
    }
    Ok(FacetScan { table })
}

/// Facets that occur in exactly one element, with owner and measure.
/// Facets shared by more than two elements are reported as non-manifold.
pub fn extract_boundary(mesh: &Mesh) -> Result<BoundaryFaces> {
    assert_eq!(mesh.etype, ElementType::P1, "boundary expects a P1 mesh");
    let scan = scan_facets(mesh)?;
    let mut entries: Vec<(&Vec<usize>, &(usize, usize, Vec<usize>, usize))> = scan
        .table
        .iter()
        .filter(|(_, entry)| entry.0 == 1)
        .collect();
    entries.sort_by_key(|(_, entry)| entry.3);
    let mut faces = Vec::with_capacity(entries.len() * mesh.dim);
    let mut owners = Vec::with_capacity(entries.len());
    let mut areas = Vec::with_capacity(entries.len());
    for (fi, (_, entry)) in entries.iter().enumerate() {
        let measure = facet_measure(mesh, &entry.2);
        if measure <= 0.0 {
            return Err(Error::DegenerateFace { face: fi });
        }
        faces.extend_from_slice(&entry.2);
        owners.push(entry.1);
        areas.push(measure);
    }
    Ok(BoundaryFaces {
        dim: mesh.dim,
        faces,
        elem_of_face: owners,
        areas,
    })
}

/// Number of distinct facets in the mesh (interior counted once).
pub fn count_all_faces(mesh: &Mesh) -> Result<usize> {
    Ok(scan_facets(mesh)?.table.len())
}

/// P2 augmentation: appends one midpoint node per edge (after all vertex
/// nodes) and extends each element row by its edge midpoints in the canonical
/// edge order.
pub fn augment_p2(mesh: &Mesh) -> Mesh {
    assert_eq!(mesh.etype, ElementType::P1, "augment_p2 expects a P1 mesh");
    let (coords, map) = edge_midpoints(mesh, &element_edge_list(mesh));
    let mid = |a: usize, b: usize| map[&(a.min(b), a.max(b))];
    let nlb = ElementType::P2.nlb(mesh.dim);
    let mut elems = Vec::with_capacity(mesh.ne * nlb);
    for k in 0..mesh.ne {
        let e = mesh.elem(k);
        elems.extend_from_slice(e);
        for &(a, b) in local_edges(mesh.dim) {
            elems.push(mid(e[a], e[b]));
        }
    }
    Mesh::new(mesh.dim, coords, elems, ElementType::P2).unwrap()
}
