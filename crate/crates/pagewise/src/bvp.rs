//! Diffusion-reaction boundary-value problem with mixed Dirichlet/Neumann
//! conditions: `-div(c_K grad u) + c_M u = f`, `u = u_D` on the marked nodes,
//! zero flux elsewhere. Solved by elimination of the fixed entries and
//! Jacobi-preconditioned conjugate gradients on the free block.

use std::io::Write;

use crate::assembly::{mass_matrix, rhs_vector, stiffness_matrix, SparseMatrix};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mesh::Mesh;
use crate::page::{avtamav, PageArray3, PageVector};

/// Nodes where a coordinate predicate holds, with the boundary values there.
pub fn mark_dirichlet<P, V>(mesh: &Mesh, pred: P, value: V) -> Result<(Vec<usize>, Vec<f64>)>
where
    P: Fn(&[f64]) -> bool,
    V: Fn(&[f64]) -> f64,
{
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for i in 0..mesh.num_nodes() {
        let p = mesh.node(i);
        if pred(p) {
            nodes.push(i);
            values.push(value(p));
        }
    }
    if nodes.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok((nodes, values))
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Quadrature order override for all three assemblies.
    pub gqo: Option<usize>,
    /// Relative residual target for conjugate gradients.
    pub tol: f64,
    /// Iteration cap as a multiple of the number of unknowns.
    pub max_iter_factor: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gqo: None,
            tol: 1e-10,
            max_iter_factor: 10,
        }
    }
}

/// Global and element-local energy values of the quadratic functional
/// `J(u) = 1/2 u'Ku + 1/2 u'Mu - b'u`.
#[derive(Debug, Clone)]
pub struct Energies {
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub j: f64,
    pub local_j1: Vec<f64>,
    pub local_j2: Vec<f64>,
    pub local_j3: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BvpSolution {
    pub u: Vec<f64>,
    pub energies: Energies,
    pub iterations: usize,
    pub residual: f64,
}

/// Restrictions of a nodal vector to every element, as `nlb x ne` pages.
fn element_restrictions(mesh: &Mesh, u: &[f64]) -> PageVector {
    let nlb = mesh.nodes_per_elem();
    let ne = mesh.num_elems();
    let mut out = PageVector::zeros(nlb, ne);
    for k in 0..ne {
        let e = mesh.elem(k);
        let page = out.page_mut(k);
        for (a, &node) in e.iter().enumerate() {
            page[a] = u[node];
        }
    }
    out
}

/// Energies from the assembled global matrices and the retained local pages.
/// The local parts are page-wise bilinear forms `1/2 u_k' K_k u_k`,
/// `1/2 u_k' M_k u_k` and `-b_k' u_k`.
pub fn energies(
    mesh: &Mesh,
    u: &[f64],
    k: &SparseMatrix,
    m: &SparseMatrix,
    b: &[f64],
    k3d: &PageArray3,
    m3d: &PageArray3,
    b2d: &Matrix,
) -> Energies {
    let j1 = 0.5 * k.quadratic_form(u);
    let j2 = 0.5 * m.quadratic_form(u);
    let j3 = -b.iter().zip(u).map(|(x, y)| x * y).sum::<f64>();
    let uk = element_restrictions(mesh, u);
    let local_j1: Vec<f64> = avtamav(&uk, k3d, &uk)
        .expect("restriction pages match local pages")
        .into_vec()
        .iter()
        .map(|v| 0.5 * v)
        .collect();
    let local_j2: Vec<f64> = avtamav(&uk, m3d, &uk)
        .expect("restriction pages match local pages")
        .into_vec()
        .iter()
        .map(|v| 0.5 * v)
        .collect();
    let ne = mesh.num_elems();
    let nlb = mesh.nodes_per_elem();
    let mut local_j3 = vec![0.0; ne];
    for kk in 0..ne {
        let page = uk.page(kk);
        let col = b2d.col(kk);
        local_j3[kk] = -(0..nlb).map(|a| col[a] * page[a]).sum::<f64>();
    }
    Energies {
        j1,
        j2,
        j3,
        j: j1 + j2 + j3,
        local_j1,
        local_j2,
        local_j3,
    }
}

struct ReducedSystem {
    a_ff: SparseMatrix,
    rhs: Vec<f64>,
    free: Vec<usize>,
}

fn reduce(a: &SparseMatrix, b: &[f64], fixed: &[usize], u_d: &[f64]) -> ReducedSystem {
    let n = a.size();
    let mut fixed_value = vec![None; n];
    for (i, &node) in fixed.iter().enumerate() {
        fixed_value[node] = Some(u_d[i]);
    }
    let free: Vec<usize> = (0..n).filter(|i| fixed_value[*i].is_none()).collect();
    let mut free_index = vec![usize::MAX; n];
    for (fi, &node) in free.iter().enumerate() {
        free_index[node] = fi;
    }
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut rhs: Vec<f64> = free.iter().map(|&node| b[node]).collect();
    for (fi, &node) in free.iter().enumerate() {
        let (cc, vv) = a.row(node);
        for (c, v) in cc.iter().zip(vv) {
            match fixed_value[*c] {
                None => {
                    rows.push(fi);
                    cols.push(free_index[*c]);
                    vals.push(*v);
                }
                Some(g) => rhs[fi] -= v * g,
            }
        }
    }
    let a_ff = SparseMatrix::from_triplets(free.len(), &rows, &cols, &vals)
        .expect("indices are in range by construction");
    ReducedSystem { a_ff, rhs, free }
}

/// Jacobi-preconditioned conjugate gradients; returns (x, iterations,
/// relative residual).
fn pcg(a: &SparseMatrix, rhs: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize, f64)> {
    let n = a.size();
    let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if rhs_norm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    let inv_diag: Vec<f64> = diag
        .iter()
        .map(|d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rho: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut q = vec![0.0; n];
    for it in 1..=max_iter {
        a.matvec(&p, &mut q);
        let pq: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        let alpha = rho / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= tol * rhs_norm {
            return Ok((x, it, rnorm / rhs_norm));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rho_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rho_new / rho;
        rho = rho_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: rnorm / rhs_norm,
    })
}

/// Assemble `(K + M) u = b`, eliminate the Dirichlet entries, solve the free
/// block with PCG and evaluate the energies of the solution.
pub fn solve_bvp<CK, CM, FF>(
    mesh: &Mesh,
    c_k: CK,
    c_m: CM,
    f: FF,
    dirichlet_nodes: &[usize],
    dirichlet_values: &[f64],
    opts: &SolveOptions,
) -> Result<BvpSolution>
where
    CK: Fn(&PageArray3) -> PageArray3,
    CM: Fn(&PageArray3) -> PageArray3,
    FF: Fn(&PageArray3) -> PageArray3,
{
    assert!(!dirichlet_nodes.is_empty(), "dirichlet set must be nonempty");
    assert_eq!(dirichlet_nodes.len(), dirichlet_values.len());
    let (k, k3d) = stiffness_matrix(mesh, c_k, opts.gqo)?;
    let (m, m3d) = mass_matrix(mesh, c_m, opts.gqo)?;
    let (b, b2d) = rhs_vector(mesh, f, opts.gqo)?;
    let a = k.add(&m)?;
    let sys = reduce(&a, &b, dirichlet_nodes, dirichlet_values);
    let max_iter = opts.max_iter_factor * sys.free.len().max(1);
    let (x, iterations, residual) = pcg(&sys.a_ff, &sys.rhs, opts.tol, max_iter)?;
    let mut u = vec![0.0; mesh.num_nodes()];
    for (i, &node) in dirichlet_nodes.iter().enumerate() {
        u[node] = dirichlet_values[i];
    }
    for (fi, &node) in sys.free.iter().enumerate() {
        u[node] = x[fi];
    }
    let energies = energies(mesh, &u, &k, &m, &b, &k3d, &m3d, &b2d);
    Ok(BvpSolution {
        u,
        energies,
        iterations,
        residual,
    })
}

/// Plain-text nodal values, one per line.
pub fn write_solution<W: Write>(u: &[f64], out: &mut W) -> Result<()> {
    for v in u {
        writeln!(out, "{v:.16e}")?;
    }
    Ok(())
}
