//! Vectorized FEM assembly: coefficient-weighted stiffness and mass matrices
//! for P1/P2 in 2D/3D, right-hand-side vectors, and triplet-to-CSR
//! accumulation with duplicate summation.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry;
use crate::matrix::Matrix;
use crate::mesh::{ElementType, Mesh};
use crate::page::{amtam, PageArray3, PageScalars};
use crate::quadrature::{gauss_points, phider, shapefun};

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Square sparse matrix in compressed sparse rows, built from triplets with
/// duplicate-entry summation.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from COO triplets. Entries are stably sorted by (row, col) and
    /// duplicates summed in that order, so the result does not depend on how
    /// the triplets were produced beyond their order.
    pub fn from_triplets(
        n: usize,
        rows: &[usize],
        cols: &[usize],
        vals: &[f64],
    ) -> Result<Self> {
        assert_eq!(rows.len(), cols.len());
        assert_eq!(rows.len(), vals.len());
        for (&r, &c) in rows.iter().zip(cols) {
            if r >= n || c >= n {
                return Err(Error::IndexOutOfRange {
                    index: r.max(c),
                    nn: n,
                });
            }
        }
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by_key(|&i| (rows[i], cols[i]));
        let mut merged_rows: Vec<usize> = Vec::new();
        let mut col_idx: Vec<usize> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        for &i in &order {
            let (r, c, v) = (rows[i], cols[i], vals[i]);
            if merged_rows.last() == Some(&r) && col_idx.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                merged_rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for &r in &merged_rows {
            row_ptr[r + 1] += 1;
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(pos) => self.values[lo + pos],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            let mut s = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                s += v * x[*c];
            }
            y[r] = s;
        }
    }

    /// `u' A u`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let mut total = 0.0;
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            let mut s = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                s += v * u[*c];
            }
            total += u[r] * s;
        }
        total
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|r| self.row(r).1.iter().map(|v| v.abs()).sum())
            .fold(0.0, f64::max)
    }

    /// `||A - A'||_inf` relative check support: max |a_ij - a_ji|.
    pub fn max_asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                m = m.max((v - self.get(*c, r)).abs());
            }
        }
        m
    }

    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        assert_eq!(self.n, other.n);
        let mut rows = Vec::with_capacity(self.nnz() + other.nnz());
        let mut cols = Vec::with_capacity(self.nnz() + other.nnz());
        let mut vals = Vec::with_capacity(self.nnz() + other.nnz());
        for m in [self, other] {
            for r in 0..m.n {
                let (cc, vv) = m.row(r);
                for (c, v) in cc.iter().zip(vv) {
                    rows.push(r);
                    cols.push(*c);
                    vals.push(*v);
                }
            }
        }
        SparseMatrix::from_triplets(self.n, &rows, &cols, &vals)
    }

    pub fn to_dense(&self) -> Matrix {
        let mut d = Matrix::zeros(self.n, self.n);
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                d.set(r, *c, *v);
            }
        }
        d
    }

    /// MatrixMarket coordinate format (1-based, general).
    pub fn write_matrix_market<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.n, self.n, self.nnz())?;
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                writeln!(out, "{} {} {:.15e}", r + 1, c + 1, v)?;
            }
        }
        Ok(())
    }
}

/// MatrixMarket array format for a dense vector.
pub fn write_matrix_market_vector<W: Write>(v: &[f64], out: &mut W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} 1", v.len())?;
    for x in v {
        writeln!(out, "{x:.15e}")?;
    }
    Ok(())
}

/// Coefficient values at the P1-geometry-mapped quadrature points,
/// transposed to `nip x ne`.
pub fn coeffs_in_ip<F>(
    coords: &[f64],
    dim: usize,
    conn_p1: &[usize],
    coeff: F,
    gqo: usize,
) -> Result<Matrix>
where
    F: Fn(&PageArray3) -> PageArray3,
{
    let rule = gauss_points(gqo, dim)?;
    let (c3, _) = geometry::create_coords3d(coords, dim, conn_p1, dim + 1)?;
    let phi = shapefun(&rule.points, ElementType::P1);
    let x_ip = crate::integrate::map_quadrature_points(&c3, &phi)?;
    let samples = coeff(&x_ip); // 1 x nip x ne
    let ne = samples.pages();
    let nip = samples.cols();
    let mut out = Matrix::zeros(nip, ne);
    for k in 0..ne {
        for i in 0..nip {
            out.set(i, k, samples.get(0, i, k));
        }
    }
    Ok(out)
}

fn default_gqo(etype: ElementType) -> usize {
    match etype {
        ElementType::P1 => 2,
        ElementType::P2 => 4,
    }
}

/// Scatter local `nlb x nlb` pages into a sparse matrix:
/// `A[conn[k][i], conn[k][j]] += page_k[i][j]`, duplicates summed.
pub fn scatter_triplets(local: &PageArray3, conn: &[usize], n: usize) -> Result<SparseMatrix> {
    let nlb = local.rows();
    assert_eq!(local.cols(), nlb, "local pages must be square");
    let ne = local.pages();
    assert_eq!(conn.len(), ne * nlb, "connectivity row length must be nlb");
    let mut rows = Vec::with_capacity(ne * nlb * nlb);
    let mut cols = Vec::with_capacity(ne * nlb * nlb);
    let mut vals = Vec::with_capacity(ne * nlb * nlb);
    for k in 0..ne {
        let e = &conn[k * nlb..(k + 1) * nlb];
        let page = local.page(k);
        for j in 0..nlb {
            for i in 0..nlb {
                rows.push(e[i]);
                cols.push(e[j]);
                vals.push(page[j * nlb + i]);
            }
        }
    }
    SparseMatrix::from_triplets(n, &rows, &cols, &vals)
}

fn axpy_pages(acc: &mut PageArray3, scale: &PageScalars, term: &PageArray3) {
    let rc = acc.rows() * acc.cols();
    let s = scale.data();
    for (k, page) in acc.data_mut().chunks_mut(rc).enumerate() {
        let src = &term.data()[k * rc..(k + 1) * rc];
        for (a, b) in page.iter_mut().zip(src) {
            *a += s[k] * b;
        }
    }
}

/// Stiffness matrix of `int c_K grad(phi_i) . grad(phi_j)` plus the local
/// `nlb x nlb x ne` pages it was assembled from.
pub fn stiffness_matrix<F>(
    mesh: &Mesh,
    coeff: F,
    gqo: Option<usize>,
) -> Result<(SparseMatrix, PageArray3)>
where
    F: Fn(&PageArray3) -> PageArray3,
{
    let gqo = gqo.unwrap_or(default_gqo(mesh.etype));
    let rule = gauss_points(gqo, mesh.dim)?;
    let coeffs = coeffs_in_ip(&mesh.coords, mesh.dim, &mesh.vertex_elems(), coeff, gqo)?;
    let (c3, _) = geometry::create_coords3d(
        &mesh.coords,
        mesh.dim,
        &mesh.elems,
        mesh.nodes_per_elem(),
    )?;
    let g = phider(&c3, &rule.points, mesh.etype)?;
    let nlb = mesh.nodes_per_elem();
    let ne = mesh.num_elems();
    let mut k3d = PageArray3::zeros(nlb, nlb, ne);
    for i in 0..rule.nip() {
        let grad_t_grad = amtam(&g.dphi[i], &g.dphi[i])?;
        let scale = PageScalars::from_vec(
            (0..ne)
                .map(|k| rule.weights[i] * coeffs.get(i, k) * g.detj[i][k])
                .collect(),
        );
        axpy_pages(&mut k3d, &scale, &grad_t_grad);
    }
    let k = scatter_triplets(&k3d, &mesh.elems, mesh.num_nodes())?;
    Ok((k, k3d))
}

/// Mass matrix of `int c_M phi_i phi_j` plus the local pages. Jacobians are
/// constant per element (affine geometry, even for P2 fields).
pub fn mass_matrix<F>(
    mesh: &Mesh,
    coeff: F,
    gqo: Option<usize>,
) -> Result<(SparseMatrix, PageArray3)>
where
    F: Fn(&PageArray3) -> PageArray3,
{
    let gqo = gqo.unwrap_or(default_gqo(mesh.etype));
    let rule = gauss_points(gqo, mesh.dim)?;
    let conn_p1 = mesh.vertex_elems();
    let coeffs = coeffs_in_ip(&mesh.coords, mesh.dim, &conn_p1, coeff, gqo)?;
    let sizes = geometry::sizes_of_elements(&mesh.coords, mesh.dim, &conn_p1)?;
    let dfact = factorial(mesh.dim);
    let detj_abs: Vec<f64> = sizes.iter().map(|s| s * dfact).collect();
    let phi_ref = shapefun(&rule.points, mesh.etype);
    let nlb = mesh.nodes_per_elem();
    let ne = mesh.num_elems();
    let mut m3d = PageArray3::zeros(nlb, nlb, ne);
    let mut phi2d = vec![0.0; nlb * nlb];
    for i in 0..rule.nip() {
        let col = phi_ref.col(i);
        for b in 0..nlb {
            for a in 0..nlb {
                phi2d[b * nlb + a] = col[a] * col[b];
            }
        }
        let w = rule.weights[i];
        let rc = nlb * nlb;
        for (k, page) in m3d.data_mut().chunks_mut(rc).enumerate() {
            let s = w * coeffs.get(i, k) * detj_abs[k];
            for (acc, p) in page.iter_mut().zip(&phi2d) {
                *acc += s * p;
            }
        }
    }
    let m = scatter_triplets(&m3d, &mesh.elems, mesh.num_nodes())?;
    Ok((m, m3d))
}

/// Right-hand side `b_i = int f phi_i`, with the local contributions
/// (`nlb x ne`) as the second output.
pub fn rhs_vector<F>(mesh: &Mesh, f: F, gqo: Option<usize>) -> Result<(Vec<f64>, Matrix)>
where
    F: Fn(&PageArray3) -> PageArray3,
{
    let gqo = gqo.unwrap_or(default_gqo(mesh.etype));
    let rule = gauss_points(gqo, mesh.dim)?;
    let conn_p1 = mesh.vertex_elems();
    let coeffs = coeffs_in_ip(&mesh.coords, mesh.dim, &conn_p1, f, gqo)?;
    let sizes = geometry::sizes_of_elements(&mesh.coords, mesh.dim, &conn_p1)?;
    let dfact = factorial(mesh.dim);
    let phi_ref = shapefun(&rule.points, mesh.etype);
    let nlb = mesh.nodes_per_elem();
    let ne = mesh.num_elems();
    let mut b2d = Matrix::zeros(nlb, ne);
    for i in 0..rule.nip() {
        let col = phi_ref.col(i).to_vec();
        let w = rule.weights[i];
        for k in 0..ne {
            let s = w * coeffs.get(i, k) * sizes[k] * dfact;
            let out = b2d.col_mut(k);
            for (a, phi) in col.iter().enumerate() {
                out[a] += s * phi;
            }
        }
    }
    let mut b = vec![0.0; mesh.num_nodes()];
    for k in 0..ne {
        let e = mesh.elem(k);
        let col = b2d.col(k);
        for (a, &node) in e.iter().enumerate() {
            b[node] += col[a];
        }
    }
    Ok((b, b2d))
}
