//! Gauss integration of scalar fields and vector-field fluxes over elements
//! and boundary faces: quadrature-point mapping, the GI aggregator, volume
//! integrals, moments, and divergence-theorem surface integrals.
//!
//! Fields are callables over batched coordinates: they receive the
//! `dim x nip x npages` array of global quadrature points and return
//! `comp x nip x npages` samples (comp = 1 for scalar fields, dim for vector
//! fields). [`scalar_field`] and [`vector_field3`] adapt plain pointwise
//! closures to this interface.

use crate::error::{Error, Result};
use crate::geometry::{self, boundary_normals, face_coords3d};
use crate::matrix::Matrix;
use crate::mesh::{extract_boundary, Mesh};
use crate::page::{amsm, amsv, PageArray3};
use crate::quadrature::{gauss_points, reference_measure, shapefun, QuadratureRule};
use crate::ElementType;

/// Lift a pointwise scalar function to the batched-field interface.
pub fn scalar_field<F>(f: F) -> impl Fn(&PageArray3) -> PageArray3 + Sync
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    move |x: &PageArray3| {
        let (dim, nip, np) = (x.rows(), x.cols(), x.pages());
        let mut out = PageArray3::zeros(1, nip, np);
        let mut p = vec![0.0; dim];
        for k in 0..np {
            for i in 0..nip {
                for c in 0..dim {
                    p[c] = x.get(c, i, k);
                }
                out.set(0, i, k, f(&p));
            }
        }
        out
    }
}

/// Lift a pointwise 3-component vector function to the batched interface.
pub fn vector_field3<F>(f: F) -> impl Fn(&PageArray3) -> PageArray3 + Sync
where
    F: Fn(&[f64]) -> [f64; 3] + Sync,
{
    move |x: &PageArray3| {
        let (dim, nip, np) = (x.rows(), x.cols(), x.pages());
        assert_eq!(dim, 3, "vector_field3 expects 3D coordinates");
        let mut out = PageArray3::zeros(3, nip, np);
        let mut p = [0.0; 3];
        for k in 0..np {
            for i in 0..nip {
                for c in 0..3 {
                    p[c] = x.get(c, i, k);
                }
                let v = f(&p);
                for c in 0..3 {
                    out.set(c, i, k, v[c]);
                }
            }
        }
        out
    }
}

/// Global coordinates of all quadrature points: page `k` column `i` is
/// `sum_j phi_j(xi_i) N_j^k`, i.e. `amsm(coords3d, phi)` with `phi` the
/// `d x nip` geometry shape values at the rule points.
pub fn map_quadrature_points(coords3d: &PageArray3, phi_geom: &Matrix) -> Result<PageArray3> {
    amsm(coords3d, phi_geom)
}

/// Gauss aggregation: combine per-point samples, rule weights, element sizes
/// and (for vector fields) per-page unit normals into one integral value.
///
/// `sizes` are true element measures, so the rule weights are normalized by
/// the reference measure before the weighted sum. The page reduction runs in
/// a fixed sequential order.
pub fn gi(
    fip: &PageArray3,
    rule: &QuadratureRule,
    sizes: &[f64],
    normals: Option<&[f64]>,
) -> Result<f64> {
    if fip.pages() != sizes.len() {
        return Err(Error::DimensionMismatch {
            op: "gi",
            axis: "pages",
            left: fip.pages(),
            right: sizes.len(),
        });
    }
    if fip.cols() != rule.nip() {
        return Err(Error::DimensionMismatch {
            op: "gi",
            axis: "integration points",
            left: fip.cols(),
            right: rule.nip(),
        });
    }
    let refmeas = reference_measure(rule.dim);
    let wbar: Vec<f64> = rule.weights.iter().map(|w| w / refmeas).collect();
    let comp = fip.rows();
    // per-page weighted average over quadrature points, one value per component
    let f_elems = amsv(fip, &wbar)?;
    match normals {
        None => {
            if comp != 1 {
                return Err(Error::NormalsRequired);
            }
            Ok(sizes
                .iter()
                .enumerate()
                .map(|(k, s)| s * f_elems.get(0, k))
                .sum())
        }
        Some(n) => {
            if n.len() != comp * sizes.len() {
                return Err(Error::DimensionMismatch {
                    op: "gi",
                    axis: "normals",
                    left: n.len(),
                    right: comp * sizes.len(),
                });
            }
            Ok(sizes
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let dot: f64 = (0..comp).map(|c| f_elems.get(c, k) * n[k * comp + c]).sum();
                    s * dot
                })
                .sum())
        }
    }
}

fn p1_geometry(mesh: &Mesh) -> (PageArray3, Vec<f64>) {
    let conn = mesh.vertex_elems();
    let (c3, _) = geometry::create_coords3d(&mesh.coords, mesh.dim, &conn, mesh.dim + 1)
        .expect("mesh indices validated on construction");
    let sizes = geometry::sizes_of_elements(&mesh.coords, mesh.dim, &conn)
        .expect("generators produce non-degenerate elements");
    (c3, sizes)
}

/// Integral of a scalar field over the mesh with a rule of exactness `gqo`.
pub fn volume_integral<F>(mesh: &Mesh, field: F, gqo: usize) -> Result<f64>
where
    F: Fn(&PageArray3) -> PageArray3,
{
    let rule = gauss_points(gqo, mesh.dim)?;
    let (c3, sizes) = p1_geometry(mesh);
    let phi = shapefun(&rule.points, ElementType::P1);
    let x_ip = map_quadrature_points(&c3, &phi)?;
    gi(&field(&x_ip), &rule, &sizes, None)
}

/// Mass, first and second moments, center of mass and the moment of inertia
/// around the x-axis for a density field.
#[derive(Debug, Clone)]
pub struct Moments {
    pub mass: f64,
    pub first: [f64; 3],
    pub second: [[f64; 3]; 3],
    pub center: [f64; 3],
    /// `I_1 = M_22 + M_33`.
    pub i1: f64,
}

/// Evaluate the density once at all quadrature points, then aggregate every
/// moment from the same samples.
pub fn moments<F>(mesh: &Mesh, rho: F, gqo: usize) -> Result<Moments>
where
    F: Fn(&PageArray3) -> PageArray3,
{
    let dim = mesh.dim;
    let rule = gauss_points(gqo, dim)?;
    let (c3, sizes) = p1_geometry(mesh);
    let phi = shapefun(&rule.points, ElementType::P1);
    let x_ip = map_quadrature_points(&c3, &phi)?;
    let rho_ip = rho(&x_ip);
    let scaled = |mul: &dyn Fn(usize, usize) -> f64| -> PageArray3 {
        let mut out = rho_ip.clone();
        for k in 0..out.pages() {
            for i in 0..out.cols() {
                let v = out.get(0, i, k) * mul(i, k);
                out.set(0, i, k, v);
            }
        }
        out
    };
    let mass = gi(&rho_ip, &rule, &sizes, None)?;
    let mut first = [0.0; 3];
    let mut second = [[0.0; 3]; 3];
    for a in 0..dim {
        first[a] = gi(&scaled(&|i, k| x_ip.get(a, i, k)), &rule, &sizes, None)?;
        for b in 0..dim {
            second[a][b] = gi(
                &scaled(&|i, k| x_ip.get(a, i, k) * x_ip.get(b, i, k)),
                &rule,
                &sizes,
                None,
            )?;
        }
    }
    if mass == 0.0 {
        return Err(Error::ZeroMass);
    }
    let center = [first[0] / mass, first[1] / mass, first[2] / mass];
    Ok(Moments {
        mass,
        first,
        second,
        center,
        i1: second[1][1] + second[2][2],
    })
}

/// Flux of a vector field through the domain boundary using a `dim - 1`
/// rule on the triangulated boundary faces.
pub fn surface_integral<F>(mesh: &Mesh, field: F, gqo: usize) -> Result<f64>
where
    F: Fn(&PageArray3) -> PageArray3,
{
    assert_eq!(mesh.dim, 3, "surface_integral expects a 3D mesh");
    let faces = extract_boundary(mesh)?;
    let normals = boundary_normals(mesh, &faces)?;
    let (c3, _) = face_coords3d(mesh, &faces);
    let rule = gauss_points(gqo, mesh.dim - 1)?;
    let phi = shapefun(&rule.points, ElementType::P1);
    let x_ip = map_quadrature_points(&c3, &phi)?;
    gi(&field(&x_ip), &rule, &faces.areas, Some(&normals))
}
