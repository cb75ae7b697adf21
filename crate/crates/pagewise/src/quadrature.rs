//! Reference-element machinery: Gauss rules on simplices, P1/P2 shape
//! functions with their reference derivatives, and the Jacobian/global
//! derivative computation (`phider`).

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mesh::ElementType;
use crate::page::{aminv, amsm, smamt, PageArray3};

/// Measure of the unit reference simplex (1, 1/2, 1/6 for dim 1, 2, 3).
pub fn reference_measure(dim: usize) -> f64 {
    match dim {
        1 => 1.0,
        2 => 0.5,
        3 => 1.0 / 6.0,
        _ => panic!("dim must be 1, 2 or 3"),
    }
}

/// Quadrature rule on the unit reference simplex. `points` is `dim x nip`,
/// weights sum to the reference measure and integrate all monomials of total
/// degree <= `order` exactly.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub dim: usize,
    pub order: usize,
    pub points: Matrix,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nip(&self) -> usize {
        self.weights.len()
    }
}

/// Classical symmetric simplex rules for exactness degrees 1..=4.
pub fn gauss_points(order: usize, dim: usize) -> Result<QuadratureRule> {
    let (pts, w): (Vec<Vec<f64>>, Vec<f64>) = match (dim, order) {
        (1, 1) => (vec![vec![0.5]], vec![1.0]),
        (1, 2) | (1, 3) => {
            let g = 0.5 / 3.0f64.sqrt();
            (vec![vec![0.5 - g], vec![0.5 + g]], vec![0.5, 0.5])
        }
        (1, 4) => {
            let g = 0.5 * (0.6f64).sqrt();
            (
                vec![vec![0.5 - g], vec![0.5], vec![0.5 + g]],
                vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
            )
        }
        (2, 1) => (vec![vec![1.0 / 3.0, 1.0 / 3.0]], vec![0.5]),
        (2, 2) => {
            let (a, b) = (1.0 / 6.0, 2.0 / 3.0);
            (
                vec![vec![a, a], vec![b, a], vec![a, b]],
                vec![1.0 / 6.0; 3],
            )
        }
        (2, 3) => (
            vec![
                vec![1.0 / 3.0, 1.0 / 3.0],
                vec![0.2, 0.2],
                vec![0.6, 0.2],
                vec![0.2, 0.6],
            ],
            vec![-27.0 / 96.0, 25.0 / 96.0, 25.0 / 96.0, 25.0 / 96.0],
        ),
        (2, 4) => {
            // two-orbit degree-4 rule; closed forms keep the exactness test
            // at machine precision
            let s10 = 10.0f64.sqrt();
            let r = (38.0 - 44.0 * (0.4f64).sqrt()).sqrt();
            let a1 = (8.0 - s10 + r) / 18.0;
            let a2 = (8.0 - s10 - r) / 18.0;
            let q = (213125.0 - 53320.0 * s10).sqrt();
            let w1 = (620.0 + q) / 3720.0 / 2.0;
            let w2 = (620.0 - q) / 3720.0 / 2.0;
            (
                vec![
                    vec![a1, a1],
                    vec![1.0 - 2.0 * a1, a1],
                    vec![a1, 1.0 - 2.0 * a1],
                    vec![a2, a2],
                    vec![1.0 - 2.0 * a2, a2],
                    vec![a2, 1.0 - 2.0 * a2],
                ],
                vec![w1, w1, w1, w2, w2, w2],
            )
        }
        (3, 1) => (vec![vec![0.25, 0.25, 0.25]], vec![1.0 / 6.0]),
        (3, 2) => {
            let a = (5.0 + 3.0 * 5.0f64.sqrt()) / 20.0;
            let b = (5.0 - 5.0f64.sqrt()) / 20.0;
            (
                vec![
                    vec![a, b, b],
                    vec![b, a, b],
                    vec![b, b, a],
                    vec![b, b, b],
                ],
                vec![1.0 / 24.0; 4],
            )
        }
        (3, 3) => {
            // conical product (collapsed Gauss-Jacobi 2x2x2): on the Duffy
            // cube x = u, y = v(1-u), z = w(1-u)(1-v) the per-axis weights
            // (1-u)^2, (1-v), 1 absorb the Jacobian, so three 2-point rules
            // give degree-3 exactness with all-positive weights
            let s10 = 10.0f64.sqrt();
            let s6 = 6.0f64.sqrt();
            let u = [(5.0 - s10) / 15.0, (5.0 + s10) / 15.0];
            let wu = [1.0 / 6.0 + s10 / 48.0, 1.0 / 6.0 - s10 / 48.0];
            let v = [(4.0 - s6) / 10.0, (4.0 + s6) / 10.0];
            let wv = [0.25 + s6 / 36.0, 0.25 - s6 / 36.0];
            let g = 0.5 / 3.0f64.sqrt();
            let wpt = [0.5 - g, 0.5 + g];
            let mut pts = Vec::with_capacity(8);
            let mut w = Vec::with_capacity(8);
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        pts.push(vec![
                            u[a],
                            v[b] * (1.0 - u[a]),
                            wpt[c] * (1.0 - u[a]) * (1.0 - v[b]),
                        ]);
                        w.push(wu[a] * wv[b] * 0.5);
                    }
                }
            }
            (pts, w)
        }
        (3, 4) => {
            // Keast 11-point rule
            let a = 1.0 / 14.0;
            let b = 11.0 / 14.0;
            let g = (5.0f64 / 14.0).sqrt();
            let c = 0.25 * (1.0 + g);
            let d = 0.25 * (1.0 - g);
            let w0 = -74.0 / 5625.0;
            let w1 = 343.0 / 45000.0;
            let w2 = 56.0 / 2250.0;
            let mut pts = vec![
                vec![0.25, 0.25, 0.25],
                vec![a, a, a],
                vec![b, a, a],
                vec![a, b, a],
                vec![a, a, b],
            ];
            // barycentric (c,c,d,d) permutations: choose the two c slots
            for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
                let mut lam = [d; 4];
                lam[i] = c;
                lam[j] = c;
                pts.push(vec![lam[1], lam[2], lam[3]]);
            }
            let mut w = vec![w0, w1, w1, w1, w1];
            w.extend_from_slice(&[w2; 6]);
            (pts, w)
        }
        _ => return Err(Error::UnsupportedRule { order, dim }),
    };
    let nip = w.len();
    let mut points = Matrix::zeros(dim, nip);
    for (i, p) in pts.iter().enumerate() {
        points.col_mut(i).copy_from_slice(p);
    }
    Ok(QuadratureRule {
        dim,
        order,
        points,
        weights: w,
    })
}

/// Reference node coordinates, `dim x nlb`: vertices (origin first) then edge
/// midpoints in the canonical edge order shared with the mesh module.
pub fn reference_nodes(dim: usize, etype: ElementType) -> Matrix {
    let mut verts: Vec<Vec<f64>> = vec![vec![0.0; dim]];
    for i in 0..dim {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        verts.push(v);
    }
    let mut nodes = verts.clone();
    if etype == ElementType::P2 {
        let edges: &[(usize, usize)] = if dim == 2 {
            &[(0, 1), (1, 2), (0, 2)]
        } else {
            &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        };
        for &(a, b) in edges {
            let mid: Vec<f64> = (0..dim)
                .map(|c| 0.5 * (verts[a][c] + verts[b][c]))
                .collect();
            nodes.push(mid);
        }
    }
    let mut m = Matrix::zeros(dim, nodes.len());
    for (j, n) in nodes.iter().enumerate() {
        m.col_mut(j).copy_from_slice(n);
    }
    m
}

fn barycentric(dim: usize, p: &[f64]) -> Vec<f64> {
    let mut lam = vec![1.0 - p.iter().sum::<f64>()];
    lam.extend_from_slice(p);
    let _ = dim;
    lam
}

const EDGES_2D: [(usize, usize); 3] = [(0, 1), (1, 2), (0, 2)];
const EDGES_3D: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

fn edges(dim: usize) -> &'static [(usize, usize)] {
    if dim == 2 {
        &EDGES_2D
    } else {
        &EDGES_3D
    }
}

/// Shape-function values at reference points: `nlb x nip`, column per point.
/// The expressions evaluate to exact 0/1 at the reference nodes.
pub fn shapefun(points: &Matrix, etype: ElementType) -> Matrix {
    let dim = points.rows();
    let nlb = etype.nlb(dim);
    let nip = points.cols();
    let mut out = Matrix::zeros(nlb, nip);
    for q in 0..nip {
        let lam = barycentric(dim, points.col(q));
        match etype {
            ElementType::P1 => {
                for (i, &l) in lam.iter().enumerate() {
                    out.set(i, q, l);
                }
            }
            ElementType::P2 => {
                for (i, &l) in lam.iter().enumerate() {
                    out.set(i, q, l * (2.0 * l - 1.0));
                }
                for (e, &(a, b)) in edges(dim).iter().enumerate() {
                    out.set(dim + 1 + e, q, 4.0 * lam[a] * lam[b]);
                }
            }
        }
    }
    out
}

/// Reference derivatives at reference points: `dim x nlb x nip`, one page per
/// point. P1 derivatives are constant in space.
pub fn shapeder(points: &Matrix, etype: ElementType) -> PageArray3 {
    let dim = points.rows();
    let nlb = etype.nlb(dim);
    let nip = points.cols();
    // gradient of barycentric coordinate i
    let dlam = |i: usize, c: usize| -> f64 {
        if i == 0 {
            -1.0
        } else if i - 1 == c {
            1.0
        } else {
            0.0
        }
    };
    let mut out = PageArray3::zeros(dim, nlb, nip);
    for q in 0..nip {
        let lam = barycentric(dim, points.col(q));
        for c in 0..dim {
            match etype {
                ElementType::P1 => {
                    for i in 0..nlb {
                        out.set(c, i, q, dlam(i, c));
                    }
                }
                ElementType::P2 => {
                    for i in 0..=dim {
                        out.set(c, i, q, (4.0 * lam[i] - 1.0) * dlam(i, c));
                    }
                    for (e, &(a, b)) in edges(dim).iter().enumerate() {
                        let v = 4.0 * (lam[b] * dlam(a, c) + lam[a] * dlam(b, c));
                        out.set(c, dim + 1 + e, q, v);
                    }
                }
            }
        }
    }
    out
}

/// Jacobians and global shape-function derivatives at every integration point
/// of every element, indexed `[ip]` then per-element pages.
#[derive(Debug, Clone)]
pub struct GlobalDerivs {
    /// Per integration point: `dim x nlb x ne` global derivatives.
    pub dphi: Vec<PageArray3>,
    /// Per integration point: `|det J|` per element.
    pub detj: Vec<Vec<f64>>,
    /// Per integration point: `dim x dim x ne` Jacobians.
    pub jac: Vec<PageArray3>,
}

/// For each integration point `i` and element `k`: `J = dshape_i * coords_k'`,
/// `dphi = J^-1 * dshape_i`, `detj = |det J|`. The loop runs over the (few)
/// integration points; the per-element work is page-parallel.
pub fn phider(
    coords3d: &PageArray3,
    points: &Matrix,
    etype: ElementType,
) -> Result<GlobalDerivs> {
    let dim = coords3d.rows();
    let nlb = coords3d.cols();
    debug_assert_eq!(nlb, etype.nlb(dim), "coords3d columns must match etype");
    let nip = points.cols();
    let dshape = shapeder(points, etype);
    let mut dphi = Vec::with_capacity(nip);
    let mut detj = Vec::with_capacity(nip);
    let mut jac = Vec::with_capacity(nip);
    for i in 0..nip {
        let dshape_i = dshape.page_matrix(i);
        let tjac = smamt(&dshape_i, coords3d)?;
        let (tjacinv, tjacdet) = aminv(&tjac).map_err(|e| match e {
            Error::SingularPage { page, det } => Error::DegenerateElement { elem: page, det },
            other => other,
        })?;
        dphi.push(amsm(&tjacinv, &dshape_i)?);
        detj.push(tjacdet.data().iter().map(|d| d.abs()).collect());
        jac.push(tjac);
    }
    Ok(GlobalDerivs { dphi, detj, jac })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh_coords3d;
    use crate::mesh::Mesh;

    /// Exact integral of a monomial over the unit reference simplex:
    /// prod(alpha_i!) / (|alpha| + dim)!.
    fn simplex_monomial_integral(alpha: &[usize]) -> f64 {
        fn fact(n: usize) -> f64 {
            (1..=n).map(|i| i as f64).product()
        }
        let total: usize = alpha.iter().sum();
        alpha.iter().map(|&a| fact(a)).product::<f64>() / fact(total + alpha.len())
    }

    fn monomials(dim: usize, max_deg: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        match dim {
            1 => {
                for a in 0..=max_deg {
                    out.push(vec![a]);
                }
            }
            2 => {
                for a in 0..=max_deg {
                    for b in 0..=max_deg - a {
                        out.push(vec![a, b]);
                    }
                }
            }
            3 => {
                for a in 0..=max_deg {
                    for b in 0..=max_deg - a {
                        for c in 0..=max_deg - a - b {
                            out.push(vec![a, b, c]);
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        out
    }

    #[test]
    fn all_rules_integrate_their_degree() {
        for dim in 1..=3 {
            for order in 1..=4 {
                let rule = gauss_points(order, dim).unwrap();
                let wsum: f64 = rule.weights.iter().sum();
                assert!(
                    (wsum - reference_measure(dim)).abs() < 1e-14,
                    "dim {dim} order {order}: weight sum {wsum}"
                );
                for alpha in monomials(dim, order) {
                    let mut quad = 0.0;
                    for q in 0..rule.nip() {
                        let p = rule.points.col(q);
                        let val: f64 = alpha
                            .iter()
                            .enumerate()
                            .map(|(c, &a)| p[c].powi(a as i32))
                            .product();
                        quad += rule.weights[q] * val;
                    }
                    let exact = simplex_monomial_integral(&alpha);
                    assert!(
                        (quad - exact).abs() <= 1e-13 * exact.abs().max(1.0),
                        "dim {dim} order {order} monomial {alpha:?}: {quad} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn named_rule_values() {
        let r = gauss_points(1, 2).unwrap();
        assert_eq!(r.nip(), 1);
        assert_eq!(r.points.col(0), &[1.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(r.weights[0], 0.5);

        // order 2 in 3D reproduces the degree-2 moment 1/60
        let r = gauss_points(2, 3).unwrap();
        let quad: f64 = (0..r.nip())
            .map(|q| r.weights[q] * r.points.col(q)[0].powi(2))
            .sum();
        assert!((quad - 1.0 / 60.0).abs() < 1e-14);

        // order 4 in 2D integrates xi1^2 xi2^2 = 1/180 exactly
        let r = gauss_points(4, 2).unwrap();
        let quad: f64 = (0..r.nip())
            .map(|q| {
                let p = r.points.col(q);
                r.weights[q] * p[0] * p[0] * p[1] * p[1]
            })
            .sum();
        assert!((quad - 1.0 / 180.0).abs() < 1e-15);

        assert!(gauss_points(5, 2).is_err());
        assert!(gauss_points(2, 4).is_err());
    }

    #[test]
    fn kronecker_property_is_exact() {
        for dim in [2usize, 3] {
            for etype in [ElementType::P1, ElementType::P2] {
                let nodes = reference_nodes(dim, etype);
                let vals = shapefun(&nodes, etype);
                let nlb = etype.nlb(dim);
                for i in 0..nlb {
                    for j in 0..nlb {
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert_eq!(vals.get(i, j), want, "dim {dim} {etype:?} ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_and_derivative_sums() {
        let rule = gauss_points(4, 3).unwrap();
        for etype in [ElementType::P1, ElementType::P2] {
            let vals = shapefun(&rule.points, etype);
            for q in 0..rule.nip() {
                let s: f64 = (0..vals.rows()).map(|i| vals.get(i, q)).sum();
                assert!((s - 1.0).abs() < 1e-14);
            }
            let ders = shapeder(&rule.points, etype);
            for q in 0..rule.nip() {
                for c in 0..3 {
                    let s: f64 = (0..ders.cols()).map(|i| ders.get(c, i, q)).sum();
                    assert!(s.abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn p1_gradients_are_the_constant_matrix() {
        let pts = Matrix::from_rows(&[&[0.3], &[0.2]]); // one interior point
        let d = shapeder(&pts, ElementType::P1);
        let expected = [[-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]];
        for c in 0..2 {
            for i in 0..3 {
                assert_eq!(d.get(c, i, 0), expected[c][i]);
            }
        }
    }

    #[test]
    fn p2_gradients_match_central_differences() {
        let h = 1e-6;
        for dim in [2usize, 3] {
            let interior = vec![0.21, 0.13, 0.33][..dim].to_vec();
            let mut pm = Matrix::zeros(dim, 1);
            pm.col_mut(0).copy_from_slice(&interior);
            let ders = shapeder(&pm, ElementType::P2);
            for c in 0..dim {
                let mut plus = interior.clone();
                plus[c] += h;
                let mut minus = interior.clone();
                minus[c] -= h;
                let mut mp = Matrix::zeros(dim, 1);
                mp.col_mut(0).copy_from_slice(&plus);
                let mut mm = Matrix::zeros(dim, 1);
                mm.col_mut(0).copy_from_slice(&minus);
                let vp = shapefun(&mp, ElementType::P2);
                let vm = shapefun(&mm, ElementType::P2);
                for i in 0..ElementType::P2.nlb(dim) {
                    let fd = (vp.get(i, 0) - vm.get(i, 0)) / (2.0 * h);
                    assert!(
                        (fd - ders.get(c, i, 0)).abs() < 1e-6,
                        "dim {dim} comp {c} fn {i}"
                    );
                }
            }
        }
    }

    #[test]
    fn phider_identity_on_reference_element() {
        let mesh = Mesh::new(
            3,
            vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            vec![0, 1, 2, 3],
            ElementType::P1,
        )
        .unwrap();
        // reference node order (origin, e1, e2, e3): the element map is the
        // identity, so J = I, dphi = dshape, detj = 1
        let (c3, _) = mesh_coords3d(&mesh);
        let rule = gauss_points(2, 3).unwrap();
        let g = phider(&c3, &rule.points, ElementType::P1).unwrap();
        let dshape = shapeder(&rule.points, ElementType::P1);
        for i in 0..rule.nip() {
            assert!((g.detj[i][0] - 1.0).abs() < 1e-14);
            for c in 0..3 {
                for j in 0..4 {
                    assert!((g.dphi[i].get(c, j, 0) - dshape.get(c, j, i)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn phider_affine_scaling() {
        let s = 2.5;
        let mesh = Mesh::new(
            3,
            vec![
                0.0, 0.0, 0.0, s, 0.0, 0.0, 0.0, s, 0.0, 0.0, 0.0, s,
            ],
            vec![0, 1, 2, 3],
            ElementType::P1,
        )
        .unwrap();
        let (c3, _) = mesh_coords3d(&mesh);
        let rule = gauss_points(1, 3).unwrap();
        let g = phider(&c3, &rule.points, ElementType::P1).unwrap();
        assert!((g.detj[0][0] - s.powi(3)).abs() < 1e-12);
        let dshape = shapeder(&rule.points, ElementType::P1);
        for c in 0..3 {
            for j in 0..4 {
                assert!((g.dphi[0].get(c, j, 0) - dshape.get(c, j, 0) / s).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn phider_paper_tet_jacobian() {
        let mesh = Mesh::new(
            3,
            vec![
                1.75, 0.75, -0.25, 1.75, -0.5, 1.0, 2.5, 0.75, 1.0, 1.0, 0.75, 1.0,
            ],
            vec![0, 1, 2, 3],
            ElementType::P1,
        )
        .unwrap();
        let (c3, _) = mesh_coords3d(&mesh);
        let rule = gauss_points(2, 3).unwrap();
        let g = phider(&c3, &rule.points, ElementType::P1).unwrap();
        for i in 0..rule.nip() {
            assert!((g.detj[i][0] - 75.0 / 32.0).abs() < 1e-13, "{}", g.detj[i][0]);
        }
    }

    #[test]
    fn phider_detj_constant_for_p2_on_straight_elements() {
        let mesh = crate::mesh::augment_p2(&crate::mesh::mesh_lshape(0));
        let (c3, _) = mesh_coords3d(&mesh);
        let rule = gauss_points(4, 2).unwrap();
        let g = phider(&c3, &rule.points, ElementType::P2).unwrap();
        for k in 0..mesh.num_elems() {
            for i in 1..rule.nip() {
                assert!((g.detj[i][k] - g.detj[0][k]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn phider_gradient_sums_vanish() {
        let mesh = crate::mesh::mesh_cube(1);
        let (c3, _) = mesh_coords3d(&mesh);
        let rule = gauss_points(2, 3).unwrap();
        let g = phider(&c3, &rule.points, ElementType::P1).unwrap();
        for i in 0..rule.nip() {
            for k in 0..mesh.num_elems() {
                for c in 0..3 {
                    let s: f64 = (0..4).map(|j| g.dphi[i].get(c, j, k)).sum();
                    assert!(s.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn isoparametric_reproduction_of_linear_fields() {
        // interpolate a global linear function at element nodes and check
        // that dphi recovers its exact constant gradient
        let grad = [0.7, -1.3, 0.4];
        let lin = |p: &[f64]| 2.0 + grad[0] * p[0] + grad[1] * p[1] + grad[2] * p[2];
        let mesh = crate::mesh::augment_p2(&crate::mesh::mesh_cube(1));
        let (c3, _) = mesh_coords3d(&mesh);
        let rule = gauss_points(2, 3).unwrap();
        let g = phider(&c3, &rule.points, ElementType::P2).unwrap();
        for k in 0..mesh.num_elems() {
            let e = mesh.elem(k);
            let u: Vec<f64> = e.iter().map(|&n| lin(mesh.node(n))).collect();
            for i in 0..rule.nip() {
                for c in 0..3 {
                    let d: f64 = (0..e.len()).map(|j| g.dphi[i].get(c, j, k) * u[j]).sum();
                    assert!((d - grad[c]).abs() < 1e-11, "elem {k} ip {i} comp {c}: {d}");
                }
            }
        }
    }

    #[test]
    fn phider_reports_degenerate_elements() {
        let mesh = Mesh::new(
            3,
            vec![
                0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.5, 0.5, 0.0,
            ],
            vec![0, 1, 2, 3],
            ElementType::P1,
        )
        .unwrap();
        let (c3, _) = mesh_coords3d(&mesh);
        let rule = gauss_points(1, 3).unwrap();
        let err = phider(&c3, &rule.points, ElementType::P1);
        assert!(matches!(err, Err(Error::DegenerateElement { elem: 0, .. })));
    }
}
