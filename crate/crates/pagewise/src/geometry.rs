//! Per-element geometry built on the page kernels: stacked coordinates,
//! last-node edge vectors, signed measures, and outward normals.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mesh::{BoundaryFaces, Mesh};
use crate::page::{amdet, aminv, amsm, amt, PageArray3, PageScalars};

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Stack node coordinates per element: `coords3d` is `dim x d x ne` with page
/// `k` column `j` equal to the coordinates of node `conn[k][j]`, and
/// `vectors3d` is `dim x (d-1) x ne` with column `j` pointing from the last
/// local node to local node `j`.
pub fn create_coords3d(
    coords: &[f64],
    dim: usize,
    conn: &[usize],
    d: usize,
) -> Result<(PageArray3, PageArray3)> {
    let nn = coords.len() / dim;
    let ne = conn.len() / d;
    let mut c3 = PageArray3::zeros(dim, d, ne);
    for k in 0..ne {
        let page = c3.page_mut(k);
        for j in 0..d {
            let idx = conn[k * d + j];
            if idx >= nn {
                return Err(Error::IndexOutOfRange { index: idx, nn });
            }
            page[j * dim..(j + 1) * dim].copy_from_slice(&coords[idx * dim..(idx + 1) * dim]);
        }
    }
    let mut v3 = PageArray3::zeros(dim, d - 1, ne);
    for k in 0..ne {
        let src = c3.page(k).to_vec();
        let page = v3.page_mut(k);
        let last = &src[(d - 1) * dim..d * dim];
        for j in 0..d - 1 {
            for i in 0..dim {
                page[j * dim + i] = src[j * dim + i] - last[i];
            }
        }
    }
    Ok((c3, v3))
}

/// Element stacks for a whole mesh.
pub fn mesh_coords3d(mesh: &Mesh) -> (PageArray3, PageArray3) {
    create_coords3d(&mesh.coords, mesh.dim, &mesh.elems, mesh.nodes_per_elem())
        .expect("mesh indices validated on construction")
}

/// Stacks for the boundary facets (`dim x dim x |F_b|` in 3D).
pub fn face_coords3d(mesh: &Mesh, faces: &BoundaryFaces) -> (PageArray3, PageArray3) {
    create_coords3d(&mesh.coords, mesh.dim, &faces.faces, faces.dim)
        .expect("face indices come from the mesh")
}

/// Signed per-element measures `det(vectors3d) / dim!` and the total
/// unsigned measure (1-norm of the signed vector, accumulated sequentially).
pub fn element_volumes(vectors3d: &PageArray3, dim: usize) -> Result<(PageScalars, f64)> {
    let dets = amdet(vectors3d)?;
    let f = factorial(dim);
    let signed: Vec<f64> = dets.data().iter().map(|d| d / f).collect();
    let total = signed.iter().map(|v| v.abs()).sum();
    Ok((PageScalars::from_vec(signed), total))
}

/// Outward normals of the reference simplex, one column per face; column `j`
/// is the face opposite reference vertex `j+1` in the paper's ordering.
/// Columns are not normalized.
pub fn reference_normals(dim: usize) -> Matrix {
    match dim {
        2 => Matrix::from_rows(&[&[-1.0, 0.0, 1.0], &[0.0, -1.0, 1.0]]),
        3 => Matrix::from_rows(&[
            &[-1.0, 0.0, 0.0, 1.0],
            &[0.0, -1.0, 0.0, 1.0],
            &[0.0, 0.0, -1.0, 1.0],
        ]),
        _ => panic!("dim must be 2 or 3"),
    }
}

/// Unnormalized outward normals of every element: column `j` of page `k` is
/// normal to the face opposite local node `j`. Computed as
/// `(vectors3d_k^-1)' * normalsRef` page-wise.
pub fn element_normals(vectors3d: &PageArray3) -> Result<PageArray3> {
    let dim = vectors3d.rows();
    let (inv, _) = aminv(vectors3d)?;
    amsm(&amt(&inv), &reference_normals(dim))
}

/// Unit outward normals for boundary facets, `|F| x dim` row-major. Outward
/// means positive dot product with (face centroid - owner centroid).
pub fn boundary_normals(mesh: &Mesh, faces: &BoundaryFaces) -> Result<Vec<f64>> {
    let dim = mesh.dim;
    let mut out = vec![0.0; faces.len() * dim];
    for f in 0..faces.len() {
        let verts = faces.face(f);
        let mut n = vec![0.0; dim];
        if dim == 2 {
            let (a, b) = (mesh.node(verts[0]), mesh.node(verts[1]));
            n[0] = b[1] - a[1];
            n[1] = a[0] - b[0];
        } else {
            let (a, b, c) = (mesh.node(verts[0]), mesh.node(verts[1]), mesh.node(verts[2]));
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            n[0] = u[1] * v[2] - u[2] * v[1];
            n[1] = u[2] * v[0] - u[0] * v[2];
            n[2] = u[0] * v[1] - u[1] * v[0];
        }
        let len = n.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len <= 0.0 || !len.is_finite() {
            return Err(Error::DegenerateFace { face: f });
        }
        // centroid test against the owning element
        let owner = faces.elem_of_face[f];
        let e = mesh.elem(owner);
        let nv = dim + 1;
        let mut ec = vec![0.0; dim];
        for &vi in &e[..nv] {
            for c in 0..dim {
                ec[c] += mesh.node(vi)[c] / nv as f64;
            }
        }
        let mut fc = vec![0.0; dim];
        for &vi in verts {
            for c in 0..dim {
                fc[c] += mesh.node(vi)[c] / dim as f64;
            }
        }
        let dot: f64 = (0..dim).map(|c| n[c] * (fc[c] - ec[c])).sum();
        let sign = if dot >= 0.0 { 1.0 } else { -1.0 };
        for c in 0..dim {
            out[f * dim + c] = sign * n[c] / len;
        }
    }
    Ok(out)
}

/// Positive per-element measures from raw coordinate/connectivity slices
/// (P1 vertex columns). `dim! * size` equals `|det|` of the affine map.
pub fn sizes_of_elements(coords: &[f64], dim: usize, conn_p1: &[usize]) -> Result<Vec<f64>> {
    let (_, v3) = create_coords3d(coords, dim, conn_p1, dim + 1)?;
    let (signed, _) = element_volumes(&v3, dim)?;
    let mut out = Vec::with_capacity(signed.pages());
    for (k, &s) in signed.data().iter().enumerate() {
        if s == 0.0 {
            return Err(Error::ZeroMeasureElement { elem: k });
        }
        out.push(s.abs());
    }
    Ok(out)
}

/// `sizes_of_elements` on a mesh's P1 vertex columns.
pub fn mesh_sizes(mesh: &Mesh) -> Result<Vec<f64>> {
    sizes_of_elements(&mesh.coords, mesh.dim, &mesh.vertex_elems())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{extract_boundary, mesh_cube, mesh_sphere, ElementType};

    /// The worked single-tetrahedron example used across the crate's tests.
    fn paper_tet() -> Mesh {
        Mesh::new(
            3,
            vec![
                7.0 / 4.0,
                3.0 / 4.0,
                -1.0 / 4.0,
                7.0 / 4.0,
                -2.0 / 4.0,
                4.0 / 4.0,
                10.0 / 4.0,
                3.0 / 4.0,
                4.0 / 4.0,
                4.0 / 4.0,
                3.0 / 4.0,
                4.0 / 4.0,
            ],
            vec![0, 1, 2, 3],
            ElementType::P1,
        )
        .unwrap()
    }

    fn reference_tet() -> Mesh {
        Mesh::new(
            3,
            vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            vec![0, 1, 2, 3],
            ElementType::P1,
        )
        .unwrap()
    }

    #[test]
    fn paper_tet_vectors_are_exact() {
        let (c3, v3) = mesh_coords3d(&paper_tet());
        // coords3d column j equals the j-th node row
        assert_eq!(c3.get(0, 2, 0), 10.0 / 4.0);
        assert_eq!(c3.get(2, 0, 0), -1.0 / 4.0);
        let expected = [
            [3.0 / 4.0, 3.0 / 4.0, 6.0 / 4.0],
            [0.0, -5.0 / 4.0, 0.0],
            [-5.0 / 4.0, 0.0, 0.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(v3.get(i, j, 0), expected[i][j], "({i},{j})");
            }
        }
    }

    #[test]
    fn reference_tet_vectors_by_subtraction() {
        let (_, v3) = mesh_coords3d(&reference_tet());
        let expected = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -1.0, -1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(v3.get(i, j, 0), expected[i][j]);
            }
        }
    }

    #[test]
    fn paper_tet_signed_volume() {
        let (_, v3) = mesh_coords3d(&paper_tet());
        let (signed, total) = element_volumes(&v3, 3).unwrap();
        assert!((signed.get(0) - (-25.0 / 64.0)).abs() < 1e-15);
        assert!((total - 25.0 / 64.0).abs() < 1e-15);

        let (_, v3) = mesh_coords3d(&reference_tet());
        let (signed, _) = element_volumes(&v3, 3).unwrap();
        assert!((signed.get(0).abs() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn reference_normal_columns_point_outward() {
        for dim in [2usize, 3] {
            let nr = reference_normals(dim);
            assert_eq!((nr.rows(), nr.cols()), (dim, dim + 1));
            // reference simplex vertices: origin + unit vectors
            let mut verts = vec![vec![0.0; dim]];
            for i in 0..dim {
                let mut v = vec![0.0; dim];
                v[i] = 1.0;
                verts.push(v);
            }
            let elem_centroid: Vec<f64> = (0..dim)
                .map(|c| verts.iter().map(|v| v[c]).sum::<f64>() / (dim + 1) as f64)
                .collect();
            // column j is the normal of the face opposite vertex j+1 in the
            // paper's ordering (-e_j for j < dim, then the slanted face)
            for j in 0..=dim {
                let opposite = (j + 1) % (dim + 1);
                let face: Vec<&Vec<f64>> = (0..=dim)
                    .filter(|&v| v != opposite)
                    .map(|v| &verts[v])
                    .collect();
                let face_centroid: Vec<f64> = (0..dim)
                    .map(|c| face.iter().map(|v| v[c]).sum::<f64>() / dim as f64)
                    .collect();
                let dot: f64 = (0..dim)
                    .map(|c| nr.get(c, j) * (face_centroid[c] - elem_centroid[c]))
                    .sum();
                assert!(dot > 0.0, "dim {dim} column {j} not outward");
            }
        }
    }

    #[test]
    fn paper_tet_normals_match_displayed_matrix() {
        let (_, v3) = mesh_coords3d(&paper_tet());
        let n = element_normals(&v3).unwrap();
        let expected = [
            [0.0, 0.0, -2.0 / 3.0, 2.0 / 3.0],
            [0.0, 4.0 / 5.0, -2.0 / 5.0, -2.0 / 5.0],
            [4.0 / 5.0, 0.0, -2.0 / 5.0, -2.0 / 5.0],
        ];
        for i in 0..3 {
            for j in 0..4 {
                assert!(
                    (n.get(i, j, 0) - expected[i][j]).abs() < 1e-12,
                    "entry ({i},{j}): {} vs {}",
                    n.get(i, j, 0),
                    expected[i][j]
                );
            }
        }
    }

    #[test]
    fn element_normals_perpendicular_to_faces() {
        let mesh = mesh_sphere(1, 1.0);
        let (_, v3) = mesh_coords3d(&mesh);
        let n = element_normals(&v3).unwrap();
        for k in 0..mesh.num_elems() {
            let e = mesh.elem(k);
            for j in 0..4 {
                // face opposite local node j
                let face: Vec<usize> = (0..4).filter(|&v| v != j).map(|v| e[v]).collect();
                let a = mesh.node(face[0]);
                for &other in &face[1..] {
                    let b = mesh.node(other);
                    let dot: f64 = (0..3).map(|c| n.get(c, j, k) * (b[c] - a[c])).sum();
                    assert!(dot.abs() < 1e-10, "elem {k} face {j}: {dot}");
                }
            }
        }
    }

    #[test]
    fn minkowski_identity_per_element() {
        // unit outward normals scaled by face areas sum to zero
        let mesh = mesh_sphere(1, 1.0);
        let (_, v3) = mesh_coords3d(&mesh);
        let n = element_normals(&v3).unwrap();
        for k in 0..mesh.num_elems() {
            let e = mesh.elem(k);
            let mut sum = [0.0f64; 3];
            for j in 0..4 {
                let face: Vec<usize> = (0..4).filter(|&v| v != j).map(|v| e[v]).collect();
                let (a, b, c) = (mesh.node(face[0]), mesh.node(face[1]), mesh.node(face[2]));
                let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
                let cross = [
                    u[1] * v[2] - u[2] * v[1],
                    u[2] * v[0] - u[0] * v[2],
                    u[0] * v[1] - u[1] * v[0],
                ];
                let area = 0.5 * cross.iter().map(|x| x * x).sum::<f64>().sqrt();
                let len = (0..3).map(|c| n.get(c, j, k).powi(2)).sum::<f64>().sqrt();
                for c in 0..3 {
                    sum[c] += area * n.get(c, j, k) / len;
                }
            }
            for c in 0..3 {
                assert!(sum[c].abs() < 1e-10, "elem {k}: {sum:?}");
            }
        }
    }

    #[test]
    fn cube_boundary_normals_axis_aligned() {
        let mesh = mesh_cube(1);
        let b = extract_boundary(&mesh).unwrap();
        let normals = boundary_normals(&mesh, &b).unwrap();
        for f in 0..b.len() {
            let verts = b.face(f);
            // all three z-coordinates zero -> face on the z = 0 plane
            if verts.iter().all(|&v| mesh.node(v)[2] == 0.0) {
                let n = &normals[f * 3..(f + 1) * 3];
                assert!((n[0], n[1], n[2]) == (0.0, 0.0, -1.0), "{n:?}");
            }
        }
        // closed-surface identity: integral of n dS vanishes
        let mut sum = [0.0f64; 3];
        let mut area = 0.0;
        for f in 0..b.len() {
            for c in 0..3 {
                sum[c] += b.areas[f] * normals[f * 3 + c];
            }
            area += b.areas[f];
        }
        for c in 0..3 {
            assert!(sum[c].abs() < 1e-10 * area);
        }
    }

    #[test]
    fn sphere_boundary_normals_nearly_radial() {
        let mesh = mesh_sphere(3, 1.0);
        let b = extract_boundary(&mesh).unwrap();
        let normals = boundary_normals(&mesh, &b).unwrap();
        let cos15 = (15.0f64).to_radians().cos();
        for f in 0..b.len() {
            let verts = b.face(f);
            let mut fc = [0.0f64; 3];
            for &v in verts {
                for c in 0..3 {
                    fc[c] += mesh.node(v)[c] / 3.0;
                }
            }
            let len = fc.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dot: f64 = (0..3).map(|c| normals[f * 3 + c] * fc[c] / len).sum();
            assert!(dot > cos15, "face {f}: radial alignment {dot}");
        }
    }

    #[test]
    fn sizes_match_volumes() {
        let m = Mesh::new(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            vec![0, 1, 2],
            ElementType::P1,
        )
        .unwrap();
        let s = mesh_sizes(&m).unwrap();
        assert!((s[0] - 0.5).abs() < 1e-15);

        let s = mesh_sizes(&paper_tet()).unwrap();
        assert!((s[0] - 25.0 / 64.0).abs() < 1e-15);

        let mesh = mesh_sphere(1, 1.0);
        let sizes = mesh_sizes(&mesh).unwrap();
        let (_, v3) = mesh_coords3d(&mesh);
        let (_, total) = element_volumes(&v3, 3).unwrap();
        let sum: f64 = sizes.iter().sum();
        assert!(((sum - total) / total).abs() < 1e-12);
    }

    #[test]
    fn sphere_volume_level1_matches_table() {
        let mesh = mesh_sphere(1, 1.0);
        let (_, v3) = mesh_coords3d(&mesh);
        let (_, total) = element_volumes(&v3, 3).unwrap();
        assert!((total - 3.932819).abs() < 5e-6, "{total}");
    }

    #[test]
    fn cube_mesh_total_volume_is_one() {
        let mesh = mesh_cube(2);
        let (_, v3) = mesh_coords3d(&mesh);
        let (_, total) = element_volumes(&v3, 3).unwrap();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_index_is_reported() {
        let coords = vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let err = create_coords3d(&coords, 2, &[0, 1, 5], 3);
        assert!(matches!(err, Err(Error::IndexOutOfRange { index: 5, .. })));
    }
}
