//! Property tests for the page kernels: oracle equivalence against naive
//! per-page loops, algebraic identities, and the normal-transformation law.

use proptest::prelude::*;

use pagewise::page::{
    amdet, aminv, amsm, amsv, amt, amtam, astam, avtam, avtamav, avtav, smamt, svamt,
};
use pagewise::{Matrix, PageArray3, PageScalars, PageVector};

const REL_TOL: f64 = 1e-13;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Naive reference implementations, index loops only.
mod oracle {
    use pagewise::{Matrix, PageArray3, PageVector};

    pub fn amtam(x: &PageArray3, a: &PageArray3) -> PageArray3 {
        let mut out = PageArray3::zeros(x.cols(), a.cols(), x.pages());
        for k in 0..x.pages() {
            for i in 0..x.cols() {
                for j in 0..a.cols() {
                    let mut s = 0.0;
                    for l in 0..x.rows() {
                        s += x.get(l, i, k) * a.get(l, j, k);
                    }
                    out.set(i, j, k, s);
                }
            }
        }
        out
    }

    pub fn amsm(a: &PageArray3, m: &Matrix) -> PageArray3 {
        let mut out = PageArray3::zeros(a.rows(), m.cols(), a.pages());
        for k in 0..a.pages() {
            for i in 0..a.rows() {
                for j in 0..m.cols() {
                    let mut s = 0.0;
                    for l in 0..a.cols() {
                        s += a.get(i, l, k) * m.get(l, j);
                    }
                    out.set(i, j, k, s);
                }
            }
        }
        out
    }

    pub fn smamt(m: &Matrix, a: &PageArray3) -> PageArray3 {
        let mut out = PageArray3::zeros(m.rows(), a.rows(), a.pages());
        for k in 0..a.pages() {
            for i in 0..m.rows() {
                for j in 0..a.rows() {
                    let mut s = 0.0;
                    for l in 0..m.cols() {
                        s += m.get(i, l) * a.get(j, l, k);
                    }
                    out.set(i, j, k, s);
                }
            }
        }
        out
    }

    pub fn det(a: &PageArray3, k: usize) -> f64 {
        // Laplace expansion along the first row
        fn expand(a: &PageArray3, k: usize, rows: &[usize], cols: &[usize]) -> f64 {
            if rows.len() == 1 {
                return a.get(rows[0], cols[0], k);
            }
            let mut s = 0.0;
            for (idx, &c) in cols.iter().enumerate() {
                let sub_rows = &rows[1..];
                let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                let sign = if idx % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * a.get(rows[0], c, k) * expand(a, k, sub_rows, &sub_cols);
            }
            s
        }
        let n = a.rows();
        let idx: Vec<usize> = (0..n).collect();
        expand(a, k, &idx, &idx)
    }

    pub fn mul_pages(a: &PageArray3, b: &PageArray3) -> PageArray3 {
        let mut out = PageArray3::zeros(a.rows(), b.cols(), a.pages());
        for k in 0..a.pages() {
            for i in 0..a.rows() {
                for j in 0..b.cols() {
                    let mut s = 0.0;
                    for l in 0..a.cols() {
                        s += a.get(i, l, k) * b.get(l, j, k);
                    }
                    out.set(i, j, k, s);
                }
            }
        }
        out
    }

    pub fn dot(a: &PageVector, b: &PageVector, k: usize) -> f64 {
        (0..a.len()).map(|i| a.get(i, k) * b.get(i, k)).sum()
    }
}

prop_compose! {
    fn page_array(rows: usize, cols: usize, pages: usize)
                 (data in proptest::collection::vec(-10.0..10.0f64, rows * cols * pages))
                 -> PageArray3 {
        PageArray3::from_data(rows, cols, pages, data).unwrap()
    }
}

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (
        1..=3usize,
        1..=3usize,
        prop_oneof![Just(1usize), Just(2), Just(17)],
    )
}

fn two_arrays() -> impl Strategy<Value = (PageArray3, PageArray3)> {
    (dims(), 1..=3usize).prop_flat_map(|((r, c, p), c2)| (page_array(r, c, p), page_array(r, c2, p)))
}

fn square_pair() -> impl Strategy<Value = (PageArray3, PageArray3)> {
    (1..=3usize, 1..=8usize)
        .prop_flat_map(|(n, p)| (page_array(n, n, p), page_array(n, n, p)))
}

fn any_array() -> impl Strategy<Value = PageArray3> {
    dims().prop_flat_map(|(r, c, p)| page_array(r, c, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn amtam_matches_loop_oracle((x, a) in two_arrays()) {
        let got = amtam(&x, &a).unwrap();
        let want = oracle::amtam(&x, &a);
        for k in 0..x.pages() {
            for i in 0..x.cols() {
                for j in 0..a.cols() {
                    prop_assert!(rel_close(got.get(i, j, k), want.get(i, j, k), REL_TOL));
                }
            }
        }
    }

    #[test]
    fn amt_is_an_involution(a in any_array()) {
        let round = amt(&amt(&a));
        prop_assert_eq!(round, a);
    }

    #[test]
    fn astam_with_ones_is_identity(a in any_array()) {
        let ones = PageScalars::from_vec(vec![1.0; a.pages()]);
        prop_assert_eq!(astam(&ones, &a).unwrap(), a);
    }

    #[test]
    fn amdet_multiplicative((a, b) in square_pair()) {
        let prod = oracle::mul_pages(&a, &b);
        let da = amdet(&a).unwrap();
        let db = amdet(&b).unwrap();
        let dp = amdet(&prod).unwrap();
        for k in 0..a.pages() {
            let want = da.get(k) * db.get(k);
            // scale-aware: dets of 3x3 pages with entries up to 10 reach ~1e3
            let scale = da.get(k).abs().max(db.get(k).abs()).max(1.0);
            prop_assert!(
                (dp.get(k) - want).abs() <= 1e-11 * scale * scale.max(1.0),
                "page {}: {} vs {}", k, dp.get(k), want
            );
        }
    }

    #[test]
    fn amdet_matches_laplace_expansion((a, _) in square_pair()) {
        let d = amdet(&a).unwrap();
        for k in 0..a.pages() {
            let want = oracle::det(&a, k);
            prop_assert!(rel_close(d.get(k), want, 1e-12));
        }
    }

    #[test]
    fn avtav_and_avtamav_identities((a, b) in square_pair()) {
        // use the first column of each square page as vectors
        let l = a.rows();
        let p = a.pages();
        let mut av = PageVector::zeros(l, p);
        let mut bv = PageVector::zeros(l, p);
        for k in 0..p {
            for i in 0..l {
                av.set(i, k, a.get(i, 0, k));
                bv.set(i, k, b.get(i, 0, k));
            }
        }
        let dot = avtav(&av, &bv).unwrap();
        for k in 0..p {
            prop_assert!(rel_close(dot.get(k), oracle::dot(&av, &bv, k), REL_TOL));
        }
        // identity middle matrix reduces the bilinear form to the dot product
        let mut eye = PageArray3::zeros(l, l, p);
        for k in 0..p {
            for i in 0..l {
                eye.set(i, i, k, 1.0);
            }
        }
        let bil = avtamav(&av, &eye, &bv).unwrap();
        prop_assert_eq!(bil, dot);
        // and the general bilinear form matches its loop oracle
        let gen = avtamav(&av, &a, &bv).unwrap();
        for k in 0..p {
            let mut want = 0.0;
            for i in 0..l {
                for j in 0..l {
                    want += av.get(i, k) * a.get(i, j, k) * bv.get(j, k);
                }
            }
            prop_assert!(rel_close(gen.get(k), want, 1e-12));
        }
    }

    #[test]
    fn aminv_multiplies_back_to_identity((mut a, _) in square_pair()) {
        let n = a.rows();
        // diagonal dominance keeps every page comfortably invertible
        for k in 0..a.pages() {
            for i in 0..n {
                let v = a.get(i, i, k) + 12.0 * (n as f64);
                a.set(i, i, k, v);
            }
        }
        let (inv, dets) = aminv(&a).unwrap();
        for k in 0..a.pages() {
            prop_assert!(rel_close(dets.get(k), oracle::det(&a, k), 1e-12));
        }
        for (left, right) in [(&inv, &a), (&a, &inv)] {
            let prod = oracle::mul_pages(left, right);
            for k in 0..a.pages() {
                for i in 0..n {
                    for j in 0..n {
                        let want = if i == j { 1.0 } else { 0.0 };
                        prop_assert!((prod.get(i, j, k) - want).abs() < 1e-11);
                    }
                }
            }
        }
    }

    #[test]
    fn single_object_products_match_oracles(a in any_array(), m in 1..=3usize) {
        let (r, c, p) = (a.rows(), a.cols(), a.pages());
        let sm_data: Vec<f64> = (0..c * m).map(|i| (i as f64) * 0.37 - 1.0).collect();
        let sm = Matrix::from_data(c, m, sm_data).unwrap();
        let got = amsm(&a, &sm).unwrap();
        let want = oracle::amsm(&a, &sm);
        for k in 0..p {
            for i in 0..r {
                for j in 0..m {
                    prop_assert!(rel_close(got.get(i, j, k), want.get(i, j, k), REL_TOL));
                }
            }
        }

        let sv: Vec<f64> = (0..c).map(|i| 1.0 - 0.5 * i as f64).collect();
        let got = amsv(&a, &sv).unwrap();
        for k in 0..p {
            for i in 0..r {
                let want: f64 = (0..c).map(|l| a.get(i, l, k) * sv[l]).sum();
                prop_assert!(rel_close(got.get(i, k), want, REL_TOL));
            }
        }

        let smt_data: Vec<f64> = (0..m * c).map(|i| (i as f64) * 0.21 - 0.7).collect();
        let smt = Matrix::from_data(m, c, smt_data).unwrap();
        let got = smamt(&smt, &a).unwrap();
        let want = oracle::smamt(&smt, &a);
        for k in 0..p {
            for i in 0..m {
                for j in 0..r {
                    prop_assert!(rel_close(got.get(i, j, k), want.get(i, j, k), REL_TOL));
                }
            }
        }

        let got = svamt(&sv, &a).unwrap();
        for k in 0..p {
            for j in 0..r {
                let want: f64 = (0..c).map(|l| sv[l] * a.get(j, l, k)).sum();
                prop_assert!(rel_close(got.get(j, k), want, REL_TOL));
            }
        }

        let xv = PageVector::from_data(r, p, (0..r * p).map(|i| (i % 7) as f64 - 3.0).collect()).unwrap();
        let got = avtam(&xv, &a).unwrap();
        for k in 0..p {
            for j in 0..c {
                let want: f64 = (0..r).map(|l| xv.get(l, k) * a.get(l, j, k)).sum();
                prop_assert!(rel_close(got.get(0, j, k), want, REL_TOL));
            }
        }
    }

    #[test]
    fn transformed_normals_stay_normal(seed_a in proptest::collection::vec(-2.0..2.0f64, 9),
                                       seed_v in proptest::collection::vec(-2.0..2.0f64, 3)) {
        // random invertible A (diagonally boosted), v in a face, n normal to v:
        // ((A^-1)' n) . (A v) = 0 after unit normalization
        let mut a = PageArray3::from_data(3, 3, 1, seed_a).unwrap();
        for i in 0..3 {
            let v = a.get(i, i, 0) + 6.0;
            a.set(i, i, 0, v);
        }
        let v = seed_v;
        prop_assume!(v.iter().map(|x| x * x).sum::<f64>() > 1e-4);
        // any n orthogonal to v
        let pick = if v[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let cross = [
            v[1] * pick[2] - v[2] * pick[1],
            v[2] * pick[0] - v[0] * pick[2],
            v[0] * pick[1] - v[1] * pick[0],
        ];
        let nn = cross.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(nn > 1e-6);
        let n: Vec<f64> = cross.iter().map(|x| x / nn).collect();

        let (inv, _) = aminv(&a).unwrap();
        let inv_t = amt(&inv);
        let tn: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| inv_t.get(i, j, 0) * n[j]).sum())
            .collect();
        let tv: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a.get(i, j, 0) * v[j]).sum())
            .collect();
        let tn_len = tn.iter().map(|x| x * x).sum::<f64>().sqrt();
        let tv_len = tv.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(tn_len > 1e-9 && tv_len > 1e-9);
        let dot: f64 = (0..3).map(|i| (tn[i] / tn_len) * (tv[i] / tv_len)).sum();
        prop_assert!(dot.abs() < 1e-10, "dot {}", dot);
    }
}
