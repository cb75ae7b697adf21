//! Batched storage for arrays of small matrices, vectors and scalars, plus the
//! page-wise linear-algebra kernels built on them.
//!
//! Naming follows the usual batched-BLAS shorthand: `am` is an array of
//! matrices, `av` an array of vectors, `as` an array of scalars, `sm`/`sv` a
//! single matrix/vector shared by all pages, and `t` marks a transposed
//! operand. So `amtam(x, a)` computes `x_k' * a_k` for every page `k`, and
//! `smamt(s, a)` computes `s * a_k'`.
//!
//! Layout is fixed once for the whole crate: element `(i, j, k)` of an
//! `r x c x p` array lives at offset `k*r*c + j*r + i` (page-major,
//! column-major within a page). All pages are independent work units; the
//! kernels may run pages in parallel and are bitwise deterministic regardless
//! of the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Below this page count the kernels stay sequential; per-page results do not
/// depend on the choice, it only avoids rayon overhead on tiny batches.
const PAR_THRESHOLD: usize = 512;

/// Relative singularity threshold for [`aminv`]: a page with
/// `|det| <= SINGULAR_RTOL * max_abs_entry^n` is rejected.
pub const SINGULAR_RTOL: f64 = 1e-14;

/// `p` pages of `rows x cols` matrices in one contiguous buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct PageArray3 {
    rows: usize,
    cols: usize,
    pages: usize,
    data: Vec<f64>,
}

/// `p` pages of length-`len` column vectors. Interchangeable with a
/// `PageArray3` of `cols = 1`; the buffers have identical layout, so the
/// conversions below are moves, not copies.
#[derive(Debug, Clone, PartialEq)]
pub struct PageVector {
    len: usize,
    pages: usize,
    data: Vec<f64>,
}

/// One scalar per page. Interchangeable with a `1 x 1 x p` `PageArray3`.
#[derive(Debug, Clone, PartialEq)]
pub struct PageScalars {
    data: Vec<f64>,
}

/// Axis of a `PageArray3`, for [`PageArray3::squeeze`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
    Pages,
}

impl PageArray3 {
    pub fn zeros(rows: usize, cols: usize, pages: usize) -> Self {
        assert!(rows > 0 && cols > 0 && pages > 0, "extents must be positive");
        Self {
            rows,
            cols,
            pages,
            data: vec![0.0; rows * cols * pages],
        }
    }

    pub fn from_data(rows: usize, cols: usize, pages: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols * pages {
            return Err(Error::BufferLength {
                op: "PageArray3::from_data",
                expected: rows * cols * pages,
                got: data.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            pages,
            data,
        })
    }

    /// Single-page constructor from row-by-row literals.
    pub fn from_page_rows(rows: &[&[f64]]) -> Self {
        let m = Matrix::from_rows(rows);
        Self {
            rows: m.rows(),
            cols: m.cols(),
            pages: 1,
            data: m.data().to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pages(&self) -> usize {
        self.pages
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols && k < self.pages);
        self.data[k * self.rows * self.cols + j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols && k < self.pages);
        self.data[k * self.rows * self.cols + j * self.rows + i] = v;
    }

    /// Column-major `rows x cols` slice of page `k`.
    #[inline]
    pub fn page(&self, k: usize) -> &[f64] {
        let rc = self.rows * self.cols;
        &self.data[k * rc..(k + 1) * rc]
    }

    #[inline]
    pub fn page_mut(&mut self, k: usize) -> &mut [f64] {
        let rc = self.rows * self.cols;
        &mut self.data[k * rc..(k + 1) * rc]
    }

    /// Page `k` copied out as a `Matrix`.
    pub fn page_matrix(&self, k: usize) -> Matrix {
        Matrix::from_data(self.rows, self.cols, self.page(k).to_vec()).unwrap()
    }

    /// Drop an axis of extent 1. The backing buffer is reinterpreted in
    /// place; the remaining two extents keep their order.
    pub fn squeeze(&self, axis: Axis) -> Result<Matrix> {
        let (extent, name, r, c) = match axis {
            Axis::Rows => (self.rows, "rows", self.cols, self.pages),
            Axis::Cols => (self.cols, "cols", self.rows, self.pages),
            Axis::Pages => (self.pages, "pages", self.rows, self.cols),
        };
        if extent != 1 {
            return Err(Error::AxisNotUnit { axis: name, extent });
        }
        Matrix::from_data(r, c, self.data.clone())
    }

    /// Debug dump: header `rows cols pages`, then the buffer in layout order,
    /// 17 significant digits. Used for test fixtures.
    pub fn write_debug(&self) -> String {
        let mut s = format!("{} {} {}\n", self.rows, self.cols, self.pages);
        for v in &self.data {
            s.push_str(&format!("{v:.16e}\n"));
        }
        s
    }

    pub fn read_debug(text: &str) -> Result<Self> {
        let mut it = text.split_whitespace();
        let mut dim = |what: &str| -> Result<usize> {
            it.next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::MeshParse(format!("debug dump: bad {what}")))
        };
        let (rows, cols, pages) = (dim("rows")?, dim("cols")?, dim("pages")?);
        let data: Vec<f64> = it.map(|t| t.parse::<f64>()).collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::MeshParse(format!("debug dump: {e}")))?;
        Self::from_data(rows, cols, pages, data)
    }
}

impl PageVector {
    pub fn zeros(len: usize, pages: usize) -> Self {
        assert!(len > 0 && pages > 0, "extents must be positive");
        Self {
            len,
            pages,
            data: vec![0.0; len * pages],
        }
    }

    pub fn from_data(len: usize, pages: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != len * pages {
            return Err(Error::BufferLength {
                op: "PageVector::from_data",
                expected: len * pages,
                got: data.len(),
            });
        }
        Ok(Self { len, pages, data })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn pages(&self) -> usize {
        self.pages
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[k * self.len + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, v: f64) {
        self.data[k * self.len + i] = v;
    }

    #[inline]
    pub fn page(&self, k: usize) -> &[f64] {
        &self.data[k * self.len..(k + 1) * self.len]
    }

    #[inline]
    pub fn page_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.len..(k + 1) * self.len]
    }

    /// The documented embedding: a length-`l` vector page is an `l x 1` page.
    pub fn into_array3(self) -> PageArray3 {
        PageArray3 {
            rows: self.len,
            cols: 1,
            pages: self.pages,
            data: self.data,
        }
    }
}

impl From<PageArray3> for PageVector {
    /// Inverse embedding; requires `cols == 1`.
    fn from(a: PageArray3) -> Self {
        assert_eq!(a.cols, 1, "PageVector::from requires cols == 1");
        PageVector {
            len: a.rows,
            pages: a.pages,
            data: a.data,
        }
    }
}

impl PageScalars {
    pub fn from_vec(data: Vec<f64>) -> Self {
        Self { data }
    }

    pub fn pages(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.data[k]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn into_array3(self) -> PageArray3 {
        PageArray3 {
            rows: 1,
            cols: 1,
            pages: self.data.len(),
            data: self.data,
        }
    }
}

fn check_pages(op: &'static str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch {
            op,
            axis: "pages",
            left,
            right,
        });
    }
    Ok(())
}

fn check_axis(op: &'static str, axis: &'static str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch {
            op,
            axis,
            left,
            right,
        });
    }
    Ok(())
}

/// Run `f` over all output pages, in parallel for large batches. `f` must
/// write page `k` of the output given `k`; outputs are disjoint, so the
/// result is identical for any thread count.
fn for_each_page<F>(out: &mut [f64], page_len: usize, pages: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    if pages >= PAR_THRESHOLD {
        out.par_chunks_mut(page_len)
            .enumerate()
            .for_each(|(k, chunk)| f(k, chunk));
    } else {
        for (k, chunk) in out.chunks_mut(page_len).enumerate() {
            f(k, chunk);
        }
    }
}

/// Page-wise `x_k' * a_k`: result page is `x.cols x a.cols`.
pub fn amtam(amx: &PageArray3, ama: &PageArray3) -> Result<PageArray3> {
    check_pages("amtam", amx.pages, ama.pages)?;
    check_axis("amtam", "rows", amx.rows, ama.rows)?;
    let (n, c1, c2, p) = (amx.rows, amx.cols, ama.cols, amx.pages);
    let mut out = PageArray3::zeros(c1, c2, p);
    let (xd, ad) = (&amx.data, &ama.data);
    for_each_page(&mut out.data, c1 * c2, p, |k, page| {
        let x = &xd[k * n * c1..(k + 1) * n * c1];
        let a = &ad[k * n * c2..(k + 1) * n * c2];
        for b in 0..c2 {
            for aa in 0..c1 {
                let mut s = 0.0;
                for i in 0..n {
                    s += x[aa * n + i] * a[b * n + i];
                }
                page[b * c1 + aa] = s;
            }
        }
    });
    Ok(out)
}

/// Page-wise `x_k' * a_k` with a vector left operand: one `1 x cols` row per page.
pub fn avtam(avx: &PageVector, ama: &PageArray3) -> Result<PageArray3> {
    check_pages("avtam", avx.pages, ama.pages)?;
    check_axis("avtam", "rows", avx.len, ama.rows)?;
    let (n, c, p) = (ama.rows, ama.cols, ama.pages);
    let mut out = PageArray3::zeros(1, c, p);
    let (xd, ad) = (&avx.data, &ama.data);
    for_each_page(&mut out.data, c, p, |k, page| {
        let x = &xd[k * n..(k + 1) * n];
        let a = &ad[k * n * c..(k + 1) * n * c];
        for (b, slot) in page.iter_mut().enumerate() {
            let mut s = 0.0;
            for i in 0..n {
                s += x[i] * a[b * n + i];
            }
            *slot = s;
        }
    });
    Ok(out)
}

/// Per-page dot product.
pub fn avtav(ava: &PageVector, avb: &PageVector) -> Result<PageScalars> {
    check_pages("avtav", ava.pages, avb.pages)?;
    check_axis("avtav", "length", ava.len, avb.len)?;
    let n = ava.len;
    let mut out = vec![0.0; ava.pages];
    let (adat, bdat) = (&ava.data, &avb.data);
    for_each_page(&mut out, 1, ava.pages, |k, slot| {
        let a = &adat[k * n..(k + 1) * n];
        let b = &bdat[k * n..(k + 1) * n];
        slot[0] = a.iter().zip(b).map(|(x, y)| x * y).sum();
    });
    Ok(PageScalars::from_vec(out))
}

/// Scale page `k` by `asx[k]`.
pub fn astam(asx: &PageScalars, ama: &PageArray3) -> Result<PageArray3> {
    check_pages("astam", asx.pages(), ama.pages)?;
    let rc = ama.rows * ama.cols;
    let mut out = ama.clone();
    let s = &asx.data;
    for_each_page(&mut out.data, rc, ama.pages, |k, page| {
        for v in page.iter_mut() {
            *v *= s[k];
        }
    });
    Ok(out)
}

/// Page-wise `a_k * smx` against one shared matrix.
pub fn amsm(ama: &PageArray3, smx: &Matrix) -> Result<PageArray3> {
    check_axis("amsm", "cols", ama.cols, smx.rows())?;
    let (r, c, m, p) = (ama.rows, ama.cols, smx.cols(), ama.pages);
    let mut out = PageArray3::zeros(r, m, p);
    let ad = &ama.data;
    let sd = smx.data();
    for_each_page(&mut out.data, r * m, p, |k, page| {
        let a = &ad[k * r * c..(k + 1) * r * c];
        for j in 0..m {
            for i in 0..r {
                let mut s = 0.0;
                for l in 0..c {
                    s += a[l * r + i] * sd[j * c + l];
                }
                page[j * r + i] = s;
            }
        }
    });
    Ok(out)
}

/// Page-wise `a_k * svx` against one shared vector.
pub fn amsv(ama: &PageArray3, svx: &[f64]) -> Result<PageVector> {
    check_axis("amsv", "cols", ama.cols, svx.len())?;
    let (r, c, p) = (ama.rows, ama.cols, ama.pages);
    let mut out = PageVector::zeros(r, p);
    let ad = &ama.data;
    for_each_page(&mut out.data, r, p, |k, page| {
        let a = &ad[k * r * c..(k + 1) * r * c];
        for (i, slot) in page.iter_mut().enumerate() {
            let mut s = 0.0;
            for (l, &xv) in svx.iter().enumerate() {
                s += a[l * r + i] * xv;
            }
            *slot = s;
        }
    });
    Ok(out)
}

/// `smx * a_k'` for every page.
pub fn smamt(smx: &Matrix, ama: &PageArray3) -> Result<PageArray3> {
    check_axis("smamt", "cols", smx.cols(), ama.cols)?;
    let (m, c, r, p) = (smx.rows(), smx.cols(), ama.rows, ama.pages);
    let mut out = PageArray3::zeros(m, r, p);
    let ad = &ama.data;
    let sd = smx.data();
    for_each_page(&mut out.data, m * r, p, |k, page| {
        let a = &ad[k * r * c..(k + 1) * r * c];
        for j in 0..r {
            for i in 0..m {
                let mut s = 0.0;
                for l in 0..c {
                    // (a_k')[l][j] = a_k[j][l]
                    s += sd[l * m + i] * a[l * r + j];
                }
                page[j * m + i] = s;
            }
        }
    });
    Ok(out)
}

/// `svx (as row) * a_k'`, returned as one vector per page.
pub fn svamt(svx: &[f64], ama: &PageArray3) -> Result<PageVector> {
    check_axis("svamt", "cols", svx.len(), ama.cols)?;
    let (r, c, p) = (ama.rows, ama.cols, ama.pages);
    let mut out = PageVector::zeros(r, p);
    let ad = &ama.data;
    for_each_page(&mut out.data, r, p, |k, page| {
        let a = &ad[k * r * c..(k + 1) * r * c];
        for (j, slot) in page.iter_mut().enumerate() {
            let mut s = 0.0;
            for (l, &xv) in svx.iter().enumerate() {
                s += xv * a[l * r + j];
            }
            *slot = s;
        }
    });
    Ok(out)
}

/// Per-page transpose. An involution: `amt(amt(x)) == x` bitwise.
pub fn amt(ama: &PageArray3) -> PageArray3 {
    let (r, c, p) = (ama.rows, ama.cols, ama.pages);
    let mut out = PageArray3::zeros(c, r, p);
    let ad = &ama.data;
    for_each_page(&mut out.data, r * c, p, |k, page| {
        let a = &ad[k * r * c..(k + 1) * r * c];
        for j in 0..c {
            for i in 0..r {
                page[i * c + j] = a[j * r + i];
            }
        }
    });
    out
}

#[inline]
fn det_page(page: &[f64], n: usize) -> f64 {
    match n {
        1 => page[0],
        2 => page[0] * page[3] - page[2] * page[1],
        3 => {
            // column-major 3x3 cofactor expansion
            let (a, b, c) = (page[0], page[1], page[2]);
            let (d, e, f) = (page[3], page[4], page[5]);
            let (g, h, i) = (page[6], page[7], page[8]);
            a * (e * i - h * f) - d * (b * i - h * c) + g * (b * f - e * c)
        }
        _ => unreachable!("det_page sizes are checked by callers"),
    }
}

fn check_square_small(op: &'static str, ama: &PageArray3) -> Result<usize> {
    if ama.rows != ama.cols {
        return Err(Error::NotSquare {
            op,
            rows: ama.rows,
            cols: ama.cols,
        });
    }
    if ama.rows == 0 || ama.rows > 3 {
        return Err(Error::UnsupportedPageSize {
            op,
            size: ama.rows,
        });
    }
    Ok(ama.rows)
}

/// Per-page determinant by closed-form cofactor formulas (sizes 1..=3).
pub fn amdet(ama: &PageArray3) -> Result<PageScalars> {
    let n = check_square_small("amdet", ama)?;
    let rc = n * n;
    let mut out = vec![0.0; ama.pages];
    let ad = &ama.data;
    for_each_page(&mut out, 1, ama.pages, |k, slot| {
        slot[0] = det_page(&ad[k * rc..(k + 1) * rc], n);
    });
    Ok(PageScalars::from_vec(out))
}

/// Per-page inverse via adjugate/determinant; also returns the determinants.
///
/// A page is rejected as singular when `|det| <= 1e-14 * max_abs_entry^n`;
/// the error reports the first offending page and its determinant magnitude.
pub fn aminv(ama: &PageArray3) -> Result<(PageArray3, PageScalars)> {
    let n = check_square_small("aminv", ama)?;
    let rc = n * n;
    let p = ama.pages;
    let ad = &ama.data;

    let dets = amdet(ama)?;
    for (k, &d) in dets.data().iter().enumerate() {
        let scale = ad[k * rc..(k + 1) * rc]
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        if d.abs() <= SINGULAR_RTOL * scale.powi(n as i32) {
            return Err(Error::SingularPage {
                page: k,
                det: d.abs(),
            });
        }
    }

    let mut out = PageArray3::zeros(n, n, p);
    let dd = dets.data();
    for_each_page(&mut out.data, rc, p, |k, page| {
        let a = &ad[k * rc..(k + 1) * rc];
        let inv_det = 1.0 / dd[k];
        match n {
            1 => page[0] = inv_det,
            2 => {
                page[0] = a[3] * inv_det;
                page[1] = -a[1] * inv_det;
                page[2] = -a[2] * inv_det;
                page[3] = a[0] * inv_det;
            }
            3 => {
                let (a11, a21, a31) = (a[0], a[1], a[2]);
                let (a12, a22, a32) = (a[3], a[4], a[5]);
                let (a13, a23, a33) = (a[6], a[7], a[8]);
                page[0] = (a22 * a33 - a32 * a23) * inv_det;
                page[1] = (a31 * a23 - a21 * a33) * inv_det;
                page[2] = (a21 * a32 - a31 * a22) * inv_det;
                page[3] = (a32 * a13 - a12 * a33) * inv_det;
                page[4] = (a11 * a33 - a31 * a13) * inv_det;
                page[5] = (a31 * a12 - a11 * a32) * inv_det;
                page[6] = (a12 * a23 - a22 * a13) * inv_det;
                page[7] = (a21 * a13 - a11 * a23) * inv_det;
                page[8] = (a11 * a22 - a21 * a12) * inv_det;
            }
            _ => unreachable!(),
        }
    });
    Ok((out, dets))
}

/// Per-page bilinear form `a_k' * M_k * b_k`.
pub fn avtamav(ava: &PageVector, ama: &PageArray3, avb: &PageVector) -> Result<PageScalars> {
    check_pages("avtamav", ava.pages, ama.pages)?;
    check_pages("avtamav", ama.pages, avb.pages)?;
    check_axis("avtamav", "rows", ava.len, ama.rows)?;
    check_axis("avtamav", "cols", avb.len, ama.cols)?;
    let (r, c, p) = (ama.rows, ama.cols, ama.pages);
    let mut out = vec![0.0; p];
    let (adat, mdat, bdat) = (&ava.data, &ama.data, &avb.data);
    for_each_page(&mut out, 1, p, |k, slot| {
        let a = &adat[k * r..(k + 1) * r];
        let m = &mdat[k * r * c..(k + 1) * r * c];
        let b = &bdat[k * c..(k + 1) * c];
        let mut s = 0.0;
        for (j, &bj) in b.iter().enumerate() {
            let mut col = 0.0;
            for (i, &ai) in a.iter().enumerate() {
                col += ai * m[j * r + i];
            }
            s += col * bj;
        }
        slot[0] = s;
    });
    Ok(PageScalars::from_vec(out))
}
