use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands disagree on one axis; `axis` names the offending extent.
    #[error("{op}: {axis} mismatch ({left} vs {right})")]
    DimensionMismatch {
        op: &'static str,
        axis: &'static str,
        left: usize,
        right: usize,
    },

    #[error("{op}: pages must be square, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("{op}: page size {size} unsupported (closed forms cover 1..=3)")]
    UnsupportedPageSize { op: &'static str, size: usize },

    #[error("singular page {page}: |det| = {det:.3e} below threshold")]
    SingularPage { page: usize, det: f64 },

    #[error("squeeze: axis {axis} has extent {extent}, expected 1")]
    AxisNotUnit { axis: &'static str, extent: usize },

    #[error("{op}: buffer length {got} does not match {expected}")]
    BufferLength {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("element index {index} out of range (nodes: {nn})")]
    IndexOutOfRange { index: usize, nn: usize },

    #[error("non-manifold facet shared by {count} elements")]
    NonManifoldFacet { count: usize },

    #[error("gauss_points: order {order} / dim {dim} unsupported")]
    UnsupportedRule { order: usize, dim: usize },

    #[error("degenerate element {elem}: |det J| = {det:.3e}")]
    DegenerateElement { elem: usize, det: f64 },

    #[error("degenerate boundary face {face}")]
    DegenerateFace { face: usize },

    #[error("zero-measure element {elem}")]
    ZeroMeasureElement { elem: usize },

    #[error("vector-field integration requires normals")]
    NormalsRequired,

    #[error("boundary predicate selected no nodes")]
    EmptySelection,

    #[error("total mass is zero; center of mass undefined")]
    ZeroMass,

    #[error("solver did not converge: {iterations} iterations, relative residual {residual:.3e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("mesh parse error: {0}")]
    MeshParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
