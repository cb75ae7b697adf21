//! Page-wise batched small-matrix linear algebra and a vectorized
//! finite-element toolkit built on it: mesh generators, per-element geometry,
//! simplex Gauss quadrature, P1/P2 assembly and a diffusion-reaction solver.

pub mod assembly;
pub mod bvp;
pub mod error;
pub mod geometry;
pub mod integrate;
pub mod matrix;
pub mod mesh;
pub mod page;
pub mod quadrature;

pub use assembly::SparseMatrix;
pub use bvp::{BvpSolution, Energies};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use mesh::{BoundaryFaces, ElementType, Mesh};
pub use page::{Axis, PageArray3, PageScalars, PageVector};
pub use quadrature::QuadratureRule;
