//! Reference elements, quadrature, dof maps, sparse storage and the linear solver.

pub mod dofmap;
pub mod geometry;
pub mod quadrature;
pub mod shape;
pub mod solver;
pub mod sparse;

pub use dofmap::{build_dof_map, DofMap};
pub use geometry::AffineTriangle;
pub use quadrature::{edge_quadrature, triangle_quadrature, EdgeRule, QuadratureRule, TriangleRule};
pub use shape::{shape_functions, BasisTable, ElementKind};
pub use solver::{solve_sparse, LuSolver, Solution};
pub use sparse::{CsrMatrix, SparseSystem, TripletBuilder};
