//! Lattice Voronoi tilings, their perimeters and related energies.

pub mod error;
pub mod functionals;
pub mod lattice;
pub mod linalg;
pub mod lp;
pub mod optimizer;
pub mod plateau;
pub mod polytope;
pub mod voronoi;

pub use error::{Error, Result};
pub use lattice::{catalog, CatalogName, Lattice};
pub use functionals::{Estimate, MonteCarloConfig, RatioSpec};
pub use optimizer::{OptimizationReport, OptimizerConfig};
pub use plateau::{PlateauReport, Verdict};
pub use polytope::{HalfSpace, Polytope};
pub use voronoi::{tiling_skeleton, voronoi_cell, TilingComplex};
