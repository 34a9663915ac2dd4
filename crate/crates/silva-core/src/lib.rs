//! Lagrangian Voronoi solver for 2-D incompressible Euler and Navier-Stokes
//! flow on rectangular domains.
//!
//! Seeds carry the physical fields and move with the fluid; the Voronoi
//! tessellation they generate is rebuilt every step (warm-started from the
//! previous topology), discrete gradient/divergence/Laplacian operators act
//! on the mesh, and a semi-implicit projection solves a symmetric sparse
//! system for the pressure that returns the velocity to the discretely
//! divergence-free manifold.
//!
//! Modules follow the pipeline: [`mesh`] builds the tessellation, [`ops`]
//! provides the point-wise operators, [`pressure`] assembles and solves the
//! projection system, [`integrator`] advances the coupled state, and
//! [`bench`] defines the validation cases (Taylor-Green, Gresho, lid-driven
//! cavity, Rayleigh-Taylor) with their references and error norms.

pub mod bench;
pub mod geom;
pub mod integrator;
pub mod mesh;
pub mod ops;
pub mod pressure;
pub mod state;

#[cfg(test)]
pub(crate) mod testutil;

use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("invalid domain box (need xmax > xmin and ymax > ymin)")]
    InvalidDomain,
    #[error("invalid spatial resolution {0}")]
    InvalidResolution(f64),
    #[error("seed {index} lies outside the open domain")]
    SeedOutsideDomain { index: usize },
    #[error("seeds {first} and {second} coincide (Voronoi generators must be distinct)")]
    DuplicateSeeds { first: usize, second: usize },
    #[error("non-positive density at seed {index}")]
    NonPositiveDensity { index: usize },
    #[error("invalid time step {0}")]
    InvalidTimeStep(f64),
    #[error("field length {got} does not match seed count {want}")]
    FieldLength { got: usize, want: usize },
    #[error("pressure solve stalled after {iterations} iterations (relative residual {residual:.3e})")]
    SolverStalled { iterations: usize, residual: f64 },
    #[error("numerical breakdown (non-finite values) in pressure solve")]
    SolverBreakdown,
    #[error("multiphase fixed point exceeded {iterations} outer iterations (last increment {increment:.3e})")]
    FixedPointStalled { iterations: usize, increment: f64 },
    #[error("case `{0}` has no analytic reference solution")]
    NoReferenceSolution(&'static str),
    #[error("unknown case id `{0}`")]
    UnknownCase(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub use geom::{DomainBox, Vec2, Wall};
pub use mesh::{build_bucket_grid, build_cell, build_mesh, cell_volume_gradient};
pub use mesh::{BucketGrid, FacetGeom, FacetNeighbor, VoronoiCell, VoronoiMesh};
pub use ops::{ScalarField, VectorField};
pub use state::{BoundarySpec, ParticleState, WallCondition};
