//! Point-wise discrete differential operators on a Voronoi mesh.
//!
//! Two gradients are provided. The strong gradient is first-order exact and
//! is the one used point-wise; the weak gradient is its integration-by-parts
//! dual and is only reliable inside divergences and assembled functionals
//! (point-wise it is noisy on irregular meshes). Wall facets are skipped
//! throughout, which realizes a homogeneous Neumann condition; viscous wall
//! forcing is handled by the time integrator through mirror values, not here.

use rayon::prelude::*;

use crate::geom::Vec2;
use crate::mesh::{FacetNeighbor, VoronoiMesh};

/// Per-seed scalar samples aligned with mesh indexing.
pub type ScalarField = Vec<f64>;
/// Per-seed vector samples aligned with mesh indexing.
pub type VectorField = Vec<Vec2>;

/// Strong gradient (exact for affine fields):
/// `-(1/|ω_i|) Σ_j (|Γ_ij|/r_ij) (f_i - f_j) (m_ij - x_i)`.
pub fn strong_gradient(mesh: &VoronoiMesh, f: &[f64], i: usize) -> Vec2 {
    let cell = mesh.cell(i);
    let xi = mesh.position(i);
    let mut g = Vec2::ZERO;
    for facet in &cell.facets {
        if let FacetNeighbor::Seed { index, distance } = facet.neighbor {
            let fij = f[i] - f[index];
            g += (facet.length / distance * fij) * (facet.midpoint - xi);
        }
    }
    -(1.0 / cell.volume) * g
}

/// Weak gradient:
/// `(1/|ω_i|) Σ_j (|Γ_ij|/r_ij) (f_i - f_j) (m_ij - x_j)`.
pub fn weak_gradient(mesh: &VoronoiMesh, f: &[f64], i: usize) -> Vec2 {
    let cell = mesh.cell(i);
    let mut g = Vec2::ZERO;
    for facet in &cell.facets {
        if let FacetNeighbor::Seed { index, distance } = facet.neighbor {
            let fij = f[i] - f[index];
            g += (facet.length / distance * fij) * (facet.midpoint - mesh.position(index));
        }
    }
    (1.0 / cell.volume) * g
}

/// Weak divergence: the trace of the weak gradient applied componentwise,
/// `(1/|ω_i|) Σ_j (|Γ_ij|/r_ij) (v_i - v_j) · (m_ij - x_j)`.
pub fn weak_divergence(mesh: &VoronoiMesh, v: &[Vec2], i: usize) -> f64 {
    let cell = mesh.cell(i);
    let mut d = 0.0;
    for facet in &cell.facets {
        if let FacetNeighbor::Seed { index, distance } = facet.neighbor {
            let vij = v[i] - v[index];
            d += facet.length / distance * vij.dot(facet.midpoint - mesh.position(index));
        }
    }
    d / cell.volume
}

/// Finite-volume Laplacian estimate:
/// `-(1/|ω_i|) Σ_j (|Γ_ij|/r_ij) (f_i - f_j)`.
pub fn laplacian(mesh: &VoronoiMesh, f: &[f64], i: usize) -> f64 {
    let cell = mesh.cell(i);
    let mut l = 0.0;
    for facet in &cell.facets {
        if let FacetNeighbor::Seed { index, distance } = facet.neighbor {
            l += facet.length / distance * (f[i] - f[index]);
        }
    }
    -l / cell.volume
}

/// Vector-field version of [`laplacian`].
pub fn laplacian_vec(mesh: &VoronoiMesh, v: &[Vec2], i: usize) -> Vec2 {
    let cell = mesh.cell(i);
    let mut l = Vec2::ZERO;
    for facet in &cell.facets {
        if let FacetNeighbor::Seed { index, distance } = facet.neighbor {
            l += (facet.length / distance) * (v[i] - v[index]);
        }
    }
    -(1.0 / cell.volume) * l
}

/// Stabilized pressure gradient: the strong gradient minus the spurious
/// centroid push a locally quadratic pressure minimum exerts on the seed,
/// `∇p_i - ((d+1)/2d) [⟨Δp⟩_i]⁺ (c_i - x_i)` with `d = 2`. Reduces to the
/// plain strong gradient when the Laplacian estimate is non-positive or the
/// seed sits at its centroid, and leaves affine fields untouched.
pub fn stabilized_gradient(mesh: &VoronoiMesh, p: &[f64], i: usize) -> Vec2 {
    let g = strong_gradient(mesh, p, i);
    let lap = laplacian(mesh, p, i);
    if lap <= 0.0 {
        return g;
    }
    let cell = mesh.cell(i);
    g - (0.75 * lap) * (cell.centroid - mesh.position(i))
}

/// Evaluate `op` over every cell in parallel.
pub fn map_cells<T, F>(mesh: &VoronoiMesh, op: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..mesh.len()).into_par_iter().map(op).collect()
}

pub fn strong_gradient_field(mesh: &VoronoiMesh, f: &[f64]) -> VectorField {
    map_cells(mesh, |i| strong_gradient(mesh, f, i))
}

pub fn weak_divergence_field(mesh: &VoronoiMesh, v: &[Vec2]) -> ScalarField {
    map_cells(mesh, |i| weak_divergence(mesh, v, i))
}

pub fn stabilized_gradient_field(mesh: &VoronoiMesh, p: &[f64]) -> VectorField {
    map_cells(mesh, |i| stabilized_gradient(mesh, p, i))
}
