//! Assembly and solution of the implicit pressure system that projects the
//! velocity field onto the discretely divergence-free manifold.
//!
//! The production path solves `B p = b` where `B` is the sparsified operator
//! coupling facet neighbors only (symmetric positive semi-definite, kernel =
//! constants) and `b` is the exact discrete functional
//! `b_i = (1/Δt)(v_i·S_i - |ω_i| ∇ʷ·v|_i)`. The wall term weakly enforces
//! no-penetration and makes `Σ_i b_i` vanish to machine precision.
//! Heterogeneous densities go through a fixed-point loop on the ρ-free
//! Laplacian with the density coupling on the right-hand side.

mod minres;
mod sparse;

pub use minres::{minres, SolveStats};
pub use sparse::SparseSymmetricOperator;

use rayon::prelude::*;

use crate::geom::Vec2;
use crate::mesh::{FacetNeighbor, VoronoiMesh};
use crate::ops;
use crate::Error;

/// Assemble the sparsified pressure operator for a homogeneous density:
/// `(Bp)_i = (1/ρ) Σ_j (|Γ_ij|/r_ij)(p_i - p_j)`, facet neighbors only.
/// Each unordered pair is assembled once so symmetry is exact. Heterogeneous
/// flows use [`solve_pressure_multiphase`] instead.
pub fn assemble_b(mesh: &VoronoiMesh, rho: f64) -> Result<SparseSymmetricOperator, Error> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::NonPositiveDensity { index: 0 });
    }
    let inv_rho = 1.0 / rho;
    let mut pairs = Vec::with_capacity(mesh.len() * 4);
    for (i, cell) in mesh.cells().iter().enumerate() {
        for f in &cell.facets {
            if let FacetNeighbor::Seed { index: j, distance } = f.neighbor {
                if j > i {
                    pairs.push((i, j, f.length / distance * inv_rho));
                }
            }
        }
    }
    let b = SparseSymmetricOperator::from_pair_weights(mesh.len(), &pairs);
    debug_assert!(validate_operator(&b), "pressure operator invariants violated");
    Ok(b)
}

/// Invariants asserted on every assembly in test builds: exact symmetry,
/// zero row sums, kernel on constants, PSD quadratic form.
fn validate_operator(b: &SparseSymmetricOperator) -> bool {
    if !b.is_symmetric() {
        return false;
    }
    if b.max_relative_row_sum() > 1e-12 {
        return false;
    }
    let ones = vec![1.0; b.dim()];
    let y = b.apply_alloc(&ones);
    let scale = (0..b.dim()).map(|i| b.diagonal(i)).fold(0.0f64, f64::max);
    if y.iter().any(|v| v.abs() > 1e-12 * scale.max(1.0)) {
        return false;
    }
    let mut s = 0x853c49e6748fea9bu64;
    for _ in 0..4 {
        let probe: Vec<f64> = (0..b.dim())
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        if b.quadratic_form(&probe) < -1e-12 {
            return false;
        }
    }
    true
}

/// Right-hand side of the projection system for time step `dt`:
/// `b_i = (1/Δt)(v_i·S_i - |ω_i| ∇ʷ·v|_i)`.
///
/// On interior cells this is `-(|ω_i|/Δt) ∇ʷ·v|_i`; the wall term is the
/// same functional evaluated exactly on boundary cells and is what lets the
/// projection enforce no-penetration. The entries sum to zero up to
/// round-off by pairwise cancellation.
pub fn assemble_rhs(mesh: &VoronoiMesh, v: &[Vec2], dt: f64) -> Result<Vec<f64>, Error> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidTimeStep(dt));
    }
    if v.len() != mesh.len() {
        return Err(Error::FieldLength { got: v.len(), want: mesh.len() });
    }
    let inv_dt = 1.0 / dt;
    Ok((0..mesh.len())
        .into_par_iter()
        .map(|i| {
            let cell = mesh.cell(i);
            let div = ops::weak_divergence(mesh, v, i);
            (v[i].dot(cell.surface) - cell.volume * div) * inv_dt
        })
        .collect())
}

/// Action of the unsparsified operator
/// `Σ_i (|ω_i|/ρ) ∇ˢp_i · ∇ˢφ_i = Σ_k φ_k (Ap)_k`, realized exactly by
/// chaining the strong gradient with its integration-by-parts adjoint:
/// `(Ap)_k = u_k·S_k - |ω_k| ∇ʷ·u|_k` with `u = ∇ˢp / ρ`.
///
/// Test oracle only: it couples neighbors of neighbors and is never the
/// production path; it bounds the `B`-vs-`A` sparsification error.
pub fn apply_a(mesh: &VoronoiMesh, rho: f64, p: &[f64]) -> Vec<f64> {
    let u: Vec<Vec2> = (0..mesh.len())
        .map(|i| ops::strong_gradient(mesh, p, i) * (1.0 / rho))
        .collect();
    (0..mesh.len())
        .map(|k| {
            let cell = mesh.cell(k);
            u[k].dot(cell.surface) - cell.volume * ops::weak_divergence(mesh, &u, k)
        })
        .collect()
}

/// Solve `B p = b` by MINRES in the zero-mean subspace. `p0` warm-starts
/// the Krylov iteration; the returned pressure has zero mean.
pub fn solve_pressure(
    b_op: &SparseSymmetricOperator,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    p0: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveStats), Error> {
    minres(b_op, b, p0, tol, max_iter)
}

/// Options for the heterogeneous-density fixed point.
#[derive(Clone, Copy, Debug)]
pub struct MultiphaseOptions {
    /// Outer stop: `max_i |p^(m+1) - p^(m)| < outer_tol`.
    pub outer_tol: f64,
    pub outer_max_iter: usize,
    /// Relative tolerance of the inner MINRES solves.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
}

impl Default for MultiphaseOptions {
    fn default() -> Self {
        MultiphaseOptions {
            outer_tol: 1e-12,
            outer_max_iter: 100,
            inner_tol: 1e-12,
            inner_max_iter: 0, // 0: use 10·N
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MultiphaseStats {
    pub outer_iterations: usize,
    pub total_minres_iterations: usize,
    pub last_increment: f64,
    pub relative_residual: f64,
}

/// Pressure solve with a heterogeneous density field via fixed-point
/// iterations on
/// `-⟨Δp⟩_i = -(ρ_i/Δt) ∇ʷ·v|_i - (1/ρ_i) ∇ˢρ|_i · ∇ˢp|_i`,
/// each inner system solved with the ρ-free Laplacian operator (multiplied
/// through by `|ω_i|` to stay symmetric) warm-started from the previous
/// iterate, beginning at `p_prev`. With a uniform density the coupling term
/// vanishes identically and a single inner solve returns the single-phase
/// solution.
pub fn solve_pressure_multiphase(
    mesh: &VoronoiMesh,
    rho: &[f64],
    v: &[Vec2],
    dt: f64,
    p_prev: &[f64],
    opts: &MultiphaseOptions,
) -> Result<(Vec<f64>, MultiphaseStats), Error> {
    if let Some(i) = rho.iter().position(|r| !(*r > 0.0)) {
        return Err(Error::NonPositiveDensity { index: i });
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidTimeStep(dt));
    }
    let n = mesh.len();
    let lap = assemble_b(mesh, 1.0)?;
    let inner_max = if opts.inner_max_iter == 0 { 10 * n } else { opts.inner_max_iter };

    // ρ-weighted divergence functional, fixed across iterations
    let base: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let cell = mesh.cell(i);
            let div = ops::weak_divergence(mesh, v, i);
            rho[i] / dt * (v[i].dot(cell.surface) - cell.volume * div)
        })
        .collect();

    let grad_rho: Vec<Vec2> = ops::strong_gradient_field(mesh, rho);
    let coupled = grad_rho.iter().any(|g| g.norm_sq() > 0.0);

    let mut p = p_prev.to_vec();
    let mut stats = MultiphaseStats::default();

    if !coupled {
        let (sol, st) = minres(&lap, &base, Some(&p), opts.inner_tol, inner_max)?;
        stats.outer_iterations = 1;
        stats.total_minres_iterations = st.iterations;
        stats.relative_residual = st.relative_residual;
        return Ok((sol, stats));
    }

    for outer in 1..=opts.outer_max_iter {
        let grad_p = ops::strong_gradient_field(mesh, &p);
        let rhs: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                base[i] - mesh.cell(i).volume / rho[i] * grad_rho[i].dot(grad_p[i])
            })
            .collect();
        let (next, st) = minres(&lap, &rhs, Some(&p), opts.inner_tol, inner_max)?;
        let increment = next
            .iter()
            .zip(p.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        stats.outer_iterations = outer;
        stats.total_minres_iterations += st.iterations;
        stats.last_increment = increment;
        stats.relative_residual = st.relative_residual;
        p = next;
        if increment < opts.outer_tol {
            return Ok((p, stats));
        }
    }
    Err(Error::FixedPointStalled {
        iterations: opts.outer_max_iter,
        increment: stats.last_increment,
    })
}
