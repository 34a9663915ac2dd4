//! Reference mesh construction for validation: every cell is clipped against
//! all N-1 other seeds, with no cell list and no stopping rule. Quadratic
//! cost; used only by the test and acceptance suites to check the production
//! builder cell by cell.

use crate::geom::{ClipPolygon, DomainBox, Vec2};
use crate::mesh::{finalize_cell, VoronoiCell};

/// Build one cell by brute force.
pub fn build_cell_brute_force(
    i: usize,
    positions: &[Vec2],
    domain: &DomainBox,
    delta_r: f64,
) -> VoronoiCell {
    let mut poly = ClipPolygon::new();
    poly.reset_to_domain(domain);
    let xi = positions[i];
    for (j, &xj) in positions.iter().enumerate() {
        if j != i {
            poly.clip_bisector(xi, xj, j);
        }
    }
    finalize_cell(i, xi, &poly, delta_r, positions)
}

/// Compare two vertex loops up to cyclic order, tolerating repeated vertices
/// produced by grazing (near-cocircular) clips.
pub fn polygons_match(a: &[Vec2], b: &[Vec2], tol: f64) -> bool {
    let ca = canonical(a, tol);
    let cb = canonical(b, tol);
    if ca.len() != cb.len() {
        return false;
    }
    if ca.is_empty() {
        return true;
    }
    let n = ca.len();
    'shift: for s in 0..n {
        for k in 0..n {
            if (ca[k] - cb[(k + s) % n]).norm() > tol {
                continue 'shift;
            }
        }
        return true;
    }
    false
}

fn canonical(poly: &[Vec2], tol: f64) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = Vec::with_capacity(poly.len());
    for &v in poly {
        if out.last().map_or(true, |&l| (v - l).norm() > tol) {
            out.push(v);
        }
    }
    while out.len() > 1 && (out[0] - *out.last().unwrap()).norm() <= tol {
        out.pop();
    }
    out
}
