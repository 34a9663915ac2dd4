//! Seed-set generators shared by the unit tests.

use crate::geom::{DomainBox, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// N x N cartesian lattice with half-cell offset on the unit square.
pub fn lattice(n: usize) -> Vec<Vec2> {
    let h = 1.0 / n as f64;
    let mut out = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            out.push(Vec2::new((ix as f64 + 0.5) * h, (iy as f64 + 0.5) * h));
        }
    }
    out
}

/// Lattice with reproducible uniform jitter of amplitude `amp`.
pub fn lattice_jittered(n: usize, amp: f64, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    lattice(n)
        .into_iter()
        .map(|p| {
            Vec2::new(
                (p.x + rng.gen_range(-amp..amp)).clamp(1e-6, 1.0 - 1e-6),
                (p.y + rng.gen_range(-amp..amp)).clamp(1e-6, 1.0 - 1e-6),
            )
        })
        .collect()
}

/// Uniform random points strictly inside `domain`, `margin` away from walls.
pub fn random_points(n: usize, domain: &DomainBox, margin: f64, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Vec2::new(
                rng.gen_range(domain.xmin + margin..domain.xmax - margin),
                rng.gen_range(domain.ymin + margin..domain.ymax - margin),
            )
        })
        .collect()
}
