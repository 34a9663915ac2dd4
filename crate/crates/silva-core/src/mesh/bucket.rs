//! Uniform cell list over the domain: buckets of side `2·δr` holding seed
//! indices, used both to localize the half-plane clipping sweep and for
//! nearest-seed queries.

use crate::geom::{DomainBox, Vec2};
use crate::Error;

/// Uniform bucket grid. Buckets are half-open `[low, high)` along both axes
/// so a seed sitting exactly on an internal boundary has a unique owner; the
/// last row/column is closed at the domain edge.
#[derive(Clone, Debug)]
pub struct BucketGrid {
    domain: DomainBox,
    side: f64,
    nx: usize,
    ny: usize,
    /// CSR-style layout: indices of seeds in bucket b are
    /// `seeds[start[b]..start[b + 1]]`, buckets in row-major order.
    start: Vec<usize>,
    seeds: Vec<usize>,
}

impl BucketGrid {
    /// Build the cell list. Rejects seeds outside the open domain and
    /// duplicate seeds (closer than `1e-12·δr`).
    pub fn build(positions: &[Vec2], domain: &DomainBox, delta_r: f64) -> Result<Self, Error> {
        if !(delta_r > 0.0) || !delta_r.is_finite() {
            return Err(Error::InvalidResolution(delta_r));
        }
        let side = 2.0 * delta_r;
        let nx = (domain.width() / side).ceil().max(1.0) as usize;
        let ny = (domain.height() / side).ceil().max(1.0) as usize;

        let mut grid = BucketGrid {
            domain: *domain,
            side,
            nx,
            ny,
            start: vec![0; nx * ny + 1],
            seeds: Vec::with_capacity(positions.len()),
        };

        // counting sort into buckets
        let mut counts = vec![0usize; nx * ny];
        let mut cells = Vec::with_capacity(positions.len());
        for (i, &p) in positions.iter().enumerate() {
            if !domain.contains(p) || !p.is_finite() {
                return Err(Error::SeedOutsideDomain { index: i });
            }
            let b = grid.bucket_of(p);
            counts[b] += 1;
            cells.push(b);
        }
        let mut acc = 0;
        for (b, c) in counts.iter().enumerate() {
            grid.start[b] = acc;
            acc += c;
        }
        grid.start[nx * ny] = acc;
        grid.seeds = vec![0; positions.len()];
        let mut fill = grid.start.clone();
        for (i, &b) in cells.iter().enumerate() {
            grid.seeds[fill[b]] = i;
            fill[b] += 1;
        }

        grid.check_distinct(positions, delta_r)?;
        Ok(grid)
    }

    /// Voronoi generation needs distinct seeds; scan each seed's own and
    /// adjacent buckets (a pair closer than the threshold cannot be further
    /// apart than one bucket).
    fn check_distinct(&self, positions: &[Vec2], delta_r: f64) -> Result<(), Error> {
        let tol = 1e-12 * delta_r;
        let tol2 = tol * tol;
        for (i, &p) in positions.iter().enumerate() {
            let (bx, by) = self.bucket_coords(p);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let gx = bx as i64 + dx;
                    let gy = by as i64 + dy;
                    if gx < 0 || gy < 0 || gx >= self.nx as i64 || gy >= self.ny as i64 {
                        continue;
                    }
                    for &j in self.bucket(gx as usize, gy as usize) {
                        if j != i && (positions[j] - p).norm_sq() < tol2 {
                            let (a, b) = if i < j { (i, j) } else { (j, i) };
                            return Err(Error::DuplicateSeeds { first: a, second: b });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn bucket_counts(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn num_seeds(&self) -> usize {
        self.seeds.len()
    }

    #[inline]
    pub fn bucket_coords(&self, p: Vec2) -> (usize, usize) {
        let ix = ((p.x - self.domain.xmin) / self.side) as usize;
        let iy = ((p.y - self.domain.ymin) / self.side) as usize;
        (ix.min(self.nx - 1), iy.min(self.ny - 1))
    }

    #[inline]
    fn bucket_of(&self, p: Vec2) -> usize {
        let (ix, iy) = self.bucket_coords(p);
        iy * self.nx + ix
    }

    #[inline]
    pub fn bucket(&self, ix: usize, iy: usize) -> &[usize] {
        let b = iy * self.nx + ix;
        &self.seeds[self.start[b]..self.start[b + 1]]
    }

    /// Largest Chebyshev ring radius needed to cover the grid from (ix, iy).
    pub fn max_ring(&self, ix: usize, iy: usize) -> usize {
        ix.max(self.nx - 1 - ix).max(iy).max(self.ny - 1 - iy)
    }

    /// Visit the buckets of Chebyshev ring `ring` around (ix, iy) in
    /// row-major order, skipping buckets outside the grid.
    pub fn for_each_in_ring<F: FnMut(&[usize])>(
        &self,
        ix: usize,
        iy: usize,
        ring: usize,
        mut f: F,
    ) {
        let r = ring as i64;
        let cx = ix as i64;
        let cy = iy as i64;
        if ring == 0 {
            f(self.bucket(ix, iy));
            return;
        }
        for dy in -r..=r {
            let gy = cy + dy;
            if gy < 0 || gy >= self.ny as i64 {
                continue;
            }
            if dy.abs() == r {
                for dx in -r..=r {
                    let gx = cx + dx;
                    if gx < 0 || gx >= self.nx as i64 {
                        continue;
                    }
                    f(self.bucket(gx as usize, gy as usize));
                }
            } else {
                for dx in [-r, r] {
                    let gx = cx + dx;
                    if gx < 0 || gx >= self.nx as i64 {
                        continue;
                    }
                    f(self.bucket(gx as usize, gy as usize));
                }
            }
        }
    }

    /// Index of the seed nearest to `p` (exact: rings are expanded until the
    /// remaining ring distance exceeds the best candidate).
    pub fn nearest_seed(&self, positions: &[Vec2], p: Vec2) -> Option<usize> {
        if positions.is_empty() {
            return None;
        }
        let q = Vec2::new(
            p.x.clamp(self.domain.xmin, self.domain.xmax),
            p.y.clamp(self.domain.ymin, self.domain.ymax),
        );
        let (ix, iy) = self.bucket_coords(q);
        let mut best: Option<(usize, f64)> = None;
        for ring in 0..=self.max_ring(ix, iy) {
            if let Some((_, d2)) = best {
                // seeds in ring r are at least (r-1)·side away from q
                let lower = (ring as f64 - 1.0).max(0.0) * self.side;
                if lower * lower > d2 {
                    break;
                }
            }
            self.for_each_in_ring(ix, iy, ring, |bucket| {
                for &j in bucket {
                    let d2 = (positions[j] - p).norm_sq();
                    if best.map_or(true, |(_, bd)| d2 < bd) {
                        best = Some((j, d2));
                    }
                }
            });
        }
        best.map(|(j, _)| j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_seed_degenerate_grid() {
        let domain = DomainBox::unit();
        let grid = BucketGrid::build(&[Vec2::new(0.5, 0.5)], &domain, 0.5).unwrap();
        assert_eq!(grid.bucket_counts(), (1, 1));
        assert_eq!(grid.bucket(0, 0), &[0]);
    }

    #[test]
    fn bucket_side_is_twice_delta_r() {
        let domain = DomainBox::unit();
        let grid = BucketGrid::build(&[Vec2::new(0.1, 0.1)], &domain, 0.25).unwrap();
        assert_eq!(grid.side(), 0.5);
        assert_eq!(grid.bucket_counts(), (2, 2));
    }

    #[test]
    fn populations_partition_the_seeds() {
        let domain = DomainBox::unit();
        // deterministic pseudo-random fill
        let mut positions = Vec::new();
        let mut s = 1u64;
        for _ in 0..100 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = 0.01 + 0.98 * ((s >> 11) as f64 / (1u64 << 53) as f64);
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let y = 0.01 + 0.98 * ((s >> 11) as f64 / (1u64 << 53) as f64);
            positions.push(Vec2::new(x, y));
        }
        let grid = BucketGrid::build(&positions, &domain, 0.1).unwrap();
        let (nx, ny) = grid.bucket_counts();
        let mut total = 0;
        for iy in 0..ny {
            for ix in 0..nx {
                total += grid.bucket(ix, iy).len();
            }
        }
        assert_eq!(total, 100);
        // every seed is in the bucket containing its position
        for (i, &p) in positions.iter().enumerate() {
            let (ix, iy) = grid.bucket_coords(p);
            assert!(grid.bucket(ix, iy).contains(&i));
        }
    }

    #[test]
    fn rejects_seed_outside_domain() {
        let domain = DomainBox::unit();
        let err = BucketGrid::build(
            &[Vec2::new(0.5, 0.5), Vec2::new(1.5, 0.5)],
            &domain,
            0.25,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SeedOutsideDomain { index: 1 }));
        // a point exactly on the boundary is not strictly inside
        let err = BucketGrid::build(&[Vec2::new(0.0, 0.5)], &domain, 0.25).unwrap_err();
        assert!(matches!(err, Error::SeedOutsideDomain { index: 0 }));
    }

    #[test]
    fn rejects_duplicate_seeds() {
        let domain = DomainBox::unit();
        let p = Vec2::new(0.3, 0.7);
        let err = BucketGrid::build(&[p, Vec2::new(0.6, 0.1), p], &domain, 0.1).unwrap_err();
        assert!(matches!(err, Error::DuplicateSeeds { first: 0, second: 2 }));
    }

    #[test]
    fn half_open_bucket_assignment() {
        let domain = DomainBox::unit();
        // bucket boundary at x = 0.5 for δr = 0.25; the seed on it belongs
        // to the right bucket
        let grid = BucketGrid::build(&[Vec2::new(0.5, 0.25)], &domain, 0.25).unwrap();
        let (ix, iy) = grid.bucket_coords(Vec2::new(0.5, 0.25));
        assert_eq!((ix, iy), (1, 0));
    }

    #[test]
    fn nearest_seed_exactness() {
        let domain = DomainBox::unit();
        let mut positions = Vec::new();
        let mut s = 99u64;
        for _ in 0..60 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = 0.01 + 0.98 * ((s >> 11) as f64 / (1u64 << 53) as f64);
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let y = 0.01 + 0.98 * ((s >> 11) as f64 / (1u64 << 53) as f64);
            positions.push(Vec2::new(x, y));
        }
        let grid = BucketGrid::build(&positions, &domain, 0.08).unwrap();
        for q in [Vec2::new(0.5, 0.5), Vec2::new(0.02, 0.97), Vec2::new(0.99, 0.01)] {
            let got = grid.nearest_seed(&positions, q).unwrap();
            let want = (0..positions.len())
                .min_by(|&a, &b| {
                    (positions[a] - q)
                        .norm_sq()
                        .partial_cmp(&(positions[b] - q).norm_sq())
                        .unwrap()
                })
                .unwrap();
            assert_eq!(got, want);
        }
    }
}
