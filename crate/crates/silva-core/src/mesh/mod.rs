//! Moving Voronoi tessellation of a rectangular domain.
//!
//! Cells are built directly (no Delaunay dual): each cell starts as the full
//! domain rectangle and is cut by perpendicular-bisector half-planes against
//! nearby seeds, visited bucket ring by bucket ring until every remaining
//! seed is provably too remote to clip anything. Regeneration warm-starts
//! from the previous step's neighbor sets.

mod bucket;
pub mod oracle;

pub use bucket::BucketGrid;

use rayon::prelude::*;

use crate::geom::{ClipPolygon, DomainBox, EdgeSource, Vec2, Wall};
use crate::Error;

/// Relative length threshold under which a facet produced by near-cocircular
/// seeds is dropped from the facet list (its vertices are retained).
pub const DEGENERATE_FACET_REL: f64 = 1e-12;

/// What lies on the other side of a facet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FacetNeighbor {
    /// Another cell: seed index and inter-seed distance `r_ij`.
    Seed { index: usize, distance: f64 },
    /// A domain wall.
    Wall(Wall),
}

/// One interface of a Voronoi cell.
#[derive(Clone, Copy, Debug)]
pub struct FacetGeom {
    pub neighbor: FacetNeighbor,
    /// Facet length `|Γ_ij|`.
    pub length: f64,
    /// Facet midpoint `m_ij` (the centroid of the segment).
    pub midpoint: Vec2,
    /// Outward unit normal; for seed facets this is `-x_ij / r_ij`.
    pub normal: Vec2,
}

impl FacetGeom {
    pub fn seed_index(&self) -> Option<usize> {
        match self.neighbor {
            FacetNeighbor::Seed { index, .. } => Some(index),
            FacetNeighbor::Wall(_) => None,
        }
    }
}

/// A single Voronoi cell: convex polygon plus the derived geometric
/// quantities the discrete operators consume.
#[derive(Clone, Debug)]
pub struct VoronoiCell {
    /// Generator (seed) index.
    pub index: usize,
    /// Ordered polygon vertices, counter-clockwise.
    pub vertices: Vec<Vec2>,
    pub facets: Vec<FacetGeom>,
    /// Cell measure `|ω_i|` (area in 2-D).
    pub volume: f64,
    /// Area centroid `c_i`.
    pub centroid: Vec2,
    /// Surface element `S_i`: the wall part of the boundary normal integral
    /// (zero vector for interior cells; equals `-Σ_j |Γ_ij| n_ij` by closure).
    pub surface: Vec2,
    /// Max distance from the generator to a vertex.
    pub radius: f64,
}

impl VoronoiCell {
    pub fn is_interior(&self) -> bool {
        self.facets
            .iter()
            .all(|f| matches!(f.neighbor, FacetNeighbor::Seed { .. }))
    }
}

/// The complete tessellation at one time level.
#[derive(Clone, Debug)]
pub struct VoronoiMesh {
    domain: DomainBox,
    delta_r: f64,
    positions: Vec<Vec2>,
    cells: Vec<VoronoiCell>,
    grid: BucketGrid,
    neighbors: Vec<Vec<usize>>,
}

/// Build the cell list for a seed set. Exposed separately so callers can
/// inspect bucket populations; `build_mesh` performs this internally.
pub fn build_bucket_grid(
    positions: &[Vec2],
    domain: &DomainBox,
    delta_r: f64,
) -> Result<BucketGrid, Error> {
    BucketGrid::build(positions, domain, delta_r)
}

/// Build one exact Voronoi cell via the localized bucket sweep.
///
/// `warm` optionally pre-clips by the given neighbor set (normally last
/// step's neighbors of `i`) before the sweep; the sweep then skips those
/// seeds. The result equals the cold build: the stopping rule only discards
/// seeds that provably cannot cut the current polygon.
pub fn build_cell(
    i: usize,
    positions: &[Vec2],
    grid: &BucketGrid,
    domain: &DomainBox,
    warm: Option<&[usize]>,
) -> VoronoiCell {
    let mut poly = ClipPolygon::new();
    build_cell_with(&mut poly, i, positions, grid, domain, warm)
}

fn build_cell_with(
    poly: &mut ClipPolygon,
    i: usize,
    positions: &[Vec2],
    grid: &BucketGrid,
    domain: &DomainBox,
    warm: Option<&[usize]>,
) -> VoronoiCell {
    let xi = positions[i];
    poly.reset_to_domain(domain);

    let warm = warm.unwrap_or(&[]);
    for &j in warm {
        if j != i && j < positions.len() {
            poly.clip_bisector(xi, positions[j], j);
        }
    }

    let (bx, by) = grid.bucket_coords(xi);
    let side = grid.side();
    let mut radius = poly.radius_from(xi);
    for ring in 0..=grid.max_ring(bx, by) {
        // Every seed in ring k >= 2 sits at least (k-1)·side from the home
        // bucket (minimal rectangle-to-rectangle distance), hence from x_i.
        // Once the cell radius drops below half of that, no remaining seed
        // can cut the polygon.
        if ring >= 2 && radius < 0.5 * ((ring - 1) as f64) * side {
            break;
        }
        let mut changed = false;
        grid.for_each_in_ring(bx, by, ring, |bucket| {
            for &j in bucket {
                if j == i || warm.contains(&j) {
                    continue;
                }
                changed |= poly.clip_bisector(xi, positions[j], j);
            }
        });
        if changed {
            radius = poly.radius_from(xi);
        }
    }

    finalize_cell(i, xi, poly, grid.side() * 0.5, positions)
}

/// Turn a fully clipped polygon into a `VoronoiCell`: extract facets (drop
/// degenerate ones), accumulate the wall surface element, and evaluate the
/// volume, centroid and radius.
pub(crate) fn finalize_cell(
    i: usize,
    xi: Vec2,
    poly: &ClipPolygon,
    delta_r: f64,
    positions: &[Vec2],
) -> VoronoiCell {
    let verts = poly.vertices();
    let labels = poly.labels();
    let n = verts.len();
    let drop_tol = DEGENERATE_FACET_REL * delta_r;

    let mut facets = Vec::with_capacity(n);
    let mut surface = Vec2::ZERO;
    for k in 0..n {
        let a = verts[k];
        let b = verts[(k + 1) % n];
        let e = b - a;
        if let EdgeSource::Wall(_) = labels[k] {
            // (e.y, -e.x) is outward-normal times edge length for CCW order;
            // summed over wall edges only (the full closed loop sums to zero)
            surface += Vec2::new(e.y, -e.x);
        }
        let length = e.norm();
        if length < drop_tol {
            continue;
        }
        let midpoint = 0.5 * (a + b);
        match labels[k] {
            EdgeSource::Wall(w) => facets.push(FacetGeom {
                neighbor: FacetNeighbor::Wall(w),
                length,
                midpoint,
                normal: w.normal(),
            }),
            EdgeSource::Seed(j) => {
                let distance = (positions[j] - xi).norm();
                facets.push(FacetGeom {
                    neighbor: FacetNeighbor::Seed { index: j, distance },
                    length,
                    midpoint,
                    normal: (positions[j] - xi) * (1.0 / distance),
                });
            }
        }
    }

    VoronoiCell {
        index: i,
        vertices: verts.to_vec(),
        facets,
        volume: poly.area(),
        centroid: poly.centroid(),
        surface,
        radius: poly.radius_from(xi),
    }
}

/// Build (or regenerate) the full tessellation. Cells are constructed in
/// parallel, each worker writing only its own slot, so the result is
/// identical for any thread count. `previous` supplies last step's neighbor
/// sets for the warm start.
pub fn build_mesh(
    positions: &[Vec2],
    domain: &DomainBox,
    delta_r: f64,
    previous: Option<&VoronoiMesh>,
) -> Result<VoronoiMesh, Error> {
    let grid = BucketGrid::build(positions, domain, delta_r)?;
    let warm_src = previous.filter(|m| m.len() == positions.len());

    let cells: Vec<VoronoiCell> = (0..positions.len())
        .into_par_iter()
        .map_init(ClipPolygon::new, |poly, i| {
            let warm = warm_src.map(|m| m.neighbors(i));
            build_cell_with(poly, i, positions, &grid, domain, warm)
        })
        .collect();

    let neighbors: Vec<Vec<usize>> = cells
        .par_iter()
        .map(|c| c.facets.iter().filter_map(FacetGeom::seed_index).collect())
        .collect();

    let mesh = VoronoiMesh {
        domain: *domain,
        delta_r,
        positions: positions.to_vec(),
        cells,
        grid,
        neighbors,
    };
    debug_assert!(
        (mesh.total_volume() - domain.area()).abs() <= 1e-9 * domain.area(),
        "tessellation volume defect: {:e}",
        (mesh.total_volume() - domain.area()).abs()
    );
    Ok(mesh)
}

impl VoronoiMesh {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn delta_r(&self) -> f64 {
        self.delta_r
    }

    pub fn position(&self, i: usize) -> Vec2 {
        self.positions[i]
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn cell(&self, i: usize) -> &VoronoiCell {
        &self.cells[i]
    }

    pub fn cells(&self) -> &[VoronoiCell] {
        &self.cells
    }

    pub fn grid(&self) -> &BucketGrid {
        &self.grid
    }

    /// Facet neighbor indices of cell `i` (this step's topology).
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn total_volume(&self) -> f64 {
        self.cells.iter().map(|c| c.volume).sum()
    }

    /// Index of the cell containing `p` (the nearest seed, by definition).
    pub fn cell_containing(&self, p: Vec2) -> Option<usize> {
        self.grid.nearest_seed(&self.positions, p)
    }
}

/// Closed-form derivative of the cell volume `|ω_i|` with respect to seed
/// position `x_j`. For `j != i` this is `-(|Γ_ij|/r_ij)(m_ij - x_j)` (zero if
/// the cells share no facet); for `j == i` it is
/// `-Σ_{j≠i} ∂|ω_i|/∂x_j - S_i`.
pub fn cell_volume_gradient(mesh: &VoronoiMesh, i: usize, j: usize) -> Vec2 {
    let cell = mesh.cell(i);
    if i == j {
        let mut sum = Vec2::ZERO;
        for f in &cell.facets {
            if let FacetNeighbor::Seed { index, distance } = f.neighbor {
                sum += (f.length / distance) * (f.midpoint - mesh.position(index));
            }
        }
        // sum holds -Σ ∂|ω_i|/∂x_j
        sum - cell.surface
    } else {
        for f in &cell.facets {
            if let FacetNeighbor::Seed { index, distance } = f.neighbor {
                if index == j {
                    return -(f.length / distance) * (f.midpoint - mesh.position(j));
                }
            }
        }
        Vec2::ZERO
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> DomainBox {
        DomainBox::unit()
    }

    #[test]
    fn single_seed_cell_is_the_domain() {
        let positions = vec![Vec2::new(0.4, 0.6)];
        let mesh = build_mesh(&positions, &unit(), 0.5, None).unwrap();
        let c = mesh.cell(0);
        assert_eq!(c.vertices.len(), 4);
        assert!((c.volume - 1.0).abs() < 1e-14);
        assert!(c.surface.norm() < 1e-14);
        assert_eq!(c.facets.len(), 4);
        assert!(c.facets.iter().all(|f| matches!(f.neighbor, FacetNeighbor::Wall(_))));
    }

    #[test]
    fn two_seed_mesh_matches_hand_values() {
        let positions = vec![Vec2::new(0.25, 0.5), Vec2::new(0.75, 0.5)];
        let mesh = build_mesh(&positions, &unit(), 0.25, None).unwrap();
        let c0 = mesh.cell(0);
        assert!((c0.volume - 0.5).abs() < 1e-14);
        let seed_facets: Vec<&FacetGeom> = c0
            .facets
            .iter()
            .filter(|f| f.seed_index().is_some())
            .collect();
        assert_eq!(seed_facets.len(), 1);
        let f = seed_facets[0];
        assert!((f.length - 1.0).abs() < 1e-14);
        assert!((f.midpoint - Vec2::new(0.5, 0.5)).norm() < 1e-14);
        match f.neighbor {
            FacetNeighbor::Seed { index, distance } => {
                assert_eq!(index, 1);
                assert!((distance - 0.5).abs() < 1e-14);
            }
            _ => unreachable!(),
        }
        // n_ij = -x_ij / r_ij
        assert!((f.normal - Vec2::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn volume_gradient_hand_value() {
        // ∂|ω_0|/∂x_1 = -(1/0.5)·((0.5,0.5)-(0.75,0.5)) = (0.5, 0)
        let positions = vec![Vec2::new(0.25, 0.5), Vec2::new(0.75, 0.5)];
        let mesh = build_mesh(&positions, &unit(), 0.25, None).unwrap();
        let g = cell_volume_gradient(&mesh, 0, 1);
        assert!((g - Vec2::new(0.5, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn volume_gradient_of_non_neighbor_is_zero() {
        let positions = vec![
            Vec2::new(0.1, 0.5),
            Vec2::new(0.5, 0.5),
            Vec2::new(0.9, 0.5),
        ];
        let mesh = build_mesh(&positions, &unit(), 0.2, None).unwrap();
        assert_eq!(cell_volume_gradient(&mesh, 0, 2), Vec2::ZERO);
    }

    #[test]
    fn lattice_interior_cells_are_squares() {
        let mut positions = Vec::new();
        for iy in 0..4 {
            for ix in 0..4 {
                positions.push(Vec2::new((ix as f64 + 0.5) * 0.25, (iy as f64 + 0.5) * 0.25));
            }
        }
        let mesh = build_mesh(&positions, &unit(), 0.25, None).unwrap();
        for c in mesh.cells() {
            assert!((c.volume - 0.0625).abs() < 1e-13);
        }
        // interior cell (1,1) -> index 5: a 0.25 x 0.25 square
        let c = mesh.cell(5);
        assert!(c.is_interior());
        for v in &c.vertices {
            assert!((v.x - 0.25).abs() < 1e-13 || (v.x - 0.5).abs() < 1e-13);
            assert!((v.y - 0.25).abs() < 1e-13 || (v.y - 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn normals_satisfy_seed_geometry() {
        let positions = crate::testutil::lattice_jittered(7, 0.003, 7);
        let mesh = build_mesh(&positions, &unit(), 1.0 / 7.0, None).unwrap();
        for (i, c) in mesh.cells().iter().enumerate() {
            for f in &c.facets {
                if let FacetNeighbor::Seed { index, distance } = f.neighbor {
                    let xij = mesh.position(i) - mesh.position(index);
                    // n_ij · (x_j - x_i) = r_ij
                    let d = f.normal.dot(-xij);
                    assert!((d - distance).abs() < 1e-12 * distance);
                }
            }
        }
    }

    #[test]
    fn mesh_is_deterministic_across_thread_counts() {
        let positions = crate::testutil::lattice_jittered(12, 0.004, 12);
        let build = || build_mesh(&positions, &unit(), 1.0 / 12.0, None).unwrap();
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let m1 = pool1.install(build);
        let m4 = pool4.install(build);
        for (a, b) in m1.cells().iter().zip(m4.cells().iter()) {
            assert_eq!(a.vertices.len(), b.vertices.len());
            for (va, vb) in a.vertices.iter().zip(b.vertices.iter()) {
                assert_eq!(va.x.to_bits(), vb.x.to_bits());
                assert_eq!(va.y.to_bits(), vb.y.to_bits());
            }
            assert_eq!(a.volume.to_bits(), b.volume.to_bits());
        }
    }
}
