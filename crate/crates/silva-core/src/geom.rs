//! Plane geometry primitives: 2-D vectors, the rectangular domain, and the
//! labeled convex polygon used by the Voronoi cell builder.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// 2-D vector / point with `f64` components.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

/// One of the four walls of the rectangular domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wall {
    Left,
    Right,
    Bottom,
    Top,
}

impl Wall {
    pub const ALL: [Wall; 4] = [Wall::Left, Wall::Right, Wall::Bottom, Wall::Top];

    /// Outward unit normal of the wall.
    pub fn normal(self) -> Vec2 {
        match self {
            Wall::Left => Vec2::new(-1.0, 0.0),
            Wall::Right => Vec2::new(1.0, 0.0),
            Wall::Bottom => Vec2::new(0.0, -1.0),
            Wall::Top => Vec2::new(0.0, 1.0),
        }
    }
}

/// Axis-aligned rectangular domain. The scheme requires a convex domain;
/// everything here is restricted to rectangles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainBox {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl DomainBox {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self, crate::Error> {
        if !(xmax > xmin && ymax > ymin)
            || !(xmin.is_finite() && xmax.is_finite() && ymin.is_finite() && ymax.is_finite())
        {
            return Err(crate::Error::InvalidDomain);
        }
        Ok(DomainBox { xmin, xmax, ymin, ymax })
    }

    pub fn unit() -> Self {
        DomainBox { xmin: 0.0, xmax: 1.0, ymin: 0.0, ymax: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x > self.xmin && p.x < self.xmax && p.y > self.ymin && p.y < self.ymax
    }

    /// Distance from an interior point to a wall line.
    pub fn wall_distance(&self, p: Vec2, wall: Wall) -> f64 {
        match wall {
            Wall::Left => p.x - self.xmin,
            Wall::Right => self.xmax - p.x,
            Wall::Bottom => p.y - self.ymin,
            Wall::Top => self.ymax - p.y,
        }
    }

    /// Corner vertices in counter-clockwise order, starting at (xmin, ymin).
    pub fn corners(&self) -> [Vec2; 4] {
        [
            Vec2::new(self.xmin, self.ymin),
            Vec2::new(self.xmax, self.ymin),
            Vec2::new(self.xmax, self.ymax),
            Vec2::new(self.xmin, self.ymax),
        ]
    }
}

/// Provenance of a polygon edge: either a domain wall or the perpendicular
/// bisector against another seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeSource {
    Wall(Wall),
    Seed(usize),
}

/// Convex polygon stored as counter-clockwise vertices, with one provenance
/// label per edge (`labels[k]` belongs to the edge `verts[k] -> verts[k+1]`).
///
/// Half-plane cuts are single-pass Sutherland–Hodgman clips; convex input
/// stays convex and each cut inserts at most one new edge.
#[derive(Clone, Debug)]
pub struct ClipPolygon {
    verts: Vec<Vec2>,
    labels: Vec<EdgeSource>,
    scratch_v: Vec<Vec2>,
    scratch_l: Vec<EdgeSource>,
}

impl ClipPolygon {
    pub fn new() -> Self {
        ClipPolygon {
            verts: Vec::with_capacity(16),
            labels: Vec::with_capacity(16),
            scratch_v: Vec::with_capacity(16),
            scratch_l: Vec::with_capacity(16),
        }
    }

    /// Reset to the full domain rectangle.
    pub fn reset_to_domain(&mut self, domain: &DomainBox) {
        self.verts.clear();
        self.labels.clear();
        self.verts.extend_from_slice(&domain.corners());
        self.labels.extend_from_slice(&[
            EdgeSource::Wall(Wall::Bottom),
            EdgeSource::Wall(Wall::Right),
            EdgeSource::Wall(Wall::Top),
            EdgeSource::Wall(Wall::Left),
        ]);
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.verts
    }

    pub fn labels(&self) -> &[EdgeSource] {
        &self.labels
    }

    /// Clip by the perpendicular bisector between `xi` (kept side) and `xj`,
    /// labeling the new edge as `Seed(j)`. Points on the bisector count as
    /// removed (Voronoi cells are open). Returns false if nothing was cut.
    pub fn clip_bisector(&mut self, xi: Vec2, xj: Vec2, j: usize) -> bool {
        let mid = 0.5 * (xi + xj);
        let dir = xj - xi;
        let n = self.verts.len();
        if n == 0 {
            return false;
        }

        // f(p) < 0 on the kept (xi) side; scan first so the common
        // no-op case costs nothing
        let mut any_out = false;
        let mut all_out = true;
        for v in &self.verts {
            if (*v - mid).dot(dir) >= 0.0 {
                any_out = true;
            } else {
                all_out = false;
            }
        }
        if !any_out {
            return false;
        }
        if all_out {
            // cannot happen for a true Voronoi clip (xi is always kept) but
            // keep the polygon well-defined
            self.verts.clear();
            self.labels.clear();
            return true;
        }

        self.scratch_v.clear();
        self.scratch_l.clear();
        for k in 0..n {
            let a = self.verts[k];
            let b = self.verts[(k + 1) % n];
            let lab = self.labels[k];
            let fa = (a - mid).dot(dir);
            let fb = (b - mid).dot(dir);
            let a_in = fa < 0.0;
            let b_in = fb < 0.0;
            if a_in {
                self.scratch_v.push(a);
                self.scratch_l.push(lab);
                if !b_in {
                    // exit point: the edge leaving it runs along the cut line
                    let p = intersect(a, b, fa, fb);
                    self.scratch_v.push(p);
                    self.scratch_l.push(EdgeSource::Seed(j));
                }
            } else if b_in {
                // entry point: the old edge continues from it
                let p = intersect(a, b, fa, fb);
                self.scratch_v.push(p);
                self.scratch_l.push(lab);
            }
        }
        std::mem::swap(&mut self.verts, &mut self.scratch_v);
        std::mem::swap(&mut self.labels, &mut self.scratch_l);
        true
    }

    /// Max distance from `p` to any vertex.
    pub fn radius_from(&self, p: Vec2) -> f64 {
        let mut r2: f64 = 0.0;
        for v in &self.verts {
            r2 = r2.max((*v - p).norm_sq());
        }
        r2.sqrt()
    }

    /// Signed area (positive for counter-clockwise orientation).
    pub fn area(&self) -> f64 {
        let n = self.verts.len();
        let mut a = 0.0;
        for k in 0..n {
            let p = self.verts[k];
            let q = self.verts[(k + 1) % n];
            a += p.x * q.y - q.x * p.y;
        }
        0.5 * a
    }

    /// Area centroid via the standard polygon formula.
    pub fn centroid(&self) -> Vec2 {
        let n = self.verts.len();
        let mut a = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for k in 0..n {
            let p = self.verts[k];
            let q = self.verts[(k + 1) % n];
            let cross = p.x * q.y - q.x * p.y;
            a += cross;
            cx += (p.x + q.x) * cross;
            cy += (p.y + q.y) * cross;
        }
        a *= 0.5;
        Vec2::new(cx / (6.0 * a), cy / (6.0 * a))
    }
}

impl Default for ClipPolygon {
    fn default() -> Self {
        Self::new()
    }
}

#[inline]
fn intersect(a: Vec2, b: Vec2, fa: f64, fb: f64) -> Vec2 {
    // endpoints exactly on the line map to themselves, keeping repeated
    // clips by the same bisector bitwise stable
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let t = fa / (fa - fb);
    a + t * (b - a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_rejects_degenerate_box() {
        assert!(DomainBox::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(DomainBox::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(DomainBox::new(0.0, 1.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn bisector_clip_of_unit_square() {
        let domain = DomainBox::unit();
        let mut poly = ClipPolygon::new();
        poly.reset_to_domain(&domain);
        let xi = Vec2::new(0.25, 0.5);
        let xj = Vec2::new(0.75, 0.5);
        assert!(poly.clip_bisector(xi, xj, 1));
        assert!((poly.area() - 0.5).abs() < 1e-14);
        // vertices must all lie in [0, 0.5] x [0, 1]
        for v in poly.vertices() {
            assert!(v.x >= -1e-14 && v.x <= 0.5 + 1e-14);
        }
        // exactly one edge is labeled Seed(1)
        let seed_edges = poly
            .labels()
            .iter()
            .filter(|l| matches!(l, EdgeSource::Seed(1)))
            .count();
        assert_eq!(seed_edges, 1);
    }

    #[test]
    fn noop_clip_leaves_polygon_untouched() {
        let domain = DomainBox::unit();
        let mut poly = ClipPolygon::new();
        poly.reset_to_domain(&domain);
        let before = poly.vertices().to_vec();
        // remote seed whose bisector misses the square entirely
        assert!(!poly.clip_bisector(Vec2::new(0.5, 0.5), Vec2::new(5.0, 0.5), 1));
        assert_eq!(poly.vertices(), &before[..]);
    }

    #[test]
    fn centroid_of_rectangle() {
        let domain = DomainBox::new(1.0, 3.0, -1.0, 0.0).unwrap();
        let mut poly = ClipPolygon::new();
        poly.reset_to_domain(&domain);
        let c = poly.centroid();
        assert!((c.x - 2.0).abs() < 1e-14);
        assert!((c.y + 0.5).abs() < 1e-14);
        assert!((poly.area() - 2.0).abs() < 1e-14);
    }
}
