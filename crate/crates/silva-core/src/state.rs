//! Per-seed physical state and boundary data.

use crate::geom::{Vec2, Wall};

/// The full Lagrangian state: one entry per seed across all fields.
/// Masses are fixed at initialization and never change; reference volumes
/// are the initial cell volumes (current geometric volumes are what the
/// operators use, and the drift between the two is a reported diagnostic).
#[derive(Clone, Debug)]
pub struct ParticleState {
    pub positions: Vec<Vec2>,
    pub velocities: Vec<Vec2>,
    pub pressures: Vec<f64>,
    pub densities: Vec<f64>,
    pub masses: Vec<f64>,
    pub ref_volumes: Vec<f64>,
    pub time: f64,
    pub step: u64,
}

impl ParticleState {
    /// State with the given positions and fields, masses and reference
    /// volumes left empty until the first mesh exists.
    pub fn new(
        positions: Vec<Vec2>,
        velocities: Vec<Vec2>,
        pressures: Vec<f64>,
        densities: Vec<f64>,
    ) -> Self {
        let n = positions.len();
        assert_eq!(velocities.len(), n);
        assert_eq!(pressures.len(), n);
        assert_eq!(densities.len(), n);
        ParticleState {
            positions,
            velocities,
            pressures,
            densities,
            masses: Vec::new(),
            ref_volumes: Vec::new(),
            time: 0.0,
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn max_speed(&self) -> f64 {
        self.velocities
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Whether the density field is uniform (single-phase solve path).
    pub fn uniform_density(&self) -> bool {
        self.densities
            .windows(2)
            .all(|w| w[0] == w[1])
    }
}

/// Viscous wall condition. `Dirichlet(v)` imposes the wall velocity through
/// a mirror cell with `v' = 2 v_D - v_i`; no-slip is the `v_D = 0` case and
/// free-slip walls exert no viscous flux at all (no-penetration is enforced
/// by the pressure projection for every wall type).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WallCondition {
    FreeSlip,
    NoSlip,
    DirichletVelocity(Vec2),
}

impl WallCondition {
    /// Mirror velocity seen across the wall from a cell moving at `v`,
    /// `None` for free-slip (no viscous wall flux).
    pub fn mirror_velocity(self, v: Vec2) -> Option<Vec2> {
        match self {
            WallCondition::FreeSlip => None,
            WallCondition::NoSlip => Some(-v),
            WallCondition::DirichletVelocity(vd) => Some(2.0 * vd - v),
        }
    }

    /// The imposed wall velocity, if any.
    pub fn wall_velocity(self) -> Option<Vec2> {
        match self {
            WallCondition::FreeSlip => None,
            WallCondition::NoSlip => Some(Vec2::ZERO),
            WallCondition::DirichletVelocity(vd) => Some(vd),
        }
    }
}

/// One condition per wall plus an optional body force.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySpec {
    pub left: WallCondition,
    pub right: WallCondition,
    pub bottom: WallCondition,
    pub top: WallCondition,
    pub gravity: Vec2,
}

impl BoundarySpec {
    pub fn uniform(cond: WallCondition) -> Self {
        BoundarySpec {
            left: cond,
            right: cond,
            bottom: cond,
            top: cond,
            gravity: Vec2::ZERO,
        }
    }

    pub fn with_gravity(mut self, g: Vec2) -> Self {
        self.gravity = g;
        self
    }

    pub fn wall(&self, w: Wall) -> WallCondition {
        match w {
            Wall::Left => self.left,
            Wall::Right => self.right,
            Wall::Bottom => self.bottom,
            Wall::Top => self.top,
        }
    }
}
