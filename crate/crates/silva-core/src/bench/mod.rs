//! Benchmark case definitions, analytic references, error norms, and
//! convergence drivers.

pub mod fixtures;

use crate::geom::{DomainBox, Vec2};
use crate::integrator::{
    energy_of, RunSink, RunSummary, Simulation, SnapshotCadence, SolverParams,
};
use crate::mesh::VoronoiMesh;
use crate::ops;
use crate::state::{BoundarySpec, ParticleState, WallCondition};
use crate::Error;

/// The four validation cases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseKind {
    TaylorGreen,
    Gresho,
    LidCavity,
    RayleighTaylor,
}

impl CaseKind {
    pub fn id(self) -> &'static str {
        match self {
            CaseKind::TaylorGreen => "taylor_green",
            CaseKind::Gresho => "gresho",
            CaseKind::LidCavity => "lid_cavity",
            CaseKind::RayleighTaylor => "rayleigh_taylor",
        }
    }

    pub fn from_id(id: &str) -> Result<Self, Error> {
        match id {
            "taylor_green" => Ok(CaseKind::TaylorGreen),
            "gresho" => Ok(CaseKind::Gresho),
            "lid_cavity" => Ok(CaseKind::LidCavity),
            "rayleigh_taylor" => Ok(CaseKind::RayleighTaylor),
            other => Err(Error::UnknownCase(other.to_string())),
        }
    }

    pub fn default_t_end(self) -> f64 {
        match self {
            CaseKind::TaylorGreen => 0.2,
            CaseKind::Gresho => 3.0,
            CaseKind::LidCavity => 10.0,
            CaseKind::RayleighTaylor => 1.0,
        }
    }

    pub fn default_reynolds(self) -> f64 {
        match self {
            CaseKind::TaylorGreen => 400.0,
            CaseKind::Gresho => f64::INFINITY,
            CaseKind::LidCavity => 100.0,
            CaseKind::RayleighTaylor => 420.0,
        }
    }
}

/// Seed arrangement of the initial tessellation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Seeding {
    /// Lattice with half-cell offset.
    Cartesian,
    /// Golden-angle spiral rejection-clipped to the domain (the unstructured
    /// arrangement used for convergence studies).
    Vogel,
    /// Cartesian lattice with reproducible uniform jitter, for irregular
    /// meshes on demand; amplitude 0.25·δr, seeded by `CaseSpec::seed`.
    Jittered,
}

/// A fully specified benchmark run.
#[derive(Clone, Copy, Debug)]
pub struct CaseSpec {
    pub kind: CaseKind,
    /// Seeds per side (per short side for the Rayleigh-Taylor rectangle).
    pub n_per_side: usize,
    pub reynolds: f64,
    pub t_end: f64,
    pub seeding: Seeding,
    /// RNG seed for `Seeding::Jittered`.
    pub seed: u64,
}

impl CaseSpec {
    pub fn new(kind: CaseKind, n_per_side: usize) -> Self {
        CaseSpec {
            kind,
            n_per_side,
            reynolds: kind.default_reynolds(),
            t_end: kind.default_t_end(),
            seeding: Seeding::Cartesian,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n_per_side < 4 {
            return Err(Error::InvalidConfig(format!(
                "N = {} is below the minimum of 4 seeds per side",
                self.n_per_side
            )));
        }
        if !(self.reynolds > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "Reynolds number must be positive or infinite, got {}",
                self.reynolds
            )));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidConfig(format!("invalid t_end {}", self.t_end)));
        }
        Ok(())
    }

    pub fn domain(&self) -> DomainBox {
        match self.kind {
            CaseKind::TaylorGreen | CaseKind::LidCavity => {
                DomainBox { xmin: -0.5, xmax: 0.5, ymin: -0.5, ymax: 0.5 }
            }
            CaseKind::Gresho => DomainBox::unit(),
            CaseKind::RayleighTaylor => DomainBox { xmin: 0.0, xmax: 1.0, ymin: 0.0, ymax: 2.0 },
        }
    }

    /// Nominal resolution: short domain side over N.
    pub fn delta_r(&self) -> f64 {
        let d = self.domain();
        d.width().min(d.height()) / self.n_per_side as f64
    }

    /// Kinematic viscosity from `Re = U₀L₀/ν` with unit reference scales.
    pub fn viscosity(&self) -> f64 {
        if self.reynolds.is_finite() {
            1.0 / self.reynolds
        } else {
            0.0
        }
    }

    pub fn boundary(&self) -> BoundarySpec {
        match self.kind {
            CaseKind::TaylorGreen | CaseKind::Gresho => {
                BoundarySpec::uniform(WallCondition::FreeSlip)
            }
            CaseKind::LidCavity => BoundarySpec {
                left: WallCondition::NoSlip,
                right: WallCondition::NoSlip,
                bottom: WallCondition::NoSlip,
                top: WallCondition::DirichletVelocity(Vec2::new(1.0, 0.0)),
                gravity: Vec2::ZERO,
            },
            // Fr = 1: unit gravity pointing down
            CaseKind::RayleighTaylor => {
                BoundarySpec::uniform(WallCondition::NoSlip).with_gravity(Vec2::new(0.0, -1.0))
            }
        }
    }

    /// Whether the case has a closed-form reference solution.
    pub fn has_reference(&self) -> bool {
        matches!(self.kind, CaseKind::TaylorGreen | CaseKind::Gresho)
    }
}

/// Rayleigh-Taylor interface: heavy fluid (ρ = 1.8) above
/// `φ(x) = 1 - 0.15 cos(2πx)`, light (ρ = 1) below; Atwood number 2/7.
pub fn rayleigh_taylor_interface(x: f64) -> f64 {
    1.0 - 0.15 * (2.0 * std::f64::consts::PI * x).cos()
}

pub const RT_RHO_HEAVY: f64 = 1.8;
pub const RT_RHO_LIGHT: f64 = 1.0;

/// Place seeds and sample the case's initial fields.
pub fn init_case(spec: &CaseSpec) -> Result<ParticleState, Error> {
    spec.validate()?;
    let domain = spec.domain();
    let positions = seed_positions(spec, &domain);
    let n = positions.len();

    let mut velocities = vec![Vec2::ZERO; n];
    let mut pressures = vec![0.0; n];
    let mut densities = vec![1.0; n];

    match spec.kind {
        CaseKind::TaylorGreen | CaseKind::Gresho => {
            for i in 0..n {
                let (v, p) = exact_solution(spec, 0.0, positions[i])?;
                velocities[i] = v;
                pressures[i] = p;
            }
        }
        CaseKind::LidCavity => {}
        CaseKind::RayleighTaylor => {
            for i in 0..n {
                densities[i] = if positions[i].y > rayleigh_taylor_interface(positions[i].x) {
                    RT_RHO_HEAVY
                } else {
                    RT_RHO_LIGHT
                };
            }
        }
    }

    Ok(ParticleState::new(positions, velocities, pressures, densities))
}

fn seed_positions(spec: &CaseSpec, domain: &DomainBox) -> Vec<Vec2> {
    let dr = spec.delta_r();
    match spec.seeding {
        Seeding::Cartesian => cartesian_seeds(domain, dr),
        Seeding::Vogel => vogel_seeds(domain, dr),
        Seeding::Jittered => jittered_seeds(domain, dr, spec.seed),
    }
}

fn cartesian_seeds(domain: &DomainBox, dr: f64) -> Vec<Vec2> {
    let nx = (domain.width() / dr).round() as usize;
    let ny = (domain.height() / dr).round() as usize;
    let hx = domain.width() / nx as f64;
    let hy = domain.height() / ny as f64;
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            out.push(Vec2::new(
                domain.xmin + (ix as f64 + 0.5) * hx,
                domain.ymin + (iy as f64 + 0.5) * hy,
            ));
        }
    }
    out
}

/// Golden-angle (Vogel) spiral centered on the domain, scaled to unit seed
/// density and rejection-clipped to the rectangle with a small wall margin.
fn vogel_seeds(domain: &DomainBox, dr: f64) -> Vec<Vec2> {
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    let c = dr / std::f64::consts::PI.sqrt();
    let center = domain.center();
    let cover = 0.5 * (domain.width().hypot(domain.height())) + 2.0 * dr;
    let margin = 0.2 * dr;
    let inner = DomainBox {
        xmin: domain.xmin + margin,
        xmax: domain.xmax - margin,
        ymin: domain.ymin + margin,
        ymax: domain.ymax - margin,
    };
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let r = c * (k as f64).sqrt();
        if r > cover {
            break;
        }
        let th = k as f64 * golden;
        let p = center + Vec2::new(r * th.cos(), r * th.sin());
        if inner.contains(p) || (p - center).norm() == 0.0 {
            out.push(p);
        }
        k += 1;
    }
    out
}

fn jittered_seeds(domain: &DomainBox, dr: f64, seed: u64) -> Vec<Vec2> {
    let mut rng = SplitMix64::new(seed);
    let amp = 0.25 * dr;
    cartesian_seeds(domain, dr)
        .into_iter()
        .map(|p| {
            let p = p + Vec2::new(amp * rng.next_symmetric(), amp * rng.next_symmetric());
            Vec2::new(
                p.x.clamp(domain.xmin + 1e-9 * dr, domain.xmax - 1e-9 * dr),
                p.y.clamp(domain.ymin + 1e-9 * dr, domain.ymax - 1e-9 * dr),
            )
        })
        .collect()
}

/// Small deterministic generator; hand-rolled so seeded runs stay
/// bit-reproducible independent of external crate versions.
struct SplitMix64(u64);

impl SplitMix64 {
    fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in (-1, 1).
    fn next_symmetric(&mut self) -> f64 {
        2.0 * ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64) - 1.0
    }
}

/// Closed-form reference `(v, p)` at time `t` and position `x`. Errors for
/// cases without one (lid cavity, Rayleigh-Taylor).
pub fn exact_solution(spec: &CaseSpec, t: f64, x: Vec2) -> Result<(Vec2, f64), Error> {
    use std::f64::consts::PI;
    match spec.kind {
        CaseKind::TaylorGreen => {
            // velocity decays as exp(-2tπ²/Re); the quadratic quantities
            // (pressure, energy) decay at twice that rate
            let decay = if spec.reynolds.is_finite() {
                (-2.0 * t * PI * PI / spec.reynolds).exp()
            } else {
                1.0
            };
            let v = Vec2::new(
                (PI * x.x).cos() * (PI * x.y).sin(),
                -(PI * x.x).sin() * (PI * x.y).cos(),
            ) * decay;
            let p = ((PI * x.x).sin().powi(2) + (PI * x.y).sin().powi(2) - 1.0) / 2.0
                * decay
                * decay;
            Ok((v, p))
        }
        CaseKind::Gresho => {
            // stationary: the initial triangular vortex is the solution
            let center = spec.domain().center();
            let d = x - center;
            let r = d.norm();
            let vphi = fixtures::gresho_velocity(r);
            let v = if r > 0.0 {
                Vec2::new(-d.y, d.x) * (vphi / r)
            } else {
                Vec2::ZERO
            };
            Ok((v, fixtures::gresho_pressure(r)))
        }
        CaseKind::LidCavity => Err(Error::NoReferenceSolution("lid_cavity")),
        CaseKind::RayleighTaylor => Err(Error::NoReferenceSolution("rayleigh_taylor")),
    }
}

/// Exact kinetic energy of the reference solution (Taylor-Green only): the
/// discrete initial energy is 1/4 and decays as `exp(-4tπ²/Re)`.
pub fn exact_energy(spec: &CaseSpec, t: f64) -> Option<f64> {
    use std::f64::consts::PI;
    match spec.kind {
        CaseKind::TaylorGreen => {
            let decay = if spec.reynolds.is_finite() {
                (-4.0 * t * PI * PI / spec.reynolds).exp()
            } else {
                1.0
            };
            Some(0.25 * decay)
        }
        _ => None,
    }
}

/// One row of a convergence table.
#[derive(Clone, Copy, Debug)]
pub struct ErrorEntry {
    pub n_per_side: usize,
    pub seeds: usize,
    pub l2_velocity: f64,
    /// Gauge-fixed: both fields are centered by their volume-weighted means
    /// before comparison.
    pub l2_pressure: f64,
    /// `|E - E_exact(t)| / E_exact(0)`.
    pub energy_error: f64,
    pub l2_divergence: f64,
}

/// Convergence study output: per-resolution entries plus fitted log-log
/// orders (positive = error decreasing with N).
#[derive(Clone, Debug, Default)]
pub struct ErrorReport {
    pub case: &'static str,
    pub entries: Vec<ErrorEntry>,
    pub velocity_order: f64,
    pub pressure_order: f64,
    pub divergence_order: f64,
}

/// Volume-weighted error norms against the case reference at `state.time`.
pub fn error_norms(
    state: &ParticleState,
    mesh: &VoronoiMesh,
    spec: &CaseSpec,
) -> Result<ErrorEntry, Error> {
    let t = state.time;
    let n = state.len();
    let mut v_exact = Vec::with_capacity(n);
    let mut p_exact = Vec::with_capacity(n);
    for i in 0..n {
        let (v, p) = exact_solution(spec, t, state.positions[i])?;
        v_exact.push(v);
        p_exact.push(p);
    }

    let total_vol = mesh.total_volume();
    let mean_of = |f: &dyn Fn(usize) -> f64| -> f64 {
        let mut s = 0.0;
        for (i, c) in mesh.cells().iter().enumerate() {
            s += c.volume * f(i);
        }
        s / total_vol
    };
    let p_mean = mean_of(&|i| state.pressures[i]);
    let pe_mean = mean_of(&|i| p_exact[i]);

    let mut v_err = 0.0;
    let mut p_err = 0.0;
    for (i, c) in mesh.cells().iter().enumerate() {
        v_err += c.volume * (state.velocities[i] - v_exact[i]).norm_sq();
        let dp = (state.pressures[i] - p_mean) - (p_exact[i] - pe_mean);
        p_err += c.volume * dp * dp;
    }

    let div = ops::weak_divergence_field(mesh, &state.velocities);
    let div_l2 = crate::integrator::l2_norm(mesh, &div);

    let energy = energy_of(mesh, &state.densities, &state.velocities);
    let energy_error = match exact_energy(spec, t) {
        Some(e_exact) => (energy - e_exact).abs() / exact_energy(spec, 0.0).unwrap(),
        None => f64::NAN,
    };

    Ok(ErrorEntry {
        n_per_side: 0,
        seeds: n,
        l2_velocity: v_err.sqrt(),
        l2_pressure: p_err.sqrt(),
        energy_error,
        l2_divergence: div_l2,
    })
}

/// Build and run one case to its final time, returning the simulation for
/// inspection. Snapshots/diagnostics flow through `sink`.
pub fn run_case(
    spec: &CaseSpec,
    params: &SolverParams,
    cadence: SnapshotCadence,
    sink: &mut dyn RunSink,
) -> Result<(Simulation, RunSummary), Error> {
    let state = init_case(spec)?;
    let mut sim = Simulation::new(
        state,
        spec.domain(),
        spec.delta_r(),
        spec.viscosity(),
        spec.boundary(),
        *params,
    )?;
    let summary = sim.run(spec.t_end, cadence, sink)?;
    Ok((sim, summary))
}

/// Run the case at each resolution and fit log-log convergence orders.
pub fn convergence_study(
    base: &CaseSpec,
    resolutions: &[usize],
    params: &SolverParams,
    mut per_run: Option<&mut dyn FnMut(usize, &Simulation, &ErrorEntry)>,
) -> Result<ErrorReport, Error> {
    if resolutions.len() < 2 {
        return Err(Error::InvalidConfig(
            "a convergence study needs at least two resolutions".into(),
        ));
    }
    let mut report = ErrorReport { case: base.kind.id(), ..ErrorReport::default() };
    for &n in resolutions {
        let spec = CaseSpec { n_per_side: n, ..*base };
        let mut sink = crate::integrator::MemorySink::default();
        let (sim, _) = run_case(&spec, params, SnapshotCadence::Never, &mut sink)?;
        let mut entry = error_norms(&sim.state, &sim.mesh, &spec)?;
        entry.n_per_side = n;
        if let Some(cb) = per_run.as_deref_mut() {
            cb(n, &sim, &entry);
        }
        report.entries.push(entry);
    }
    report.velocity_order = fit_order(&report.entries, |e| e.l2_velocity);
    report.pressure_order = fit_order(&report.entries, |e| e.l2_pressure);
    report.divergence_order = fit_order(&report.entries, |e| e.l2_divergence);
    Ok(report)
}

/// Least-squares slope of `log(err)` against `log(N)`, negated so that a
/// positive order means the error shrinks with refinement.
fn fit_order(entries: &[ErrorEntry], f: impl Fn(&ErrorEntry) -> f64) -> f64 {
    let pts: Vec<(f64, f64)> = entries
        .iter()
        .filter(|e| f(e) > 0.0)
        .map(|e| ((e.n_per_side as f64).ln(), f(e).ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    -((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

/// Velocity sampled at an arbitrary point: locate the containing cell
/// (nearest seed) and reconstruct linearly with the cell's strong gradient.
/// Points on a Dirichlet/no-slip wall return the imposed wall velocity.
pub fn sample_velocity(
    state: &ParticleState,
    mesh: &VoronoiMesh,
    boundary: &BoundarySpec,
    point: Vec2,
) -> Vec2 {
    let domain = mesh.domain();
    let eps = 1e-9 * domain.width().min(domain.height());
    for w in crate::geom::Wall::ALL {
        if domain.wall_distance(point, w).abs() <= eps {
            if let Some(vw) = boundary.wall(w).wall_velocity() {
                return vw;
            }
        }
    }
    let i = match mesh.cell_containing(point) {
        Some(i) => i,
        None => return Vec2::ZERO,
    };
    let u: Vec<f64> = state.velocities.iter().map(|v| v.x).collect();
    let v: Vec<f64> = state.velocities.iter().map(|v| v.y).collect();
    let gu = ops::strong_gradient(mesh, &u, i);
    let gv = ops::strong_gradient(mesh, &v, i);
    let d = point - mesh.position(i);
    Vec2::new(
        state.velocities[i].x + gu.dot(d),
        state.velocities[i].y + gv.dot(d),
    )
}

/// Cavity centerline profiles at the Ghia ordinates (fixture coordinates in
/// [0,1] are mapped onto the domain): returns `(y, u)` along the vertical
/// centerline and `(x, v)` along the horizontal one.
pub fn cavity_centerlines(
    state: &ParticleState,
    mesh: &VoronoiMesh,
    boundary: &BoundarySpec,
) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let domain = mesh.domain();
    let cx = domain.center().x;
    let cy = domain.center().y;
    let u_line = fixtures::GHIA_RE100_U
        .iter()
        .map(|&(yf, _)| {
            let y = domain.ymin + yf * domain.height();
            let vel = sample_velocity(state, mesh, boundary, Vec2::new(cx, y));
            (yf, vel.x)
        })
        .collect();
    let v_line = fixtures::GHIA_RE100_V
        .iter()
        .map(|&(xf, _)| {
            let x = domain.xmin + xf * domain.width();
            let vel = sample_velocity(state, mesh, boundary, Vec2::new(x, cy));
            (xf, vel.y)
        })
        .collect();
    (u_line, v_line)
}
