//! `--check` mode: run the configured case for a dozen steps and assert the
//! module invariants on every step, printing one line per invariant.

use silva_core::bench::init_case;
use silva_core::integrator::Simulation;
use silva_core::mesh::FacetNeighbor;
use silva_core::pressure::{assemble_b, assemble_rhs};
use silva_core::state::WallCondition;

use crate::config::SimConfig;

pub struct CheckReport {
    pub lines: Vec<String>,
    pub failures: usize,
}

pub fn run_check(cfg: &SimConfig, steps: usize) -> anyhow::Result<CheckReport> {
    let spec = cfg.case_spec();
    let state = init_case(&spec)?;
    let mut sim = Simulation::new(
        state,
        spec.domain(),
        spec.delta_r(),
        spec.viscosity(),
        spec.boundary(),
        cfg.solver_params(),
    )?;

    let boundary = *sim.boundary();
    let has_moving_wall = [boundary.left, boundary.right, boundary.bottom, boundary.top]
        .iter()
        .any(|w| matches!(w, WallCondition::DirichletVelocity(v) if *v != silva_core::Vec2::ZERO));
    let monotone_energy_applies =
        !has_moving_wall && boundary.gravity == silva_core::Vec2::ZERO;

    let mut report = CheckReport { lines: Vec::new(), failures: 0 };
    let mut record = |name: &str, ok: bool, detail: String| {
        report
            .lines
            .push(format!("[{}] {name}: {detail}", if ok { "OK" } else { "FAIL" }));
        if !ok {
            report.failures += 1;
        }
    };

    let mut worst_volume_defect: f64 = 0.0;
    let mut worst_reciprocity: f64 = 0.0;
    let mut worst_rhs_sum: f64 = 0.0;
    let mut worst_mean_p: f64 = 0.0;
    let mut projection_ok = true;
    let mut energy_ok = true;
    let mut worst_drift: f64 = 0.0;
    let mut b_ok = true;
    let mut prev_energy = sim.energy();

    for _ in 0..steps {
        let dt = sim.compute_dt()?;
        let diag = sim.step_with_dt(dt)?;

        let defect =
            (sim.mesh.total_volume() - sim.domain().area()).abs() / sim.domain().area();
        worst_volume_defect = worst_volume_defect.max(defect);

        for (i, cell) in sim.mesh.cells().iter().enumerate() {
            for f in &cell.facets {
                if let FacetNeighbor::Seed { index: j, .. } = f.neighbor {
                    if let Some(twin) =
                        sim.mesh.cell(j).facets.iter().find(|g| g.seed_index() == Some(i))
                    {
                        worst_reciprocity = worst_reciprocity
                            .max((twin.length - f.length).abs())
                            .max((twin.midpoint - f.midpoint).norm());
                    }
                }
            }
        }

        if sim.state.uniform_density() {
            let b = assemble_b(&sim.mesh, sim.state.densities[0])?;
            let ones = vec![1.0; b.dim()];
            let b1 = b.apply_alloc(&ones);
            let scale = (0..b.dim()).map(|i| b.diagonal(i)).fold(1.0f64, f64::max);
            b_ok &= b.is_symmetric()
                && b.max_relative_row_sum() <= 1e-12
                && b1.iter().all(|v| v.abs() <= 1e-12 * scale);
            let mut s = 0x2545f4914f6cdd1du64;
            for _ in 0..20 {
                let probe: Vec<f64> = (0..b.dim())
                    .map(|_| {
                        s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                    })
                    .collect();
                b_ok &= b.quadratic_form(&probe) >= -1e-12;
            }
            let rhs = assemble_rhs(&sim.mesh, &sim.state.velocities, dt)?;
            let sum: f64 = rhs.iter().sum();
            let norm1: f64 = rhs.iter().map(|x| x.abs()).sum();
            if norm1 > 0.0 {
                worst_rhs_sum = worst_rhs_sum.max(sum.abs() / norm1);
            }
        }

        let p = &sim.state.pressures;
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            worst_mean_p = worst_mean_p.max(mean.abs() / norm);
        }

        projection_ok &= diag.div_l2 <= diag.div_l2_star * (1.0 + 1e-12) + 1e-300;
        if monotone_energy_applies {
            energy_ok &= diag.energy <= prev_energy * (1.0 + 1e-12);
        }
        prev_energy = diag.energy;
        worst_drift = worst_drift
            .max(diag.vol_drift_max.abs())
            .max(diag.vol_drift_min.abs());
    }

    record(
        "tessellation volume",
        worst_volume_defect <= 1e-9,
        format!("max relative defect {worst_volume_defect:.3e}"),
    );
    record(
        "facet reciprocity",
        worst_reciprocity <= 1e-10,
        format!("max length/midpoint mismatch {worst_reciprocity:.3e}"),
    );
    record(
        "pressure operator (symmetry, zero row sums, kernel, PSD probes)",
        b_ok,
        String::new(),
    );
    record(
        "zero-sum right-hand side",
        worst_rhs_sum <= 1e-11,
        format!("max |Σb|/‖b‖₁ = {worst_rhs_sum:.3e}"),
    );
    record(
        "zero-mean pressure",
        worst_mean_p <= 1e-13,
        format!("max |mean(p)|/‖p‖ = {worst_mean_p:.3e}"),
    );
    record("projection does not worsen divergence", projection_ok, String::new());
    if monotone_energy_applies {
        record("energy non-increasing", energy_ok, String::new());
    }
    record(
        "cell volume drift bounded",
        worst_drift < 0.5,
        format!("max |drift| {worst_drift:.3e}"),
    );
    Ok(report)
}
