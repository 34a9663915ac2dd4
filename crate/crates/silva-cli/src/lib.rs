//! Run orchestration for the silva binary: configuration parsing, the file
//! sink, benchmark table emission, and the invariant check mode.

pub mod check;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use anyhow::Context;

use silva_core::bench::{self, cavity_centerlines, error_norms, init_case, CaseKind};
use silva_core::integrator::{RunSummary, Simulation, StepDiagnostics};
use silva_core::state::ParticleState;
use silva_core::{Error, VoronoiMesh};

use config::SimConfig;
use output::FileSink;

/// File sink that additionally records the energy time series for the
/// `<case>_energy.csv` table.
struct RecordingSink {
    inner: FileSink,
    energy: Vec<(f64, f64)>,
}

impl silva_core::integrator::RunSink for RecordingSink {
    fn snapshot(&mut self, state: &ParticleState, mesh: &VoronoiMesh) -> Result<(), Error> {
        self.inner.snapshot(state, mesh)
    }

    fn diagnostics(&mut self, diag: &StepDiagnostics) -> Result<(), Error> {
        self.energy.push((diag.time, diag.energy));
        self.inner.diagnostics(diag)
    }
}

pub struct RunOutcome {
    pub summary: RunSummary,
    pub output_dir: PathBuf,
}

/// Run the configured case to its final time, writing snapshots,
/// diagnostics, and the case's benchmark tables into the output directory.
pub fn run_from_config(cfg: &SimConfig, output_dir: &Path) -> anyhow::Result<RunOutcome> {
    let spec = cfg.case_spec();
    spec.validate()?;
    let state = init_case(&spec)?;
    let mut sim = Simulation::new(
        state,
        spec.domain(),
        spec.delta_r(),
        spec.viscosity(),
        spec.boundary(),
        cfg.solver_params(),
    )
    .context("initial mesh construction failed")?;

    let file_sink = FileSink::create(
        output_dir,
        cfg.write_particles,
        cfg.write_mesh,
        cfg.write_vtk,
        cfg.write_diagnostics,
    )?;
    let mut sink = RecordingSink { inner: file_sink, energy: Vec::new() };
    sink.energy.push((sim.state.time, sim.energy()));

    let summary = sim
        .run(cfg.t_end, cfg.cadence(), &mut sink)
        .context("time loop failed")?;
    sink.inner.finish()?;

    let case_id = spec.kind.id();
    output::write_energy_csv(&output_dir.join(format!("{case_id}_energy.csv")), &sink.energy)?;

    if spec.has_reference() {
        let entry = {
            let mut e = error_norms(&sim.state, &sim.mesh, &spec)?;
            e.n_per_side = cfg.n;
            e
        };
        let report = bench::ErrorReport {
            case: case_id,
            entries: vec![entry],
            velocity_order: f64::NAN,
            pressure_order: f64::NAN,
            divergence_order: f64::NAN,
        };
        output::write_errors_csv(
            &output_dir.join(format!("{case_id}_{}_errors.csv", cfg.n)),
            &report,
        )?;
    }

    if spec.kind == CaseKind::LidCavity {
        let (u_line, v_line) = cavity_centerlines(&sim.state, &sim.mesh, sim.boundary());
        output::write_centerline_csv(
            &output_dir.join(format!("{case_id}_centerline.csv")),
            &u_line,
            &v_line,
        )?;
    }

    Ok(RunOutcome { summary, output_dir: output_dir.to_path_buf() })
}
