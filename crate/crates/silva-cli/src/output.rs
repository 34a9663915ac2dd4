//! All persistence: particle snapshots, step diagnostics, mesh polygon
//! dumps, optional legacy-VTK output, and plot-ready benchmark tables.
//!
//! Floats are serialized with 17 significant digits so every value
//! round-trips bit-exactly; identical runs therefore produce byte-identical
//! files.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use silva_core::bench::ErrorReport;
use silva_core::integrator::{RunSink, StepDiagnostics};
use silva_core::state::ParticleState;
use silva_core::{Error, VoronoiMesh};

/// 17 significant digits: enough for a bit-exact f64 round trip.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub const PARTICLE_HEADER: &str = "id,x,y,u,v,p,rho,vol";
pub const DIAGNOSTICS_HEADER: &str = "step,t,dt,E,div_l2,div_max,minres_iters,outer_iters";

/// Particles CSV: one row per seed with the header
/// `id,x,y,u,v,p,rho,vol` (volumes from the current mesh).
pub fn write_snapshot(path: &Path, state: &ParticleState, mesh: &VoronoiMesh) -> Result<(), Error> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{PARTICLE_HEADER}")?;
    for i in 0..state.len() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            i,
            fmt_float(state.positions[i].x),
            fmt_float(state.positions[i].y),
            fmt_float(state.velocities[i].x),
            fmt_float(state.velocities[i].y),
            fmt_float(state.pressures[i]),
            fmt_float(state.densities[i]),
            fmt_float(mesh.cell(i).volume),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// One parsed snapshot row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParticleRow {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
    pub rho: f64,
    pub vol: f64,
}

pub fn read_snapshot(path: &Path) -> Result<Vec<ParticleRow>, Error> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if k == 0 {
            if line != PARTICLE_HEADER {
                return Err(Error::InvalidConfig(format!(
                    "unexpected snapshot header `{line}`"
                )));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::InvalidConfig(format!(
                "snapshot row {k} has {} fields",
                fields.len()
            )));
        }
        let num = |s: &str| -> Result<f64, Error> {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad float `{s}` in snapshot row {k}")))
        };
        rows.push(ParticleRow {
            id: fields[0]
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad id in snapshot row {k}")))?,
            x: num(fields[1])?,
            y: num(fields[2])?,
            u: num(fields[3])?,
            v: num(fields[4])?,
            p: num(fields[5])?,
            rho: num(fields[6])?,
            vol: num(fields[7])?,
        });
    }
    Ok(rows)
}

/// Mesh polygon dump, one cell per line:
/// `id,gx,gy,v1x,v1y,v2x,v2y,...` (generator position, then the vertex loop).
pub fn write_mesh_dump(path: &Path, mesh: &VoronoiMesh) -> Result<(), Error> {
    let mut w = BufWriter::new(File::create(path)?);
    for (i, cell) in mesh.cells().iter().enumerate() {
        let g = mesh.position(i);
        write!(w, "{},{},{}", i, fmt_float(g.x), fmt_float(g.y))?;
        for v in &cell.vertices {
            write!(w, ",{},{}", fmt_float(v.x), fmt_float(v.y))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Legacy-VTK polydata for external viewers: cell polygons with pressure,
/// density and velocity magnitude as cell data.
pub fn write_vtk(path: &Path, state: &ParticleState, mesh: &VoronoiMesh) -> Result<(), Error> {
    let mut w = BufWriter::new(File::create(path)?);
    let total_verts: usize = mesh.cells().iter().map(|c| c.vertices.len()).sum();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "silva snapshot t={}", fmt_float(state.time))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {total_verts} double")?;
    for cell in mesh.cells() {
        for v in &cell.vertices {
            writeln!(w, "{} {} 0", fmt_float(v.x), fmt_float(v.y))?;
        }
    }
    let n_cells = mesh.len();
    writeln!(w, "POLYGONS {} {}", n_cells, n_cells + total_verts)?;
    let mut offset = 0usize;
    for cell in mesh.cells() {
        write!(w, "{}", cell.vertices.len())?;
        for k in 0..cell.vertices.len() {
            write!(w, " {}", offset + k)?;
        }
        writeln!(w)?;
        offset += cell.vertices.len();
    }
    writeln!(w, "CELL_DATA {n_cells}")?;
    for (name, values) in [
        ("pressure", state.pressures.clone()),
        ("density", state.densities.clone()),
        (
            "speed",
            state.velocities.iter().map(|v| v.norm()).collect::<Vec<_>>(),
        ),
    ] {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in values {
            writeln!(w, "{}", fmt_float(v))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Append-mode diagnostics writer with the pinned CSV header.
pub struct DiagnosticsWriter {
    w: BufWriter<File>,
}

impl DiagnosticsWriter {
    pub fn create(path: &Path) -> Result<Self, Error> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{DIAGNOSTICS_HEADER}")?;
        Ok(DiagnosticsWriter { w })
    }

    pub fn append(&mut self, d: &StepDiagnostics) -> Result<(), Error> {
        writeln!(
            self.w,
            "{},{},{},{},{},{},{},{}",
            d.step,
            fmt_float(d.time),
            fmt_float(d.dt),
            fmt_float(d.energy),
            fmt_float(d.div_l2),
            fmt_float(d.div_max),
            d.minres_iters,
            d.outer_iters,
        )?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), Error> {
        self.w.flush()?;
        Ok(())
    }
}

/// File-backed sink: snapshots and diagnostics land in `dir` as
/// `particles_<step>.csv`, optional `mesh_<step>.txt` / `snapshot_<step>.vtk`,
/// and `diagnostics.csv`.
pub struct FileSink {
    dir: PathBuf,
    pub write_particles: bool,
    pub write_mesh: bool,
    pub write_vtk: bool,
    diagnostics: Option<DiagnosticsWriter>,
}

impl FileSink {
    pub fn create(
        dir: &Path,
        write_particles: bool,
        write_mesh: bool,
        write_vtk: bool,
        write_diagnostics: bool,
    ) -> Result<Self, Error> {
        fs::create_dir_all(dir)?;
        let diagnostics = if write_diagnostics {
            Some(DiagnosticsWriter::create(&dir.join("diagnostics.csv"))?)
        } else {
            None
        };
        Ok(FileSink {
            dir: dir.to_path_buf(),
            write_particles,
            write_mesh,
            write_vtk,
            diagnostics,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn finish(&mut self) -> Result<(), Error> {
        if let Some(d) = self.diagnostics.as_mut() {
            d.flush()?;
        }
        Ok(())
    }
}

impl RunSink for FileSink {
    fn snapshot(&mut self, state: &ParticleState, mesh: &VoronoiMesh) -> Result<(), Error> {
        let step = state.step;
        if self.write_particles {
            write_snapshot(&self.dir.join(format!("particles_{step:06}.csv")), state, mesh)?;
        }
        if self.write_mesh {
            write_mesh_dump(&self.dir.join(format!("mesh_{step:06}.txt")), mesh)?;
        }
        if self.write_vtk {
            write_vtk(&self.dir.join(format!("snapshot_{step:06}.vtk")), state, mesh)?;
        }
        Ok(())
    }

    fn diagnostics(&mut self, diag: &StepDiagnostics) -> Result<(), Error> {
        if let Some(d) = self.diagnostics.as_mut() {
            d.append(diag)?;
        }
        Ok(())
    }
}

/// Convergence table: `<case>_<N..>_errors.csv`.
pub fn write_errors_csv(path: &Path, report: &ErrorReport) -> Result<(), Error> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "n,seeds,l2_velocity,l2_pressure,energy_error,l2_divergence")?;
    for e in &report.entries {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            e.n_per_side,
            e.seeds,
            fmt_float(e.l2_velocity),
            fmt_float(e.l2_pressure),
            fmt_float(e.energy_error),
            fmt_float(e.l2_divergence),
        )?;
    }
    writeln!(
        w,
        "# fitted orders: velocity {}, pressure {}, divergence {}",
        fmt_float(report.velocity_order),
        fmt_float(report.pressure_order),
        fmt_float(report.divergence_order),
    )?;
    w.flush()?;
    Ok(())
}

/// Energy time series: `<case>_energy.csv` with header `t,E`.
pub fn write_energy_csv(path: &Path, series: &[(f64, f64)]) -> Result<(), Error> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,E")?;
    for (t, e) in series {
        writeln!(w, "{},{}", fmt_float(*t), fmt_float(*e))?;
    }
    w.flush()?;
    Ok(())
}

/// Centerline profiles: `<case>_centerline.csv` in long format
/// `profile,ordinate,value` with `u` rows along the vertical centerline and
/// `v` rows along the horizontal one (ordinates in fixture coordinates).
pub fn write_centerline_csv(
    path: &Path,
    u_line: &[(f64, f64)],
    v_line: &[(f64, f64)],
) -> Result<(), Error> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "profile,ordinate,value")?;
    for (y, u) in u_line {
        writeln!(w, "u,{},{}", fmt_float(*y), fmt_float(*u))?;
    }
    for (x, v) in v_line {
        writeln!(w, "v,{},{}", fmt_float(*x), fmt_float(*v))?;
    }
    w.flush()?;
    Ok(())
}
