// quick perf/convergence probe: not part of the deliverable
use silva_core::bench::fixtures::{GHIA_RE100_U, GHIA_RE100_V};
use silva_core::bench::{cavity_centerlines, init_case, CaseKind, CaseSpec};
use silva_core::integrator::{Simulation, SolverParams};

fn worst_errors(sim: &Simulation) -> (f64, f64) {
    let (u_line, v_line) = cavity_centerlines(&sim.state, &sim.mesh, sim.boundary());
    let wu = u_line.iter().zip(GHIA_RE100_U.iter()).map(|((_, u), (_, g))| (u - g).abs()).fold(0.0f64, f64::max);
    let wv = v_line.iter().zip(GHIA_RE100_V.iter()).map(|((_, v), (_, g))| (v - g).abs()).fold(0.0f64, f64::max);
    (wu, wv)
}

fn main() {
    let n: usize = std::env::var("P_N").unwrap().parse().unwrap();
    let spec = CaseSpec::new(CaseKind::LidCavity, n);
    let state = init_case(&spec).unwrap();
    let mut sim = Simulation::new(state, spec.domain(), spec.delta_r(), spec.viscosity(), spec.boundary(), SolverParams::default()).unwrap();
    let t0 = std::time::Instant::now();
    let mut next = 2.0f64;
    while sim.state.time < 10.0 - 1e-12 {
        let dt = sim.compute_dt().unwrap().min(10.0 - sim.state.time);
        sim.step_with_dt(dt).unwrap();
        if sim.state.time >= next - 1e-9 {
            let (wu, wv) = worst_errors(&sim);
            println!("N={} t={:.1} worst_u={:.4} worst_v={:.4} vmax={:.3} E={:.5} steps={} [{:.0}s]",
                n, sim.state.time, wu, wv, sim.state.max_speed(), sim.energy(), sim.state.step, t0.elapsed().as_secs_f64());
            next += 2.0;
        }
    }
}
