//! Pressure operator assembly, the Krylov solve against a dense oracle, and
//! the heterogeneous-density fixed point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use silva_core::geom::{DomainBox, Vec2};
use silva_core::mesh::build_mesh;
use silva_core::pressure::{
    apply_a, assemble_b, assemble_rhs, solve_pressure, solve_pressure_multiphase,
    MultiphaseOptions,
};

fn random_points(n: usize, domain: &DomainBox, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 1e-3;
    (0..n)
        .map(|_| {
            Vec2::new(
                rng.gen_range(domain.xmin + m..domain.xmax - m),
                rng.gen_range(domain.ymin + m..domain.ymax - m),
            )
        })
        .collect()
}

fn lattice(n: usize, domain: &DomainBox) -> Vec<Vec2> {
    let hx = domain.width() / n as f64;
    let hy = domain.height() / n as f64;
    let mut out = Vec::new();
    for iy in 0..n {
        for ix in 0..n {
            out.push(Vec2::new(
                domain.xmin + (ix as f64 + 0.5) * hx,
                domain.ymin + (iy as f64 + 0.5) * hy,
            ));
        }
    }
    out
}

#[test]
fn two_cell_assembly_matches_hand_values() {
    let domain = DomainBox::unit();
    let positions = vec![Vec2::new(0.25, 0.5), Vec2::new(0.75, 0.5)];
    let mesh = build_mesh(&positions, &domain, 0.25, None).unwrap();
    let b = assemble_b(&mesh, 1.0).unwrap();
    // |Γ| = 1, r = 0.5 -> B = [[2,-2],[-2,2]]
    assert_eq!(b.diagonal(0), 2.0);
    assert_eq!(b.diagonal(1), 2.0);
    let y = b.apply_alloc(&[1.0, 0.0]);
    assert_eq!(y, vec![2.0, -2.0]);
    // kernel: constants
    let y = b.apply_alloc(&[1.0, 1.0]);
    assert_eq!(y, vec![0.0, 0.0]);
    // hand solve with the zero-mean constraint
    let (p, _) = solve_pressure(&b, &[1.0, -1.0], 1e-12, 100, None).unwrap();
    assert!((p[0] - 0.25).abs() < 1e-12 && (p[1] + 0.25).abs() < 1e-12);
}

#[test]
fn interior_rows_reduce_to_five_point_stencil() {
    let domain = DomainBox::unit();
    let n = 8;
    let positions = lattice(n, &domain);
    let mesh = build_mesh(&positions, &domain, 1.0 / n as f64, None).unwrap();
    let b = assemble_b(&mesh, 1.0).unwrap();
    for iy in 1..n - 1 {
        for ix in 1..n - 1 {
            let i = iy * n + ix;
            let row: Vec<(usize, f64)> = b.row(i).collect();
            assert_eq!(row.len(), 5, "row {i}");
            for (j, v) in row {
                if j == i {
                    assert!((v - 4.0).abs() < 1e-12);
                } else {
                    assert!((v + 1.0).abs() < 1e-12);
                    assert!(j == i - 1 || j == i + 1 || j == i - n || j == i + n);
                }
            }
        }
    }
}

#[test]
fn rejects_non_positive_density() {
    let domain = DomainBox::unit();
    let positions = vec![Vec2::new(0.25, 0.5), Vec2::new(0.75, 0.5)];
    let mesh = build_mesh(&positions, &domain, 0.25, None).unwrap();
    assert!(assemble_b(&mesh, 0.0).is_err());
    assert!(assemble_b(&mesh, -1.0).is_err());
}

#[test]
fn rhs_is_zero_sum_and_consistent() {
    let domain = DomainBox::unit();
    let n = 400;
    let positions = random_points(n, &domain, 5);
    let dr = (domain.area() / n as f64).sqrt();
    let mesh = build_mesh(&positions, &domain, dr, None).unwrap();

    // random velocities: Σ b_i = 0 to 1e-11·‖b‖₁
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let v: Vec<Vec2> = (0..n)
        .map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let dt = 1e-3;
    let b = assemble_rhs(&mesh, &v, dt).unwrap();
    let sum: f64 = b.iter().sum();
    let norm1: f64 = b.iter().map(|x| x.abs()).sum();
    assert!(sum.abs() <= 1e-11 * norm1, "Σb = {sum:.3e}, ‖b‖₁ = {norm1:.3e}");

    // uniform velocity: interior entries vanish identically (wall entries
    // carry the no-penetration flux v·S_i)
    let v = vec![Vec2::new(1.0, 0.0); n];
    let b = assemble_rhs(&mesh, &v, dt).unwrap();
    for (i, cell) in mesh.cells().iter().enumerate() {
        if cell.is_interior() {
            assert_eq!(b[i], 0.0, "interior cell {i}");
        } else {
            let expect = Vec2::new(1.0, 0.0).dot(cell.surface) / dt;
            assert!((b[i] - expect).abs() < 1e-12 * (1.0 + expect.abs()));
        }
    }
    let sum: f64 = b.iter().sum();
    let norm1: f64 = b.iter().map(|x| x.abs()).sum();
    assert!(sum.abs() <= 1e-11 * norm1.max(1e-30));

    // radial expansion v = (x, y): interior b_i = -(|ω_i|/Δt)·∇·v = -2|ω|/Δt
    let v: Vec<Vec2> = positions.iter().map(|p| Vec2::new(p.x, p.y)).collect();
    let b = assemble_rhs(&mesh, &v, dt).unwrap();
    let mut ratio_sum = 0.0;
    let mut cnt = 0;
    for (i, cell) in mesh.cells().iter().enumerate() {
        if cell.is_interior() {
            ratio_sum += b[i] / (cell.volume / dt);
            cnt += 1;
        }
    }
    let mean_ratio = ratio_sum / cnt as f64;
    assert!(
        (mean_ratio + 2.0).abs() < 0.05 * 2.0,
        "interior b/(|ω|/Δt) averages {mean_ratio}, expected -2"
    );
}

#[test]
fn apply_a_is_symmetric_and_vanishes_on_constants() {
    let domain = DomainBox::unit();
    let n = 150;
    let positions = random_points(n, &domain, 17);
    let dr = (domain.area() / n as f64).sqrt();
    let mesh = build_mesh(&positions, &domain, dr, None).unwrap();

    let constant = vec![3.5; n];
    let y = apply_a(&mesh, 1.0, &constant);
    assert!(y.iter().all(|v| v.abs() < 1e-12));

    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..5 {
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ap = apply_a(&mesh, 1.0, &p);
        let aq = apply_a(&mesh, 1.0, &q);
        let qap: f64 = q.iter().zip(ap.iter()).map(|(a, b)| a * b).sum();
        let paq: f64 = p.iter().zip(aq.iter()).map(|(a, b)| a * b).sum();
        let scale = qap.abs().max(paq.abs()).max(1e-30);
        assert!(
            (qap - paq).abs() <= 1e-11 * scale,
            "symmetry defect {:.3e}",
            (qap - paq).abs() / scale
        );
    }
}

#[test]
fn sparsification_error_shrinks_under_refinement() {
    use std::f64::consts::PI;
    let domain = DomainBox::unit();
    let mut ratios = Vec::new();
    for n in [8usize, 16, 32] {
        let positions = lattice(n, &domain);
        let mesh = build_mesh(&positions, &domain, 1.0 / n as f64, None).unwrap();
        // Neumann-compatible smooth pressure
        let p: Vec<f64> = positions
            .iter()
            .map(|q| (PI * q.x).cos() * (PI * q.y).cos())
            .collect();
        let b_op = assemble_b(&mesh, 1.0).unwrap();
        let bp = b_op.apply_alloc(&p);
        let ap = apply_a(&mesh, 1.0, &p);
        let diff: f64 = bp
            .iter()
            .zip(ap.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = ap.iter().map(|x| x * x).sum::<f64>().sqrt();
        ratios.push(diff / norm);
    }
    eprintln!("‖(A-B)p‖/‖Ap‖ over refinement: {ratios:?}");
    assert!(ratios[1] < ratios[0] && ratios[2] < ratios[1]);
}

#[test]
fn minres_matches_dense_pseudo_inverse() {
    let domain = DomainBox::unit();
    let n = 100;
    let positions = random_points(n, &domain, 55);
    let dr = (domain.area() / n as f64).sqrt();
    let mesh = build_mesh(&positions, &domain, dr, None).unwrap();
    let b_op = assemble_b(&mesh, 1.0).unwrap();

    // consistent RHS from a random velocity field
    let mut rng = ChaCha8Rng::seed_from_u64(56);
    let v: Vec<Vec2> = (0..n)
        .map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let rhs = assemble_rhs(&mesh, &v, 1e-2).unwrap();

    let (p, stats) = solve_pressure(&b_op, &rhs, 1e-12, 10 * n, None).unwrap();
    assert!(stats.relative_residual <= 1e-11);

    // dense oracle: deflate the kernel with the rank-one term (B + 11ᵀ/n),
    // which is SPD and agrees with B on the zero-mean subspace
    let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for (j, val) in b_op.row(i) {
            dense[(i, j)] = val;
        }
    }
    let mean_rhs: f64 = rhs.iter().sum::<f64>() / n as f64;
    let b0: Vec<f64> = rhs.iter().map(|x| x - mean_rhs).collect();
    let shift = 1.0 / n as f64;
    for i in 0..n {
        for j in 0..n {
            dense[(i, j)] += shift;
        }
    }
    let sol = dense
        .lu()
        .solve(&nalgebra::DVector::from_column_slice(&b0))
        .expect("deflated system is regular");
    let mean_sol: f64 = sol.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        assert!(
            (p[i] - (sol[i] - mean_sol)).abs() < 1e-8,
            "component {i}: {} vs {}",
            p[i],
            sol[i] - mean_sol
        );
    }
}

#[test]
fn multiphase_homogeneous_reduces_to_single_phase() {
    let domain = DomainBox::unit();
    let n = 200;
    let positions = random_points(n, &domain, 77);
    let dr = (domain.area() / n as f64).sqrt();
    let mesh = build_mesh(&positions, &domain, dr, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let v: Vec<Vec2> = (0..n)
        .map(|_| Vec2::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
        .collect();
    let dt = 1e-3;
    let rho = vec![1.3; n];

    let opts = MultiphaseOptions::default();
    let (p_multi, stats) =
        solve_pressure_multiphase(&mesh, &rho, &v, dt, &vec![0.0; n], &opts).unwrap();
    assert_eq!(stats.outer_iterations, 1, "coupling term vanishes identically");

    let b_op = assemble_b(&mesh, 1.3).unwrap();
    let rhs = assemble_rhs(&mesh, &v, dt).unwrap();
    let (p_single, _) = solve_pressure(&b_op, &rhs, 1e-12, 10 * n, None).unwrap();
    let scale = p_single.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
    for i in 0..n {
        assert!(
            (p_multi[i] - p_single[i]).abs() < 1e-8 * scale.max(1e-30),
            "component {i}"
        );
    }
}

#[test]
fn multiphase_two_phase_column_is_hydrostatic() {
    // heavy fluid over light in a tall box at rest under unit gravity: the
    // projection of a uniform v* = Δt·g must produce the hydrostatic
    // pressure, with per-phase slope ratio ≈ density ratio
    let domain = DomainBox::new(0.0, 1.0, 0.0, 2.0).unwrap();
    let nx = 24;
    let mut positions = Vec::new();
    let h = 1.0 / nx as f64;
    for iy in 0..(2 * nx) {
        for ix in 0..nx {
            positions.push(Vec2::new((ix as f64 + 0.5) * h, (iy as f64 + 0.5) * h));
        }
    }
    let mesh = build_mesh(&positions, &domain, h, None).unwrap();
    let n = positions.len();
    let rho: Vec<f64> = positions
        .iter()
        .map(|p| if p.y > 1.0 { 1.8 } else { 1.0 })
        .collect();
    let dt = 1e-3;
    let g = Vec2::new(0.0, -1.0);
    let v_star: Vec<Vec2> = vec![dt * g; n];

    let opts = MultiphaseOptions::default();
    let (p, stats) =
        solve_pressure_multiphase(&mesh, &rho, &v_star, dt, &vec![0.0; n], &opts).unwrap();
    assert!(stats.outer_iterations <= opts.outer_max_iter);
    assert!(stats.last_increment < opts.outer_tol);

    // least-squares dp/dy per phase, away from the interface and walls
    let slope = |lo: f64, hi: f64| -> f64 {
        let pts: Vec<(f64, f64)> = positions
            .iter()
            .zip(p.iter())
            .filter(|(q, _)| q.y > lo && q.y < hi)
            .map(|(q, &pi)| (q.y, pi))
            .collect();
        let n = pts.len() as f64;
        let sy: f64 = pts.iter().map(|t| t.0).sum();
        let sp: f64 = pts.iter().map(|t| t.1).sum();
        let syy: f64 = pts.iter().map(|t| t.0 * t.0).sum();
        let syp: f64 = pts.iter().map(|t| t.0 * t.1).sum();
        (n * syp - sy * sp) / (n * syy - sy * sy)
    };
    let s_light = slope(0.2, 0.8);
    let s_heavy = slope(1.2, 1.8);
    // hydrostatic: dp/dy = -ρ g_y = -ρ
    assert!(
        (s_light + 1.0).abs() < 0.1,
        "light-phase slope {s_light}, expected -1"
    );
    assert!(
        (s_heavy + 1.8).abs() < 0.18,
        "heavy-phase slope {s_heavy}, expected -1.8"
    );
    assert!(
        (s_heavy / s_light - 1.8).abs() < 0.18,
        "slope ratio {} vs density ratio 1.8",
        s_heavy / s_light
    );
}

#[test]
fn sparsity_stays_below_seven_and_a_half_nonzeros_per_row() {
    let domain = DomainBox::unit();
    let positions = random_points(625, &domain, 625);
    let dr = (domain.area() / 625.0).sqrt();
    let mesh = build_mesh(&positions, &domain, dr, None).unwrap();
    let b = assemble_b(&mesh, 1.0).unwrap();
    let mean = b.mean_nnz_per_row();
    eprintln!("mean nonzeros/row on 625 random seeds: {mean:.3}");
    assert!(mean <= 7.5);
}
