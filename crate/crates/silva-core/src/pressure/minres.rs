//! Minimal residual method restricted to the zero-mean subspace.
//!
//! The pressure operator is symmetric positive semi-definite with kernel
//! spanned by the constant vector, and regular on its orthogonal complement.
//! The right-hand side is mean-removed on entry, the iterate is mean-removed
//! every iteration, and the returned solution has zero mean.

use super::sparse::SparseSymmetricOperator;
use crate::Error;

/// Per-solve record: appended to the run diagnostics by the integrator.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolveStats {
    pub iterations: usize,
    /// True residual `‖Bp - b‖ / ‖b‖` at exit (0 when `b = 0`).
    pub relative_residual: f64,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn remove_mean(x: &mut [f64]) {
    let m = mean(x);
    for v in x.iter_mut() {
        *v -= m;
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `A x = b` for symmetric `A` in the zero-mean subspace.
///
/// `x0` warm-starts the iteration (its mean is removed first). Converges
/// when the recurrence residual satisfies `‖r‖ <= tol·‖b‖`; an early return
/// with zero iterations happens when the initial guess already satisfies the
/// tolerance, which is what lets fixed-point outer loops terminate exactly.
pub fn minres(
    a: &SparseSymmetricOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats), Error> {
    let n = a.dim();
    debug_assert_eq!(b.len(), n);

    let mut rhs = b.to_vec();
    remove_mean(&mut rhs);
    let bnorm = norm(&rhs);

    let mut x = match x0 {
        Some(g) => {
            debug_assert_eq!(g.len(), n);
            let mut x = g.to_vec();
            remove_mean(&mut x);
            x
        }
        None => vec![0.0; n],
    };

    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats { iterations: 0, relative_residual: 0.0 },
        ));
    }

    // r1 = b - A x
    let ax = a.apply_alloc(&x);
    let mut r1: Vec<f64> = rhs.iter().zip(ax.iter()).map(|(bv, av)| bv - av).collect();

    let beta1 = norm(&r1);
    if beta1 <= tol * bnorm {
        let rel = beta1 / bnorm;
        return Ok((x, SolveStats { iterations: 0, relative_residual: rel }));
    }

    // Lanczos + Givens recurrences (Paige & Saunders)
    let mut y = r1.clone();
    let mut r2 = r1.clone();
    let mut beta = beta1;
    let mut oldb = 0.0;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0f64;
    let mut sn = 0.0f64;
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut iterations = 0;

    for itn in 1..=max_iter {
        iterations = itn;
        let s = 1.0 / beta;
        let v: Vec<f64> = y.iter().map(|t| t * s).collect();
        y = a.apply_alloc(&v);
        if itn >= 2 {
            let c = beta / oldb;
            for (yk, r1k) in y.iter_mut().zip(r1.iter()) {
                *yk -= c * r1k;
            }
        }
        let alfa = dot(&v, &y);
        let c = alfa / beta;
        for (yk, r2k) in y.iter_mut().zip(r2.iter()) {
            *yk -= c * r2k;
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        oldb = beta;
        beta = norm(&y);

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;

        let gamma = (gbar * gbar + beta * beta).sqrt().max(f64::MIN_POSITIVE);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
        w = v
            .iter()
            .zip(w1.iter().zip(w2.iter()))
            .map(|(vk, (w1k, w2k))| (vk - oldeps * w1k - delta * w2k) * denom)
            .collect();
        for (xk, wk) in x.iter_mut().zip(w.iter()) {
            *xk += phi * wk;
        }
        remove_mean(&mut x);
        debug_assert!(
            mean(&x).abs() <= 1e-13 * norm(&x).max(f64::MIN_POSITIVE),
            "iterate drifted out of the zero-mean subspace"
        );

        if !phibar.is_finite() || !beta.is_finite() {
            return Err(Error::SolverBreakdown);
        }
        if phibar <= tol * bnorm {
            break;
        }
        if itn == max_iter {
            return Err(Error::SolverStalled {
                iterations: itn,
                residual: phibar / bnorm,
            });
        }
    }

    // true residual for the record
    let ax = a.apply_alloc(&x);
    let res = rhs
        .iter()
        .zip(ax.iter())
        .map(|(bv, av)| (bv - av) * (bv - av))
        .sum::<f64>()
        .sqrt();
    let stats = SolveStats { iterations, relative_residual: res / bnorm };
    if !res.is_finite() {
        return Err(Error::SolverBreakdown);
    }
    Ok((x, stats))
}
