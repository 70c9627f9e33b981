//! BiCGSTAB for the implicit halves of the Cayley maps.
//!
//! Convergence is declared on the *true* residual: whenever the recursive
//! residual drops below target, `b - A x` is recomputed and the iteration is
//! resumed from it if the check fails. The tolerance is relative to `|b|`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::dot;
use crate::sparse::LinearOperator;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Relative residual target `|b - A x| / |b|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Restart once from the current iterate on breakdown, then fail.
    pub restart_on_breakdown: bool,
    /// Right Jacobi preconditioning (needs [`LinearOperator::diagonal`]).
    pub jacobi: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 10_000, restart_on_breakdown: true, jacobi: false }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidSolverConfig("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidSolverConfig("max_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Recomputed `|b - A x| / |b|` of the returned iterate (0 when `b = 0`).
    pub residual: f64,
    /// Restarts triggered by breakdown.
    pub restarts: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureKind {
    Breakdown,
    NotConverged,
}

/// A failed solve, carrying the last iterate and its verified residual.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverFailure {
    pub kind: FailureKind,
    pub x: Vec<f64>,
    pub stats: SolveStats,
}

impl From<SolverFailure> for Error {
    fn from(f: SolverFailure) -> Self {
        match f.kind {
            FailureKind::Breakdown => {
                Error::Breakdown { iterations: f.stats.iterations, residual: f.stats.residual }
            }
            FailureKind::NotConverged => {
                Error::NotConverged { iterations: f.stats.iterations, residual: f.stats.residual }
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

fn residual<Op: LinearOperator>(op: &Op, b: &[f64], x: &[f64], r: &mut [f64]) {
    op.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

const BREAKDOWN_EPS: f64 = 1e-15;

/// Sums `f(0) + ... + f(n-1)` with four interleaved partial sums; `f` may
/// also write vector entries, which lets updates and reductions share a pass.
#[inline(always)]
fn fused_sum(n: usize, mut f: impl FnMut(usize) -> f64) -> f64 {
    let mut acc = [0.0; 4];
    let full = n - n % 4;
    let mut i = 0;
    while i < full {
        acc[0] += f(i);
        acc[1] += f(i + 1);
        acc[2] += f(i + 2);
        acc[3] += f(i + 3);
        i += 4;
    }
    let mut tail = 0.0;
    for j in full..n {
        tail += f(j);
    }
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

/// Solves `op x = b` starting from `x0`.
///
/// On failure the returned iterate is the last finite one (falling back to
/// `x0`), with its recomputed residual.
pub fn bicgstab<Op: LinearOperator>(
    op: &Op,
    b: &[f64],
    x0: &[f64],
    cfg: &SolverConfig,
) -> core::result::Result<(Vec<f64>, SolveStats), SolverFailure> {
    let n = op.dim();
    assert_eq!(b.len(), n, "right-hand side length");
    assert_eq!(x0.len(), n, "initial guess length");
    debug_assert!(cfg.validate().is_ok());

    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveStats::default()));
    }
    let target = cfg.tol * bnorm;

    let inv_diag: Option<Vec<f64>> = if cfg.jacobi {
        op.diagonal().map(|d| d.into_iter().map(|v| if v != 0.0 { 1.0 / v } else { 1.0 }).collect())
    } else {
        None
    };
    let precondition = |src: &[f64], dst: &mut [f64]| {
        if let Some(d) = &inv_diag {
            for ((o, s), w) in dst.iter_mut().zip(src).zip(d) {
                *o = s * w;
            }
        }
    };
    let pre = inv_diag.is_some();
    let scratch_len = if pre { n } else { 0 };

    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    residual(op, b, &x, &mut r);
    let mut r_norm = norm(&r);
    let mut stats = SolveStats { iterations: 0, residual: r_norm / bnorm, restarts: 0 };
    if r_norm <= target {
        return Ok((x, stats));
    }

    let mut r_hat = r.clone();
    let mut r_hat_norm = r_norm;
    let mut rho_next = r_norm * r_norm;
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut p_hat = vec![0.0; scratch_len];
    let mut s_hat = vec![0.0; scratch_len];
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);

    // Recomputes the true residual of `x` and returns if it meets the target;
    // otherwise restarts the recurrence from it.
    macro_rules! verify_or_restart {
        () => {{
            residual(op, b, &x, &mut r);
            r_norm = norm(&r);
            if r_norm <= target {
                stats.residual = r_norm / bnorm;
                return Ok((x, stats));
            }
            r_hat.copy_from_slice(&r);
            r_hat_norm = r_norm;
            rho_next = r_norm * r_norm;
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            p.iter_mut().for_each(|e| *e = 0.0);
            v.iter_mut().for_each(|e| *e = 0.0);
        }};
    }

    let mut kind = FailureKind::NotConverged;
    while stats.iterations < cfg.max_iter {
        stats.iterations += 1;

        let rho_new = rho_next;
        let beta = (rho_new / rho) * (alpha / omega);
        let mut breakdown = libm::fabs(rho_new) <= BREAKDOWN_EPS * r_hat_norm * r_norm || !beta.is_finite();

        if !breakdown {
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            precondition(&p, &mut p_hat);
            op.apply(if pre { &p_hat } else { &p }, &mut v);
            let denom = dot(&r_hat, &v);
            alpha = rho_new / denom;
            breakdown = denom == 0.0 || !alpha.is_finite();
        }

        if !breakdown {
            let ss = fused_sum(n, |i| {
                s[i] = r[i] - alpha * v[i];
                s[i] * s[i]
            });
            let ph = if pre { &p_hat } else { &p };
            if libm::sqrt(ss) <= target {
                for i in 0..n {
                    x[i] += alpha * ph[i];
                }
                verify_or_restart!();
                continue;
            }
            precondition(&s, &mut s_hat);
            op.apply(if pre { &s_hat } else { &s }, &mut t);
            let mut ts = 0.0;
            let tt = fused_sum(n, |i| {
                ts += t[i] * s[i];
                t[i] * t[i]
            });
            let omega_new = ts / tt;
            if tt != 0.0 && omega_new.is_finite() && libm::fabs(omega_new) > BREAKDOWN_EPS {
                omega = omega_new;
                rho = rho_new;
                let sh = if pre { &s_hat } else { &s };
                let mut finite = true;
                let mut rr = 0.0;
                for i in 0..n {
                    let xi = x[i] + alpha * ph[i] + omega * sh[i];
                    finite &= xi.is_finite();
                    x[i] = xi;
                    r[i] = s[i] - omega * t[i];
                    rr += r_hat[i] * r[i];
                }
                rho_next = rr;
                r_norm = norm(&r);
                if finite && r_norm.is_finite() {
                    if r_norm <= target {
                        verify_or_restart!();
                    }
                    continue;
                }
                // overflowed: fall back to the initial guess
                x.copy_from_slice(x0);
            }
        }

        // breakdown: restart once from the current iterate, then give up
        if cfg.restart_on_breakdown && stats.restarts == 0 {
            stats.restarts += 1;
            verify_or_restart!();
            continue;
        }
        kind = FailureKind::Breakdown;
        break;
    }

    residual(op, b, &x, &mut r);
    stats.residual = norm(&r) / bnorm;
    Err(SolverFailure { kind, x, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::dense_solve;
    use crate::sparse::{SparseMatrix, TripletBuilder};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn true_residual(m: &SparseMatrix, b: &[f64], x: &[f64]) -> f64 {
        let ax = m.matvec(x).unwrap();
        let r: Vec<f64> = ax.iter().zip(b).map(|(a, b)| b - a).collect();
        norm(&r) / norm(b)
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let m = SparseMatrix::identity(5);
        let b = [1.0, -2.0, 3.0, 0.5, 7.0];
        let (x, stats) = bicgstab(&m, &b, &[0.0; 5], &SolverConfig::default()).unwrap();
        assert_eq!(x, b.to_vec());
        assert!(stats.iterations <= 1);
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let m = SparseMatrix::identity(3);
        let (x, stats) = bicgstab(&m, &[0.0; 3], &[1.0, 2.0, 3.0], &SolverConfig::default()).unwrap();
        assert_eq!(x, vec![0.0; 3]);
        assert_eq!(stats.iterations, 0);
    }

    fn random_diag_dominant(n: usize, rng: &mut ChaCha8Rng) -> SparseMatrix {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            let mut off = 0.0;
            for _ in 0..4 {
                let j = rng.gen_range(0..n);
                if j != i {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    off += v.abs();
                    b.push(i, j, v);
                }
            }
            b.push(i, i, off + rng.gen_range(0.5..2.0));
        }
        b.finish().unwrap()
    }

    #[test]
    fn diagonally_dominant_matches_dense_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_diag_dominant(50, &mut rng);
        let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (x, stats) = bicgstab(&m, &b, &vec![0.0; 50], &SolverConfig::default()).unwrap();
        let exact = dense_solve(&m.to_dense(), &b).unwrap();
        let err = x.iter().zip(&exact).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max);
        assert!(err < 1e-7, "max error {err}");
        assert!(true_residual(&m, &b, &x) <= 1e-9);
        assert!((stats.residual - true_residual(&m, &b, &x)).abs() < 1e-15);
    }

    #[test]
    fn spd_systems_meet_verified_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let a = random_diag_dominant(40, &mut rng);
            let spd = a.transpose().matmul(&a).unwrap();
            let b: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (x, _) = bicgstab(&spd, &b, &vec![0.0; 40], &SolverConfig::default()).unwrap();
            assert!(true_residual(&spd, &b, &x) <= 1e-9);
        }
    }

    #[test]
    fn jacobi_preconditioning_gives_same_answer() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_diag_dominant(30, &mut rng).scale_rows(&(1..=30).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        let b: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cfg = SolverConfig { jacobi: true, ..SolverConfig::default() };
        let (x, _) = bicgstab(&m, &b, &vec![0.0; 30], &cfg).unwrap();
        assert!(true_residual(&m, &b, &x) <= 1e-9);
    }

    #[test]
    fn singular_system_signals_failure() {
        // second row is zero, b has a component there: no solution exists
        let m = SparseMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (0, 1, 1.0), (2, 2, 1.0)]).unwrap();
        let b = [1.0, 1.0, 1.0];
        let cfg = SolverConfig { max_iter: 200, ..SolverConfig::default() };
        let fail = bicgstab(&m, &b, &[0.0; 3], &cfg).unwrap_err();
        assert!(fail.stats.residual > 0.1, "{:?}", fail);
        let err: Error = fail.into();
        assert!(matches!(err, Error::Breakdown { .. } | Error::NotConverged { .. }));
    }

    #[test]
    fn repeated_solves_are_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_diag_dominant(25, &mut rng);
        let b: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = bicgstab(&m, &b, &vec![0.0; 25], &SolverConfig::default()).unwrap();
        let c = bicgstab(&m, &b, &vec![0.0; 25], &SolverConfig::default()).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { tol: 0.0, ..SolverConfig::default() }.validate().is_err());
        assert!(SolverConfig { max_iter: 0, ..SolverConfig::default() }.validate().is_err());
    }
}
