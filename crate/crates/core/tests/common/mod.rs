//! Shared helpers for the integration tests: seeded random states and
//! naive reference implementations that share no code with the library
//! kernels.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smx_core::dense::{DenseMatrix, LuFactors};
use smx_core::grid::{Axis, Grid3D, ScalarField, SystemState, VectorField, Wavefunction};
use smx_core::hamiltonian::{DiscreteHamiltonian, PhysicsConstants, PotentialField};
use smx_core::sparse::LinearOperator;

pub const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cube(n: usize) -> Grid3D {
    Grid3D::cell_centered_cube(n, -5.0, 5.0).unwrap()
}

pub fn random_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
}

pub fn random_scalar(rng: &mut impl Rng, g: Grid3D, scale: f64) -> ScalarField {
    ScalarField::from_values(g, random_vec(rng, g.len(), scale)).unwrap()
}

pub fn random_vector(rng: &mut impl Rng, g: Grid3D, scale: f64) -> VectorField {
    VectorField::from_values(g, random_vec(rng, 3 * g.len(), scale)).unwrap()
}

pub fn random_psi(rng: &mut impl Rng, g: Grid3D) -> Wavefunction {
    Wavefunction::new(random_scalar(rng, g, 1.0), random_scalar(rng, g, 1.0)).unwrap()
}

pub fn random_state(rng: &mut impl Rng, g: Grid3D, electrons: usize, field_scale: f64) -> SystemState {
    let psi = (0..electrons).map(|_| random_psi(rng, g)).collect();
    SystemState::new(psi, random_vector(rng, g, field_scale), random_vector(rng, g, field_scale), 0.0).unwrap()
}

pub fn random_potential(rng: &mut impl Rng, g: Grid3D) -> PotentialField {
    PotentialField(random_scalar(rng, g, 1.0))
}

/// Sum of a few low Fourier modes with random amplitudes and phases, so the
/// field is resolved by the grid and time-step studies are asymptotic.
pub fn smooth_scalar(rng: &mut impl Rng, g: Grid3D, scale: f64) -> ScalarField {
    let l = g.box_lengths();
    let modes: Vec<([f64; 3], f64, f64)> = (0..4)
        .map(|_| {
            let k = [0, 1, 2].map(|a| 2.0 * std::f64::consts::PI * rng.gen_range(-1i32..=1) as f64 / l[a]);
            (k, scale * rng.gen_range(-1.0..1.0), rng.gen_range(0.0..6.3))
        })
        .collect();
    let vals = (0..g.len())
        .map(|j| {
            let p = g.position_of(j);
            modes.iter().map(|(k, a, ph)| a * (k[0] * p[0] + k[1] * p[1] + k[2] * p[2] + ph).cos()).sum()
        })
        .collect();
    ScalarField::from_values(g, vals).unwrap()
}

pub fn smooth_vector(rng: &mut impl Rng, g: Grid3D, scale: f64) -> VectorField {
    VectorField::from_components(
        smooth_scalar(rng, g, scale),
        smooth_scalar(rng, g, scale),
        smooth_scalar(rng, g, scale),
    )
    .unwrap()
}

/// Dense matrix of any linear operator.
pub fn dense_of(op: &impl LinearOperator) -> DenseMatrix {
    let n = op.dim();
    DenseMatrix::from_columns(n, n, |e| {
        let mut y = vec![0.0; n];
        op.apply(e, &mut y);
        y
    })
}

/// Canonical `[[0, I], [-I, 0]]` of size `2n`.
pub fn canonical_j(n: usize) -> DenseMatrix {
    let mut j = DenseMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// `(I - hG)^{-1} (I + hG)` by dense LU.
pub fn dense_cayley(g: &DenseMatrix, h: f64) -> DenseMatrix {
    let n = g.nrows();
    let id = DenseMatrix::identity(n);
    let minus = id.add_scaled(1.0, g, -h);
    let plus = id.add_scaled(1.0, g, h);
    LuFactors::new(&minus).unwrap().solve_matrix(&plus).unwrap()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Every unknown of a state, electrons first, then `A`, then `Y`.
pub fn flatten(s: &SystemState) -> Vec<f64> {
    let mut v = Vec::new();
    for p in &s.psi {
        v.extend(p.to_stacked());
    }
    v.extend_from_slice(s.a.values());
    v.extend_from_slice(s.y.values());
    v
}

pub fn hamiltonian(g: &Grid3D) -> DiscreteHamiltonian {
    DiscreteHamiltonian::new(g, PhysicsConstants::default())
}

/// Naive periodic grid indexing, independent of the library's stencil tables.
pub struct Naive {
    pub n: [usize; 3],
    pub h: [f64; 3],
}

impl Naive {
    pub fn new(g: &Grid3D) -> Self {
        Self { n: g.dims(), h: g.spacing() }
    }

    pub fn m(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn idx(&self, i: isize, j: isize, k: isize) -> usize {
        let w = |v: isize, n: usize| v.rem_euclid(n as isize) as usize;
        (w(i, self.n[0]) * self.n[1] + w(j, self.n[1])) * self.n[2] + w(k, self.n[2])
    }

    pub fn coords(&self, f: usize) -> [isize; 3] {
        let k = f % self.n[2];
        let j = (f / self.n[2]) % self.n[1];
        let i = f / (self.n[1] * self.n[2]);
        [i as isize, j as isize, k as isize]
    }

    /// Index of the node shifted by `s` along axis `c`.
    pub fn shift(&self, f: usize, c: usize, s: isize) -> usize {
        let mut p = self.coords(f);
        p[c] += s;
        self.idx(p[0], p[1], p[2])
    }

    /// `(u_J - u_{J-e}) / h`.
    pub fn d(&self, u: &[f64], c: usize) -> Vec<f64> {
        (0..self.m()).map(|f| (u[f] - u[self.shift(f, c, -1)]) / self.h[c]).collect()
    }

    /// Transpose of `d`: `(u_J - u_{J+e}) / h`.
    pub fn dt(&self, u: &[f64], c: usize) -> Vec<f64> {
        (0..self.m()).map(|f| (u[f] - u[self.shift(f, c, 1)]) / self.h[c]).collect()
    }

    pub fn lap(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        for c in 0..3 {
            let dd = self.d(&self.d(u, c), c);
            out.iter_mut().zip(dd).for_each(|(o, v)| *o += v);
        }
        out
    }

    pub fn lap_t(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        for c in 0..3 {
            let dd = self.dt(&self.dt(u, c), c);
            out.iter_mut().zip(dd).for_each(|(o, v)| *o += v);
        }
        out
    }

    pub fn curl(&self, a: &[f64]) -> Vec<f64> {
        let m = self.m();
        let comp = |c: usize| &a[c * m..(c + 1) * m];
        let mut out = Vec::with_capacity(3 * m);
        for c in 0..3 {
            let (p, q) = ((c + 1) % 3, (c + 2) % 3);
            let t1 = self.d(comp(q), p);
            let t2 = self.d(comp(p), q);
            out.extend(t1.iter().zip(&t2).map(|(x, y)| x - y));
        }
        out
    }

    pub fn curl_t(&self, w: &[f64]) -> Vec<f64> {
        let m = self.m();
        let comp = |c: usize| &w[c * m..(c + 1) * m];
        let mut out = Vec::with_capacity(3 * m);
        for c in 0..3 {
            let (p, q) = ((c + 1) % 3, (c + 2) % 3);
            // the transpose of curl swaps which neighbour component enters with which sign
            let t1 = self.dt(comp(p), q);
            let t2 = self.dt(comp(q), p);
            out.extend(t1.iter().zip(&t2).map(|(x, y)| x - y));
        }
        out
    }

    /// Time derivative of `(psi_r, psi_i)` for frozen `a`: the gradient of
    /// `H_qm / dV` written out term by term, then rotated by `J`.
    pub fn psi_rhs(&self, pr: &[f64], pi: &[f64], a: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = self.m();
        let comp = |c: usize| &a[c * m..(c + 1) * m];
        let (lr, lrt) = (self.lap(pr), self.lap_t(pr));
        let (li, lit) = (self.lap(pi), self.lap_t(pi));
        let mut gr = vec![0.0; m];
        let mut gi = vec![0.0; m];
        for f in 0..m {
            let a2: f64 = (0..3).map(|c| comp(c)[f] * comp(c)[f]).sum();
            let w = 0.5 * a2 + v[f];
            gr[f] = -0.25 * (lr[f] + lrt[f]) + w * pr[f];
            gi[f] = -0.25 * (li[f] + lit[f]) + w * pi[f];
        }
        for c in 0..3 {
            let ac = comp(c);
            // d/dpsi_r of [-psi_r A.D psi_i + psi_i A.D psi_r] / 2, and the mirror for psi_i
            let a_di: Vec<f64> = self.d(pi, c).iter().zip(ac).map(|(x, y)| x * y).collect();
            let a_dr: Vec<f64> = self.d(pr, c).iter().zip(ac).map(|(x, y)| x * y).collect();
            let api: Vec<f64> = pi.iter().zip(ac).map(|(x, y)| x * y).collect();
            let apr: Vec<f64> = pr.iter().zip(ac).map(|(x, y)| x * y).collect();
            let dt_api = self.dt(&api, c);
            let dt_apr = self.dt(&apr, c);
            for f in 0..m {
                gr[f] += 0.5 * (-a_di[f] + dt_api[f]);
                gi[f] += 0.5 * (a_dr[f] - dt_apr[f]);
            }
        }
        // psi_r' = dH/dpsi_i, psi_i' = -dH/dpsi_r
        (gi, gr.into_iter().map(|x| -x).collect())
    }

    /// Time derivative of `(A, Y)` from the field energy alone.
    pub fn field_rhs(&self, a: &[f64], y: &[f64], c: f64) -> (Vec<f64>, Vec<f64>) {
        let k = c * c / FOUR_PI;
        let da = y.iter().map(|v| FOUR_PI * v).collect();
        let dy = self.curl_t(&self.curl(a)).into_iter().map(|v| -k * v).collect();
        (da, dy)
    }

    /// `1/2 [psi_r D psi_i - psi_i D psi_r - A |psi|^2]` per component.
    pub fn current(&self, pr: &[f64], pi: &[f64], a: &[f64]) -> Vec<f64> {
        let m = self.m();
        let mut out = Vec::with_capacity(3 * m);
        for c in 0..3 {
            let (dr, di) = (self.d(pr, c), self.d(pi, c));
            for f in 0..m {
                out.push(0.5 * (pr[f] * di[f] - pi[f] * dr[f] - a[c * m + f] * (pr[f] * pr[f] + pi[f] * pi[f])));
            }
        }
        out
    }
}

pub fn axis(c: usize) -> Axis {
    Axis::from_index(c).unwrap()
}
