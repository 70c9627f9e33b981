//! Discrete Hamiltonians, current density, and the two subsystem generators.
//!
//! The discrete bracket carries a `1/dV` that cancels the `dV` in the
//! Hamiltonian, so neither generator contains a cell-volume factor:
//!
//! * quantum generator `Omega(A) = J S`, with `S` the Hessian of `H_qm / dV`
//!   in the stacked variables `(psi_r, psi_i)` and `J = [[0, I], [-I, 0]]`.
//!   In block form `Omega = [[D, B], [-B, D]]`, where
//!   `B = -(L + L^T)/4 + diag(|A|^2/2 + V)` is symmetric and
//!   `D = 1/2 sum_c (diag(A_c) D_c - D_c^T diag(A_c))` is skew;
//! * field generator `Q = [[0, 4 pi I], [-(c^2 / 4 pi) C^T C, 0]]` on `(A, Y)`.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{dot, Grid3D, ScalarField, SystemState, VectorField, Wavefunction};
use crate::operators::{assemble_operator_matrix, OperatorKind, Stencil};
use crate::sparse::{LinearOperator, SparseMatrix, TripletBuilder};

pub const FOUR_PI: f64 = 4.0 * PI;

/// Speed of light in atomic units (CODATA 2018).
pub const SPEED_OF_LIGHT_AU: f64 = 137.035_999_084;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicsConstants {
    /// Speed of light in atomic units.
    pub c: f64,
}

impl Default for PhysicsConstants {
    fn default() -> Self {
        Self { c: SPEED_OF_LIGHT_AU }
    }
}

impl PhysicsConstants {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter("speed of light must be positive"));
        }
        Ok(Self { c })
    }
}

/// A nucleus of charge `z` fixed at `center`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtomSpec {
    pub z: f64,
    pub center: [f64; 3],
}

impl AtomSpec {
    pub fn hydrogen_at_origin() -> Self {
        Self { z: 1.0, center: [0.0; 3] }
    }
}

/// Atomic potential `V_i` sampled at the nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialField(pub ScalarField);

impl PotentialField {
    pub fn zeros(grid: Grid3D) -> Self {
        Self(ScalarField::zeros(grid))
    }

    pub fn field(&self) -> &ScalarField {
        &self.0
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }
}

/// Total probability `dV sum (psi_r^2 + psi_i^2) / 2`.
pub fn probability(psi: &Wavefunction) -> f64 {
    let g = psi.grid();
    0.5 * g.cell_volume() * (dot(psi.re.values(), psi.re.values()) + dot(psi.im.values(), psi.im.values()))
}

/// Energy split by subsystem; `total == em + qm.iter().sum()`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyBreakdown {
    pub em: f64,
    /// One entry per electron.
    pub qm: Vec<f64>,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn qm_total(&self) -> f64 {
        self.qm.iter().sum()
    }
}

/// Grid-bound evaluator for the discrete Hamiltonian and its generators.
#[derive(Clone, Debug)]
pub struct DiscreteHamiltonian {
    stencil: Stencil,
    consts: PhysicsConstants,
}

impl DiscreteHamiltonian {
    pub fn new(grid: &Grid3D, consts: PhysicsConstants) -> Self {
        Self { stencil: Stencil::new(grid), consts }
    }

    pub fn grid(&self) -> &Grid3D {
        self.stencil.grid()
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    pub fn constants(&self) -> &PhysicsConstants {
        &self.consts
    }

    fn check(&self, g: &Grid3D) -> Result<()> {
        if g != self.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `1/2 sum_J [4 pi Y_J^2 + (c curl_d A)_J^2 / 4 pi] dV`.
    pub fn energy_em(&self, a: &VectorField, y: &VectorField) -> Result<f64> {
        self.check(a.grid())?;
        self.check(y.grid())?;
        let mut curl = vec![0.0; a.values().len()];
        self.stencil.curl(a.values(), &mut curl);
        let c2 = self.consts.c * self.consts.c;
        let sum = FOUR_PI * dot(y.values(), y.values()) + c2 / FOUR_PI * dot(&curl, &curl);
        Ok(0.5 * sum * self.grid().cell_volume())
    }

    /// Single-electron quantum energy, evaluated term by term from the
    /// discrete Hamiltonian.
    pub fn energy_qm(&self, psi: &Wavefunction, a: &VectorField, v: &PotentialField) -> Result<f64> {
        self.check(psi.grid())?;
        self.check(a.grid())?;
        self.check(v.0.grid())?;
        let m = self.grid().len();
        let (pr, pi) = (psi.re.values(), psi.im.values());
        let mut lap_r = vec![0.0; m];
        let mut lap_i = vec![0.0; m];
        self.stencil.laplacian(pr, &mut lap_r);
        self.stencil.laplacian(pi, &mut lap_i);
        let mut grad_r = vec![0.0; 3 * m];
        let mut grad_i = vec![0.0; 3 * m];
        self.stencil.grad(pr, &mut grad_r);
        self.stencil.grad(pi, &mut grad_i);
        let av = a.values();
        let vv = v.values();
        let mut sum = 0.0;
        for j in 0..m {
            let mut a_dot_gi = 0.0;
            let mut a_dot_gr = 0.0;
            let mut a2 = 0.0;
            for c in 0..3 {
                let ac = av[c * m + j];
                a_dot_gi += ac * grad_i[c * m + j];
                a_dot_gr += ac * grad_r[c * m + j];
                a2 += ac * ac;
            }
            sum += -0.5 * pr[j] * lap_r[j] - 0.5 * pi[j] * lap_i[j] - pr[j] * a_dot_gi
                + pi[j] * a_dot_gr
                + (0.5 * a2 + vv[j]) * (pr[j] * pr[j] + pi[j] * pi[j]);
        }
        Ok(0.5 * sum * self.grid().cell_volume())
    }

    pub fn total_energy(&self, state: &SystemState, pots: &[PotentialField]) -> Result<EnergyBreakdown> {
        if pots.len() != state.psi.len() {
            return Err(Error::DimensionMismatch { expected: state.psi.len(), found: pots.len() });
        }
        let em = self.energy_em(&state.a, &state.y)?;
        let qm = state
            .psi
            .iter()
            .zip(pots)
            .map(|(psi, v)| self.energy_qm(psi, &state.a, v))
            .collect::<Result<Vec<_>>>()?;
        let total = em + qm.iter().sum::<f64>();
        Ok(EnergyBreakdown { em, qm, total })
    }

    /// Single-electron current
    /// `1/2 [psi_r grad_d psi_i - psi_i grad_d psi_r - A (psi_r^2 + psi_i^2)]`.
    pub fn current_density(&self, psi: &Wavefunction, a: &VectorField) -> Result<VectorField> {
        self.check(psi.grid())?;
        self.check(a.grid())?;
        let mut out = vec![0.0; 3 * self.grid().len()];
        self.add_current(psi.re.values(), psi.im.values(), a.values(), 1.0, &mut out);
        VectorField::from_values(*self.grid(), out)
    }

    /// `out += scale * current(psi_r, psi_i, a)`.
    pub(crate) fn add_current(&self, pr: &[f64], pi: &[f64], a: &[f64], scale: f64, out: &mut [f64]) {
        let m = self.grid().len();
        let s = 0.5 * scale;
        for c in 0..3 {
            let ih = self.stencil.inv_h(c);
            let oc = &mut out[c * m..(c + 1) * m];
            let ac = &a[c * m..(c + 1) * m];
            for j in 0..m {
                let b = self.stencil.back(c, j);
                let gi = (pi[j] - pi[b]) * ih;
                let gr = (pr[j] - pr[b]) * ih;
                oc[j] += s * (pr[j] * gi - pi[j] * gr - ac[j] * (pr[j] * pr[j] + pi[j] * pi[j]));
            }
        }
    }

    /// Quantum generator `Omega(A)` for one electron with potential `v`.
    pub fn omega<'h>(&'h self, a: &VectorField, v: &PotentialField) -> Result<GeneratorQm<'h>> {
        self.check(a.grid())?;
        self.check(v.0.grid())?;
        let m = self.grid().len();
        let av = a.values().to_vec();
        let w = (0..m)
            .map(|j| {
                let a2 = av[j] * av[j] + av[m + j] * av[m + j] + av[2 * m + j] * av[2 * m + j];
                0.5 * a2 + v.values()[j]
            })
            .collect();
        Ok(GeneratorQm { ham: self, a: av, w })
    }

    /// Constant field generator `Q`.
    pub fn q(&self) -> GeneratorEm<'_> {
        GeneratorEm { ham: self }
    }
}

/// `Omega(A)` acting on stacked `(psi_r, psi_i)` of length `2M`.
#[derive(Clone, Debug)]
pub struct GeneratorQm<'h> {
    ham: &'h DiscreteHamiltonian,
    a: Vec<f64>,
    /// `|A|^2/2 + V` per node.
    w: Vec<f64>,
}

impl GeneratorQm<'_> {
    pub fn gauge_field(&self) -> &[f64] {
        &self.a
    }

    /// `S`, the Hessian of `H_qm / dV` in `(psi_r, psi_i)`: `[[B, -D], [D, B]]`.
    pub fn hessian(&self) -> Result<SparseMatrix> {
        let grid = self.ham.grid();
        let m = grid.len();
        let sym = assemble_operator_matrix(OperatorKind::SymLaplacian, grid)?;
        let b = sym.add_scaled(-0.5, &SparseMatrix::from_diagonal(&self.w), 1.0)?;
        let a = VectorField::from_values(*grid, self.a.clone())?;
        let d = assemble_operator_matrix(OperatorKind::Advection(&a), grid)?;
        let mut t = TripletBuilder::new(2 * m, 2 * m);
        t.push_block(0, 0, &b, 1.0);
        t.push_block(m, m, &b, 1.0);
        t.push_block(0, m, &d, -1.0);
        t.push_block(m, 0, &d, 1.0);
        t.finish()
    }

    /// Sparse `Omega = J S`.
    pub fn assemble(&self) -> Result<SparseMatrix> {
        let m = self.ham.grid().len();
        let mut j = TripletBuilder::with_capacity(2 * m, 2 * m, 2 * m);
        for i in 0..m {
            j.push(i, m + i, 1.0);
            j.push(m + i, i, -1.0);
        }
        j.finish()?.matmul(&self.hessian()?)
    }
}

impl LinearOperator for GeneratorQm<'_> {
    fn dim(&self) -> usize {
        2 * self.ham.grid().len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let st = &self.ham.stencil;
        let m = st.len();
        let (xr, xi) = x.split_at(m);
        let (yr, yi) = y.split_at_mut(m);
        let a = &self.a;
        for j in 0..m {
            let mut dr = 0.0;
            let mut di = 0.0;
            let mut sr = 0.0;
            let mut si = 0.0;
            for c in 0..3 {
                let ih = st.inv_h(c);
                let b1 = st.back(c, j);
                let f1 = st.fwd(c, j);
                let b2 = st.back(c, b1);
                let f2 = st.fwd(c, f1);
                let af = a[c * m + f1];
                let aj = a[c * m + j];
                dr += (af * xr[f1] - aj * xr[b1]) * ih;
                di += (af * xi[f1] - aj * xi[b1]) * ih;
                let ih2 = ih * ih;
                sr += (0.5 * (xr[b2] + xr[f2]) - (xr[b1] + xr[f1]) + xr[j]) * ih2;
                si += (0.5 * (xi[b2] + xi[f2]) - (xi[b1] + xi[f1]) + xi[j]) * ih2;
            }
            let w = self.w[j];
            // B x = -sym_laplacian(x)/2 + w x
            let br = -0.5 * sr + w * xr[j];
            let bi = -0.5 * si + w * xi[j];
            yr[j] = 0.5 * dr + bi;
            yi[j] = 0.5 * di - br;
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.dim()])
    }
}

/// `Q` acting on stacked `(A, Y)` of length `6M`.
#[derive(Clone, Copy, Debug)]
pub struct GeneratorEm<'h> {
    ham: &'h DiscreteHamiltonian,
}

impl GeneratorEm<'_> {
    /// Coefficient of `C^T C` in the `Y` row: `c^2 / 4 pi`.
    pub fn stiffness(&self) -> f64 {
        let c = self.ham.consts.c;
        c * c / FOUR_PI
    }

    pub fn assemble(&self) -> Result<SparseMatrix> {
        let grid = self.ham.grid();
        let m3 = 3 * grid.len();
        let k = assemble_operator_matrix(OperatorKind::CurlTCurl, grid)?;
        let mut t = TripletBuilder::new(2 * m3, 2 * m3);
        t.push_block(0, m3, &SparseMatrix::identity(m3), FOUR_PI);
        t.push_block(m3, 0, &k, -self.stiffness());
        t.finish()
    }
}

impl LinearOperator for GeneratorEm<'_> {
    fn dim(&self) -> usize {
        6 * self.ham.grid().len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m3 = 3 * self.ham.grid().len();
        let (xa, xy) = x.split_at(m3);
        let (ya, yy) = y.split_at_mut(m3);
        for (o, v) in ya.iter_mut().zip(xy) {
            *o = FOUR_PI * v;
        }
        let mut scratch = vec![0.0; m3];
        self.ham.stencil.curl_t_curl(xa, yy, &mut scratch);
        let s = -self.stiffness();
        yy.iter_mut().for_each(|v| *v *= s);
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.dim()])
    }
}

/// `x + s C^T C x` on `3M` values: the reduced system of the field Cayley step.
#[derive(Debug)]
pub(crate) struct CurlCurlShift<'h> {
    stencil: &'h Stencil,
    s: f64,
    scratch: RefCell<Vec<f64>>,
}

impl<'h> CurlCurlShift<'h> {
    pub(crate) fn new(stencil: &'h Stencil, s: f64) -> Self {
        Self { stencil, s, scratch: RefCell::new(vec![0.0; 3 * stencil.len()]) }
    }
}

impl LinearOperator for CurlCurlShift<'_> {
    fn dim(&self) -> usize {
        3 * self.stencil.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut scratch = self.scratch.borrow_mut();
        self.stencil.shifted_curl_t_curl(x, self.s, y, &mut scratch);
    }
}

/// `H_dem` for fields on their own grid.
pub fn energy_em(a: &VectorField, y: &VectorField, consts: &PhysicsConstants) -> Result<f64> {
    DiscreteHamiltonian::new(a.grid(), *consts).energy_em(a, y)
}

/// Single-electron `H_dqm`.
pub fn energy_qm(psi: &Wavefunction, a: &VectorField, v: &PotentialField) -> Result<f64> {
    DiscreteHamiltonian::new(psi.grid(), PhysicsConstants::default()).energy_qm(psi, a, v)
}

pub fn total_energy(state: &SystemState, pots: &[PotentialField], consts: &PhysicsConstants) -> Result<EnergyBreakdown> {
    DiscreteHamiltonian::new(state.grid(), *consts).total_energy(state, pots)
}

pub fn current_density(psi: &Wavefunction, a: &VectorField) -> Result<VectorField> {
    DiscreteHamiltonian::new(psi.grid(), PhysicsConstants::default()).current_density(psi, a)
}
