//! Cayley one-step maps for the two subsystems and their compositions.
//!
//! `M_qm(dt)` freezes `A`, advances every wavefunction by the Cayley transform
//! of `Omega(A) dt/2` and pushes `Y` with the midpoint current. `M_em(dt)`
//! advances `(A, Y)` by the Cayley transform of `Q dt/2`. Both are implicit
//! midpoint steps of a linear flow, so they preserve the corresponding
//! quadratic invariants up to the solver tolerance.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{dot, SystemState};
use crate::hamiltonian::{CurlCurlShift, DiscreteHamiltonian, PhysicsConstants, PotentialField, FOUR_PI};
use crate::solver::{bicgstab, SolveStats, SolverConfig};
use crate::sparse::{LinearOperator, ShiftedOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubsystemMap {
    Qm,
    Em,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Substep {
    pub map: SubsystemMap,
    pub dt: f64,
}

/// `(alpha_l, beta_l)` of the triple jump raising order `2l` to `2l + 2`.
pub fn triple_jump_coefficients(l: u32) -> (f64, f64) {
    let alpha = 1.0 / (2.0 - libm::pow(2.0, 1.0 / (2 * l + 1) as f64));
    (alpha, 1.0 - 2.0 * alpha)
}

/// Ordered substeps making up one step of a given order.
#[derive(Clone, Debug, PartialEq)]
pub struct StepPlan {
    order: u32,
    dt: f64,
    substeps: Vec<Substep>,
}

impl StepPlan {
    /// Orders 1, 2, 4, 6, ... are supported.
    pub fn new(order: u32, dt: f64) -> Result<Self> {
        if order == 0 || (order > 2 && order % 2 == 1) {
            return Err(Error::UnsupportedOrder(order));
        }
        if !dt.is_finite() {
            return Err(Error::InvalidParameter("time step must be finite"));
        }
        let mut substeps = Vec::new();
        build_sequence(order, dt, &mut substeps);
        Ok(Self { order, dt, substeps })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn substeps(&self) -> &[Substep] {
        &self.substeps
    }

    /// Total time carried by the substeps of one map.
    pub fn total_duration(&self, map: SubsystemMap) -> f64 {
        self.substeps.iter().filter(|s| s.map == map).map(|s| s.dt).sum()
    }
}

fn build_sequence(order: u32, dt: f64, out: &mut Vec<Substep>) {
    match order {
        1 => {
            out.push(Substep { map: SubsystemMap::Qm, dt });
            out.push(Substep { map: SubsystemMap::Em, dt });
        }
        2 => {
            out.push(Substep { map: SubsystemMap::Em, dt: 0.5 * dt });
            out.push(Substep { map: SubsystemMap::Qm, dt });
            out.push(Substep { map: SubsystemMap::Em, dt: 0.5 * dt });
        }
        _ => {
            let l = order / 2 - 1;
            let (alpha, beta) = triple_jump_coefficients(l);
            build_sequence(2 * l, alpha * dt, out);
            build_sequence(2 * l, beta * dt, out);
            build_sequence(2 * l, alpha * dt, out);
        }
    }
}

/// Running record of every accepted linear solve.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolverAudit {
    pub solves: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
    /// Largest verified relative residual over all accepted solves.
    pub max_residual: f64,
    pub restarts: usize,
    pub failures: usize,
}

impl SolverAudit {
    fn record(&mut self, s: &SolveStats) {
        self.solves += 1;
        self.total_iterations += s.iterations;
        self.max_iterations = self.max_iterations.max(s.iterations);
        self.max_residual = self.max_residual.max(s.residual);
        self.restarts += s.restarts;
    }

    pub fn mean_iterations(&self) -> f64 {
        if self.solves == 0 {
            0.0
        } else {
            self.total_iterations as f64 / self.solves as f64
        }
    }
}

/// Outcome of [`Integrator::run`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub audit: SolverAudit,
}

/// Time stepper for one scenario: the grid-bound Hamiltonian, the atomic
/// potentials (one per electron) and the linear solver settings.
#[derive(Clone, Debug)]
pub struct Integrator {
    ham: DiscreteHamiltonian,
    pots: Vec<PotentialField>,
    solver: SolverConfig,
    audit: SolverAudit,
}

impl Integrator {
    pub fn new(ham: DiscreteHamiltonian, pots: Vec<PotentialField>, solver: SolverConfig) -> Result<Self> {
        solver.validate()?;
        if pots.iter().any(|p| p.field().grid() != ham.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { ham, pots, solver, audit: SolverAudit::default() })
    }

    pub fn hamiltonian(&self) -> &DiscreteHamiltonian {
        &self.ham
    }

    pub fn constants(&self) -> &PhysicsConstants {
        self.ham.constants()
    }

    pub fn potentials(&self) -> &[PotentialField] {
        &self.pots
    }

    pub fn solver_config(&self) -> &SolverConfig {
        &self.solver
    }

    pub fn audit(&self) -> &SolverAudit {
        &self.audit
    }

    pub fn reset_audit(&mut self) {
        self.audit = SolverAudit::default();
    }

    fn check_state(&self, state: &SystemState) -> Result<()> {
        if state.grid() != self.ham.grid() {
            return Err(Error::GridMismatch);
        }
        if state.psi.len() != self.pots.len() {
            return Err(Error::DimensionMismatch { expected: self.pots.len(), found: state.psi.len() });
        }
        Ok(())
    }

    /// `M_qm(dt)`; advances `t` by `dt`.
    pub fn step_qm(&mut self, state: &mut SystemState, dt: f64) -> Result<()> {
        self.check_state(state)?;
        self.qm_map(state, dt)?;
        state.t += dt;
        Ok(())
    }

    /// `M_em(dt)`; advances `t` by `dt`.
    pub fn step_em(&mut self, state: &mut SystemState, dt: f64) -> Result<()> {
        self.check_state(state)?;
        self.em_map(state, dt)?;
        state.t += dt;
        Ok(())
    }

    /// One full step of `plan`; advances `t` by `plan.dt()`. On error the
    /// state is left as it was after the last completed substep.
    pub fn step_composed(&mut self, state: &mut SystemState, plan: &StepPlan) -> Result<()> {
        self.check_state(state)?;
        for s in plan.substeps() {
            match s.map {
                SubsystemMap::Qm => self.qm_map(state, s.dt)?,
                SubsystemMap::Em => self.em_map(state, s.dt)?,
            }
        }
        state.t += plan.dt();
        Ok(())
    }

    /// Takes `n_steps` steps. `observer(step, state)` is called before the
    /// first step, after every `interval`-th step and after the last one.
    /// On error the state holds the last successful substep and the observer
    /// has seen every sample up to the failure.
    pub fn run<F>(
        &mut self,
        state: &mut SystemState,
        plan: &StepPlan,
        n_steps: usize,
        interval: usize,
        mut observer: F,
    ) -> Result<RunSummary>
    where
        F: FnMut(usize, &SystemState) -> Result<()>,
    {
        if interval == 0 {
            return Err(Error::InvalidParameter("diagnostic interval must be at least 1"));
        }
        observer(0, state)?;
        for step in 1..=n_steps {
            self.step_composed(state, plan)?;
            if step % interval == 0 || step == n_steps {
                observer(step, state)?;
            }
        }
        Ok(RunSummary { steps: n_steps, audit: self.audit })
    }

    fn qm_map(&mut self, state: &mut SystemState, dt: f64) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        let h = 0.5 * dt;
        let m = self.ham.grid().len();
        let mut updated = Vec::with_capacity(state.psi.len());
        let mut dy = vec![0.0; 3 * m];
        for (psi, v) in state.psi.iter().zip(&self.pots) {
            let omega = self.ham.omega(&state.a, v)?;
            let x = psi.to_stacked();
            let mut rhs = vec![0.0; 2 * m];
            omega.apply(&x, &mut rhs);
            for (r, xi) in rhs.iter_mut().zip(&x) {
                *r = xi + h * *r;
            }
            let op = ShiftedOperator { op: &omega, scale: h };
            let (x1, stats) = bicgstab(&op, &rhs, &x, &self.solver).map_err(|f| {
                self.audit.failures += 1;
                Error::from(f)
            })?;
            self.audit.record(&stats);
            let mid: Vec<f64> = x.iter().zip(&x1).map(|(a, b)| 0.5 * (a + b)).collect();
            self.ham.add_current(&mid[..m], &mid[m..], state.a.values(), dt, &mut dy);
            updated.push(x1);
        }
        for (psi, x1) in state.psi.iter_mut().zip(&updated) {
            psi.set_stacked(x1);
        }
        for (y, d) in state.y.values_mut().iter_mut().zip(&dy) {
            *y += d;
        }
        Ok(())
    }

    /// Solves `(I - hQ)(A', Y') = (I + hQ)(A, Y)` through its Schur complement
    /// `(I + h^2 c^2 C^T C) A' = r_A + 4 pi h r_Y`, then recovers
    /// `Y' = r_Y - h (c^2/4pi) C^T C A'`. The residual of the full system
    /// equals that of the reduced one, so the reduced tolerance is rescaled
    /// to keep the full relative residual within `tol`.
    fn em_map(&mut self, state: &mut SystemState, dt: f64) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        let h = 0.5 * dt;
        let c = self.ham.constants().c;
        let k = c * c / FOUR_PI;
        let st = self.ham.stencil();
        let m3 = 3 * st.len();
        let a = state.a.values();
        let y = state.y.values();

        let mut ctc = vec![0.0; m3];
        let mut scratch = vec![0.0; m3];
        st.curl_t_curl(a, &mut ctc, &mut scratch);
        let r_a: Vec<f64> = a.iter().zip(y).map(|(a, y)| a + h * FOUR_PI * y).collect();
        let r_y: Vec<f64> = y.iter().zip(&ctc).map(|(y, w)| y - h * k * w).collect();
        let full_norm = libm::sqrt(dot(&r_a, &r_a) + dot(&r_y, &r_y));
        if full_norm == 0.0 {
            state.a.values_mut().iter_mut().for_each(|v| *v = 0.0);
            state.y.values_mut().iter_mut().for_each(|v| *v = 0.0);
            return Ok(());
        }
        let b: Vec<f64> = r_a.iter().zip(&r_y).map(|(ra, ry)| ra + FOUR_PI * h * ry).collect();
        let b_norm = libm::sqrt(dot(&b, &b));

        let (a1, mut stats) = if b_norm == 0.0 {
            (vec![0.0; m3], SolveStats::default())
        } else {
            let op = CurlCurlShift::new(st, h * h * c * c);
            let cfg = SolverConfig { tol: self.solver.tol * full_norm / b_norm, ..self.solver };
            // explicit predictor for A'
            let guess: Vec<f64> = a.iter().zip(y).map(|(a, y)| a + dt * FOUR_PI * y).collect();
            bicgstab(&op, &b, &guess, &cfg).map_err(|f| {
                self.audit.failures += 1;
                Error::from(f)
            })?
        };
        st.curl_t_curl(&a1, &mut ctc, &mut scratch);
        let y1: Vec<f64> = r_y.iter().zip(&ctc).map(|(ry, w)| ry - h * k * w).collect();

        // verified residual of the full 6M system
        let x1: Vec<f64> = a1.iter().chain(&y1).copied().collect();
        let rhs: Vec<f64> = r_a.iter().chain(&r_y).copied().collect();
        let q = self.ham.q();
        let mut res = vec![0.0; 2 * m3];
        ShiftedOperator { op: &q, scale: h }.apply(&x1, &mut res);
        for (r, b) in res.iter_mut().zip(&rhs) {
            *r -= b;
        }
        stats.residual = libm::sqrt(dot(&res, &res)) / full_norm;
        if stats.residual > self.solver.tol {
            self.audit.failures += 1;
            return Err(Error::NotConverged { iterations: stats.iterations, residual: stats.residual });
        }
        self.audit.record(&stats);

        state.a.values_mut().copy_from_slice(&a1);
        state.y.values_mut().copy_from_slice(&y1);
        Ok(())
    }
}
