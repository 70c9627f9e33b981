//! Builds a scenario from its configuration, runs it, and writes the series,
//! snapshots, spectra and manifest into an output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use smx_core::diagnostics::{dipole, hhg_spectrum, ionization_flux, FluxSurface, ModeAccumulator};
use smx_core::grid::{Axis, SystemState, VectorField, Wavefunction};
use smx_core::hamiltonian::{probability, DiscreteHamiltonian, PotentialField};
use smx_core::integrators::{Integrator, SolverAudit, StepPlan};
use smx_core::scenarios::{coulomb_potential, init_gaussian_pulse, init_hydrogen_ground_state, outer_density};

use crate::config::{FieldKind, ScenarioConfig, SnapshotField, WavefunctionKind};
use crate::error::SimError;
use crate::manifest::{collect_artifacts, sha256_hex, write_manifest, RunManifest};
use crate::series_io::SeriesWriter;
use crate::snapshot::{write_snapshot, Snapshot};

pub const SERIES_NAME: &str = "series.tsv";
pub const CONFIG_COPY_NAME: &str = "config.toml";

/// Command-line overrides; physics always comes from the file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOverrides {
    pub n_steps: Option<usize>,
    pub interval: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub steps_completed: usize,
    pub audit: SolverAudit,
    pub series_path: PathBuf,
}

/// Initial state and potentials: one electron per atom.
pub fn build_initial_state(cfg: &ScenarioConfig) -> Result<(SystemState, Vec<PotentialField>), SimError> {
    let g = cfg.grid;
    let mut psi = Vec::with_capacity(cfg.atoms.len());
    let mut pots = Vec::with_capacity(cfg.atoms.len());
    for atom in &cfg.atoms {
        pots.push(coulomb_potential(&g, atom)?);
        psi.push(match cfg.file.initial.wavefunction {
            WavefunctionKind::HydrogenGroundState => init_hydrogen_ground_state(&g, atom)?,
            WavefunctionKind::Zero => Wavefunction::zeros(g),
        });
    }
    let init = &cfg.file.initial;
    let (a, y) = match init.field {
        FieldKind::Zero => (VectorField::zeros(g), VectorField::zeros(g)),
        FieldKind::GaussianPulse => {
            init_gaussian_pulse(&g, init.amplitude, init.center_z, init.width2, init.polarization.into())?
        }
    };
    Ok((SystemState::new(psi, a, y, 0.0)?, pots))
}

/// Channel layout of the series file for a scenario.
pub fn channel_names(cfg: &ScenarioConfig) -> Vec<String> {
    let d = &cfg.file.diagnostics;
    let ne = cfg.atoms.len();
    let mut ch: Vec<String> = (0..ne).map(|e| format!("prob_{e}")).collect();
    ch.extend(["H_d", "H_dqm", "H_dem"].map(String::from));
    if d.probe.is_some() {
        for e in 0..ne {
            ch.push(format!("probe_re_{e}"));
            ch.push(format!("probe_im_{e}"));
        }
    }
    if d.dipole {
        for e in 0..ne {
            ch.extend(["x", "y", "z"].map(|c| format!("dipole_{c}_{e}")));
        }
    }
    if d.outer_radius.is_some() {
        ch.extend((0..ne).map(|e| format!("outer_density_{e}")));
    }
    if cfg.flux_margin.is_some() {
        ch.extend((0..ne).map(|e| format!("flux_{e}")));
    }
    for p in 0..d.field_probes.len() {
        ch.extend(["x", "y", "z"].map(|c| format!("field_probe{p}_a_{c}")));
    }
    ch
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn field_values(state: &SystemState, f: SnapshotField, e: usize) -> Vec<f64> {
    let m = state.grid().len();
    let comp = |v: &VectorField, a: Axis| v.component(a).to_vec();
    match f {
        SnapshotField::PsiRe => state.psi[e].re.values().to_vec(),
        SnapshotField::PsiIm => state.psi[e].im.values().to_vec(),
        SnapshotField::Density => {
            let (r, i) = (state.psi[e].re.values(), state.psi[e].im.values());
            (0..m).map(|j| 0.5 * (r[j] * r[j] + i[j] * i[j])).collect()
        }
        SnapshotField::AX => comp(&state.a, Axis::X),
        SnapshotField::AY => comp(&state.a, Axis::Y),
        SnapshotField::AZ => comp(&state.a, Axis::Z),
        SnapshotField::YX => comp(&state.y, Axis::X),
        SnapshotField::YY => comp(&state.y, Axis::Y),
        SnapshotField::YZ => comp(&state.y, Axis::Z),
    }
}

/// Values of `values` on the node plane nearest `z`, in snapshot order.
fn plane_values(state: &SystemState, values: &[f64], z: f64) -> Vec<f64> {
    Snapshot::z_plane("", state.grid(), 0.0, values, z).data
}

struct Recorder<'c> {
    cfg: &'c ScenarioConfig,
    dir: PathBuf,
    series: SeriesWriter,
    probe_node: Option<usize>,
    flux: Option<FluxSurface>,
    field_nodes: Vec<usize>,
    modes: Vec<Vec<ModeAccumulator>>,
    dipole_times: Vec<f64>,
    dipoles: Vec<Vec<[f64; 3]>>,
    row: Vec<f64>,
}

impl<'c> Recorder<'c> {
    fn new(cfg: &'c ScenarioConfig, dir: &Path) -> Result<Self, SimError> {
        let g = &cfg.grid;
        let d = &cfg.file.diagnostics;
        let channels = channel_names(cfg);
        let series = SeriesWriter::create(&dir.join(SERIES_NAME), &channels)?;
        let plane_len = g.nx() * g.ny();
        let modes = d
            .mode_frequencies
            .iter()
            .map(|&nu| (0..cfg.atoms.len()).map(|_| ModeAccumulator::new(nu, 2 * plane_len)).collect())
            .collect();
        Ok(Self {
            cfg,
            dir: dir.to_owned(),
            series,
            probe_node: d.probe.map(|p| g.nearest_node(p)),
            flux: cfg.flux_margin.map(|m| {
                let n = g.dims();
                FluxSurface { lo: [m; 3], hi: [n[0] - 1 - m, n[1] - 1 - m, n[2] - 1 - m] }
            }),
            field_nodes: d.field_probes.iter().map(|&p| g.nearest_node(p)).collect(),
            modes,
            dipole_times: Vec::new(),
            dipoles: vec![Vec::new(); cfg.atoms.len()],
            row: Vec::with_capacity(channels.len()),
        })
    }

    /// Records one series row. Spectral accumulators only take `regular`
    /// samples so that their spacing stays uniform when the run length is
    /// not a multiple of the interval.
    fn sample(
        &mut self,
        ham: &DiscreteHamiltonian,
        pots: &[PotentialField],
        state: &SystemState,
        regular: bool,
    ) -> Result<(), SimError> {
        let d = &self.cfg.file.diagnostics;
        self.row.clear();
        for psi in &state.psi {
            self.row.push(probability(psi));
        }
        let e = ham.total_energy(state, pots)?;
        self.row.extend([e.total, e.qm_total(), e.em]);
        if let Some(j) = self.probe_node {
            for psi in &state.psi {
                self.row.push(psi.re.values()[j]);
                self.row.push(psi.im.values()[j]);
            }
        }
        if d.dipole {
            if regular {
                self.dipole_times.push(state.t);
            }
            for (k, (psi, atom)) in state.psi.iter().zip(&self.cfg.atoms).enumerate() {
                let p = dipole(psi, atom.center);
                self.row.extend(p);
                if regular {
                    self.dipoles[k].push(p);
                }
            }
        }
        if let Some(r) = d.outer_radius {
            for (psi, atom) in state.psi.iter().zip(&self.cfg.atoms) {
                self.row.push(outer_density(psi, atom.center, r)?);
            }
        }
        if let Some(s) = &self.flux {
            for psi in &state.psi {
                self.row.push(ionization_flux(psi, s)?);
            }
        }
        for &j in &self.field_nodes {
            self.row.extend(state.a.node(j));
        }
        self.series.append(state.t, &self.row)?;
        if !regular {
            return Ok(());
        }

        let z = d.snapshot_plane_z.unwrap_or(0.0);
        for per_nu in &mut self.modes {
            for (acc, psi) in per_nu.iter_mut().zip(&state.psi) {
                let mut v = plane_values(state, psi.re.values(), z);
                v.extend(plane_values(state, psi.im.values(), z));
                acc.push(state.t, &v)?;
            }
        }
        Ok(())
    }

    fn snapshot(&self, step: usize, state: &SystemState) -> Result<(), SimError> {
        let d = &self.cfg.file.diagnostics;
        let g = state.grid();
        for &f in &d.snapshot_fields {
            let electrons = if f.per_electron() { state.psi.len() } else { 1 };
            for e in 0..electrons {
                let values = field_values(state, f, e);
                let name = if f.per_electron() { format!("{}_e{e}", f.name()) } else { f.name().to_owned() };
                let snap = match d.snapshot_plane_z {
                    Some(z) => Snapshot::z_plane(&name, g, state.t, &values, z),
                    None => Snapshot::full(&name, g, state.t, 1, values),
                };
                write_snapshot(&snap, &self.dir.join(format!("snap_{name}_{step:08}.f64")))?;
            }
        }
        Ok(())
    }

    /// Mode images and spectra from what was accumulated.
    fn finish(self) -> Result<(), SimError> {
        let d = &self.cfg.file.diagnostics;
        let g = &self.cfg.grid;
        let z = d.snapshot_plane_z.unwrap_or(0.0);
        let k = g.nearest_plane(Axis::Z, z);
        for (i, per_nu) in self.modes.into_iter().enumerate() {
            for (e, acc) in per_nu.into_iter().enumerate() {
                if acc.count() < 2 {
                    log::warn!("mode {i}: fewer than two samples, skipped");
                    continue;
                }
                let mode = acc.finish()?;
                for (part, data) in [("re", mode.re), ("im", mode.im)] {
                    let mut origin = g.origin();
                    origin[2] = g.position(0, 0, k)[2];
                    let snap = Snapshot {
                        meta: crate::snapshot::SnapshotMeta {
                            name: format!("mode{i}_e{e}_{part}"),
                            dims: [g.nx(), g.ny(), 1],
                            spacing: g.spacing(),
                            origin,
                            time: mode.nu,
                            components: 2,
                        },
                        data,
                    };
                    write_snapshot(&snap, &self.dir.join(format!("mode{i}_e{e}_{part}.f64")))?;
                }
            }
        }
        if !d.hhg_omegas.is_empty() && self.dipole_times.len() < 5 {
            log::warn!("spectrum skipped: only {} dipole samples", self.dipole_times.len());
        } else if !d.hhg_omegas.is_empty() {
            for (e, dip) in self.dipoles.iter().enumerate() {
                let f = hhg_spectrum(&self.dipole_times, dip, &d.hhg_omegas)?;
                let path = self.dir.join(format!("spectrum_e{e}.tsv"));
                let mut text = String::from("omega\tabs_F\n");
                for (w, v) in d.hhg_omegas.iter().zip(&f) {
                    text.push_str(&format!("{w:.16e}\t{v:.16e}\n"));
                }
                fs::write(&path, text).map_err(|e| SimError::io(&path, e))?;
            }
        }
        Ok(())
    }
}

/// Runs `cfg` and writes every artifact plus the manifest into `out_dir`.
/// An aborted run still leaves its partial series and a manifest whose
/// status names the failure.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    config_text: &str,
    out_dir: &Path,
    overrides: RunOverrides,
) -> Result<RunReport, SimError> {
    let start = unix_now();
    fs::create_dir_all(out_dir).map_err(|e| SimError::io(out_dir, e))?;
    let copy = out_dir.join(CONFIG_COPY_NAME);
    fs::write(&copy, config_text).map_err(|e| SimError::io(&copy, e))?;

    let n_steps = overrides.n_steps.unwrap_or(cfg.n_steps);
    let interval = overrides.interval.unwrap_or(cfg.interval).max(1);
    let (mut state, pots) = build_initial_state(cfg)?;
    let ham = DiscreteHamiltonian::new(&cfg.grid, cfg.consts);
    let mut integ = Integrator::new(ham.clone(), pots.clone(), cfg.solver)?;
    let plan = StepPlan::new(cfg.order, cfg.dt)?;
    log::info!(
        "{}: grid {:?}, dt {:.6e}, {} steps, order {}",
        cfg.file.name,
        cfg.grid.dims(),
        cfg.dt,
        n_steps,
        cfg.order
    );

    let mut rec = Recorder::new(cfg, out_dir)?;
    let snap_every = cfg.snapshot_interval;
    let mut completed = 0;
    let mut sim_err: Option<SimError> = None;
    let result = integ.run(&mut state, &plan, n_steps, 1, |step, s| {
        completed = step;
        let sampled = if step % interval == 0 || step == n_steps {
            rec.sample(&ham, &pots, s, step % interval == 0)
        } else {
            Ok(())
        };
        let snapped = match sampled {
            Ok(()) if snap_every > 0 && (step % snap_every == 0 || step == n_steps) => rec.snapshot(step, s),
            other => other,
        };
        if step > 0 && step % 1000 == 0 {
            log::info!("step {step}/{n_steps}, t = {:.6}", s.t);
        }
        snapped.map_err(|e| {
            sim_err = Some(e);
            smx_core::Error::InvalidParameter("diagnostics failed")
        })
    });

    let outcome = match (result, sim_err) {
        (_, Some(e)) => Err(e),
        (Err(e), None) => Err(SimError::from(e)),
        (Ok(_), None) => rec.finish(),
    };
    let status = match &outcome {
        Ok(()) => "completed".to_owned(),
        Err(e) => format!("aborted: {e}"),
    };
    let manifest = RunManifest {
        config_sha256: sha256_hex(config_text.as_bytes()),
        code_version: env!("CARGO_PKG_VERSION").to_owned(),
        start_time: start,
        end_time: unix_now(),
        steps_completed: completed as u64,
        status,
        artifacts: collect_artifacts(out_dir)?,
    };
    write_manifest(out_dir, &manifest)?;
    outcome?;
    let audit = *integ.audit();
    log::info!(
        "done: {} solves, mean {:.2} iterations, max verified residual {:.3e}",
        audit.solves,
        audit.mean_iterations(),
        audit.max_residual
    );
    Ok(RunReport { steps_completed: completed, audit, series_path: out_dir.join(SERIES_NAME) })
}
