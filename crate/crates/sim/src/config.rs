//! Scenario configuration: TOML schema, defaults and validation.

use serde::{Deserialize, Serialize};
use smx_core::grid::{Axis, Grid3D};
use smx_core::hamiltonian::{AtomSpec, PhysicsConstants, SPEED_OF_LIGHT_AU};
use smx_core::scenarios::cfl_dt;
use smx_core::solver::SolverConfig;

use crate::error::SimError;

/// Human-readable schema, printed by `describe-schema`.
pub const SCHEMA: &str = r#"# Scenario file (TOML). Unknown keys are rejected.
name = "hydrogen"                 # optional label, default "scenario"

[grid]
n = 48                           # nodes per axis: integer or [nx, ny, nz], each >= 3
lo = -5.0                        # box lower corner: number or [x, y, z]   (default -5)
hi = 5.0                         # box upper corner: number or [x, y, z]   (default 5)
                                 # nodes are cell centered: x_i = lo + (i + 1/2) (hi - lo) / n

[[atoms]]                        # one electron per atom, bound by -Z/|x - center|
z = 1.0                          # default 1
center = [0.0, 0.0, 0.0]         # default origin

[initial]
wavefunction = "hydrogen_ground_state"   # or "zero"
field = "zero"                   # or "gaussian_pulse"
amplitude = 100.0                # gaussian_pulse: A = amplitude exp(-(z - center_z)^2 / width2) e_pol
center_z = -2.5
width2 = 0.25
polarization = "x"               # "x" | "y" | "z"

[time]
cfl_coefficient = 1.5            # dt = coefficient * delta / (sqrt(3) c)   (default 1.5)
# dt = 1e-3                      # explicit time step; overrides cfl_coefficient
n_steps = 1000                   # >= 1                                     (default 1000)
order = 1                        # 1, 2, 4, 6, ...                          (default 1)

[physics]
c = 137.035999084                # speed of light, a.u.

[solver]
tol = 1e-9                       # relative residual of every Cayley solve
max_iter = 10000

[diagnostics]
interval = 10                    # steps between series samples (default 10)
probe = [0.0, 0.0, 0.0]          # psi_r/psi_i probe at the node nearest this point; omit to disable
dipole = false                   # dipole channels per electron
outer_radius = 3.0               # outer-density channel (mean |psi|^2 beyond this radius); omit to disable
flux_margin = 2                  # flux channel through the box of nodes margin..n-1-margin; omit to disable
field_probes = []                # A components recorded at the nodes nearest these points
mode_frequencies = []            # nu values (a.u.); Fourier images of psi on the snapshot plane
hhg_omegas = []                  # omega grid (a.u.) for the dipole-acceleration spectrum (needs dipole)
snapshot_interval = 0            # steps between snapshots; 0 disables
snapshot_plane_z = 0.0           # snapshots keep only the node plane nearest this z; omit for full 3D
snapshot_fields = ["psi_re", "psi_im"]   # any of psi_re, psi_im, density, a_x, a_y, a_z, y_x, y_y, y_z
"#;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAxis<T> {
    Uniform(T),
    Each([T; 3]),
}

impl<T: Copy> PerAxis<T> {
    pub fn resolve(&self) -> [T; 3] {
        match *self {
            PerAxis::Uniform(v) => [v, v, v],
            PerAxis::Each(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: PerAxis<i64>,
    #[serde(default = "default_lo")]
    pub lo: PerAxis<f64>,
    #[serde(default = "default_hi")]
    pub hi: PerAxis<f64>,
}

fn default_lo() -> PerAxis<f64> {
    PerAxis::Uniform(-5.0)
}

fn default_hi() -> PerAxis<f64> {
    PerAxis::Uniform(5.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSection {
    #[serde(default = "one")]
    pub z: f64,
    #[serde(default)]
    pub center: [f64; 3],
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WavefunctionKind {
    #[default]
    HydrogenGroundState,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    #[default]
    Zero,
    GaussianPulse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    #[default]
    X,
    Y,
    Z,
}

impl From<AxisName> for Axis {
    fn from(a: AxisName) -> Axis {
        match a {
            AxisName::X => Axis::X,
            AxisName::Y => Axis::Y,
            AxisName::Z => Axis::Z,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub wavefunction: WavefunctionKind,
    #[serde(default)]
    pub field: FieldKind,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_center_z")]
    pub center_z: f64,
    #[serde(default = "default_width2")]
    pub width2: f64,
    #[serde(default)]
    pub polarization: AxisName,
}

fn default_amplitude() -> f64 {
    100.0
}

fn default_center_z() -> f64 {
    -2.5
}

fn default_width2() -> f64 {
    0.25
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            wavefunction: WavefunctionKind::default(),
            field: FieldKind::default(),
            amplitude: default_amplitude(),
            center_z: default_center_z(),
            width2: default_width2(),
            polarization: AxisName::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl_coefficient: f64,
    #[serde(default = "default_steps")]
    pub n_steps: i64,
    #[serde(default = "default_order")]
    pub order: i64,
}

fn default_cfl() -> f64 {
    1.5
}

fn default_steps() -> i64 {
    1000
}

fn default_order() -> i64 {
    1
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { dt: None, cfl_coefficient: default_cfl(), n_steps: default_steps(), order: default_order() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    #[serde(default = "default_c")]
    pub c: f64,
}

fn default_c() -> f64 {
    SPEED_OF_LIGHT_AU
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self { c: default_c() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: i64,
}

fn default_tol() -> f64 {
    1e-9
}

fn default_max_iter() -> i64 {
    10_000
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { tol: default_tol(), max_iter: default_max_iter() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotField {
    PsiRe,
    PsiIm,
    Density,
    AX,
    AY,
    AZ,
    YX,
    YY,
    YZ,
}

impl SnapshotField {
    pub fn name(self) -> &'static str {
        match self {
            SnapshotField::PsiRe => "psi_re",
            SnapshotField::PsiIm => "psi_im",
            SnapshotField::Density => "density",
            SnapshotField::AX => "a_x",
            SnapshotField::AY => "a_y",
            SnapshotField::AZ => "a_z",
            SnapshotField::YX => "y_x",
            SnapshotField::YY => "y_y",
            SnapshotField::YZ => "y_z",
        }
    }

    /// Per-electron fields produce one snapshot per electron.
    pub fn per_electron(self) -> bool {
        matches!(self, SnapshotField::PsiRe | SnapshotField::PsiIm | SnapshotField::Density)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(default = "default_interval")]
    pub interval: i64,
    #[serde(default)]
    pub probe: Option<[f64; 3]>,
    #[serde(default)]
    pub dipole: bool,
    #[serde(default)]
    pub outer_radius: Option<f64>,
    #[serde(default)]
    pub flux_margin: Option<i64>,
    #[serde(default)]
    pub field_probes: Vec<[f64; 3]>,
    #[serde(default)]
    pub mode_frequencies: Vec<f64>,
    #[serde(default)]
    pub hhg_omegas: Vec<f64>,
    #[serde(default)]
    pub snapshot_interval: i64,
    #[serde(default)]
    pub snapshot_plane_z: Option<f64>,
    #[serde(default = "default_snapshot_fields")]
    pub snapshot_fields: Vec<SnapshotField>,
}

fn default_interval() -> i64 {
    10
}

fn default_snapshot_fields() -> Vec<SnapshotField> {
    vec![SnapshotField::PsiRe, SnapshotField::PsiIm]
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            interval: default_interval(),
            probe: None,
            dipole: false,
            outer_radius: None,
            flux_margin: None,
            field_probes: Vec::new(),
            mode_frequencies: Vec::new(),
            hhg_omegas: Vec::new(),
            snapshot_interval: 0,
            snapshot_plane_z: None,
            snapshot_fields: default_snapshot_fields(),
        }
    }
}

/// The document as written, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_name")]
    pub name: String,
    pub grid: GridSection,
    #[serde(default = "default_atoms")]
    pub atoms: Vec<AtomSection>,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_atoms() -> Vec<AtomSection> {
    vec![AtomSection { z: 1.0, center: [0.0; 3] }]
}

/// Validated scenario with every derived quantity resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub file: ScenarioFile,
    pub grid: Grid3D,
    pub atoms: Vec<AtomSpec>,
    pub consts: PhysicsConstants,
    pub dt: f64,
    pub n_steps: usize,
    pub order: u32,
    pub solver: SolverConfig,
    pub interval: usize,
    pub snapshot_interval: usize,
    pub flux_margin: Option<usize>,
}

fn invalid(field: &str, why: impl std::fmt::Display) -> SimError {
    SimError::Config(format!("`{field}`: {why}"))
}

/// Parses and validates a scenario document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, SimError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
    validate(file)
}

pub fn validate(file: ScenarioFile) -> Result<ScenarioConfig, SimError> {
    let n = file.grid.n.resolve();
    for (axis, &v) in ["x", "y", "z"].iter().zip(&n) {
        if v < 3 {
            return Err(invalid("grid.n", format!("{v} nodes along {axis}; at least 3 are required")));
        }
    }
    let (lo, hi) = (file.grid.lo.resolve(), file.grid.hi.resolve());
    let mut spacing = [0.0; 3];
    for a in 0..3 {
        if !(hi[a] > lo[a]) || !lo[a].is_finite() || !hi[a].is_finite() {
            return Err(invalid("grid.hi", "must exceed grid.lo on every axis"));
        }
        spacing[a] = (hi[a] - lo[a]) / n[a] as f64;
    }
    let origin = [0, 1, 2].map(|a| lo[a] + 0.5 * spacing[a]);
    let grid = Grid3D::new(n.map(|v| v as usize), spacing, origin).map_err(|e| invalid("grid", e))?;

    if file.atoms.is_empty() {
        return Err(invalid("atoms", "at least one atom is required"));
    }
    let mut atoms = Vec::with_capacity(file.atoms.len());
    for (i, a) in file.atoms.iter().enumerate() {
        if !(a.z > 0.0) || !a.z.is_finite() {
            return Err(invalid(&format!("atoms[{i}].z"), "must be positive"));
        }
        for c in 0..3 {
            if !(a.center[c] >= lo[c] && a.center[c] < hi[c]) {
                return Err(invalid(&format!("atoms[{i}].center"), "must lie inside the box"));
            }
        }
        atoms.push(AtomSpec { z: a.z, center: a.center });
    }

    let consts = PhysicsConstants::new(file.physics.c).map_err(|e| invalid("physics.c", e))?;

    let dt = match file.time.dt {
        Some(dt) => dt,
        None => {
            log::info!("time.dt not set; using cfl_coefficient = {}", file.time.cfl_coefficient);
            cfl_dt(&grid, &consts, file.time.cfl_coefficient)
        }
    };
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("time", format!("time step {dt} must be positive")));
    }
    if file.time.n_steps < 1 {
        return Err(invalid("time.n_steps", "must be at least 1"));
    }
    let order = file.time.order;
    if !(order == 1 || (order >= 2 && order % 2 == 0)) || order > 64 {
        return Err(invalid("time.order", format!("{order} is not 1 or an even number")));
    }

    if !(file.solver.tol > 0.0) || file.solver.tol >= 1.0 {
        return Err(invalid("solver.tol", "must lie in (0, 1)"));
    }
    if file.solver.max_iter < 1 {
        return Err(invalid("solver.max_iter", "must be at least 1"));
    }
    let solver = SolverConfig::with_tol(file.solver.tol);
    let solver = SolverConfig { max_iter: file.solver.max_iter as usize, ..solver };

    let d = &file.diagnostics;
    if d.interval < 1 {
        return Err(invalid("diagnostics.interval", "must be at least 1"));
    }
    if d.snapshot_interval < 0 {
        return Err(invalid("diagnostics.snapshot_interval", "must be non-negative"));
    }
    if let Some(r) = d.outer_radius {
        if !(r >= 0.0) {
            return Err(invalid("diagnostics.outer_radius", "must be non-negative"));
        }
    }
    let flux_margin = match d.flux_margin {
        None => None,
        Some(m) if m >= 1 && n.iter().all(|&v| 2 * m + 1 <= v) => Some(m as usize),
        Some(m) => return Err(invalid("diagnostics.flux_margin", format!("{m} does not leave an interior box"))),
    };
    if !d.hhg_omegas.is_empty() && !d.dipole {
        return Err(invalid("diagnostics.hhg_omegas", "requires diagnostics.dipole = true"));
    }
    if d.mode_frequencies.iter().chain(&d.hhg_omegas).any(|v| !v.is_finite()) {
        return Err(invalid("diagnostics", "frequencies must be finite"));
    }
    if !file.initial.width2.is_finite() || file.initial.width2 <= 0.0 {
        return Err(invalid("initial.width2", "must be positive"));
    }

    Ok(ScenarioConfig {
        grid,
        atoms,
        consts,
        dt,
        n_steps: file.time.n_steps as usize,
        order: order as u32,
        solver,
        interval: d.interval as usize,
        snapshot_interval: d.snapshot_interval as usize,
        flux_margin,
        file,
    })
}
