//! Periodic uniform Cartesian grid and nodal field storage.
//!
//! Nodes are stored in one flat array with `k` (the z index) running fastest:
//! `flat = (i * ny + j) * nz + k`. Every index computation wraps periodically.
//! Vector fields keep their three components as contiguous blocks
//! (`[x block | y block | z block]`), so component `c` of node `J` lives at
//! `c * M + J` where `M` is the node count.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Coordinate axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Axis> {
        match i {
            0 => Some(Axis::X),
            1 => Some(Axis::Y),
            2 => Some(Axis::Z),
            _ => None,
        }
    }
}

/// Periodic uniform grid. Node `(i, j, k)` sits at `origin + (i dx, j dy, k dz)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid3D {
    n: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
}

impl Grid3D {
    /// Backward second differences reach two nodes back, so each axis needs at least 3 nodes.
    pub const MIN_NODES: usize = 3;

    pub fn new(n: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if n.iter().any(|&m| m < Self::MIN_NODES) {
            return Err(Error::InvalidGrid("every axis needs at least 3 nodes"));
        }
        if spacing.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidGrid("grid spacings must be positive and finite"));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("grid origin must be finite"));
        }
        n[0].checked_mul(n[1])
            .and_then(|p| p.checked_mul(n[2]))
            .and_then(|p| p.checked_mul(6))
            .ok_or(Error::InvalidGrid("node count overflows"))?;
        Ok(Self { n, spacing, origin })
    }

    /// Cell-centred cube `[lo, hi]^3` split into `n` cells per axis; node `i`
    /// sits at `lo + (i + 1/2) * (hi - lo) / n`.
    pub fn cell_centered_cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidGrid("upper bound must exceed lower bound"));
        }
        let d = (hi - lo) / n as f64;
        let o = lo + 0.5 * d;
        Self::new([n; 3], [d; 3], [o; 3])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.n
    }

    pub fn nx(&self) -> usize {
        self.n[0]
    }

    pub fn ny(&self) -> usize {
        self.n[1]
    }

    pub fn nz(&self) -> usize {
        self.n[2]
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    /// Number of nodes `M`.
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    /// Periodic box length along each axis.
    pub fn box_lengths(&self) -> [f64; 3] {
        [
            self.n[0] as f64 * self.spacing[0],
            self.n[1] as f64 * self.spacing[1],
            self.n[2] as f64 * self.spacing[2],
        ]
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing[0].min(self.spacing[1]).min(self.spacing[2])
    }

    /// Flat-array stride of a unit step along `axis`.
    pub fn stride(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.n[1] * self.n[2],
            Axis::Y => self.n[2],
            Axis::Z => 1,
        }
    }

    /// Flat index of node `(i mod nx, j mod ny, k mod nz)`.
    pub fn node_index(&self, i: isize, j: isize, k: isize) -> usize {
        let w = |v: isize, m: usize| v.rem_euclid(m as isize) as usize;
        (w(i, self.n[0]) * self.n[1] + w(j, self.n[1])) * self.n[2] + w(k, self.n[2])
    }

    /// Inverse of [`Grid3D::node_index`] on `0..M`.
    pub fn node_coords(&self, flat: usize) -> [usize; 3] {
        let k = flat % self.n[2];
        let ij = flat / self.n[2];
        [ij / self.n[1], ij % self.n[1], k]
    }

    /// Flat index of the node `offset` steps away from `flat` along `axis`.
    pub fn neighbor(&self, flat: usize, axis: Axis, offset: isize) -> usize {
        let [i, j, k] = self.node_coords(flat).map(|v| v as isize);
        match axis {
            Axis::X => self.node_index(i + offset, j, k),
            Axis::Y => self.node_index(i, j + offset, k),
            Axis::Z => self.node_index(i, j, k + offset),
        }
    }

    pub fn position(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + i as f64 * self.spacing[0],
            self.origin[1] + j as f64 * self.spacing[1],
            self.origin[2] + k as f64 * self.spacing[2],
        ]
    }

    pub fn position_of(&self, flat: usize) -> [f64; 3] {
        let [i, j, k] = self.node_coords(flat);
        self.position(i, j, k)
    }

    /// Displacement `p - center` reduced to the nearest periodic image.
    pub fn min_image(&self, p: [f64; 3], center: [f64; 3]) -> [f64; 3] {
        let l = self.box_lengths();
        let mut d = [0.0; 3];
        for c in 0..3 {
            let raw = p[c] - center[c];
            d[c] = raw - l[c] * libm::round(raw / l[c]);
        }
        d
    }

    /// Node index along `axis` whose coordinate is nearest to `coord` (periodic).
    /// Ties resolve to the lower index.
    pub fn nearest_plane(&self, axis: Axis, coord: f64) -> usize {
        let a = axis.index();
        round_half_down((coord - self.origin[a]) / self.spacing[a]).rem_euclid(self.n[a] as isize)
            as usize
    }

    /// Flat index of the node nearest to `p` (periodic). Ties resolve to the
    /// lower index along each axis.
    pub fn nearest_node(&self, p: [f64; 3]) -> usize {
        let s = |a: usize| round_half_down((p[a] - self.origin[a]) / self.spacing[a]);
        self.node_index(s(0), s(1), s(2))
    }
}

fn round_half_down(s: f64) -> isize {
    let fl = libm::floor(s);
    if s - fl > 0.5 {
        fl as isize + 1
    } else {
        fl as isize
    }
}

/// Real value per node.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid3D,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid3D) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid3D, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    /// Wraps existing nodal values; the length must equal the node count and
    /// every value must be finite.
    pub fn from_values(grid: Grid3D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample { index, position: grid.position_of(index) });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid3D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: isize, j: isize, k: isize) -> f64 {
        self.values[self.grid.node_index(i, j, k)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Three real components per node, stored as contiguous component blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid3D,
    values: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid3D) -> Self {
        Self { grid, values: vec![0.0; 3 * grid.len()] }
    }

    pub fn from_values(grid: Grid3D, values: Vec<f64>) -> Result<Self> {
        if values.len() != 3 * grid.len() {
            return Err(Error::DimensionMismatch { expected: 3 * grid.len(), found: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            let node = index % grid.len();
            return Err(Error::NonFiniteSample { index, position: grid.position_of(node) });
        }
        Ok(Self { grid, values })
    }

    pub fn from_components(x: ScalarField, y: ScalarField, z: ScalarField) -> Result<Self> {
        if x.grid != y.grid || x.grid != z.grid {
            return Err(Error::GridMismatch);
        }
        let grid = x.grid;
        let mut values = x.values;
        values.extend_from_slice(&y.values);
        values.extend_from_slice(&z.values);
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid3D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, axis: Axis) -> &[f64] {
        let m = self.grid.len();
        &self.values[axis.index() * m..(axis.index() + 1) * m]
    }

    pub fn component_mut(&mut self, axis: Axis) -> &mut [f64] {
        let m = self.grid.len();
        &mut self.values[axis.index() * m..(axis.index() + 1) * m]
    }

    /// Vector value at node `flat`.
    pub fn node(&self, flat: usize) -> [f64; 3] {
        let m = self.grid.len();
        [self.values[flat], self.values[m + flat], self.values[2 * m + flat]]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Real and imaginary parts of one electron's wavefunction, scaled so that
/// `psi = (psi_r + i psi_i) / sqrt(2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Wavefunction {
    pub re: ScalarField,
    pub im: ScalarField,
}

impl Wavefunction {
    pub fn new(re: ScalarField, im: ScalarField) -> Result<Self> {
        if re.grid() != im.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { re, im })
    }

    pub fn zeros(grid: Grid3D) -> Self {
        Self { re: ScalarField::zeros(grid), im: ScalarField::zeros(grid) }
    }

    pub fn grid(&self) -> &Grid3D {
        self.re.grid()
    }

    /// Concatenated `[re | im]` nodal vector.
    pub fn to_stacked(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.re.values.len());
        v.extend_from_slice(&self.re.values);
        v.extend_from_slice(&self.im.values);
        v
    }

    pub fn set_stacked(&mut self, v: &[f64]) {
        let m = self.re.values.len();
        self.re.values.copy_from_slice(&v[..m]);
        self.im.values.copy_from_slice(&v[m..2 * m]);
    }
}

/// Full canonical state: electron wavefunctions plus the gauge pair `(A, Y)`
/// with `Y = dA/dt / 4 pi`, at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    pub psi: Vec<Wavefunction>,
    pub a: VectorField,
    pub y: VectorField,
    pub t: f64,
}

impl SystemState {
    pub fn new(psi: Vec<Wavefunction>, a: VectorField, y: VectorField, t: f64) -> Result<Self> {
        if psi.is_empty() {
            return Err(Error::InvalidParameter("at least one electron is required"));
        }
        let grid = *a.grid();
        if *y.grid() != grid || psi.iter().any(|w| *w.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { psi, a, y, t })
    }

    pub fn grid(&self) -> &Grid3D {
        self.a.grid()
    }
}

/// Samples `f` at every node. Fails on the first non-finite sample.
pub fn sample_function<F>(grid: &Grid3D, f: F) -> Result<ScalarField>
where
    F: Fn([f64; 3]) -> f64,
{
    let mut values = Vec::with_capacity(grid.len());
    for flat in 0..grid.len() {
        let p = grid.position_of(flat);
        let v = f(p);
        if !v.is_finite() {
            return Err(Error::NonFiniteSample { index: flat, position: p });
        }
        values.push(v);
    }
    Ok(ScalarField { grid: *grid, values })
}

/// `dV * sum_J u_J v_J`.
pub fn inner_product(u: &ScalarField, v: &ScalarField) -> Result<f64> {
    if u.grid != v.grid {
        return Err(Error::GridMismatch);
    }
    Ok(u.grid.cell_volume() * dot(&u.values, &v.values))
}

/// Dot product with eight interleaved partial sums, so the loop is not bound
/// by the latency of a single accumulator. The order is fixed, so results are
/// reproducible.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let (ca, ra) = (a.chunks_exact(8), a.chunks_exact(8).remainder());
    let rb = b.chunks_exact(8).remainder();
    for (x, y) in ca.zip(b.chunks_exact(8)) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}
