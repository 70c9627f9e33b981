//! Time series and physical observables computed from states or snapshots.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid3D, Wavefunction};

/// Relative tolerance on sample spacing for the uniform-sampling checks.
const UNIFORM_RTOL: f64 = 1e-6;

/// Named channels sampled at increasing times.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    channels: Vec<String>,
    times: Vec<f64>,
    /// Row-major, one row per sample.
    data: Vec<f64>,
}

impl TimeSeries {
    pub fn new<S: Into<String>>(channels: impl IntoIterator<Item = S>) -> Self {
        Self { channels: channels.into_iter().map(Into::into).collect(), times: Vec::new(), data: Vec::new() }
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.channels.len();
        &self.data[i * w..(i + 1) * w]
    }

    /// Appends one sample. Times must not decrease and values must be finite.
    pub fn push(&mut self, t: f64, values: &[f64]) -> Result<()> {
        if values.len() != self.channels.len() {
            return Err(Error::DimensionMismatch { expected: self.channels.len(), found: values.len() });
        }
        if !t.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("time-series samples must be finite"));
        }
        if self.times.last().is_some_and(|&last| t < last) {
            return Err(Error::InvalidParameter("time stamps must be nondecreasing"));
        }
        self.times.push(t);
        self.data.extend_from_slice(values);
        Ok(())
    }

    pub fn channel_index(&self, name: &str) -> Result<usize> {
        self.channels.iter().position(|c| c == name).ok_or_else(|| Error::UnknownChannel(name.into()))
    }

    pub fn channel(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.channel_index(name)?;
        let w = self.channels.len();
        Ok(self.data.iter().skip(c).step_by(w).copied().collect())
    }
}

fn check_uniform(times: &[f64]) -> Result<f64> {
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::NonUniformSampling);
    }
    for w in times.windows(2) {
        if libm::fabs(w[1] - w[0] - dt) > UNIFORM_RTOL * dt {
            return Err(Error::NonUniformSampling);
        }
    }
    Ok(dt)
}

/// Real and imaginary parts of a field's Fourier component at one frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeStructure {
    pub nu: f64,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// Streaming form of [`record_mode_structure`]: accumulates
/// `sum_n f(t_n) exp(2 pi i nu t_n) dt` one sample at a time.
#[derive(Clone, Debug)]
pub struct ModeAccumulator {
    nu: f64,
    re: Vec<f64>,
    im: Vec<f64>,
    first: Option<f64>,
    dt: Option<f64>,
    last: f64,
    count: usize,
}

impl ModeAccumulator {
    pub fn new(nu: f64, len: usize) -> Self {
        Self { nu, re: vec![0.0; len], im: vec![0.0; len], first: None, dt: None, last: 0.0, count: 0 }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, t: f64, values: &[f64]) -> Result<()> {
        if values.len() != self.re.len() {
            return Err(Error::DimensionMismatch { expected: self.re.len(), found: values.len() });
        }
        match (self.first, self.dt) {
            (None, _) => self.first = Some(t),
            (Some(_), None) => {
                if !(t > self.last) {
                    return Err(Error::NonUniformSampling);
                }
                self.dt = Some(t - self.last);
            }
            (Some(_), Some(dt)) => {
                if libm::fabs(t - self.last - dt) > UNIFORM_RTOL * dt {
                    return Err(Error::NonUniformSampling);
                }
            }
        }
        let (s, c) = libm::sincos(2.0 * PI * self.nu * t);
        for ((r, i), v) in self.re.iter_mut().zip(&mut self.im).zip(values) {
            *r += v * c;
            *i += v * s;
        }
        self.last = t;
        self.count += 1;
        Ok(())
    }

    /// Scales the raw sums by the sampling interval.
    pub fn finish(self) -> Result<ModeStructure> {
        let dt = match self.dt {
            Some(dt) if self.count >= 2 => dt,
            _ => return Err(Error::InsufficientSamples { needed: 2, got: self.count }),
        };
        Ok(ModeStructure {
            nu: self.nu,
            re: self.re.into_iter().map(|v| v * dt).collect(),
            im: self.im.into_iter().map(|v| v * dt).collect(),
        })
    }
}

/// `sum_n f(x, t_n) exp(2 pi i nu t_n) dt` over uniformly spaced samples.
pub fn record_mode_structure(times: &[f64], samples: &[Vec<f64>], nu: f64) -> Result<ModeStructure> {
    if times.len() != samples.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: samples.len() });
    }
    if times.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: times.len() });
    }
    let mut acc = ModeAccumulator::new(nu, samples[0].len());
    for (t, s) in times.iter().zip(samples) {
        acc.push(*t, s)?;
    }
    acc.finish()
}

/// Period from the zero crossings of the mean-removed signal, each located by
/// linear interpolation: twice the mean spacing between consecutive crossings.
pub fn oscillation_period(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: values.len() });
    }
    if values.is_empty() {
        return Err(Error::TooFewCrossings(0));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut crossings = Vec::new();
    for i in 1..values.len() {
        let (a, b) = (values[i - 1] - mean, values[i] - mean);
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            if b == 0.0 {
                crossings.push(times[i]);
            } else {
                crossings.push(times[i - 1] + (times[i] - times[i - 1]) * a / (a - b));
            }
        }
    }
    // a sample sitting exactly on the mean is counted once, by the pair it ends
    crossings.dedup();
    if crossings.len() < 3 {
        return Err(Error::TooFewCrossings(crossings.len()));
    }
    let n = crossings.len();
    Ok(2.0 * (crossings[n - 1] - crossings[0]) / (n - 1) as f64)
}

/// Dipole moment `dV sum_J d_J |psi_J|^2`, `d_J` the minimum-image
/// displacement of node `J` from `center`.
pub fn dipole(psi: &Wavefunction, center: [f64; 3]) -> [f64; 3] {
    let g = psi.grid();
    let (re, im) = (psi.re.values(), psi.im.values());
    let mut d = [0.0; 3];
    for j in 0..g.len() {
        let rho = 0.5 * (re[j] * re[j] + im[j] * im[j]);
        let x = g.min_image(g.position_of(j), center);
        for c in 0..3 {
            d[c] += x[c] * rho;
        }
    }
    let dv = g.cell_volume();
    d.map(|v| v * dv)
}

/// `|F(omega)|` for each requested frequency, where `F` is the Hann-windowed
/// Fourier integral of the dipole acceleration (second central difference of
/// the sampled dipole). The magnitude combines the three components.
pub fn hhg_spectrum(times: &[f64], dipoles: &[[f64; 3]], omegas: &[f64]) -> Result<Vec<f64>> {
    if times.len() != dipoles.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: dipoles.len() });
    }
    if times.len() < 5 {
        return Err(Error::InsufficientSamples { needed: 5, got: times.len() });
    }
    let dt = check_uniform(times)?;
    let n = times.len() - 2;
    let accel: Vec<[f64; 3]> = (1..=n)
        .map(|i| {
            let mut a = [0.0; 3];
            for c in 0..3 {
                a[c] = (dipoles[i + 1][c] - 2.0 * dipoles[i][c] + dipoles[i - 1][c]) / (dt * dt);
            }
            a
        })
        .collect();
    let window: Vec<f64> = (0..n)
        .map(|i| {
            let s = libm::sin(PI * i as f64 / (n - 1) as f64);
            s * s
        })
        .collect();
    Ok(omegas
        .iter()
        .map(|&w| {
            let mut re = [0.0; 3];
            let mut im = [0.0; 3];
            for i in 0..n {
                let (s, c) = libm::sincos(w * times[i + 1]);
                for k in 0..3 {
                    re[k] += window[i] * accel[i][k] * c;
                    im[k] += window[i] * accel[i][k] * s;
                }
            }
            let p: f64 = (0..3).map(|k| re[k] * re[k] + im[k] * im[k]).sum();
            libm::sqrt(p) * dt
        })
        .collect())
}

/// Axis-aligned box of nodes `lo..=hi` (inclusive) whose faces carry the flux.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FluxSurface {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl FluxSurface {
    /// Largest box fitting strictly inside the periodic grid.
    pub fn interior(grid: &Grid3D) -> Self {
        let n = grid.dims();
        Self { lo: [1; 3], hi: [n[0] - 2, n[1] - 2, n[2] - 2] }
    }

    fn validate(&self, grid: &Grid3D) -> Result<()> {
        let n = grid.dims();
        for a in 0..3 {
            if self.lo[a] < 1 || self.hi[a] + 2 > n[a] || self.lo[a] > self.hi[a] {
                return Err(Error::SurfaceOutsideGrid);
            }
        }
        Ok(())
    }
}

/// Outward probability flux `sum_faces 1/2 (psi_r D psi_i - psi_i D psi_r) . n dS`.
///
/// The face between nodes `hi` and `hi + 1` takes the backward-difference
/// current at `hi + 1`; the face between `lo - 1` and `lo` takes it at `lo`.
pub fn ionization_flux(psi: &Wavefunction, surface: &FluxSurface) -> Result<f64> {
    let g = psi.grid();
    surface.validate(g)?;
    let (re, im) = (psi.re.values(), psi.im.values());
    let h = g.spacing();
    let current = |axis: Axis, node: usize| {
        let b = g.neighbor(node, axis, -1);
        0.5 * (im[node] * re[b] - re[node] * im[b]) / h[axis.index()]
    };
    let mut total = 0.0;
    for axis in Axis::ALL {
        let a = axis.index();
        let (p, q) = ((a + 1) % 3, (a + 2) % 3);
        let area = h[p] * h[q];
        for u in surface.lo[p]..=surface.hi[p] {
            for v in surface.lo[q]..=surface.hi[q] {
                let mut idx = [0usize; 3];
                idx[p] = u;
                idx[q] = v;
                idx[a] = surface.hi[a] + 1;
                let outer = g.node_index(idx[0] as isize, idx[1] as isize, idx[2] as isize);
                idx[a] = surface.lo[a];
                let inner = g.node_index(idx[0] as isize, idx[1] as isize, idx[2] as isize);
                total += (current(axis, outer) - current(axis, inner)) * area;
            }
        }
    }
    Ok(total)
}
