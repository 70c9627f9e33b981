//! Initial conditions and potentials for the shipped scenarios.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid3D, ScalarField, VectorField, Wavefunction};
use crate::hamiltonian::{probability, AtomSpec, PhysicsConstants, PotentialField};

/// Closest allowed approach of an atom center to a node.
pub const MIN_NODE_DISTANCE: f64 = 1e-9;

fn norm3(d: [f64; 3]) -> f64 {
    libm::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
}

fn check_atom(atom: &AtomSpec) -> Result<()> {
    if !(atom.z > 0.0) || !atom.z.is_finite() {
        return Err(Error::InvalidParameter("atomic number must be positive"));
    }
    if atom.center.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter("atom center must be finite"));
    }
    Ok(())
}

/// Minimum-image distance from every node to `center`.
fn radii(grid: &Grid3D, center: [f64; 3]) -> Result<Vec<f64>> {
    (0..grid.len())
        .map(|j| {
            let r = norm3(grid.min_image(grid.position_of(j), center));
            if r < MIN_NODE_DISTANCE {
                Err(Error::DegeneratePlacement { index: j, distance: r })
            } else {
                Ok(r)
            }
        })
        .collect()
}

/// `V_J = -Z / r_J`.
pub fn coulomb_potential(grid: &Grid3D, atom: &AtomSpec) -> Result<PotentialField> {
    check_atom(atom)?;
    let v = radii(grid, atom.center)?.into_iter().map(|r| -atom.z / r).collect();
    Ok(PotentialField(ScalarField::from_values(*grid, v)?))
}

/// Samples `sqrt(2) Z^{3/2} pi^{-1/2} e^{-Z r}` into `psi_r` (with
/// `psi_i = 0`), without renormalizing on the grid.
pub fn sample_hydrogen_ground_state(grid: &Grid3D, atom: &AtomSpec) -> Result<Wavefunction> {
    check_atom(atom)?;
    let amp = libm::sqrt(2.0) * libm::pow(atom.z, 1.5) / libm::sqrt(PI);
    let re = radii(grid, atom.center)?.into_iter().map(|r| amp * libm::exp(-atom.z * r)).collect();
    Wavefunction::new(ScalarField::from_values(*grid, re)?, ScalarField::zeros(*grid))
}

/// Sampled 1s state rescaled so its discrete probability is 1.
pub fn init_hydrogen_ground_state(grid: &Grid3D, atom: &AtomSpec) -> Result<Wavefunction> {
    let mut psi = sample_hydrogen_ground_state(grid, atom)?;
    let s = 1.0 / libm::sqrt(probability(&psi));
    psi.re.values_mut().iter_mut().for_each(|v| *v *= s);
    Ok(psi)
}

/// Gaussian gauge pulse `A = amplitude exp(-(z - center_z)^2 / width2) e_pol`
/// with `Y = 0`; `z - center_z` uses the minimum image along z.
pub fn init_gaussian_pulse(
    grid: &Grid3D,
    amplitude: f64,
    center_z: f64,
    width2: f64,
    polarization: Axis,
) -> Result<(VectorField, VectorField)> {
    if !(width2 > 0.0) || !width2.is_finite() {
        return Err(Error::InvalidParameter("pulse width must be positive"));
    }
    if !amplitude.is_finite() || !center_z.is_finite() {
        return Err(Error::InvalidParameter("pulse amplitude and center must be finite"));
    }
    let mut a = VectorField::zeros(*grid);
    let lz = grid.box_lengths()[2];
    for (j, v) in a.component_mut(polarization).iter_mut().enumerate() {
        let z = grid.position_of(j)[2];
        let dz = z - center_z - lz * libm::round((z - center_z) / lz);
        *v = amplitude * libm::exp(-dz * dz / width2);
    }
    Ok((a, VectorField::zeros(*grid)))
}

/// `coefficient * delta / (sqrt(3) c)` with `delta` the smallest spacing.
pub fn cfl_dt(grid: &Grid3D, consts: &PhysicsConstants, coefficient: f64) -> f64 {
    coefficient * grid.min_spacing() / (libm::sqrt(3.0) * consts.c)
}

/// Mean `|psi|^2` over nodes farther than `radius` from `center`.
pub fn outer_density(psi: &Wavefunction, center: [f64; 3], radius: f64) -> Result<f64> {
    let g = psi.grid();
    let (re, im) = (psi.re.values(), psi.im.values());
    let (mut sum, mut count) = (0.0, 0usize);
    for j in 0..g.len() {
        if norm3(g.min_image(g.position_of(j), center)) > radius {
            sum += 0.5 * (re[j] * re[j] + im[j] * im[j]);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidParameter("no nodes outside the given radius"));
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(n: usize) -> Grid3D {
        Grid3D::cell_centered_cube(n, -5.0, 5.0).unwrap()
    }

    #[test]
    fn hydrogen_is_normalized_and_peaks_at_center() {
        let g = cube(16);
        let atom = AtomSpec::hydrogen_at_origin();
        let psi = init_hydrogen_ground_state(&g, &atom).unwrap();
        assert!((probability(&psi) - 1.0).abs() < 1e-14);
        let peak = psi.re.values().iter().enumerate().fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        let d = norm3(g.position_of(peak.0));
        let dmin = (0..g.len()).map(|j| norm3(g.position_of(j))).fold(f64::MAX, f64::min);
        assert_eq!(d, dmin);
        assert!(psi.im.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coulomb_values() {
        let g = cube(8);
        let atom = AtomSpec { z: 1.0, center: [0.0; 3] };
        let v = coulomb_potential(&g, &atom).unwrap();
        assert!(v.values().iter().all(|&x| x < 0.0));
        // node (4,4,4) sits at (0.625,0.625,0.625)
        let j = g.node_index(4, 4, 4);
        assert!((v.values()[j] + 1.0 / (0.625 * libm::sqrt(3.0))).abs() < 1e-14);
        let v2 = coulomb_potential(&g, &AtomSpec { z: 2.0, ..atom }).unwrap();
        assert!(v.values().iter().zip(v2.values()).all(|(a, b)| *b == 2.0 * a));
        let on_node = AtomSpec { z: 1.0, center: g.position_of(7) };
        assert!(matches!(coulomb_potential(&g, &on_node), Err(Error::DegeneratePlacement { index: 7, .. })));
    }

    #[test]
    fn pulse_is_polarized_and_peaks_near_center() {
        let g = cube(32);
        let (a, y) = init_gaussian_pulse(&g, 100.0, -2.5, 0.25, Axis::X).unwrap();
        assert!(a.component(Axis::Y).iter().chain(a.component(Axis::Z)).all(|&v| v == 0.0));
        assert!(y.values().iter().all(|&v| v == 0.0));
        let max = a.component(Axis::X).iter().cloned().fold(0.0, f64::max);
        // nearest planes to z = -2.5 are 0.156 away
        let dz: f64 = 0.15625;
        assert!((max - 100.0 * libm::exp(-dz * dz / 0.25)).abs() < 1e-12);
        let (zero, _) = init_gaussian_pulse(&g, 0.0, -2.5, 0.25, Axis::X).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        assert!(init_gaussian_pulse(&g, 1.0, 0.0, 0.0, Axis::X).is_err());
    }

    #[test]
    fn cfl_examples() {
        let g = Grid3D::new([4; 3], [0.1; 3], [0.0; 3]).unwrap();
        let c = PhysicsConstants::new(137.0).unwrap();
        assert!((cfl_dt(&g, &c, 1.5) - 6.3216e-4).abs() < 1e-7);
        assert!((cfl_dt(&g, &c, 0.1) - 4.2144e-5).abs() < 1e-8);
        assert_eq!(cfl_dt(&g, &c, 0.0), 0.0);
    }
}
