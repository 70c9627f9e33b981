mod common;

use common::*;
use smx_core::grid::{ScalarField, VectorField, Wavefunction};
use smx_core::hamiltonian::{probability, DiscreteHamiltonian, PhysicsConstants, PotentialField};
use smx_core::sparse::LinearOperator;

fn apply(op: &impl LinearOperator, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; op.dim()];
    op.apply(x, &mut y);
    y
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    max_abs_diff(a, b) / max_abs(b).max(f64::MIN_POSITIVE)
}

#[test]
fn quantum_generator_matches_written_out_equations() {
    let mut r = rng(11);
    for n in [3, 4, 5] {
        let g = cube(n);
        let ham = hamiltonian(&g);
        let nv = Naive::new(&g);
        let psi = random_psi(&mut r, g);
        let a = random_vector(&mut r, g, 2.0);
        let v = random_potential(&mut r, g);
        let omega = ham.omega(&a, &v).unwrap();
        let got = apply(&omega, &psi.to_stacked());
        let (dr, di) = nv.psi_rhs(psi.re.values(), psi.im.values(), a.values(), v.values());
        let want: Vec<f64> = dr.into_iter().chain(di).collect();
        assert!(rel_diff(&got, &want) < 1e-12, "n = {n}: {}", rel_diff(&got, &want));
    }
}

#[test]
fn field_generator_matches_written_out_equations() {
    let mut r = rng(12);
    let g = cube(4);
    let ham = hamiltonian(&g);
    let nv = Naive::new(&g);
    let a = random_vec(&mut r, 3 * g.len(), 1.0);
    let y = random_vec(&mut r, 3 * g.len(), 1.0);
    let x: Vec<f64> = a.iter().chain(&y).copied().collect();
    let got = apply(&ham.q(), &x);
    let (da, dy) = nv.field_rhs(&a, &y, ham.constants().c);
    let want: Vec<f64> = da.into_iter().chain(dy).collect();
    assert!(rel_diff(&got, &want) < 1e-12);
}

#[test]
fn assembled_generators_match_matrix_free() {
    let mut r = rng(13);
    let g = cube(4);
    let ham = hamiltonian(&g);
    let a = random_vector(&mut r, g, 1.0);
    let v = random_potential(&mut r, g);
    let omega = ham.omega(&a, &v).unwrap();
    let dense = omega.assemble().unwrap().to_dense();
    let free = dense_of(&omega);
    assert!(dense.max_abs_diff(&free) <= 1e-12 * free.max_abs());
    let q = ham.q();
    let qd = q.assemble().unwrap().to_dense();
    assert!(qd.max_abs_diff(&dense_of(&q)) <= 1e-12 * qd.max_abs());
}

#[test]
fn quantum_generator_is_skew_and_commutes_with_j() {
    let mut r = rng(14);
    let g = cube(3);
    let ham = hamiltonian(&g);
    let a = random_vector(&mut r, g, 1.0);
    let v = random_potential(&mut r, g);
    let om = dense_of(&ham.omega(&a, &v).unwrap());
    let scale = om.max_abs();
    assert!(om.add_scaled(1.0, &om.transpose(), 1.0).max_abs() <= 1e-14 * scale);
    let j = canonical_j(g.len());
    assert!(om.matmul(&j).max_abs_diff(&j.matmul(&om)) <= 1e-14 * scale);
}

#[test]
fn hessian_is_symmetric_and_generator_is_j_times_hessian() {
    let mut r = rng(15);
    let g = cube(3);
    let ham = hamiltonian(&g);
    let a = random_vector(&mut r, g, 1.0);
    let v = random_potential(&mut r, g);
    let omega = ham.omega(&a, &v).unwrap();
    let s = omega.hessian().unwrap();
    assert!(s.max_asymmetry() <= 1e-13 * s.to_dense().max_abs());
    let js = canonical_j(g.len()).matmul(&s.to_dense());
    assert!(js.max_abs_diff(&dense_of(&omega)) <= 1e-13 * js.max_abs());
}

#[test]
fn quantum_energy_is_the_hessian_quadratic_form() {
    let mut r = rng(16);
    let g = cube(4);
    let ham = hamiltonian(&g);
    for _ in 0..5 {
        let psi = random_psi(&mut r, g);
        let a = random_vector(&mut r, g, 1.5);
        let v = random_potential(&mut r, g);
        let x = psi.to_stacked();
        let s = ham.omega(&a, &v).unwrap().hessian().unwrap();
        let sx = s.matvec(&x).unwrap();
        let quad = 0.5 * g.cell_volume() * x.iter().zip(&sx).map(|(p, q)| p * q).sum::<f64>();
        let e = ham.energy_qm(&psi, &a, &v).unwrap();
        assert!((e - quad).abs() <= 1e-12 * quad.abs().max(1.0), "{e} vs {quad}");
    }
}

#[test]
fn energy_gradient_matches_central_differences() {
    // The energy is quadratic in psi, so a central difference of any step is
    // exact up to rounding.
    let mut r = rng(17);
    let g = cube(3);
    let ham = hamiltonian(&g);
    let psi = random_psi(&mut r, g);
    let a = random_vector(&mut r, g, 1.0);
    let v = random_potential(&mut r, g);
    let x = psi.to_stacked();
    let s = ham.omega(&a, &v).unwrap().hessian().unwrap();
    let grad: Vec<f64> = s.matvec(&x).unwrap().iter().map(|v| v * g.cell_volume()).collect();
    let energy = |x: &[f64]| {
        let mut p = Wavefunction::zeros(g);
        p.set_stacked(x);
        ham.energy_qm(&p, &a, &v).unwrap()
    };
    for i in (0..x.len()).step_by(5) {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += 0.5;
        xm[i] -= 0.5;
        let fd = energy(&xp) - energy(&xm);
        assert!((fd - grad[i]).abs() <= 1e-11 * (1.0 + grad[i].abs()), "{i}: {fd} vs {}", grad[i]);
    }
}

#[test]
fn field_energy_gradient_gives_the_current() {
    // dH_qm/dA / dV = -current; H_qm is quadratic in A, so central differences are exact.
    let mut r = rng(18);
    let g = cube(3);
    let ham = hamiltonian(&g);
    let nv = Naive::new(&g);
    let psi = random_psi(&mut r, g);
    let a = random_vector(&mut r, g, 1.0);
    let v = PotentialField::zeros(g);
    let j = ham.current_density(&psi, &a).unwrap();
    let want = nv.current(psi.re.values(), psi.im.values(), a.values());
    assert!(max_abs_diff(j.values(), &want) <= 1e-13 * max_abs(&want));
    for i in (0..3 * g.len()).step_by(7) {
        let bump = |s: f64| {
            let mut vals = a.values().to_vec();
            vals[i] += s;
            ham.energy_qm(&psi, &VectorField::from_values(g, vals).unwrap(), &v).unwrap()
        };
        let fd = (bump(0.5) - bump(-0.5)) / g.cell_volume();
        assert!((fd + j.values()[i]).abs() <= 1e-11 * (1.0 + fd.abs()), "{i}");
    }
}

#[test]
fn field_energy_closed_forms() {
    let g = cube(5);
    let consts = PhysicsConstants::new(3.0).unwrap();
    let ham = DiscreteHamiltonian::new(&g, consts);
    let zero = VectorField::zeros(g);
    // uniform Y: 4 pi |Y|^2 / 2 per cell volume
    let y = VectorField::from_components(
        ScalarField::constant(g, 1.0),
        ScalarField::constant(g, -2.0),
        ScalarField::constant(g, 0.5),
    )
    .unwrap();
    let e = ham.energy_em(&zero, &y).unwrap();
    let want = 0.5 * FOUR_PI * 5.25 * g.cell_volume() * g.len() as f64;
    assert!((e - want).abs() < 1e-12 * want);
    // a uniform A has no curl and stores no energy
    assert_eq!(ham.energy_em(&y, &zero).unwrap(), 0.0);
}

#[test]
fn probability_of_plane_wave_is_its_mean_density() {
    let g = cube(6);
    let k = 2.0 * std::f64::consts::PI / 10.0;
    let re: Vec<f64> = (0..g.len()).map(|j| (k * g.position_of(j)[0]).cos() * 0.3).collect();
    let im: Vec<f64> = (0..g.len()).map(|j| (k * g.position_of(j)[0]).sin() * 0.3).collect();
    let psi = Wavefunction::new(
        ScalarField::from_values(g, re).unwrap(),
        ScalarField::from_values(g, im).unwrap(),
    )
    .unwrap();
    let want = 0.5 * 0.09 * 1000.0;
    assert!((probability(&psi) - want).abs() < 1e-12 * want);
}
