mod common;

use common::{random_hamiltonian, random_real_generator, rng, spin_orbitals, Fock};
use hfsim::fermion::{
    expm_antihermitian, filled, nonredundant_pairs, propagate_rdm, AntiHermitianGenerator, BasisRotation, OneRDM,
};
use hfsim::ham_io::{core_orbital_basis, hydrogen_chain, hydrogen_sto3g_integrals};
use hfsim::linalg::CMat;
use hfsim::scf::{
    analytic_gradient, augmented_hessian_step, energy_from_rdm, gradient_and_hessian, solve_rhf, vqe_optimize,
    MolecularHamiltonian, VqeOptions,
};
use hfsim::C64;
use rand::Rng;

fn energy_at(ham: &MolecularHamiltonian, eta: usize, params: &[f64], restricted: bool) -> f64 {
    let n = ham.n_modes();
    let k = AntiHermitianGenerator::from_nonredundant(n, eta, params).unwrap();
    let d = propagate_rdm(&expm_antihermitian(&k), &filled(n, eta)).unwrap();
    energy_from_rdm(&d, ham, restricted).unwrap()
}

fn h4_toy() -> MolecularHamiltonian {
    core_orbital_basis(&hydrogen_sto3g_integrals(&hydrogen_chain(4, 1.1)).unwrap())
        .unwrap()
        .1
}

#[test]
fn spinless_energy_matches_fock_space() {
    let mut r = rng(11);
    for n in 2..=5 {
        for eta in 1..n {
            let ham = random_hamiltonian(n, &mut r);
            let u = expm_antihermitian(&common::random_complex_generator(n, 1.5, &mut r));
            let d = propagate_rdm(&u, &filled(n, eta)).unwrap();
            let fock = Fock::new(n);
            let psi = fock.slater(&u.matrix().columns(0, eta).into_owned());
            let exact = fock.energy(&psi, &ham);
            let e = energy_from_rdm(&d, &ham, false).unwrap();
            assert!((e - exact).abs() < 1e-10, "n={n} eta={eta}: {e} vs {exact}");
        }
    }
}

#[test]
fn restricted_energy_matches_spin_orbital_fock_space() {
    let mut r = rng(12);
    for n in 2..=4 {
        for eta in 1..n {
            let ham = random_hamiltonian(n, &mut r);
            let u = common::random_rotation(n, &mut r);
            let d = propagate_rdm(&u, &filled(n, eta)).unwrap();
            let fock = Fock::new(2 * n);
            let psi = fock.slater(&spin_orbitals(&u.matrix().columns(0, eta).into_owned()));
            let exact = fock.spin_energy(&psi, &ham);
            let e = energy_from_rdm(&d, &ham, true).unwrap();
            assert!((e - exact).abs() < 1e-10, "n={n} eta={eta}: {e} vs {exact}");
        }
    }
}

#[test]
fn energy_invariant_under_occupied_rotations() {
    let mut r = rng(13);
    let (n, eta) = (6, 3);
    let ham = random_hamiltonian(n, &mut r);
    let u = common::random_rotation(n, &mut r);
    let w = common::random_rotation(eta, &mut r);
    let mut mixed = u.matrix().clone();
    let occ = u.matrix().columns(0, eta) * w.matrix();
    mixed.columns_mut(0, eta).copy_from(&occ);
    let a = propagate_rdm(&u, &filled(n, eta)).unwrap();
    let b = propagate_rdm(&BasisRotation::new(mixed).unwrap(), &filled(n, eta)).unwrap();
    for restricted in [false, true] {
        let ea = energy_from_rdm(&a, &ham, restricted).unwrap();
        let eb = energy_from_rdm(&b, &ham, restricted).unwrap();
        assert!((ea - eb).abs() < 1e-10);
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut r = rng(14);
    let ham = h4_toy();
    let (n, eta) = (4, 2);
    for restricted in [true, false] {
        for _ in 0..5 {
            let params: Vec<f64> = (0..eta * (n - eta)).map(|_| r.random_range(-0.6..0.6)).collect();
            let k = AntiHermitianGenerator::from_nonredundant(n, eta, &params).unwrap();
            let g = analytic_gradient(&k, &ham, eta, restricted).unwrap();
            let step = 1e-5;
            for i in 0..params.len() {
                let mut p = params.clone();
                p[i] += step;
                let ep = energy_at(&ham, eta, &p, restricted);
                p[i] -= 2.0 * step;
                let em = energy_at(&ham, eta, &p, restricted);
                let fd = (ep - em) / (2.0 * step);
                let scale = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                assert!((g[i] - fd).abs() <= 1e-6 * scale.max(1e-3), "{} vs {fd}", g[i]);
            }
        }
    }
}

#[test]
fn gradient_at_zero_is_plain_commutator() {
    let ham = h4_toy();
    let (n, eta) = (4, 2);
    let g = analytic_gradient(&AntiHermitianGenerator::zeros(n), &ham, eta, true).unwrap();
    let d = propagate_rdm(&BasisRotation::identity(n), &filled(n, eta)).unwrap();
    let xs: Vec<CMat> = nonredundant_pairs(n, eta)
        .into_iter()
        .map(|(b, i)| {
            let mut e = CMat::zeros(n, n);
            e[(b, i)] = C64::new(1.0, 0.0);
            e[(i, b)] = C64::new(-1.0, 0.0);
            e
        })
        .collect();
    let (a, _) = gradient_and_hessian(&d, &ham, &xs, true);
    for (x, y) in g.iter().zip(&a) {
        assert!((x - y).abs() < 1e-14);
    }
}

#[test]
fn hessian_matches_jacobian_of_gradient() {
    let mut r = rng(15);
    let ham = h4_toy();
    let (n, eta) = (4, 2);
    for restricted in [true, false] {
        let u = expm_antihermitian(&random_real_generator(n, 0.5, &mut r));
        let d = propagate_rdm(&u, &filled(n, eta)).unwrap();
        let w = u.matrix().clone();
        let xs: Vec<CMat> = nonredundant_pairs(n, eta)
            .into_iter()
            .map(|(b, i)| {
                let (wb, wi) = (w.column(b), w.column(i));
                wb * wi.adjoint() - wi * wb.adjoint()
            })
            .collect();
        let (_, b) = gradient_and_hessian(&d, &ham, &xs, restricted);
        let step = 1e-5;
        for (l, y) in xs.iter().enumerate() {
            let shifted = |t: f64| {
                let g = AntiHermitianGenerator::new(y * C64::new(t, 0.0)).unwrap();
                let u2 = hfsim::fermion::concat_rotations(&expm_antihermitian(&g), &u).unwrap();
                let d2 = propagate_rdm(&u2, &filled(n, eta)).unwrap();
                gradient_and_hessian(&d2, &ham, &xs, restricted).0
            };
            let (ap, am) = (shifted(step), shifted(-step));
            let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for k in 0..xs.len() {
                let fd = (ap[k] - am[k]) / (2.0 * step);
                assert!((b[(k, l)] - fd).abs() <= 1e-5 * scale, "B[{k},{l}] {} vs {fd}", b[(k, l)]);
            }
        }
    }
}

#[test]
fn h6_rhf_matches_reference_at_all_spacings() {
    for (spacing, reference) in common::h6_reference() {
        let ham = core_orbital_basis(&hydrogen_sto3g_integrals(&hydrogen_chain(6, spacing)).unwrap())
            .unwrap()
            .1;
        let res = solve_rhf(&ham, 3, &VqeOptions::default()).unwrap();
        let best = res.best_row();
        assert!(
            (best.energy - reference).abs() < 1e-8,
            "spacing {spacing}: {} vs {reference} after {} iterations",
            best.energy,
            best.iteration
        );
        assert!(best.iteration <= 30);
    }
}

#[test]
fn converged_start_returns_after_one_evaluation() {
    let ham = h4_toy();
    let first = solve_rhf(&ham, 2, &VqeOptions::default()).unwrap();
    let u = first.best_row().rotation.clone();
    let occ = filled(4, 2);
    let res = vqe_optimize(&ham, 2, &AntiHermitianGenerator::zeros(4), &VqeOptions::default(), None, |v| {
        propagate_rdm(&hfsim::fermion::concat_rotations(v, &u)?, &occ)
    })
    .unwrap();
    assert_eq!(res.trace.len(), 1);
    assert!(res.converged);
}

#[test]
fn single_point_with_zero_iterations() {
    let ham = h4_toy();
    let opts = VqeOptions {
        max_iter: 0,
        ..VqeOptions::default()
    };
    let res = solve_rhf(&ham, 2, &opts).unwrap();
    assert_eq!(res.trace.len(), 1);
    let d = propagate_rdm(&BasisRotation::identity(4), &filled(4, 2)).unwrap();
    assert_eq!(res.best_energy(), energy_from_rdm(&d, &ham, true).unwrap());
}

#[test]
fn step_rejects_non_slater_input() {
    let ham = h4_toy();
    let d = OneRDM::from_real(&(hfsim::linalg::RMat::identity(4, 4) * 0.5), 2).unwrap();
    assert!(augmented_hessian_step(&d, &ham, 2, 0.1, true).is_err());
}
