mod common;

use common::{expm_series, max_diff, occupations, random_complex_generator, random_complex_rotation, rng, Fock};
use hfsim::fermion::*;
use hfsim::linalg::{self, CMat, RMat};
use hfsim::C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

#[test]
fn zero_generator_is_identity() {
    let u = expm_antihermitian(&AntiHermitianGenerator::zeros(4));
    assert!(linalg::max_abs(&(u.matrix() - CMat::identity(4, 4))) < 1e-15);
}

#[test]
fn quarter_turn() {
    let theta = std::f64::consts::FRAC_PI_2;
    let k = AntiHermitianGenerator::from_real(&RMat::from_row_slice(2, 2, &[0.0, theta, -theta, 0.0])).unwrap();
    let u = expm_antihermitian(&k);
    let expected = linalg::to_complex(&RMat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
    assert!(linalg::max_abs(&(u.matrix() - expected)) < 1e-12);
}

#[test]
fn exponential_matches_series() {
    let mut r = rng(1);
    for _ in 0..20 {
        let k = random_complex_generator(6, 1.5, &mut r);
        let u = expm_antihermitian(&k);
        assert!(linalg::max_abs(&(u.matrix() - expm_series(k.kappa()))) < 1e-9);
        assert!(linalg::unitarity_error(u.matrix()) < 1e-10);
    }
}

#[test]
fn rejects_non_antihermitian() {
    let mut m = CMat::zeros(3, 3);
    m[(0, 2)] = C64::new(0.5, 0.0);
    let err = AntiHermitianGenerator::new(m).unwrap_err().to_string();
    assert!(err.contains("(0, 2)") || err.contains("0,2") || err.contains("[0][2]"), "{err}");
}

#[test]
fn concat_identity_and_inverse() {
    let mut r = rng(2);
    let u = random_complex_rotation(5, &mut r);
    let id = BasisRotation::identity(5);
    assert_eq!(concat_rotations(&id, &u).unwrap().matrix(), u.matrix());
    let back = concat_rotations(&u, &u.adjoint()).unwrap();
    assert!(linalg::max_abs(&(back.matrix() - CMat::identity(5, 5))) < 1e-10);
    assert!(concat_rotations(&u, &BasisRotation::identity(4)).is_err());
}

#[test]
fn concat_is_fock_space_homomorphism() {
    let mut r = rng(3);
    let n = 6;
    let fock = Fock::new(n);
    let ka = random_complex_generator(n, 1.0, &mut r);
    let kb = random_complex_generator(n, 1.0, &mut r);
    let big_a = expm_series(&fock.one_body_matrix(ka.kappa()));
    let big_b = expm_series(&fock.one_body_matrix(kb.kappa()));
    let ab = concat_rotations(&expm_antihermitian(&ka), &expm_antihermitian(&kb)).unwrap();
    for eta in 0..=n {
        for occ in occupations(n, eta) {
            let cols: Vec<usize> = (0..n).filter(|&q| occ[q]).collect();
            let expected = Fock::apply(&big_a, &Fock::apply(&big_b, &fock.basis_state(&occ)));
            let orbitals = CMat::from_fn(n, cols.len(), |p, c| ab.matrix()[(p, cols[c])]);
            let got = fock.slater(&orbitals);
            assert!(max_diff(&got, &expected) < 1e-9, "occ {occ:?}");
        }
    }
}

#[test]
fn propagate_examples() {
    let d = propagate_rdm(&BasisRotation::identity(4), &[true, true, false, false]).unwrap();
    let expected = linalg::to_complex(&RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0])));
    assert_eq!(d.matrix(), &expected);
    let u = random_complex_rotation(4, &mut rng(4));
    let vac = propagate_rdm(&u, &[false; 4]).unwrap();
    assert!(linalg::max_abs(vac.matrix()) == 0.0);
}

#[test]
fn propagate_matches_fock_density() {
    let mut r = rng(5);
    let (n, eta) = (6, 3);
    let fock = Fock::new(n);
    for _ in 0..5 {
        let u = random_complex_rotation(n, &mut r);
        let occ: Vec<bool> = {
            let mut o = vec![false; n];
            let mut placed = 0;
            while placed < eta {
                let q = r.random_range(0..n);
                if !o[q] {
                    o[q] = true;
                    placed += 1;
                }
            }
            o
        };
        let cols: Vec<usize> = (0..n).filter(|&q| occ[q]).collect();
        let psi = fock.slater(&CMat::from_fn(n, cols.len(), |p, c| u.matrix()[(p, cols[c])]));
        let d = propagate_rdm(&u, &occ).unwrap();
        assert!(linalg::max_abs(&(d.matrix() - fock.density(&psi))) < 1e-10);
        assert!((d.trace() - eta as f64).abs() < 1e-12);
        assert!(d.idempotency_score() < 1e-10);
    }
}

#[test]
fn two_rdm_small_cases() {
    let one = OneRDM::from_real(&RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0])), 1).unwrap();
    let t = two_rdm_from_one_rdm(&one);
    for p in 0..2 {
        for q in 0..2 {
            for r in 0..2 {
                for s in 0..2 {
                    assert_eq!(t.get(p, q, r, s), C64::new(0.0, 0.0));
                }
            }
        }
    }
    let two = OneRDM::from_real(&RMat::identity(2, 2), 2).unwrap();
    let t = two_rdm_from_one_rdm(&two);
    // ⟨a†_0 a†_1 a_1 a_0⟩ = ⟨n_0 n_1⟩ = 1
    assert_eq!(t.get(0, 1, 1, 0), C64::new(1.0, 0.0));
    assert_eq!(t.get(1, 0, 1, 0), C64::new(-1.0, 0.0));
    assert_eq!(t.get(0, 1, 0, 1), C64::new(-1.0, 0.0));
    assert_eq!(t.get(0, 0, 1, 1), C64::new(0.0, 0.0));
}

#[test]
fn two_rdm_matches_fock_space() {
    let mut r = rng(6);
    let (n, eta) = (6, 3);
    let fock = Fock::new(n);
    let u = random_complex_rotation(n, &mut r);
    let psi = fock.slater(&u.matrix().columns(0, eta).into_owned());
    let t = two_rdm_from_one_rdm(&propagate_rdm(&u, &filled(n, eta)).unwrap());
    for p in 0..n {
        for q in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let exact = fock.two_body(&psi, p, q, a, b);
                    assert!((t.get(p, q, a, b) - exact).norm() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn fidelity_examples() {
    let mut r = rng(7);
    let u = random_complex_rotation(6, &mut r);
    let a = u.slater(3).unwrap();
    assert!((slater_overlap_fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    let e = |cols: &[usize]| {
        SlaterDeterminant::new(CMat::from_fn(4, cols.len(), |p, c| {
            C64::new(if p == cols[c] { 1.0 } else { 0.0 }, 0.0)
        }))
        .unwrap()
    };
    assert_eq!(slater_overlap_fidelity(&e(&[0, 1]), &e(&[2, 3])).unwrap(), 0.0);
    assert!(slater_overlap_fidelity(&e(&[0, 1]), &e(&[0])).is_err());
}

#[test]
fn fidelity_matches_statevector_overlap() {
    let mut r = rng(8);
    let (n, eta) = (6, 3);
    let fock = Fock::new(n);
    for _ in 0..10 {
        let (u, v) = (random_complex_rotation(n, &mut r), random_complex_rotation(n, &mut r));
        let (a, b) = (u.slater(eta).unwrap(), v.slater(eta).unwrap());
        let exact = Fock::inner(&fock.slater(a.orbitals()), &fock.slater(b.orbitals())).norm_sqr();
        let f = slater_overlap_fidelity(&a, &b).unwrap();
        assert!((f - exact).abs() < 1e-10);
        assert!((f - slater_overlap_fidelity(&b, &a).unwrap()).abs() < 1e-12);
    }
}

fn generator_strategy(n: usize) -> impl Strategy<Value = AntiHermitianGenerator> {
    any::<u64>().prop_map(move |seed| random_complex_generator(n, 1.0, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn group_property(n in 2usize..=10, seed in any::<u64>()) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let eta = r.random_range(0..=n);
        let a = expm_antihermitian(&random_complex_generator(n, 1.0, &mut r));
        let b = expm_antihermitian(&random_complex_generator(n, 1.0, &mut r));
        let ab = concat_rotations(&a, &b).unwrap();
        let direct = propagate_rdm(&ab, &filled(n, eta)).unwrap();
        // sequential: propagate through b, then conjugate by a
        let d_b = propagate_rdm(&b, &filled(n, eta)).unwrap();
        let seq = a.matrix() * d_b.matrix() * a.matrix().adjoint();
        prop_assert!(linalg::max_abs(&(direct.matrix() - seq)) < 1e-9);
    }

    #[test]
    fn propagated_spectrum_is_binary(k in generator_strategy(7), eta in 0usize..=7) {
        let d = propagate_rdm(&expm_antihermitian(&k), &filled(7, eta)).unwrap();
        for l in d.eigh().0 {
            prop_assert!(l.abs() < 1e-9 || (l - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn two_rdm_contraction(k in generator_strategy(5), eta in 1usize..=5) {
        let d = propagate_rdm(&expm_antihermitian(&k), &filled(5, eta)).unwrap();
        let t = two_rdm_from_one_rdm(&d);
        // Σ_q ⟨a†_p a†_q a_q a_s⟩ = (η − 1) ⟨a†_p a_s⟩
        for p in 0..5 {
            for s in 0..5 {
                let c: C64 = (0..5).map(|q| t.get(p, q, q, s)).sum();
                prop_assert!((c - d.expectation(p, s) * (eta as f64 - 1.0)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn exponential_is_unitary(k in generator_strategy(8)) {
        prop_assert!(linalg::unitarity_error(expm_antihermitian(&k).matrix()) < 1e-10);
    }
}
