use crate::error::{Error, Result};
use crate::fermion::BasisRotation;
use crate::linalg::{self, RMat};
use crate::scf::MolecularHamiltonian;

/// Flips each column so its largest-magnitude entry (first on ties) is positive.
fn fix_signs(c: &mut RMat) {
    for j in 0..c.ncols() {
        let mut best = 0;
        for i in 0..c.nrows() {
            if c[(i, j)].abs() > c[(best, j)].abs() + 1e-12 {
                best = i;
            }
        }
        if c[(best, j)] < 0.0 {
            c.column_mut(j).neg_mut();
        }
    }
}

fn sorted_eigenvectors(m: &RMat) -> RMat {
    let (_, mut c) = linalg::eigh_real(&linalg::symmetrize_real(m));
    fix_signs(&mut c);
    c
}

/// Eigenbasis of the one-body integrals, energies ascending.
///
/// Returns the rotation whose columns are the core orbitals and the
/// Hamiltonian expressed in that basis.
pub fn core_orbital_basis(ham: &MolecularHamiltonian) -> Result<(BasisRotation, MolecularHamiltonian)> {
    let c = sorted_eigenvectors(ham.h());
    Ok((BasisRotation::from_real(&c)?, ham.rotated(&c)))
}

/// Restricted Roothaan iterations from the core guess, without damping.
///
/// Returns orbital coefficients (columns) after `cycles` Fock builds; zero
/// cycles gives the core orbitals.
pub fn scf_orbitals(ham: &MolecularHamiltonian, eta: usize, cycles: usize) -> RMat {
    let n = ham.n_modes();
    let mut c = sorted_eigenvectors(ham.h());
    for _ in 0..cycles {
        let occ = c.columns(0, eta);
        let d = occ * occ.transpose();
        let mut f = ham.h().clone();
        for x in 0..n {
            for y in 0..n {
                let mut acc = 0.0;
                for r in 0..n {
                    for s in 0..n {
                        acc += d[(r, s)] * (2.0 * ham.v(x, y, r, s) - ham.v(x, s, r, y));
                    }
                }
                f[(x, y)] += acc;
            }
        }
        c = sorted_eigenvectors(&f);
    }
    c
}

/// Folds the lowest `n_frozen` SCF orbitals into the constant and one-body terms.
///
/// `eta` is the number of doubly occupied spatial orbitals of the full problem;
/// the reduced problem has `N − n_frozen` orbitals and `eta − n_frozen` occupied.
pub fn freeze_core(
    ham: &MolecularHamiltonian,
    eta: usize,
    n_frozen: usize,
    scf_cycles: usize,
) -> Result<MolecularHamiltonian> {
    let n = ham.n_modes();
    if eta > n {
        return Err(Error::Validation(format!("{eta} occupied orbitals exceed {n} orbitals")));
    }
    if n_frozen > eta {
        return Err(Error::Validation(format!(
            "cannot freeze {n_frozen} orbitals with only {eta} occupied"
        )));
    }
    let c = scf_orbitals(ham, eta, scf_cycles);
    let mo = ham.rotated(&c);
    let na = n - n_frozen;
    let mut constant = mo.constant;
    for f in 0..n_frozen {
        constant += 2.0 * mo.h()[(f, f)];
        for g in 0..n_frozen {
            constant += 2.0 * mo.v(f, f, g, g) - mo.v(f, g, g, f);
        }
    }
    let h = RMat::from_fn(na, na, |p, q| {
        let (p, q) = (p + n_frozen, q + n_frozen);
        let mut x = mo.h()[(p, q)];
        for f in 0..n_frozen {
            x += 2.0 * mo.v(p, q, f, f) - mo.v(p, f, f, q);
        }
        x
    });
    let mut v = vec![0.0; na.pow(4)];
    for p in 0..na {
        for q in 0..na {
            for r in 0..na {
                for s in 0..na {
                    v[((p * na + q) * na + r) * na + s] =
                        mo.v(p + n_frozen, q + n_frozen, r + n_frozen, s + n_frozen);
                }
            }
        }
    }
    MolecularHamiltonian::new(constant, linalg::symmetrize_real(&h), v)
}
