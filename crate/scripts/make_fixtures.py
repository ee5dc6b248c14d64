"""Regenerate the external reference fixtures used by the core test suite.

Requires pyscf. Writes into crates/core/tests/data.
"""
import os
import numpy as np
from pyscf import gto, scf, ao2mo
from pyscf.tools import fcidump

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "tests", "data")


def chain(n, spacing):
    return [("H", (0.0, 0.0, i * spacing)) for i in range(n)]


def rhf(atoms, basis="sto-3g"):
    mol = gto.M(atom=atoms, basis=basis, unit="Angstrom", verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-13
    mf.conv_tol_grad = 1e-9
    mf.kernel()
    # follow internal instabilities down to the lowest restricted solution
    for _ in range(5):
        mo, _, stable, _ = mf.stability(return_status=True)
        if stable:
            break
        dm = mf.make_rdm1(mo, mf.mo_occ)
        mf.kernel(dm)
    assert mf.converged
    return mol, mf


def main():
    os.makedirs(OUT, exist_ok=True)

    mol, mf = rhf(chain(2, 0.74))
    fcidump.from_scf(mf, os.path.join(OUT, "h2_sto3g.fcidump"), tol=0.0)
    with open(os.path.join(OUT, "h2_sto3g_rhf.txt"), "w") as f:
        f.write(f"{mf.e_tot:.15f}\n")

    with open(os.path.join(OUT, "h6_rhf.csv"), "w") as f:
        f.write("spacing_angstrom,rhf_energy_hartree\n")
        for d in [0.5, 0.9, 1.3, 1.7, 2.1, 2.5]:
            _, mf6 = rhf(chain(6, d))
            f.write(f"{d},{mf6.e_tot:.15f}\n")

    # Lowdin-orthogonalized one-body integrals for an H4 chain
    mol4 = gto.M(atom=chain(4, 1.0), basis="sto-3g", unit="Angstrom", verbose=0)
    s = mol4.intor("int1e_ovlp")
    w, v = np.linalg.eigh(s)
    x = v @ np.diag(w ** -0.5) @ v.T
    h = x @ (mol4.intor("int1e_kin") + mol4.intor("int1e_nuc")) @ x
    eri = ao2mo.incore.full(mol4.intor("int2e"), x, compact=False).reshape([4] * 4)
    np.savetxt(os.path.join(OUT, "h4_lowdin_h.txt"), h, fmt="%.15e")
    np.savetxt(os.path.join(OUT, "h4_lowdin_eri.txt"), eri.reshape(-1), fmt="%.15e")
    with open(os.path.join(OUT, "h4_nuclear_repulsion.txt"), "w") as f:
        f.write(f"{mol4.energy_nuc():.15f}\n")


if __name__ == "__main__":
    main()
