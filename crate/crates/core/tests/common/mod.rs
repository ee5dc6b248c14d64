//! Shared test helpers: a brute-force Fock-space oracle, fixture loaders and random inputs.
#![allow(dead_code)]

use hfsim::fermion::{expm_antihermitian, AntiHermitianGenerator, BasisRotation};
use hfsim::linalg::{CMat, RMat};
use hfsim::scf::MolecularHamiltonian;
use hfsim::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn read_data(name: &str) -> String {
    std::fs::read_to_string(data_path(name)).unwrap()
}

/// `(spacing Å, RHF energy)` pairs from the external reference.
pub fn h6_reference() -> Vec<(f64, f64)> {
    read_data("h6_rhf.csv")
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

/// Externally generated Löwdin-basis integrals of the H4 chain at 1.0 Å.
pub fn h4_reference() -> MolecularHamiltonian {
    let nums = |s: String| -> Vec<f64> { s.split_whitespace().map(|x| x.parse().unwrap()).collect() };
    let h = nums(read_data("h4_lowdin_h.txt"));
    let v = nums(read_data("h4_lowdin_eri.txt"));
    let c = nums(read_data("h4_nuclear_repulsion.txt"))[0];
    let h = RMat::from_row_slice(4, 4, &h);
    MolecularHamiltonian::new(c, (&h + h.transpose()) * 0.5, v).unwrap()
}

pub fn random_real_generator(n: usize, scale: f64, rng: &mut impl Rng) -> AntiHermitianGenerator {
    let mut k = RMat::zeros(n, n);
    for p in 0..n {
        for q in (p + 1)..n {
            let x = scale * (rng.random::<f64>() * 2.0 - 1.0);
            k[(p, q)] = x;
            k[(q, p)] = -x;
        }
    }
    AntiHermitianGenerator::from_real(&k).unwrap()
}

pub fn random_complex_generator(n: usize, scale: f64, rng: &mut impl Rng) -> AntiHermitianGenerator {
    let mut k = CMat::zeros(n, n);
    for p in 0..n {
        k[(p, p)] = C64::new(0.0, scale * (rng.random::<f64>() * 2.0 - 1.0));
        for q in (p + 1)..n {
            let x = C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0) * scale;
            k[(p, q)] = x;
            k[(q, p)] = -x.conj();
        }
    }
    AntiHermitianGenerator::new(k).unwrap()
}

pub fn random_rotation(n: usize, rng: &mut impl Rng) -> BasisRotation {
    expm_antihermitian(&random_real_generator(n, 2.0, rng))
}

pub fn random_complex_rotation(n: usize, rng: &mut impl Rng) -> BasisRotation {
    expm_antihermitian(&random_complex_generator(n, 2.0, rng))
}

/// Brute-force Fock space of `n` modes; mode `q` is bit `n − 1 − q` of a basis index.
pub struct Fock {
    pub n: usize,
}

impl Fock {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    fn bit(&self, q: usize) -> usize {
        1 << (self.n - 1 - q)
    }

    /// Parity of the occupied modes `j < q`.
    fn sign(&self, x: usize, q: usize) -> f64 {
        let below = (0..q).filter(|&j| x & self.bit(j) != 0).count();
        if below % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn create(&self, q: usize, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); psi.len()];
        for (x, a) in psi.iter().enumerate() {
            if x & self.bit(q) == 0 && *a != C64::new(0.0, 0.0) {
                out[x | self.bit(q)] += a * self.sign(x, q);
            }
        }
        out
    }

    pub fn annihilate(&self, q: usize, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); psi.len()];
        for (x, a) in psi.iter().enumerate() {
            if x & self.bit(q) != 0 && *a != C64::new(0.0, 0.0) {
                out[x & !self.bit(q)] += a * self.sign(x, q);
            }
        }
        out
    }

    pub fn vacuum(&self) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.dim()];
        v[0] = C64::new(1.0, 0.0);
        v
    }

    /// `b†_0 b†_1 ⋯ b†_{η−1} |0⟩` with `b†_i = Σ_p orbitals[p][i] a†_p`.
    pub fn slater(&self, orbitals: &CMat) -> Vec<C64> {
        let mut psi = self.vacuum();
        for i in (0..orbitals.ncols()).rev() {
            let mut next = vec![C64::new(0.0, 0.0); self.dim()];
            for p in 0..self.n {
                let c = orbitals[(p, i)];
                if c != C64::new(0.0, 0.0) {
                    for (acc, x) in next.iter_mut().zip(self.create(p, &psi)) {
                        *acc += c * x;
                    }
                }
            }
            psi = next;
        }
        psi
    }

    pub fn inner(a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    /// `⟨a†_p a_q⟩`
    pub fn one_body(&self, psi: &[C64], p: usize, q: usize) -> C64 {
        Self::inner(psi, &self.create(p, &self.annihilate(q, psi)))
    }

    /// `⟨a†_p a†_q a_r a_s⟩`
    pub fn two_body(&self, psi: &[C64], p: usize, q: usize, r: usize, s: usize) -> C64 {
        let x = self.annihilate(s, psi);
        let x = self.annihilate(r, &x);
        let x = self.create(q, &x);
        let x = self.create(p, &x);
        Self::inner(psi, &x)
    }

    /// Density matrix in the crate's storage order, `d[p][q] = ⟨a†_q a_p⟩`.
    pub fn density(&self, psi: &[C64]) -> CMat {
        CMat::from_fn(self.n, self.n, |p, q| self.one_body(psi, q, p))
    }

    /// `⟨H⟩` with spinless modes.
    pub fn energy(&self, psi: &[C64], ham: &MolecularHamiltonian) -> f64 {
        let n = self.n;
        let mut e = C64::new(ham.constant, 0.0) * Self::inner(psi, psi);
        for p in 0..n {
            for q in 0..n {
                e += ham.h()[(p, q)] * self.one_body(psi, p, q);
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = ham.v(p, q, r, s);
                        if v != 0.0 {
                            e += 0.5 * v * self.two_body(psi, p, r, s, q);
                        }
                    }
                }
            }
        }
        e.re
    }

    /// `⟨H⟩` in the `2N` spin-orbital space (α modes first) of a spatial Hamiltonian.
    pub fn spin_energy(&self, psi: &[C64], ham: &MolecularHamiltonian) -> f64 {
        let n = ham.n_modes();
        assert_eq!(self.n, 2 * n);
        let mut e = C64::new(ham.constant, 0.0) * Self::inner(psi, psi);
        for s1 in [0, n] {
            for p in 0..n {
                for q in 0..n {
                    e += ham.h()[(p, q)] * self.one_body(psi, p + s1, q + s1);
                }
            }
        }
        for s1 in [0, n] {
            for s2 in [0, n] {
                for p in 0..n {
                    for q in 0..n {
                        for r in 0..n {
                            for s in 0..n {
                                let v = ham.v(p, q, r, s);
                                if v != 0.0 {
                                    e += 0.5 * v * self.two_body(psi, p + s1, r + s2, s + s2, q + s1);
                                }
                            }
                        }
                    }
                }
            }
        }
        e.re
    }
}

/// Orbital matrix `diag(C_occ, C_occ)` of a closed-shell determinant in `2N` spin orbitals.
pub fn spin_orbitals(occ: &CMat) -> CMat {
    let (n, eta) = (occ.nrows(), occ.ncols());
    let mut out = CMat::zeros(2 * n, 2 * eta);
    out.view_mut((0, 0), (n, eta)).copy_from(occ);
    out.view_mut((n, eta), (n, eta)).copy_from(occ);
    out
}

/// Symmetric random integrals with 8-fold symmetry.
pub fn random_hamiltonian(n: usize, rng: &mut impl Rng) -> MolecularHamiltonian {
    let mut h = RMat::zeros(n, n);
    for p in 0..n {
        for q in 0..=p {
            let x = rng.random::<f64>() - 0.5;
            h[(p, q)] = x;
            h[(q, p)] = x;
        }
    }
    let idx = |p: usize, q: usize, r: usize, s: usize| ((p * n + q) * n + r) * n + s;
    let mut v = vec![0.0; n.pow(4)];
    for p in 0..n {
        for q in 0..=p {
            for r in 0..n {
                for s in 0..=r {
                    if p * n + q < r * n + s {
                        continue;
                    }
                    let x = 0.3 * (rng.random::<f64>() - 0.5);
                    for (a, b, c, d) in [(p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r)] {
                        v[idx(a, b, c, d)] = x;
                        v[idx(c, d, a, b)] = x;
                    }
                }
            }
        }
    }
    MolecularHamiltonian::new(rng.random::<f64>(), h, v).unwrap()
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm_series(m: &CMat) -> CMat {
    let norm = m.iter().map(|z| z.norm()).sum::<f64>();
    let squarings = norm.max(1.0).log2().ceil() as u32 + 4;
    let a = m / C64::new(2f64.powi(squarings as i32), 0.0);
    let n = m.nrows();
    let mut term = CMat::identity(n, n);
    let mut sum = CMat::identity(n, n);
    for k in 1..30 {
        term = &term * &a / C64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

impl Fock {
    /// Fock-space matrix of `Σ_pq k[q][p] a†_q a_p`.
    pub fn one_body_matrix(&self, k: &CMat) -> CMat {
        let dim = self.dim();
        let mut out = CMat::zeros(dim, dim);
        for col in 0..dim {
            let mut e = vec![C64::new(0.0, 0.0); dim];
            e[col] = C64::new(1.0, 0.0);
            for p in 0..self.n {
                let ap = self.annihilate(p, &e);
                for q in 0..self.n {
                    let c = k[(q, p)];
                    if c != C64::new(0.0, 0.0) {
                        for (row, x) in self.create(q, &ap).into_iter().enumerate() {
                            out[(row, col)] += c * x;
                        }
                    }
                }
            }
        }
        out
    }

    /// Computational basis state with the given occupations.
    pub fn basis_state(&self, occ: &[bool]) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.dim()];
        let idx = occ.iter().enumerate().filter(|(_, &o)| o).fold(0, |acc, (q, _)| acc | self.bit(q));
        v[idx] = C64::new(1.0, 0.0);
        v
    }

    pub fn apply(m: &CMat, psi: &[C64]) -> Vec<C64> {
        let v = m * nalgebra::DVector::from_column_slice(psi);
        v.iter().copied().collect()
    }
}

/// Occupation patterns of `n` modes with `eta` particles.
pub fn occupations(n: usize, eta: usize) -> Vec<Vec<bool>> {
    (0u32..(1 << n))
        .filter(|x| x.count_ones() as usize == eta)
        .map(|x| (0..n).map(|q| x & (1 << q) != 0).collect())
        .collect()
}

pub fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}
