//! Exact kernel for non-interacting fermion states.
//!
//! Conventions used throughout the crate:
//!
//! * A basis rotation `u` acts on creation operators as
//!   `U a†_p U† = Σ_q a†_q u[q][p]`, so the orbitals of the state
//!   `U |occ⟩` are the occupied columns of `u`.
//! * A one-particle density matrix is stored in density-matrix order,
//!   `d[p][q] = ⟨a†_q a_p⟩`, so that `d = U_occ U_occ†`. For the real
//!   orthogonal rotations used by the hydrogen experiments this coincides
//!   with `⟨a†_p a_q⟩`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat};

const ANTI_HERMITIAN_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;

/// Generator `κ` of an orbital rotation `u = e^κ`.
#[derive(Clone, Debug, PartialEq)]
pub struct AntiHermitianGenerator {
    kappa: CMat,
}

impl AntiHermitianGenerator {
    /// Validates `κ + κ† = 0` elementwise, naming the first offending element.
    pub fn new(kappa: CMat) -> Result<Self> {
        if kappa.nrows() != kappa.ncols() {
            return Err(Error::Dimension {
                expected: kappa.nrows(),
                got: kappa.ncols(),
            });
        }
        let n = kappa.nrows();
        for p in 0..n {
            for q in p..n {
                let diff = (kappa[(p, q)] + kappa[(q, p)].conj()).norm();
                if diff > ANTI_HERMITIAN_TOL {
                    return Err(Error::Validation(format!(
                        "generator is not anti-Hermitian at element ({p}, {q}): |κ_pq + κ*_qp| = {diff:e}"
                    )));
                }
            }
        }
        Ok(Self { kappa })
    }

    pub fn from_real(kappa: &RMat) -> Result<Self> {
        Self::new(linalg::to_complex(kappa))
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            kappa: CMat::zeros(n, n),
        }
    }

    /// Real generator `Σ c_{b,i} (E_bi − E_ib)` over virtual `b ≥ η` and occupied `i < η`.
    ///
    /// `params` is ordered as [`nonredundant_pairs`] returns the pairs.
    pub fn from_nonredundant(n: usize, eta: usize, params: &[f64]) -> Result<Self> {
        let pairs = nonredundant_pairs(n, eta);
        if params.len() != pairs.len() {
            return Err(Error::Dimension {
                expected: pairs.len(),
                got: params.len(),
            });
        }
        let mut kappa = CMat::zeros(n, n);
        for (&(b, i), &c) in pairs.iter().zip(params) {
            kappa[(b, i)] += C64::new(c, 0.0);
            kappa[(i, b)] -= C64::new(c, 0.0);
        }
        Ok(Self { kappa })
    }

    pub fn n_modes(&self) -> usize {
        self.kappa.nrows()
    }

    pub fn kappa(&self) -> &CMat {
        &self.kappa
    }

    /// True when every imaginary part is below 1e-12.
    pub fn is_real(&self) -> bool {
        self.kappa.iter().all(|z| z.im.abs() < ANTI_HERMITIAN_TOL)
    }
}

/// `(virtual, occupied)` index pairs in a fixed order: occupied major, virtual minor.
pub fn nonredundant_pairs(n: usize, eta: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(eta * n.saturating_sub(eta));
    for i in 0..eta {
        for b in eta..n {
            pairs.push((b, i));
        }
    }
    pairs
}

/// Unitary single-particle basis change.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisRotation {
    u: CMat,
}

impl BasisRotation {
    /// Validates `u u† = 1` within 1e-10 in max norm.
    pub fn new(u: CMat) -> Result<Self> {
        if u.nrows() != u.ncols() {
            return Err(Error::Dimension {
                expected: u.nrows(),
                got: u.ncols(),
            });
        }
        let err = linalg::unitarity_error(&u);
        if err.is_nan() || err > UNITARY_TOL {
            return Err(Error::Validation(format!(
                "basis rotation is not unitary (max |u u† - 1| = {err:e})"
            )));
        }
        Ok(Self { u })
    }

    pub fn from_real(u: &RMat) -> Result<Self> {
        Self::new(linalg::to_complex(u))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            u: CMat::identity(n, n),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.u.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.u
    }

    pub fn into_matrix(self) -> CMat {
        self.u
    }

    pub fn adjoint(&self) -> Self {
        Self {
            u: self.u.adjoint(),
        }
    }

    /// Slater determinant built from the first `eta` columns.
    pub fn slater(&self, eta: usize) -> Result<SlaterDeterminant> {
        if eta > self.n_modes() {
            return Err(Error::Validation(format!(
                "{eta} particles do not fit in {} modes",
                self.n_modes()
            )));
        }
        SlaterDeterminant::new(self.u.columns(0, eta).into_owned())
    }
}

/// `u = e^κ`, computed as `V e^{-iΛ} V†` from the Hermitian eigendecomposition `iκ = V Λ V†`.
pub fn expm_antihermitian(g: &AntiHermitianGenerator) -> BasisRotation {
    let h = g.kappa.map(|z| linalg::I * z);
    let h = linalg::hermitize(&h);
    let (values, vectors) = linalg::eigh(&h);
    let phases: Vec<C64> = values.iter().map(|&l| C64::from_polar(1.0, -l)).collect();
    BasisRotation {
        u: linalg::compose(&phases, &vectors),
    }
}

/// Group product `a · b`. Applying `b` first and then `a` to a state realizes `a · b`.
pub fn concat_rotations(a: &BasisRotation, b: &BasisRotation) -> Result<BasisRotation> {
    if a.n_modes() != b.n_modes() {
        return Err(Error::Dimension {
            expected: a.n_modes(),
            got: b.n_modes(),
        });
    }
    Ok(BasisRotation { u: &a.u * &b.u })
}

/// Occupied orbitals of a determinant as orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SlaterDeterminant {
    orbitals: CMat,
}

impl SlaterDeterminant {
    pub fn new(orbitals: CMat) -> Result<Self> {
        if orbitals.ncols() > orbitals.nrows() {
            return Err(Error::Validation(format!(
                "{} orbitals do not fit in {} modes",
                orbitals.ncols(),
                orbitals.nrows()
            )));
        }
        let eta = orbitals.ncols();
        let gram = orbitals.adjoint() * &orbitals;
        let err = linalg::max_abs(&(gram - CMat::identity(eta, eta)));
        if err.is_nan() || err > UNITARY_TOL {
            return Err(Error::Validation(format!(
                "occupied columns are not orthonormal (max error {err:e})"
            )));
        }
        Ok(Self { orbitals })
    }

    pub fn n_modes(&self) -> usize {
        self.orbitals.nrows()
    }

    pub fn n_particles(&self) -> usize {
        self.orbitals.ncols()
    }

    pub fn orbitals(&self) -> &CMat {
        &self.orbitals
    }

    pub fn one_rdm(&self) -> OneRDM {
        OneRDM {
            d: &self.orbitals * self.orbitals.adjoint(),
            trace_target: self.n_particles(),
        }
    }
}

/// One-particle reduced density matrix, `d[p][q] = ⟨a†_q a_p⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneRDM {
    d: CMat,
    trace_target: usize,
}

impl OneRDM {
    /// Validates Hermiticity within 1e-10.
    pub fn new(d: CMat, trace_target: usize) -> Result<Self> {
        if d.nrows() != d.ncols() {
            return Err(Error::Dimension {
                expected: d.nrows(),
                got: d.ncols(),
            });
        }
        if let Some((p, q, diff)) = linalg::hermiticity_violation(&d, HERMITIAN_TOL) {
            return Err(Error::Validation(format!(
                "1-RDM is not Hermitian at ({p}, {q}): deviation {diff:e}"
            )));
        }
        Ok(Self { d, trace_target })
    }

    /// Hermitizes `d` before wrapping it; for estimates assembled from data.
    pub fn from_estimate(d: CMat, trace_target: usize) -> Result<Self> {
        if d.nrows() != d.ncols() {
            return Err(Error::Dimension {
                expected: d.nrows(),
                got: d.ncols(),
            });
        }
        Ok(Self {
            d: linalg::hermitize(&d),
            trace_target,
        })
    }

    pub fn from_real(d: &RMat, trace_target: usize) -> Result<Self> {
        Self::new(linalg::to_complex(d), trace_target)
    }

    pub fn n_modes(&self) -> usize {
        self.d.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.d
    }

    pub fn trace_target(&self) -> usize {
        self.trace_target
    }

    pub fn trace(&self) -> f64 {
        self.d.trace().re
    }

    /// Eigenvalues ascending with matching eigenvectors.
    pub fn eigh(&self) -> (Vec<f64>, CMat) {
        linalg::eigh(&self.d)
    }

    /// `max |λ (1 − λ)|` over the spectrum; zero for a Slater determinant.
    pub fn idempotency_score(&self) -> f64 {
        let (values, _) = self.eigh();
        values.iter().fold(0.0, |acc, l| acc.max((l * (1.0 - l)).abs()))
    }

    /// `⟨a†_p a_q⟩`
    pub fn expectation(&self, p: usize, q: usize) -> C64 {
        self.d[(q, p)]
    }

    /// Block-diagonal spin-orbital 1-RDM with equal α and β blocks (α modes first).
    pub fn spin_expanded(&self) -> OneRDM {
        let n = self.n_modes();
        let mut d = CMat::zeros(2 * n, 2 * n);
        d.view_mut((0, 0), (n, n)).copy_from(&self.d);
        d.view_mut((n, n), (n, n)).copy_from(&self.d);
        OneRDM {
            d,
            trace_target: 2 * self.trace_target,
        }
    }
}

/// `D = Σ_{i occupied} u[:, i] u[:, i]†`
pub fn propagate_rdm(u: &BasisRotation, initial_occupations: &[bool]) -> Result<OneRDM> {
    let n = u.n_modes();
    if initial_occupations.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: initial_occupations.len(),
        });
    }
    let mut d = CMat::zeros(n, n);
    for (i, _) in initial_occupations.iter().enumerate().filter(|(_, &o)| o) {
        let col = u.u.column(i);
        d += col * col.adjoint();
    }
    let eta = initial_occupations.iter().filter(|&&o| o).count();
    Ok(OneRDM { d, trace_target: eta })
}

/// `η`-filled reference occupations `(1, …, 1, 0, …, 0)`.
pub fn filled(n: usize, eta: usize) -> Vec<bool> {
    (0..n).map(|p| p < eta).collect()
}

/// Dense two-particle tensor, `get(p, q, r, s) = ⟨a†_p a†_q a_r a_s⟩`.
#[derive(Clone, Debug)]
pub struct TwoRdm {
    n: usize,
    data: Vec<C64>,
}

impl TwoRdm {
    pub fn n_modes(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> C64 {
        let n = self.n;
        self.data[((p * n + q) * n + r) * n + s]
    }
}

/// Slater factorization `⟨a†_p a†_q a_r a_s⟩ = ⟨a†_p a_s⟩⟨a†_q a_r⟩ − ⟨a†_q a_s⟩⟨a†_p a_r⟩`.
pub fn two_rdm_from_one_rdm(d: &OneRDM) -> TwoRdm {
    let n = d.n_modes();
    let g = |a: usize, b: usize| d.d[(b, a)];
    let mut data = vec![C64::new(0.0, 0.0); n * n * n * n];
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    data[((p * n + q) * n + r) * n + s] = g(p, s) * g(q, r) - g(q, s) * g(p, r);
                }
            }
        }
    }
    TwoRdm { n, data }
}

/// `|det(V† U)|²` between two determinants of equal size.
pub fn slater_overlap_fidelity(a: &SlaterDeterminant, b: &SlaterDeterminant) -> Result<f64> {
    if a.n_modes() != b.n_modes() {
        return Err(Error::Dimension {
            expected: a.n_modes(),
            got: b.n_modes(),
        });
    }
    if a.n_particles() != b.n_particles() {
        return Err(Error::Validation(format!(
            "determinants have different particle numbers ({} vs {})",
            a.n_particles(),
            b.n_particles()
        )));
    }
    if a.n_particles() == 0 {
        return Ok(1.0);
    }
    let overlap = b.orbitals.adjoint() * &a.orbitals;
    Ok(overlap.determinant().norm_sqr().min(1.0))
}
