//! McWeeny purification and fidelity scoring of estimated 1-RDMs.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fermion::{BasisRotation, OneRDM};
use crate::linalg::{self, CMat, RMat};

/// Eigenvalues outside this open interval are rejected before purifying.
pub const BASIN: (f64, f64) = (-0.3, 1.3);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PurifyOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PurifyOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 20,
        }
    }
}

/// One application of `D ← 3D² − 2D³`.
pub fn mcweeny_step(d: &CMat) -> CMat {
    let d2 = d * d;
    let d3 = &d2 * d;
    linalg::hermitize(&(d2 * C64::new(3.0, 0.0) - d3 * C64::new(2.0, 0.0)))
}

pub fn mcweeny_purify(d: &OneRDM) -> Result<(OneRDM, usize)> {
    mcweeny_purify_with(d, &PurifyOptions::default())
}

/// Iterates the McWeeny map until the idempotency score drops below `tol`.
///
/// Returns the purified matrix and the number of iterations taken. The trace
/// is not renormalized.
pub fn mcweeny_purify_with(d: &OneRDM, opts: &PurifyOptions) -> Result<(OneRDM, usize)> {
    let (vals, _) = d.eigh();
    let outside: Vec<f64> = vals
        .iter()
        .copied()
        .filter(|&l| !(l > BASIN.0 && l < BASIN.1))
        .collect();
    if !outside.is_empty() {
        return Err(Error::OutsideBasin(outside));
    }
    let mut m = d.matrix().clone();
    let mut score = d.idempotency_score();
    let mut iterations = 0;
    while score >= opts.tol {
        if iterations == opts.max_iter {
            return Err(Error::NotConverged { iterations, score });
        }
        m = mcweeny_step(&m);
        iterations += 1;
        score = OneRDM::from_estimate(m.clone(), d.trace_target())?.idempotency_score();
    }
    Ok((OneRDM::from_estimate(m, d.trace_target())?, iterations))
}

/// Rounds each eigenvalue to 0 or 1 (threshold 0.5) keeping the eigenvectors.
pub fn eigen_round(d: &OneRDM) -> OneRDM {
    let (vals, vecs) = d.eigh();
    let rounded: Vec<C64> = vals
        .iter()
        .map(|&l| C64::new(if l > 0.5 { 1.0 } else { 0.0 }, 0.0))
        .collect();
    OneRDM::from_estimate(linalg::compose(&rounded, &vecs), d.trace_target())
        .expect("rounded spectrum keeps the matrix Hermitian")
}

/// A map from estimated 1-RDMs to purified ones.
pub trait Purifier: Send + Sync {
    fn name(&self) -> &'static str;
    fn purify(&self, d: &OneRDM) -> Result<OneRDM>;
    /// False for the pass-through purifier.
    fn modifies(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct McWeeny(pub PurifyOptions);

impl Purifier for McWeeny {
    fn name(&self) -> &'static str {
        "mcweeny"
    }

    fn purify(&self, d: &OneRDM) -> Result<OneRDM> {
        Ok(mcweeny_purify_with(d, &self.0)?.0)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EigenRound;

impl Purifier for EigenRound {
    fn name(&self) -> &'static str {
        "eigen-round"
    }

    fn purify(&self, d: &OneRDM) -> Result<OneRDM> {
        Ok(eigen_round(d))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NoPurification;

impl Purifier for NoPurification {
    fn name(&self) -> &'static str {
        "none"
    }

    fn purify(&self, d: &OneRDM) -> Result<OneRDM> {
        Ok(d.clone())
    }

    fn modifies(&self) -> bool {
        false
    }
}

/// Elementwise standard deviation giving aggregate variance `sigma2` over `N(N+1)/2` elements.
pub fn elementwise_sigma(aggregate_variance: f64, n_modes: usize) -> f64 {
    let m = (n_modes * (n_modes + 1) / 2) as f64;
    (aggregate_variance / m).sqrt()
}

/// Random real orthogonal matrix from the QR factorization of a Gaussian matrix.
fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> RMat {
    let g = RMat::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // fix column signs so the distribution is Haar
    RMat::from_fn(n, n, |i, j| q[(i, j)] * r[(j, j)].signum())
}

/// Fraction of noisy half-filled Slater 1-RDMs that purify to the right rank.
///
/// Each trial perturbs a random idempotent matrix by a real symmetric matrix
/// whose `N(N+1)/2` independent elements have standard deviation `sigma_m`.
/// A trial succeeds when purification converges and exactly `N/2`
/// eigenvalues end above 0.5.
pub fn purification_convergence_probe(sigma_m: f64, n_modes: usize, trials: usize, seed: u64) -> Result<f64> {
    if !(sigma_m.is_finite() && sigma_m >= 0.0) {
        return Err(Error::Validation(format!("sigma_M = {sigma_m} must be finite and non-negative")));
    }
    if trials == 0 {
        return Err(Error::Validation("at least one trial is required".into()));
    }
    let eta = n_modes / 2;
    let successes: usize = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let q = random_orthogonal(n_modes, &mut rng);
            let occ = q.columns(0, eta);
            let mut d = occ * occ.transpose();
            if sigma_m > 0.0 {
                let noise = Normal::new(0.0, sigma_m).expect("valid normal");
                for p in 0..n_modes {
                    for r in p..n_modes {
                        let x = noise.sample(&mut rng);
                        d[(p, r)] += x;
                        if r != p {
                            d[(r, p)] += x;
                        }
                    }
                }
            }
            let noisy = OneRDM::from_real(&d, eta).expect("symmetric by construction");
            match mcweeny_purify(&noisy) {
                Ok((pure, _)) => usize::from(pure.eigh().0.iter().filter(|&&l| l > 0.5).count() == eta),
                Err(_) => 0,
            }
        })
        .sum();
    Ok(successes as f64 / trials as f64)
}

/// `1 − Σ_j ([u†Du]_jj + ω_j − 2 ω_j [u†Du]_jj)`, a lower bound on the fidelity with `U(u)|ω⟩`.
pub fn fidelity_witness(d: &OneRDM, u: &BasisRotation, omega: &[bool]) -> Result<f64> {
    let n = d.n_modes();
    if omega.len() != n || u.n_modes() != n {
        return Err(Error::Dimension {
            expected: n,
            got: if omega.len() != n { omega.len() } else { u.n_modes() },
        });
    }
    let w = u.matrix().adjoint() * d.matrix() * u.matrix();
    let mut acc = 0.0;
    for (j, &o) in omega.iter().enumerate() {
        let djj = w[(j, j)].re;
        let oj = if o { 1.0 } else { 0.0 };
        acc += djj + oj - 2.0 * oj * djj;
    }
    Ok(1.0 - acc)
}

/// `|det(V† U_occ)|²` with `V` the eigenvectors of eigenvalue ≈ 1 of an idempotent `d`.
pub fn fidelity_from_purified(d_pure: &OneRDM, u: &BasisRotation, eta: usize) -> Result<f64> {
    let score = d_pure.idempotency_score();
    if score > 1e-8 {
        return Err(Error::Validation(format!(
            "1-RDM is not idempotent (score {score:e}); purify it first"
        )));
    }
    let (vals, vecs) = d_pure.eigh();
    let occupied: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 0.5).collect();
    if occupied.len() != eta {
        return Err(Error::Dimension {
            expected: eta,
            got: occupied.len(),
        });
    }
    let n = d_pure.n_modes();
    let v = CMat::from_fn(n, eta, |r, c| vecs[(r, occupied[c])]);
    let overlap = v.adjoint() * u.matrix().columns(0, eta);
    Ok(overlap.determinant().norm_sqr())
}
