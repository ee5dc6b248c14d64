//! 1-RDM estimation from shot tables, covariance models and resampled error bars.
//!
//! Elements are indexed diagonal first, `(0,0) … (N−1,N−1)`, followed by the
//! upper triangle `(p, q)`, `p < q`, in row-major order. Per-shot covariances
//! are expressed over the observables `n_p` (diagonal) and
//! `O_pq = a†_p a_q + a†_q a_p` (off-diagonal); the estimator covariance is
//! over the 1-RDM elements `D_pp = ⟨n_p⟩` and `Re D_pq = ⟨O_pq⟩ / 2`.

use std::io::Write;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::compile::{BasisTag, MeasurementPlan, MeasurementSetting};
use crate::emulator::ShotTable;
use crate::error::{Error, Result};
use crate::fermion::{BasisRotation, OneRDM};
use crate::mitigation::{eigen_round, fidelity_from_purified};
use crate::scf::{energy_from_rdm_unchecked, MolecularHamiltonian};
use crate::linalg::{self, CMat, RMat};

/// Ordered list of `(p, q)`, `p ≤ q`: the diagonal first, then the upper triangle.
pub fn element_basis(n: usize) -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = (0..n).map(|p| (p, p)).collect();
    for p in 0..n {
        for q in (p + 1)..n {
            e.push((p, q));
        }
    }
    e
}

/// Position of `(p, q)` in [`element_basis`].
pub fn element_index(n: usize, p: usize, q: usize) -> usize {
    let (p, q) = (p.min(q), p.max(q));
    if p == q {
        p
    } else {
        n + p * n - p * (p + 1) / 2 + (q - p - 1)
    }
}

/// Keeps only bitstrings of Hamming weight `eta`; returns the table and the retained fraction.
pub fn post_select(t: &ShotTable, eta: usize) -> Result<(ShotTable, f64)> {
    let total = t.total_shots();
    let mut kept = ShotTable::new(t.setting_id, t.n_qubits);
    for (&idx, &count) in &t.counts {
        if idx.count_ones() as usize == eta {
            kept.add(idx, count);
        }
    }
    let k = kept.total_shots();
    if k == 0 {
        return Err(Error::EmptyData(format!(
            "post-selection kept no shots of setting {} ({total} recorded)",
            t.setting_id
        )));
    }
    Ok((kept, k as f64 / total as f64))
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Feature {
    /// `b_q`, the bit of qubit `q`.
    Occupation(usize),
    /// `b_b − b_a`, which equals `O` after the gadget.
    PairDifference(usize, usize),
    /// `z_a z_b` with `z = 1 − 2b`.
    Parity(usize, usize),
}

impl Feature {
    fn value(&self, t: &ShotTable, idx: u64) -> f64 {
        let b = |q: usize| if t.bit(idx, q) { 1.0 } else { 0.0 };
        match *self {
            Feature::Occupation(q) => b(q),
            Feature::PairDifference(a, c) => b(c) - b(a),
            Feature::Parity(a, c) => (1.0 - 2.0 * b(a)) * (1.0 - 2.0 * b(c)),
        }
    }
}

/// One sampled quantity and the 1-RDM element it contributes to.
#[derive(Clone, Copy, Debug)]
struct Contribution {
    element: usize,
    coeff: f64,
    feature: Feature,
}

fn contributions(setting: &MeasurementSetting, n: usize) -> Vec<Contribution> {
    match setting.basis {
        BasisTag::Z => (0..n)
            .map(|q| Contribution {
                element: element_index(n, setting.permutation[q], setting.permutation[q]),
                coeff: 1.0,
                feature: Feature::Occupation(q),
            })
            .collect(),
        BasisTag::GadgetEven | BasisTag::GadgetOdd => setting
            .pairs
            .iter()
            .map(|&(a, b)| Contribution {
                element: element_index(n, setting.permutation[a], setting.permutation[b]),
                coeff: 0.5,
                feature: Feature::PairDifference(a, b),
            })
            .collect(),
        BasisTag::XX | BasisTag::YY => setting
            .pairs
            .iter()
            .map(|&(a, b)| Contribution {
                element: element_index(n, setting.permutation[a], setting.permutation[b]),
                coeff: 0.25,
                feature: Feature::Parity(a, b),
            })
            .collect(),
    }
}

/// Sample mean and per-shot sample covariance of a setting's features.
struct SettingMoments {
    shots: u64,
    mean: Vec<f64>,
    cov: RMat,
}

fn moments(t: &ShotTable, feats: &[Contribution]) -> Result<SettingMoments> {
    let shots = t.total_shots();
    if shots < 2 {
        return Err(Error::EmptyData(format!(
            "setting {} has {shots} shot(s); at least 2 are needed for a covariance",
            t.setting_id
        )));
    }
    let k = feats.len();
    let mut sum = vec![0.0; k];
    let mut outer = RMat::zeros(k, k);
    let mut vals = vec![0.0; k];
    for (&idx, &count) in &t.counts {
        let w = count as f64;
        for (v, f) in vals.iter_mut().zip(feats) {
            *v = f.feature.value(t, idx);
        }
        for i in 0..k {
            sum[i] += w * vals[i];
            for j in 0..=i {
                outer[(i, j)] += w * vals[i] * vals[j];
            }
        }
    }
    let nf = shots as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let mut cov = RMat::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let c = (outer[(i, j)] - nf * mean[i] * mean[j]) / (nf - 1.0);
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    Ok(SettingMoments { shots, mean, cov })
}

/// Sample covariance of the ±1 values `Z_q = 1 − 2 b_q` over all qubits of one table.
pub fn z_covariance(t: &ShotTable) -> Result<RMat> {
    let feats: Vec<Contribution> = (0..t.n_qubits)
        .map(|q| Contribution {
            element: q,
            coeff: 1.0,
            feature: Feature::Occupation(q),
        })
        .collect();
    Ok(moments(t, &feats)?.cov * 4.0)
}

/// Estimated 1-RDM together with the covariance of its measured elements.
#[derive(Clone, Debug, PartialEq)]
pub struct RDMEstimate {
    pub mean: OneRDM,
    /// Estimator covariance over [`element_basis`], already divided by the shots used.
    pub covariance: RMat,
    /// Shots entering the estimate, per setting (after post-selection).
    pub shots_used: Vec<u64>,
    /// Retained fraction per setting (1 when not post-selected).
    pub retained_fraction: Vec<f64>,
}

impl RDMEstimate {
    /// Writes the mean matrix (real parts) as CSV rows.
    pub fn write_mean_csv<W: Write>(&self, w: W) -> Result<()> {
        write_matrix_csv(&self.mean.matrix().map(|z| z.re), w)
    }

    pub fn write_covariance_csv<W: Write>(&self, w: W) -> Result<()> {
        write_matrix_csv(&self.covariance, w)
    }

    /// Mean retained fraction over the settings.
    pub fn mean_retained_fraction(&self) -> f64 {
        self.retained_fraction.iter().sum::<f64>() / self.retained_fraction.len().max(1) as f64
    }
}

fn write_matrix_csv<W: Write>(m: &RMat, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in 0..m.nrows() {
        wr.write_record((0..m.ncols()).map(|c| m[(r, c)].to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

/// Which per-shot covariance enters [`RDMEstimate::covariance`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovarianceKind {
    Empirical,
    /// Gaussian-state closed form evaluated at the estimated mean.
    GaussianState,
}

fn match_tables<'a>(plan: &MeasurementPlan, tables: &'a [ShotTable]) -> Result<Vec<&'a ShotTable>> {
    let n = plan.n_modes;
    let mut found = Vec::with_capacity(plan.settings.len());
    let mut missing = Vec::new();
    for s in &plan.settings {
        match tables.iter().find(|t| t.setting_id == s.id) {
            Some(t) if t.n_qubits == n => found.push(t),
            Some(t) => {
                return Err(Error::Dimension {
                    expected: n,
                    got: t.n_qubits,
                })
            }
            None => missing.extend(s.targets.iter().copied()),
        }
    }
    if !missing.is_empty() {
        missing.sort_unstable();
        missing.dedup();
        return Err(Error::Coverage(missing));
    }
    Ok(found)
}

/// Assembles the 1-RDM estimate with the empirical covariance.
pub fn assemble_rdm(plan: &MeasurementPlan, tables: &[ShotTable], post_select_shots: bool) -> Result<RDMEstimate> {
    assemble_rdm_with(plan, tables, post_select_shots, CovarianceKind::Empirical)
}

/// Assembles the 1-RDM estimate.
///
/// Diagonal elements come from the Z setting, real off-diagonal parts from
/// the gadget (or XX/YY) settings; imaginary parts are not measured and are
/// set to zero. Post-selection applies only to number-conserving settings.
pub fn assemble_rdm_with(
    plan: &MeasurementPlan,
    tables: &[ShotTable],
    post_select_shots: bool,
    kind: CovarianceKind,
) -> Result<RDMEstimate> {
    let n = plan.n_modes;
    let m = n * (n + 1) / 2;
    let matched = match_tables(plan, tables)?;

    let mut per_setting = Vec::with_capacity(plan.settings.len());
    let mut multiplicity = vec![[0usize; 2]; m];
    for (s, t) in plan.settings.iter().zip(&matched) {
        let (table, alpha) = if post_select_shots && s.basis.conserves_number() {
            post_select(t, plan.n_particles)?
        } else {
            ((*t).clone(), 1.0)
        };
        let feats = contributions(s, n);
        let slot = usize::from(s.basis == BasisTag::YY);
        for f in &feats {
            multiplicity[f.element][slot] += 1;
        }
        let mom = moments(&table, &feats)?;
        per_setting.push((s, feats, mom, alpha));
    }

    let weight = |f: &Contribution, s: &MeasurementSetting| {
        f.coeff / multiplicity[f.element][usize::from(s.basis == BasisTag::YY)] as f64
    };
    let mut values = vec![0.0; m];
    for (s, feats, mom, _) in &per_setting {
        for (f, mu) in feats.iter().zip(&mom.mean) {
            values[f.element] += weight(f, s) * mu;
        }
    }
    let mean = OneRDM::from_estimate(element_vector_to_matrix(n, &values), plan.n_particles)?;

    let mut covariance = RMat::zeros(m, m);
    for (s, feats, mom, _) in &per_setting {
        let shot_cov = match kind {
            CovarianceKind::Empirical => mom.cov.clone(),
            CovarianceKind::GaussianState => gaussian_feature_covariance(s, feats, &mean)?,
        };
        let nf = mom.shots as f64;
        for (i, fi) in feats.iter().enumerate() {
            for (j, fj) in feats.iter().enumerate() {
                covariance[(fi.element, fj.element)] += weight(fi, s) * weight(fj, s) * shot_cov[(i, j)] / nf;
            }
        }
    }

    Ok(RDMEstimate {
        mean,
        covariance,
        shots_used: per_setting.iter().map(|(_, _, mom, _)| mom.shots).collect(),
        retained_fraction: per_setting.iter().map(|(_, _, _, a)| *a).collect(),
    })
}

/// Real symmetric matrix from an element vector over [`element_basis`].
pub fn element_vector_to_matrix(n: usize, values: &[f64]) -> CMat {
    let mut d = CMat::zeros(n, n);
    for (k, &(p, q)) in element_basis(n).iter().enumerate() {
        d[(p, q)] = C64::new(values[k], 0.0);
        d[(q, p)] = C64::new(values[k], 0.0);
    }
    d
}

/// Real parts of the elements of `d` over [`element_basis`].
pub fn matrix_to_element_vector(d: &CMat) -> Vec<f64> {
    let n = d.nrows();
    element_basis(n).iter().map(|&(p, q)| d[(p, q)].re).collect()
}

/// Per-shot empirical covariance over the observables `n_p` / `O_pq`.
///
/// Entries between observables of different settings are zero. Requires a
/// number-conserving (gadget) plan.
pub fn covariance_empirical(plan: &MeasurementPlan, tables: &[ShotTable], post_select_shots: bool) -> Result<RMat> {
    if !plan.post_selectable {
        return Err(Error::Unsupported(
            "per-observable covariance needs gadget settings; XX/YY settings split each observable".into(),
        ));
    }
    let n = plan.n_modes;
    let m = n * (n + 1) / 2;
    let matched = match_tables(plan, tables)?;
    let mut cov = RMat::zeros(m, m);
    for (s, t) in plan.settings.iter().zip(matched) {
        let table = if post_select_shots {
            post_select(t, plan.n_particles)?.0
        } else {
            t.clone()
        };
        let feats = contributions(s, n);
        let mom = moments(&table, &feats)?;
        for (i, fi) in feats.iter().enumerate() {
            for (j, fj) in feats.iter().enumerate() {
                cov[(fi.element, fj.element)] = mom.cov[(i, j)];
            }
        }
    }
    Ok(cov)
}

/// Gaussian-state covariance of `n_p` / `O_pq` with a non-idempotency warning.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianCovariance {
    pub matrix: RMat,
    pub warning: Option<String>,
}

/// Coefficients `c_ij` of an observable `Σ c_ij a†_i a_j`.
fn observable_terms(p: usize, q: usize) -> Vec<(usize, usize, f64)> {
    if p == q {
        vec![(p, p, 1.0)]
    } else {
        vec![(p, q, 1.0), (q, p, 1.0)]
    }
}

/// `Cov(a†_i a_j, a†_k a_l)` for a Gaussian state with `γ_xy = ⟨a†_x a_y⟩`.
fn wick_covariance(d: &OneRDM, a: &[(usize, usize, f64)], b: &[(usize, usize, f64)]) -> f64 {
    let g = |x: usize, y: usize| d.expectation(x, y);
    let mut acc = C64::new(0.0, 0.0);
    for &(i, j, ca) in a {
        for &(k, l, cb) in b {
            let delta = if j == k { 1.0 } else { 0.0 };
            acc += g(i, l) * (C64::new(delta, 0.0) - g(k, j)) * (ca * cb);
        }
    }
    acc.re
}

/// Closed-form covariance of all observables `n_p` / `O_pq` for the Gaussian state with 1-RDM `d`.
pub fn covariance_gaussian_state(d: &OneRDM) -> GaussianCovariance {
    let n = d.n_modes();
    let elems = element_basis(n);
    let terms: Vec<_> = elems.iter().map(|&(p, q)| observable_terms(p, q)).collect();
    let m = elems.len();
    let mut matrix = RMat::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let c = wick_covariance(d, &terms[i], &terms[j]);
            matrix[(i, j)] = c;
            matrix[(j, i)] = c;
        }
    }
    let score = d.idempotency_score();
    let warning = (score >= 0.1).then(|| {
        format!("1-RDM is far from a Slater determinant (idempotency score {score:.3}); Gaussian covariance is approximate")
    });
    GaussianCovariance { matrix, warning }
}

fn gaussian_feature_covariance(s: &MeasurementSetting, feats: &[Contribution], d: &OneRDM) -> Result<RMat> {
    let perm = &s.permutation;
    let terms = feats
        .iter()
        .map(|f| match f.feature {
            Feature::Occupation(q) => Ok(observable_terms(perm[q], perm[q])),
            Feature::PairDifference(a, b) => Ok(observable_terms(perm[a], perm[b])),
            Feature::Parity(..) => Err(Error::Unsupported(
                "Gaussian-state covariance is not available for XX/YY settings".into(),
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    let k = terms.len();
    Ok(RMat::from_fn(k, k, |i, j| wick_covariance(d, &terms[i], &terms[j])))
}

/// Closest positive semidefinite matrix with trace `η`: shift the spectrum uniformly, clip at zero.
pub fn fixed_trace_positive_projection(d: &OneRDM) -> OneRDM {
    let eta = d.trace_target() as f64;
    let (vals, vecs) = d.eigh();
    let mut sorted = vals.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut shift = sorted[0];
    if eta > 0.0 {
        let mut acc = 0.0;
        for k in 0..sorted.len() {
            acc += sorted[k];
            let mu = (acc - eta) / (k + 1) as f64;
            if sorted[k] > mu && (k + 1 == sorted.len() || sorted[k + 1] <= mu) {
                shift = mu;
                break;
            }
        }
    }
    let clipped: Vec<C64> = vals.iter().map(|&l| C64::new((l - shift).max(0.0), 0.0)).collect();
    let m = linalg::compose(&clipped, &vecs);
    OneRDM::from_estimate(m, d.trace_target()).expect("projection keeps the matrix Hermitian")
}

/// Mean and standard deviation of one resampled quantity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

fn summarize(xs: impl Iterator<Item = f64> + Clone) -> Summary {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = if n > 1.0 {
        xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Summary { mean, std: var.sqrt() }
}

/// Draws 1-RDMs from the multivariate Gaussian `N(mean, covariance)`.
///
/// The covariance is clipped to be positive semidefinite; draws with a
/// negative eigenvalue are passed through [`fixed_trace_positive_projection`].
/// Draw `k` uses stream `k` of the seeded generator.
pub fn resample_rdms(est: &RDMEstimate, n_resamples: usize, seed: u64) -> Vec<OneRDM> {
    let n = est.mean.n_modes();
    let center = matrix_to_element_vector(est.mean.matrix());
    let (vals, vecs) = linalg::eigh_real(&linalg::symmetrize_real(&est.covariance));
    let m = center.len();
    let factor = RMat::from_fn(m, m, |r, c| vecs[(r, c)] * vals[c].max(0.0).sqrt());
    let eta = est.mean.trace_target();
    (0..n_resamples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let z = nalgebra::DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
            let x = &factor * z;
            let values: Vec<f64> = center.iter().zip(x.iter()).map(|(c, dx)| c + dx).collect();
            let d = OneRDM::from_estimate(element_vector_to_matrix(n, &values), eta)
                .expect("symmetric construction is Hermitian");
            let (lam, _) = d.eigh();
            if lam.iter().any(|&l| l < 0.0) {
                fixed_trace_positive_projection(&d)
            } else {
                d
            }
        })
        .collect()
}

/// Resamples the estimate and summarizes each output of `eval` across the draws.
pub fn resample_with<F>(est: &RDMEstimate, n_resamples: usize, seed: u64, eval: F) -> Result<Vec<Summary>>
where
    F: Fn(&OneRDM) -> Result<Vec<f64>> + Sync,
{
    if n_resamples == 0 {
        return Err(Error::Validation("at least one resample is required".into()));
    }
    let draws = resample_rdms(est, n_resamples, seed);
    let outputs = draws.par_iter().map(&eval).collect::<Result<Vec<_>>>()?;
    let k = outputs[0].len();
    Ok((0..k).map(|i| summarize(outputs.iter().map(move |o| o[i]))).collect())
}

/// Resampled energy and fidelity of an estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorBars {
    pub energy: Summary,
    /// Fidelity of the eigenvalue-rounded draw with the target determinant; rank-deficient draws count as 0.
    pub fidelity: Summary,
}

/// Energy and fidelity error bars from `n_resamples` Gaussian draws around the estimate.
pub fn resample_error_bars(
    est: &RDMEstimate,
    n_resamples: usize,
    ham: &MolecularHamiltonian,
    target: &BasisRotation,
    restricted: bool,
    seed: u64,
) -> Result<ErrorBars> {
    let eta = est.mean.trace_target();
    let s = resample_with(est, n_resamples, seed, |d| {
        let e = energy_from_rdm_unchecked(d, ham, restricted)?;
        let f = fidelity_from_purified(&eigen_round(d), target, eta).unwrap_or(0.0);
        Ok(vec![e, f])
    })?;
    Ok(ErrorBars {
        energy: s[0],
        fidelity: s[1],
    })
}
