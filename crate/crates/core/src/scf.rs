//! Energy functional, orbital gradient and augmented-Hessian optimizer.
//!
//! Two-electron integrals are real and in chemist's notation, `(pq|rs)`,
//! with `H = c + Σ h_pq a†_p a_q + ½ Σ (pq|rs) a†_p a†_r a_s a_q`. In
//! restricted mode the modes are spatial orbitals, each occupied by an α
//! and a β electron with identical orbitals; `η` counts spatial orbitals.

use std::io::Write;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fermion::{
    expm_antihermitian, filled, nonredundant_pairs, propagate_rdm, two_rdm_from_one_rdm, AntiHermitianGenerator,
    BasisRotation, OneRDM,
};
use crate::linalg::{self, CMat, RMat};
use crate::mitigation::Purifier;

const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct MolecularHamiltonian {
    n_modes: usize,
    /// Nuclear repulsion plus any frozen-core energy, Hartree.
    pub constant: f64,
    h: RMat,
    v: Vec<f64>,
}

impl MolecularHamiltonian {
    /// Validates symmetry of `h` and the 8-fold symmetry of `v` (flattened `(pq|rs)`, row-major).
    pub fn new(constant: f64, h: RMat, v: Vec<f64>) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: h.ncols(),
            });
        }
        if v.len() != n.pow(4) {
            return Err(Error::Dimension {
                expected: n.pow(4),
                got: v.len(),
            });
        }
        let ham = Self { n_modes: n, constant, h, v };
        ham.check_symmetry()?;
        Ok(ham)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n_modes: n,
            constant: 0.0,
            h: RMat::zeros(n, n),
            v: vec![0.0; n.pow(4)],
        }
    }

    fn check_symmetry(&self) -> Result<()> {
        let n = self.n_modes;
        for p in 0..n {
            for q in 0..n {
                let diff = (self.h[(p, q)] - self.h[(q, p)]).abs();
                if diff > SYMMETRY_TOL {
                    return Err(Error::Validation(format!(
                        "one-body integrals not symmetric at ({p}, {q}): {diff:e}"
                    )));
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let x = self.v(p, q, r, s);
                        for y in [self.v(q, p, r, s), self.v(p, q, s, r), self.v(r, s, p, q)] {
                            if (x - y).abs() > SYMMETRY_TOL {
                                return Err(Error::Validation(format!(
                                    "two-body integrals break permutation symmetry at ({p}{q}|{r}{s})"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn h(&self) -> &RMat {
        &self.h
    }

    /// `(pq|rs)`
    #[inline]
    pub fn v(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_modes;
        self.v[((p * n + q) * n + r) * n + s]
    }

    pub fn v_flat(&self) -> &[f64] {
        &self.v
    }

    /// Integrals in the orbital basis given by the columns of `c`.
    pub fn rotated(&self, c: &RMat) -> Self {
        let n = self.n_modes;
        let h = c.transpose() * &self.h * c;
        // four quarter transformations, one index at a time
        let mut t = self.v.clone();
        for axis in 0..4 {
            let mut out = vec![0.0; n.pow(4)];
            let stride = n.pow(3 - axis as u32);
            for (idx, &x) in t.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let k = (idx / stride) % n;
                let base = idx - k * stride;
                for new in 0..n {
                    out[base + new * stride] += c[(k, new)] * x;
                }
            }
            t = out;
        }
        Self {
            n_modes: n,
            constant: self.constant,
            h: linalg::symmetrize_real(&h),
            v: t,
        }
    }

    /// Rotation by a real orthogonal [`BasisRotation`].
    pub fn rotated_by(&self, u: &BasisRotation) -> Result<Self> {
        let m = u.matrix();
        if m.iter().any(|z| z.im.abs() > 1e-12) {
            return Err(Error::Unsupported("Hamiltonian rotations must be real".into()));
        }
        Ok(self.rotated(&m.map(|z| z.re)))
    }
}

/// `γ_xy = ⟨a†_x a_y⟩` as a matrix.
fn gamma(d: &OneRDM) -> CMat {
    d.matrix().transpose()
}

/// `⟨M, γ⟩ = Σ M_xy γ_xy`
fn pair(m: &CMat, g: &CMat) -> C64 {
    m.iter().zip(g.iter()).map(|(a, b)| a * b).sum()
}

/// Two-body mean field, `Σ_rs [k (xy|rs) − (xs|ry)] γ_rs` with `k = 2` (restricted) or 1.
fn mean_field(ham: &MolecularHamiltonian, g: &CMat, restricted: bool) -> CMat {
    let n = ham.n_modes;
    let k = if restricted { 2.0 } else { 1.0 };
    let mut f = CMat::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..n {
                for s in 0..n {
                    acc += g[(r, s)] * (k * ham.v(x, y, r, s) - ham.v(x, s, r, y));
                }
            }
            f[(x, y)] = acc;
        }
    }
    f
}

/// Fock matrix `h + G(γ)`.
pub fn fock_matrix(ham: &MolecularHamiltonian, d: &OneRDM, restricted: bool) -> CMat {
    linalg::to_complex(&ham.h) + mean_field(ham, &gamma(d), restricted)
}

/// Energy through the Slater-factorized 2-RDM, checking `tr D = η` within 1e-6.
pub fn energy_from_rdm(d: &OneRDM, ham: &MolecularHamiltonian, spin_restricted: bool) -> Result<f64> {
    let drift = (d.trace() - d.trace_target() as f64).abs();
    if drift > 1e-6 {
        return Err(Error::Validation(format!(
            "1-RDM trace {} differs from particle number {}",
            d.trace(),
            d.trace_target()
        )));
    }
    energy_from_rdm_unchecked(d, ham, spin_restricted)
}

/// [`energy_from_rdm`] without the trace check, for raw or resampled estimates.
pub fn energy_from_rdm_unchecked(d: &OneRDM, ham: &MolecularHamiltonian, spin_restricted: bool) -> Result<f64> {
    let n = ham.n_modes;
    if d.n_modes() != n {
        return Err(Error::Dimension {
            expected: n,
            got: d.n_modes(),
        });
    }
    let (dd, spins) = if spin_restricted {
        (d.spin_expanded(), 2)
    } else {
        (d.clone(), 1)
    };
    let two = two_rdm_from_one_rdm(&dd);
    let mut e = C64::new(ham.constant, 0.0);
    for sp in 0..spins {
        for p in 0..n {
            for q in 0..n {
                e += ham.h[(p, q)] * dd.expectation(p + sp * n, q + sp * n);
            }
        }
    }
    let mut e2 = C64::new(0.0, 0.0);
    for s1 in 0..spins {
        for s2 in 0..spins {
            let (o1, o2) = (s1 * n, s2 * n);
            for p in 0..n {
                for q in 0..n {
                    for r in 0..n {
                        for s in 0..n {
                            let v = ham.v(p, q, r, s);
                            if v != 0.0 {
                                e2 += v * two.get(p + o1, r + o2, s + o2, q + o1);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((e + e2 * 0.5).re)
}

/// Closed-form Slater energy `c + ⟨h + F, γ⟩` (restricted) or `c + ⟨h + ½G, γ⟩`.
#[cfg(test)]
fn mean_field_energy(ham: &MolecularHamiltonian, d: &OneRDM, restricted: bool) -> f64 {
    let g = gamma(d);
    let h = linalg::to_complex(&ham.h);
    let mf = mean_field(ham, &g, restricted);
    let e = if restricted {
        pair(&(h.scale(2.0) + mf), &g)
    } else {
        pair(&(h + mf.scale(0.5)), &g)
    };
    ham.constant + e.re
}

/// `⟨[H, X̂]⟩` for a one-body operator `X̂ = Σ X_pq a†_p a_q`, given the Fock matrix.
fn commutator_expectation(f: &CMat, x: &CMat, g: &CMat, restricted: bool) -> f64 {
    let k = if restricted { 2.0 } else { 1.0 };
    k * pair(&(f * x - x * f), g).re
}

/// Change of `γ` under `e^{εŶ}`: `dγ = γ Yᵀ − Yᵀ γ`.
fn gamma_derivative(g: &CMat, y: &CMat) -> CMat {
    let yt = y.transpose();
    g * &yt - &yt * g
}

/// Eigenvectors of `d`, eigenvalues descending (occupied first), and whether
/// the frame is complex. A real `d` gets a real frame so that the generators
/// below span the same real rotations at every iterate.
fn natural_frame(d: &OneRDM) -> (CMat, bool) {
    let n = d.n_modes();
    let complex = d.matrix().iter().any(|z| z.im.abs() > 1e-12);
    let vecs = if complex {
        d.eigh().1
    } else {
        linalg::to_complex(&linalg::eigh_real(&d.matrix().map(|z| z.re)).1)
    };
    (CMat::from_fn(n, n, |r, c| vecs[(r, n - 1 - c)]), complex)
}

/// Generators `w_b w_i† − w_i w_b†` over the non-redundant pairs of the frame `w`,
/// followed by `i(w_b w_i† + w_i w_b†)` when `complex`.
fn frame_generators(w: &CMat, eta: usize, complex: bool) -> Vec<CMat> {
    let n = w.nrows();
    let pairs = nonredundant_pairs(n, eta);
    let mut xs: Vec<CMat> = pairs
        .iter()
        .map(|&(b, i)| {
            let (wb, wi) = (w.column(b), w.column(i));
            wb * wi.adjoint() - wi * wb.adjoint()
        })
        .collect();
    if complex {
        xs.extend(pairs.iter().map(|&(b, i)| {
            let (wb, wi) = (w.column(b), w.column(i));
            (wb * wi.adjoint() + wi * wb.adjoint()) * C64::new(0.0, 1.0)
        }));
    }
    xs
}

/// Gradient `A` and raw Hessian `B` over the generators `xs` at `d`.
pub fn gradient_and_hessian(
    d: &OneRDM,
    ham: &MolecularHamiltonian,
    xs: &[CMat],
    restricted: bool,
) -> (Vec<f64>, RMat) {
    let g = gamma(d);
    let f = fock_matrix(ham, d, restricted);
    let a: Vec<f64> = xs.iter().map(|x| commutator_expectation(&f, x, &g, restricted)).collect();
    let m = xs.len();
    let mut b = RMat::zeros(m, m);
    for (l, y) in xs.iter().enumerate() {
        let dg = gamma_derivative(&g, y);
        let dmf = mean_field(ham, &dg, restricted);
        for (k, x) in xs.iter().enumerate() {
            b[(k, l)] = commutator_expectation(&dmf, x, &g, restricted)
                + commutator_expectation(&f, x, &dg, restricted);
        }
    }
    (a, b)
}

/// `dE/dc_{b,i}` at `κ = Σ c_{b,i} (E_bi − E_ib)`, starting from the `η`-filled reference.
pub fn analytic_gradient(
    kappa: &AntiHermitianGenerator,
    ham: &MolecularHamiltonian,
    eta: usize,
    restricted: bool,
) -> Result<Vec<f64>> {
    let n = ham.n_modes;
    if kappa.n_modes() != n {
        return Err(Error::Dimension {
            expected: n,
            got: kappa.n_modes(),
        });
    }
    let u = expm_antihermitian(kappa);
    let d = propagate_rdm(&u, &filled(n, eta))?;
    let g = gamma(&d);
    let f = fock_matrix(ham, &d, restricted);

    // iκ = W diag(λ) W†, so κ has eigenvalues μ = −iλ
    let ik = linalg::hermitize(&(kappa.kappa() * linalg::I));
    let (lam, w) = linalg::eigh(&ik);
    let wd = w.adjoint();
    let factor = |k: usize, l: usize| {
        let delta = lam[k] - lam[l];
        if delta.abs() < 1e-12 {
            C64::new(1.0, 0.0)
        } else {
            let mu = C64::new(0.0, -delta);
            (mu.exp() - 1.0) / mu
        }
    };

    let mut grad = Vec::with_capacity(eta * (n - eta));
    for (b, i) in nonredundant_pairs(n, eta) {
        let mut e = CMat::zeros(n, n);
        e[(b, i)] = C64::new(1.0, 0.0);
        e[(i, b)] = C64::new(-1.0, 0.0);
        let y = &wd * e * &w;
        let m = CMat::from_fn(n, n, |k, l| y[(k, l)] * factor(k, l));
        let gen = &w * m * &wd;
        grad.push(commutator_expectation(&f, &gen, &g, restricted));
    }
    Ok(grad)
}

/// Result of one augmented-Hessian solve.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerStep {
    /// `A` over the non-redundant pairs of the natural-orbital frame.
    pub gradient: Vec<f64>,
    /// `B` as computed (not symmetrized).
    pub hessian: RMat,
    pub level_shift: f64,
    /// Update coefficients after capping.
    pub update: Vec<f64>,
    pub gamma: f64,
    /// True when the update was rescaled to `max|f| = γ`.
    pub rescaled: bool,
    /// One-body generator `F = Σ f_k X_k`.
    pub generator: CMat,
}

impl OptimizerStep {
    pub fn gradient_norm(&self) -> f64 {
        self.gradient.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn step_norm(&self) -> f64 {
        self.update.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Applies the update to a rotation: `e^F u`.
    pub fn apply(&self, u: &BasisRotation) -> Result<BasisRotation> {
        let g = AntiHermitianGenerator::new(linalg::hermitize(&(&self.generator * linalg::I)) * -linalg::I)?;
        crate::fermion::concat_rotations(&expm_antihermitian(&g), u)
    }
}

/// Lowest eigenpair of `[[0, Aᵀ], [A, B]]` normalized to leading component 1.
///
/// When that eigenvector is orthogonal to the reference, the point is a saddle
/// whose downhill direction carries no gradient; the direction itself is then
/// returned with `max|f| = γ` and its largest component positive.
pub fn solve_bordered(a: &[f64], b: &RMat, gamma: f64) -> Result<(f64, Vec<f64>)> {
    let m = a.len();
    if a.iter().all(|&x| x == 0.0) {
        return Ok((0.0, vec![0.0; m]));
    }
    let bs = linalg::symmetrize_real(b);
    let mut aug = RMat::zeros(m + 1, m + 1);
    for k in 0..m {
        aug[(0, k + 1)] = a[k];
        aug[(k + 1, 0)] = a[k];
        for l in 0..m {
            aug[(k + 1, l + 1)] = bs[(k, l)];
        }
    }
    let (vals, vecs) = linalg::eigh_real(&aug);
    if !vals[0].is_finite() {
        return Err(Error::Numerical("augmented Hessian has a non-finite eigenvalue".into()));
    }
    let lead = vecs[(0, 0)];
    if lead.abs() < 1e-8 {
        let dir: Vec<f64> = (1..=m).map(|k| vecs[(k, 0)]).collect();
        let big = dir.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        return Ok((vals[0], dir.iter().map(|x| x * gamma / big).collect()));
    }
    Ok((vals[0], (1..=m).map(|k| vecs[(k, 0)] / lead).collect()))
}

/// Rescales `f` so that `max|f| = γ` when it reaches `γ`; returns whether it did.
pub fn cap_update(f: &mut [f64], gamma: f64) -> bool {
    let big = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if big >= gamma && big > 0.0 {
        let s = gamma / big;
        f.iter_mut().for_each(|x| *x *= s);
        true
    } else {
        false
    }
}

/// Level-shifted Newton step from a near-Slater 1-RDM (idempotency score < 0.05).
pub fn augmented_hessian_step(
    d: &OneRDM,
    ham: &MolecularHamiltonian,
    eta: usize,
    gamma: f64,
    restricted: bool,
) -> Result<OptimizerStep> {
    let score = d.idempotency_score();
    if score >= 0.05 {
        return Err(Error::Validation(format!(
            "augmented Hessian step needs a near-Slater 1-RDM; idempotency score is {score:.4}"
        )));
    }
    if d.n_modes() != ham.n_modes {
        return Err(Error::Dimension {
            expected: ham.n_modes,
            got: d.n_modes(),
        });
    }
    let (w, complex) = natural_frame(d);
    let xs = frame_generators(&w, eta, complex);
    let (a, b) = gradient_and_hessian(d, ham, &xs, restricted);
    let (level_shift, mut f) = solve_bordered(&a, &b, gamma)?;
    let rescaled = cap_update(&mut f, gamma);
    let n = ham.n_modes;
    let mut generator = CMat::zeros(n, n);
    for (x, &c) in xs.iter().zip(&f) {
        generator += x * C64::new(c, 0.0);
    }
    Ok(OptimizerStep {
        gradient: a,
        hessian: b,
        level_shift,
        update: f,
        gamma,
        rescaled,
        generator,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VqeOptions {
    pub max_iter: usize,
    pub gamma: f64,
    pub grad_tol: f64,
    pub restricted: bool,
}

impl Default for VqeOptions {
    fn default() -> Self {
        Self {
            max_iter: 30,
            gamma: 0.1,
            grad_tol: 1e-6,
            restricted: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: f64,
    pub grad_norm: f64,
    /// Norm of the update taken after this evaluation (0 for the final row).
    pub step_norm: f64,
    pub purified: bool,
    /// True when the update was capped by `γ`.
    pub rescaled: bool,
    /// Circuit rotation evaluated at this iteration.
    pub rotation: BasisRotation,
}

#[derive(Clone, Debug)]
pub struct VqeResult {
    pub trace: Vec<TraceRow>,
    /// Index into `trace` of the lowest energy.
    pub best: usize,
    pub converged: bool,
}

impl VqeResult {
    pub fn best_row(&self) -> &TraceRow {
        &self.trace[self.best]
    }

    pub fn best_energy(&self) -> f64 {
        self.best_row().energy
    }
}

/// Partial trace left by a failed optimization.
#[derive(Debug)]
pub struct VqeFailure {
    pub trace: Vec<TraceRow>,
    pub error: Error,
}

impl From<VqeFailure> for Error {
    fn from(f: VqeFailure) -> Self {
        f.error
    }
}

/// Writes `iteration,energy_hartree,grad_norm,step_norm,purified` rows.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["iteration", "energy_hartree", "grad_norm", "step_norm", "purified"])?;
    for r in rows {
        wr.write_record([
            r.iteration.to_string(),
            r.energy.to_string(),
            r.grad_norm.to_string(),
            r.step_norm.to_string(),
            r.purified.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Augmented-Hessian optimization of the circuit rotation.
///
/// Each iteration asks `rdm_source` for a 1-RDM of the state prepared by the
/// current rotation, optionally purifies it, records the energy and takes a
/// step. Updates are folded into the rotation, so circuit depth stays fixed.
/// Stops when the gradient norm drops below `grad_tol` or after `max_iter`
/// steps, and reports the lowest-energy iterate.
pub fn vqe_optimize<F>(
    ham: &MolecularHamiltonian,
    eta: usize,
    initial_kappa: &AntiHermitianGenerator,
    opts: &VqeOptions,
    purifier: Option<&dyn Purifier>,
    mut rdm_source: F,
) -> std::result::Result<VqeResult, VqeFailure>
where
    F: FnMut(&BasisRotation) -> Result<OneRDM>,
{
    let mut trace: Vec<TraceRow> = Vec::new();
    let fail = |trace: Vec<TraceRow>, iteration: usize, e: Error| VqeFailure {
        trace,
        error: Error::AtIteration {
            iteration,
            source: Box::new(e),
        },
    };
    if initial_kappa.n_modes() != ham.n_modes {
        let e = Error::Dimension {
            expected: ham.n_modes,
            got: initial_kappa.n_modes(),
        };
        return Err(fail(trace, 0, e));
    }
    let mut u = expm_antihermitian(initial_kappa);
    let mut converged = false;
    for it in 0..=opts.max_iter {
        let eval = (|| {
            let raw = rdm_source(&u)?;
            let d = match purifier {
                Some(p) => p.purify(&raw)?,
                None => raw,
            };
            let energy = energy_from_rdm_unchecked(&d, ham, opts.restricted)?;
            let step = augmented_hessian_step(&d, ham, eta, opts.gamma, opts.restricted)?;
            Ok::<_, Error>((energy, step))
        })();
        let (energy, step) = match eval {
            Ok(x) => x,
            Err(e) => return Err(fail(trace, it, e)),
        };
        let grad_norm = step.gradient_norm();
        let done = grad_norm < opts.grad_tol;
        let last = done || it == opts.max_iter;
        trace.push(TraceRow {
            iteration: it,
            energy,
            grad_norm,
            step_norm: if last { 0.0 } else { step.step_norm() },
            purified: purifier.is_some_and(|p| p.modifies()),
            rescaled: !last && step.rescaled,
            rotation: u.clone(),
        });
        if done {
            converged = true;
            break;
        }
        if last {
            break;
        }
        u = match step.apply(&u) {
            Ok(x) => x,
            Err(e) => return Err(fail(trace, it, e)),
        };
    }
    let best = trace
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.energy.total_cmp(&b.1.energy))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(VqeResult { trace, best, converged })
}

/// Classical restricted Hartree-Fock by exact-propagation optimization from the `η`-filled reference.
pub fn solve_rhf(ham: &MolecularHamiltonian, eta: usize, opts: &VqeOptions) -> Result<VqeResult> {
    let occ = filled(ham.n_modes, eta);
    Ok(vqe_optimize(
        ham,
        eta,
        &AntiHermitianGenerator::zeros(ham.n_modes),
        opts,
        None,
        |u| propagate_rdm(u, &occ),
    )?)
}
