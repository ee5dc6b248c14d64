//! The full experiment on one molecule: prepare the Hartree-Fock state on the
//! emulated device, estimate its 1-RDM, mitigate errors and relax the orbitals.
//!
//! Every mode is scored against the classically converged RHF determinant:
//! energy error, fidelity witness of the reported 1-RDM, and (for idempotent
//! results) the exact determinant fidelity.

use rayon::prelude::*;

use crate::compile::givens_decompose;
use crate::emulator::{noisy_rdm_analytic, NoiseModel};
use crate::error::{Context, Error, Result};
use crate::estimation::{resample_error_bars, resample_with, RDMEstimate};
use crate::fermion::{concat_rotations, filled, AntiHermitianGenerator, BasisRotation, OneRDM};
use crate::ham_io::{core_orbital_basis, hydrogen_chain, hydrogen_sto3g_integrals};
use crate::mitigation::{fidelity_from_purified, fidelity_witness, Purifier};
use crate::registry::{self, Emulated, SourceConfig};
use crate::scf::{energy_from_rdm_unchecked, solve_rhf, vqe_optimize, MolecularHamiltonian, TraceRow, VqeOptions};

/// Successive stages of error mitigation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Raw,
    PostSelected,
    Purified,
    Vqe,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Raw, Mode::PostSelected, Mode::Purified, Mode::Vqe];

    pub fn label(self) -> &'static str {
        match self {
            Mode::Raw => "raw",
            Mode::PostSelected => "ps",
            Mode::Purified => "pure",
            Mode::Vqe => "vqe",
        }
    }

    pub fn parse(s: &str) -> Result<Mode> {
        Mode::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::Validation(format!("unknown mode '{s}'; expected raw, ps, pure or vqe")))
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub noise: NoiseModel,
    pub shots: u64,
    /// Shots per noise realization; `None` uses the emulator default.
    pub batch: Option<u64>,
    pub seed: u64,
    pub modes: Vec<Mode>,
    /// Registry name of the purifier used by `pure` and `vqe`.
    pub purifier: String,
    /// Registry name of the covariance model used for error bars.
    pub covariance: String,
    /// Gaussian resamples per error bar; 0 skips error bars.
    pub resamples: usize,
    pub vqe: VqeOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            noise: NoiseModel::default(),
            shots: 250_000,
            batch: None,
            seed: 0,
            modes: Mode::ALL.to_vec(),
            purifier: "mcweeny".into(),
            covariance: "gaussian-state".into(),
            resamples: 1000,
            vqe: VqeOptions {
                max_iter: 10,
                ..VqeOptions::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeResult {
    pub mode: Mode,
    pub energy: f64,
    /// `energy − E_RHF`.
    pub error: f64,
    pub energy_std: Option<f64>,
    pub witness: f64,
    /// Determinant fidelity; only defined for idempotent 1-RDMs.
    pub fidelity: Option<f64>,
    pub retained_fraction: f64,
    /// Iteration of the reported VQE row; 0 for the static modes.
    pub iteration: usize,
}

#[derive(Clone, Debug)]
pub struct PointReport {
    pub reference_energy: f64,
    pub reference_converged: bool,
    /// Converged RHF rotation in the core-orbital basis.
    pub target: BasisRotation,
    pub results: Vec<ModeResult>,
    pub vqe_trace: Option<Vec<TraceRow>>,
}

impl PointReport {
    pub fn result(&self, mode: Mode) -> Option<&ModeResult> {
        self.results.iter().find(|r| r.mode == mode)
    }
}

/// Core-orbital Hamiltonian of a hydrogen chain.
pub fn chain_hamiltonian(n_atoms: usize, spacing: f64) -> Result<MolecularHamiltonian> {
    let ao = hydrogen_sto3g_integrals(&hydrogen_chain(n_atoms, spacing))?;
    Ok(core_orbital_basis(&ao)?.1)
}

/// Classical RHF by exact propagation: `(rotation, energy, converged)`.
pub fn hartree_fock_reference(ham: &MolecularHamiltonian, eta: usize) -> Result<(BasisRotation, f64, bool)> {
    let opts = VqeOptions {
        max_iter: 100,
        ..VqeOptions::default()
    };
    let res = solve_rhf(ham, eta, &opts)?;
    let best = res.best_row();
    Ok((best.rotation.clone(), best.energy, res.converged))
}

fn stream_seed(seed: u64, k: u64) -> u64 {
    seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

struct Scorer<'a> {
    ham: &'a MolecularHamiltonian,
    target: &'a BasisRotation,
    omega: Vec<bool>,
    eta: usize,
    reference: f64,
}

impl Scorer<'_> {
    fn score(&self, mode: Mode, d: &OneRDM, idempotent: bool, retained: f64) -> Result<ModeResult> {
        let energy = energy_from_rdm_unchecked(d, self.ham, true)?;
        Ok(ModeResult {
            mode,
            energy,
            error: energy - self.reference,
            energy_std: None,
            witness: fidelity_witness(d, self.target, &self.omega)?,
            fidelity: if idempotent {
                fidelity_from_purified(d, self.target, self.eta).ok()
            } else {
                None
            },
            retained_fraction: retained,
            iteration: 0,
        })
    }
}

/// Runs the requested modes for one Hamiltonian in the core-orbital basis with `eta` doubly occupied orbitals.
pub fn run_point(ham: &MolecularHamiltonian, eta: usize, opts: &PipelineOptions) -> Result<PointReport> {
    let n = ham.n_modes();
    let (target, reference, reference_converged) = hartree_fock_reference(ham, eta).context(|| "classical RHF".into())?;
    let purifier = registry::purifier(&opts.purifier)?;
    let covariance = registry::covariance_model(&opts.covariance)?;
    let source = Emulated {
        config: SourceConfig {
            noise: opts.noise,
            shots: opts.shots,
            batch: opts.batch,
            post_select: true,
        },
    };
    let scorer = Scorer {
        ham,
        target: &target,
        omega: filled(n, eta),
        eta,
        reference,
    };
    let error_bars = |est: &RDMEstimate, seed: u64| -> Result<Option<f64>> {
        if opts.resamples == 0 {
            return Ok(None);
        }
        Ok(Some(resample_error_bars(est, opts.resamples, ham, &target, true, seed)?.energy.std))
    };

    let (plan, tables) = source.sample(&target, eta, opts.seed).context(|| "sampling".into())?;
    let mut results = Vec::new();
    let mut vqe_trace = None;

    if opts.modes.contains(&Mode::Raw) {
        let est = covariance.assemble(&plan, &tables, false)?;
        let mut r = scorer.score(Mode::Raw, &est.mean, false, 1.0)?;
        r.energy_std = error_bars(&est, opts.seed)?;
        results.push(r);
    }
    let needs_ps = opts
        .modes
        .iter()
        .any(|m| matches!(m, Mode::PostSelected | Mode::Purified | Mode::Vqe));
    if !needs_ps {
        return Ok(PointReport {
            reference_energy: reference,
            reference_converged,
            target,
            results,
            vqe_trace,
        });
    }
    let ps = covariance.assemble(&plan, &tables, true)?;
    let retained = ps.mean_retained_fraction();
    if opts.modes.contains(&Mode::PostSelected) {
        let mut r = scorer.score(Mode::PostSelected, &ps.mean, false, retained)?;
        r.energy_std = error_bars(&ps, opts.seed)?;
        results.push(r);
    }
    if opts.modes.contains(&Mode::Purified) {
        let pure = purifier.purify(&ps.mean).context(|| "purification".into())?;
        let mut r = scorer.score(Mode::Purified, &pure, purifier.modifies(), retained)?;
        if opts.resamples > 0 {
            let p = purifier.as_ref();
            r.energy_std = resample_with(&ps, opts.resamples, opts.seed, |d| {
                Ok(vec![energy_from_rdm_unchecked(&p.purify(d)?, ham, true)?])
            })
            .ok()
            .map(|s| s[0].std);
        }
        results.push(r);
    }
    if opts.modes.contains(&Mode::Vqe) {
        let (r, trace) = run_vqe(opts, &source, purifier.as_ref(), (ps.mean.clone(), retained), &scorer)?;
        results.push(r);
        vqe_trace = Some(trace);
    }
    Ok(PointReport {
        reference_energy: reference,
        reference_converged,
        target,
        results,
        vqe_trace,
    })
}

/// Relaxes the orbitals on emulated data, starting from the RHF rotation.
///
/// The first evaluation reuses the static post-selected estimate. The reported
/// row is the lowest purified energy of the trace; purified 1-RDMs are
/// idempotent, so each row is a variational upper bound on the RHF energy.
fn run_vqe(
    opts: &PipelineOptions,
    source: &Emulated,
    purifier: &dyn Purifier,
    first: (OneRDM, f64),
    scorer: &Scorer,
) -> Result<(ModeResult, Vec<TraceRow>)> {
    let (ham, eta, target) = (scorer.ham, scorer.eta, scorer.target);
    let n = ham.n_modes();
    let mut measured: Vec<(OneRDM, f64)> = Vec::new();
    let mut first = Some(first);
    let res = vqe_optimize(ham, eta, &AntiHermitianGenerator::zeros(n), &opts.vqe, Some(purifier), |v| {
        let (d, retained) = match first.take() {
            Some(x) => x,
            None => {
                let total = concat_rotations(v, target)?;
                let seed = stream_seed(opts.seed, measured.len() as u64);
                let (plan, tables) = source.sample(&total, eta, seed)?;
                let est = crate::estimation::assemble_rdm(&plan, &tables, true)?;
                let retained = est.mean_retained_fraction();
                (est.mean, retained)
            }
        };
        measured.push((d.clone(), retained));
        Ok(d)
    })
    .map_err(Error::from)
    .context(|| "VQE".into())?;
    let best = res.best_row();
    let pure = purifier.purify(&measured[res.best].0)?;
    let mut r = scorer.score(Mode::Vqe, &pure, purifier.modifies(), measured[res.best].1)?;
    r.energy = best.energy;
    r.error = best.energy - scorer.reference;
    r.iteration = best.iteration;
    Ok((r, res.trace))
}

/// One row of a noise sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub phi: f64,
    pub sigma: f64,
    pub corrected: bool,
    pub fidelity: f64,
    pub energy_error: f64,
    pub witness: f64,
}

/// How a sweep point is evaluated.
#[derive(Clone, Copy, Debug)]
pub enum SweepBackend {
    /// Closed-form stochastic-Rz channel; requires `φ = 0`.
    Analytic,
    Emulated { shots: u64, batch: Option<u64>, seed: u64 },
}

/// Purified fidelity and energy error of the RHF state under each noise model.
pub fn noise_sweep(
    ham: &MolecularHamiltonian,
    eta: usize,
    points: &[NoiseModel],
    backend: SweepBackend,
    purifier_name: &str,
) -> Result<Vec<SweepRow>> {
    let n = ham.n_modes();
    let (target, reference, _) = hartree_fock_reference(ham, eta)?;
    let purifier = registry::purifier(purifier_name)?;
    let omega = filled(n, eta);
    points
        .par_iter()
        .enumerate()
        .map(|(k, nm)| {
            let d = match backend {
                SweepBackend::Analytic => {
                    if nm.parasitic_cphase_angle != 0.0 {
                        return Err(Error::Unsupported(
                            "the analytic channel models stochastic Rz only; set the cphase angle to 0".into(),
                        ));
                    }
                    noisy_rdm_analytic(&givens_decompose(&target, eta)?, nm.rz_sigma)?
                }
                SweepBackend::Emulated { shots, batch, seed } => {
                    let src = Emulated {
                        config: SourceConfig {
                            noise: *nm,
                            shots,
                            batch,
                            post_select: true,
                        },
                    };
                    registry::RdmSource::rdm(&src, &target, eta, stream_seed(seed, k as u64))?
                }
            };
            let pure = purifier.purify(&d).context(|| format!("sweep point {k}"))?;
            Ok(SweepRow {
                phi: nm.parasitic_cphase_angle,
                sigma: nm.rz_sigma,
                corrected: nm.rz_correction_enabled,
                fidelity: fidelity_from_purified(&pure, &target, eta).unwrap_or(0.0),
                energy_error: energy_from_rdm_unchecked(&pure, ham, true)? - reference,
                witness: fidelity_witness(&pure, &target, &omega)?,
            })
        })
        .collect()
}

/// Runs [`run_point`] for every spacing of an `n_atoms` hydrogen chain at half filling.
///
/// Points run in parallel; results keep the order of `spacings`.
pub fn run_curve(n_atoms: usize, spacings: &[f64], opts: &PipelineOptions) -> Result<Vec<(f64, PointReport)>> {
    if !n_atoms.is_multiple_of(2) {
        return Err(Error::Unsupported(format!(
            "closed-shell chains need an even atom count, got {n_atoms}"
        )));
    }
    spacings
        .par_iter()
        .map(|&s| {
            let ham = chain_hamiltonian(n_atoms, s).context(|| format!("spacing {s}"))?;
            let report = run_point(&ham, n_atoms / 2, opts).context(|| format!("spacing {s}"))?;
            Ok((s, report))
        })
        .collect()
}

/// Bond lengths (Å) of the hydrogen-chain curves.
pub const DEFAULT_SPACINGS: [f64; 6] = [0.5, 0.9, 1.3, 1.7, 2.1, 2.5];
