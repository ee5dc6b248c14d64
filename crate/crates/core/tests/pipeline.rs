mod common;

use common::{random_rotation, rng};
use hfsim::emulator::NoiseModel;
use hfsim::fermion::{filled, propagate_rdm};
use hfsim::linalg;
use hfsim::pipeline::*;
use hfsim::registry::{self, SourceConfig};
use hfsim::scf::VqeOptions;
use hfsim::Error;

fn quick(noise: NoiseModel, seed: u64) -> PipelineOptions {
    PipelineOptions {
        noise,
        shots: 50_000,
        batch: Some(1000),
        seed,
        resamples: 50,
        vqe: VqeOptions {
            max_iter: 3,
            ..VqeOptions::default()
        },
        ..PipelineOptions::default()
    }
}

#[test]
fn mode_labels_round_trip() {
    for m in Mode::ALL {
        assert_eq!(Mode::parse(m.label()).unwrap(), m);
    }
    let err = Mode::parse("best").unwrap_err();
    assert!(err.is_validation());
}

#[test]
fn registry_lookups() {
    let cfg = SourceConfig::default();
    let u = random_rotation(4, &mut rng(51));
    let exact = registry::rdm_source("exact", &cfg).unwrap().rdm(&u, 2, 0).unwrap();
    let direct = propagate_rdm(&u, &filled(4, 2)).unwrap();
    assert_eq!(exact.matrix(), direct.matrix());
    let analytic = registry::rdm_source("analytic-rz", &cfg).unwrap().rdm(&u, 2, 0).unwrap();
    assert!(linalg::max_abs(&(analytic.matrix() - direct.matrix())) < 1e-12);
    let sampled = registry::rdm_source("emulated", &cfg).unwrap().rdm(&u, 2, 3).unwrap();
    assert!(linalg::max_abs(&(sampled.matrix() - direct.matrix())) < 0.02);
    let err = registry::rdm_source("hardware", &cfg).err().unwrap();
    assert!(err.is_validation() && err.to_string().contains("emulated"));
    assert!(registry::covariance_model("bootstrap").is_err());
}

#[test]
fn noiseless_point_recovers_reference() {
    let ham = chain_hamiltonian(4, 1.0).unwrap();
    let report = run_point(&ham, 2, &quick(NoiseModel::noiseless(), 1)).unwrap();
    assert!(report.reference_converged);
    assert_eq!(report.results.len(), 4);
    for m in Mode::ALL {
        let r = report.result(m).unwrap();
        assert!(r.error.abs() < 0.01, "{}: {}", m.label(), r.error);
        assert!(r.witness > 0.95, "{}: {}", m.label(), r.witness);
        assert!(r.energy_std.is_some() || m == Mode::Vqe);
    }
    let pure = report.result(Mode::Purified).unwrap();
    assert!(pure.fidelity.unwrap() > 0.99);
    // purified 1-RDMs are determinants, so their energy is bounded below by RHF
    assert!(pure.error > -1e-9);
    assert!(report.result(Mode::Vqe).unwrap().error > -1e-9);
    assert_eq!(report.result(Mode::Raw).unwrap().retained_fraction, 1.0);
}

#[test]
fn points_are_seed_deterministic() {
    let ham = chain_hamiltonian(4, 1.3).unwrap();
    let nm = NoiseModel {
        rz_sigma: 0.05,
        readout_p01: 0.03,
        readout_p10: 0.03,
        ..NoiseModel::default()
    };
    let a = run_point(&ham, 2, &quick(nm, 7)).unwrap();
    let b = run_point(&ham, 2, &quick(nm, 7)).unwrap();
    let c = run_point(&ham, 2, &quick(nm, 8)).unwrap();
    assert_eq!(a.results, b.results);
    assert_ne!(a.results, c.results);
    let raw = a.result(Mode::Raw).unwrap();
    let ps = a.result(Mode::PostSelected).unwrap();
    assert!(ps.retained_fraction < 1.0);
    assert!(raw.error.abs() > ps.error.abs());
}

#[test]
fn mode_subset_and_single_point_vqe() {
    let ham = chain_hamiltonian(4, 1.0).unwrap();
    let mut opts = quick(NoiseModel::default(), 2);
    opts.modes = vec![Mode::Raw];
    let report = run_point(&ham, 2, &opts).unwrap();
    assert_eq!(report.results.len(), 1);
    assert!(report.vqe_trace.is_none());

    opts.modes = vec![Mode::Purified, Mode::Vqe];
    opts.vqe.max_iter = 0;
    let report = run_point(&ham, 2, &opts).unwrap();
    assert_eq!(report.vqe_trace.as_ref().unwrap().len(), 1);
    let (pure, vqe) = (report.result(Mode::Purified).unwrap(), report.result(Mode::Vqe).unwrap());
    assert_eq!(vqe.iteration, 0);
    assert!((pure.energy - vqe.energy).abs() < 1e-12);
}

#[test]
fn curve_order_and_validation() {
    let spacings = [1.6, 0.8];
    let mut opts = quick(NoiseModel::noiseless(), 3);
    opts.modes = vec![Mode::PostSelected];
    opts.resamples = 0;
    let curve = run_curve(4, &spacings, &opts).unwrap();
    assert_eq!(curve.iter().map(|(s, _)| *s).collect::<Vec<_>>(), spacings);
    assert!(curve[0].1.result(Mode::PostSelected).unwrap().energy_std.is_none());
    assert!(matches!(run_curve(5, &spacings, &opts), Err(Error::Unsupported(_))));

    opts.shots = 0;
    let err = run_curve(4, &[1.0], &opts).unwrap_err();
    assert!(err.is_validation());
    assert!(err.to_string().contains("spacing 1"), "{err}");
}

#[test]
fn analytic_sweep() {
    let ham = chain_hamiltonian(6, 1.3).unwrap();
    let points: Vec<NoiseModel> = [0.0, 0.1, 0.22, 0.3]
        .iter()
        .map(|&s| NoiseModel {
            rz_sigma: s,
            ..NoiseModel::noiseless()
        })
        .collect();
    let rows = noise_sweep(&ham, 3, &points, SweepBackend::Analytic, "mcweeny").unwrap();
    assert!((rows[0].fidelity - 1.0).abs() < 1e-10);
    assert!(rows[0].energy_error.abs() < 1e-9);
    assert!(rows.windows(2).all(|w| w[1].fidelity < w[0].fidelity));
    let with_phase = [NoiseModel::default()];
    assert!(matches!(
        noise_sweep(&ham, 3, &with_phase, SweepBackend::Analytic, "mcweeny"),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn emulated_sweep_correction_helps() {
    let ham = chain_hamiltonian(6, 1.3).unwrap();
    let phi = std::f64::consts::PI / 12.0;
    let points = [
        NoiseModel {
            parasitic_cphase_angle: phi,
            ..NoiseModel::noiseless()
        },
        NoiseModel {
            parasitic_cphase_angle: phi,
            rz_correction_enabled: true,
            ..NoiseModel::noiseless()
        },
    ];
    let backend = SweepBackend::Emulated {
        shots: 200_000,
        batch: None,
        seed: 4,
    };
    let rows = noise_sweep(&ham, 3, &points, backend, "mcweeny").unwrap();
    assert!(rows[1].corrected && !rows[0].corrected);
    assert!(rows[1].fidelity > rows[0].fidelity, "{:?}", rows);
}
