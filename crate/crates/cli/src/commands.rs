use std::fs;
use std::io::Write;

use hfsim::compile::{build_measurement_plan, compile_to_native, givens_decompose};
use hfsim::emulator::NoiseModel;
use hfsim::error::Context;
use hfsim::fermion::{AntiHermitianGenerator, BasisRotation};
use hfsim::pipeline::{
    chain_hamiltonian, hartree_fock_reference, noise_sweep, run_curve, Mode, PipelineOptions, SweepBackend,
};
use hfsim::registry::{self, SourceConfig};
use hfsim::scf::{vqe_optimize, write_trace_csv, VqeOptions};
use hfsim::{Error, Result};

use crate::args::*;
use crate::input::{load_hamiltonian, output, parse_chain, schema_line};
use crate::plot::render_curve;

pub const COMPILE_SCHEMA: &str = "compile/1";
pub const CURVE_SCHEMA: &str = "curve/1";
pub const VQE_SCHEMA: &str = "vqe-trace/1";
pub const PROBE_SCHEMA: &str = "probe/1";

fn noise_model(args: &NoiseArgs) -> Result<NoiseModel> {
    let mut nm = match args.noise {
        NoisePreset::Default => NoiseModel::default(),
        NoisePreset::Noiseless => NoiseModel::noiseless(),
    };
    if let Some(phi) = args.cphase {
        nm.parasitic_cphase_angle = phi;
    }
    if let Some(s) = args.rz_sigma {
        nm.rz_sigma = s;
    }
    if let Some(p) = args.readout_p01 {
        nm.readout_p01 = p;
    }
    if let Some(p) = args.readout_p10 {
        nm.readout_p10 = p;
    }
    nm.rz_correction_enabled = args.rz_correction;
    nm.validate()?;
    Ok(nm)
}

fn check_sampling(s: &SamplingArgs) -> Result<()> {
    if s.shots == 0 {
        return Err(Error::Validation("--shots must be positive".into()));
    }
    if s.batch == Some(0) {
        return Err(Error::Validation("--batch must be positive".into()));
    }
    Ok(())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn compile(args: &CompileArgs) -> Result<()> {
    let (ham, eta) = load_hamiltonian(&args.ham)?;
    let n = ham.n_modes();
    let u = match args.rotation {
        RotationChoice::Rhf => hartree_fock_reference(&ham, eta)?.0,
        RotationChoice::Identity => BasisRotation::identity(n),
    };
    let net = givens_decompose(&u, eta)?;
    let circuit = compile_to_native(&net);
    if let Some(path) = &args.out {
        fs::write(path, circuit.to_text())
            .map_err(Error::from)
            .context(|| path.display().to_string())?;
    }
    let counts = circuit.counts();
    // odd mode counts have no measurement plan; the column is left empty
    let settings = build_measurement_plan(&u, eta, true).ok().map(|p| p.settings.len());

    let mut w = output(args.report.as_deref())?;
    schema_line(&mut w, COMPILE_SCHEMA)?;
    let mut wr = csv::Writer::from_writer(&mut w);
    wr.write_record([
        "n_qubits",
        "n_particles",
        "givens",
        "givens_depth",
        "sqrt_iswap",
        "rz",
        "measurement_settings",
    ])?;
    wr.write_record([
        n.to_string(),
        eta.to_string(),
        net.gate_count().to_string(),
        net.depth().to_string(),
        counts.sqrt_iswap.to_string(),
        counts.rz.to_string(),
        opt(settings),
    ])?;
    wr.flush()?;
    drop(wr);
    w.flush()?;
    Ok(())
}

pub fn curve(args: &CurveArgs) -> Result<()> {
    let n_atoms = parse_chain(&args.chain)?;
    check_sampling(&args.sampling)?;
    if args.spacings.is_empty() {
        return Err(Error::Validation("--spacings is empty".into()));
    }
    let modes = args.modes.iter().map(|m| Mode::parse(m.trim())).collect::<Result<Vec<_>>>()?;
    let opts = PipelineOptions {
        noise: noise_model(&args.noise)?,
        shots: args.sampling.shots,
        batch: args.sampling.batch,
        seed: args.sampling.seed,
        modes: modes.clone(),
        purifier: args.purifier.clone(),
        covariance: args.covariance.clone(),
        resamples: args.resamples,
        vqe: VqeOptions {
            max_iter: args.vqe_iters,
            ..VqeOptions::default()
        },
    };
    let curve = run_curve(n_atoms, &args.spacings, &opts)?;

    let mut w = output(args.out.as_deref())?;
    schema_line(&mut w, CURVE_SCHEMA)?;
    let mut wr = csv::Writer::from_writer(&mut w);
    wr.write_record([
        "spacing_angstrom",
        "mode",
        "energy_hartree",
        "reference_hartree",
        "error_hartree",
        "energy_std_hartree",
        "witness",
        "fidelity",
        "retained_fraction",
        "vqe_iteration",
    ])?;
    for (spacing, report) in &curve {
        for &mode in &modes {
            let Some(r) = report.result(mode) else { continue };
            wr.write_record([
                spacing.to_string(),
                mode.label().to_string(),
                r.energy.to_string(),
                report.reference_energy.to_string(),
                r.error.to_string(),
                opt(r.energy_std),
                r.witness.to_string(),
                opt(r.fidelity),
                r.retained_fraction.to_string(),
                r.iteration.to_string(),
            ])?;
        }
    }
    wr.flush()?;
    drop(wr);
    w.flush()?;
    if let Some(path) = &args.plot {
        render_curve(path, &curve, &modes)?;
    }
    Ok(())
}

pub fn vqe(args: &VqeArgs) -> Result<()> {
    let (ham, eta) = load_hamiltonian(&args.ham)?;
    check_sampling(&args.sampling)?;
    let config = SourceConfig {
        noise: noise_model(&args.noise)?,
        shots: args.sampling.shots,
        batch: args.sampling.batch,
        post_select: true,
    };
    let source = registry::rdm_source(&args.source, &config)?;
    let purifier = registry::purifier(&args.purifier)?;
    if args.gamma.is_nan() || args.gamma <= 0.0 {
        return Err(Error::Validation(format!("--gamma must be positive, got {}", args.gamma)));
    }
    let opts = VqeOptions {
        max_iter: args.max_iter,
        gamma: args.gamma,
        grad_tol: args.grad_tol,
        restricted: true,
    };
    let n = ham.n_modes();
    let mut calls = 0u64;
    let outcome = vqe_optimize(&ham, eta, &AntiHermitianGenerator::zeros(n), &opts, Some(purifier.as_ref()), |u| {
        let seed = args.sampling.seed.wrapping_add(calls.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        calls += 1;
        source.rdm(u, eta, seed)
    });
    let (trace, result) = match outcome {
        Ok(res) => {
            let best = res.best_row();
            eprintln!(
                "best energy {} at iteration {}, converged: {}",
                best.energy, best.iteration, res.converged
            );
            (res.trace, Ok(()))
        }
        Err(failure) => (failure.trace, Err(failure.error)),
    };

    let mut w = output(args.out.as_deref())?;
    schema_line(&mut w, VQE_SCHEMA)?;
    write_trace_csv(&trace, &mut w)?;
    w.flush()?;
    result
}

pub fn probe(args: &ProbeArgs) -> Result<()> {
    let n_atoms = parse_chain(&args.chain)?;
    check_sampling(&args.sampling)?;
    if args.sigmas.is_empty() || args.phis.is_empty() {
        return Err(Error::Validation("--sigmas and --phis need at least one value".into()));
    }
    let ham = chain_hamiltonian(n_atoms, args.spacing)?;
    let corrections: &[bool] = match args.correction {
        Correction::Off => &[false],
        Correction::On => &[true],
        Correction::Both => &[false, true],
    };
    // the noiseless baseline comes first, then the grid
    let mut points = vec![NoiseModel::noiseless()];
    for &phi in &args.phis {
        for &sigma in &args.sigmas {
            for &corrected in corrections {
                points.push(NoiseModel {
                    parasitic_cphase_angle: phi,
                    rz_sigma: sigma,
                    rz_correction_enabled: corrected,
                    ..NoiseModel::noiseless()
                });
            }
        }
    }
    for p in &points {
        p.validate()?;
    }
    let analytic_ok = args.phis.iter().all(|&p| p == 0.0);
    let backend = match args.backend {
        Backend::Analytic => SweepBackend::Analytic,
        Backend::Auto if analytic_ok => SweepBackend::Analytic,
        Backend::Auto | Backend::Emulated => SweepBackend::Emulated {
            shots: args.sampling.shots,
            batch: args.sampling.batch,
            seed: args.sampling.seed,
        },
    };
    let rows = noise_sweep(&ham, n_atoms / 2, &points, backend, &args.purifier)?;

    let mut w = output(args.out.as_deref())?;
    schema_line(&mut w, PROBE_SCHEMA)?;
    let mut wr = csv::Writer::from_writer(&mut w);
    wr.write_record([
        "label",
        "phi",
        "sigma",
        "corrected",
        "fidelity",
        "energy_error_hartree",
        "witness",
        "threshold",
    ])?;
    for (k, r) in rows.iter().enumerate() {
        wr.write_record([
            if k == 0 { "baseline" } else { "point" }.to_string(),
            r.phi.to_string(),
            r.sigma.to_string(),
            r.corrected.to_string(),
            r.fidelity.to_string(),
            r.energy_error.to_string(),
            r.witness.to_string(),
            (k > 0 && (r.sigma - args.threshold).abs() < 1e-12).to_string(),
        ])?;
    }
    wr.flush()?;
    drop(wr);
    w.flush()?;
    Ok(())
}
