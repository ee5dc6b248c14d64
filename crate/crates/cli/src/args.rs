use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "hfsim", version, about = "Basis-rotation experiments on an emulated device")]
pub struct Cli {
    /// Worker threads for parallel points (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compile a basis rotation to native gates and report counts.
    Compile(CompileArgs),
    /// Binding curve of a hydrogen chain under each mitigation mode.
    Curve(CurveArgs),
    /// Orbital optimization trace.
    Vqe(VqeArgs),
    /// Purified fidelity across a grid of noise strengths.
    Probe(ProbeArgs),
}

/// Where the Hamiltonian comes from. Exactly one source must be given.
#[derive(Args, Debug, Clone)]
pub struct HamiltonianArgs {
    /// Built-in hydrogen chain, e.g. `H6`.
    #[arg(long, conflicts_with_all = ["fcidump", "xyz"])]
    pub chain: Option<String>,

    /// Interatomic spacing for `--chain`, in Å.
    #[arg(long, default_value_t = 1.3)]
    pub spacing: f64,

    /// Integrals in FCIDUMP format.
    #[arg(long, conflicts_with = "xyz")]
    pub fcidump: Option<PathBuf>,

    /// Hydrogen-only geometry in XYZ format (STO-3G integrals are computed).
    #[arg(long)]
    pub xyz: Option<PathBuf>,

    /// Doubly occupied orbitals; defaults to half the electron count.
    #[arg(long)]
    pub eta: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct NoiseArgs {
    /// Starting noise model; the flags below override its fields.
    #[arg(long, value_enum, default_value_t = NoisePreset::Default)]
    pub noise: NoisePreset,

    /// Parasitic cphase angle after every sqrt_iswap, in radians.
    #[arg(long)]
    pub cphase: Option<f64>,

    /// Relative standard deviation of every rz angle.
    #[arg(long)]
    pub rz_sigma: Option<f64>,

    /// Probability of reading 1 for a qubit in 0.
    #[arg(long)]
    pub readout_p01: Option<f64>,

    /// Probability of reading 0 for a qubit in 1.
    #[arg(long)]
    pub readout_p10: Option<f64>,

    /// Cancel the parasitic cphase with single-qubit phases.
    #[arg(long)]
    pub rz_correction: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoisePreset {
    /// Parasitic cphase of π/24, no other noise.
    Default,
    Noiseless,
}

#[derive(Args, Debug, Clone)]
pub struct SamplingArgs {
    /// Shots per measurement setting.
    #[arg(long, default_value_t = 250_000)]
    pub shots: u64,

    /// Shots per stochastic noise realization (default: one per shot).
    #[arg(long)]
    pub batch: Option<u64>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationChoice {
    /// Converged restricted Hartree-Fock orbitals.
    Rhf,
    Identity,
}

#[derive(Args, Debug)]
pub struct CompileArgs {
    #[command(flatten)]
    pub ham: HamiltonianArgs,

    #[arg(long, value_enum, default_value_t = RotationChoice::Rhf)]
    pub rotation: RotationChoice,

    /// Write the native circuit here.
    #[arg(long, short)]
    pub out: Option<PathBuf>,

    /// Write the count report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    /// Hydrogen chain, e.g. `H6`.
    #[arg(long, default_value = "H6")]
    pub chain: String,

    /// Comma-separated spacings in Å.
    #[arg(long, value_delimiter = ',', default_values_t = hfsim::pipeline::DEFAULT_SPACINGS)]
    pub spacings: Vec<f64>,

    /// Comma-separated modes: raw, ps, pure, vqe.
    #[arg(long, value_delimiter = ',', default_value = "raw,ps,pure,vqe")]
    pub modes: Vec<String>,

    #[command(flatten)]
    pub noise: NoiseArgs,

    #[command(flatten)]
    pub sampling: SamplingArgs,

    #[arg(long, default_value = "mcweeny")]
    pub purifier: String,

    #[arg(long, default_value = "gaussian-state")]
    pub covariance: String,

    /// Gaussian resamples per error bar; 0 skips error bars.
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,

    /// Optimizer iterations for the vqe mode.
    #[arg(long, default_value_t = 10)]
    pub vqe_iters: usize,

    /// Write the table here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,

    /// Also render the curve as an SVG file.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VqeArgs {
    #[command(flatten)]
    pub ham: HamiltonianArgs,

    /// 1-RDM source: exact, analytic-rz or emulated.
    #[arg(long, default_value = "exact")]
    pub source: String,

    /// Purifier applied before each energy; `none` keeps the raw estimate.
    #[arg(long, default_value = "none")]
    pub purifier: String,

    #[arg(long, default_value_t = 30)]
    pub max_iter: usize,

    /// Step-size cap of the augmented-Hessian update.
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,

    #[arg(long, default_value_t = 1e-6)]
    pub grad_tol: f64,

    #[command(flatten)]
    pub noise: NoiseArgs,

    #[command(flatten)]
    pub sampling: SamplingArgs,

    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Analytic when every cphase angle is 0, emulated otherwise.
    Auto,
    Analytic,
    Emulated,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correction {
    Off,
    On,
    Both,
}

#[derive(Args, Debug)]
pub struct ProbeArgs {
    #[arg(long, default_value = "H6")]
    pub chain: String,

    #[arg(long, default_value_t = 1.3)]
    pub spacing: f64,

    /// Comma-separated rz σ values.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.22,0.3")]
    pub sigmas: Vec<f64>,

    /// Comma-separated parasitic cphase angles in radians.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub phis: Vec<f64>,

    #[arg(long, value_enum, default_value_t = Correction::Off)]
    pub correction: Correction,

    #[arg(long, value_enum, default_value_t = Backend::Auto)]
    pub backend: Backend,

    /// σ value flagged in the `threshold` column.
    #[arg(long, default_value_t = 0.22)]
    pub threshold: f64,

    #[arg(long, default_value = "mcweeny")]
    pub purifier: String,

    #[command(flatten)]
    pub sampling: SamplingArgs,

    #[arg(long, short)]
    pub out: Option<PathBuf>,
}
