//! Name-keyed registry of interchangeable strategies: 1-RDM sources,
//! purifiers and covariance models.
//!
//! The command-line harness and the experiment pipeline look strategies up by
//! name, so a new backend only needs a constructor entry here.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use crate::compile::{build_measurement_plan, givens_decompose, MeasurementPlan};
use crate::emulator::{noisy_rdm_analytic, sample_plan, NoiseModel, ShotTable};
use crate::error::{Error, Result};
use crate::estimation::{assemble_rdm_with, CovarianceKind, RDMEstimate};
use crate::fermion::{filled, propagate_rdm, BasisRotation, OneRDM};
use crate::mitigation::{EigenRound, McWeeny, NoPurification, Purifier};

/// Produces the 1-RDM of the state `U(u)|η⟩`, exactly or by emulated measurement.
pub trait RdmSource: Send + Sync {
    fn name(&self) -> &'static str;
    /// `seed` selects the sampling stream; deterministic sources ignore it.
    fn rdm(&self, u: &BasisRotation, eta: usize, seed: u64) -> Result<OneRDM>;
}

/// Turns a plan's shot tables into an estimate with a particular covariance.
pub trait CovarianceModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn assemble(&self, plan: &MeasurementPlan, tables: &[ShotTable], post_select: bool) -> Result<RDMEstimate>;
}

/// Settings shared by the source constructors.
#[derive(Clone, Debug)]
pub struct SourceConfig {
    pub noise: NoiseModel,
    pub shots: u64,
    pub batch: Option<u64>,
    pub post_select: bool,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            noise: NoiseModel::noiseless(),
            shots: 250_000,
            batch: None,
            post_select: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ExactPropagation;

impl RdmSource for ExactPropagation {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn rdm(&self, u: &BasisRotation, eta: usize, _seed: u64) -> Result<OneRDM> {
        propagate_rdm(u, &filled(u.n_modes(), eta))
    }
}

/// Closed-form Gaussian-averaged stochastic-Rz channel.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticRzNoise {
    pub sigma: f64,
}

impl RdmSource for AnalyticRzNoise {
    fn name(&self) -> &'static str {
        "analytic-rz"
    }

    fn rdm(&self, u: &BasisRotation, eta: usize, _seed: u64) -> Result<OneRDM> {
        noisy_rdm_analytic(&givens_decompose(u, eta)?, self.sigma)
    }
}

/// Statevector emulation of the full measurement plan.
#[derive(Clone, Debug)]
pub struct Emulated {
    pub config: SourceConfig,
}

impl Emulated {
    /// Samples every setting of the plan for `u`; returns the plan with its tables.
    pub fn sample(&self, u: &BasisRotation, eta: usize, seed: u64) -> Result<(MeasurementPlan, Vec<ShotTable>)> {
        let plan = build_measurement_plan(u, eta, true)?;
        let tables = sample_plan(&plan, &self.config.noise, self.config.shots, self.config.batch, seed)?;
        Ok((plan, tables))
    }
}

impl RdmSource for Emulated {
    fn name(&self) -> &'static str {
        "emulated"
    }

    fn rdm(&self, u: &BasisRotation, eta: usize, seed: u64) -> Result<OneRDM> {
        let (plan, tables) = self.sample(u, eta, seed)?;
        Ok(assemble_rdm_with(&plan, &tables, self.config.post_select, CovarianceKind::Empirical)?.mean)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EmpiricalCovariance;

impl CovarianceModel for EmpiricalCovariance {
    fn name(&self) -> &'static str {
        "empirical"
    }

    fn assemble(&self, plan: &MeasurementPlan, tables: &[ShotTable], post_select: bool) -> Result<RDMEstimate> {
        assemble_rdm_with(plan, tables, post_select, CovarianceKind::Empirical)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GaussianStateCovariance;

impl CovarianceModel for GaussianStateCovariance {
    fn name(&self) -> &'static str {
        "gaussian-state"
    }

    fn assemble(&self, plan: &MeasurementPlan, tables: &[ShotTable], post_select: bool) -> Result<RDMEstimate> {
        assemble_rdm_with(plan, tables, post_select, CovarianceKind::GaussianState)
    }
}

type SourceCtor = fn(&SourceConfig) -> Box<dyn RdmSource>;

static SOURCES: LazyLock<BTreeMap<&'static str, SourceCtor>> = LazyLock::new(|| {
    let mut m: BTreeMap<&'static str, SourceCtor> = BTreeMap::new();
    m.insert("exact", |_| Box::new(ExactPropagation));
    m.insert("analytic-rz", |c| {
        Box::new(AnalyticRzNoise {
            sigma: c.noise.rz_sigma,
        })
    });
    m.insert("emulated", |c| Box::new(Emulated { config: c.clone() }));
    m
});

type Factory<T> = fn() -> Box<T>;

static PURIFIERS: LazyLock<BTreeMap<&'static str, Factory<dyn Purifier>>> = LazyLock::new(|| {
    let mut m: BTreeMap<&'static str, Factory<dyn Purifier>> = BTreeMap::new();
    m.insert("mcweeny", || Box::new(McWeeny::default()));
    m.insert("eigen-round", || Box::new(EigenRound));
    m.insert("none", || Box::new(NoPurification));
    m
});

static COVARIANCES: LazyLock<BTreeMap<&'static str, Factory<dyn CovarianceModel>>> = LazyLock::new(|| {
    let mut m: BTreeMap<&'static str, Factory<dyn CovarianceModel>> = BTreeMap::new();
    m.insert("empirical", || Box::new(EmpiricalCovariance));
    m.insert("gaussian-state", || Box::new(GaussianStateCovariance));
    m
});

fn unknown(kind: &str, name: &str, known: impl Iterator<Item = &'static str>) -> Error {
    let known: Vec<_> = known.collect();
    Error::Validation(format!("unknown {kind} '{name}'; expected one of {}", known.join(", ")))
}

pub fn rdm_source(name: &str, config: &SourceConfig) -> Result<Box<dyn RdmSource>> {
    SOURCES
        .get(name)
        .map(|ctor| ctor(config))
        .ok_or_else(|| unknown("1-RDM source", name, SOURCES.keys().copied()))
}

pub fn purifier(name: &str) -> Result<Box<dyn Purifier>> {
    PURIFIERS
        .get(name)
        .map(|ctor| ctor())
        .ok_or_else(|| unknown("purifier", name, PURIFIERS.keys().copied()))
}

pub fn covariance_model(name: &str) -> Result<Box<dyn CovarianceModel>> {
    COVARIANCES
        .get(name)
        .map(|ctor| ctor())
        .ok_or_else(|| unknown("covariance model", name, COVARIANCES.keys().copied()))
}

pub fn rdm_source_names() -> Vec<&'static str> {
    SOURCES.keys().copied().collect()
}

pub fn purifier_names() -> Vec<&'static str> {
    PURIFIERS.keys().copied().collect()
}

pub fn covariance_model_names() -> Vec<&'static str> {
    COVARIANCES.keys().copied().collect()
}
