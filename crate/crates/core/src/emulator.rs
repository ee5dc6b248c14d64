//! Jordan-Wigner statevector emulation of native circuits with coherent,
//! stochastic and readout noise.
//!
//! Qubit `q` carries fermionic mode `q`. A basis index stores qubit `q` in
//! bit `N − 1 − q`, so the binary representation of an index reads
//! `q0 q1 … q(N−1)` from left to right.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::compile::{Gate, GivensNetwork, MeasurementPlan, NativeCircuit};
use crate::error::{Error, Result};
use crate::fermion::{filled, OneRDM};
use crate::linalg::CMat;

/// Largest register the statevector engine accepts.
pub const MAX_QUBITS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    /// Angle of the `cphase` that follows every `sqrt_iswap`.
    pub parasitic_cphase_angle: f64,
    /// Relative standard deviation of `rz` angles.
    pub rz_sigma: f64,
    /// Probability that a prepared 0 reads as 1.
    pub readout_p01: f64,
    /// Probability that a prepared 1 reads as 0.
    pub readout_p10: f64,
    pub rz_correction_enabled: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            parasitic_cphase_angle: PI / 24.0,
            rz_sigma: 0.0,
            readout_p01: 0.0,
            readout_p10: 0.0,
            rz_correction_enabled: false,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            parasitic_cphase_angle: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("readout_p01", self.readout_p01), ("readout_p10", self.readout_p10)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Validation(format!("{name} = {p} is not a probability")));
            }
        }
        if !self.parasitic_cphase_angle.is_finite() {
            return Err(Error::Validation("parasitic cphase angle must be finite".into()));
        }
        if !(self.rz_sigma.is_finite() && self.rz_sigma >= 0.0) {
            return Err(Error::Validation(format!("rz_sigma = {} must be finite and non-negative", self.rz_sigma)));
        }
        Ok(())
    }

    pub fn is_stochastic(&self) -> bool {
        self.rz_sigma > 0.0
    }

    fn has_readout_error(&self) -> bool {
        self.readout_p01 > 0.0 || self.readout_p10 > 0.0
    }
}

/// Sampled bitstrings of one measurement setting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotTable {
    pub setting_id: usize,
    pub n_qubits: usize,
    /// Basis index to count.
    pub counts: BTreeMap<u64, u64>,
}

impl ShotTable {
    pub fn new(setting_id: usize, n_qubits: usize) -> Self {
        Self {
            setting_id,
            n_qubits,
            counts: BTreeMap::new(),
        }
    }

    pub fn total_shots(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn add(&mut self, index: u64, count: u64) {
        if count > 0 {
            *self.counts.entry(index).or_insert(0) += count;
        }
    }

    /// Value of qubit `q` in basis index `index`.
    pub fn bit(&self, index: u64, q: usize) -> bool {
        (index >> (self.n_qubits - 1 - q)) & 1 == 1
    }

    pub fn bitstring(&self, index: u64) -> String {
        (0..self.n_qubits)
            .map(|q| if self.bit(index, q) { '1' } else { '0' })
            .collect()
    }
}

pub fn parse_bitstring(s: &str) -> Option<u64> {
    if s.is_empty() || s.len() > 64 {
        return None;
    }
    s.chars().try_fold(0u64, |acc, c| match c {
        '0' => Some(acc << 1),
        '1' => Some((acc << 1) | 1),
        _ => None,
    })
}

/// Writes tables as `setting_id,bitstring,count` rows.
pub fn write_shot_tables<W: Write>(tables: &[ShotTable], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["setting_id", "bitstring", "count"])?;
    for t in tables {
        for (&idx, &count) in &t.counts {
            wr.write_record([t.setting_id.to_string(), t.bitstring(idx), count.to_string()])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Reads tables written by [`write_shot_tables`], ordered by setting id.
pub fn read_shot_tables<R: Read>(r: R) -> Result<Vec<ShotTable>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut tables: BTreeMap<usize, ShotTable> = BTreeMap::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let perr = |msg: String| Error::Parse { line, msg };
        if rec.len() != 3 {
            return Err(perr(format!("expected 3 fields, found {}", rec.len())));
        }
        let id: usize = rec[0].trim().parse().map_err(|e| perr(format!("bad setting id: {e}")))?;
        let bits = rec[1].trim();
        let idx = parse_bitstring(bits).ok_or_else(|| perr(format!("bad bitstring '{bits}'")))?;
        let count: u64 = rec[2].trim().parse().map_err(|e| perr(format!("bad count: {e}")))?;
        let table = tables.entry(id).or_insert_with(|| ShotTable::new(id, bits.len()));
        if table.n_qubits != bits.len() {
            return Err(perr(format!(
                "bitstring length {} differs from {} used earlier for setting {id}",
                bits.len(),
                table.n_qubits
            )));
        }
        table.add(idx, count);
    }
    Ok(tables.into_values().collect())
}

fn basis_index(initial: &[bool]) -> usize {
    let n = initial.len();
    initial
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .fold(0, |acc, (q, _)| acc | (1 << (n - 1 - q)))
}

fn apply_1q(psi: &mut [C64], n: usize, q: usize, m: [[C64; 2]; 2]) {
    let mask = 1usize << (n - 1 - q);
    for i in 0..psi.len() {
        if i & mask == 0 {
            let j = i | mask;
            let (x, y) = (psi[i], psi[j]);
            psi[i] = m[0][0] * x + m[0][1] * y;
            psi[j] = m[1][0] * x + m[1][1] * y;
        }
    }
}

fn apply_diag_1q(psi: &mut [C64], n: usize, q: usize, d0: C64, d1: C64) {
    let mask = 1usize << (n - 1 - q);
    for (i, a) in psi.iter_mut().enumerate() {
        *a *= if i & mask == 0 { d0 } else { d1 };
    }
}

fn apply_sqrt_iswap(psi: &mut [C64], n: usize, a: usize, b: usize) {
    let ma = 1usize << (n - 1 - a);
    let mb = 1usize << (n - 1 - b);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (c, s) = (C64::new(h, 0.0), C64::new(0.0, h));
    for i in 0..psi.len() {
        if i & ma == 0 && i & mb != 0 {
            let j = (i | ma) & !mb;
            let (x, y) = (psi[i], psi[j]);
            psi[i] = c * x + s * y;
            psi[j] = s * x + c * y;
        }
    }
}

fn apply_cphase(psi: &mut [C64], n: usize, a: usize, b: usize, angle: f64) {
    let m = (1usize << (n - 1 - a)) | (1usize << (n - 1 - b));
    let ph = C64::from_polar(1.0, angle);
    for (i, amp) in psi.iter_mut().enumerate() {
        if i & m == m {
            *amp *= ph;
        }
    }
}

fn apply_gate(psi: &mut [C64], n: usize, g: &Gate) {
    match *g {
        Gate::SqrtIswap { a, b } => apply_sqrt_iswap(psi, n, a, b),
        Gate::Cphase { a, b, angle } => apply_cphase(psi, n, a, b, angle),
        Gate::Rz { q, angle } => apply_diag_1q(
            psi,
            n,
            q,
            C64::from_polar(1.0, -angle / 2.0),
            C64::from_polar(1.0, angle / 2.0),
        ),
        Gate::T { q } => apply_diag_1q(psi, n, q, C64::new(1.0, 0.0), C64::from_polar(1.0, PI / 4.0)),
        Gate::Rx { q, angle } => {
            let (s, c) = (angle / 2.0).sin_cos();
            let (c, ms) = (C64::new(c, 0.0), C64::new(0.0, -s));
            apply_1q(psi, n, q, [[c, ms], [ms, c]])
        }
        Gate::Ry { q, angle } => {
            let (s, c) = (angle / 2.0).sin_cos();
            let (c, s) = (C64::new(c, 0.0), C64::new(s, 0.0));
            apply_1q(psi, n, q, [[c, -s], [s, c]])
        }
    }
}

/// Exact evolution of the computational basis state `initial` through `c`.
pub fn run_statevector(c: &NativeCircuit, initial: &[bool]) -> Result<Vec<C64>> {
    let n = c.n_qubits();
    if n > MAX_QUBITS {
        return Err(Error::Resource(format!(
            "statevector of {n} qubits exceeds the {MAX_QUBITS}-qubit limit"
        )));
    }
    if initial.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: initial.len(),
        });
    }
    let mut psi = vec![C64::new(0.0, 0.0); 1 << n];
    psi[basis_index(initial)] = C64::new(1.0, 0.0);
    for g in c.gates() {
        apply_gate(&mut psi, n, g);
    }
    Ok(psi)
}

/// 1-RDM of a statevector, `d[p][q] = ⟨a†_q a_p⟩` with Jordan-Wigner signs.
pub fn one_rdm_from_statevector(psi: &[C64], n: usize) -> Result<OneRDM> {
    if psi.len() != 1 << n {
        return Err(Error::Dimension {
            expected: 1 << n,
            got: psi.len(),
        });
    }
    let bit = |q: usize| 1usize << (n - 1 - q);
    let mut d = CMat::zeros(n, n);
    let mut trace = 0.0;
    for (x, amp) in psi.iter().enumerate() {
        let w = amp.norm_sqr();
        if w == 0.0 {
            continue;
        }
        for p in 0..n {
            if x & bit(p) != 0 {
                d[(p, p)] += w;
                trace += w;
            }
        }
    }
    for p in 0..n {
        for q in (p + 1)..n {
            // ⟨a†_q a_p⟩: move a particle from p to q
            let between: usize = ((p + 1)..q).map(bit).sum();
            let mut acc = C64::new(0.0, 0.0);
            for (x, amp) in psi.iter().enumerate() {
                if x & bit(p) != 0 && x & bit(q) == 0 {
                    let y = (x & !bit(p)) | bit(q);
                    let sign = if (x & between).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
                    acc += psi[y].conj() * amp * sign;
                }
            }
            d[(p, q)] = acc;
            d[(q, p)] = acc.conj();
        }
    }
    OneRDM::from_estimate(d, trace.round() as usize)
}

/// Inserts the parasitic `cphase` after each `sqrt_iswap` and resamples every `rz` angle.
///
/// With correction enabled each `cphase` is followed by `rz(−φ/2)` on both
/// qubits, which leaves the residual `diag(1, e^{-iφ/2}, e^{-iφ/2}, 1)` up to
/// global phase. Correction gates are not themselves resampled.
pub fn apply_noise<R: Rng + ?Sized>(c: &NativeCircuit, nm: &NoiseModel, rng: &mut R) -> NativeCircuit {
    let phi = nm.parasitic_cphase_angle;
    let mut out = NativeCircuit::new(c.n_qubits());
    for g in c.gates() {
        match *g {
            Gate::SqrtIswap { a, b } => {
                out.push_unchecked(*g);
                if phi != 0.0 {
                    out.push_unchecked(Gate::Cphase { a, b, angle: phi });
                    if nm.rz_correction_enabled {
                        out.push_unchecked(Gate::Rz { q: a, angle: -phi / 2.0 });
                        out.push_unchecked(Gate::Rz { q: b, angle: -phi / 2.0 });
                    }
                }
            }
            Gate::Rz { q, angle } if nm.rz_sigma > 0.0 => {
                let z: f64 = rng.sample(StandardNormal);
                out.push_unchecked(Gate::Rz {
                    q,
                    angle: angle * (1.0 + nm.rz_sigma * z),
                });
            }
            _ => out.push_unchecked(*g),
        }
    }
    out
}

/// Weight of the non-identity Pauli components of a diagonal two-qubit unitary.
pub fn diagonal_pauli_error_weight(diag: [C64; 4]) -> f64 {
    let tr: C64 = diag.iter().sum();
    1.0 - tr.norm_sqr() / 16.0
}

/// Pauli error weight left by a parasitic `cphase(φ)`, with or without the `rz` correction.
pub fn parasitic_error_weight(phi: f64, corrected: bool) -> f64 {
    let one = C64::new(1.0, 0.0);
    let diag = if corrected {
        let h = C64::from_polar(1.0, -phi / 2.0);
        [one, h, h, one]
    } else {
        [one, one, one, C64::from_polar(1.0, -phi)]
    };
    diagonal_pauli_error_weight(diag)
}

fn readout_channel(probs: &mut [f64], n: usize, nm: &NoiseModel) {
    let (p01, p10) = (nm.readout_p01, nm.readout_p10);
    for q in 0..n {
        let mask = 1usize << (n - 1 - q);
        for i in 0..probs.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (z, o) = (probs[i], probs[j]);
                probs[i] = (1.0 - p01) * z + p10 * o;
                probs[j] = p01 * z + (1.0 - p10) * o;
            }
        }
    }
}

fn draw_counts<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R, table: &mut ShotTable) {
    if shots == 1 {
        let mut r: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
        let mut last = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                last = i;
                if r < p {
                    table.add(i as u64, 1);
                    return;
                }
                r -= p;
            }
        }
        table.add(last as u64, 1);
        return;
    }
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let frac = (p / mass).clamp(0.0, 1.0);
        let k = if frac >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, frac).expect("valid binomial").sample(rng)
        };
        table.add(i as u64, k);
        remaining -= k;
        mass -= p;
    }
    if remaining > 0 {
        // rounding left mass unassigned; give it to the most likely outcome
        let best = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        table.add(best as u64, remaining);
    }
}

/// Batch size used when none is given: every shot gets a fresh noise draw.
pub fn default_batch(nm: &NoiseModel, shots: u64) -> u64 {
    if nm.is_stochastic() {
        1
    } else {
        shots
    }
}

/// Samples `shots` readouts of `c` applied to `initial`, drawing fresh `rz` noise per shot.
pub fn sample_shots(
    c: &NativeCircuit,
    initial: &[bool],
    nm: &NoiseModel,
    shots: u64,
    seed: u64,
) -> Result<ShotTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_shots_with(c, initial, nm, shots, default_batch(nm, shots), 0, &mut rng)
}

/// Sampling with an explicit noise-resampling batch size and RNG.
pub fn sample_shots_with<R: Rng + ?Sized>(
    c: &NativeCircuit,
    initial: &[bool],
    nm: &NoiseModel,
    shots: u64,
    batch: u64,
    setting_id: usize,
    rng: &mut R,
) -> Result<ShotTable> {
    nm.validate()?;
    if shots == 0 {
        return Err(Error::Validation("shot count must be positive".into()));
    }
    if batch == 0 {
        return Err(Error::Validation("batch size must be positive".into()));
    }
    let n = c.n_qubits();
    let batch = if nm.is_stochastic() { batch } else { shots };
    let mut table = ShotTable::new(setting_id, n);
    let mut done = 0;
    while done < shots {
        let this = batch.min(shots - done);
        let noisy = apply_noise(c, nm, rng);
        let psi = run_statevector(&noisy, initial)?;
        let mut probs: Vec<f64> = psi.iter().map(|a| a.norm_sqr()).collect();
        if nm.has_readout_error() {
            readout_channel(&mut probs, n, nm);
        }
        draw_counts(&probs, this, rng, &mut table);
        done += this;
    }
    Ok(table)
}

/// Samples every setting of a plan; setting `k` uses stream `k` of the seeded generator.
pub fn sample_plan(
    plan: &MeasurementPlan,
    nm: &NoiseModel,
    shots: u64,
    batch: Option<u64>,
    seed: u64,
) -> Result<Vec<ShotTable>> {
    let batch = batch.unwrap_or_else(|| default_batch(nm, shots));
    plan.settings
        .par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s.id as u64);
            sample_shots_with(&s.circuit, &plan.initial, nm, shots, batch, s.id, &mut rng)
        })
        .collect()
}

/// Closed-form 1-RDM under Gaussian relative fluctuations of every Givens angle.
///
/// Each gate acts on the 1-RDM through its mode matrix with `cos θ` and
/// `sin θ` scaled by `e^{−θ²σ²/2}`, the Gaussian average of `θ(1+δ)`.
pub fn noisy_rdm_analytic(net: &GivensNetwork, sigma: f64) -> Result<OneRDM> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::Validation(format!("sigma = {sigma} must be finite and non-negative")));
    }
    let n = net.n_modes;
    let occ = filled(n, net.n_particles);
    let mut d = CMat::from_fn(n, n, |p, q| {
        if p == q && occ[p] {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    for g in net.gates() {
        let damp = (-(g.theta * sigma).powi(2) / 2.0).exp();
        let mut m = g.mode_matrix();
        for row in m.iter_mut() {
            for x in row.iter_mut() {
                *x *= damp;
            }
        }
        let a = g.mode_a;
        // D ← M D M† restricted to rows/columns (a, a+1)
        for c in 0..n {
            let (x, y) = (d[(a, c)], d[(a + 1, c)]);
            d[(a, c)] = m[0][0] * x + m[0][1] * y;
            d[(a + 1, c)] = m[1][0] * x + m[1][1] * y;
        }
        for r in 0..n {
            let (x, y) = (d[(r, a)], d[(r, a + 1)]);
            d[(r, a)] = x * m[0][0].conj() + y * m[0][1].conj();
            d[(r, a + 1)] = x * m[1][0].conj() + y * m[1][1].conj();
        }
    }
    OneRDM::from_estimate(d, net.n_particles)
}
