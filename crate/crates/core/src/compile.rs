//! Givens-rotation compilation of basis rotations, native-gate expansion and
//! measurement-setting construction.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fermion::{filled, BasisRotation};
use crate::linalg::{self, CMat};

/// Two-mode rotation `G(θ) = exp(θ (a†_a a_b − a†_b a_a))` on adjacent modes,
/// followed by the phase `e^{-iφ n_b}`.
///
/// Its single-particle matrix on `(a, b)` is `diag(1, e^{-iφ}) · [[cos θ, sin θ], [−sin θ, cos θ]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GivensRotationGate {
    pub mode_a: usize,
    pub theta: f64,
    pub phi: f64,
}

impl GivensRotationGate {
    pub fn mode_b(&self) -> usize {
        self.mode_a + 1
    }

    pub fn mode_matrix(&self) -> [[C64; 2]; 2] {
        let (s, c) = self.theta.sin_cos();
        let ph = C64::from_polar(1.0, -self.phi);
        [
            [C64::new(c, 0.0), C64::new(s, 0.0)],
            [ph * -s, ph * c],
        ]
    }

    fn is_identity(&self) -> bool {
        self.theta == 0.0 && self.phi == 0.0
    }
}

/// Layered Givens network preparing `U(u) |η⟩` from the filled reference.
#[derive(Clone, Debug, PartialEq)]
pub struct GivensNetwork {
    pub n_modes: usize,
    pub n_particles: usize,
    /// Gates in execution order; gates within a layer act on disjoint pairs.
    pub layers: Vec<Vec<GivensRotationGate>>,
    /// Phases left on the occupied reference modes. They act on the input
    /// basis state and therefore only contribute a global phase.
    pub final_phases: Vec<f64>,
}

impl GivensNetwork {
    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn gates(&self) -> impl Iterator<Item = &GivensRotationGate> {
        self.layers.iter().flatten()
    }

    /// Single-particle matrix realized by the gates, in execution order.
    pub fn rotation(&self) -> CMat {
        let n = self.n_modes;
        let mut m = CMat::identity(n, n);
        for g in self.gates() {
            apply_rows(&mut m, g.mode_a, g.mode_matrix());
        }
        m
    }
}

/// Left-multiplies rows `(a, a+1)` of `m` by the 2×2 block `g`.
fn apply_rows(m: &mut CMat, a: usize, g: [[C64; 2]; 2]) {
    for c in 0..m.ncols() {
        let x = m[(a, c)];
        let y = m[(a + 1, c)];
        m[(a, c)] = g[0][0] * x + g[0][1] * y;
        m[(a + 1, c)] = g[1][0] * x + g[1][1] * y;
    }
}

/// Decomposes the occupied columns of `u` into `η(N−η)` nearest-neighbour Givens rotations.
///
/// Occupied-occupied mixing is removed first (it changes the state only by a
/// phase). Entries below the diagonal of each occupied column are then
/// eliminated bottom-up, one column at a time; the resulting gates are
/// scheduled into at most `N − 1` parallel layers. Gates that are exactly the
/// identity (as for `u = 1`) are omitted.
pub fn givens_decompose(u: &BasisRotation, eta: usize) -> Result<GivensNetwork> {
    let n = u.n_modes();
    if eta == 0 || eta >= n {
        return Err(Error::Validation(format!(
            "particle number {eta} must lie strictly between 0 and {n}"
        )));
    }
    let nv = n - eta;
    let mut w = u.matrix().columns(0, eta).into_owned();
    // imaginary round-off on near-zero entries would otherwise show up as spurious phase gates
    if w.iter().all(|z| z.im.abs() < REAL_TOL) {
        w.iter_mut().for_each(|z| z.im = 0.0);
    }

    // Clear the lower-left triangle of the occupied block using occupied-occupied rotations.
    for k in (nv + 1..n).rev() {
        for l in 0..(k - nv) {
            let x = w[(k, l)];
            let y = w[(k, l + 1)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            if x.norm() == 0.0 || r == 0.0 {
                continue;
            }
            let (a, b) = (y / r, x / r);
            for row in 0..n {
                let cl = w[(row, l)];
                let cr = w[(row, l + 1)];
                w[(row, l)] = a * cl - b * cr;
                w[(row, l + 1)] = b.conj() * cl + a.conj() * cr;
            }
        }
    }

    // Eliminate column by column; gate (l, k) acts on modes (k−1, k).
    let n_layers = n - 1;
    let mut elim_layers: Vec<Vec<GivensRotationGate>> = vec![Vec::new(); n_layers];
    for l in 0..eta {
        for k in (l + 1..=l + nv).rev() {
            let x = w[(k - 1, l)];
            let y = w[(k, l)];
            let gate = zeroing_gate(k - 1, x, y);
            // elimination uses the adjoint of the circuit gate
            let m = gate.mode_matrix();
            let adj = [
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ];
            apply_rows(&mut w, k - 1, adj);
            w[(k, l)] = C64::new(0.0, 0.0);
            if !gate.is_identity() {
                let t = 2 * l + nv - k;
                elim_layers[t].push(gate);
            }
        }
    }

    let layers: Vec<Vec<GivensRotationGate>> = elim_layers
        .into_iter()
        .rev()
        .filter(|layer| !layer.is_empty())
        .collect();
    let mut final_phases = vec![0.0; n];
    for (l, phase) in final_phases.iter_mut().enumerate().take(eta) {
        *phase = w[(l, l)].arg();
    }
    Ok(GivensNetwork {
        n_modes: n,
        n_particles: eta,
        layers,
        final_phases,
    })
}

const REAL_TOL: f64 = 1e-12;

/// Gate whose adjoint maps `(x, y)` on modes `(a, a+1)` to `(·, 0)`.
fn zeroing_gate(mode_a: usize, x: C64, y: C64) -> GivensRotationGate {
    if y.norm() == 0.0 {
        return GivensRotationGate {
            mode_a,
            theta: 0.0,
            phi: 0.0,
        };
    }
    if x.norm() == 0.0 {
        return GivensRotationGate {
            mode_a,
            theta: PI / 2.0,
            phi: 0.0,
        };
    }
    // choose φ so that e^{iφ} y / x is real, keeping φ in (−π/2, π/2]
    let mut phi = linalg::wrap_angle(x.arg() - y.arg());
    if phi > PI / 2.0 {
        phi -= PI;
    } else if phi <= -PI / 2.0 {
        phi += PI;
    }
    if phi.abs() < 1e-12 {
        phi = 0.0;
    }
    let yy = C64::from_polar(1.0, phi) * y;
    let ratio = (yy * x.conj() / x.norm()).re;
    GivensRotationGate {
        mode_a,
        theta: (-ratio).atan2(x.norm()),
        phi,
    }
}

/// Native gate set of the emulated device.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    SqrtIswap { a: usize, b: usize },
    Rz { q: usize, angle: f64 },
    T { q: usize },
    Cphase { a: usize, b: usize, angle: f64 },
    Rx { q: usize, angle: f64 },
    Ry { q: usize, angle: f64 },
}

impl Gate {
    fn name(&self) -> &'static str {
        match self {
            Gate::SqrtIswap { .. } => "sqrt_iswap",
            Gate::Rz { .. } => "rz",
            Gate::T { .. } => "t_gate",
            Gate::Cphase { .. } => "cphase",
            Gate::Rx { .. } => "rx",
            Gate::Ry { .. } => "ry",
        }
    }

    fn max_qubit(&self) -> usize {
        match *self {
            Gate::SqrtIswap { a, b } | Gate::Cphase { a, b, .. } => a.max(b),
            Gate::Rz { q, .. } | Gate::T { q } | Gate::Rx { q, .. } | Gate::Ry { q, .. } => q,
        }
    }
}

/// Gate tallies used for reports and the multiplicative fidelity estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GateCounts {
    pub sqrt_iswap: usize,
    pub rz: usize,
    pub t: usize,
    pub cphase: usize,
    pub rx: usize,
    pub ry: usize,
    pub measured_qubits: usize,
}

impl GateCounts {
    pub fn single_qubit(&self) -> usize {
        self.rz + self.t + self.rx + self.ry
    }

    pub fn two_qubit(&self) -> usize {
        self.sqrt_iswap + self.cphase
    }
}

/// Per-operation success probabilities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateRates {
    pub single_qubit: f64,
    pub two_qubit: f64,
    pub readout: f64,
}

impl Default for GateRates {
    fn default() -> Self {
        Self {
            single_qubit: 0.995,
            two_qubit: 0.99,
            readout: 0.97,
        }
    }
}

/// Product of all gate and readout fidelities.
pub fn fidelity_estimate_from_counts(counts: &GateCounts, rates: &GateRates) -> f64 {
    rates.single_qubit.powi(counts.single_qubit() as i32)
        * rates.two_qubit.powi(counts.two_qubit() as i32)
        * rates.readout.powi(counts.measured_qubits as i32)
}

/// Ordered native-gate program on a line of qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct NativeCircuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl NativeCircuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Appends a gate, checking qubit range and linear adjacency.
    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if gate.max_qubit() >= self.n_qubits {
            return Err(Error::Validation(format!(
                "gate {gate:?} addresses a qubit outside 0..{}",
                self.n_qubits
            )));
        }
        if let Gate::SqrtIswap { a, b } | Gate::Cphase { a, b, .. } = gate {
            if a.abs_diff(b) != 1 {
                return Err(Error::Validation(format!(
                    "two-qubit gate on non-adjacent qubits ({a}, {b})"
                )));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    pub(crate) fn push_unchecked(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    pub fn counts(&self) -> GateCounts {
        let mut c = GateCounts {
            measured_qubits: self.n_qubits,
            ..GateCounts::default()
        };
        for g in &self.gates {
            match g {
                Gate::SqrtIswap { .. } => c.sqrt_iswap += 1,
                Gate::Rz { .. } => c.rz += 1,
                Gate::T { .. } => c.t += 1,
                Gate::Cphase { .. } => c.cphase += 1,
                Gate::Rx { .. } => c.rx += 1,
                Gate::Ry { .. } => c.ry += 1,
            }
        }
        c
    }

    /// Line-oriented text form, `GATE q0 [q1] [angle_radians]`, preceded by a `# qubits N` line.
    pub fn to_text(&self) -> String {
        let mut out = format!("# qubits {}\n", self.n_qubits);
        for g in &self.gates {
            let _ = match *g {
                Gate::SqrtIswap { a, b } => writeln!(out, "{} {a} {b}", g.name()),
                Gate::Cphase { a, b, angle } => writeln!(out, "{} {a} {b} {angle:e}", g.name()),
                Gate::T { q } => writeln!(out, "{} {q}", g.name()),
                Gate::Rz { q, angle } | Gate::Rx { q, angle } | Gate::Ry { q, angle } => {
                    writeln!(out, "{} {q} {angle:e}", g.name())
                }
            };
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut n_qubits = None;
        let mut gates = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: line_no, msg };
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("qubits") {
                    let v = it.next().ok_or_else(|| perr("missing qubit count".into()))?;
                    n_qubits = Some(v.parse::<usize>().map_err(|e| perr(e.to_string()))?);
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let qubit = |i: usize| -> Result<usize> {
                fields
                    .get(i)
                    .ok_or_else(|| perr(format!("missing field {i}")))?
                    .parse::<usize>()
                    .map_err(|e| perr(format!("bad qubit index: {e}")))
            };
            let angle = |i: usize| -> Result<f64> {
                fields
                    .get(i)
                    .ok_or_else(|| perr(format!("missing field {i}")))?
                    .parse::<f64>()
                    .map_err(|e| perr(format!("bad angle: {e}")))
            };
            let expect = |len: usize| -> Result<()> {
                if fields.len() == len {
                    Ok(())
                } else {
                    Err(perr(format!("expected {len} fields, found {}", fields.len())))
                }
            };
            let gate = match fields[0] {
                "sqrt_iswap" => {
                    expect(3)?;
                    Gate::SqrtIswap { a: qubit(1)?, b: qubit(2)? }
                }
                "cphase" => {
                    expect(4)?;
                    Gate::Cphase { a: qubit(1)?, b: qubit(2)?, angle: angle(3)? }
                }
                "t_gate" => {
                    expect(2)?;
                    Gate::T { q: qubit(1)? }
                }
                "rz" => {
                    expect(3)?;
                    Gate::Rz { q: qubit(1)?, angle: angle(2)? }
                }
                "rx" => {
                    expect(3)?;
                    Gate::Rx { q: qubit(1)?, angle: angle(2)? }
                }
                "ry" => {
                    expect(3)?;
                    Gate::Ry { q: qubit(1)?, angle: angle(2)? }
                }
                other => return Err(perr(format!("unknown gate '{other}'"))),
            };
            gates.push((line_no, gate));
        }
        let n = n_qubits.unwrap_or_else(|| gates.iter().map(|(_, g)| g.max_qubit() + 1).max().unwrap_or(0));
        let mut c = NativeCircuit::new(n);
        for (line, g) in gates {
            c.push(g).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        }
        Ok(c)
    }
}

/// Expands every Givens gate into `sqrt_iswap · rz · rz · sqrt_iswap · rz` (plus one
/// trailing `rz` when the gate carries a complex phase).
pub fn compile_to_native(net: &GivensNetwork) -> NativeCircuit {
    let mut c = NativeCircuit::new(net.n_modes);
    for g in net.gates() {
        let (a, b) = (g.mode_a, g.mode_b());
        c.push_unchecked(Gate::SqrtIswap { a, b });
        c.push_unchecked(Gate::Rz { q: a, angle: -g.theta - PI });
        c.push_unchecked(Gate::Rz { q: b, angle: g.theta });
        c.push_unchecked(Gate::SqrtIswap { a, b });
        c.push_unchecked(Gate::Rz { q: a, angle: PI });
        if g.phi != 0.0 {
            c.push_unchecked(Gate::Rz { q: b, angle: -g.phi });
        }
    }
    c
}

/// Applies `rounds` rounds of even-then-odd fermionic swap layers as a relabeling of the modes.
///
/// Returns the rotation `P u` and the order `perm`, where qubit `j` of the
/// relabeled circuit carries original mode `perm[j]`.
pub fn virtual_swap_relabel(u: &BasisRotation, rounds: usize) -> (BasisRotation, Vec<usize>) {
    let n = u.n_modes();
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..rounds {
        for start in [0, 1] {
            let mut j = start;
            while j + 1 < n {
                perm.swap(j, j + 1);
                j += 2;
            }
        }
    }
    let m = u.matrix();
    let permuted = CMat::from_fn(n, n, |r, c| m[(perm[r], c)]);
    (
        BasisRotation::new(permuted).expect("row permutation of a unitary is unitary"),
        perm,
    )
}

/// Number-conserving rotation `U_M` with `U_M (XX+YY)/2 U_M† = diag(0, 1, −1, 0)` on `(a, a+1)`.
pub fn measurement_gadget(a: usize) -> Vec<Gate> {
    vec![
        Gate::T { q: a + 1 },
        Gate::T { q: a + 1 },
        Gate::SqrtIswap { a, b: a + 1 },
    ]
}

/// Measurement basis of one setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisTag {
    /// Computational basis; yields the diagonal.
    Z,
    /// Gadgets on pairs `(0,1), (2,3), …`.
    GadgetEven,
    /// Gadgets on pairs `(1,2), (3,4), …`.
    GadgetOdd,
    /// `Ry(−π/2)` on every qubit; samples `X_j X_{j+1}` on all adjacent pairs.
    XX,
    /// `Rx(π/2)` on every qubit; samples `Y_j Y_{j+1}` on all adjacent pairs.
    YY,
}

impl BasisTag {
    pub fn label(&self) -> &'static str {
        match self {
            BasisTag::Z => "z",
            BasisTag::GadgetEven => "gadget-even",
            BasisTag::GadgetOdd => "gadget-odd",
            BasisTag::XX => "xx",
            BasisTag::YY => "yy",
        }
    }

    pub fn conserves_number(&self) -> bool {
        !matches!(self, BasisTag::XX | BasisTag::YY)
    }
}

/// One executable measurement circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSetting {
    pub id: usize,
    /// `permutation[j]` is the original mode carried by qubit `j`.
    pub permutation: Vec<usize>,
    pub basis: BasisTag,
    pub circuit: NativeCircuit,
    /// Adjacent qubit pairs `(j, j+1)` read out by this setting.
    pub pairs: Vec<(usize, usize)>,
    /// 1-RDM elements `(p, q)`, `p ≤ q`, estimated by this setting.
    pub targets: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementPlan {
    pub n_modes: usize,
    pub n_particles: usize,
    /// Occupations of the reference state every circuit starts from.
    pub initial: Vec<bool>,
    pub post_selectable: bool,
    pub settings: Vec<MeasurementSetting>,
}

impl MeasurementPlan {
    /// Elements `(p, q)`, `p ≤ q`, not targeted by any setting.
    pub fn missing_elements(&self) -> Vec<(usize, usize)> {
        let n = self.n_modes;
        let mut seen = vec![false; n * n];
        for s in &self.settings {
            for &(p, q) in &s.targets {
                seen[p * n + q] = true;
                seen[q * n + p] = true;
            }
        }
        let mut missing = Vec::new();
        for p in 0..n {
            for q in p..n {
                if !seen[p * n + q] {
                    missing.push((p, q));
                }
            }
        }
        missing
    }
}

fn ordered(p: usize, q: usize) -> (usize, usize) {
    (p.min(q), p.max(q))
}

/// `N + 1` settings: the diagonal plus two off-diagonal settings for each of `N/2` relabelings.
pub fn build_measurement_plan(u: &BasisRotation, eta: usize, post_selectable: bool) -> Result<MeasurementPlan> {
    let n = u.n_modes();
    if !n.is_multiple_of(2) {
        return Err(Error::Unsupported(format!(
            "measurement plans require an even number of modes, got {n}"
        )));
    }
    let base = compile_to_native(&givens_decompose(u, eta)?);
    let mut settings = vec![MeasurementSetting {
        id: 0,
        permutation: (0..n).collect(),
        basis: BasisTag::Z,
        circuit: base,
        pairs: Vec::new(),
        targets: (0..n).map(|p| (p, p)).collect(),
    }];

    for r in 0..n / 2 {
        let (relabeled, perm) = virtual_swap_relabel(u, r);
        let body = compile_to_native(&givens_decompose(&relabeled, eta)?);
        let bases = if post_selectable {
            [BasisTag::GadgetEven, BasisTag::GadgetOdd]
        } else {
            [BasisTag::XX, BasisTag::YY]
        };
        for basis in bases {
            let pairs: Vec<(usize, usize)> = match basis {
                BasisTag::GadgetEven => (0..n / 2).map(|j| (2 * j, 2 * j + 1)).collect(),
                BasisTag::GadgetOdd => (0..n / 2 - 1).map(|j| (2 * j + 1, 2 * j + 2)).collect(),
                _ => (0..n - 1).map(|j| (j, j + 1)).collect(),
            };
            let mut circuit = body.clone();
            match basis {
                BasisTag::XX => {
                    circuit.extend((0..n).map(|q| Gate::Ry { q, angle: -PI / 2.0 }))?
                }
                BasisTag::YY => circuit.extend((0..n).map(|q| Gate::Rx { q, angle: PI / 2.0 }))?,
                _ => {
                    for &(a, _) in &pairs {
                        circuit.extend(measurement_gadget(a))?;
                    }
                }
            }
            let targets = pairs.iter().map(|&(a, b)| ordered(perm[a], perm[b])).collect();
            settings.push(MeasurementSetting {
                id: settings.len(),
                permutation: perm.clone(),
                basis,
                circuit,
                pairs,
                targets,
            });
        }
    }

    Ok(MeasurementPlan {
        n_modes: n,
        n_particles: eta,
        initial: filled(n, eta),
        post_selectable,
        settings,
    })
}
