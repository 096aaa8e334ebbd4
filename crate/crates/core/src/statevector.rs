//! Dense statevector simulation, register layouts, amplitude loading,
//! marginal readout and seeded shot sampling.
//!
//! Basis index bit `q` is the value of qubit `q`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::grid::{format_sig12, GridAxis, PointMassDensity, NORMALIZATION_TOL};

/// Widest statevector the simulator will allocate.
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0...0>` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_width(num_qubits)?;
        if index >> num_qubits != 0 {
            return Err(Error::Range(format!("basis index {index} needs more than {num_qubits} qubits")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amplitudes })
    }

    /// Wraps amplitudes whose squared norm is one within `1e-12`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Validation(format!("amplitude count {len} is not a power of two")));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_width(num_qubits)?;
        let sv = Self { num_qubits, amplitudes };
        let norm = sv.norm_sqr();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Validation(format!("statevector norm^2 is {norm}, expected 1")));
        }
        Ok(sv)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(Complex64::norm_sqr).collect()
    }

    pub fn inner(&self, other: &Statevector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        if let Some(q) = gate.qubits().into_iter().find(|&q| q >= self.num_qubits) {
            return Err(Error::Layout(format!(
                "{gate} addresses qubit {q} of a {}-qubit statevector",
                self.num_qubits
            )));
        }
        let amps = &mut self.amplitudes;
        match *gate {
            Gate::Hadamard(q) => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                for_pairs(amps, q, |a, b| {
                    let (x, y) = (*a, *b);
                    *a = h * (x + y);
                    *b = h * (x - y);
                });
            }
            Gate::PauliX(q) => for_pairs(amps, q, std::mem::swap),
            Gate::Phase(q, angle) => {
                let p = Complex64::from_polar(1.0, angle);
                for_pairs(amps, q, |_, b| *b *= p);
            }
            Gate::RotY(q, angle) => {
                let (s, c) = (0.5 * angle).sin_cos();
                for_pairs(amps, q, |a, b| {
                    let (x, y) = (*a, *b);
                    *a = x * c - y * s;
                    *b = x * s + y * c;
                });
            }
            Gate::RotZ(q, angle) => {
                let lo = Complex64::from_polar(1.0, -0.5 * angle);
                let hi = Complex64::from_polar(1.0, 0.5 * angle);
                for_pairs(amps, q, |a, b| {
                    *a *= lo;
                    *b *= hi;
                });
            }
            Gate::Cnot { control, target } => {
                let cmask = 1usize << control;
                let tmask = 1usize << target;
                for i in 0..amps.len() {
                    if i & cmask != 0 && i & tmask == 0 {
                        amps.swap(i, i | tmask);
                    }
                }
            }
            Gate::ControlledPhase { control, target, angle } => {
                let mask = (1usize << control) | (1usize << target);
                let p = Complex64::from_polar(1.0, angle);
                for (i, a) in amps.iter_mut().enumerate() {
                    if i & mask == mask {
                        *a *= p;
                    }
                }
            }
            Gate::Swap(x, y) => {
                let (mx, my) = (1usize << x, 1usize << y);
                for i in 0..amps.len() {
                    if i & mx != 0 && i & my == 0 {
                        amps.swap(i, (i ^ mx) | my);
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies `circuit` gate by gate; widths must match.
    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.num_qubits() != self.num_qubits {
            return Err(Error::Layout(format!(
                "circuit width {} differs from statevector width {}",
                circuit.num_qubits(),
                self.num_qubits
            )));
        }
        circuit.gates().iter().try_for_each(|g| self.apply_gate(g))
    }

    /// Probabilities of the outcomes of `register`, summed over all other qubits.
    ///
    /// Outcome value bit `k` is qubit `register[k]`.
    pub fn marginal_probabilities(&self, register: &[usize]) -> Result<Vec<f64>> {
        check_qubit_list(register, self.num_qubits)?;
        let mut out = vec![0.0; 1 << register.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            out[extract_bits(i, register)] += a.norm_sqr();
        }
        Ok(out)
    }

    /// `shots` draws from the exact marginal of `register` on a seeded stream.
    pub fn sample(&self, register: &[usize], shots: u64, seed: u64) -> Result<ShotHistogram> {
        let probs = self.marginal_probabilities(register)?;
        ShotHistogram::draw(&probs, shots, seed)
    }
}

fn check_width(num_qubits: usize) -> Result<()> {
    if num_qubits > MAX_QUBITS {
        return Err(Error::Validation(format!("{num_qubits} qubits exceeds the {MAX_QUBITS}-qubit simulator limit")));
    }
    Ok(())
}

fn check_qubit_list(register: &[usize], num_qubits: usize) -> Result<()> {
    for (i, &q) in register.iter().enumerate() {
        if q >= num_qubits {
            return Err(Error::Layout(format!("qubit {q} outside a {num_qubits}-qubit statevector")));
        }
        if register[..i].contains(&q) {
            return Err(Error::Layout(format!("qubit {q} listed twice in register {register:?}")));
        }
    }
    Ok(())
}

/// Visits every amplitude pair differing only in qubit `q`, as (bit 0, bit 1).
fn for_pairs(amps: &mut [Complex64], q: usize, mut f: impl FnMut(&mut Complex64, &mut Complex64)) {
    let stride = 1usize << q;
    for block in amps.chunks_mut(stride << 1) {
        let (lo, hi) = block.split_at_mut(stride);
        lo.iter_mut().zip(hi).for_each(|(a, b)| f(a, b));
    }
}

/// Gathers the bits of `index` at positions `qubits` into a packed value.
pub(crate) fn extract_bits(index: usize, qubits: &[usize]) -> usize {
    qubits.iter().enumerate().fold(0, |acc, (k, &q)| acc | (((index >> q) & 1) << k))
}

/// Scatters the bits of `value` to positions `qubits`.
pub(crate) fn deposit_bits(value: usize, qubits: &[usize]) -> usize {
    qubits.iter().enumerate().fold(0, |acc, (k, &q)| acc | (((value >> k) & 1) << q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegisterRole {
    State,
    Noise,
    Coin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Register {
    pub name: String,
    pub role: RegisterRole,
    pub dimension: usize,
    pub qubits: Vec<usize>,
    pub axis: Option<GridAxis>,
}

/// Assignment of named subregisters to global qubit indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegisterLayout {
    num_qubits: usize,
    registers: Vec<Register>,
}

impl RegisterLayout {
    /// Validates that the registers are disjoint and cover `0..num_qubits`.
    pub fn new(registers: Vec<Register>) -> Result<Self> {
        let num_qubits: usize = registers.iter().map(|r| r.qubits.len()).sum();
        let mut seen = vec![false; num_qubits];
        for r in &registers {
            if r.qubits.is_empty() {
                return Err(Error::Layout(format!("register {} is empty", r.name)));
            }
            if let Some(axis) = &r.axis {
                if axis.num_qubits() != r.qubits.len() {
                    return Err(Error::Layout(format!(
                        "register {} has {} qubits but its axis needs {}",
                        r.name,
                        r.qubits.len(),
                        axis.num_qubits()
                    )));
                }
            }
            for &q in &r.qubits {
                if q >= num_qubits || seen[q] {
                    return Err(Error::Layout(format!(
                        "register {} qubit {q} overlaps another register or leaves 0..{num_qubits}",
                        r.name
                    )));
                }
                seen[q] = true;
            }
        }
        check_width(num_qubits)?;
        Ok(Self { num_qubits, registers })
    }

    /// State registers on qubits `0..S`, then noise registers, one pair per dimension.
    ///
    /// The packed state-register value equals the flat density index.
    pub fn diffusion(state_axes: &[GridAxis], noise_axes: &[GridAxis]) -> Result<Self> {
        if state_axes.len() != noise_axes.len() {
            return Err(Error::Layout(format!(
                "{} state dimensions but {} noise dimensions",
                state_axes.len(),
                noise_axes.len()
            )));
        }
        for (j, (s, w)) in state_axes.iter().zip(noise_axes).enumerate() {
            if s.num_qubits() != w.num_qubits() {
                return Err(Error::Layout(format!(
                    "dimension {j}: state register has {} qubits, noise register {}",
                    s.num_qubits(),
                    w.num_qubits()
                )));
            }
        }
        let mut registers = Self::state_registers(state_axes, 0);
        let offset: usize = state_axes.iter().map(GridAxis::num_qubits).sum();
        let mut next = offset;
        for (j, axis) in noise_axes.iter().enumerate() {
            let n = axis.num_qubits();
            registers.push(Register {
                name: format!("noise{j}"),
                role: RegisterRole::Noise,
                dimension: j,
                qubits: (next..next + n).collect(),
                axis: Some(*axis),
            });
            next += n;
        }
        Self::new(registers)
    }

    /// State registers followed by `coins_per_dim` single-qubit coins per dimension.
    pub fn walk(state_axes: &[GridAxis], coins_per_dim: usize) -> Result<Self> {
        let mut registers = Self::state_registers(state_axes, 0);
        let mut next: usize = state_axes.iter().map(GridAxis::num_qubits).sum();
        for j in 0..state_axes.len() {
            for c in 0..coins_per_dim {
                registers.push(Register {
                    name: format!("coin{j}_{c}"),
                    role: RegisterRole::Coin,
                    dimension: j,
                    qubits: vec![next],
                    axis: None,
                });
                next += 1;
            }
        }
        Self::new(registers)
    }

    fn state_registers(axes: &[GridAxis], mut next: usize) -> Vec<Register> {
        axes.iter()
            .enumerate()
            .map(|(j, axis)| {
                let n = axis.num_qubits();
                let r = Register {
                    name: format!("state{j}"),
                    role: RegisterRole::State,
                    dimension: j,
                    qubits: (next..next + n).collect(),
                    axis: Some(*axis),
                };
                next += n;
                r
            })
            .collect()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn find(&self, role: RegisterRole, dimension: usize) -> Option<&Register> {
        self.registers.iter().find(|r| r.role == role && r.dimension == dimension)
    }

    pub fn require(&self, role: RegisterRole, dimension: usize) -> Result<&Register> {
        self.find(role, dimension)
            .ok_or_else(|| Error::Layout(format!("no {role:?} register for dimension {dimension}")))
    }

    pub fn coins(&self, dimension: usize) -> impl Iterator<Item = &Register> {
        self.registers.iter().filter(move |r| r.role == RegisterRole::Coin && r.dimension == dimension)
    }

    /// All qubits of registers with `role`, in dimension order.
    pub fn qubits_of(&self, role: RegisterRole) -> Vec<usize> {
        let mut regs: Vec<&Register> = self.registers.iter().filter(|r| r.role == role).collect();
        regs.sort_by_key(|r| r.dimension);
        regs.into_iter().flat_map(|r| r.qubits.iter().copied()).collect()
    }

    pub fn num_dims(&self) -> usize {
        self.registers.iter().filter(|r| r.role == RegisterRole::State).count()
    }
}

/// Product state `sqrt(p_noise(m)) sqrt(p_state(l)) |m>|l>` with real nonnegative amplitudes.
pub fn load_product_state(
    layout: &RegisterLayout,
    state: &PointMassDensity,
    noise: &PointMassDensity,
) -> Result<Statevector> {
    let state_q = layout.qubits_of(RegisterRole::State);
    let noise_q = layout.qubits_of(RegisterRole::Noise);
    for (what, d, q) in [("state", state, &state_q), ("noise", noise, &noise_q)] {
        if d.total_qubits() != q.len() {
            return Err(Error::Layout(format!(
                "{what} density spans {} qubits but the layout provides {}",
                d.total_qubits(),
                q.len()
            )));
        }
    }
    if state_q.len() + noise_q.len() != layout.num_qubits() {
        return Err(Error::Layout("layout has registers beyond state and noise".into()));
    }
    for d in [state, noise] {
        let sum: f64 = d.weights().iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL || d.weights().iter().any(|&w| w < 0.0) {
            return Err(Error::Validation(format!("density not normalized (sum {sum})")));
        }
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << layout.num_qubits()];
    let state_amp: Vec<(usize, f64)> = support_amplitudes(state, &state_q);
    for (m, &pw) in noise.weights().iter().enumerate() {
        if pw == 0.0 {
            continue;
        }
        let base = deposit_bits(m, &noise_q);
        let sw = pw.sqrt();
        for &(idx, sa) in &state_amp {
            amplitudes[base | idx] = Complex64::new(sw * sa, 0.0);
        }
    }
    Ok(Statevector { num_qubits: layout.num_qubits(), amplitudes })
}

/// Loads a single density into `register` of an otherwise `|0>` statevector.
pub fn load_density(num_qubits: usize, register: &[usize], density: &PointMassDensity) -> Result<Statevector> {
    check_width(num_qubits)?;
    check_qubit_list(register, num_qubits)?;
    if density.total_qubits() != register.len() {
        return Err(Error::Layout(format!(
            "density spans {} qubits but the register has {}",
            density.total_qubits(),
            register.len()
        )));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
    for (idx, a) in support_amplitudes(density, register) {
        amplitudes[idx] = Complex64::new(a, 0.0);
    }
    Ok(Statevector { num_qubits, amplitudes })
}

fn support_amplitudes(d: &PointMassDensity, qubits: &[usize]) -> Vec<(usize, f64)> {
    d.weights()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(l, &w)| (deposit_bits(l, qubits), w.sqrt()))
        .collect()
}

/// Outcome counts from seeded sampling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotHistogram {
    pub counts: Vec<u64>,
    pub shots: u64,
    pub seed: u64,
}

impl ShotHistogram {
    /// Inverse-CDF sampling from `probs` on a ChaCha8 stream seeded with `seed`.
    pub fn draw(probs: &[f64], shots: u64, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::Validation("shots must be >= 1".into()));
        }
        if probs.is_empty() {
            return Err(Error::Validation("cannot sample from an empty distribution".into()));
        }
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in probs {
            acc += p;
            cdf.push(acc);
        }
        let total = acc;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = vec![0u64; probs.len()];
        for _ in 0..shots {
            let u: f64 = rng.gen::<f64>() * total;
            let k = cdf.partition_point(|&c| c <= u).min(probs.len() - 1);
            // skip zero-probability outcomes sitting at the end of a plateau
            let k = if probs[k] == 0.0 { last_nonzero_before(probs, k) } else { k };
            counts[k] += 1;
        }
        Ok(Self { counts, shots, seed })
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.shots as f64).collect()
    }

    pub fn tv_distance(&self, exact: &[f64]) -> f64 {
        crate::grid::tv_distance(&self.frequencies(), exact)
    }

    /// CSV `outcome_index,signed_value,count,frequency,exact_probability`.
    ///
    /// `signed_value` is the outcome read through `axis` (two's complement on
    /// signed axes), or the raw index when no axis is given.
    pub fn to_csv(&self, exact: &[f64], axis: Option<&GridAxis>) -> String {
        let mut out = String::from("outcome_index,signed_value,count,frequency,exact_probability\n");
        for (k, (&c, f)) in self.counts.iter().zip(self.frequencies()).enumerate() {
            let value = match axis {
                Some(a) if k < a.len() => a.coordinate(k),
                _ => k as f64,
            };
            let p = exact.get(k).copied().unwrap_or(0.0);
            out.push_str(&format!("{k},{value},{c},{},{}\n", format_sig12(f), format_sig12(p)));
        }
        out
    }
}

fn last_nonzero_before(probs: &[f64], k: usize) -> usize {
    (0..k).rev().find(|&i| probs[i] > 0.0).unwrap_or(k)
}
