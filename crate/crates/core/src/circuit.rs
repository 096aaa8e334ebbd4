//! Gate-level circuits, QFT constructors, decomposition to an elementary gate
//! set and resource accounting.
//!
//! Qubit `q` of a register list `r` carries significance `2^q` of the register
//! value, so `r[0]` is the least significant bit.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wrap into `(-period/2, period/2]`, for periods `2pi` (phases) or `4pi` (rotations).
fn canonical_angle(angle: f64, period: f64) -> f64 {
    let half = 0.5 * period;
    let mut a = angle % period;
    if a > half {
        a -= period;
    } else if a <= -half {
        a += period;
    }
    a
}

/// Canonical angle in `(-2pi, 2pi]` for phase-type gates.
fn phase_angle(angle: f64) -> f64 {
    angle % TAU
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Hadamard(usize),
    /// `diag(1, e^{i angle})`.
    Phase(usize, f64),
    RotY(usize, f64),
    RotZ(usize, f64),
    PauliX(usize),
    Cnot {
        control: usize,
        target: usize,
    },
    /// `diag(1, 1, 1, e^{i angle})` on (control, target); symmetric in its operands.
    ControlledPhase {
        control: usize,
        target: usize,
        angle: f64,
    },
    Swap(usize, usize),
}

impl Gate {
    pub fn phase(q: usize, angle: f64) -> Self {
        Gate::Phase(q, phase_angle(angle))
    }

    pub fn rot_y(q: usize, angle: f64) -> Self {
        Gate::RotY(q, canonical_angle(angle, 2.0 * TAU))
    }

    pub fn rot_z(q: usize, angle: f64) -> Self {
        Gate::RotZ(q, canonical_angle(angle, 2.0 * TAU))
    }

    pub fn cphase(control: usize, target: usize, angle: f64) -> Self {
        Gate::ControlledPhase { control, target, angle: phase_angle(angle) }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Hadamard(q) | Gate::Phase(q, _) | Gate::RotY(q, _) | Gate::RotZ(q, _) | Gate::PauliX(q) => {
                vec![q]
            }
            Gate::Cnot { control, target } | Gate::ControlledPhase { control, target, .. } => {
                vec![control, target]
            }
            Gate::Swap(a, b) => vec![a, b],
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Gate::Cnot { .. } | Gate::ControlledPhase { .. } | Gate::Swap(..) => 2,
            _ => 1,
        }
    }

    /// Member of the elementary set {1Q rotations, H, X, CNOT}.
    pub fn is_elementary(&self) -> bool {
        !matches!(self, Gate::ControlledPhase { .. } | Gate::Swap(..))
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Phase(_, a) | Gate::RotY(_, a) | Gate::RotZ(_, a) => Some(a),
            Gate::ControlledPhase { angle, .. } => Some(angle),
            _ => None,
        }
    }

    pub fn adjoint(&self) -> Gate {
        match *self {
            Gate::Phase(q, a) => Gate::phase(q, -a),
            Gate::RotY(q, a) => Gate::rot_y(q, -a),
            Gate::RotZ(q, a) => Gate::rot_z(q, -a),
            Gate::ControlledPhase { control, target, angle } => Gate::cphase(control, target, -angle),
            g => g,
        }
    }

    pub fn mnemonic(&self) -> &'static str {
        match self {
            Gate::Hadamard(_) => "H",
            Gate::Phase(..) => "P",
            Gate::RotY(..) => "RY",
            Gate::RotZ(..) => "RZ",
            Gate::PauliX(_) => "X",
            Gate::Cnot { .. } => "CX",
            Gate::ControlledPhase { .. } => "CP",
            Gate::Swap(..) => "SWAP",
        }
    }

    fn validate(&self, num_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        if let Some(q) = qs.iter().find(|&&q| q >= num_qubits) {
            return Err(Error::Construction(format!(
                "{self} addresses qubit {q} outside a {num_qubits}-qubit circuit"
            )));
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::Construction(format!("{self} repeats operand {}", qs[0])));
        }
        if let Some(a) = self.angle() {
            if !a.is_finite() {
                return Err(Error::Construction(format!("{} angle must be finite", self.mnemonic())));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mnemonic())?;
        for q in self.qubits() {
            write!(f, " {q}")?;
        }
        if let Some(a) = self.angle() {
            write!(f, " {a:?}")?;
        }
        Ok(())
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::Construction(format!("cannot parse gate line `{line}`"));
        let mut it = line.split_whitespace();
        let name = it.next().ok_or_else(bad)?;
        let rest: Vec<&str> = it.collect();
        let q = |i: usize| -> Result<usize> { rest.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let a = |i: usize| -> Result<f64> { rest.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let (gate, arity) = match name {
            "H" => (Gate::Hadamard(q(0)?), 1),
            "X" => (Gate::PauliX(q(0)?), 1),
            "P" => (Gate::phase(q(0)?, a(1)?), 2),
            "RY" => (Gate::rot_y(q(0)?, a(1)?), 2),
            "RZ" => (Gate::rot_z(q(0)?, a(1)?), 2),
            "CX" => (Gate::Cnot { control: q(0)?, target: q(1)? }, 2),
            "CP" => (Gate::cphase(q(0)?, q(1)?, a(2)?), 3),
            "SWAP" => (Gate::Swap(q(0)?, q(1)?), 2),
            _ => return Err(bad()),
        };
        if rest.len() != arity {
            return Err(bad());
        }
        Ok(gate)
    }
}

/// Ordered gate list on a fixed number of qubits.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

/// QFT construction switches.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QftOptions {
    /// Omit the final register-reversing swaps; the Fourier index is then bit-reversed.
    pub elide_swaps: bool,
    /// Drop controlled-phase gates with `|angle| < prune_angle` (approximate QFT).
    pub prune_angle: Option<f64>,
}

impl QftOptions {
    pub(crate) fn keeps(&self, angle: f64) -> bool {
        self.prune_angle.is_none_or(|eps| angle.abs() >= eps)
    }
}

fn check_register(register: &[usize]) -> Result<()> {
    if register.is_empty() {
        return Err(Error::Construction("register must be nonempty".into()));
    }
    for (i, q) in register.iter().enumerate() {
        if register[..i].contains(q) {
            return Err(Error::Construction(format!("duplicate qubit {q} in register {register:?}")));
        }
    }
    Ok(())
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, gates: Vec::new() }
    }

    pub fn from_gates(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(num_qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    /// Appends `other`, widening this circuit if needed.
    pub fn append(&mut self, other: &Circuit) -> &mut Self {
        self.num_qubits = self.num_qubits.max(other.num_qubits);
        self.gates.extend_from_slice(&other.gates);
        self
    }

    /// Same circuit on a wider register.
    pub fn widened(mut self, num_qubits: usize) -> Result<Self> {
        if num_qubits < self.num_qubits {
            return Err(Error::Construction(format!(
                "cannot narrow a {}-qubit circuit to {num_qubits}",
                self.num_qubits
            )));
        }
        self.num_qubits = num_qubits;
        Ok(self)
    }

    /// Reversed gate order with every gate inverted.
    pub fn adjoint(&self) -> Circuit {
        Circuit { num_qubits: self.num_qubits, gates: self.gates.iter().rev().map(Gate::adjoint).collect() }
    }

    /// QFT on `register`: `|k> -> sum_j e^{2 pi i jk / 2^n} |j> / sqrt(2^n)`.
    pub fn qft(register: &[usize]) -> Result<Circuit> {
        Self::qft_with(register, &QftOptions::default())
    }

    pub fn inverse_qft(register: &[usize]) -> Result<Circuit> {
        Self::inverse_qft_with(register, &QftOptions::default())
    }

    pub fn qft_with(register: &[usize], opts: &QftOptions) -> Result<Circuit> {
        check_register(register)?;
        let n = register.len();
        let width = register.iter().max().map_or(0, |m| m + 1);
        let mut c = Circuit::new(width);
        for i in (0..n).rev() {
            c.push(Gate::Hadamard(register[i]))?;
            for j in (0..i).rev() {
                let angle = PI / (1u64 << (i - j)) as f64;
                if opts.keeps(angle) {
                    c.push(Gate::cphase(register[j], register[i], angle))?;
                }
            }
        }
        if !opts.elide_swaps {
            for k in 0..n / 2 {
                c.push(Gate::Swap(register[k], register[n - 1 - k]))?;
            }
        }
        Ok(c)
    }

    pub fn inverse_qft_with(register: &[usize], opts: &QftOptions) -> Result<Circuit> {
        Ok(Self::qft_with(register, opts)?.adjoint())
    }

    /// Rewrites into {1Q rotations, H, X, CNOT}; action preserved up to global phase.
    ///
    /// `CP(t)` becomes `RZ(t/2) c; RZ(t/2) t; CX; RZ(-t/2) t; CX` and `SWAP` three CNOTs.
    pub fn decompose(&self) -> Circuit {
        let mut gates = Vec::with_capacity(self.gates.len() * 3);
        for g in &self.gates {
            match *g {
                Gate::ControlledPhase { control, target, angle } => {
                    let half = 0.5 * angle;
                    gates.push(Gate::rot_z(control, half));
                    gates.push(Gate::rot_z(target, half));
                    gates.push(Gate::Cnot { control, target });
                    gates.push(Gate::rot_z(target, -half));
                    gates.push(Gate::Cnot { control, target });
                }
                Gate::Swap(a, b) => {
                    gates.push(Gate::Cnot { control: a, target: b });
                    gates.push(Gate::Cnot { control: b, target: a });
                    gates.push(Gate::Cnot { control: a, target: b });
                }
                g => gates.push(g),
            }
        }
        Circuit { num_qubits: self.num_qubits, gates }
    }

    pub fn swap_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Swap(..))).count()
    }

    /// One gate per line, `GATE q0 [q1] [angle]`.
    pub fn to_text(&self) -> String {
        let mut out = format!("QUBITS {}\n", self.num_qubits);
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().unwrap_or_default();
        let num_qubits = header
            .strip_prefix("QUBITS ")
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| Error::Construction(format!("bad circuit header `{header}`")))?;
        let mut c = Circuit::new(num_qubits);
        for line in lines {
            c.push(line.parse()?)?;
        }
        Ok(c)
    }
}

/// Gate counts by arity and ASAP depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ResourceReport {
    #[serde(rename = "oneq")]
    pub one_qubit_gates: usize,
    #[serde(rename = "twoq")]
    pub two_qubit_gates: usize,
    pub depth: usize,
}

impl ResourceReport {
    pub fn total_gates(&self) -> usize {
        self.one_qubit_gates + self.two_qubit_gates
    }
}

/// Counts and depth of an already-decomposed circuit.
///
/// Depth is greedy layering: a gate finishes at one plus the latest finish
/// time among its operands.
pub fn resource_report(circuit: &Circuit) -> Result<ResourceReport> {
    let mut busy = vec![0usize; circuit.num_qubits()];
    let mut report = ResourceReport::default();
    for g in circuit.gates() {
        if !g.is_elementary() {
            return Err(Error::Precondition(format!(
                "resource_report needs elementary gates, found {g}; decompose first"
            )));
        }
        let qs = g.qubits();
        let t = 1 + qs.iter().map(|&q| busy[q]).max().unwrap_or(0);
        qs.iter().for_each(|&q| busy[q] = t);
        match g.arity() {
            1 => report.one_qubit_gates += 1,
            _ => report.two_qubit_gates += 1,
        }
    }
    report.depth = busy.into_iter().max().unwrap_or(0);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles_canonicalized() {
        let g = Gate::cphase(0, 1, 3.0 * TAU + 0.5);
        assert!((g.angle().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(Gate::phase(0, -TAU).angle(), Some(0.0));
        let r = Gate::rot_z(0, 5.0 * PI).angle().unwrap();
        assert!(r > -TAU && r <= TAU && (r - PI).abs() < 1e-12);
        for a in [-20.0, -TAU, -1.0, 0.0, TAU, 13.0] {
            for g in [Gate::phase(0, a), Gate::rot_y(0, a), Gate::rot_z(0, a), Gate::cphase(0, 1, a)] {
                let x = g.angle().unwrap();
                assert!(x > -TAU && x <= TAU, "{g}");
            }
        }
    }

    #[test]
    fn construction_errors() {
        assert!(Circuit::qft(&[0, 1, 0]).is_err());
        assert!(Circuit::qft(&[]).is_err());
        let mut c = Circuit::new(2);
        assert!(c.push(Gate::Cnot { control: 1, target: 1 }).is_err());
        assert!(c.push(Gate::Hadamard(2)).is_err());
        assert!(c.push(Gate::phase(0, f64::NAN)).is_err());
    }

    #[test]
    fn qft_gate_census() {
        let c = Circuit::qft(&[0, 1, 2, 3]).unwrap();
        let h = c.gates().iter().filter(|g| matches!(g, Gate::Hadamard(_))).count();
        let cp = c.gates().iter().filter(|g| matches!(g, Gate::ControlledPhase { .. })).count();
        assert_eq!((h, cp, c.swap_count()), (4, 6, 2));
        assert_eq!(Circuit::qft(&[3]).unwrap().gates(), &[Gate::Hadamard(3)]);
        assert_eq!(Circuit::inverse_qft(&[0]).unwrap().gates(), &[Gate::Hadamard(0)]);
    }

    #[test]
    fn decompose_counts() {
        let cp = Circuit::from_gates(2, vec![Gate::cphase(0, 1, 0.3)]).unwrap().decompose();
        assert_eq!(resource_report(&cp).unwrap(), ResourceReport { one_qubit_gates: 3, two_qubit_gates: 2, depth: 4 });
        let h = Circuit::from_gates(1, vec![Gate::Hadamard(0)]).unwrap();
        assert_eq!(h.decompose(), h);

        // oracle: apply the rewrite rules to the census of the constructed gate list
        let qft = Circuit::qft(&[0, 1, 2, 3]).unwrap();
        let (mut oneq, mut twoq) = (0, 0);
        for g in qft.gates() {
            match g {
                Gate::ControlledPhase { .. } => {
                    oneq += 3;
                    twoq += 2;
                }
                Gate::Swap(..) => twoq += 3,
                _ => oneq += 1,
            }
        }
        let r = resource_report(&qft.decompose()).unwrap();
        assert_eq!((r.one_qubit_gates, r.two_qubit_gates), (oneq, twoq));
        assert_eq!((oneq, twoq), (22, 18));
    }

    #[test]
    fn report_examples() {
        let c =
            Circuit::from_gates(2, vec![Gate::Hadamard(0), Gate::Cnot { control: 0, target: 1 }, Gate::Hadamard(1)])
                .unwrap();
        assert_eq!(resource_report(&c).unwrap(), ResourceReport { one_qubit_gates: 2, two_qubit_gates: 1, depth: 3 });
        let c = Circuit::from_gates(2, vec![Gate::Hadamard(0), Gate::Hadamard(1)]).unwrap();
        assert_eq!(resource_report(&c).unwrap().depth, 1);
        let c = Circuit::qft(&[0, 1]).unwrap();
        assert!(matches!(resource_report(&c), Err(Error::Precondition(_))));
        assert_eq!(resource_report(&Circuit::new(3)).unwrap(), ResourceReport::default());
    }

    #[test]
    fn depth_subadditive_and_counts_additive() {
        let a = Circuit::qft(&[0, 1, 2]).unwrap().decompose();
        let b = Circuit::inverse_qft(&[1, 2, 3]).unwrap().widened(4).unwrap().decompose();
        let mut ab = a.clone();
        ab.append(&b);
        let (ra, rb, rab) = (resource_report(&a).unwrap(), resource_report(&b).unwrap(), resource_report(&ab).unwrap());
        assert!(rab.depth <= ra.depth + rb.depth);
        assert_eq!(rab.one_qubit_gates, ra.one_qubit_gates + rb.one_qubit_gates);
        assert_eq!(rab.two_qubit_gates, ra.two_qubit_gates + rb.two_qubit_gates);
    }

    #[test]
    fn text_dump_round_trip() {
        let mut c = Circuit::qft(&[0, 1, 2]).unwrap();
        c.append(&Circuit::from_gates(3, vec![Gate::rot_y(1, 0.25), Gate::PauliX(2)]).unwrap());
        let text = c.to_text();
        assert!(text.starts_with("QUBITS 3\nH 2\nCP 1 2 1.5707963267948966\n"));
        assert_eq!(Circuit::from_text(&text).unwrap(), c);
        assert!(Circuit::from_text("QUBITS 2\nCX 0\n").is_err());
        assert!(Circuit::from_text("QUBITS 2\nFOO 0\n").is_err());
    }

    #[test]
    fn pruning_drops_small_angles() {
        let opts = QftOptions { elide_swaps: true, prune_angle: Some(PI / 4.0 + 1e-9) };
        let c = Circuit::qft_with(&[0, 1, 2, 3], &opts).unwrap();
        assert_eq!(c.swap_count(), 0);
        assert!(c.gates().iter().all(|g| g.angle().is_none_or(|a| a.abs() >= PI / 4.0)));
        assert_eq!(c.len(), 4 + 3);
    }
}
