//! Quantum diffusion: the per-dimension QFT (Draper) adder, the end-to-end
//! diffusion pipeline and the coin-flip quantum random walk baseline.
//!
//! The adder maps `|a>|b> -> |a>|b + a mod 2^n>` with `a` in the noise
//! register and `b` in the state register. It moves `b` into the Fourier
//! basis, applies the phase `e^{2 pi i a k / 2^n}` to Fourier component `k`
//! one qubit pair at a time, and transforms back. Signed noise offsets are
//! stored in two's complement, and modular addition of the encoded value
//! equals modular addition of the signed value, so the adder needs no sign
//! handling.
//!
//! The noise register is left entangled with the state register; readout
//! marginalizes it.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::circuit::{resource_report, Circuit, Gate, QftOptions, ResourceReport};
use crate::error::{Error, Result};
use crate::grid::{grid_size, multi_index, GridAxis, PointMassDensity};
use crate::prep::prepare_register;
use crate::statevector::{load_density, load_product_state, RegisterLayout, RegisterRole, ShotHistogram};

/// Default wraparound mass above which a diffusion result carries an aliasing warning.
pub const DEFAULT_ALIAS_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Qft,
    Qrw,
    Classical,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            Method::Qft => "qft",
            Method::Qrw => "qrw",
            Method::Classical => "classical",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionOptions {
    pub qft: QftOptions,
    pub alias_threshold: f64,
    /// Draw a shot histogram of the state register when set.
    pub shots: Option<u64>,
    pub seed: u64,
}

impl Default for DiffusionOptions {
    fn default() -> Self {
        Self { qft: QftOptions::default(), alias_threshold: DEFAULT_ALIAS_THRESHOLD, shots: None, seed: 0 }
    }
}

/// Resource reports for the preparation, adder and swap parts plus the whole circuit.
///
/// `adder` excludes the QFT swap networks, which are reported under `swaps`.
/// Counts add up to `total`; depths of the parts need not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ItemizedResources {
    pub state_prep: ResourceReport,
    pub adder: ResourceReport,
    pub swaps: ResourceReport,
    pub total: ResourceReport,
}

impl ItemizedResources {
    /// Itemizes `prep` followed by `body`.
    pub fn of(prep: &Circuit, body: &Circuit) -> Result<Self> {
        let width = prep.num_qubits().max(body.num_qubits());
        let filtered = |keep_swaps: bool| -> Result<Circuit> {
            let gates = body.gates().iter().copied().filter(|g| matches!(g, Gate::Swap(..)) == keep_swaps).collect();
            Ok(Circuit::from_gates(width, gates)?.decompose())
        };
        let mut full = prep.clone().widened(width)?;
        full.append(body);
        Ok(Self {
            state_prep: resource_report(&prep.decompose())?,
            adder: resource_report(&filtered(false)?)?,
            swaps: resource_report(&filtered(true)?)?,
            total: resource_report(&full.decompose())?,
        })
    }
}

/// Output of one diffusion run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffusionResult {
    pub method: Method,
    /// Predicted density `p(x_{k+1} | z^k)` on the state grid.
    pub prior_density: PointMassDensity,
    pub exact_marginal: Vec<f64>,
    pub histogram: Option<ShotHistogram>,
    pub resources: ItemizedResources,
    pub wraparound_mass: f64,
    pub warnings: Vec<String>,
}

fn check_shared_axes(state: &[GridAxis], noise: &[GridAxis]) -> Result<()> {
    if state.len() != noise.len() {
        return Err(Error::Validation(format!(
            "state grid has {} dimensions, noise grid {}",
            state.len(),
            noise.len()
        )));
    }
    for (j, (s, w)) in state.iter().zip(noise).enumerate() {
        if !s.compatible_with(w) {
            return Err(Error::Validation(format!("dimension {j}: {s} and {w} differ in spacing or width")));
        }
    }
    Ok(())
}

fn check_signed(noise: &[GridAxis]) -> Result<()> {
    if let Some(a) = noise.iter().find(|a| !a.is_signed()) {
        return Err(Error::Validation(format!("noise axes must be signed, got {a}")));
    }
    Ok(())
}

/// Draper adder for dimension `dim`: noise register added into the state register mod `2^n`.
pub fn draper_adder(layout: &RegisterLayout, dim: usize, opts: &QftOptions) -> Result<Circuit> {
    let state = &layout.require(RegisterRole::State, dim)?.qubits;
    let noise = &layout.require(RegisterRole::Noise, dim)?.qubits;
    if state.len() != noise.len() {
        return Err(Error::Layout(format!(
            "dimension {dim}: state register has {} qubits, noise register {}",
            state.len(),
            noise.len()
        )));
    }
    let n = state.len();
    let width = layout.num_qubits();
    let mut c = Circuit::qft_with(state, opts)?.widened(width)?;
    for s in 0..n {
        for t in 0..n - s {
            let angle = TAU / (1u64 << (n - s - t)) as f64;
            if !opts.keeps(angle) {
                continue;
            }
            let target = if opts.elide_swaps { state[n - 1 - t] } else { state[t] };
            c.push(Gate::cphase(noise[s], target, angle))?;
        }
    }
    c.append(&Circuit::inverse_qft_with(state, opts)?.widened(width)?);
    Ok(c)
}

/// Diffuses `advected` by `noise` with one Draper adder per dimension.
pub fn diffuse_qft(
    advected: &PointMassDensity,
    noise: &PointMassDensity,
    opts: &DiffusionOptions,
) -> Result<DiffusionResult> {
    check_shared_axes(advected.axes(), noise.axes())?;
    check_signed(noise.axes())?;
    let layout = RegisterLayout::diffusion(advected.axes(), noise.axes())?;
    let mut sv = load_product_state(&layout, advected, noise)?;

    let mut body = Circuit::new(layout.num_qubits());
    for j in 0..advected.num_dims() {
        body.append(&draper_adder(&layout, j, &opts.qft)?);
    }
    sv.apply_circuit(&body)?;

    let state_q = layout.qubits_of(RegisterRole::State);
    let noise_q = layout.qubits_of(RegisterRole::Noise);
    let exact_marginal = sv.marginal_probabilities(&state_q)?;
    let histogram = match opts.shots {
        Some(shots) => Some(ShotHistogram::draw(&exact_marginal, shots, opts.seed)?),
        None => None,
    };

    let mut prep = prepare_register(layout.num_qubits(), &state_q, advected.weights())?;
    prep.append(&prepare_register(layout.num_qubits(), &noise_q, noise.weights())?);
    let resources = ItemizedResources::of(&prep, &body)?;

    let wrap = wraparound_mass(advected, noise)?;
    finish(Method::Qft, advected, exact_marginal, histogram, resources, wrap, opts)
}

fn finish(
    method: Method,
    advected: &PointMassDensity,
    exact_marginal: Vec<f64>,
    histogram: Option<ShotHistogram>,
    resources: ItemizedResources,
    wraparound_mass: f64,
    opts: &DiffusionOptions,
) -> Result<DiffusionResult> {
    let prior_density = PointMassDensity::normalized(advected.axes().to_vec(), exact_marginal.clone())?;
    let mut warnings = Vec::new();
    if wraparound_mass > opts.alias_threshold {
        let w = format!(
            "aliasing: {wraparound_mass:.3e} of the mass wrapped around the register (threshold {:.1e})",
            opts.alias_threshold
        );
        log::warn!("{w}");
        warnings.push(w);
    }
    Ok(DiffusionResult { method, prior_density, exact_marginal, histogram, resources, wraparound_mass, warnings })
}

/// One walk step on dimension `dim`: Hadamard coin, coin-controlled `+1`,
/// anti-controlled `-1`, both as constant Draper adders with cyclic boundary.
pub fn qrw_step(layout: &RegisterLayout, dim: usize, coin: usize, opts: &QftOptions) -> Result<Circuit> {
    let state = &layout.require(RegisterRole::State, dim)?.qubits;
    if coin >= layout.num_qubits() {
        return Err(Error::Layout(format!("coin qubit {coin} outside the {}-qubit layout", layout.num_qubits())));
    }
    if let Some(r) = layout.registers().iter().find(|r| r.role != RegisterRole::Coin && r.qubits.contains(&coin)) {
        return Err(Error::Layout(format!("coin qubit {coin} overlaps data register {}", r.name)));
    }
    let width = layout.num_qubits();
    let n = state.len();
    let mut c = Circuit::new(width);
    c.push(Gate::Hadamard(coin))?;
    let shift = |c: &mut Circuit, sign: f64| -> Result<()> {
        c.append(&Circuit::qft_with(state, opts)?.widened(width)?);
        for t in 0..n {
            let angle = sign * TAU / (1u64 << (n - t)) as f64;
            if opts.keeps(angle) {
                let target = if opts.elide_swaps { state[n - 1 - t] } else { state[t] };
                c.push(Gate::cphase(coin, target, angle))?;
            }
        }
        c.append(&Circuit::inverse_qft_with(state, opts)?.widened(width)?);
        Ok(())
    };
    shift(&mut c, 1.0)?;
    c.push(Gate::PauliX(coin))?;
    shift(&mut c, -1.0)?;
    c.push(Gate::PauliX(coin))?;
    Ok(c)
}

/// `repeats` fresh-coin walk steps on every dimension of `advected`.
pub fn diffuse_qrw(advected: &PointMassDensity, repeats: usize, opts: &DiffusionOptions) -> Result<DiffusionResult> {
    if repeats == 0 {
        return Err(Error::Precondition("the walk needs at least one repeat".into()));
    }
    let needed = advected.total_qubits() + repeats * advected.num_dims();
    if needed > crate::statevector::MAX_QUBITS {
        return Err(Error::Layout(format!(
            "{repeats} coins per dimension need {needed} qubits, above the {}-qubit limit",
            crate::statevector::MAX_QUBITS
        )));
    }
    let layout = RegisterLayout::walk(advected.axes(), repeats)?;
    let state_q = layout.qubits_of(RegisterRole::State);
    let mut sv = load_density(layout.num_qubits(), &state_q, advected)?;

    let mut body = Circuit::new(layout.num_qubits());
    for j in 0..advected.num_dims() {
        let coins: Vec<usize> = layout.coins(j).map(|r| r.qubits[0]).collect();
        for coin in coins {
            body.append(&qrw_step(&layout, j, coin, &opts.qft)?);
        }
    }
    sv.apply_circuit(&body)?;

    let exact_marginal = sv.marginal_probabilities(&state_q)?;
    let histogram = match opts.shots {
        Some(shots) => Some(ShotHistogram::draw(&exact_marginal, shots, opts.seed)?),
        None => None,
    };
    let prep = prepare_register(layout.num_qubits(), &state_q, advected.weights())?;
    let resources = ItemizedResources::of(&prep, &body)?;
    let wrap = wrap_mass(advected, &binomial_offsets(advected.num_dims(), repeats))?;
    finish(Method::Qrw, advected, exact_marginal, histogram, resources, wrap, opts)
}

/// Binomial `+-1` walk kernel after `repeats` steps, per dimension, reduced
/// mod `2^n` onto signed axes matching `axes`.
pub fn binomial_kernel_density(axes: &[GridAxis], repeats: usize) -> Result<PointMassDensity> {
    let signed: Vec<GridAxis> =
        axes.iter().map(|a| GridAxis::signed(a.delta(), a.num_qubits())).collect::<Result<_>>()?;
    let per_axis: Vec<Vec<f64>> = signed
        .iter()
        .map(|a| {
            let len = a.len() as i64;
            let mut w = vec![0.0; a.len()];
            for (offset, p) in binomial_weights(repeats) {
                w[offset.rem_euclid(len) as usize] += p;
            }
            w
        })
        .collect();
    let weights = (0..grid_size(&signed))
        .map(|flat| multi_index(&signed, flat).iter().zip(&per_axis).map(|(&i, w)| w[i]).product())
        .collect();
    PointMassDensity::normalized(signed, weights)
}

fn binomial_weights(repeats: usize) -> Vec<(i64, f64)> {
    let mut out = Vec::with_capacity(repeats + 1);
    let mut coeff = 1.0f64;
    for k in 0..=repeats {
        // k steps up, repeats - k steps down
        out.push((2 * k as i64 - repeats as i64, coeff / 2f64.powi(repeats as i32)));
        coeff = coeff * (repeats - k) as f64 / (k + 1) as f64;
    }
    out
}

/// Unreduced signed offsets of the walk kernel on `dims` dimensions.
fn binomial_offsets(dims: usize, repeats: usize) -> Vec<(Vec<i64>, f64)> {
    let one = binomial_weights(repeats);
    let mut acc: Vec<(Vec<i64>, f64)> = vec![(Vec::new(), 1.0)];
    for _ in 0..dims {
        acc = acc
            .iter()
            .flat_map(|(offs, w)| {
                one.iter().map(move |&(o, p)| {
                    let mut v = offs.clone();
                    v.push(o);
                    (v, w * p)
                })
            })
            .collect();
    }
    acc
}

fn noise_offsets(noise: &PointMassDensity) -> Result<Vec<(Vec<i64>, f64)>> {
    check_signed(noise.axes())?;
    Ok(noise
        .weights()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(flat, &w)| {
            let offs = multi_index(noise.axes(), flat)
                .iter()
                .zip(noise.axes())
                .map(|(&u, a)| a.signed_decode(u).expect("index within axis"))
                .collect();
            (offs, w)
        })
        .collect())
}

fn wrap_mass(advected: &PointMassDensity, offsets: &[(Vec<i64>, f64)]) -> Result<f64> {
    let axes = advected.axes();
    let mut mass = 0.0;
    for (flat, &p) in advected.weights().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let idx = multi_index(axes, flat);
        for (offs, w) in offsets {
            let wraps =
                idx.iter().zip(offs).zip(axes).any(|((&i, &o), a)| !(0..a.len() as i64).contains(&(i as i64 + o)));
            if wraps {
                mass += p * w;
            }
        }
    }
    Ok(mass.clamp(0.0, 1.0))
}

/// Probability that the un-wrapped index sum leaves the register range in any dimension.
pub fn wraparound_mass(advected: &PointMassDensity, noise: &PointMassDensity) -> Result<f64> {
    check_shared_axes(advected.axes(), noise.axes())?;
    wrap_mass(advected, &noise_offsets(noise)?)
}
