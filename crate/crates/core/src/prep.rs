//! Preparation circuits for real nonnegative amplitude encodings.
//!
//! The diffusion pipeline loads amplitudes directly; these circuits exist so
//! the cost of preparing `sum_i sqrt(p_i) |i>` can be itemized next to the
//! adder. The construction splits probability mass one bit at a time from the
//! most significant qubit down, using uniformly controlled RY rotations
//! expanded into RY/CNOT ladders along a Gray code.

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::grid::NORMALIZATION_TOL;

/// Circuit taking `|0>` on `register` to `sum_i sqrt(probs[i]) |i>`.
///
/// A point mass compiles to X gates only.
pub fn prepare_register(num_qubits: usize, register: &[usize], probs: &[f64]) -> Result<Circuit> {
    let n = register.len();
    if probs.len() != 1usize << n {
        return Err(Error::Validation(format!("{} probabilities for a {n}-qubit register", probs.len())));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL || probs.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::Validation(format!("probabilities must be >= 0 and sum to 1, got {sum}")));
    }
    let mut c = Circuit::new(num_qubits);
    let nonzero: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] > 0.0).collect();
    if nonzero.len() == 1 {
        for (k, &q) in register.iter().enumerate() {
            if nonzero[0] >> k & 1 == 1 {
                c.push(Gate::PauliX(q))?;
            }
        }
        return Ok(c);
    }

    // level l fixes bit n-1-l; controls are the l bits above it
    for level in 0..n {
        let target = register[n - 1 - level];
        let controls: Vec<usize> = (0..level).map(|k| register[n - level + k]).collect();
        let block = 1usize << (n - level);
        let angles: Vec<f64> = (0..1usize << level)
            .map(|prefix| {
                let lo = prefix * block;
                let mass: f64 = probs[lo..lo + block].iter().sum();
                let zero_half: f64 = probs[lo..lo + block / 2].iter().sum();
                if mass <= 0.0 {
                    0.0
                } else {
                    2.0 * (zero_half / mass).clamp(0.0, 1.0).sqrt().acos()
                }
            })
            .collect();
        uniformly_controlled_ry(&mut c, &controls, target, &angles)?;
    }
    Ok(c)
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// RY(angles[v]) on `target` when the controls read `v` (bit k = controls[k]).
///
/// Expands to `2^k` RY and `2^k` CNOT gates for `k >= 1` controls.
pub fn uniformly_controlled_ry(c: &mut Circuit, controls: &[usize], target: usize, angles: &[f64]) -> Result<()> {
    let k = controls.len();
    if angles.len() != 1usize << k {
        return Err(Error::Construction(format!("{} angles for {k} controls", angles.len())));
    }
    if k == 0 {
        c.push(Gate::rot_y(target, angles[0]))?;
        return Ok(());
    }
    let m = 1usize << k;
    let scale = 1.0 / m as f64;
    for i in 0..m {
        // net rotation for control value v is sum_i (-1)^{|v & gray(i)|} theta_i
        let theta: f64 = angles
            .iter()
            .enumerate()
            .map(|(v, &a)| if (v & gray(i)).count_ones() % 2 == 0 { a } else { -a })
            .sum::<f64>()
            * scale;
        c.push(Gate::rot_y(target, theta))?;
        let flip = gray(i) ^ gray((i + 1) % m);
        let bit = flip.trailing_zeros() as usize;
        c.push(Gate::Cnot { control: controls[bit], target })?;
    }
    Ok(())
}
