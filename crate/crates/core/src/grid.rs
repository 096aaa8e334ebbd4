//! Rectangular grids, point-mass densities and the index maps between
//! continuous coordinates and register indices.
//!
//! Every axis holds exactly `2^n` cells. An unsigned axis maps grid point
//! `xi_min + i * delta` to index `i`. A signed axis holds the points
//! `s * delta` for `s` in `[-2^(n-1), 2^(n-1) - 1]` and stores them at the
//! two's-complement index `s mod 2^n`, so a density on a signed axis is
//! already laid out the way a register holds it.
//!
//! Multi-dimensional densities are flattened little-endian in dimension
//! order: dimension 0 varies fastest.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Sum-to-one tolerance for every constructed density.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Captured-mass fraction below which Gaussian discretization warns.
pub const TRUNCATION_WARN_MASS: f64 = 0.99;

/// Largest register width accepted for a single axis.
pub const MAX_AXIS_QUBITS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    xi_min: f64,
    delta: f64,
    num_qubits: usize,
    signed: bool,
}

impl fmt::Display for GridAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = if self.signed { "signed" } else { "unsigned" };
        write!(f, "{kind} axis(xi_min={}, delta={}, n={})", self.xi_min, self.delta, self.num_qubits)
    }
}

impl GridAxis {
    /// Unsigned axis with grid points `xi_min + i * delta`, `i < 2^num_qubits`.
    pub fn new(xi_min: f64, delta: f64, num_qubits: usize) -> Result<Self> {
        Self::check(delta, num_qubits)?;
        if !xi_min.is_finite() {
            return Err(Error::Validation(format!("xi_min must be finite, got {xi_min}")));
        }
        Ok(Self { xi_min, delta, num_qubits, signed: false })
    }

    /// Two's-complement axis with grid points `s * delta`.
    pub fn signed(delta: f64, num_qubits: usize) -> Result<Self> {
        Self::check(delta, num_qubits)?;
        let half = (1i64 << (num_qubits - 1)) as f64;
        Ok(Self { xi_min: -half * delta, delta, num_qubits, signed: true })
    }

    fn check(delta: f64, num_qubits: usize) -> Result<()> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Validation(format!("axis spacing must be > 0, got {delta}")));
        }
        if num_qubits == 0 || num_qubits > MAX_AXIS_QUBITS {
            return Err(Error::Validation(format!(
                "axis qubit count must be in 1..={MAX_AXIS_QUBITS}, got {num_qubits}"
            )));
        }
        Ok(())
    }

    pub fn xi_min(&self) -> f64 {
        self.xi_min
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    /// Number of cells, `2^num_qubits`.
    pub fn len(&self) -> usize {
        1usize << self.num_qubits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Same spacing and width; signedness and offset may differ.
    pub fn compatible_with(&self, other: &GridAxis) -> bool {
        self.num_qubits == other.num_qubits
            && (self.delta - other.delta).abs() <= 1e-12 * self.delta.abs().max(other.delta.abs())
    }

    /// Grid coordinate stored at register index `index`.
    pub fn coordinate(&self, index: usize) -> f64 {
        if self.signed {
            self.decode_unchecked(index) as f64 * self.delta
        } else {
            self.xi_min + index as f64 * self.delta
        }
    }

    /// Lower and upper edge of the region covered by the whole axis.
    pub fn bounds(&self) -> (f64, f64) {
        let lo = self.xi_min - 0.5 * self.delta;
        (lo, lo + self.len() as f64 * self.delta)
    }

    /// Fractional position of `coordinate` in sorted cell order (0 at the lowest point).
    pub fn position(&self, coordinate: f64) -> f64 {
        (coordinate - self.xi_min) / self.delta
    }

    /// Register index of the cell at sorted position `pos` (`pos < len()`).
    pub fn index_at_position(&self, pos: usize) -> usize {
        debug_assert!(pos < self.len());
        if self.signed {
            let half = 1usize << (self.num_qubits - 1);
            (pos + half) & (self.len() - 1)
        } else {
            pos
        }
    }

    /// Affine map `round((coordinate - xi_min) / delta)` for unsigned axes.
    ///
    /// Ties round up. A coordinate farther than `delta / 2` from every grid
    /// point is rejected, not clamped.
    pub fn index_of(&self, coordinate: f64) -> Result<usize> {
        if self.signed {
            return Err(Error::Validation(format!(
                "index_of requires an unsigned axis, got {self}; use locate or signed_encode"
            )));
        }
        self.sorted_position(coordinate)
    }

    /// Register index of the cell holding `coordinate`, for either axis kind.
    pub fn locate(&self, coordinate: f64) -> Result<usize> {
        self.sorted_position(coordinate).map(|p| self.index_at_position(p))
    }

    fn sorted_position(&self, coordinate: f64) -> Result<usize> {
        let (lo, hi) = self.bounds();
        let t = (self.position(coordinate) + 0.5).floor();
        if !coordinate.is_finite() || t < 0.0 || t >= self.len() as f64 {
            return Err(Error::Range(format!("coordinate {coordinate} outside {self}: must lie in [{lo}, {hi})")));
        }
        Ok(t as usize)
    }

    fn signed_bounds(&self) -> (i64, i64) {
        let half = 1i64 << (self.num_qubits - 1);
        (-half, half - 1)
    }

    /// Two's-complement register index of a signed grid index.
    pub fn signed_encode(&self, signed_index: i64) -> Result<usize> {
        if !self.signed {
            return Err(Error::Validation(format!("signed_encode requires a signed axis, got {self}")));
        }
        let (lo, hi) = self.signed_bounds();
        if signed_index < lo || signed_index > hi {
            return Err(Error::Range(format!("signed index {signed_index} outside [{lo}, {hi}] of {self}")));
        }
        Ok(signed_index.rem_euclid(self.len() as i64) as usize)
    }

    /// Inverse of [`GridAxis::signed_encode`].
    pub fn signed_decode(&self, unsigned_index: usize) -> Result<i64> {
        if !self.signed {
            return Err(Error::Validation(format!("signed_decode requires a signed axis, got {self}")));
        }
        if unsigned_index >= self.len() {
            return Err(Error::Range(format!(
                "register index {unsigned_index} outside [0, {}] of {self}",
                self.len() - 1
            )));
        }
        Ok(self.decode_unchecked(unsigned_index))
    }

    fn decode_unchecked(&self, u: usize) -> i64 {
        let half = 1usize << (self.num_qubits - 1);
        if u < half {
            u as i64
        } else {
            u as i64 - self.len() as i64
        }
    }
}

/// Nonnegative weights on a rectangular grid summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointMassDensity {
    axes: Vec<GridAxis>,
    weights: Vec<f64>,
}

pub(crate) fn grid_size(axes: &[GridAxis]) -> usize {
    axes.iter().map(GridAxis::len).product()
}

impl PointMassDensity {
    /// Validates length, sign and normalization of `weights`.
    pub fn new(axes: Vec<GridAxis>, weights: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Validation("a density needs at least one axis".into()));
        }
        let total_qubits: usize = axes.iter().map(GridAxis::num_qubits).sum();
        if total_qubits > MAX_AXIS_QUBITS {
            return Err(Error::Validation(format!(
                "grid of {total_qubits} qubits exceeds the {MAX_AXIS_QUBITS}-qubit limit"
            )));
        }
        let size = grid_size(&axes);
        if weights.len() != size {
            return Err(Error::Validation(format!("expected {size} weights for the grid, got {}", weights.len())));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Validation(format!("weight {i} is {w}, must be finite and >= 0")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Validation(format!("weights sum to {sum}, expected 1 within {NORMALIZATION_TOL:e}")));
        }
        Ok(Self { axes, weights })
    }

    /// Scales nonnegative `weights` to unit mass.
    pub fn normalized(axes: Vec<GridAxis>, mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(Error::Validation(format!("cannot normalize weights with total {sum}")));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Self::new(axes, weights)
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn num_dims(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_qubits(&self) -> usize {
        self.axes.iter().map(GridAxis::num_qubits).sum()
    }

    pub fn flat_index(&self, indices: &[usize]) -> usize {
        flat_index(&self.axes, indices)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        multi_index(&self.axes, flat)
    }

    /// Grid coordinates of the cell at `flat`.
    pub fn coordinates(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().zip(&self.axes).map(|(&i, a)| a.coordinate(i)).collect()
    }

    /// Weighted mean of the grid coordinates, per dimension.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.num_dims()];
        for (flat, w) in self.weights.iter().enumerate() {
            for (acc, c) in m.iter_mut().zip(self.coordinates(flat)) {
                *acc += w * c;
            }
        }
        m
    }

    /// Per-dimension variance about [`PointMassDensity::mean`].
    pub fn variance(&self) -> Vec<f64> {
        let mean = self.mean();
        let mut v = vec![0.0; self.num_dims()];
        for (flat, w) in self.weights.iter().enumerate() {
            for ((acc, c), mu) in v.iter_mut().zip(self.coordinates(flat)).zip(&mean) {
                *acc += w * (c - mu) * (c - mu);
            }
        }
        v
    }

    /// Flat index of the largest weight (first on ties).
    pub fn argmax(&self) -> usize {
        self.weights
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &w)| if w > best.1 { (i, w) } else { best })
            .0
    }

    /// CSV with header `flat_index,coord_dim0,...,weight`; zero cells only when `dense`.
    pub fn to_csv(&self, dense: bool) -> String {
        let mut out = String::from("flat_index");
        for d in 0..self.num_dims() {
            out.push_str(&format!(",coord_dim{d}"));
        }
        out.push_str(",weight\n");
        for (flat, &w) in self.weights.iter().enumerate() {
            if !dense && w == 0.0 {
                continue;
            }
            out.push_str(&flat.to_string());
            for c in self.coordinates(flat) {
                out.push_str(&format!(",{c}"));
            }
            out.push_str(&format!(",{}\n", format_sig12(w)));
        }
        out
    }
}

/// Formats a value at 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

pub(crate) fn flat_index(axes: &[GridAxis], indices: &[usize]) -> usize {
    debug_assert_eq!(axes.len(), indices.len());
    let mut flat = 0;
    let mut stride = 1;
    for (a, &i) in axes.iter().zip(indices) {
        flat += i * stride;
        stride *= a.len();
    }
    flat
}

pub(crate) fn multi_index(axes: &[GridAxis], mut flat: usize) -> Vec<usize> {
    axes.iter()
        .map(|a| {
            let i = flat % a.len();
            flat /= a.len();
            i
        })
        .collect()
}

fn check_dims(axes: &[GridAxis], n: usize, what: &str) -> Result<()> {
    if axes.len() != n {
        return Err(Error::Validation(format!("{what} has {n} components but the grid has {} axes", axes.len())));
    }
    Ok(())
}

fn locate_point(axes: &[GridAxis], point: &[f64]) -> Result<usize> {
    check_dims(axes, point.len(), "grid point")?;
    let idx = axes.iter().zip(point).map(|(a, &c)| a.locate(c)).collect::<Result<Vec<_>>>()?;
    Ok(flat_index(axes, &idx))
}

/// Mass of a diagonal Gaussian inside the region covered by `axes`.
pub fn gaussian_captured_mass(axes: &[GridAxis], mean: &[f64], std: &[f64]) -> Result<f64> {
    check_dims(axes, mean.len(), "mean")?;
    check_dims(axes, std.len(), "std")?;
    let mut mass = 1.0;
    for ((a, &mu), &s) in axes.iter().zip(mean).zip(std) {
        let normal =
            Normal::new(mu, s).map_err(|e| Error::Validation(format!("invalid Gaussian N({mu}, {s}^2): {e}")))?;
        let (lo, hi) = a.bounds();
        mass *= normal.cdf(hi) - normal.cdf(lo);
    }
    Ok(mass)
}

/// Gaussian pdf evaluated at every grid point, renormalized to unit mass.
///
/// Logs a warning when less than 99% of the analytic mass falls inside the grid.
pub fn discretize_gaussian(axes: &[GridAxis], mean: &[f64], std: &[f64]) -> Result<PointMassDensity> {
    check_dims(axes, mean.len(), "mean")?;
    check_dims(axes, std.len(), "std")?;
    if let Some(s) = std.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::Validation(format!("standard deviations must be > 0, got {s}")));
    }
    let captured = gaussian_captured_mass(axes, mean, std)?;
    if captured < TRUNCATION_WARN_MASS {
        log::warn!(
            "grid captures only {:.4}% of N({mean:?}, diag {std:?}^2); discretization renormalized",
            100.0 * captured
        );
    }
    let per_axis: Vec<Vec<f64>> = axes
        .iter()
        .zip(mean)
        .zip(std)
        .map(|((a, &mu), &s)| {
            let half_z2: Vec<f64> = (0..a.len()).map(|i| 0.5 * ((a.coordinate(i) - mu) / s).powi(2)).collect();
            // exponents relative to the nearest point; the constant cancels on renormalization
            let floor = half_z2.iter().copied().fold(f64::INFINITY, f64::min);
            half_z2.iter().map(|e| (floor - e).exp()).collect()
        })
        .collect();
    let weights = (0..grid_size(axes))
        .map(|flat| multi_index(axes, flat).iter().zip(&per_axis).map(|(&i, w)| w[i]).product())
        .collect();
    PointMassDensity::normalized(axes.to_vec(), weights)
}

/// Unit mass at one grid point.
pub fn delta_density(axes: &[GridAxis], grid_point: &[f64]) -> Result<PointMassDensity> {
    let flat = locate_point(axes, grid_point)?;
    let mut weights = vec![0.0; grid_size(axes)];
    weights[flat] = 1.0;
    PointMassDensity::new(axes.to_vec(), weights)
}

/// Density with the given weights at the listed grid points, zero elsewhere.
pub fn tabulated_density(axes: &[GridAxis], support: &[Vec<f64>], weights: &[f64]) -> Result<PointMassDensity> {
    if support.len() != weights.len() {
        return Err(Error::Validation(format!("{} support points but {} weights", support.len(), weights.len())));
    }
    let mut out = vec![0.0; grid_size(axes)];
    let mut seen = vec![false; out.len()];
    for (point, &w) in support.iter().zip(weights) {
        let flat = locate_point(axes, point)?;
        if seen[flat] {
            return Err(Error::Validation(format!("support point {point:?} listed twice")));
        }
        seen[flat] = true;
        out[flat] = w;
    }
    PointMassDensity::new(axes.to_vec(), out)
}

/// Serializable description of an unsigned axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub xi_min: f64,
    pub delta: f64,
    pub num_qubits: usize,
}

impl AxisSpec {
    pub fn build(&self) -> Result<GridAxis> {
        GridAxis::new(self.xi_min, self.delta, self.num_qubits)
    }

    /// Signed axis with the same spacing and width, for noise grids.
    pub fn build_signed(&self) -> Result<GridAxis> {
        GridAxis::signed(self.delta, self.num_qubits)
    }
}

/// Serializable density recipe: `gaussian`, `delta` or `table`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DensitySpec {
    Gaussian { mean: Vec<f64>, std: Vec<f64> },
    Delta { point: Vec<f64> },
    Table { support: Vec<Vec<f64>>, weights: Vec<f64> },
}

impl DensitySpec {
    pub fn build(&self, axes: &[GridAxis]) -> Result<PointMassDensity> {
        match self {
            DensitySpec::Gaussian { mean, std } => discretize_gaussian(axes, mean, std),
            DensitySpec::Delta { point } => delta_density(axes, point),
            DensitySpec::Table { support, weights } => tabulated_density(axes, support, weights),
        }
    }
}

/// Total-variation distance, half the L1 distance.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "tv_distance on vectors of different length");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
