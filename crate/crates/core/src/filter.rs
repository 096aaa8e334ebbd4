//! Classical grid-based filter: circular convolution oracle, advection with
//! multilinear spreading, Bayes measurement update and the predict/update
//! loop with a pluggable diffusion backend.
//!
//! The convolution is circular (indices wrap mod `2^n` per dimension) so it
//! matches the modular quantum adder exactly. Practical grid-based filters
//! usually want linear convolution with margin cells; use
//! [`crate::diffusion::wraparound_mass`] to see how much mass wrapped.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::diffusion::{binomial_kernel_density, diffuse_qft, diffuse_qrw, DiffusionOptions, ItemizedResources};
use crate::error::{Error, Result};
use crate::grid::{flat_index, grid_size, multi_index, tv_distance, AxisSpec, DensitySpec, GridAxis, PointMassDensity};

type Transition = dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync;
type Likelihood = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// `x_{k+1} = f(x_k, u_k) + w_k` with a gridded noise density.
pub struct DynamicsModel {
    transition: Box<Transition>,
    pub noise: PointMassDensity,
}

impl std::fmt::Debug for DynamicsModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DynamicsModel").field("noise", &self.noise).finish_non_exhaustive()
    }
}

impl DynamicsModel {
    pub fn new(
        transition: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        noise: PointMassDensity,
    ) -> Self {
        Self { transition: Box::new(transition), noise }
    }

    /// `f(x, u) = x + u`.
    pub fn identity(noise: PointMassDensity) -> Self {
        Self::new(|x, u| x.iter().enumerate().map(|(j, v)| v + u.get(j).copied().unwrap_or(0.0)).collect(), noise)
    }

    /// Diagonal affine map `f(x, u) = a * x + c + u`, componentwise.
    pub fn affine(a: Vec<f64>, c: Vec<f64>, noise: PointMassDensity) -> Self {
        Self::new(
            move |x, u| x.iter().enumerate().map(|(j, v)| a[j] * v + c[j] + u.get(j).copied().unwrap_or(0.0)).collect(),
            noise,
        )
    }

    pub fn transition(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        (self.transition)(x, u)
    }
}

/// Likelihood `p(z | x)`.
pub struct MeasurementModel {
    likelihood: Box<Likelihood>,
}

impl std::fmt::Debug for MeasurementModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeasurementModel").finish_non_exhaustive()
    }
}

impl MeasurementModel {
    pub fn new(likelihood: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { likelihood: Box::new(likelihood) }
    }

    /// Direct observation `z = x + v`, `v ~ N(0, diag(std^2))`.
    pub fn gaussian(std: Vec<f64>) -> Self {
        Self::new(move |z, x| {
            std.iter()
                .enumerate()
                .map(|(j, s)| {
                    let r = (z[j] - x[j]) / s;
                    (-0.5 * r * r).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
                })
                .product()
        })
    }

    pub fn flat() -> Self {
        Self::new(|_, _| 1.0)
    }

    pub fn likelihood(&self, z: &[f64], x: &[f64]) -> f64 {
        (self.likelihood)(z, x)
    }
}

fn check_convolvable(a: &PointMassDensity, b: &PointMassDensity) -> Result<()> {
    if a.num_dims() != b.num_dims() {
        return Err(Error::Validation(format!(
            "cannot convolve a {}-D density with a {}-D density",
            a.num_dims(),
            b.num_dims()
        )));
    }
    for (j, (x, y)) in a.axes().iter().zip(b.axes()).enumerate() {
        if !x.compatible_with(y) {
            return Err(Error::Validation(format!("dimension {j}: {x} and {y} differ in spacing or width")));
        }
    }
    Ok(())
}

/// `c[i] = sum_m a[(i - m) mod sizes] b[m]` by direct summation, on `a`'s axes.
///
/// `b` is indexed by register index, so a signed noise grid contributes its
/// two's-complement offsets.
pub fn convolve_circular(a: &PointMassDensity, b: &PointMassDensity) -> Result<PointMassDensity> {
    check_convolvable(a, b)?;
    let axes = a.axes();
    let mut out = vec![0.0; a.len()];
    let b_support: Vec<(Vec<usize>, f64)> =
        b.weights().iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(m, &w)| (multi_index(b.axes(), m), w)).collect();
    let mut idx = vec![0usize; axes.len()];
    for (l, &pa) in a.weights().iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        let li = multi_index(axes, l);
        for (mi, pb) in &b_support {
            for (j, axis) in axes.iter().enumerate() {
                idx[j] = (li[j] + mi[j]) & (axis.len() - 1);
            }
            out[flat_index(axes, &idx)] += pa * pb;
        }
    }
    PointMassDensity::normalized(axes.to_vec(), out)
}

/// Same convolution through multidimensional DFTs.
pub fn convolve_circular_fft(a: &PointMassDensity, b: &PointMassDensity) -> Result<PointMassDensity> {
    check_convolvable(a, b)?;
    let axes = a.axes();
    let mut fa: Vec<Complex64> = a.weights().iter().map(|&w| Complex64::new(w, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.weights().iter().map(|&w| Complex64::new(w, 0.0)).collect();
    let mut planner = FftPlanner::new();
    fft_nd(&mut planner, &mut fa, axes, false);
    fft_nd(&mut planner, &mut fb, axes, false);
    fa.iter_mut().zip(&fb).for_each(|(x, y)| *x *= y);
    fft_nd(&mut planner, &mut fa, axes, true);
    let scale = 1.0 / a.len() as f64;
    let out = fa.iter().map(|z| (z.re * scale).max(0.0)).collect();
    PointMassDensity::normalized(axes.to_vec(), out)
}

fn fft_nd(planner: &mut FftPlanner<f64>, data: &mut [Complex64], axes: &[GridAxis], inverse: bool) {
    let mut stride = 1;
    for axis in axes {
        let len = axis.len();
        let fft = if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) };
        let mut line = vec![Complex64::new(0.0, 0.0); len];
        let block = stride * len;
        for base in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + offset + k * stride];
                }
                fft.process(&mut line);
                for (k, v) in line.iter().enumerate() {
                    data[base + offset + k * stride] = *v;
                }
            }
        }
        stride = block;
    }
}

/// Advected density plus the mass that left the target grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Advection {
    pub density: PointMassDensity,
    pub lost_mass: f64,
}

/// Transports every grid point through the dynamics, then spreads its mass
/// multilinearly onto the `2^d` enclosing cells of `target_axes`.
pub fn advect(
    posterior: &PointMassDensity,
    model: &DynamicsModel,
    control: &[f64],
    target_axes: &[GridAxis],
) -> Result<Advection> {
    if target_axes.len() != posterior.num_dims() {
        return Err(Error::Validation(format!(
            "{} target axes for a {}-D density",
            target_axes.len(),
            posterior.num_dims()
        )));
    }
    const SNAP: f64 = 1e-9;
    let d = target_axes.len();
    let mut out = vec![0.0; grid_size(target_axes)];
    let mut lost = 0.0;
    let mut lo = vec![0i64; d];
    let mut frac = vec![0.0; d];
    let mut idx = vec![0usize; d];
    for (flat, &p) in posterior.weights().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let y = model.transition(&posterior.coordinates(flat), control);
        if y.len() != d {
            return Err(Error::Validation(format!("transition returned {} components, expected {d}", y.len())));
        }
        for j in 0..d {
            let pos = target_axes[j].position(y[j]);
            let mut base = pos.floor();
            let mut f = pos - base;
            if f > 1.0 - SNAP {
                base += 1.0;
                f = 0.0;
            } else if f < SNAP {
                f = 0.0;
            }
            lo[j] = base as i64;
            frac[j] = f;
        }
        for corner in 0..1usize << d {
            let mut w = p;
            let mut inside = true;
            for j in 0..d {
                let up = corner >> j & 1 == 1;
                w *= if up { frac[j] } else { 1.0 - frac[j] };
                let pos = lo[j] + up as i64;
                if pos < 0 || pos >= target_axes[j].len() as i64 {
                    inside = false;
                } else {
                    idx[j] = target_axes[j].index_at_position(pos as usize);
                }
            }
            if w == 0.0 {
                continue;
            }
            if inside {
                out[flat_index(target_axes, &idx)] += w;
            } else {
                lost += w;
            }
        }
    }
    let kept: f64 = out.iter().sum();
    if kept <= 0.0 {
        return Err(Error::GridDesign("all transported mass fell outside the target grid".into()));
    }
    let density = if lost > 0.0 {
        log::warn!("advection pushed {lost:.3e} of the mass off the target grid; renormalized");
        PointMassDensity::normalized(target_axes.to_vec(), out)?
    } else {
        // splitting only reorders mass; keep it bit-exact
        PointMassDensity::new(target_axes.to_vec(), out)?
    };
    Ok(Advection { density, lost_mass: lost })
}

/// Bayes update; returns the posterior and `ln sum_i prior_i p(z | x_i)`.
pub fn measurement_update(
    prior: &PointMassDensity,
    model: &MeasurementModel,
    z: &[f64],
) -> Result<(PointMassDensity, f64)> {
    let mut out = Vec::with_capacity(prior.len());
    for (flat, &p) in prior.weights().iter().enumerate() {
        let l = if p == 0.0 { 0.0 } else { model.likelihood(z, &prior.coordinates(flat)) };
        if !(l.is_finite() && l >= 0.0) {
            return Err(Error::Validation(format!("likelihood {l} at cell {flat} is not finite and >= 0")));
        }
        out.push(p * l);
    }
    let evidence: f64 = out.iter().sum();
    if !(evidence > 0.0) {
        return Err(Error::Degenerate(format!("measurement {z:?} has zero likelihood under the prior")));
    }
    Ok((PointMassDensity::normalized(prior.axes().to_vec(), out)?, evidence.ln()))
}

/// Diffusion backend used in the prediction step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Classical,
    Qft,
    /// Fresh-coin walk with the given number of repeats; ignores the model's noise density.
    Qrw(usize),
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Classical => f.write_str("classical"),
            Backend::Qft => f.write_str("qft"),
            Backend::Qrw(r) => write!(f, "qrw({r})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub backend: Backend,
    pub resources: Option<ItemizedResources>,
    /// TV distance between the backend's prior and the classical prior.
    pub tv_to_classical: Option<f64>,
    pub wraparound_mass: f64,
    pub lost_mass: f64,
    pub log_evidence: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub prior: PointMassDensity,
    pub posterior: PointMassDensity,
    pub diagnostics: StepDiagnostics,
}

/// One filter cycle: advect, diffuse with `backend`, then update on `measurement` if given.
pub fn gbf_step(
    posterior: &PointMassDensity,
    dynamics: &DynamicsModel,
    control: &[f64],
    measurement: Option<(&MeasurementModel, &[f64])>,
    backend: Backend,
    opts: &DiffusionOptions,
) -> Result<StepOutput> {
    let advected = advect(posterior, dynamics, control, posterior.axes())?;
    let classical = convolve_circular(&advected.density, &dynamics.noise)?;
    let (prior, resources, wrap, mut warnings) = match backend {
        Backend::Classical => {
            let wrap = crate::diffusion::wraparound_mass(&advected.density, &dynamics.noise)?;
            (classical.clone(), None, wrap, Vec::new())
        }
        Backend::Qft => {
            let r = diffuse_qft(&advected.density, &dynamics.noise, opts)?;
            (r.prior_density, Some(r.resources), r.wraparound_mass, r.warnings)
        }
        Backend::Qrw(repeats) => {
            let r = diffuse_qrw(&advected.density, repeats, opts)?;
            (r.prior_density, Some(r.resources), r.wraparound_mass, r.warnings)
        }
    };
    if advected.lost_mass > 0.0 {
        warnings.push(format!("advection lost {:.3e} of the mass off the grid", advected.lost_mass));
    }
    let tv_to_classical = match backend {
        Backend::Classical => None,
        _ => Some(tv_distance(prior.weights(), classical.weights())),
    };
    let (posterior, log_evidence) = match measurement {
        Some((model, z)) => {
            let (p, e) = measurement_update(&prior, model, z)?;
            (p, Some(e))
        }
        None => (prior.clone(), None),
    };
    Ok(StepOutput {
        prior,
        posterior,
        diagnostics: StepDiagnostics {
            backend,
            resources,
            tv_to_classical,
            wraparound_mass: wrap,
            lost_mass: advected.lost_mass,
            log_evidence,
            warnings,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DynamicsSpec {
    Identity,
    Affine { a: Vec<f64>, c: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeasurementSpec {
    Flat,
    Gaussian { std: Vec<f64> },
}

/// Filtering scenario read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub axes: Vec<AxisSpec>,
    pub initial: DensitySpec,
    pub dynamics: DynamicsSpec,
    /// Process noise on the signed grid matching `axes`.
    pub noise: DensitySpec,
    pub measurement: MeasurementSpec,
    /// One entry per step; `null` skips the update.
    #[serde(default)]
    pub measurements: Vec<Option<Vec<f64>>>,
    pub backend: Backend,
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Builds the state axes, initial density and models.
    pub fn build(&self) -> Result<(PointMassDensity, DynamicsModel, MeasurementModel)> {
        let axes: Vec<GridAxis> = self.axes.iter().map(AxisSpec::build).collect::<Result<_>>()?;
        let noise_axes: Vec<GridAxis> = self.axes.iter().map(AxisSpec::build_signed).collect::<Result<_>>()?;
        let initial = self.initial.build(&axes)?;
        let noise = self.noise.build(&noise_axes)?;
        let d = axes.len();
        let dynamics = match &self.dynamics {
            DynamicsSpec::Identity => DynamicsModel::identity(noise),
            DynamicsSpec::Affine { a, c } => {
                if a.len() != d || c.len() != d {
                    return Err(Error::Validation(format!("affine dynamics needs {d} coefficients per term")));
                }
                DynamicsModel::affine(a.clone(), c.clone(), noise)
            }
        };
        let measurement = match &self.measurement {
            MeasurementSpec::Flat => MeasurementModel::flat(),
            MeasurementSpec::Gaussian { std } => {
                if std.len() != d || std.iter().any(|s| !(*s > 0.0)) {
                    return Err(Error::Validation(format!("measurement needs {d} positive std values")));
                }
                MeasurementModel::gaussian(std.clone())
            }
        };
        Ok((initial, dynamics, measurement))
    }
}

/// Runs the scenario with its own backend, or `backend` when given.
pub fn run_scenario(config: &ScenarioConfig, backend: Option<Backend>) -> Result<Vec<StepOutput>> {
    let (mut posterior, dynamics, measurement) = config.build()?;
    let backend = backend.unwrap_or(config.backend);
    let opts = DiffusionOptions { seed: config.seed, ..DiffusionOptions::default() };
    let control = vec![0.0; posterior.num_dims()];
    let mut out = Vec::with_capacity(config.steps);
    for k in 0..config.steps {
        let z = config.measurements.get(k).cloned().flatten();
        let step = gbf_step(&posterior, &dynamics, &control, z.as_deref().map(|z| (&measurement, z)), backend, &opts)?;
        posterior = step.posterior.clone();
        out.push(step);
    }
    Ok(out)
}

/// Walk kernel used as the noise density when comparing against the QRW backend.
pub fn qrw_equivalent_noise(axes: &[GridAxis], repeats: usize) -> Result<PointMassDensity> {
    binomial_kernel_density(axes, repeats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{delta_density, discretize_gaussian, tabulated_density};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(n: usize) -> GridAxis {
        GridAxis::new(0.0, 1.0, n).unwrap()
    }

    fn signed(n: usize) -> GridAxis {
        GridAxis::signed(1.0, n).unwrap()
    }

    fn random_density(axes: &[GridAxis], rng: &mut ChaCha8Rng) -> PointMassDensity {
        let n = grid_size(axes);
        let w = (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>() }).collect::<Vec<_>>();
        let mut w = w;
        w[0] += 1e-3;
        PointMassDensity::normalized(axes.to_vec(), w).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            assert!((x - y).abs() <= tol, "index {i}: {x} vs {y}");
        }
    }

    #[test]
    fn delta_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_density(&[unit(4)], &mut rng);
        let e = delta_density(&[signed(4)], &[0.0]).unwrap();
        assert_close(convolve_circular(&a, &e).unwrap().weights(), a.weights(), 1e-15);
    }

    #[test]
    fn two_point_self_convolution() {
        let a = tabulated_density(&[unit(2)], &[vec![0.0], vec![1.0]], &[0.5, 0.5]).unwrap();
        let c = convolve_circular(&a, &a).unwrap();
        assert_close(c.weights(), &[0.25, 0.5, 0.25, 0.0], 1e-15);
    }

    #[test]
    fn commutative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for k in 0..20 {
            let axes = if k % 2 == 0 { vec![unit(3)] } else { vec![unit(2), unit(3)] };
            let a = random_density(&axes, &mut rng);
            let b = random_density(&axes, &mut rng);
            assert_close(
                convolve_circular(&a, &b).unwrap().weights(),
                convolve_circular(&b, &a).unwrap().weights(),
                1e-15,
            );
        }
    }

    #[test]
    fn direct_and_fft_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..100 {
            let axes: Vec<GridAxis> = match k % 4 {
                0 => vec![unit(rng.gen_range(1..=8))],
                1 => vec![unit(rng.gen_range(1..=4)), unit(rng.gen_range(1..=4))],
                2 => vec![unit(2), unit(2), unit(rng.gen_range(1..=4))],
                _ => vec![unit(rng.gen_range(1..=5))],
            };
            let signed_axes: Vec<GridAxis> = axes.iter().map(|a| signed(a.num_qubits())).collect();
            let a = random_density(&axes, &mut rng);
            let b = random_density(&signed_axes, &mut rng);
            assert_close(
                convolve_circular(&a, &b).unwrap().weights(),
                convolve_circular_fft(&a, &b).unwrap().weights(),
                1e-12,
            );
        }
    }

    #[test]
    fn convolution_axis_mismatch() {
        let a = delta_density(&[unit(3)], &[0.0]).unwrap();
        let b = delta_density(&[unit(4)], &[0.0]).unwrap();
        assert!(matches!(convolve_circular(&a, &b), Err(Error::Validation(_))));
        let c = delta_density(&[GridAxis::new(0.0, 0.5, 3).unwrap()], &[0.0]).unwrap();
        assert!(convolve_circular_fft(&a, &c).is_err());
    }

    #[test]
    fn advect_identity_and_shifts() {
        let noise = delta_density(&[signed(4)], &[0.0]).unwrap();
        let p = discretize_gaussian(&[unit(4)], &[7.0], &[1.0]).unwrap();
        let id = advect(&p, &DynamicsModel::identity(noise.clone()), &[0.0], p.axes()).unwrap();
        assert_eq!(id.density, p);

        let d = delta_density(&[unit(4)], &[4.0]).unwrap();
        let shift2 = DynamicsModel::affine(vec![1.0], vec![2.0], noise.clone());
        let out = advect(&d, &shift2, &[0.0], d.axes()).unwrap();
        assert_eq!(out.density, delta_density(&[unit(4)], &[6.0]).unwrap());

        let half = DynamicsModel::affine(vec![1.0], vec![0.5], noise.clone());
        let out = advect(&d, &half, &[0.0], d.axes()).unwrap();
        assert_close(&out.density.weights()[3..7], &[0.0, 0.5, 0.5, 0.0], 1e-15);

        // control input acts as an additive shift
        let out = advect(&d, &DynamicsModel::identity(noise), &[3.0], d.axes()).unwrap();
        assert_eq!(out.density.argmax(), 7);
    }

    #[test]
    fn advect_conserves_mass_and_reports_loss() {
        let noise = delta_density(&[signed(4), signed(3)], &[0.0, 0.0]).unwrap();
        let axes = [unit(4), GridAxis::new(-1.0, 0.5, 3).unwrap()];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_density(&axes, &mut rng);
        let shrink = DynamicsModel::affine(vec![0.7, 0.9], vec![1.3, 0.1], noise.clone());
        let out = advect(&p, &shrink, &[0.0, 0.0], &axes).unwrap();
        assert_eq!(out.lost_mass, 0.0);
        assert!((out.density.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let push = DynamicsModel::affine(vec![1.0, 1.0], vec![8.25, 0.0], noise.clone());
        let out = advect(&p, &push, &[0.0, 0.0], &axes).unwrap();
        assert!(out.lost_mass > 0.0);

        let away = DynamicsModel::affine(vec![1.0, 1.0], vec![100.0, 0.0], noise);
        assert!(matches!(advect(&p, &away, &[0.0, 0.0], &axes), Err(Error::GridDesign(_))));
    }

    #[test]
    fn measurement_update_cases() {
        let prior = discretize_gaussian(&[unit(4)], &[7.0], &[1.0]).unwrap();
        let (post, e) = measurement_update(&prior, &MeasurementModel::flat(), &[3.0]).unwrap();
        assert_close(post.weights(), prior.weights(), 1e-15);
        assert!(e.abs() < 1e-12);

        let delta = delta_density(&[unit(4)], &[5.0]).unwrap();
        let (post, _) = measurement_update(&delta, &MeasurementModel::gaussian(vec![1.0]), &[9.0]).unwrap();
        assert_eq!(post, delta);

        // direct pointwise product of the two Gaussians
        let lik = MeasurementModel::gaussian(vec![1.0]);
        let (post, _) = measurement_update(&prior, &lik, &[9.0]).unwrap();
        let oracle: Vec<f64> = (0..16).map(|i| prior.weights()[i] * (-0.5 * (9.0 - i as f64).powi(2)).exp()).collect();
        let best = (0..16).max_by(|&a, &b| oracle[a].total_cmp(&oracle[b])).unwrap();
        assert_eq!(best, 8);
        assert_eq!(post.argmax(), 8);
    }

    #[test]
    fn measurement_update_scale_invariant() {
        let prior = discretize_gaussian(&[unit(4)], &[6.0], &[2.0]).unwrap();
        let lik = MeasurementModel::gaussian(vec![1.5]);
        let scaled = MeasurementModel::new(|z, x| 1e-3 * MeasurementModel::gaussian(vec![1.5]).likelihood(z, x));
        let (a, ea) = measurement_update(&prior, &lik, &[4.0]).unwrap();
        let (b, eb) = measurement_update(&prior, &scaled, &[4.0]).unwrap();
        assert_close(a.weights(), b.weights(), 1e-14);
        assert_eq!(a.argmax(), b.argmax());
        assert!((ea - eb - 1e3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn degenerate_update() {
        let prior = delta_density(&[unit(4)], &[5.0]).unwrap();
        let zero = MeasurementModel::new(|_, x| if x[0] == 5.0 { 0.0 } else { 1.0 });
        assert!(matches!(measurement_update(&prior, &zero, &[0.0]), Err(Error::Degenerate(_))));
        let nan = MeasurementModel::new(|_, _| f64::NAN);
        assert!(measurement_update(&prior, &nan, &[0.0]).is_err());
    }

    #[test]
    fn gbf_step_backends_agree() {
        let axes = [unit(4)];
        let noise = discretize_gaussian(&[signed(4)], &[0.0], &[1.0]).unwrap();
        let dynamics = DynamicsModel::affine(vec![1.0], vec![1.0], noise);
        let post = discretize_gaussian(&axes, &[6.0], &[1.0]).unwrap();
        let lik = MeasurementModel::gaussian(vec![1.0]);
        let opts = DiffusionOptions::default();
        let c = gbf_step(&post, &dynamics, &[0.0], Some((&lik, &[8.0])), Backend::Classical, &opts).unwrap();
        let q = gbf_step(&post, &dynamics, &[0.0], Some((&lik, &[8.0])), Backend::Qft, &opts).unwrap();
        assert_close(c.posterior.weights(), q.posterior.weights(), 1e-10);
        assert!(q.diagnostics.tv_to_classical.unwrap() < 1e-10);
        assert!(q.diagnostics.resources.is_some());
        assert!(c.diagnostics.resources.is_none());
    }

    #[test]
    fn gbf_step_trivial_pipeline_is_identity() {
        let p = discretize_gaussian(&[unit(4)], &[7.0], &[1.5]).unwrap();
        let dynamics = DynamicsModel::identity(delta_density(&[signed(4)], &[0.0]).unwrap());
        for backend in [Backend::Classical, Backend::Qft] {
            let out = gbf_step(
                &p,
                &dynamics,
                &[0.0],
                Some((&MeasurementModel::flat(), &[0.0])),
                backend,
                &DiffusionOptions::default(),
            )
            .unwrap();
            assert_close(out.posterior.weights(), p.weights(), 1e-12);
        }
    }

    #[test]
    fn qrw_backend_matches_binomial_noise() {
        let p = discretize_gaussian(&[unit(4)], &[7.0], &[1.0]).unwrap();
        let kernel = qrw_equivalent_noise(p.axes(), 4).unwrap();
        let dynamics = DynamicsModel::identity(kernel);
        let out = gbf_step(&p, &dynamics, &[0.0], None, Backend::Qrw(4), &DiffusionOptions::default()).unwrap();
        assert!(out.diagnostics.tv_to_classical.unwrap() < 1e-10);
    }

    #[test]
    fn scenario_json_round_trip() {
        let text = r#"{
            "axes": [{"xi_min": 0.0, "delta": 1.0, "num_qubits": 4}],
            "initial": {"kind": "gaussian", "mean": [7.0], "std": [1.0]},
            "dynamics": {"kind": "affine", "a": [1.0], "c": [1.0]},
            "noise": {"kind": "table", "support": [[-1.0], [0.0], [1.0]], "weights": [0.25, 0.5, 0.25]},
            "measurement": {"kind": "gaussian", "std": [1.0]},
            "measurements": [[8.0], null],
            "backend": {"qrw": 2},
            "steps": 2
        }"#;
        let cfg = ScenarioConfig::from_json(text).unwrap();
        assert_eq!(cfg.backend, Backend::Qrw(2));
        let back: ScenarioConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let steps = run_scenario(&cfg, Some(Backend::Qft)).unwrap();
        assert_eq!(steps.len(), 2);
        assert!(steps[0].diagnostics.log_evidence.is_some());
        assert!(steps[1].diagnostics.log_evidence.is_none());
        assert!(ScenarioConfig::from_json("{}").is_err());
    }
}
