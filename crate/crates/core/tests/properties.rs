use num_complex::Complex64;
use proptest::prelude::*;
use qgbf::diffusion::{binomial_kernel_density, diffuse_qft, diffuse_qrw, draper_adder, DiffusionOptions};
use qgbf::filter::convolve_circular;
use qgbf::grid::{tv_distance, GridAxis, PointMassDensity};
use qgbf::prep::prepare_register;
use qgbf::{resource_report, Circuit, Gate, QftOptions, RegisterLayout, Statevector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> Statevector {
    let amps: Vec<Complex64> =
        (0..1usize << n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    Statevector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn random_probs(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn max_diff(a: &Statevector, b: &Statevector) -> f64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn gate_strategy(n: usize) -> impl Strategy<Value = Gate> {
    let q = 0..n;
    let pair = (0..n, 0..n - 1).prop_map(|(a, b)| (a, if b >= a { b + 1 } else { b }));
    let angle = -7.0..7.0f64;
    prop_oneof![
        q.clone().prop_map(Gate::Hadamard),
        q.clone().prop_map(Gate::PauliX),
        (q.clone(), angle.clone()).prop_map(|(q, a)| Gate::phase(q, a)),
        (q.clone(), angle.clone()).prop_map(|(q, a)| Gate::rot_y(q, a)),
        (q, angle.clone()).prop_map(|(q, a)| Gate::rot_z(q, a)),
        pair.clone().prop_map(|(c, t)| Gate::Cnot { control: c, target: t }),
        (pair.clone(), angle).prop_map(|((c, t), a)| Gate::cphase(c, t, a)),
        pair.prop_map(|(a, b)| Gate::Swap(a, b)),
    ]
}

fn circuit_strategy(n: usize, len: usize) -> impl Strategy<Value = Circuit> {
    prop::collection::vec(gate_strategy(n), 0..len).prop_map(move |g| Circuit::from_gates(n, g).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decompose_preserves_action_up_to_global_phase(c in circuit_strategy(4, 30), seed in any::<u64>()) {
        let d = c.decompose();
        prop_assert!(d.gates().iter().all(Gate::is_elementary));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut phase: Option<Complex64> = None;
        for _ in 0..20 {
            let start = random_state(4, &mut rng);
            let (mut a, mut b) = (start.clone(), start);
            a.apply_circuit(&c).unwrap();
            b.apply_circuit(&d).unwrap();
            let overlap = a.inner(&b);
            prop_assert!((overlap.norm() - 1.0).abs() < 1e-12);
            let p = *phase.get_or_insert(overlap);
            let rotated: Vec<Complex64> = a.amplitudes().iter().map(|x| x * p).collect();
            let rotated = Statevector::from_amplitudes(rotated).unwrap();
            prop_assert!(max_diff(&rotated, &b) < 1e-12);
        }
    }

    #[test]
    fn circuit_then_adjoint_is_identity(c in (2usize..=6).prop_flat_map(|n| circuit_strategy(n, 40)), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = random_state(c.num_qubits(), &mut rng);
        let mut sv = start.clone();
        sv.apply_circuit(&c).unwrap();
        prop_assert!((sv.norm_sqr() - 1.0).abs() < 1e-12);
        sv.apply_circuit(&c.adjoint()).unwrap();
        prop_assert!(max_diff(&sv, &start) < 1e-12);
    }

    #[test]
    fn resources_compose_under_concatenation(a in circuit_strategy(5, 25), b in circuit_strategy(5, 25)) {
        let (a, b) = (a.decompose(), b.decompose());
        let mut ab = a.clone();
        ab.append(&b);
        let (ra, rb, rab) = (resource_report(&a).unwrap(), resource_report(&b).unwrap(), resource_report(&ab).unwrap());
        prop_assert_eq!(rab.one_qubit_gates, ra.one_qubit_gates + rb.one_qubit_gates);
        prop_assert_eq!(rab.two_qubit_gates, ra.two_qubit_gates + rb.two_qubit_gates);
        prop_assert!(rab.depth <= ra.depth + rb.depth);
        prop_assert!(rab.depth >= ra.depth.max(rb.depth));
    }

    #[test]
    fn diffusion_is_linear_in_the_advected_density(seed in any::<u64>(), lambda in 0.0..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let axis = GridAxis::new(-2.0, 0.5, 3).unwrap();
        let noise_axis = GridAxis::signed(0.5, 3).unwrap();
        let p1 = random_probs(8, &mut rng);
        let p2 = random_probs(8, &mut rng);
        let mix: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        let noise = PointMassDensity::new(vec![noise_axis], random_probs(8, &mut rng)).unwrap();
        let run = |p: Vec<f64>| {
            let d = PointMassDensity::normalized(vec![axis], p).unwrap();
            diffuse_qft(&d, &noise, &DiffusionOptions::default()).unwrap().exact_marginal
        };
        let (r1, r2, rm) = (run(p1), run(p2), run(mix));
        for i in 0..8 {
            prop_assert!((rm[i] - (lambda * r1[i] + (1.0 - lambda) * r2[i])).abs() < 1e-12);
        }
    }
}

#[test]
fn adder_matrix_is_unitary() {
    for n in 1..=3usize {
        let axis = GridAxis::new(0.0, 1.0, n).unwrap();
        let layout = RegisterLayout::diffusion(&[axis], &[GridAxis::signed(1.0, n).unwrap()]).unwrap();
        for opts in [QftOptions::default(), QftOptions { elide_swaps: true, prune_angle: None }] {
            let adder = draper_adder(&layout, 0, &opts).unwrap();
            let dim = 1usize << (2 * n);
            let columns: Vec<Statevector> = (0..dim)
                .map(|k| {
                    let mut sv = Statevector::basis(2 * n, k).unwrap();
                    sv.apply_circuit(&adder).unwrap();
                    sv
                })
                .collect();
            for (i, a) in columns.iter().enumerate() {
                for (j, b) in columns.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((a.inner(b) - Complex64::new(want, 0.0)).norm() < 1e-12, "n={n} ({i},{j})");
                }
            }
        }
    }
}

#[test]
fn adders_on_different_dimensions_commute() {
    let state = [GridAxis::new(0.0, 1.0, 2).unwrap(), GridAxis::new(0.0, 1.0, 3).unwrap()];
    let noise = [GridAxis::signed(1.0, 2).unwrap(), GridAxis::signed(1.0, 3).unwrap()];
    let layout = RegisterLayout::diffusion(&state, &noise).unwrap();
    let opts = QftOptions::default();
    let (a0, a1) = (draper_adder(&layout, 0, &opts).unwrap(), draper_adder(&layout, 1, &opts).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let start = random_state(layout.num_qubits(), &mut rng);
        let (mut x, mut y) = (start.clone(), start);
        x.apply_circuit(&a0).unwrap();
        x.apply_circuit(&a1).unwrap();
        y.apply_circuit(&a1).unwrap();
        y.apply_circuit(&a0).unwrap();
        assert!(max_diff(&x, &y) < 1e-12);
    }
}

#[test]
fn walk_matches_binomial_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let axis = GridAxis::new(0.0, 1.0, 4).unwrap();
    for repeats in 1..=6 {
        let adv = PointMassDensity::new(vec![axis], random_probs(16, &mut rng)).unwrap();
        let walk = diffuse_qrw(&adv, repeats, &DiffusionOptions::default()).unwrap();
        let kernel = binomial_kernel_density(&[axis], repeats).unwrap();
        let oracle = convolve_circular(&adv, &kernel).unwrap();
        let tv = tv_distance(&walk.exact_marginal, oracle.weights());
        assert!(tv < 1e-10, "repeats={repeats}: {tv}");
    }
}

#[test]
fn walk_in_two_dimensions_matches_product_kernel() {
    let axes = [GridAxis::new(0.0, 1.0, 3).unwrap(), GridAxis::new(0.0, 1.0, 2).unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let adv = PointMassDensity::new(axes.to_vec(), random_probs(32, &mut rng)).unwrap();
    let walk = diffuse_qrw(&adv, 2, &DiffusionOptions::default()).unwrap();
    let kernel = binomial_kernel_density(&axes, 2).unwrap();
    let oracle = convolve_circular(&adv, &kernel).unwrap();
    assert!(tv_distance(&walk.exact_marginal, oracle.weights()) < 1e-10);
}

#[test]
fn prepared_states_are_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for n in 1..=6usize {
        let reg: Vec<usize> = (0..n).collect();
        let c = prepare_register(n, &reg, &random_probs(1 << n, &mut rng)).unwrap();
        let mut sv = Statevector::zero(n).unwrap();
        sv.apply_circuit(&c.decompose()).unwrap();
        assert!((sv.norm_sqr() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn golden_qft_dump() {
    let qft = Circuit::qft(&[0, 1, 2]).unwrap();
    assert_eq!(qft.to_text(), include_str!("golden/qft3.txt"));
    assert_eq!(qft.decompose().to_text(), include_str!("golden/qft3_decomposed.txt"));
    assert_eq!(Circuit::from_text(include_str!("golden/qft3.txt")).unwrap(), qft);
}
