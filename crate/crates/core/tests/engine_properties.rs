use std::sync::Arc;

use friendsim::observables::{dilation_unitary, spin_observable, DirectionAngle, MeasurementDilation};
use friendsim::qsim::{
    born_probability, conditional_probability, OutcomeDistribution, ProjectorSpec, RegisterLayout, StateVector,
    TrialRng,
};
use friendsim::{Real, C};
use proptest::prelude::*;

fn layout() -> Arc<RegisterLayout> {
    Arc::new(
        RegisterLayout::new([
            ("p", vec!["up", "down"]),
            ("q", vec!["up", "down"]),
            ("L", vec!["ready", "up", "down"]),
            ("M", vec!["ready", "up", "down"]),
        ])
        .unwrap(),
    )
}

/// Random state with both labs ready, from raw (re, im) pairs on `p ⊗ q`.
fn random_state<T: Real>(raw: &[(f64, f64)]) -> StateVector<T> {
    let l = layout();
    let norm: f64 = raw.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
    let mut amps = vec![C::new(T::zero(), T::zero()); l.dim()];
    for (i, (a, b)) in raw.iter().enumerate() {
        let (p, q) = (i / 2, i % 2);
        // Big-endian: p is the slowest digit; both labs at index 0 (ready).
        let idx = p * l.stride(0) + q * l.stride(1);
        amps[idx] = C::new(T::lit(a / norm), T::lit(b / norm));
    }
    StateVector::from_amplitudes(l, amps).unwrap()
}

fn raw_amplitudes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4)
        .prop_filter("nonzero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
}

fn dilation<T: Real>(particle: &str, lab: &str, angle: f64) -> friendsim::qsim::OperatorMatrix<T> {
    let l = layout();
    let d = MeasurementDilation::spin(&l, particle, lab, DirectionAngle::from_radians(T::lit(angle)).unwrap()).unwrap();
    dilation_unitary(&l, &d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dilation_is_unitary(angle in -10.0f64..10.0) {
        let u = dilation::<f64>("p", "L", angle);
        prop_assert!(u.unitarity_defect() <= 1e-12);
        let u32 = dilation::<f32>("q", "M", angle);
        prop_assert!(u32.unitarity_defect() <= f32::IDENTITY_TOL);
    }

    #[test]
    fn adjoint_undoes_measurement(raw in raw_amplitudes(), a in -7.0f64..7.0, b in -7.0f64..7.0) {
        let s = random_state::<f64>(&raw);
        let (u, v) = (dilation::<f64>("p", "L", a), dilation::<f64>("q", "M", b));
        let measured = s.evolve(&u).unwrap().evolve(&v).unwrap();
        prop_assert!((measured.norm() - 1.0).abs() <= 1e-12);
        let back = measured.evolve(&v.dagger()).unwrap().evolve(&u.dagger()).unwrap();
        prop_assert!(back.fidelity(&s).unwrap() >= 1.0 - 1e-12);
        let ready = ProjectorSpec::basis("L", &["ready"]).and_basis("M", &["ready"]);
        prop_assert!((born_probability(&back, &ready).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn adjoint_undo_in_f32(raw in raw_amplitudes(), a in -7.0f64..7.0) {
        let s = random_state::<f32>(&raw);
        let u = dilation::<f32>("p", "L", a);
        let back = s.evolve(&u).unwrap().evolve(&u.dagger()).unwrap();
        prop_assert!(back.fidelity(&s).unwrap() >= 1.0 - 1e-5);
    }

    #[test]
    fn pointer_reproduces_spin_statistics(raw in raw_amplitudes(), a in -7.0f64..7.0) {
        // P(pointer up) after the dilation equals (1 + ⟨σ_a⟩)/2 before it.
        let s = random_state::<f64>(&raw);
        let sigma = s.expectation(&spin_observable("p", DirectionAngle::from_radians(a).unwrap())).unwrap().re;
        let after = s.evolve(&dilation::<f64>("p", "L", a)).unwrap();
        let p_up = born_probability(&after, &ProjectorSpec::basis("L", &["up"])).unwrap();
        prop_assert!((p_up - (1.0 + sigma) / 2.0).abs() <= 1e-12);
        let p_ready = born_probability(&after, &ProjectorSpec::basis("L", &["ready"])).unwrap();
        prop_assert!(p_ready <= 1e-12);
    }

    #[test]
    fn bayes_rule_holds(raw in raw_amplitudes(), a in -7.0f64..7.0, b in -7.0f64..7.0) {
        let s = random_state::<f64>(&raw)
            .evolve(&dilation::<f64>("p", "L", a)).unwrap()
            .evolve(&dilation::<f64>("q", "M", b)).unwrap();
        let x = ProjectorSpec::basis("L", &["up"]);
        let y = ProjectorSpec::basis("M", &["down"]);
        let (px, py) = (born_probability(&s, &x).unwrap(), born_probability(&s, &y).unwrap());
        prop_assume!(px > 1e-6 && py > 1e-6);
        let joint = born_probability(&s, &x.clone().and(&y)).unwrap();
        let y_given_x = conditional_probability(&s, &x, &y).unwrap();
        let x_given_y = conditional_probability(&s, &y, &x).unwrap();
        prop_assert!((y_given_x * px - joint).abs() <= 1e-12);
        prop_assert!((x_given_y * py - joint).abs() <= 1e-12);
    }
}

#[test]
fn born_rule_on_spin_up_matches_half_angle_cosine() {
    let s = random_state::<f64>(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
    for k in 0..24 {
        let phi = k as f64 * std::f64::consts::PI / 12.0;
        let after = s.evolve(&dilation::<f64>("p", "L", phi)).unwrap();
        let p = born_probability(&after, &ProjectorSpec::basis("L", &["up"])).unwrap();
        assert!((p - (phi / 2.0).cos().powi(2)).abs() < 1e-12, "phi {phi}: {p}");
    }
}

#[test]
fn counter_rng_is_order_independent() {
    let mut seq = TrialRng::new(42, 17);
    let draws: Vec<f64> = (0..10).map(|_| seq.uniform()).collect();
    for (k, d) in draws.iter().enumerate().rev() {
        assert_eq!(TrialRng::uniform_at(42, 17, k as u64), *d);
    }
    assert_ne!(TrialRng::uniform_at(42, 18, 0), draws[0]);
    assert_ne!(TrialRng::uniform_at(43, 17, 0), draws[0]);
    assert!(draws.iter().all(|u| (0.0..1.0).contains(u)));
}

#[test]
fn sampled_frequencies_follow_born_weights() {
    let s = random_state::<f64>(&[(0.6, 0.0), (0.0, 0.0), (0.0, 0.8), (0.0, 0.0)]);
    let after = s.evolve(&dilation::<f64>("p", "L", 0.7)).unwrap();
    let parts = [ProjectorSpec::basis("L", &["up"]), ProjectorSpec::basis("L", &["down"])];
    let dist = OutcomeDistribution::from_partition(&after, &parts).unwrap();
    let p = dist.probabilities()[0];
    let n = 200_000u64;
    let hits = (0..n).filter(|&t| dist.draw(&mut TrialRng::new(5, t)) == 0).count() as f64;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!((hits / n as f64 - p).abs() <= 4.0 * sigma, "{} vs {p}", hits / n as f64);
}
