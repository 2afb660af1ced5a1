//! Frozen hand-computed values for the sample-size rule and its
//! model-specific diameter/Lipschitz/variance bounds.

use approx::assert_relative_eq;
use zeh_core::saa::{
    bounds_individual, bounds_manager, bounds_user, sample_size, sample_size_with_cap, Accuracy,
    SampleSizeInputs,
};
use zeh_core::Tariff;

fn tariff() -> Tariff {
    Tariff {
        pi_gas: 30.0,
        pi_rev: 20.0,
        pi_pv: 2000.0,
        pi_b: 4500.0,
        pi_out: 20.0,
        pi_in: 5.0,
        pi_grid: 10.0,
    }
}

fn unit_inputs() -> SampleSizeInputs {
    SampleSizeInputs {
        epsilon: 1.0,
        delta: 0.0,
        alpha: 0.01,
        r: 1,
        diameter: 1.0,
        lipschitz: 1.0,
        sigma2: 1.0,
    }
}

#[test]
fn sample_size_unit_inputs() {
    // 12 * 1 / 1 * (1 * ln 2 - ln 0.01) = 12 * 5.29832 = 63.58 -> 64.
    let s = sample_size(&unit_inputs()).unwrap();
    assert_eq!(s.n, 64);
    assert!(!s.vacuous);
    assert!(!s.capped);
    assert_relative_eq!(s.required, 63.579, max_relative = 1e-3);
}

#[test]
fn sample_size_vacuous_when_box_is_tiny() {
    // 2DL = 0.2 <= epsilon - delta = 1: the cost varies less than the target
    // accuracy over the whole box, so one sample suffices.
    let s = sample_size(&SampleSizeInputs {
        diameter: 0.1,
        ..unit_inputs()
    })
    .unwrap();
    assert_eq!(s.n, 1);
    assert!(s.vacuous);
}

#[test]
fn sample_size_zero_variance_is_vacuous() {
    let s = sample_size(&SampleSizeInputs {
        sigma2: 0.0,
        ..unit_inputs()
    })
    .unwrap();
    assert_eq!(s.n, 1);
    assert!(s.vacuous);
}

#[test]
fn sample_size_floors_at_one_when_alpha_is_lax() {
    // ln(2DL/gap) barely positive and alpha near 1 drive the bound under 1.
    let s = sample_size(&SampleSizeInputs {
        epsilon: 1.9,
        alpha: 0.99999,
        ..unit_inputs()
    })
    .unwrap();
    assert_eq!(s.n, 1);
    assert!(!s.vacuous);
}

#[test]
fn sample_size_cap_engages_and_is_flagged() {
    let inputs = SampleSizeInputs {
        sigma2: 1e12,
        ..unit_inputs()
    };
    let s = sample_size(&inputs).unwrap();
    assert_eq!(s.n, 10_000_000);
    assert!(s.capped);
    assert!(s.required > 1e13);

    let uncapped = sample_size_with_cap(&inputs, u64::MAX).unwrap();
    assert!(!uncapped.capped);
    assert!(uncapped.n > 10_000_000);
}

#[test]
fn sample_size_rejects_bad_accuracy() {
    assert!(sample_size(&SampleSizeInputs { epsilon: 0.0, ..unit_inputs() }).is_err());
    assert!(sample_size(&SampleSizeInputs { delta: 2.0, ..unit_inputs() }).is_err());
    assert!(sample_size(&SampleSizeInputs { alpha: 0.0, ..unit_inputs() }).is_err());
    assert!(sample_size(&SampleSizeInputs { alpha: 1.0, ..unit_inputs() }).is_err());
    assert!(sample_size(&SampleSizeInputs { r: 0, ..unit_inputs() }).is_err());
}

#[test]
fn bounds_individual_hand_example() {
    // a_max = c_max = 10, beta = 0.5 over one day, expected generation 2:
    // D = 10
    // L = max(2000 + 30*2, 4500 + max(15, 10)) = 4515
    // sigma^2 = 100 * max(60, 15)^2 = 360000
    let acc = Accuracy { epsilon: 5000.0, delta: 0.0, alpha: 0.01 };
    let b = bounds_individual(10.0, 10.0, &tariff(), &[0.5], 2.0, &acc).unwrap();
    assert_eq!(b.r, 2);
    assert_relative_eq!(b.diameter, 10.0, max_relative = 1e-12);
    assert_relative_eq!(b.lipschitz, 4515.0, max_relative = 1e-12);
    assert_relative_eq!(b.sigma2, 360000.0, max_relative = 1e-12);
}

#[test]
fn bounds_user_hand_example() {
    // D = 10, L = 2000 + 30*2 = 2060, sigma^2 = 100 * (30*2)^2 = 360000.
    let acc = Accuracy::default();
    let b = bounds_user(10.0, &tariff(), 2.0, &acc).unwrap();
    assert_eq!(b.r, 1);
    assert_relative_eq!(b.diameter, 10.0, max_relative = 1e-12);
    assert_relative_eq!(b.lipschitz, 2060.0, max_relative = 1e-12);
    assert_relative_eq!(b.sigma2, 360000.0, max_relative = 1e-12);
}

#[test]
fn bounds_user_zero_generation_collapses_to_one_sample() {
    let acc = Accuracy::default();
    let b = bounds_user(10.0, &tariff(), 0.0, &acc).unwrap();
    assert_eq!(b.sigma2, 0.0);
    let s = sample_size(&b).unwrap();
    assert_eq!(s.n, 1);
    assert!(s.vacuous);
}

#[test]
fn bounds_manager_hand_example() {
    // Allocation caps [10, 5], one day, beta_a = 0.5:
    // D = max-norm = 10
    // slope sum = max(20, 10*1.5, 20*0.5) = 20; L = 4500 + 20 = 4520
    // sigma^2 = 100 * 20^2 = 40000; r = n = 2.
    let acc = Accuracy::default();
    let b = bounds_manager(&[10.0, 5.0], &tariff(), &[0.5], &acc).unwrap();
    assert_eq!(b.r, 2);
    assert_relative_eq!(b.diameter, 10.0, max_relative = 1e-12);
    assert_relative_eq!(b.lipschitz, 4520.0, max_relative = 1e-12);
    assert_relative_eq!(b.sigma2, 40000.0, max_relative = 1e-12);
}
