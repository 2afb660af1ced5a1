//! Frozen hand-computed values for the cost kernels.
//!
//! Each expected number below was derived by hand from the per-day energy
//! balance on one- and two-record toy scenarios before the kernels were
//! written. They pin down sign conventions (sale revenue is negative cost,
//! exchange nets purchases against sales) and the exact split of every
//! breakdown across its components.

use approx::assert_relative_eq;
use zeh_core::cost::{
    global_cost, individual_cost, individual_subgradient, manager_cost, user_cost,
    user_subgradient,
};
use zeh_core::{ChargeProfile, ScenarioSet, Tariff};

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

/// One user, one day, one sample.
fn single(x: f64, y: f64) -> ScenarioSet {
    ScenarioSet::dense(1, 1, 1, vec![x], vec![y], 0, "toy").unwrap()
}

#[test]
fn individual_cost_matches_hand_computed_split() {
    // a = 3 m^2, c = 4 kWh, X = 10, Y = 2, beta = 0.5.
    // Shortfall past the battery half: 10 - 3*2 - 0.5*4 = 2 kWh -> 30 * 2 = 60.
    // Reverse flow: 3*2 - 10 - 0.5*4 = -6 -> clipped to 0.
    // Capital: 3 * 2000 + 4 * 4500 = 24000.
    let b = individual_cost(&single(10.0, 2.0), 0, &tariff(), &[0.5], 3.0, 4.0).unwrap();
    assert_relative_eq!(b.gas, 60.0, max_relative = 1e-9);
    assert_relative_eq!(b.reverse_flow, 0.0, epsilon = 1e-12);
    assert_relative_eq!(b.capital_pv, 6000.0, max_relative = 1e-9);
    assert_relative_eq!(b.capital_battery, 18000.0, max_relative = 1e-9);
    assert_relative_eq!(b.total, 24060.0, max_relative = 1e-9);
}

#[test]
fn individual_cost_of_nothing_is_zero() {
    let b = individual_cost(&single(0.0, 2.0), 0, &tariff(), &[0.5], 0.0, 0.0).unwrap();
    assert_eq!(b.total, 0.0);
    assert_eq!(b.gas, 0.0);
    assert_eq!(b.reverse_flow, 0.0);
}

#[test]
fn individual_cost_pure_reverse_flow() {
    // a = 10, c = 0, X = 0, Y = 1: everything generated flows back.
    // Reverse flow: 10*1 - 0 - 0.5*0 = 10 kWh -> 20 * 10 = 200; capital 20000.
    let b = individual_cost(&single(0.0, 1.0), 0, &tariff(), &[0.5], 10.0, 0.0).unwrap();
    assert_relative_eq!(b.gas, 0.0, epsilon = 1e-12);
    assert_relative_eq!(b.reverse_flow, 200.0, max_relative = 1e-9);
    assert_relative_eq!(b.total, 20200.0, max_relative = 1e-9);
}

#[test]
fn individual_subgradient_with_gas_term_active() {
    // At (a, c) = (3, 4) only the shortfall term is active (argument +2):
    // d/da = pi_pv - pi_gas * Y = 2000 - 60 = 1940
    // d/dc = pi_b - pi_gas * beta = 4500 - 15 = 4485
    let g = individual_subgradient(&single(10.0, 2.0), 0, &tariff(), &[0.5], 3.0, 4.0).unwrap();
    assert_relative_eq!(g.components[0], 1940.0, max_relative = 1e-12);
    assert_relative_eq!(g.components[1], 4485.0, max_relative = 1e-12);
}

#[test]
fn individual_subgradient_reduces_to_capital_slope_when_inactive() {
    // a = 5 balances X = aY exactly, and c = 4 pushes both max arguments to
    // -2 < 0, so only the capital prices remain.
    let g = individual_subgradient(&single(10.0, 2.0), 0, &tariff(), &[0.5], 5.0, 4.0).unwrap();
    assert_relative_eq!(g.components[0], 2000.0, max_relative = 1e-12);
    assert_relative_eq!(g.components[1], 4500.0, max_relative = 1e-12);
}

#[test]
fn user_cost_matches_hand_computed_split() {
    // a = 1, allocation 2 kWh, X = 10, Y = 2, pi_in = 5.
    // Surplus: max(2 - 10, 0) = 0 -> sale 0.
    // Drawn from storage: min(max(10 - 2, 0), 2) = 2 -> 20 * 2 = 40.
    // Gas past the allocation: 10 - 2 - 2 = 6 -> 30 * 6 = 180. Capital 2000.
    let b = user_cost(&single(10.0, 2.0), 0, &tariff(), 1.0, 2.0).unwrap();
    assert_relative_eq!(b.sale, 0.0, epsilon = 1e-12);
    assert_relative_eq!(b.purchase, 40.0, max_relative = 1e-9);
    assert_relative_eq!(b.gas, 180.0, max_relative = 1e-9);
    assert_relative_eq!(b.capital_pv, 2000.0, max_relative = 1e-9);
    assert_relative_eq!(b.total, 2220.0, max_relative = 1e-9);
}

#[test]
fn user_cost_surplus_earns_when_feed_in_price_positive() {
    // a = 6: surplus 2 kWh sold at pi_in = 5 -> -10; no purchases, no gas.
    let b = user_cost(&single(10.0, 2.0), 0, &tariff(), 6.0, 2.0).unwrap();
    assert_relative_eq!(b.sale, -10.0, max_relative = 1e-9);
    assert_relative_eq!(b.purchase, 0.0, epsilon = 1e-12);
    assert_relative_eq!(b.gas, 0.0, epsilon = 1e-12);
    assert_relative_eq!(b.total, 11990.0, max_relative = 1e-9);
}

#[test]
fn user_cost_surplus_pays_when_feed_in_price_negative() {
    // Same point with pi_in = -5: the surplus becomes a +10 penalty.
    let t = Tariff { pi_in: -5.0, ..tariff() };
    let b = user_cost(&single(10.0, 2.0), 0, &t, 6.0, 2.0).unwrap();
    assert_relative_eq!(b.sale, 10.0, max_relative = 1e-9);
    assert_relative_eq!(b.total, 12010.0, max_relative = 1e-9);
}

#[test]
fn user_subgradient_selects_piece_by_panel_area() {
    // a = 1 sits on the gas piece (a < (X - c)/Y = 4): 2000 - 30*2 = 1940.
    let g = user_subgradient(&single(10.0, 2.0), 0, &tariff(), 1.0, 2.0).unwrap();
    assert_relative_eq!(g.components[0], 1940.0, max_relative = 1e-12);
    // a = 6 sits on the surplus piece (a > X/Y = 5): 2000 - 5*2 = 1990.
    let g = user_subgradient(&single(10.0, 2.0), 0, &tariff(), 6.0, 2.0).unwrap();
    assert_relative_eq!(g.components[0], 1990.0, max_relative = 1e-12);
}

#[test]
fn manager_cost_matches_hand_computed_split() {
    // One user, allocation [2], a = [1], X = 10, Y = 2, beta_a = 0.5.
    // Nothing flows in (P_in = 0); the user draws P_out = min(8, 2) = 2.
    // Exchange: 5*0 - 20*2 = -40 (the manager is paid by the user).
    // Grid top-up: max(2 - 0 - 0.5*2, 0) = 1 -> 10 * 1 = 10. Capital 9000.
    let b = manager_cost(&single(10.0, 2.0), &tariff(), &[0.5], &[1.0], &[2.0]).unwrap();
    assert_relative_eq!(b.exchange, -40.0, max_relative = 1e-9);
    assert_relative_eq!(b.grid, 10.0, max_relative = 1e-9);
    assert_relative_eq!(b.reverse_flow, 0.0, epsilon = 1e-12);
    assert_relative_eq!(b.capital_battery, 9000.0, max_relative = 1e-9);
    assert_relative_eq!(b.total, 8970.0, max_relative = 1e-9);
}

#[test]
fn manager_cost_of_nothing_is_zero() {
    let b = manager_cost(&single(0.0, 2.0), &tariff(), &[0.5], &[0.0], &[0.0]).unwrap();
    assert_eq!(b.total, 0.0);
}

#[test]
fn manager_cost_surplus_neighborhood() {
    // a = [6]: users push P_in = 2 into storage, nothing is drawn.
    // Exchange: 5*2 - 0 = +10 (manager pays the feed-in).
    // Reverse flow past the idle half: max(2 - 0 - 0.5*2, 0) = 1 -> 20.
    let b = manager_cost(&single(10.0, 2.0), &tariff(), &[0.5], &[6.0], &[2.0]).unwrap();
    assert_relative_eq!(b.exchange, 10.0, max_relative = 1e-9);
    assert_relative_eq!(b.grid, 0.0, epsilon = 1e-12);
    assert_relative_eq!(b.reverse_flow, 20.0, max_relative = 1e-9);
    assert_relative_eq!(b.total, 9030.0, max_relative = 1e-9);
}

#[test]
fn global_cost_with_one_user_equals_individual_cost() {
    let ss = single(10.0, 2.0);
    let profile = ChargeProfile::constant(1, 1, 0.5, 0.5).unwrap();
    let g = global_cost(&ss, &tariff(), &profile, &[3.0], 4.0).unwrap();
    let i = individual_cost(&ss, 0, &tariff(), &[0.5], 3.0, 4.0).unwrap();
    assert_relative_eq!(g.gas, i.gas, max_relative = 1e-12);
    assert_relative_eq!(g.reverse_flow, i.reverse_flow, max_relative = 1e-12);
    assert_relative_eq!(g.total, i.total, max_relative = 1e-12);
}

#[test]
fn global_pooling_cancels_opposite_imbalances() {
    // User 0 is short by 2 kWh, user 1 is long by 2 kWh, no battery: pooled
    // imbalances cancel exactly, while separate households pay 60 + 40.
    let ss = ScenarioSet::dense(1, 2, 1, vec![2.0, 0.0], vec![0.0, 2.0], 0, "toy").unwrap();
    let profile = ChargeProfile::constant(2, 1, 0.5, 0.5).unwrap();
    let a = [0.0, 1.0];

    let pooled = global_cost(&ss, &tariff(), &profile, &a, 0.0).unwrap();
    assert_relative_eq!(pooled.gas, 0.0, epsilon = 1e-12);
    assert_relative_eq!(pooled.reverse_flow, 0.0, epsilon = 1e-12);

    let solo0 = individual_cost(&ss, 0, &tariff(), &[0.5], a[0], 0.0).unwrap();
    let solo1 = individual_cost(&ss, 1, &tariff(), &[0.5], a[1], 0.0).unwrap();
    assert_relative_eq!(solo0.gas, 60.0, max_relative = 1e-9);
    assert_relative_eq!(solo1.reverse_flow, 40.0, max_relative = 1e-9);
}

#[test]
fn breakdown_totals_are_component_sums() {
    let cases = [
        individual_cost(&single(10.0, 2.0), 0, &tariff(), &[0.5], 3.0, 4.0).unwrap(),
        user_cost(&single(10.0, 2.0), 0, &tariff(), 6.0, 2.0).unwrap(),
        manager_cost(&single(10.0, 2.0), &tariff(), &[0.5], &[1.0], &[2.0]).unwrap(),
    ];
    for b in cases {
        assert_relative_eq!(b.total, b.component_sum(), max_relative = 1e-9);
    }
}

#[test]
fn kernels_reject_malformed_inputs() {
    let ss = single(10.0, 2.0);
    // Negative decision.
    assert!(individual_cost(&ss, 0, &tariff(), &[0.5], -1.0, 0.0).is_err());
    // Out-of-range user index.
    assert!(individual_cost(&ss, 1, &tariff(), &[0.5], 1.0, 0.0).is_err());
    // Charge profile length must match the horizon.
    assert!(individual_cost(&ss, 0, &tariff(), &[0.5, 0.5], 1.0, 0.0).is_err());
    // Manager decision vectors must match the user count.
    assert!(manager_cost(&ss, &tariff(), &[0.5], &[1.0, 1.0], &[2.0]).is_err());
}
