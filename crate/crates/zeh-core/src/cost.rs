//! Sample-average cost models and their exact subgradients.
//!
//! Three investment models share one scenario stream: households acting
//! alone (panels plus a private battery), one pooled neighborhood
//! investment, and a user/manager game around shared storage. Every cost is
//! convex piecewise linear in the decision, so subgradients are exact; at a
//! kink each max term contributes the slope of its greater-argument piece,
//! which keeps the choice deterministic and inside the subdifferential.

use crate::error::{Error, Result};
use crate::model::{ChargeProfile, CostBreakdown, Mode, Subgradient, Tariff};
use crate::numeric::sample_mean;
use crate::scenario::ScenarioSet;

/// max{v, 0}.
#[inline]
fn pos(v: f64) -> f64 {
    v.max(0.0)
}

/// Kink rule: a max term is active exactly when its argument is >= 0.
#[inline]
fn active(v: f64) -> bool {
    v >= 0.0
}

#[inline]
fn ind(v: f64) -> f64 {
    if active(v) {
        1.0
    } else {
        0.0
    }
}

fn check_user(ss: &ScenarioSet, user: usize) -> Result<()> {
    if user >= ss.n_users() {
        return Err(Error::invalid(format!(
            "user {user} out of range (scenario set has {} users)",
            ss.n_users()
        )));
    }
    Ok(())
}

fn check_decision(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

fn check_beta(beta: &[f64], n_days: usize) -> Result<()> {
    if beta.len() != n_days {
        return Err(Error::invalid(format!(
            "charge profile has {} entries, expected {} days",
            beta.len(),
            n_days
        )));
    }
    Ok(())
}

fn check_vec(name: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::invalid(format!(
            "{name} has {} entries, expected {n} users",
            v.len()
        )));
    }
    for e in v {
        check_decision(name, *e)?;
    }
    Ok(())
}

/// One household's expected cost of buying `a` m^2 of panels and a private
/// battery of `c` kWh: capital, plus gas for shortfall past the battery's
/// charged share, plus the reverse-flow penalty past its empty share.
pub fn individual_cost(
    ss: &ScenarioSet,
    user: usize,
    tariff: &Tariff,
    beta: &[f64],
    a: f64,
    c: f64,
) -> Result<CostBreakdown> {
    Ok(individual_eval(ss, user, tariff, beta, a, c)?.0)
}

/// Subgradient of [`individual_cost`] in `(a, c)`.
pub fn individual_subgradient(
    ss: &ScenarioSet,
    user: usize,
    tariff: &Tariff,
    beta: &[f64],
    a: f64,
    c: f64,
) -> Result<Subgradient> {
    Ok(individual_eval(ss, user, tariff, beta, a, c)?.1)
}

/// Cost and subgradient in one scenario pass.
pub fn individual_eval(
    ss: &ScenarioSet,
    user: usize,
    tariff: &Tariff,
    beta: &[f64],
    a: f64,
    c: f64,
) -> Result<(CostBreakdown, Subgradient)> {
    tariff.validate(Mode::Individual)?;
    check_user(ss, user)?;
    check_beta(beta, ss.n_days())?;
    check_decision("panel area", a)?;
    check_decision("battery capacity", c)?;

    let t_days = ss.n_days();
    let src = ss.source();
    let m = sample_mean(
        ss.n_samples(),
        4,
        || (vec![0.0; t_days], vec![0.0; t_days]),
        |(x, y), j, out| {
            src.fill_user(j, user, x, y);
            let (mut gas, mut rev, mut da, mut dc) = (0.0, 0.0, 0.0, 0.0);
            for t in 0..t_days {
                let gas_arg = x[t] - a * y[t] - beta[t] * c;
                let rev_arg = a * y[t] - x[t] - (1.0 - beta[t]) * c;
                gas += pos(gas_arg);
                rev += pos(rev_arg);
                if active(gas_arg) {
                    da -= tariff.pi_gas * y[t];
                    dc -= tariff.pi_gas * beta[t];
                }
                if active(rev_arg) {
                    da += tariff.pi_rev * y[t];
                    dc -= tariff.pi_rev * (1.0 - beta[t]);
                }
            }
            out.copy_from_slice(&[gas, rev, da, dc]);
        },
    );

    let breakdown = CostBreakdown {
        capital_pv: a * tariff.pi_pv,
        capital_battery: c * tariff.pi_b,
        gas: tariff.pi_gas * m[0],
        reverse_flow: tariff.pi_rev * m[1],
        ..Default::default()
    }
    .sealed();
    let grad = Subgradient { components: vec![tariff.pi_pv + m[2], tariff.pi_b + m[3]] };
    Ok((breakdown, grad))
}

/// Expected cost of one pooled investment: every panel area plus one shared
/// battery of `c_total` kWh, with all imbalances netted across the
/// neighborhood before gas and reverse-flow prices apply.
pub fn global_cost(
    ss: &ScenarioSet,
    tariff: &Tariff,
    profile: &ChargeProfile,
    a: &[f64],
    c_total: f64,
) -> Result<CostBreakdown> {
    Ok(global_eval(ss, tariff, profile, a, c_total)?.0)
}

/// Subgradient of [`global_cost`] in `(a_1..a_n, c_total)`.
pub fn global_subgradient(
    ss: &ScenarioSet,
    tariff: &Tariff,
    profile: &ChargeProfile,
    a: &[f64],
    c_total: f64,
) -> Result<Subgradient> {
    Ok(global_eval(ss, tariff, profile, a, c_total)?.1)
}

/// Cost and subgradient in one scenario pass.
pub fn global_eval(
    ss: &ScenarioSet,
    tariff: &Tariff,
    profile: &ChargeProfile,
    a: &[f64],
    c_total: f64,
) -> Result<(CostBreakdown, Subgradient)> {
    tariff.validate(Mode::Global)?;
    let (n, t_days) = (ss.n_users(), ss.n_days());
    if profile.n_users() != n || profile.n_days() != t_days {
        return Err(Error::invalid(format!(
            "charge profile is {}x{}, scenarios are {n}x{t_days}",
            profile.n_users(),
            profile.n_days()
        )));
    }
    check_vec("panel areas", a, n)?;
    check_decision("pooled battery capacity", c_total)?;

    // The pooled imbalance subtracts each user's charged share, so the
    // battery term enters once per user per day.
    let beta_day_sum: Vec<f64> = (0..t_days)
        .map(|t| (0..n).map(|i| profile.user(i)[t]).sum())
        .collect();

    let src = ss.source();
    let m = sample_mean(
        ss.n_samples(),
        n + 3,
        || {
            (
                vec![0.0; n * t_days],
                vec![0.0; n * t_days],
                vec![0.0; t_days],
                vec![0.0; t_days],
            )
        },
        |(x, y, gas_arg, rev_arg), j, out| {
            src.fill_sample(j, x, y);
            gas_arg.fill(0.0);
            rev_arg.fill(0.0);
            for i in 0..n {
                let beta = profile.user(i);
                for t in 0..t_days {
                    let net = x[i * t_days + t] - a[i] * y[i * t_days + t];
                    gas_arg[t] += net - beta[t] * c_total;
                    rev_arg[t] += -net - (1.0 - beta[t]) * c_total;
                }
            }
            // out = [gas, rev, da_0..da_{n-1}, dc]
            for t in 0..t_days {
                out[0] += pos(gas_arg[t]);
                out[1] += pos(rev_arg[t]);
                if active(gas_arg[t]) {
                    for i in 0..n {
                        out[2 + i] -= tariff.pi_gas * y[i * t_days + t];
                    }
                    out[n + 2] -= tariff.pi_gas * beta_day_sum[t];
                }
                if active(rev_arg[t]) {
                    for i in 0..n {
                        out[2 + i] += tariff.pi_rev * y[i * t_days + t];
                    }
                    out[n + 2] -= tariff.pi_rev * (n as f64 - beta_day_sum[t]);
                }
            }
        },
    );

    let breakdown = CostBreakdown {
        capital_pv: a.iter().sum::<f64>() * tariff.pi_pv,
        capital_battery: c_total * tariff.pi_b,
        gas: tariff.pi_gas * m[0],
        reverse_flow: tariff.pi_rev * m[1],
        ..Default::default()
    }
    .sealed();
    let mut components: Vec<f64> = (0..n).map(|i| tariff.pi_pv + m[2 + i]).collect();
    components.push(tariff.pi_b + m[n + 2]);
    Ok((breakdown, Subgradient { components }))
}

/// One game user's expected cost of buying `a` m^2 of panels given a storage
/// allocation of `c_alloc` kWh: capital, minus feed-in revenue for surplus,
/// plus storage draws priced at `pi_out`, plus gas past the allocation.
pub fn user_cost(
    ss: &ScenarioSet,
    user: usize,
    tariff: &Tariff,
    a: f64,
    c_alloc: f64,
) -> Result<CostBreakdown> {
    Ok(user_eval(ss, user, tariff, a, c_alloc)?.0)
}

/// Subgradient of [`user_cost`] in `a`.
///
/// Per sample the cost is a three-piece convex function of `a`; the piece is
/// picked by sign tests against `a Y - X` and `X - a Y - c_alloc`, so days
/// with zero generation contribute only the capital slope.
pub fn user_subgradient(
    ss: &ScenarioSet,
    user: usize,
    tariff: &Tariff,
    a: f64,
    c_alloc: f64,
) -> Result<Subgradient> {
    Ok(user_eval(ss, user, tariff, a, c_alloc)?.1)
}

/// Cost and subgradient in one scenario pass.
pub fn user_eval(
    ss: &ScenarioSet,
    user: usize,
    tariff: &Tariff,
    a: f64,
    c_alloc: f64,
) -> Result<(CostBreakdown, Subgradient)> {
    tariff.validate(Mode::Game)?;
    check_user(ss, user)?;
    check_decision("panel area", a)?;
    check_decision("storage allocation", c_alloc)?;

    let t_days = ss.n_days();
    let src = ss.source();
    let m = sample_mean(
        ss.n_samples(),
        4,
        || (vec![0.0; t_days], vec![0.0; t_days]),
        |(x, y), j, out| {
            src.fill_user(j, user, x, y);
            let (mut surplus, mut drawn, mut gas, mut da) = (0.0, 0.0, 0.0, 0.0);
            for t in 0..t_days {
                let long = a * y[t] - x[t];
                if active(long) {
                    surplus += long;
                    da -= tariff.pi_in * y[t];
                } else if x[t] - a * y[t] - c_alloc <= 0.0 {
                    drawn += -long;
                    da -= tariff.pi_out * y[t];
                } else {
                    drawn += c_alloc;
                    gas += -long - c_alloc;
                    da -= tariff.pi_gas * y[t];
                }
            }
            out.copy_from_slice(&[surplus, drawn, gas, da]);
        },
    );

    let breakdown = CostBreakdown {
        capital_pv: a * tariff.pi_pv,
        sale: -tariff.pi_in * m[0],
        purchase: tariff.pi_out * m[1],
        gas: tariff.pi_gas * m[2],
        ..Default::default()
    }
    .sealed();
    Ok((breakdown, Subgradient { components: vec![tariff.pi_pv + m[3]] }))
}

/// The storage manager's expected cost of owning allocations `c_alloc` given
/// user panel areas `a`: capital, net exchange with users, grid purchases to
/// cover draws past the charged share, and the reverse-flow penalty for
/// feed-in past the empty share.
pub fn manager_cost(
    ss: &ScenarioSet,
    tariff: &Tariff,
    beta_a: &[f64],
    a: &[f64],
    c_alloc: &[f64],
) -> Result<CostBreakdown> {
    Ok(manager_eval(ss, tariff, beta_a, a, c_alloc)?.0)
}

/// Subgradient of [`manager_cost`] in `c_alloc`.
pub fn manager_subgradient(
    ss: &ScenarioSet,
    tariff: &Tariff,
    beta_a: &[f64],
    a: &[f64],
    c_alloc: &[f64],
) -> Result<Subgradient> {
    Ok(manager_eval(ss, tariff, beta_a, a, c_alloc)?.1)
}

/// Cost and subgradient in one scenario pass.
///
/// The cost is convex in `c_alloc` because it is convex and nondecreasing in
/// `(-P_out, -C_a)` (this is where `pi_out >= pi_grid` is needed), which are
/// themselves convex in the allocations. The subgradient is assembled by the
/// chain rule for that composition: nonnegative outer weights `mu` times
/// inner slopes, with the draw term `min(shortfall, c_i)` treated as sloped
/// whenever `c_i <= shortfall`.
pub fn manager_eval(
    ss: &ScenarioSet,
    tariff: &Tariff,
    beta_a: &[f64],
    a: &[f64],
    c_alloc: &[f64],
) -> Result<(CostBreakdown, Subgradient)> {
    tariff.validate(Mode::Game)?;
    let (n, t_days) = (ss.n_users(), ss.n_days());
    check_beta(beta_a, t_days)?;
    check_vec("panel areas", a, n)?;
    check_vec("storage allocations", c_alloc, n)?;
    let c_total: f64 = c_alloc.iter().sum();

    let src = ss.source();
    let m = sample_mean(
        ss.n_samples(),
        n + 3,
        || (vec![0.0; n * t_days], vec![0.0; n * t_days]),
        |(x, y), j, out| {
            src.fill_sample(j, x, y);
            // out = [exchange, grid, rev, dc_0..dc_{n-1}]
            for t in 0..t_days {
                let mut p_in = 0.0;
                let mut p_out = 0.0;
                for i in 0..n {
                    let long = a[i] * y[i * t_days + t] - x[i * t_days + t];
                    p_in += pos(long);
                    p_out += pos(-long).min(c_alloc[i]);
                }
                let grid_arg = p_out - p_in - beta_a[t] * c_total;
                let rev_arg = p_in - p_out - (1.0 - beta_a[t]) * c_total;
                out[0] += tariff.pi_in * p_in - tariff.pi_out * p_out;
                out[1] += pos(grid_arg);
                out[2] += pos(rev_arg);

                // Outer weights for (-P_out, -C_a); both nonnegative under
                // the game's price ordering.
                let mu_v = tariff.pi_out - tariff.pi_grid * ind(grid_arg)
                    + tariff.pi_rev * ind(rev_arg);
                let mu_w = tariff.pi_grid * beta_a[t] * ind(grid_arg)
                    + tariff.pi_rev * (1.0 - beta_a[t]) * ind(rev_arg);
                for i in 0..n {
                    let shortfall = pos(x[i * t_days + t] - a[i] * y[i * t_days + t]);
                    let sloped = if c_alloc[i] <= shortfall { mu_v } else { 0.0 };
                    out[3 + i] -= sloped + mu_w;
                }
            }
        },
    );

    let breakdown = CostBreakdown {
        capital_battery: c_total * tariff.pi_b,
        exchange: m[0],
        grid: tariff.pi_grid * m[1],
        reverse_flow: tariff.pi_rev * m[2],
        ..Default::default()
    }
    .sealed();
    let components: Vec<f64> = (0..n).map(|i| tariff.pi_b + m[3 + i]).collect();
    Ok((breakdown, Subgradient { components }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioSet;

    fn tariff() -> Tariff {
        Tariff::default()
    }

    fn two_day_set() -> ScenarioSet {
        // Two samples, one user, two days.
        ScenarioSet::dense(
            2,
            1,
            2,
            vec![10.0, 4.0, 7.0, 0.0],
            vec![2.0, 1.0, 0.0, 3.0],
            0,
            "unit",
        )
        .unwrap()
    }

    #[test]
    fn user_cost_is_nonincreasing_in_allocation() {
        // pi_gas >= pi_out, so a bigger allocation never hurts the user.
        let ss = two_day_set();
        let mut prev = f64::INFINITY;
        for c in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let total = user_cost(&ss, 0, &tariff(), 1.5, c).unwrap().total;
            assert!(total <= prev + 1e-12);
            prev = total;
        }
    }

    #[test]
    fn individual_cost_averages_over_samples() {
        // Hand-average of the two samples at a = 1, c = 2, beta = 0.5:
        // sample 0: gas max(10-2-1,0)+max(4-1-1,0)=9; rev 0
        // sample 1: gas max(7-0-1,0)+max(0-3-1,0)=6; rev max(3-0-1,0)=2
        // mean gas = 7.5 -> 225; mean rev = 1 -> 20; capital 2000+9000.
        let b = individual_cost(&two_day_set(), 0, &tariff(), &[0.5, 0.5], 1.0, 2.0).unwrap();
        approx::assert_relative_eq!(b.gas, 225.0, max_relative = 1e-12);
        approx::assert_relative_eq!(b.reverse_flow, 20.0, max_relative = 1e-12);
        approx::assert_relative_eq!(b.total, 11245.0, max_relative = 1e-12);
    }

    #[test]
    fn game_kernels_reject_disordered_tariffs() {
        let ss = two_day_set();
        let bad = Tariff { pi_out: 40.0, ..tariff() };
        assert!(user_cost(&ss, 0, &bad, 1.0, 1.0).is_err());
        assert!(manager_cost(&ss, &bad, &[0.5, 0.5], &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn manager_allocation_sums_drive_capital() {
        let ss = ScenarioSet::dense(1, 2, 1, vec![0.0, 0.0], vec![1.0, 1.0], 0, "unit").unwrap();
        let b = manager_cost(&ss, &tariff(), &[0.5], &[0.0, 0.0], &[1.5, 2.5]).unwrap();
        approx::assert_relative_eq!(b.capital_battery, 4.0 * 4500.0, max_relative = 1e-12);
    }
}
