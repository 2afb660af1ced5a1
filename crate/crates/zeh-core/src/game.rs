//! Best-response dynamics for the shared-storage investment game.
//!
//! Users pick panel areas against their storage allocations; the manager
//! picks allocations against the panel areas. Rounds alternate user and
//! manager best responses (Gauss-Seidel) until decisions stop moving, a
//! round cap is hit, or the decision sequence revisits a state. Equilibria
//! are audited by unilateral-deviation grid scans, and a comparison driver
//! runs all three investment models on one scenario set.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{individual_cost, manager_eval, user_cost, user_eval};
use crate::error::{Error, Result};
use crate::model::{Bounds, ChargeProfile, Decision, Mode, Tariff};
use crate::numeric::sample_mean;
use crate::scenario::ScenarioSet;
use crate::solver::{
    grid_oracle, minimize_box, solve_global, solve_individual_all, MinimizeResult, SolveResult,
    SolverConfig,
};

/// Settings for [`solve_game`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    /// Cap on best-response rounds.
    pub max_rounds: usize,
    /// Converged when no decision coordinate moves more than this across one
    /// full round.
    pub tol: f64,
    /// Fraction of each best response applied, in (0, 1]; 1 is pure best
    /// response.
    pub damping: f64,
    /// Warm-start decision; defaults to no investment at all.
    pub start: Option<Decision>,
    /// Settings for the inner best-response solves.
    pub solver: SolverConfig,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            max_rounds: 100,
            tol: 1e-4,
            damping: 1.0,
            start: None,
            solver: SolverConfig::default(),
        }
    }
}

impl GameConfig {
    fn validate(&self) -> Result<()> {
        if self.max_rounds == 0 {
            return Err(Error::invalid("max_rounds must be >= 1"));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be finite and > 0, got {}", self.tol)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

/// One full round of best responses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round number.
    pub round: usize,
    /// Decision after the round.
    pub decision: Decision,
    /// Each user's cost at the round-end decision.
    pub user_costs: Vec<f64>,
    /// The manager's cost at the round-end decision.
    pub manager_cost: f64,
    /// Users plus manager.
    pub total_cost: f64,
    /// Max-norm decision change over the round.
    pub max_change: f64,
}

/// Outcome of the best-response iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumResult {
    /// Final (or best revisited) panel areas and allocations.
    pub state: Decision,
    /// Each user's cost at `state`.
    pub user_costs: Vec<f64>,
    /// The manager's cost at `state`.
    pub manager_cost: f64,
    /// Users plus manager at `state`.
    pub total_cost: f64,
    /// Rounds executed.
    pub rounds: usize,
    /// Whether decisions stopped moving within tolerance.
    pub converged: bool,
    /// Whether the decision sequence revisited an earlier state; `state` is
    /// then the cheapest visited one.
    pub cycle_detected: bool,
    /// Every round's decisions and costs.
    pub history: Vec<RoundRecord>,
}

/// Outcome of a unilateral-deviation audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumCheck {
    /// Best cost improvement each user could reach on the scan grid.
    pub user_violations: Vec<f64>,
    /// Best improvement the manager could reach over coordinate and
    /// coordinate-pair scans.
    pub manager_violation: f64,
    /// Worst violation across all players.
    pub max_violation: f64,
    /// Whether the worst violation is within tolerance.
    pub passed: bool,
    /// Cost evaluations spent.
    pub evaluations: usize,
}

/// Valid lower bounds on the game costs over the whole decision box, from
/// one scenario pass: per-user panel-cost bounds and one manager bound.
fn game_lower_bounds(ss: &ScenarioSet, tariff: &Tariff, bounds: &Bounds) -> (Vec<f64>, f64) {
    let (n, t_days) = (ss.n_users(), ss.n_days());
    let src = ss.source();
    // Per-user mean total generation, plus the neighborhood's mean total
    // consumption in the last slot.
    let m = sample_mean(
        ss.n_samples(),
        n + 1,
        || (vec![0.0; n * t_days], vec![0.0; n * t_days]),
        |(x, y), j, out| {
            src.fill_sample(j, x, y);
            for i in 0..n {
                for t in 0..t_days {
                    out[i] += y[i * t_days + t];
                    out[n] += x[i * t_days + t];
                }
            }
        },
    );
    let user_lb: Vec<f64> = (0..n)
        .map(|i| {
            if tariff.pi_in > 0.0 {
                -tariff.pi_in * bounds.a_max()[i] * m[i]
            } else {
                0.0
            }
        })
        .collect();
    let sold_ub: f64 = (0..n).map(|i| bounds.a_max()[i] * m[i]).sum();
    let manager_lb = tariff.pi_in.min(0.0) * sold_ub - tariff.pi_out * m[n];
    (user_lb, manager_lb)
}

/// One user's best panel area given a storage allocation, from `start`.
pub fn best_response_user(
    ss: &ScenarioSet,
    user: usize,
    tariff: &Tariff,
    c_alloc: f64,
    bounds: &Bounds,
    start: f64,
    config: &SolverConfig,
) -> Result<MinimizeResult> {
    if user >= bounds.n_users() {
        return Err(Error::invalid(format!(
            "user {user} out of range for bounds over {} users",
            bounds.n_users()
        )));
    }
    let mut cfg = config.clone();
    if cfg.lower_bound.is_none() {
        cfg.lower_bound = Some(if tariff.pi_in > 0.0 {
            -tariff.pi_in * bounds.a_max()[user] * ss.mean_y_sum(user)?
        } else {
            0.0
        });
    }
    minimize_box(
        &[0.0],
        &[bounds.a_max()[user]],
        &[start],
        |x| {
            let (b, g) = user_eval(ss, user, tariff, x[0], c_alloc)?;
            Ok((b.total, g.components))
        },
        &cfg,
    )
}

/// The manager's best storage allocations given panel areas, from `start`.
pub fn best_response_manager(
    ss: &ScenarioSet,
    tariff: &Tariff,
    beta_a: &[f64],
    a: &[f64],
    bounds: &Bounds,
    start: &[f64],
    config: &SolverConfig,
) -> Result<MinimizeResult> {
    let n = ss.n_users();
    if bounds.n_users() != n {
        return Err(Error::invalid(format!(
            "bounds cover {} users, scenarios have {n}",
            bounds.n_users()
        )));
    }
    let mut cfg = config.clone();
    if cfg.lower_bound.is_none() {
        cfg.lower_bound = Some(game_lower_bounds(ss, tariff, bounds).1);
    }
    minimize_box(
        &vec![0.0; n],
        bounds.c_max(),
        start,
        |x| {
            let (b, g) = manager_eval(ss, tariff, beta_a, a, x)?;
            Ok((b.total, g.components))
        },
        &cfg,
    )
}

/// Quantized decision key for cycle detection (quantum 1e-6).
fn decision_key(a: &[f64], c: &[f64]) -> Vec<i64> {
    a.iter()
        .chain(c.iter())
        .map(|v| (v * 1e6).round() as i64)
        .collect()
}

/// Runs best-response rounds until the decisions settle, the round cap is
/// hit, or the sequence revisits a state (then the cheapest visited state is
/// returned, flagged). Non-convergence is a reported outcome, not an error.
pub fn solve_game(
    ss: &ScenarioSet,
    tariff: &Tariff,
    profile: &ChargeProfile,
    bounds: &Bounds,
    config: &GameConfig,
) -> Result<EquilibriumResult> {
    tariff.validate(Mode::Game)?;
    config.validate()?;
    let n = ss.n_users();
    if bounds.n_users() != n || profile.n_users() != n || profile.n_days() != ss.n_days() {
        return Err(Error::invalid(format!(
            "scenarios ({n} users, {} days), bounds ({} users) and charge profile ({} users, {} days) disagree",
            ss.n_days(),
            bounds.n_users(),
            profile.n_users(),
            profile.n_days()
        )));
    }
    let beta_a = profile.manager();

    let (mut a, mut c) = match &config.start {
        Some(d) => {
            if d.a.len() != n || d.c.len() != n {
                return Err(Error::invalid(format!(
                    "warm start covers {}/{} users, expected {n}",
                    d.a.len(),
                    d.c.len()
                )));
            }
            let clamp =
                |v: &[f64], hi: &[f64]| v.iter().zip(hi).map(|(x, h)| x.clamp(0.0, *h)).collect();
            (clamp(&d.a, bounds.a_max()), clamp(&d.c, bounds.c_max()))
        }
        None => (vec![0.0; n], vec![0.0; n]),
    };

    let (user_lb, manager_lb) = game_lower_bounds(ss, tariff, bounds);
    let manager_cfg = SolverConfig {
        lower_bound: config.solver.lower_bound.or(Some(manager_lb)),
        ..config.solver.clone()
    };

    let mut history: Vec<RoundRecord> = Vec::new();
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    seen.insert(decision_key(&a, &c), 0);
    let mut converged = false;
    let mut cycle_detected = false;
    let mut rounds = 0;

    for round in 1..=config.max_rounds {
        rounds = round;
        let a_old = a.clone();
        let c_old = c.clone();

        // Users are decoupled given the allocations.
        for i in 0..n {
            let cfg = SolverConfig {
                lower_bound: config.solver.lower_bound.or(Some(user_lb[i])),
                ..config.solver.clone()
            };
            let br = best_response_user(ss, i, tariff, c[i], bounds, a[i], &cfg)?;
            a[i] = a_old[i] + config.damping * (br.x[0] - a_old[i]);
        }
        let br = best_response_manager(ss, tariff, beta_a, &a, bounds, &c, &manager_cfg)?;
        for i in 0..n {
            c[i] = c_old[i] + config.damping * (br.x[i] - c_old[i]);
        }

        let mut max_change = 0.0f64;
        for i in 0..n {
            max_change = max_change.max((a[i] - a_old[i]).abs()).max((c[i] - c_old[i]).abs());
        }
        let mut user_costs = Vec::with_capacity(n);
        for i in 0..n {
            user_costs.push(user_cost(ss, i, tariff, a[i], c[i])?.total);
        }
        let manager_total = manager_eval(ss, tariff, beta_a, &a, &c)?.0.total;
        let total_cost = user_costs.iter().sum::<f64>() + manager_total;
        history.push(RoundRecord {
            round,
            decision: Decision { a: a.clone(), c: c.clone() },
            user_costs,
            manager_cost: manager_total,
            total_cost,
            max_change,
        });

        if max_change < config.tol {
            converged = true;
            break;
        }
        if seen.insert(decision_key(&a, &c), round).is_some() {
            cycle_detected = true;
            break;
        }
    }

    // On a cycle, settle on the cheapest state the dynamics visited.
    let pick = if cycle_detected {
        history
            .iter()
            .enumerate()
            .min_by(|(ia, ra), (ib, rb)| {
                ra.total_cost
                    .partial_cmp(&rb.total_cost)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(ia.cmp(ib))
            })
            .map(|(i, _)| i)
    } else {
        history.len().checked_sub(1)
    };

    match pick {
        Some(i) => {
            let r = &history[i];
            Ok(EquilibriumResult {
                state: r.decision.clone(),
                user_costs: r.user_costs.clone(),
                manager_cost: r.manager_cost,
                total_cost: r.total_cost,
                rounds,
                converged,
                cycle_detected,
                history,
            })
        }
        None => {
            // Zero-round edge: report the start state as-is.
            let mut user_costs = Vec::with_capacity(n);
            for i in 0..n {
                user_costs.push(user_cost(ss, i, tariff, a[i], c[i])?.total);
            }
            let manager_total = manager_eval(ss, tariff, beta_a, &a, &c)?.0.total;
            Ok(EquilibriumResult {
                state: Decision { a, c },
                total_cost: user_costs.iter().sum::<f64>() + manager_total,
                user_costs,
                manager_cost: manager_total,
                rounds,
                converged,
                cycle_detected,
                history,
            })
        }
    }
}

/// Audits a state by unilateral deviations: each user's panel area is
/// scanned on a grid, the manager's allocations are scanned per coordinate
/// and over a few deterministic coordinate pairs. Returns the worst cost
/// improvement found; the state passes when no improvement exceeds `tol`.
pub fn verify_equilibrium(
    ss: &ScenarioSet,
    tariff: &Tariff,
    profile: &ChargeProfile,
    bounds: &Bounds,
    state: &Decision,
    tol: f64,
    resolution: usize,
) -> Result<EquilibriumCheck> {
    tariff.validate(Mode::Game)?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::invalid(format!("tol must be finite and > 0, got {tol}")));
    }
    if resolution < 2 {
        return Err(Error::invalid("scan resolution must be >= 2 points per axis"));
    }
    let n = ss.n_users();
    if state.a.len() != n || state.c.len() != n || bounds.n_users() != n {
        return Err(Error::invalid(format!(
            "state ({}/{} users) and bounds ({}) must match the {n} scenario users",
            state.a.len(),
            state.c.len(),
            bounds.n_users()
        )));
    }
    let beta_a = profile.manager();
    let mut evaluations = 0usize;

    let mut user_violations = Vec::with_capacity(n);
    for i in 0..n {
        let base = user_cost(ss, i, tariff, state.a[i], state.c[i])?.total;
        let scan = grid_oracle(
            |x| Ok(user_cost(ss, i, tariff, x[0], state.c[i])?.total),
            &[0.0],
            &[bounds.a_max()[i]],
            resolution,
        )?;
        evaluations += scan.iterations + 1;
        user_violations.push((base - scan.objective).max(0.0));
    }

    let base = manager_eval(ss, tariff, beta_a, &state.a, &state.c)?.0.total;
    evaluations += 1;
    let mut best = base;
    for i in 0..n {
        let scan = grid_oracle(
            |x| {
                let mut c_try = state.c.clone();
                c_try[i] = x[0];
                Ok(manager_eval(ss, tariff, beta_a, &state.a, &c_try)?.0.total)
            },
            &[0.0],
            &[bounds.c_max()[i]],
            resolution,
        )?;
        evaluations += scan.iterations;
        best = best.min(scan.objective);
    }
    if n >= 2 {
        // A few deterministic coordinate pairs catch joint moves that the
        // per-coordinate scans miss.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let pair_res = resolution.min(41);
        for _ in 0..n.min(5) {
            let i = rng.random_range(0..n);
            let j = (i + rng.random_range(1..n)) % n;
            let scan = grid_oracle(
                |x| {
                    let mut c_try = state.c.clone();
                    c_try[i] = x[0];
                    c_try[j] = x[1];
                    Ok(manager_eval(ss, tariff, beta_a, &state.a, &c_try)?.0.total)
                },
                &[0.0, 0.0],
                &[bounds.c_max()[i], bounds.c_max()[j]],
                pair_res,
            )?;
            evaluations += scan.iterations;
            best = best.min(scan.objective);
        }
    }
    let manager_violation = (base - best).max(0.0);

    let max_violation = user_violations
        .iter()
        .cloned()
        .fold(manager_violation, f64::max);
    Ok(EquilibriumCheck {
        user_violations,
        manager_violation,
        max_violation,
        passed: max_violation <= tol,
        evaluations,
    })
}

/// Headline numbers for one model on one scenario set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSummary {
    /// Which model (and tariff variant) the row describes.
    pub label: String,
    /// Total expected neighborhood cost.
    pub total_cost: f64,
    /// Total panel area bought, m^2.
    pub pv_total_m2: f64,
    /// Total storage bought, kWh.
    pub battery_total_kwh: f64,
    /// Whether the underlying solve converged.
    pub converged: bool,
}

/// All three models (plus a no-investment baseline) on one scenario set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Cost at the pre-existing panel areas with zero storage.
    pub baseline: ModelSummary,
    /// Every household invests alone.
    pub individual: ModelSummary,
    /// One pooled neighborhood investment.
    pub global: ModelSummary,
    /// The storage game, one row per feed-in price variant.
    pub game: Vec<ModelSummary>,
    /// Per-user individual solves behind the summary.
    pub individual_details: Vec<SolveResult>,
    /// The pooled solve behind the summary.
    pub global_detail: SolveResult,
    /// The game runs behind the summaries, in variant order.
    pub game_details: Vec<EquilibriumResult>,
}

/// Solves all users individually, the pooled model, and the game once per
/// feed-in price variant, and prices a baseline decision (zero storage) for
/// reference.
#[allow(clippy::too_many_arguments)]
pub fn compare_models(
    ss: &ScenarioSet,
    tariff: &Tariff,
    pi_in_variants: &[f64],
    profile: &ChargeProfile,
    bounds: &Bounds,
    solver_config: &SolverConfig,
    game_config: &GameConfig,
    baseline_a: &[f64],
) -> Result<ComparisonReport> {
    let n = ss.n_users();
    if baseline_a.len() != n {
        return Err(Error::invalid(format!(
            "baseline covers {} users, scenarios have {n}",
            baseline_a.len()
        )));
    }
    if pi_in_variants.is_empty() {
        return Err(Error::invalid("at least one feed-in price variant is required"));
    }

    let mut baseline_total = 0.0;
    for (i, base_a) in baseline_a.iter().enumerate() {
        baseline_total += individual_cost(ss, i, tariff, profile.user(i), *base_a, 0.0)?.total;
    }
    let baseline = ModelSummary {
        label: "baseline".into(),
        total_cost: baseline_total,
        pv_total_m2: baseline_a.iter().sum(),
        battery_total_kwh: 0.0,
        converged: true,
    };

    let individual_details = solve_individual_all(ss, tariff, profile, bounds, solver_config)?;
    let individual = ModelSummary {
        label: "individual".into(),
        total_cost: individual_details.iter().map(|r| r.objective).sum(),
        pv_total_m2: individual_details.iter().map(|r| r.decision.pv_total()).sum(),
        battery_total_kwh: individual_details.iter().map(|r| r.decision.battery_total()).sum(),
        converged: individual_details.iter().all(|r| r.converged),
    };

    let global_detail = solve_global(ss, tariff, profile, bounds, solver_config)?;
    let global = ModelSummary {
        label: "global".into(),
        total_cost: global_detail.objective,
        pv_total_m2: global_detail.decision.pv_total(),
        battery_total_kwh: global_detail.decision.battery_total(),
        converged: global_detail.converged,
    };

    let mut game = Vec::with_capacity(pi_in_variants.len());
    let mut game_details = Vec::with_capacity(pi_in_variants.len());
    for &pi_in in pi_in_variants {
        let variant = Tariff { pi_in, ..tariff.clone() };
        let eq = solve_game(ss, &variant, profile, bounds, game_config)?;
        game.push(ModelSummary {
            label: format!("game(pi_in={pi_in})"),
            total_cost: eq.total_cost,
            pv_total_m2: eq.state.pv_total(),
            battery_total_kwh: eq.state.battery_total(),
            converged: eq.converged,
        });
        game_details.push(eq);
    }

    Ok(ComparisonReport {
        baseline,
        individual,
        global,
        game,
        individual_details,
        global_detail,
        game_details,
    })
}
