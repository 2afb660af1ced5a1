//! Solver accuracy audits against the exhaustive grid evaluator.
//!
//! Randomized convex piecewise-linear instances and small scenario problems
//! are solved twice: by projected subgradients and by brute force. The two
//! must agree within one grid cell's worth of objective variation, and no
//! random feasible point may ever beat the solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zeh_core::cost::{individual_cost, manager_cost, user_cost};
use zeh_core::game::{best_response_manager, best_response_user};
use zeh_core::solver::{
    grid_oracle, minimize_box, solve_global, solve_individual, SolverConfig,
};
use zeh_core::{Bounds, ChargeProfile, ScenarioSet, Tariff};

fn tariff() -> Tariff {
    Tariff::default()
}

/// The solver stops once its optimality-gap certificate is below
/// `stop_tol * (1 + |f|)`, so it may sit this far above the true minimum.
fn gap_slack(objective: f64) -> f64 {
    2e-8 * (1.0 + objective.abs()) + 1e-9
}

/// Convex piecewise-linear test objective: a max of affine pieces plus
/// nonnegatively weighted hinges.
struct PlInstance {
    pieces: Vec<(Vec<f64>, f64)>,
    hinges: Vec<(Vec<f64>, f64, f64)>,
}

impl PlInstance {
    fn random(rng: &mut ChaCha8Rng, dim: usize) -> Self {
        let pieces = (0..rng.random_range(3..6))
            .map(|_| {
                (
                    (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect(),
                    rng.random_range(-2.0..2.0),
                )
            })
            .collect();
        let hinges = (0..rng.random_range(1..4))
            .map(|_| {
                (
                    (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect(),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0.0..2.0),
                )
            })
            .collect();
        PlInstance { pieces, hinges }
    }

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut best = f64::NEG_INFINITY;
        let mut grad = vec![0.0; x.len()];
        for (g, b) in &self.pieces {
            let v = b + g.iter().zip(x).map(|(gi, xi)| gi * xi).sum::<f64>();
            if v > best {
                best = v;
                grad.copy_from_slice(g);
            }
        }
        let mut f = best;
        for (u, v0, w) in &self.hinges {
            let arg = v0 + u.iter().zip(x).map(|(ui, xi)| ui * xi).sum::<f64>();
            if arg >= 0.0 {
                f += w * arg;
                for (gd, ui) in grad.iter_mut().zip(u) {
                    *gd += w * ui;
                }
            }
        }
        (f, grad)
    }

    /// Euclidean bound on every subgradient: objective variation over a grid
    /// cell is at most this times the cell diagonal.
    fn lipschitz(&self) -> f64 {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let piece_max = self.pieces.iter().map(|(g, _)| norm(g)).fold(0.0, f64::max);
        let hinge_sum: f64 = self.hinges.iter().map(|(u, _, w)| w * norm(u)).sum();
        piece_max + hinge_sum
    }
}

#[test]
fn random_piecewise_instances_match_the_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for (dim, resolution, instances) in [(1usize, 4001usize, 6usize), (2, 201, 4), (3, 41, 3)] {
        for _ in 0..instances {
            let inst = PlInstance::random(&mut rng, dim);
            let lo = vec![-2.0; dim];
            let hi = vec![2.0; dim];
            let x0: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();

            let grid = grid_oracle(|x| Ok(inst.eval(x).0), &lo, &hi, resolution).unwrap();
            let solved =
                minimize_box(&lo, &hi, &x0, |x| Ok(inst.eval(x)), &SolverConfig::default())
                    .unwrap();

            let cell = 4.0 / (resolution - 1) as f64;
            let slack = inst.lipschitz() * cell * (dim as f64).sqrt() + 1e-6;
            assert!(
                solved.objective <= grid.objective + gap_slack(grid.objective),
                "solver {} must not lose to the {dim}-D grid {}",
                solved.objective,
                grid.objective
            );
            assert!(
                solved.objective >= grid.objective - slack,
                "solver {} suspiciously below grid {} - {slack}",
                solved.objective,
                grid.objective
            );

            // No random feasible point may beat the solver.
            for _ in 0..1000 {
                let p: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                assert!(inst.eval(&p).0 + 1e-9 >= solved.objective);
            }
        }
    }
}

#[test]
fn individual_solve_on_dead_scenarios_buys_nothing() {
    let ss = ScenarioSet::dense(1, 1, 2, vec![0.0; 2], vec![0.0; 2], 0, "toy").unwrap();
    let bounds = Bounds::uniform(1, 10.0, 10.0).unwrap();
    let r = solve_individual(&ss, 0, &tariff(), &[0.5, 0.5], &bounds, &SolverConfig::default())
        .unwrap();
    assert_eq!(r.objective, 0.0);
    assert_eq!(r.decision.a[0], 0.0);
    assert_eq!(r.decision.c[0], 0.0);
    assert!(r.converged);
}

#[test]
fn individual_solve_matches_dense_grid_on_single_sample() {
    // Cheap panels, cheap battery: optimum sits at the shortfall boundary
    // a = 5, c = 0 with cost 125 (hand-derived).
    let ss = ScenarioSet::dense(1, 1, 1, vec![10.0], vec![2.0], 0, "toy").unwrap();
    let t = Tariff { pi_pv: 25.0, pi_b: 10.0, ..tariff() };
    let bounds = Bounds::uniform(1, 10.0, 10.0).unwrap();
    let solved = solve_individual(&ss, 0, &t, &[0.5], &bounds, &SolverConfig::default()).unwrap();
    let grid = grid_oracle(
        |x| Ok(individual_cost(&ss, 0, &t, &[0.5], x[0], x[1])?.total),
        &[0.0, 0.0],
        &[10.0, 10.0],
        2001,
    )
    .unwrap();
    assert!((grid.objective - 125.0).abs() < 1e-9);
    assert!(solved.objective <= grid.objective + gap_slack(grid.objective));
    assert!((solved.objective - 125.0).abs() < 1e-3, "got {}", solved.objective);

    // The reported objective must be a re-evaluation at the decision.
    let again = individual_cost(&ss, 0, &t, &[0.5], solved.decision.a[0], solved.decision.c[0])
        .unwrap()
        .total;
    assert_eq!(again, solved.objective);

    // Probabilistic optimality audit: random feasible points never win.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let a = rng.random_range(0.0..10.0);
        let c = rng.random_range(0.0..10.0);
        let f = individual_cost(&ss, 0, &t, &[0.5], a, c).unwrap().total;
        assert!(f + 1e-9 >= solved.objective);
    }
}

#[test]
fn free_panels_balance_gas_against_reverse_flow() {
    // pi_pv = 0 and a prohibitive battery price: the panel area settles
    // where shortfall and surplus meet (a = X/Y = 5), with zero storage.
    let ss = ScenarioSet::dense(1, 1, 1, vec![10.0], vec![2.0], 0, "toy").unwrap();
    let t = Tariff { pi_pv: 0.0, pi_b: 1e6, ..tariff() };
    let bounds = Bounds::uniform(1, 10.0, 10.0).unwrap();
    let solved = solve_individual(&ss, 0, &t, &[0.5], &bounds, &SolverConfig::default()).unwrap();
    let grid = grid_oracle(
        |x| Ok(individual_cost(&ss, 0, &t, &[0.5], x[0], 0.0)?.total),
        &[0.0],
        &[10.0],
        4001,
    )
    .unwrap();
    assert_eq!(grid.objective, 0.0);
    assert!((solved.decision.a[0] - 5.0).abs() < 1e-3);
    assert!(solved.decision.c[0] < 1e-8);
    assert!(solved.objective < 1e-2, "got {}", solved.objective);
}

#[test]
fn pooled_solve_with_one_user_equals_the_individual_solve() {
    let ss = ScenarioSet::dense(
        3,
        1,
        2,
        vec![10.0, 4.0, 7.0, 9.0, 5.0, 6.0],
        vec![2.0, 1.0, 0.5, 1.5, 2.5, 1.0],
        0,
        "toy",
    )
    .unwrap();
    let bounds = Bounds::uniform(1, 10.0, 10.0).unwrap();
    let profile = ChargeProfile::constant(1, 2, 0.5, 0.5).unwrap();
    let cfg = SolverConfig::default();
    let solo = solve_individual(&ss, 0, &tariff(), profile.user(0), &bounds, &cfg).unwrap();
    let pooled = solve_global(&ss, &tariff(), &profile, &bounds, &cfg).unwrap();
    approx::assert_relative_eq!(solo.objective, pooled.objective, max_relative = 1e-12);
    approx::assert_relative_eq!(solo.decision.a[0], pooled.decision.a[0], max_relative = 1e-12);
    approx::assert_relative_eq!(solo.decision.c[0], pooled.decision.c[0], max_relative = 1e-12);
}

#[test]
fn pooled_solve_matches_three_dimensional_grid() {
    let ss = ScenarioSet::dense(
        2,
        2,
        1,
        vec![10.0, 4.0, 6.0, 8.0],
        vec![2.0, 1.0, 1.0, 2.0],
        0,
        "toy",
    )
    .unwrap();
    let bounds = Bounds::new(vec![5.0, 5.0], vec![4.0, 4.0]).unwrap();
    let profile = ChargeProfile::constant(2, 1, 0.5, 0.5).unwrap();
    let solved = solve_global(&ss, &tariff(), &profile, &bounds, &SolverConfig::default()).unwrap();
    let grid = grid_oracle(
        |x| Ok(zeh_core::cost::global_cost(&ss, &tariff(), &profile, &x[..2], x[2])?.total),
        &[0.0, 0.0, 0.0],
        &[5.0, 5.0, 8.0],
        41,
    )
    .unwrap();
    assert!(solved.objective <= grid.objective + gap_slack(grid.objective));
    // Grid resolution is coarse here; allow one cell of slope in each axis.
    let slack = (2060.0 + 2060.0 + 4530.0) * (8.0 / 40.0);
    assert!(solved.objective >= grid.objective - slack);
}

#[test]
fn user_best_response_matches_grid_and_degenerate_cases() {
    let ss = ScenarioSet::dense(2, 1, 1, vec![10.0, 6.0], vec![2.0, 1.0], 0, "toy").unwrap();
    let bounds = Bounds::uniform(1, 10.0, 10.0).unwrap();
    let cfg = SolverConfig::default();

    let br = best_response_user(&ss, 0, &tariff(), 2.0, &bounds, 0.0, &cfg).unwrap();
    let grid = grid_oracle(
        |x| Ok(user_cost(&ss, 0, &tariff(), x[0], 2.0)?.total),
        &[0.0],
        &[10.0],
        4001,
    )
    .unwrap();
    assert!(br.objective <= grid.objective + gap_slack(grid.objective));
    assert!(br.objective >= grid.objective - 2060.0 * (10.0 / 4000.0));

    // A huge allocation plus pi_out below the panel's per-kWh cost: buying
    // from storage always beats building panels.
    let pricey = Tariff { pi_pv: 4000.0, ..tariff() };
    let lazy = best_response_user(&ss, 0, &pricey, 100.0, &bounds, 5.0, &cfg).unwrap();
    assert!(lazy.x[0] < 1e-6, "a = {}", lazy.x[0]);
}

#[test]
fn manager_best_response_matches_one_and_two_dimensional_grids() {
    let cfg = SolverConfig::default();

    // One user, one day: the manager trades capital against grid draws.
    let ss1 = ScenarioSet::dense(1, 1, 1, vec![10.0], vec![2.0], 0, "toy").unwrap();
    let t = Tariff { pi_b: 15.0, ..tariff() };
    let bounds1 = Bounds::uniform(1, 10.0, 10.0).unwrap();
    let br1 = best_response_manager(&ss1, &t, &[0.5], &[1.0], &bounds1, &[0.0], &cfg).unwrap();
    let grid1 = grid_oracle(
        |x| Ok(manager_cost(&ss1, &t, &[0.5], &[1.0], &[x[0]])?.total),
        &[0.0],
        &[10.0],
        4001,
    )
    .unwrap();
    assert!(br1.objective <= grid1.objective + gap_slack(grid1.objective));
    assert!(br1.objective >= grid1.objective - 40.0 * (10.0 / 4000.0) - 1e-6);

    // Two users, two samples against a 2-D grid.
    let ss2 = ScenarioSet::dense(
        2,
        2,
        1,
        vec![10.0, 4.0, 6.0, 8.0],
        vec![2.0, 1.0, 1.0, 2.0],
        0,
        "toy",
    )
    .unwrap();
    let bounds2 = Bounds::uniform(2, 10.0, 6.0).unwrap();
    let br2 =
        best_response_manager(&ss2, &t, &[0.5], &[2.0, 1.0], &bounds2, &[3.0, 3.0], &cfg).unwrap();
    let grid2 = grid_oracle(
        |x| Ok(manager_cost(&ss2, &t, &[0.5], &[2.0, 1.0], x)?.total),
        &[0.0, 0.0],
        &[6.0, 6.0],
        201,
    )
    .unwrap();
    assert!(br2.objective <= grid2.objective + gap_slack(grid2.objective));
    assert!(br2.objective >= grid2.objective - 2.0 * 55.0 * (6.0 / 200.0) - 1e-6);
}
