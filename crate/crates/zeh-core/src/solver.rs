//! Box-constrained convex minimization by projected subgradients.
//!
//! The workhorse is a path-based target-level subgradient stage (see Goffin
//! & Kiwiel, "On the convergence of the level method") interleaved with
//! golden-section line polishing: convexity makes every chord of the box
//! unimodal, so line searches are exact and cheap. One-dimensional problems
//! skip the subgradient stage entirely. An exhaustive grid evaluator serves
//! as ground truth in tests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{global_eval, individual_eval};
use crate::error::{Error, Result};
use crate::model::{Bounds, ChargeProfile, CostBreakdown, Decision, Tariff};
use crate::scenario::ScenarioSet;

/// Settings for [`minimize_box`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Cap on subgradient iterations; line polishing adds a bounded number
    /// of extra oracle calls on top.
    pub max_iters: usize,
    /// Converged when neither stage improves the best objective by more
    /// than `stop_tol * (1 + |best|)`.
    pub stop_tol: f64,
    /// Length of the improvement window, in iterations.
    pub stop_window: usize,
    /// Known lower bound on the objective; tightens the target level.
    pub lower_bound: Option<f64>,
    /// Diminishing-step scale; defaults to box diameter times the initial
    /// subgradient norm.
    pub fallback_c: Option<f64>,
    /// Record the objective of every oracle call in the result.
    pub keep_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 5000,
            stop_tol: 1e-8,
            stop_window: 50,
            lower_bound: None,
            fallback_c: None,
            keep_trace: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.stop_window == 0 {
            return Err(Error::invalid("max_iters and stop_window must be >= 1"));
        }
        if !(self.stop_tol > 0.0 && self.stop_tol < 1.0) {
            return Err(Error::invalid(format!(
                "stop_tol must lie in (0, 1), got {}",
                self.stop_tol
            )));
        }
        if let Some(lb) = self.lower_bound {
            if !lb.is_finite() {
                return Err(Error::invalid("lower_bound must be finite"));
            }
        }
        if let Some(c) = self.fallback_c {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::invalid("fallback_c must be finite and > 0"));
            }
        }
        Ok(())
    }
}

/// Outcome of a raw box minimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeResult {
    /// Best point found.
    pub x: Vec<f64>,
    /// Objective at `x`.
    pub objective: f64,
    /// Oracle evaluations spent (grid points for the grid oracle).
    pub iterations: usize,
    /// Whether a stop test fired before the iteration cap.
    pub converged: bool,
    /// Objective at every oracle call, when requested.
    pub trace: Option<Vec<f64>>,
}

/// Outcome of one model solve: the decision, its cost split, and solver
/// diagnostics. The objective always equals a re-evaluation of the cost at
/// the decision.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    /// Optimal panel areas and capacities.
    pub decision: Decision,
    /// Total expected cost at the decision.
    pub objective: f64,
    /// Cost split at the decision.
    pub breakdown: CostBreakdown,
    /// Oracle evaluations spent.
    pub iterations: usize,
    /// Whether a stop test fired before the iteration cap.
    pub converged: bool,
    /// Objective at every oracle call, when requested.
    pub trace: Option<Vec<f64>>,
}

fn check_box(lo: &[f64], hi: &[f64], x0: &[f64]) -> Result<()> {
    if lo.is_empty() || lo.len() != hi.len() || lo.len() != x0.len() {
        return Err(Error::invalid(format!(
            "box bounds and start must share one dimension >= 1, got {}/{}/{}",
            lo.len(),
            hi.len(),
            x0.len()
        )));
    }
    for d in 0..lo.len() {
        if !(lo[d].is_finite() && hi[d].is_finite() && lo[d] <= hi[d]) {
            return Err(Error::invalid(format!(
                "box axis {d} must satisfy lo <= hi with finite ends, got [{}, {}]",
                lo[d], hi[d]
            )));
        }
        if !x0[d].is_finite() {
            return Err(Error::invalid(format!("start[{d}] must be finite, got {}", x0[d])));
        }
    }
    Ok(())
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|g| g * g).sum()
}

/// Golden-ratio interior fraction.
const INV_PHI: f64 = 0.618_033_988_749_894_9;
/// Golden-section steps per line search; shrinks the chord by ~3e-13.
const GOLDEN_STEPS: usize = 60;
/// Full axis sweeps are worthwhile only in modest dimension.
const POLISH_AXIS_LIMIT: usize = 8;
/// Alternations of subgradient bursts and line polishing.
const POLISH_CYCLES: usize = 5;

/// Shared state for one minimization: oracle plumbing, best-iterate
/// tracking, and the two stages.
struct Engine<'a, F> {
    oracle: F,
    lo: &'a [f64],
    hi: &'a [f64],
    config: &'a SolverConfig,
    dim: usize,
    diameter: f64,
    best_x: Vec<f64>,
    best_f: f64,
    evals: usize,
    trace: Option<Vec<f64>>,
}

impl<F> Engine<'_, F>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (f, g) = (self.oracle)(x)?;
        if !f.is_finite() || g.len() != self.dim || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver(format!(
                "oracle returned a non-finite value or malformed subgradient at x = {x:?}"
            )));
        }
        self.evals += 1;
        if let Some(t) = self.trace.as_mut() {
            t.push(f);
        }
        if f < self.best_f {
            self.best_f = f;
            self.best_x.copy_from_slice(x);
        }
        Ok((f, g))
    }

    fn scale(&self, v: f64) -> f64 {
        self.config.stop_tol * (1.0 + v.abs())
    }

    fn at_lower_bound(&self) -> bool {
        self.config.lower_bound.is_some_and(|lb| self.best_f <= lb)
    }

    /// Runs the target-level subgradient stage from the current best point.
    /// Returns true when it stopped with a certificate (optimality gap below
    /// tolerance), false on a plain stall or an exhausted budget.
    fn level_stage(&mut self, budget: usize) -> Result<bool> {
        let mut x = self.best_x.clone();
        let (mut f, mut g) = self.eval(&x)?;
        if self.at_lower_bound() {
            return Ok(true);
        }
        let g0_norm = norm2(&g).sqrt();
        if g0_norm == 0.0 {
            return Ok(true);
        }

        // Aim `delta` below the phase record. While the aim is reachable
        // every step is Fejer-contracting toward its level set, so squared
        // step lengths within a phase sum to at most the squared diameter;
        // exceeding that budget proves the aim overshot the minimum, which
        // bounds the optimality gap by delta.
        let mut delta = match self.config.lower_bound {
            Some(lb) if f - lb > self.scale(f) => (f - lb) / 2.0,
            _ => 0.5 * self.diameter * g0_norm,
        };
        let mut f_rec = f;
        let mut path2 = 0.0;
        let diameter2 = self.diameter * self.diameter;
        let fallback_c = self.config.fallback_c.unwrap_or(self.diameter * g0_norm);
        let mut fallback = false;
        let mut since_improve = 0usize;
        let mut window_best = self.best_f;

        for k in 1..=budget {
            let gnorm2 = norm2(&g);
            if gnorm2 == 0.0 {
                return Ok(true);
            }
            let step = if fallback {
                fallback_c / ((k as f64).sqrt() * gnorm2)
            } else {
                let mut level = f_rec - delta;
                if let Some(lb) = self.config.lower_bound {
                    level = level.max(lb);
                }
                (f - level).max(0.0) / gnorm2
            };

            for d in 0..self.dim {
                x[d] = (x[d] - step * g[d]).clamp(self.lo[d], self.hi[d]);
            }
            path2 += step * step * gnorm2;

            let before = self.best_f;
            let (fx, gx) = self.eval(&x)?;
            f = fx;
            g = gx;
            since_improve = if self.best_f < before { 0 } else { since_improve + 1 };
            if self.at_lower_bound() {
                return Ok(true);
            }

            if !fallback {
                if f <= f_rec - 0.5 * delta {
                    // Sufficient descent: open a new phase at the same aim.
                    f_rec = f;
                    path2 = 0.0;
                } else if path2 > diameter2 {
                    // Wandered a full diameter without descent: the aim was
                    // below the reachable minimum, so the gap is under delta.
                    if delta <= self.scale(self.best_f) {
                        return Ok(true);
                    }
                    delta *= 0.5;
                    f_rec = self.best_f;
                    path2 = 0.0;
                }
                if since_improve >= 6 * self.config.stop_window {
                    // The aim dynamics are stuck; wander with diminishing
                    // steps from the best point instead.
                    fallback = true;
                    x.copy_from_slice(&self.best_x);
                    let (fx, gx) = self.eval(&x)?;
                    f = fx;
                    g = gx;
                }
            }

            if k % self.config.stop_window == 0 {
                let stalled = window_best - self.best_f <= self.scale(self.best_f);
                window_best = self.best_f;
                if stalled {
                    if fallback {
                        return Ok(false);
                    }
                    if delta <= self.scale(self.best_f) {
                        return Ok(true);
                    }
                    // No progress at this aim: sharpen it and restart from
                    // the best point.
                    delta *= 0.5;
                    f_rec = self.best_f;
                    path2 = 0.0;
                    x.copy_from_slice(&self.best_x);
                    let (fx, gx) = self.eval(&x)?;
                    f = fx;
                    g = gx;
                }
            }
        }
        Ok(false)
    }

    /// Exact minimization along the chord of the box through `anchor` in
    /// direction `dir` (golden section; every chord of a convex function is
    /// unimodal). The best iterate advances as a side effect.
    fn line_stage(&mut self, anchor: &[f64], dir: &[f64]) -> Result<()> {
        // Chord extent: anchor + t*dir stays in the box for t in [t_lo, t_hi].
        let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for d in 0..self.dim {
            if dir[d] == 0.0 {
                continue;
            }
            let (a, b) = (
                (self.lo[d] - anchor[d]) / dir[d],
                (self.hi[d] - anchor[d]) / dir[d],
            );
            t_lo = t_lo.max(a.min(b));
            t_hi = t_hi.min(a.max(b));
        }
        if !(t_lo.is_finite() && t_hi.is_finite() && t_hi - t_lo > 0.0) {
            return Ok(());
        }
        let mut probe = vec![0.0; self.dim];
        let at = |eng: &mut Self, t: f64, probe: &mut Vec<f64>| -> Result<f64> {
            for d in 0..eng.dim {
                probe[d] = (anchor[d] + t * dir[d]).clamp(eng.lo[d], eng.hi[d]);
            }
            Ok(eng.eval(probe)?.0)
        };
        let (mut a, mut b) = (t_lo, t_hi);
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = at(self, c, &mut probe)?;
        let mut fd = at(self, d, &mut probe)?;
        for _ in 0..GOLDEN_STEPS {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = at(self, c, &mut probe)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = at(self, d, &mut probe)?;
            }
        }
        Ok(())
    }

    /// One polishing cycle: axis line searches (in modest dimension) plus a
    /// search along the subgradient chord. Returns the improvement.
    fn polish_cycle(&mut self) -> Result<f64> {
        let start = self.best_f;
        if self.dim <= POLISH_AXIS_LIMIT {
            for axis in 0..self.dim {
                let anchor = self.best_x.clone();
                let mut dir = vec![0.0; self.dim];
                dir[axis] = 1.0;
                self.line_stage(&anchor, &dir)?;
            }
        }
        let anchor = self.best_x.clone();
        let (_, g) = self.eval(&anchor)?;
        if norm2(&g) > 0.0 {
            let dir: Vec<f64> = g.iter().map(|v| -v).collect();
            self.line_stage(&anchor, &dir)?;
        }
        Ok(start - self.best_f)
    }
}

/// Minimizes a convex objective over `[lo, hi]` from `x0`, given an oracle
/// returning the value and one subgradient. Deterministic: identical inputs
/// yield identical iterates. Non-finite oracle output aborts with the
/// offending point in the error.
pub fn minimize_box<F>(
    lo: &[f64],
    hi: &[f64],
    x0: &[f64],
    oracle: F,
    config: &SolverConfig,
) -> Result<MinimizeResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    check_box(lo, hi, x0)?;
    config.validate()?;
    let dim = lo.len();
    let diameter = (0..dim).map(|d| (hi[d] - lo[d]).powi(2)).sum::<f64>().sqrt();
    let start: Vec<f64> = (0..dim).map(|d| x0[d].clamp(lo[d], hi[d])).collect();

    let mut eng = Engine {
        oracle,
        lo,
        hi,
        config,
        dim,
        diameter,
        best_x: start.clone(),
        best_f: f64::INFINITY,
        evals: 0,
        trace: config.keep_trace.then(Vec::new),
    };
    let (f0, g0) = eng.eval(&start)?;
    debug_assert_eq!(f0, eng.best_f);

    let mut converged = true;
    if !(diameter == 0.0 || norm2(&g0) == 0.0 || eng.at_lower_bound()) {
        converged = if dim == 1 {
            // A single golden-section pass is already exact on a chord.
            eng.line_stage(&start, &[1.0])?;
            true
        } else {
            eng.level_stage(config.max_iters)?
        };
        for _ in 0..POLISH_CYCLES {
            if eng.at_lower_bound() {
                converged = true;
                break;
            }
            let gained = eng.polish_cycle()?;
            if gained <= eng.scale(eng.best_f) {
                converged = true;
                break;
            }
            // Polishing found a better valley; give the subgradient stage
            // another short burst before the next polish.
            converged = eng.level_stage(2 * config.stop_window)?;
        }
    }

    Ok(MinimizeResult {
        x: eng.best_x,
        objective: eng.best_f,
        iterations: eng.evals,
        converged,
        trace: eng.trace,
    })
}

/// Exhaustively evaluates the objective over a uniform grid with
/// `resolution` points per axis (both box ends included) and returns the
/// grid argmin. Ties break toward the lexicographically first grid point.
/// Dimension is capped at 3.
pub fn grid_oracle<F>(oracle: F, lo: &[f64], hi: &[f64], resolution: usize) -> Result<MinimizeResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let probe = vec![0.0; lo.len()];
    check_box(lo, hi, &probe)?;
    let dim = lo.len();
    if dim > 3 {
        return Err(Error::invalid(format!("grid oracle supports dimension <= 3, got {dim}")));
    }
    if resolution < 2 {
        return Err(Error::invalid("grid resolution must be >= 2 points per axis"));
    }
    let res = resolution as u64;
    let total = res.pow(dim as u32);
    let point = |flat: u64| -> Vec<f64> {
        let mut x = vec![0.0; dim];
        let mut rem = flat;
        for d in (0..dim).rev() {
            let i = (rem % res) as f64;
            rem /= res;
            x[d] = lo[d] + (hi[d] - lo[d]) * i / (res - 1) as f64;
        }
        x
    };

    let (objective, flat) = (0..total)
        .into_par_iter()
        .map(|flat| {
            let x = point(flat);
            let f = oracle(&x)?;
            if !f.is_finite() {
                return Err(Error::Solver(format!(
                    "oracle returned a non-finite value at x = {x:?}"
                )));
            }
            Ok((f, flat))
        })
        .try_reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| Ok(if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
        )?;

    Ok(MinimizeResult {
        x: point(flat),
        objective,
        iterations: total as usize,
        converged: true,
        trace: None,
    })
}

/// Applies a default lower bound when the caller did not set one.
fn with_lower_bound(config: &SolverConfig, lb: f64) -> SolverConfig {
    let mut c = config.clone();
    if c.lower_bound.is_none() && lb.is_finite() {
        c.lower_bound = Some(lb);
    }
    c
}

/// Optimal panel area and private battery for one household: minimizes its
/// expected cost over `[0, a_max] x [0, c_max]` from the no-investment
/// corner.
pub fn solve_individual(
    ss: &ScenarioSet,
    user: usize,
    tariff: &Tariff,
    beta: &[f64],
    bounds: &Bounds,
    config: &SolverConfig,
) -> Result<SolveResult> {
    if user >= bounds.n_users() {
        return Err(Error::invalid(format!(
            "user {user} out of range for bounds over {} users",
            bounds.n_users()
        )));
    }
    let lo = [0.0, 0.0];
    let hi = [bounds.a_max()[user], bounds.c_max()[user]];
    // Every cost term is nonnegative here.
    let cfg = with_lower_bound(config, 0.0);
    let inner = minimize_box(
        &lo,
        &hi,
        &lo,
        |x| {
            let (b, g) = individual_eval(ss, user, tariff, beta, x[0], x[1])?;
            Ok((b.total, g.components))
        },
        &cfg,
    )?;
    let (breakdown, _) = individual_eval(ss, user, tariff, beta, inner.x[0], inner.x[1])?;
    Ok(SolveResult {
        decision: Decision { a: vec![inner.x[0]], c: vec![inner.x[1]] },
        objective: breakdown.total,
        breakdown,
        iterations: inner.iterations,
        converged: inner.converged,
        trace: inner.trace,
    })
}

/// [`solve_individual`] for every household in turn.
pub fn solve_individual_all(
    ss: &ScenarioSet,
    tariff: &Tariff,
    profile: &ChargeProfile,
    bounds: &Bounds,
    config: &SolverConfig,
) -> Result<Vec<SolveResult>> {
    (0..ss.n_users())
        .map(|i| solve_individual(ss, i, tariff, profile.user(i), bounds, config))
        .collect()
}

/// Optimal pooled investment: minimizes the neighborhood cost over all panel
/// areas and one aggregate battery, capped by the sum of the per-user
/// battery bounds. The returned decision carries the aggregate in `c[0]`.
pub fn solve_global(
    ss: &ScenarioSet,
    tariff: &Tariff,
    profile: &ChargeProfile,
    bounds: &Bounds,
    config: &SolverConfig,
) -> Result<SolveResult> {
    let n = ss.n_users();
    if bounds.n_users() != n {
        return Err(Error::invalid(format!(
            "bounds cover {} users, scenarios have {n}",
            bounds.n_users()
        )));
    }
    let lo = vec![0.0; n + 1];
    let mut hi = Vec::with_capacity(n + 1);
    hi.extend_from_slice(bounds.a_max());
    hi.push(bounds.c_max().iter().sum());
    let cfg = with_lower_bound(config, 0.0);
    let inner = minimize_box(
        &lo,
        &hi,
        &lo,
        |x| {
            let (b, g) = global_eval(ss, tariff, profile, &x[..n], x[n])?;
            Ok((b.total, g.components))
        },
        &cfg,
    )?;
    let (breakdown, _) = global_eval(ss, tariff, profile, &inner.x[..n], inner.x[n])?;
    Ok(SolveResult {
        decision: Decision { a: inner.x[..n].to_vec(), c: vec![inner.x[n]] },
        objective: breakdown.total,
        breakdown,
        iterations: inner.iterations,
        converged: inner.converged,
        trace: inner.trace,
    })
}
