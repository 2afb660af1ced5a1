//! Epigraph exports: the sampled cost models as plain linear programs.
//!
//! Every max term gets one auxiliary variable per sample and day, which
//! turns each convex piecewise-linear cost into an LP in the standard text
//! format, checkable with any external solver. A size guard keeps the
//! files honest: the export exists for cross-checks, not production runs.

use std::fmt::Write as _;
use std::io::Write;

use zeh_core::{Bounds, ChargeProfile, ScenarioSet, Tariff};

use crate::CliError;

/// Which sampled problem to export.
#[derive(Debug, Clone)]
pub enum EpigraphModel<'a> {
    /// One household's panel/battery problem.
    Individual {
        /// Which household.
        user: usize,
        /// Its per-day charge fractions.
        beta: &'a [f64],
    },
    /// The pooled neighborhood problem.
    Global {
        /// Charge fractions for every user and day.
        profile: &'a ChargeProfile,
    },
    /// One game user's panel problem at a fixed storage allocation.
    User {
        /// Which household.
        user: usize,
        /// Its fixed storage allocation, kWh.
        c_alloc: f64,
    },
    /// The manager's allocation problem at fixed panel areas.
    Manager {
        /// Shared-storage charge fractions per day.
        beta_a: &'a [f64],
        /// The users' fixed panel areas, m^2.
        a: &'a [f64],
    },
}

/// Auxiliary-variable budget: samples x days x users may not exceed this.
pub const MAX_EPIGRAPH_CELLS: usize = 100_000;

fn push_term(expr: &mut String, coeff: f64, var: &str) {
    if coeff == 0.0 {
        return;
    }
    if expr.is_empty() {
        if coeff < 0.0 {
            expr.push_str("- ");
        }
    } else if coeff < 0.0 {
        expr.push_str(" - ");
    } else {
        expr.push_str(" + ");
    }
    let _ = write!(expr, "{} {var}", coeff.abs());
}

struct LpBuilder {
    objective: String,
    constraints: Vec<String>,
    bounds: Vec<String>,
}

impl LpBuilder {
    fn new() -> Self {
        LpBuilder { objective: String::new(), constraints: Vec::new(), bounds: Vec::new() }
    }

    fn obj(&mut self, coeff: f64, var: &str) {
        push_term(&mut self.objective, coeff, var);
    }

    /// Adds `terms >= rhs`.
    fn ge(&mut self, name: String, terms: &[(f64, &str)], rhs: f64) {
        let mut expr = String::new();
        for (coeff, var) in terms {
            push_term(&mut expr, *coeff, var);
        }
        if expr.is_empty() {
            expr.push_str("0 one");
        }
        self.constraints.push(format!("{name}: {expr} >= {rhs}"));
    }

    fn bound(&mut self, line: String) {
        self.bounds.push(line);
    }

    fn write<W: Write>(&self, title: &str, mut w: W) -> std::io::Result<()> {
        writeln!(w, "\\ {title}")?;
        writeln!(w, "Minimize")?;
        writeln!(w, " obj: {}", if self.objective.is_empty() { "0 one" } else { &self.objective })?;
        writeln!(w, "Subject To")?;
        for c in &self.constraints {
            writeln!(w, " {c}")?;
        }
        writeln!(w, "Bounds")?;
        for b in &self.bounds {
            writeln!(w, " {b}")?;
        }
        writeln!(w, " one = 1")?;
        writeln!(w, "End")
    }
}

/// Pulls the whole scenario tensor into memory (guarded small).
fn dense_samples(ss: &ScenarioSet) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (n, t) = (ss.n_users(), ss.n_days());
    let src = ss.source();
    let mut xs = Vec::with_capacity(ss.n_samples());
    let mut ys = Vec::with_capacity(ss.n_samples());
    for j in 0..ss.n_samples() {
        let (mut x, mut y) = (vec![0.0; n * t], vec![0.0; n * t]);
        for i in 0..n {
            src.fill_user(j, i, &mut x[i * t..(i + 1) * t], &mut y[i * t..(i + 1) * t]);
        }
        xs.push(x);
        ys.push(y);
    }
    (xs, ys)
}

/// Writes the epigraph LP of the selected sampled cost model.
///
/// The LP's optimal value equals the minimum of the corresponding
/// `*_cost` over the same box (`one` is a fixed variable carrying constant
/// objective terms). Fails when samples x days x users exceeds
/// [`MAX_EPIGRAPH_CELLS`].
pub fn export_epigraph<W: Write>(
    ss: &ScenarioSet,
    tariff: &Tariff,
    model: &EpigraphModel,
    bounds: &Bounds,
    w: W,
) -> Result<(), CliError> {
    let (n_samples, n, t_days) = (ss.n_samples(), ss.n_users(), ss.n_days());
    let cells = n_samples
        .checked_mul(t_days)
        .and_then(|v| v.checked_mul(n))
        .unwrap_or(usize::MAX);
    if cells > MAX_EPIGRAPH_CELLS {
        return Err(CliError::config(format!(
            "epigraph export limited to {MAX_EPIGRAPH_CELLS} samples x days x users, got {cells}"
        )));
    }
    if bounds.n_users() != n {
        return Err(CliError::config(format!(
            "bounds cover {} users, scenarios have {n}",
            bounds.n_users()
        )));
    }
    let weight = 1.0 / n_samples as f64;
    let (xs, ys) = dense_samples(ss);
    let mut lp = LpBuilder::new();

    let title = match model {
        EpigraphModel::Individual { user, beta } => {
            let i = *user;
            lp.obj(tariff.pi_pv, "a");
            lp.obj(tariff.pi_b, "c");
            lp.bound(format!("0 <= a <= {}", bounds.a_max()[i]));
            lp.bound(format!("0 <= c <= {}", bounds.c_max()[i]));
            for j in 0..n_samples {
                for t in 0..t_days {
                    let (x, y) = (xs[j][i * t_days + t], ys[j][i * t_days + t]);
                    let (u, v) = (format!("u_{j}_{t}"), format!("v_{j}_{t}"));
                    lp.obj(tariff.pi_gas * weight, &u);
                    lp.obj(tariff.pi_rev * weight, &v);
                    lp.ge(format!("gas_{j}_{t}"), &[(1.0, &u), (y, "a"), (beta[t], "c")], x);
                    lp.ge(
                        format!("rev_{j}_{t}"),
                        &[(1.0, &v), (-y, "a"), (1.0 - beta[t], "c")],
                        -x,
                    );
                }
            }
            format!("individual model, user {i}, {n_samples} samples x {t_days} days")
        }
        EpigraphModel::Global { profile } => {
            if profile.n_users() != n || profile.n_days() != t_days {
                return Err(CliError::config(format!(
                    "charge profile is {}x{}, scenarios are {n}x{t_days}",
                    profile.n_users(),
                    profile.n_days()
                )));
            }
            let a_names: Vec<String> = (0..n).map(|i| format!("a_{i}")).collect();
            for (name, cap) in a_names.iter().zip(bounds.a_max()) {
                lp.obj(tariff.pi_pv, name);
                lp.bound(format!("0 <= {name} <= {cap}"));
            }
            lp.obj(tariff.pi_b, "cp");
            let c_cap: f64 = bounds.c_max().iter().sum();
            lp.bound(format!("0 <= cp <= {c_cap}"));
            for j in 0..n_samples {
                for t in 0..t_days {
                    let (u, v) = (format!("u_{j}_{t}"), format!("v_{j}_{t}"));
                    lp.obj(tariff.pi_gas * weight, &u);
                    lp.obj(tariff.pi_rev * weight, &v);
                    let mut beta_sum = 0.0;
                    let mut x_sum = 0.0;
                    let mut gas_terms: Vec<(f64, &str)> = vec![(1.0, &u)];
                    let mut rev_terms: Vec<(f64, &str)> = vec![(1.0, &v)];
                    for i in 0..n {
                        let y = ys[j][i * t_days + t];
                        x_sum += xs[j][i * t_days + t];
                        beta_sum += profile.user(i)[t];
                        gas_terms.push((y, &a_names[i]));
                        rev_terms.push((-y, &a_names[i]));
                    }
                    gas_terms.push((beta_sum, "cp"));
                    rev_terms.push((n as f64 - beta_sum, "cp"));
                    lp.ge(format!("gas_{j}_{t}"), &gas_terms, x_sum);
                    lp.ge(format!("rev_{j}_{t}"), &rev_terms, -x_sum);
                }
            }
            format!("pooled model, {n} users, {n_samples} samples x {t_days} days")
        }
        EpigraphModel::User { user, c_alloc } => {
            let i = *user;
            if !(c_alloc.is_finite() && *c_alloc >= 0.0) {
                return Err(CliError::config(format!(
                    "allocation must be finite and >= 0, got {c_alloc}"
                )));
            }
            lp.obj(tariff.pi_pv, "a");
            lp.bound(format!("0 <= a <= {}", bounds.a_max()[i]));
            // Per day the user pays max{pi_in z, pi_out z, pi_gas z - (pi_gas
            // - pi_out) c} with z = x - a y; the game's price ordering makes
            // the max the upper envelope of those three lines.
            for j in 0..n_samples {
                for t in 0..t_days {
                    let (x, y) = (xs[j][i * t_days + t], ys[j][i * t_days + t]);
                    let wv = format!("w_{j}_{t}");
                    lp.obj(weight, &wv);
                    lp.bound(format!("{wv} free"));
                    lp.ge(format!("pin_{j}_{t}"), &[(1.0, &wv), (tariff.pi_in * y, "a")], tariff.pi_in * x);
                    lp.ge(format!("pout_{j}_{t}"), &[(1.0, &wv), (tariff.pi_out * y, "a")], tariff.pi_out * x);
                    lp.ge(
                        format!("pgas_{j}_{t}"),
                        &[(1.0, &wv), (tariff.pi_gas * y, "a")],
                        tariff.pi_gas * x - (tariff.pi_gas - tariff.pi_out) * c_alloc,
                    );
                }
            }
            format!("game user {i} at allocation {c_alloc}, {n_samples} samples x {t_days} days")
        }
        EpigraphModel::Manager { beta_a, a } => {
            if a.len() != n || beta_a.len() != t_days {
                return Err(CliError::config(format!(
                    "manager export needs {n} panel areas and {t_days} charge fractions, got {} and {}",
                    a.len(),
                    beta_a.len()
                )));
            }
            let c_names: Vec<String> = (0..n).map(|i| format!("c_{i}")).collect();
            for (name, cap) in c_names.iter().zip(bounds.c_max()) {
                lp.obj(tariff.pi_b, name);
                lp.bound(format!("0 <= {name} <= {cap}"));
            }
            let mut feed_in_total = 0.0;
            for j in 0..n_samples {
                for t in 0..t_days {
                    let (g, r) = (format!("g_{j}_{t}"), format!("r_{j}_{t}"));
                    lp.obj(tariff.pi_grid * weight, &g);
                    lp.obj(tariff.pi_rev * weight, &r);
                    let mut feed_in = 0.0;
                    let mut p_names = Vec::with_capacity(n);
                    for i in 0..n {
                        let net = xs[j][i * t_days + t] - a[i] * ys[j][i * t_days + t];
                        feed_in += (-net).max(0.0);
                        let shortfall = net.max(0.0);
                        let p = format!("p_{i}_{j}_{t}");
                        lp.obj(-tariff.pi_out * weight, &p);
                        lp.bound(format!("0 <= {p} <= {shortfall}"));
                        p_names.push(p);
                    }
                    feed_in_total += feed_in;
                    // p_ijt <= c_i; selling at pi_out >= pi_grid makes every
                    // p hit min{shortfall, c_i} at the optimum.
                    let mut grid_terms: Vec<(f64, &str)> = vec![(1.0, &g)];
                    let mut rev_terms: Vec<(f64, &str)> = vec![(1.0, &r)];
                    for (i, p) in p_names.iter().enumerate() {
                        lp.ge(format!("cap_{i}_{j}_{t}"), &[(1.0, &c_names[i]), (-1.0, p)], 0.0);
                        grid_terms.push((-1.0, p));
                        rev_terms.push((1.0, p));
                    }
                    for name in &c_names {
                        grid_terms.push((beta_a[t], name));
                        rev_terms.push((1.0 - beta_a[t], name));
                    }
                    lp.ge(format!("grid_{j}_{t}"), &grid_terms, -feed_in);
                    lp.ge(format!("rfl_{j}_{t}"), &rev_terms, feed_in);
                }
            }
            lp.obj(tariff.pi_in * weight * feed_in_total, "one");
            format!("manager allocation at fixed panels, {n} users, {n_samples} samples x {t_days} days")
        }
    };

    lp.write(&title, w).map_err(|e| CliError::io(format!("cannot write epigraph: {e}")))
}
