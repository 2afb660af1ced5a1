//! Domain types: tariffs, charge profiles, decision boxes, cost breakdowns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which investment model a tariff or decision is used in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every household buys its own panels and battery.
    Individual,
    /// One pooled investment for the whole neighborhood.
    Global,
    /// Users buy panels, a manager runs shared storage and trades with them.
    Game,
}

/// Prices per unit, amortized over the investment lifetime.
///
/// All prices are nonnegative except `pi_in`, which may be negative: a
/// negative feed-in price penalizes users for dumping surplus on the shared
/// storage instead of paying them for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tariff {
    /// Cost of covering residual shortfall (gas or grid import), per kWh.
    pub pi_gas: f64,
    /// Penalty for reverse flow pushed back into the grid, per kWh.
    pub pi_rev: f64,
    /// Panel price per m^2.
    pub pi_pv: f64,
    /// Battery price per kWh of capacity.
    pub pi_b: f64,
    /// Price users pay the manager per kWh drawn from shared storage.
    pub pi_out: f64,
    /// Price the manager pays users per kWh fed into shared storage.
    pub pi_in: f64,
    /// Price the manager pays for grid energy to top storage up, per kWh.
    pub pi_grid: f64,
}

impl Default for Tariff {
    /// Ten-year amortized residential defaults.
    fn default() -> Self {
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
}

impl Tariff {
    /// Checks the price constraints required by `mode`.
    ///
    /// Individual and global costs only need nonnegative prices. The game
    /// additionally needs `pi_gas >= pi_out >= pi_in` (a user should prefer
    /// storage over gas, and selling should never beat buying) and
    /// `pi_out >= pi_grid`; both orderings are exactly what keeps the game
    /// costs convex.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        for (name, v) in [
            ("pi_gas", self.pi_gas),
            ("pi_rev", self.pi_rev),
            ("pi_pv", self.pi_pv),
            ("pi_b", self.pi_b),
            ("pi_out", self.pi_out),
            ("pi_grid", self.pi_grid),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Tariff(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !self.pi_in.is_finite() {
            return Err(Error::Tariff(format!("pi_in must be finite, got {}", self.pi_in)));
        }
        if mode == Mode::Game {
            if self.pi_gas < self.pi_out {
                return Err(Error::Tariff(format!(
                    "pi_gas >= pi_out violated ({} < {})",
                    self.pi_gas, self.pi_out
                )));
            }
            if self.pi_out < self.pi_in {
                return Err(Error::Tariff(format!(
                    "pi_out >= pi_in violated ({} < {})",
                    self.pi_out, self.pi_in
                )));
            }
            if self.pi_out < self.pi_grid {
                return Err(Error::Tariff(format!(
                    "pi_out >= pi_grid violated ({} < {})",
                    self.pi_out, self.pi_grid
                )));
            }
        }
        Ok(())
    }
}

/// Battery charge fractions per user and day.
///
/// `beta[i][t]` says which share of a battery is charged when user `i` hits
/// day `t`'s imbalance; `beta_a[t]` plays the same role for the manager's
/// shared storage. Values live in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeProfile {
    n_users: usize,
    n_days: usize,
    beta: Vec<f64>,
    beta_a: Vec<f64>,
}

impl ChargeProfile {
    /// Flat profile: the same charge fraction everywhere.
    pub fn constant(n_users: usize, n_days: usize, beta: f64, beta_a: f64) -> Result<Self> {
        Self::from_parts(n_users, n_days, vec![beta; n_users * n_days], vec![beta_a; n_days])
    }

    /// Builds a profile from row-major `beta` ([user][day]) and `beta_a`.
    pub fn from_parts(n_users: usize, n_days: usize, beta: Vec<f64>, beta_a: Vec<f64>) -> Result<Self> {
        if n_users == 0 || n_days == 0 {
            return Err(Error::invalid("charge profile needs at least one user and one day"));
        }
        if beta.len() != n_users * n_days {
            return Err(Error::invalid(format!(
                "beta has {} entries, expected {} ({} users x {} days)",
                beta.len(),
                n_users * n_days,
                n_users,
                n_days
            )));
        }
        if beta_a.len() != n_days {
            return Err(Error::invalid(format!(
                "beta_a has {} entries, expected {} days",
                beta_a.len(),
                n_days
            )));
        }
        for v in beta.iter().chain(beta_a.iter()) {
            if !v.is_finite() || !(0.0..=1.0).contains(v) {
                return Err(Error::invalid(format!("charge fraction {v} outside [0, 1]")));
            }
        }
        Ok(ChargeProfile { n_users, n_days, beta, beta_a })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    /// User `i`'s daily charge fractions.
    pub fn user(&self, i: usize) -> &[f64] {
        &self.beta[i * self.n_days..(i + 1) * self.n_days]
    }

    /// The manager's daily charge fractions.
    pub fn manager(&self) -> &[f64] {
        &self.beta_a
    }
}

/// Per-user box constraints on panel area and battery/allocation capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    a_max: Vec<f64>,
    c_max: Vec<f64>,
}

impl Bounds {
    pub fn new(a_max: Vec<f64>, c_max: Vec<f64>) -> Result<Self> {
        if a_max.is_empty() || a_max.len() != c_max.len() {
            return Err(Error::invalid(format!(
                "bounds need matching nonempty caps, got {} and {}",
                a_max.len(),
                c_max.len()
            )));
        }
        for v in a_max.iter().chain(c_max.iter()) {
            if !v.is_finite() || *v <= 0.0 {
                return Err(Error::invalid(format!("caps must be finite and > 0, got {v}")));
            }
        }
        Ok(Bounds { a_max, c_max })
    }

    /// Same caps for every user.
    pub fn uniform(n_users: usize, a_max: f64, c_max: f64) -> Result<Self> {
        Self::new(vec![a_max; n_users], vec![c_max; n_users])
    }

    pub fn n_users(&self) -> usize {
        self.a_max.len()
    }

    pub fn a_max(&self) -> &[f64] {
        &self.a_max
    }

    pub fn c_max(&self) -> &[f64] {
        &self.c_max
    }
}

/// A sizing decision: panel areas and storage capacities.
///
/// `c` holds one capacity per user in the individual and game models, and a
/// single pooled capacity in the global model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    /// Panel area per user, m^2.
    pub a: Vec<f64>,
    /// Battery capacity (individual), allocation (game) or pooled total
    /// (global), kWh.
    pub c: Vec<f64>,
}

impl Decision {
    pub fn zeros(n_users: usize) -> Self {
        Decision { a: vec![0.0; n_users], c: vec![0.0; n_users] }
    }

    /// Total panel area, m^2.
    pub fn pv_total(&self) -> f64 {
        self.a.iter().sum()
    }

    /// Total storage capacity, kWh.
    pub fn battery_total(&self) -> f64 {
        self.c.iter().sum()
    }
}

/// One cost, split into the components that produced it.
///
/// Components a model does not use stay zero; `total` is always the plain
/// sum of all eight components. Revenue shows up as negative cost.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// Panel purchase, `a * pi_pv`.
    pub capital_pv: f64,
    /// Battery purchase, `c * pi_b`.
    pub capital_battery: f64,
    /// Residual shortfall covered by gas/grid import.
    pub gas: f64,
    /// Reverse-flow penalty for surplus pushed into the grid.
    pub reverse_flow: f64,
    /// What a game user pays the manager for storage draws.
    pub purchase: f64,
    /// What a game user earns (negative) or pays for surplus feed-in.
    pub sale: f64,
    /// The manager's net trade with users: feed-in paid minus draws sold.
    pub exchange: f64,
    /// The manager's grid purchases to refill storage.
    pub grid: f64,
    /// Sum of all components above.
    pub total: f64,
}

impl CostBreakdown {
    /// Recomputes the sum of the eight components in declaration order.
    pub fn component_sum(&self) -> f64 {
        self.capital_pv
            + self.capital_battery
            + self.gas
            + self.reverse_flow
            + self.purchase
            + self.sale
            + self.exchange
            + self.grid
    }

    /// Fills `total` from the components.
    pub(crate) fn sealed(mut self) -> Self {
        self.total = self.component_sum();
        self
    }
}

/// A subgradient of one of the sample-average costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subgradient {
    pub components: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tariff_is_valid_in_every_mode() {
        let t = Tariff::default();
        for mode in [Mode::Individual, Mode::Global, Mode::Game] {
            t.validate(mode).unwrap();
        }
    }

    #[test]
    fn negative_feed_in_price_is_allowed() {
        let t = Tariff { pi_in: -5.0, ..Tariff::default() };
        t.validate(Mode::Game).unwrap();
    }

    #[test]
    fn negative_prices_are_rejected() {
        let t = Tariff { pi_gas: -1.0, ..Tariff::default() };
        let err = t.validate(Mode::Individual).unwrap_err();
        assert!(err.to_string().contains("pi_gas"));
    }

    #[test]
    fn game_orderings_are_enforced_and_named() {
        let t = Tariff { pi_out: 40.0, ..Tariff::default() };
        // Fine for solo households, rejected for the game.
        t.validate(Mode::Individual).unwrap();
        t.validate(Mode::Global).unwrap();
        let err = t.validate(Mode::Game).unwrap_err();
        assert!(err.to_string().contains("pi_gas >= pi_out"));

        let t = Tariff { pi_in: 25.0, ..Tariff::default() };
        let err = t.validate(Mode::Game).unwrap_err();
        assert!(err.to_string().contains("pi_out >= pi_in"));

        let t = Tariff { pi_grid: 25.0, ..Tariff::default() };
        let err = t.validate(Mode::Game).unwrap_err();
        assert!(err.to_string().contains("pi_out >= pi_grid"));
    }

    #[test]
    fn charge_profile_validates_range_and_shape() {
        assert!(ChargeProfile::constant(2, 3, 0.5, 0.5).is_ok());
        assert!(ChargeProfile::constant(2, 3, 1.5, 0.5).is_err());
        assert!(ChargeProfile::from_parts(2, 2, vec![0.5; 3], vec![0.5; 2]).is_err());
        assert!(ChargeProfile::from_parts(1, 2, vec![0.5; 2], vec![0.5; 3]).is_err());
    }

    #[test]
    fn bounds_must_be_positive() {
        assert!(Bounds::uniform(3, 50.0, 50.0).is_ok());
        assert!(Bounds::uniform(3, 0.0, 50.0).is_err());
        assert!(Bounds::new(vec![1.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn breakdown_total_tracks_components() {
        let b = CostBreakdown {
            capital_pv: 1.0,
            gas: 2.0,
            sale: -0.5,
            ..Default::default()
        }
        .sealed();
        assert_eq!(b.total, 2.5);
        assert_eq!(b.total, b.component_sum());
    }
}
