//! Run configuration: a single JSON document covering data, prices, boxes,
//! and solver settings. Every field has a default, so `{}` is a valid
//! config; unknown fields are rejected with their JSON path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zeh_core::game::GameConfig;
use zeh_core::saa::{Accuracy, SyntheticParams};
use zeh_core::solver::SolverConfig;
use zeh_core::{Bounds, Tariff};

use crate::CliError;

/// The one schema version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// A per-user limit given either once for everybody or per user.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    /// One limit shared by all users.
    Scalar(f64),
    /// One limit per user, in user order.
    PerUser(Vec<f64>),
}

impl ScalarOrVec {
    /// Expands to one entry per user.
    pub fn resolve(&self, n_users: usize, name: &str) -> Result<Vec<f64>, CliError> {
        match self {
            ScalarOrVec::Scalar(v) => Ok(vec![*v; n_users]),
            ScalarOrVec::PerUser(v) if v.len() == n_users => Ok(v.clone()),
            ScalarOrVec::PerUser(v) => Err(CliError::config(format!(
                "{name} lists {} entries but the dataset has {n_users} users",
                v.len()
            ))),
        }
    }
}

/// Settings for generating the synthetic stand-in dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Households to generate.
    pub n_users: usize,
    /// Days of history to generate.
    pub t_days: usize,
    /// Shape of the generated consumption and generation.
    pub params: SyntheticParams,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { n_users: 140, t_days: 365, params: SyntheticParams::default() }
    }
}

/// Decision box for the game, when it should differ from the main box
/// (shared-storage allocations are usually much smaller than private
/// batteries).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameBoxConfig {
    /// Per-user panel-area caps, m^2.
    pub a_max: Option<ScalarOrVec>,
    /// Per-user allocation caps, kWh.
    pub c_max: Option<ScalarOrVec>,
}

/// Everything one run needs besides the mode and output directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Config/report schema version; must be 1.
    pub schema_version: u32,
    /// Historical CSV to ingest; omitted means a synthetic dataset.
    pub data: Option<PathBuf>,
    /// Prices; defaults are the ten-year amortized residential set.
    pub tariff: Tariff,
    /// Per-user panel-area caps, m^2.
    pub a_max: ScalarOrVec,
    /// Per-user battery caps, kWh.
    pub c_max: ScalarOrVec,
    /// Charge fraction of private batteries, in [0, 1].
    pub beta: f64,
    /// Charge fraction of the shared storage, in [0, 1].
    pub beta_a: f64,
    /// Monte Carlo scenarios to draw.
    pub n_samples: usize,
    /// Planning horizon in days.
    pub horizon_days: usize,
    /// Bootstrap window width in days.
    pub window_days: usize,
    /// Master seed; every random stream derives from it.
    pub seed: u64,
    /// Synthetic-data settings (used when `data` is omitted and by `synth`).
    pub synth: SynthConfig,
    /// Box-minimization settings.
    pub solver: SolverConfig,
    /// Best-response iteration settings.
    pub game: GameConfig,
    /// Smaller decision box for the game, if any.
    pub game_box: GameBoxConfig,
    /// Feed-in prices compared by `compare` mode.
    pub compare_pi_in: Vec<f64>,
    /// Accuracy targets for `samplesize` mode.
    pub accuracy: Accuracy,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            data: None,
            tariff: Tariff::default(),
            a_max: ScalarOrVec::Scalar(50.0),
            c_max: ScalarOrVec::Scalar(50.0),
            beta: 0.5,
            beta_a: 0.5,
            n_samples: 200,
            horizon_days: 365,
            window_days: 30,
            seed: 0,
            synth: SynthConfig::default(),
            solver: SolverConfig::default(),
            game: GameConfig::default(),
            game_box: GameBoxConfig::default(),
            compare_pi_in: vec![5.0, -5.0],
            accuracy: Accuracy::default(),
        }
    }
}

impl RunConfig {
    /// Structural checks that do not need the dataset.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "schema_version {} is not supported (this build reads {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n_samples == 0 || self.horizon_days == 0 {
            return Err(CliError::config("n_samples and horizon_days must be >= 1"));
        }
        for (name, v) in [("beta", self.beta), ("beta_a", self.beta_a)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(CliError::config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.synth.n_users == 0 || self.synth.t_days == 0 {
            return Err(CliError::config("synth.n_users and synth.t_days must be >= 1"));
        }
        if self.compare_pi_in.is_empty() {
            return Err(CliError::config("compare_pi_in needs at least one feed-in price"));
        }
        Ok(())
    }

    /// The decision box for the individual and pooled models.
    pub fn bounds(&self, n_users: usize) -> Result<Bounds, CliError> {
        let a = self.a_max.resolve(n_users, "a_max")?;
        let c = self.c_max.resolve(n_users, "c_max")?;
        Bounds::new(a, c).map_err(CliError::from)
    }

    /// The decision box for the game; falls back to the main box.
    pub fn game_bounds(&self, n_users: usize) -> Result<Bounds, CliError> {
        let a = match &self.game_box.a_max {
            Some(s) => s.resolve(n_users, "game_box.a_max")?,
            None => self.a_max.resolve(n_users, "a_max")?,
        };
        let c = match &self.game_box.c_max {
            Some(s) => s.resolve(n_users, "game_box.c_max")?,
            None => self.c_max.resolve(n_users, "c_max")?,
        };
        Bounds::new(a, c).map_err(CliError::from)
    }
}

/// Reads and validates a run configuration, reporting schema violations
/// with the offending JSON path.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let config: RunConfig = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_yields_the_documented_defaults() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        c.validate().unwrap();
        assert_eq!(c.tariff.pi_pv, 2000.0);
        assert_eq!(c.tariff.pi_b, 4500.0);
        assert_eq!(c.tariff.pi_gas, 30.0);
        assert_eq!(c.tariff.pi_rev, 20.0);
        assert_eq!(c.tariff.pi_grid, 10.0);
        assert_eq!(c.tariff.pi_out, 20.0);
        assert_eq!(c.tariff.pi_in, 5.0);
        assert_eq!(c.beta, 0.5);
        assert_eq!(c.schema_version, SCHEMA_VERSION);
    }

    #[test]
    fn negative_feed_in_is_accepted_and_negative_gas_is_not() {
        let ok: RunConfig =
            serde_json::from_str(r#"{"tariff": {"pi_in": -5.0}}"#).unwrap();
        ok.validate().unwrap();
        assert_eq!(ok.tariff.pi_in, -5.0);
        zeh_core::Tariff { pi_in: -5.0, ..Default::default() }
            .validate(zeh_core::Mode::Game)
            .unwrap();

        let bad = zeh_core::Tariff { pi_gas: -1.0, ..Default::default() };
        assert!(bad.validate(zeh_core::Mode::Individual).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected_with_their_path() {
        let err = serde_json::from_str::<RunConfig>(r#"{"solver": {"max_iter": 3}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("max_iter"), "{err}");
    }

    #[test]
    fn partial_tariffs_keep_remaining_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"tariff": {"pi_pv": 1500.0}}"#).unwrap();
        assert_eq!(c.tariff.pi_pv, 1500.0);
        assert_eq!(c.tariff.pi_b, 4500.0);
    }

    #[test]
    fn per_user_limits_must_match_the_user_count() {
        let c: RunConfig = serde_json::from_str(r#"{"a_max": [10.0, 20.0]}"#).unwrap();
        assert_eq!(c.a_max.resolve(2, "a_max").unwrap(), vec![10.0, 20.0]);
        assert!(c.a_max.resolve(3, "a_max").is_err());
    }
}
