//! Machine-readable artifacts: one self-contained `report.json` plus flat
//! CSV tables for external plotting. Reports carry the config echo and
//! seed, so re-running them reproduces every number bit for bit; nothing
//! time- or path-dependent is ever written.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zeh_core::game::{ComparisonReport, EquilibriumCheck, EquilibriumResult};
use zeh_core::saa::{SampleSizeInputs, SampleSizeResult};
use zeh_core::solver::SolveResult;
use zeh_core::CostBreakdown;

use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::CliError;

/// One sample-size row: which problem, whose, and the resulting N.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSizeRow {
    /// Problem family: `individual`, `user`, or `manager`.
    pub model: String,
    /// User index, or `None` for the manager's joint problem.
    pub user: Option<usize>,
    /// The constants fed into the rule.
    pub inputs: SampleSizeInputs,
    /// The resulting sample count and flags.
    pub result: SampleSizeResult,
}

/// Summary of a generated synthetic dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSummary {
    /// Households generated.
    pub n_users: usize,
    /// Days generated.
    pub t_days: usize,
    /// Grand mean daily consumption, kWh.
    pub mean_consumption_kwh: f64,
    /// Grand mean daily generation, kWh per m^2.
    pub mean_generation_kwh_m2: f64,
}

/// Everything one run reports. Exactly one of the mode payloads is set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    /// Report schema version.
    pub schema_version: u32,
    /// The mode that ran.
    pub mode: String,
    /// Master seed actually used (after CLI overrides).
    pub seed: u64,
    /// Where the scenarios came from, e.g. the bootstrap settings.
    pub data_provenance: String,
    /// Households in the dataset.
    pub n_users: usize,
    /// Scenarios drawn.
    pub n_samples: usize,
    /// Planning horizon, days.
    pub horizon_days: usize,
    /// The full configuration after overrides; feeding this back with the
    /// same seed reproduces the report byte for byte.
    pub config: RunConfig,
    /// Per-household solves (individual mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub individual: Option<Vec<SolveResult>>,
    /// The pooled solve (global mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global: Option<SolveResult>,
    /// The equilibrium search (game mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game: Option<EquilibriumResult>,
    /// Unilateral-deviation audit of the game state (game mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game_check: Option<EquilibriumCheck>,
    /// All models side by side (compare mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<ComparisonReport>,
    /// Sample-size table (samplesize mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samplesize: Option<Vec<SampleSizeRow>>,
    /// Generated-data summary (synth mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSummary>,
}

impl Report {
    /// A report skeleton with no mode payload yet.
    pub fn new(
        mode: &str,
        seed: u64,
        provenance: &str,
        n_users: usize,
        n_samples: usize,
        horizon_days: usize,
        config: RunConfig,
    ) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            mode: mode.into(),
            seed,
            data_provenance: provenance.into(),
            n_users,
            n_samples,
            horizon_days,
            config,
            individual: None,
            global: None,
            game: None,
            game_check: None,
            compare: None,
            samplesize: None,
            synth: None,
        }
    }
}

/// One row of `costs.csv`: a cost split attributed to a model and player.
#[derive(Debug, Clone, Serialize)]
pub struct CostRow {
    /// Model (and variant) label.
    pub model: String,
    /// User index, or `manager`, or `all`.
    pub player: String,
    pub capital_pv: f64,
    pub capital_battery: f64,
    pub gas: f64,
    pub reverse_flow: f64,
    pub purchase: f64,
    pub sale: f64,
    pub exchange: f64,
    pub grid: f64,
    pub total: f64,
}

impl CostRow {
    pub fn from_breakdown(model: &str, player: String, b: &CostBreakdown) -> Self {
        CostRow {
            model: model.into(),
            player,
            capital_pv: b.capital_pv,
            capital_battery: b.capital_battery,
            gas: b.gas,
            reverse_flow: b.reverse_flow,
            purchase: b.purchase,
            sale: b.sale,
            exchange: b.exchange,
            grid: b.grid,
            total: b.total,
        }
    }

    /// A row carrying only a total (game states report per-player totals).
    pub fn total_only(model: &str, player: String, total: f64) -> Self {
        CostRow::from_breakdown(model, player, &CostBreakdown { total, ..Default::default() })
    }
}

/// One row of `decisions.csv`.
#[derive(Debug, Clone, Serialize)]
pub struct DecisionRow {
    /// Model (and variant) label.
    pub model: String,
    /// User index.
    pub user: usize,
    /// Panel area, m^2.
    pub pv_m2: f64,
    /// Battery capacity or allocation, kWh.
    pub battery_kwh: f64,
}

/// Writes the report as stable, pretty-printed JSON (trailing newline).
pub fn write_report(path: &Path, report: &Report) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::io(format!("cannot encode report: {e}")))?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Writes one serializable row type as a CSV table.
pub fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Ensures the output directory exists and returns a path inside it.
pub fn out_path(dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir.join(name))
}
