//! Scenario generation and the sample-size calculator.
//!
//! Historical records carry one (consumption, generation) pair per user and
//! day, with gaps explicit. Monte Carlo scenarios are drawn by a seasonal
//! window bootstrap: sample day t resamples, jointly, a historical day from
//! a cyclic neighborhood of t, preserving the consumption-generation
//! correlation within a day. The sample-size rule turns accuracy targets and
//! per-model diameter/Lipschitz/variance bounds into a conservative N; see
//! Shapiro, Dentcheva & Ruszczynski, "Lectures on Stochastic Programming",
//! for the underlying large-deviation estimate.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Mode, Tariff};
use crate::scenario::{SampleSource, ScenarioSet};

/// Default hard cap on the computed sample size.
pub const DEFAULT_SAMPLE_CAP: u64 = 10_000_000;

/// Largest supported neighborhood size for per-sample random streams.
const MAX_STREAM_USERS: usize = 1 << 20;

// ---------------------------------------------------------------------------
// Sample-size rule
// ---------------------------------------------------------------------------

/// Accuracy targets for the sample-size rule.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Accuracy {
    /// Suboptimality level the SAA solution set must land inside.
    pub epsilon: f64,
    /// Suboptimality level solved to on the sampled problem (< epsilon).
    pub delta: f64,
    /// Allowed failure probability, in (0, 1).
    pub alpha: f64,
}

impl Default for Accuracy {
    fn default() -> Self {
        Accuracy { epsilon: 5000.0, delta: 0.0, alpha: 0.01 }
    }
}

/// Everything the sample-size rule needs about one minimization problem.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleSizeInputs {
    /// Target suboptimality of the true problem.
    pub epsilon: f64,
    /// Suboptimality solved to on the sampled problem.
    pub delta: f64,
    /// Allowed failure probability.
    pub alpha: f64,
    /// Decision dimension.
    pub r: usize,
    /// Diameter of the decision box.
    pub diameter: f64,
    /// Lipschitz bound on the random cost over the box.
    pub lipschitz: f64,
    /// Variance bound on per-sample cost differences.
    pub sigma2: f64,
}

/// Outcome of the sample-size rule.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleSizeResult {
    /// Recommended sample count (>= 1, capped).
    pub n: u64,
    /// Pre-ceiling value of the bound; 0 when vacuous.
    pub required: f64,
    /// True when the bound is vacuous (cost varies less than the accuracy
    /// gap over the whole box, or has zero variance), so one sample suffices.
    pub vacuous: bool,
    /// True when the bound exceeded the cap and `n` was truncated.
    pub capped: bool,
}

fn check_inputs(inputs: &SampleSizeInputs) -> Result<()> {
    let SampleSizeInputs { epsilon, delta, alpha, r, diameter, lipschitz, sigma2 } = *inputs;
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be finite and > 0, got {epsilon}")));
    }
    if !(delta.is_finite() && delta >= 0.0 && delta < epsilon) {
        return Err(Error::invalid(format!(
            "delta must satisfy 0 <= delta < epsilon, got delta={delta}, epsilon={epsilon}"
        )));
    }
    if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if r == 0 {
        return Err(Error::invalid("dimension r must be >= 1"));
    }
    if !(diameter.is_finite() && diameter > 0.0) {
        return Err(Error::invalid(format!("diameter must be finite and > 0, got {diameter}")));
    }
    if !(lipschitz.is_finite() && lipschitz >= 0.0) {
        return Err(Error::invalid(format!(
            "Lipschitz bound must be finite and >= 0, got {lipschitz}"
        )));
    }
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return Err(Error::invalid(format!(
            "variance bound must be finite and >= 0, got {sigma2}"
        )));
    }
    Ok(())
}

/// Samples needed so the delta-optimal set of the sampled problem lands in
/// the epsilon-optimal set of the true problem with probability 1 - alpha,
/// under [`DEFAULT_SAMPLE_CAP`].
pub fn sample_size(inputs: &SampleSizeInputs) -> Result<SampleSizeResult> {
    sample_size_with_cap(inputs, DEFAULT_SAMPLE_CAP)
}

/// [`sample_size`] with an explicit cap on the returned count.
pub fn sample_size_with_cap(inputs: &SampleSizeInputs, cap: u64) -> Result<SampleSizeResult> {
    check_inputs(inputs)?;
    if cap == 0 {
        return Err(Error::invalid("sample-size cap must be >= 1"));
    }
    let gap = inputs.epsilon - inputs.delta;
    let spread = 2.0 * inputs.diameter * inputs.lipschitz;
    if spread <= gap || inputs.sigma2 == 0.0 {
        return Ok(SampleSizeResult { n: 1, required: 0.0, vacuous: true, capped: false });
    }
    let required = 12.0 * inputs.sigma2 / (gap * gap)
        * (inputs.r as f64 * (spread / gap).ln() - inputs.alpha.ln());
    let ceiled = required.ceil().max(1.0);
    if ceiled >= cap as f64 {
        Ok(SampleSizeResult { n: cap, required, vacuous: false, capped: true })
    } else {
        Ok(SampleSizeResult { n: ceiled as u64, required, vacuous: false, capped: false })
    }
}

fn check_beta_range(name: &str, beta: &[f64]) -> Result<()> {
    for (t, b) in beta.iter().enumerate() {
        if !(b.is_finite() && (0.0..=1.0).contains(b)) {
            return Err(Error::invalid(format!("{name}[{t}] must lie in [0, 1], got {b}")));
        }
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")));
    }
    Ok(())
}

fn check_mean_y(mean_y_sum: f64) -> Result<()> {
    if !(mean_y_sum.is_finite() && mean_y_sum >= 0.0) {
        return Err(Error::invalid(format!(
            "expected generation sum must be finite and >= 0, got {mean_y_sum}"
        )));
    }
    Ok(())
}

/// Sample-size inputs for one household's two-variable problem: diameter is
/// the larger box edge, the Lipschitz bound takes the worse of the panel and
/// battery slopes, and the variance bound follows from the larger random
/// slope.
pub fn bounds_individual(
    a_max: f64,
    c_max: f64,
    tariff: &Tariff,
    beta: &[f64],
    mean_y_sum: f64,
    accuracy: &Accuracy,
) -> Result<SampleSizeInputs> {
    tariff.validate(Mode::Individual)?;
    check_positive("panel-area bound", a_max)?;
    check_positive("battery bound", c_max)?;
    check_beta_range("charge profile", beta)?;
    check_mean_y(mean_y_sum)?;
    let gen_slope = tariff.pi_gas.max(tariff.pi_rev) * mean_y_sum;
    let storage_slope: f64 = beta
        .iter()
        .map(|b| (tariff.pi_gas * b).max(tariff.pi_rev * (1.0 - b)))
        .sum();
    let diameter = a_max.max(c_max);
    let spread = gen_slope.max(storage_slope);
    Ok(SampleSizeInputs {
        epsilon: accuracy.epsilon,
        delta: accuracy.delta,
        alpha: accuracy.alpha,
        r: 2,
        diameter,
        lipschitz: (tariff.pi_pv + gen_slope).max(tariff.pi_b + storage_slope),
        sigma2: diameter * diameter * spread * spread,
    })
}

/// Sample-size inputs for one game user's panel-area problem.
pub fn bounds_user(
    a_max: f64,
    tariff: &Tariff,
    mean_y_sum: f64,
    accuracy: &Accuracy,
) -> Result<SampleSizeInputs> {
    tariff.validate(Mode::Game)?;
    check_positive("panel-area bound", a_max)?;
    check_mean_y(mean_y_sum)?;
    let slope = tariff.pi_gas * mean_y_sum;
    Ok(SampleSizeInputs {
        epsilon: accuracy.epsilon,
        delta: accuracy.delta,
        alpha: accuracy.alpha,
        r: 1,
        diameter: a_max,
        lipschitz: tariff.pi_pv + slope,
        sigma2: a_max * a_max * slope * slope,
    })
}

/// Sample-size inputs for the manager's n-variable allocation problem:
/// diameter is the max-norm of the allocation caps and the per-day slope is
/// the worst of the three exchange/grid/reverse-flow rates.
pub fn bounds_manager(
    c_alloc_max: &[f64],
    tariff: &Tariff,
    beta_a: &[f64],
    accuracy: &Accuracy,
) -> Result<SampleSizeInputs> {
    tariff.validate(Mode::Game)?;
    if c_alloc_max.is_empty() {
        return Err(Error::invalid("allocation caps must cover at least one user"));
    }
    for (i, c) in c_alloc_max.iter().enumerate() {
        check_positive(&format!("allocation cap for user {i}"), *c)?;
    }
    check_beta_range("manager charge profile", beta_a)?;
    let diameter = c_alloc_max.iter().cloned().fold(0.0, f64::max);
    let slope: f64 = beta_a
        .iter()
        .map(|b| {
            tariff
                .pi_out
                .max(tariff.pi_grid * (1.0 + b))
                .max(tariff.pi_rev * b)
        })
        .sum();
    Ok(SampleSizeInputs {
        epsilon: accuracy.epsilon,
        delta: accuracy.delta,
        alpha: accuracy.alpha,
        r: c_alloc_max.len(),
        diameter,
        lipschitz: tariff.pi_b + slope,
        sigma2: diameter * diameter * slope * slope,
    })
}

// ---------------------------------------------------------------------------
// Historical records
// ---------------------------------------------------------------------------

/// One day of one household's history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayRecord {
    /// Consumption in kWh.
    pub consumption: f64,
    /// Generation per m^2 of panel, in kWh.
    pub generation: f64,
}

/// Per-user daily consumption and per-m^2 generation records over a common
/// day range, with missing days as explicit gaps.
#[derive(Debug, Clone)]
pub struct HistoricalData {
    n_users: usize,
    t_hist: usize,
    /// Row-major: `records[user * t_hist + day]`.
    records: Vec<Option<DayRecord>>,
}

impl HistoricalData {
    /// An all-gaps record set to be filled with [`HistoricalData::set_day`].
    pub fn new(n_users: usize, t_hist: usize) -> Result<Self> {
        if n_users == 0 || t_hist == 0 {
            return Err(Error::data("historical data needs at least one user and one day"));
        }
        if n_users > MAX_STREAM_USERS {
            return Err(Error::data(format!(
                "at most {MAX_STREAM_USERS} users are supported, got {n_users}"
            )));
        }
        Ok(HistoricalData { n_users, t_hist, records: vec![None; n_users * t_hist] })
    }

    /// Records one day's observation; days are 0-based here.
    pub fn set_day(&mut self, user: usize, day: usize, consumption: f64, generation: f64) -> Result<()> {
        if user >= self.n_users || day >= self.t_hist {
            return Err(Error::data(format!(
                "record for user {user}, day {day} is outside the {}x{} range",
                self.n_users, self.t_hist
            )));
        }
        for (name, v) in [("consumption", consumption), ("generation", generation)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::data(format!(
                    "{name} for user {user}, day {day} must be finite and >= 0, got {v}"
                )));
            }
        }
        self.records[user * self.t_hist + day] = Some(DayRecord { consumption, generation });
        Ok(())
    }

    /// Number of users.
    pub fn n_users(&self) -> usize {
        self.n_users
    }

    /// Number of days in the common range.
    pub fn t_hist(&self) -> usize {
        self.t_hist
    }

    /// The record for a user and 0-based day, or `None` at a gap.
    pub fn record(&self, user: usize, day: usize) -> Option<DayRecord> {
        self.records.get(user * self.t_hist + day).copied().flatten()
    }

    /// Mean consumption and generation over the cyclic `window`-day
    /// neighborhood of `day` (0-based) for one user, skipping gaps.
    pub fn window_mean(&self, user: usize, day: usize, window: usize) -> Result<(f64, f64)> {
        if user >= self.n_users {
            return Err(Error::data(format!("user {user} out of range")));
        }
        let days = self.window_days(day % self.t_hist, window);
        let mut count = 0usize;
        let (mut x_sum, mut y_sum) = (0.0, 0.0);
        for d in days {
            if let Some(rec) = self.record(user, d) {
                count += 1;
                x_sum += rec.consumption;
                y_sum += rec.generation;
            }
        }
        if count == 0 {
            return Err(Error::data(format!(
                "user {user} has no records within the {window}-day window of day {day}"
            )));
        }
        Ok((x_sum / count as f64, y_sum / count as f64))
    }

    /// Sum over a `t_days` horizon of the window-empirical mean generation,
    /// i.e. the expected generation per m^2 the bootstrap will produce.
    pub fn window_mean_generation_sum(
        &self,
        user: usize,
        t_days: usize,
        window: usize,
    ) -> Result<f64> {
        let mut sum = 0.0;
        for t in 0..t_days {
            sum += self.window_mean(user, t, window)?.1;
        }
        Ok(sum)
    }

    /// 0-based cyclic day indices of the window centered on `day`: half the
    /// window on each side, truncated to distinct days.
    fn window_days(&self, day: usize, window: usize) -> impl Iterator<Item = usize> + '_ {
        let half = window.max(1) / 2;
        let count = (2 * half + 1).min(self.t_hist);
        let start = (day + self.t_hist - (half % self.t_hist)) % self.t_hist;
        (0..count).map(move |k| (start + k) % self.t_hist)
    }

    /// Reads records from CSV with header
    /// `user_id,day,consumption_kwh,generation_kwh_per_m2` (1-based days).
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            user_id: usize,
            day: usize,
            consumption_kwh: f64,
            generation_kwh_per_m2: f64,
        }
        let mut rows: Vec<Row> = Vec::new();
        for row in csv::Reader::from_reader(reader).deserialize() {
            let row: Row = row?;
            if row.day == 0 {
                return Err(Error::data(format!("day must be >= 1 for user {}", row.user_id)));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::data("historical CSV contains no records"));
        }
        let n_users = rows.iter().map(|r| r.user_id).max().unwrap() + 1;
        let t_hist = rows.iter().map(|r| r.day).max().unwrap();
        let mut seen = vec![false; n_users];
        let mut data = HistoricalData::new(n_users, t_hist)?;
        for row in &rows {
            let idx = row.user_id * t_hist + (row.day - 1);
            if data.records[idx].is_some() {
                return Err(Error::data(format!(
                    "duplicate record for user {}, day {}",
                    row.user_id, row.day
                )));
            }
            data.set_day(row.user_id, row.day - 1, row.consumption_kwh, row.generation_kwh_per_m2)?;
            seen[row.user_id] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::data(format!(
                "user ids must be contiguous from 0: user {missing} has no records"
            )));
        }
        Ok(data)
    }

    /// Reads records from a CSV file; see [`HistoricalData::read_csv`].
    pub fn read_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Writes records as CSV, sorted by user then day, omitting gaps.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["user_id", "day", "consumption_kwh", "generation_kwh_per_m2"])?;
        for user in 0..self.n_users {
            for day in 0..self.t_hist {
                if let Some(rec) = self.record(user, day) {
                    out.write_record(&[
                        user.to_string(),
                        (day + 1).to_string(),
                        rec.consumption.to_string(),
                        rec.generation.to_string(),
                    ])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Writes records to a CSV file; see [`HistoricalData::write_csv`].
    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

// ---------------------------------------------------------------------------
// Window bootstrap
// ---------------------------------------------------------------------------

/// How a bootstrap sample pairs consumption with generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    /// Consumption and generation come from the same historical day,
    /// preserving their correlation (the default).
    Joint,
    /// Consumption and generation days are drawn independently.
    Independent,
}

/// Lazy scenario source: per-(sample, user) random streams make every fill
/// independent of evaluation order and thread count.
#[derive(Debug)]
struct BootstrapSource {
    n_samples: usize,
    n_users: usize,
    n_days: usize,
    seed: u64,
    pairing: Pairing,
    /// `candidates[user][t]` are the (X, Y) pairs day t may draw from.
    candidates: Vec<Vec<Vec<(f64, f64)>>>,
}

impl SampleSource for BootstrapSource {
    fn n_samples(&self) -> usize {
        self.n_samples
    }

    fn n_users(&self) -> usize {
        self.n_users
    }

    fn n_days(&self) -> usize {
        self.n_days
    }

    fn fill_user(&self, sample: usize, user: usize, x: &mut [f64], y: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((sample as u64) << 20) | user as u64);
        let cands = &self.candidates[user];
        for t in 0..self.n_days {
            let pool = &cands[t];
            let (cx, cy) = pool[rng.random_range(0..pool.len())];
            x[t] = cx;
            y[t] = match self.pairing {
                Pairing::Joint => cy,
                Pairing::Independent => pool[rng.random_range(0..pool.len())].1,
            };
        }
    }
}

/// Draws `n_samples` scenarios of `t_days` days by joint window
/// bootstrapping; see [`bootstrap_scenarios_with`].
pub fn bootstrap_scenarios(
    data: &HistoricalData,
    n_samples: usize,
    t_days: usize,
    window: usize,
    seed: u64,
) -> Result<ScenarioSet> {
    bootstrap_scenarios_with(data, n_samples, t_days, window, seed, Pairing::Joint)
}

/// Draws scenarios by resampling each sample day t uniformly from the
/// historical records within half a `window` on either side of day
/// t mod T_hist (cyclic). Deterministic given the seed, for any thread
/// count. A zero window is treated as a one-day window.
pub fn bootstrap_scenarios_with(
    data: &HistoricalData,
    n_samples: usize,
    t_days: usize,
    window: usize,
    seed: u64,
    pairing: Pairing,
) -> Result<ScenarioSet> {
    if n_samples == 0 || t_days == 0 {
        return Err(Error::invalid("bootstrap needs at least one sample and one day"));
    }
    let n = data.n_users();
    let mut candidates = Vec::with_capacity(n);
    for user in 0..n {
        let mut per_day = Vec::with_capacity(t_days.min(data.t_hist()));
        for day in 0..t_days.min(data.t_hist()) {
            let pool: Vec<(f64, f64)> = data
                .window_days(day, window)
                .filter_map(|d| data.record(user, d))
                .map(|rec| (rec.consumption, rec.generation))
                .collect();
            if pool.is_empty() {
                return Err(Error::data(format!(
                    "user {user} has no historical records within the {window}-day window of day {day}"
                )));
            }
            per_day.push(pool);
        }
        candidates.push(per_day);
    }
    // Horizons longer than the record wrap around the historical year.
    if t_days > data.t_hist() {
        for per_day in &mut candidates {
            for t in data.t_hist()..t_days {
                let copy = per_day[t % data.t_hist()].clone();
                per_day.push(copy);
            }
        }
    }
    let source = BootstrapSource {
        n_samples,
        n_users: n,
        n_days: t_days,
        seed,
        pairing,
        candidates,
    };
    let provenance = format!(
        "window-bootstrap(window={window}, pairing={}, history={}x{})",
        match pairing {
            Pairing::Joint => "joint",
            Pairing::Independent => "independent",
        },
        n,
        data.t_hist()
    );
    ScenarioSet::from_source(Arc::new(source), seed, provenance)
}

// ---------------------------------------------------------------------------
// Synthetic neighborhood
// ---------------------------------------------------------------------------

/// Settings for the synthetic stand-in dataset.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticParams {
    /// Neighborhood-average daily consumption, kWh.
    pub mean_consumption_kwh: f64,
    /// Log-scale spread of daily consumption (heavy right tail).
    pub consumption_sigma: f64,
    /// Log-scale spread of per-user long-run scales.
    pub user_scale_sigma: f64,
    /// Seasonal generation minimum, kWh per m^2 per day.
    pub min_generation_kwh_m2: f64,
    /// Seasonal generation peak, kWh per m^2 per day.
    pub peak_generation_kwh_m2: f64,
    /// Day of year (1-based) where generation peaks.
    pub peak_day: usize,
    /// Log-scale spread of day-to-day weather noise; 0 gives the bare
    /// seasonal curve.
    pub weather_sigma: f64,
    /// Panel area assumed already installed when comparing against a
    /// no-investment baseline, m^2.
    pub baseline_pv_m2: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            mean_consumption_kwh: 10.0,
            consumption_sigma: 0.4,
            user_scale_sigma: 0.2,
            min_generation_kwh_m2: 0.15,
            peak_generation_kwh_m2: 1.2,
            peak_day: 182,
            weather_sigma: 0.5,
            baseline_pv_m2: 6.0,
        }
    }
}

impl SyntheticParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mean_consumption_kwh", self.mean_consumption_kwh),
            ("peak_generation_kwh_m2", self.peak_generation_kwh_m2),
        ] {
            check_positive(name, v)?;
        }
        for (name, v) in [
            ("consumption_sigma", self.consumption_sigma),
            ("user_scale_sigma", self.user_scale_sigma),
            ("min_generation_kwh_m2", self.min_generation_kwh_m2),
            ("weather_sigma", self.weather_sigma),
            ("baseline_pv_m2", self.baseline_pv_m2),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.min_generation_kwh_m2 > self.peak_generation_kwh_m2 {
            return Err(Error::invalid(
                "min_generation_kwh_m2 must not exceed peak_generation_kwh_m2",
            ));
        }
        if self.peak_day == 0 {
            return Err(Error::invalid("peak_day is 1-based and must be >= 1"));
        }
        Ok(())
    }
}

/// A mean-one lognormal draw; sigma 0 gives exactly 1.
fn noise(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    let normal = Normal::new(-0.5 * sigma * sigma, sigma).expect("validated sigma");
    normal.sample(rng).exp()
}

/// Generates a gap-free synthetic neighborhood: heavy-tailed daily
/// consumption around a per-user scale, and seasonal generation (cosine
/// peaking at `peak_day`) times mean-one weather noise, clipped at zero.
pub fn synthetic_neighborhood(
    n_users: usize,
    t_days: usize,
    params: &SyntheticParams,
    seed: u64,
) -> Result<HistoricalData> {
    params.validate()?;
    let mut data = HistoricalData::new(n_users, t_days)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for user in 0..n_users {
        let scale_x = noise(&mut rng, params.user_scale_sigma);
        let scale_y = noise(&mut rng, params.user_scale_sigma);
        for day in 0..t_days {
            let x = params.mean_consumption_kwh * scale_x * noise(&mut rng, params.consumption_sigma);
            let phase =
                2.0 * std::f64::consts::PI * (day as f64 - (params.peak_day - 1) as f64) / 365.0;
            let seasonal = params.min_generation_kwh_m2
                + (params.peak_generation_kwh_m2 - params.min_generation_kwh_m2)
                    * 0.5
                    * (1.0 + phase.cos());
            let y = (seasonal * scale_y * noise(&mut rng, params.weather_sigma)).max(0.0);
            data.set_day(user, day, x, y)?;
        }
    }
    Ok(data)
}
