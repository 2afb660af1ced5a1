//! Scenario storage: dense tensors or generator-backed lazy streams.
//!
//! A scenario set is `n_samples` independent draws of the neighborhood's
//! consumption `X` and per-area generation `Y` over the planning horizon.
//! Cost kernels stream over samples in blocks, so a set never has to be
//! materialized; a dense in-memory form exists for tests and small runs.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::sample_mean;

/// Anything that can produce scenario sample `j` on demand.
///
/// `fill_user` must be a pure function of `(source, sample, user)` so that
/// any parallel evaluation schedule sees identical data.
pub trait SampleSource: Send + Sync {
    fn n_samples(&self) -> usize;
    fn n_users(&self) -> usize;
    fn n_days(&self) -> usize;

    /// Writes user `user`'s consumption and generation series for sample
    /// `sample` into `x` and `y` (each `n_days` long).
    fn fill_user(&self, sample: usize, user: usize, x: &mut [f64], y: &mut [f64]);

    /// Writes the whole neighborhood for one sample, row-major `[user][day]`.
    fn fill_sample(&self, sample: usize, x: &mut [f64], y: &mut [f64]) {
        let t = self.n_days();
        for i in 0..self.n_users() {
            let (lo, hi) = (i * t, (i + 1) * t);
            self.fill_user(sample, i, &mut x[lo..hi], &mut y[lo..hi]);
        }
    }
}

/// Dense `[sample][user][day]` tensors.
struct DenseSource {
    n_samples: usize,
    n_users: usize,
    n_days: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl SampleSource for DenseSource {
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
        let lo = (sample * self.n_users + user) * self.n_days;
        x.copy_from_slice(&self.x[lo..lo + self.n_days]);
        y.copy_from_slice(&self.y[lo..lo + self.n_days]);
    }
}

/// A set of consumption/generation scenarios plus its provenance.
#[derive(Clone)]
pub struct ScenarioSet {
    source: Arc<dyn SampleSource>,
    seed: u64,
    provenance: String,
}

impl std::fmt::Debug for ScenarioSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScenarioSet")
            .field("n_samples", &self.n_samples())
            .field("n_users", &self.n_users())
            .field("n_days", &self.n_days())
            .field("seed", &self.seed)
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl ScenarioSet {
    /// Wraps dense `[sample][user][day]` tensors, validating shape and sign.
    pub fn dense(
        n_samples: usize,
        n_users: usize,
        n_days: usize,
        x: Vec<f64>,
        y: Vec<f64>,
        seed: u64,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let len = n_samples * n_users * n_days;
        if n_samples == 0 || n_users == 0 || n_days == 0 {
            return Err(Error::invalid("scenario set needs at least one sample, user and day"));
        }
        if x.len() != len || y.len() != len {
            return Err(Error::invalid(format!(
                "scenario tensors have {} and {} entries, expected {len}",
                x.len(),
                y.len()
            )));
        }
        for v in x.iter().chain(y.iter()) {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::invalid(format!(
                    "scenario entries must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(ScenarioSet {
            source: Arc::new(DenseSource { n_samples, n_users, n_days, x, y }),
            seed,
            provenance: provenance.into(),
        })
    }

    /// Wraps a lazy source (e.g. a bootstrap resampler).
    pub fn from_source(
        source: Arc<dyn SampleSource>,
        seed: u64,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if source.n_samples() == 0 || source.n_users() == 0 || source.n_days() == 0 {
            return Err(Error::invalid("scenario source needs at least one sample, user and day"));
        }
        Ok(ScenarioSet { source, seed, provenance: provenance.into() })
    }

    pub fn n_samples(&self) -> usize {
        self.source.n_samples()
    }

    pub fn n_users(&self) -> usize {
        self.source.n_users()
    }

    pub fn n_days(&self) -> usize {
        self.source.n_days()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn source(&self) -> &Arc<dyn SampleSource> {
        &self.source
    }

    /// Sample-average of user `i`'s generation summed over the horizon,
    /// kWh/m^2. Feeds conservative bounds (total revenue scales with it).
    pub fn mean_y_sum(&self, user: usize) -> Result<f64> {
        if user >= self.n_users() {
            return Err(Error::invalid(format!(
                "user {user} out of range (set has {} users)",
                self.n_users()
            )));
        }
        let t = self.n_days();
        let src = &self.source;
        let mean = sample_mean(
            self.n_samples(),
            1,
            || (vec![0.0; t], vec![0.0; t]),
            |(x, y), j, out| {
                src.fill_user(j, user, x, y);
                out[0] = y.iter().sum();
            },
        );
        Ok(mean[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_validates_shape_and_sign() {
        assert!(ScenarioSet::dense(1, 1, 2, vec![1.0, 2.0], vec![0.5, 0.5], 0, "t").is_ok());
        assert!(ScenarioSet::dense(1, 1, 2, vec![1.0], vec![0.5, 0.5], 0, "t").is_err());
        assert!(ScenarioSet::dense(1, 1, 2, vec![1.0, -2.0], vec![0.5, 0.5], 0, "t").is_err());
        assert!(ScenarioSet::dense(0, 1, 1, vec![], vec![], 0, "t").is_err());
    }

    #[test]
    fn fill_sample_lays_out_users_in_order() {
        let ss = ScenarioSet::dense(
            2,
            2,
            2,
            (0..8).map(f64::from).collect(),
            (0..8).map(|v| f64::from(v) * 0.1).collect(),
            0,
            "t",
        )
        .unwrap();
        let mut x = vec![0.0; 4];
        let mut y = vec![0.0; 4];
        ss.source().fill_sample(1, &mut x, &mut y);
        assert_eq!(x, vec![4.0, 5.0, 6.0, 7.0]);
        let mut xu = vec![0.0; 2];
        let mut yu = vec![0.0; 2];
        ss.source().fill_user(1, 1, &mut xu, &mut yu);
        assert_eq!(xu, vec![6.0, 7.0]);
    }

    #[test]
    fn mean_y_sum_averages_generation() {
        // Two samples: user 0 has Y totals 3.0 and 1.0 -> mean 2.0.
        let ss = ScenarioSet::dense(
            2,
            1,
            2,
            vec![0.0; 4],
            vec![1.0, 2.0, 0.5, 0.5],
            0,
            "t",
        )
        .unwrap();
        assert_eq!(ss.mean_y_sum(0).unwrap(), 2.0);
    }
}
