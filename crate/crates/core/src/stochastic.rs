//! Slotted single-server queue and its disturbance around the fluid flow.
//!
//! Per slot of length `slot_dt` the server completes one packet with
//! probability `min(1, service_rate * slot_dt)` when the queue is nonempty
//! (non-idling), then `Poisson(arrival_mean * slot_dt)` packets arrive. The
//! fluid mean flow is `q(t) = max(Q(0) + (alpha - mu_eff) t, 0)` with
//! `mu_eff = min(1, mu slot_dt) / slot_dt`, and the disturbance is
//! `N(t) = Q(t) - q(t)`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;

use crate::model::{simulate_fluid, FluidError, FluidNetworkModel};
use crate::numeric::{linear_fit, sum, LinearFit};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StochasticError {
    #[error("invalid stochastic parameter `{field}`: {reason}")]
    InvalidParam {
        field: &'static str,
        reason: &'static str,
    },
    #[error("sample paths and fluid path disagree on length ({expected} vs {got})")]
    MismatchedHorizon { expected: usize, got: usize },
    #[error("no sample paths")]
    NoPaths,
    #[error(transparent)]
    Fluid(#[from] FluidError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StochasticParams {
    /// Mean arrival rate per unit time.
    pub arrival_mean: f64,
    /// Service rate per unit time.
    pub service_rate: f64,
    pub slot_dt: f64,
    pub initial_queue: u64,
    pub n_runs: usize,
    /// Run `i` uses seed `seed + i`.
    pub seed: u64,
}

impl StochasticParams {
    pub fn validate(&self) -> Result<(), StochasticError> {
        let bad = |field, reason| Err(StochasticError::InvalidParam { field, reason });
        if !(self.arrival_mean.is_finite() && self.arrival_mean >= 0.0) {
            return bad("arrival_mean", "must be finite and >= 0");
        }
        if !(self.service_rate.is_finite() && self.service_rate > 0.0) {
            return bad("service_rate", "must be finite and > 0");
        }
        if !(self.slot_dt.is_finite() && self.slot_dt > 0.0) {
            return bad("slot_dt", "must be finite and > 0");
        }
        if self.n_runs < 1 {
            return bad("n_runs", "must be >= 1");
        }
        Ok(())
    }

    /// Per-slot completion probability.
    pub fn service_probability(&self) -> f64 {
        (self.service_rate * self.slot_dt).min(1.0)
    }

    /// Service rate actually achievable with at most one completion per slot.
    pub fn effective_service_rate(&self) -> f64 {
        self.service_probability() / self.slot_dt
    }

    /// Growth rate of `Var N(t)` while the queue stays away from zero:
    /// Poisson arrivals plus Bernoulli completions.
    pub fn disturbance_variance_rate(&self) -> f64 {
        let p = self.service_probability();
        self.arrival_mean + p * (1.0 - p) / self.slot_dt
    }

    pub fn slot_time(&self, slot: usize) -> f64 {
        slot as f64 * self.slot_dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueuePolicy {
    NonIdling,
}

/// One realisation: queue length and cumulative busy time per slot
/// boundary, `horizon + 1` entries each.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub queue: Vec<u64>,
    pub allocation: Vec<f64>,
}

impl SamplePath {
    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}

/// Simulates `horizon` slots with the given seed.
pub fn simulate_stochastic(
    params: &StochasticParams,
    policy: QueuePolicy,
    horizon: usize,
    run_seed: u64,
) -> Result<SamplePath, StochasticError> {
    params.validate()?;
    let QueuePolicy::NonIdling = policy;

    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    let lambda = params.arrival_mean * params.slot_dt;
    let arrivals = if lambda > 0.0 {
        Some(
            Poisson::new(lambda).map_err(|_| StochasticError::InvalidParam {
                field: "arrival_mean",
                reason: "poisson mean out of range",
            })?,
        )
    } else {
        None
    };
    let service =
        Bernoulli::new(params.service_probability()).expect("probability is within [0, 1]");

    let mut queue = Vec::with_capacity(horizon + 1);
    let mut allocation = Vec::with_capacity(horizon + 1);
    let mut q = params.initial_queue;
    let mut busy_slots: u64 = 0;
    queue.push(q);
    allocation.push(0.0);
    for _ in 0..horizon {
        if q > 0 {
            busy_slots += 1;
            if service.sample(&mut rng) {
                q -= 1;
            }
        }
        if let Some(dist) = &arrivals {
            q += dist.sample(&mut rng) as u64;
        }
        queue.push(q);
        allocation.push(busy_slots as f64 * params.slot_dt);
    }
    Ok(SamplePath { queue, allocation })
}

/// Runs `n_runs` independent paths with seeds `seed, seed + 1, ...`.
pub fn simulate_ensemble(
    params: &StochasticParams,
    horizon: usize,
) -> Result<Vec<SamplePath>, StochasticError> {
    (0..params.n_runs)
        .map(|i| {
            simulate_stochastic(
                params,
                QueuePolicy::NonIdling,
                horizon,
                params.seed.wrapping_add(i as u64),
            )
        })
        .collect()
}

/// Fluid mean flow at the slot boundaries, integrated with the fluid
/// network model under full allocation.
pub fn fluid_reference(
    params: &StochasticParams,
    horizon: usize,
) -> Result<Vec<f64>, StochasticError> {
    params.validate()?;
    if horizon == 0 {
        return Ok(vec![params.initial_queue as f64]);
    }
    let model =
        FluidNetworkModel::single_server(params.effective_service_rate(), params.arrival_mean)?;
    let t_max = params.slot_time(horizon);
    let traj = simulate_fluid(
        &model,
        &[params.initial_queue as f64],
        |_, _, u| u[0] = 1.0,
        t_max,
        params.slot_dt,
    )?;
    Ok(traj.states.into_iter().map(|q| q[0]).collect())
}

/// Slots `i >= 1` where the fluid level exceeds three standard deviations of
/// the free disturbance, `q(t) > 3 sqrt(sigma^2 t)`: up to the first slot
/// where that fails, the nonnegativity constraint is almost never active,
/// so the mean path should track the fluid line.
pub fn free_window(params: &StochasticParams, fluid: &[f64]) -> Range<usize> {
    let rate = params.disturbance_variance_rate();
    let end = (1..fluid.len())
        .find(|&i| {
            let t = params.slot_time(i);
            !(fluid[i] > 3.0 * libm::sqrt(rate * t)) || fluid[i] <= 0.0
        })
        .unwrap_or(fluid.len());
    1..end.max(1)
}

/// Per-slot statistics of `N(t) = Q(t) - q(t)` across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceStats {
    pub times: Vec<f64>,
    pub mean_queue: Vec<f64>,
    pub fluid: Vec<f64>,
    pub mean_disturbance: Vec<f64>,
    /// Unbiased sample variance; `NaN` with a single run.
    pub var_disturbance: Vec<f64>,
    /// Standard error of the mean queue; `NaN` with a single run.
    pub std_error: Vec<f64>,
    pub n_runs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DisturbanceSummary {
    /// `sup_t |mean N(t)|` over the whole horizon.
    pub sup_abs_mean: f64,
    /// Largest `|mean N(t)| / SE(t)` inside the window.
    pub max_abs_z: f64,
    /// Least-squares fit of `Var N(t)` against `t` inside the window.
    pub var_fit: Option<LinearFit>,
    pub window_start: usize,
    pub window_end: usize,
}

/// Aggregates sample paths against the fluid path `fluid` (one value per
/// slot boundary). Sums are compensated so run order does not matter
/// beyond rounding.
pub fn disturbance_stats(
    paths: &[SamplePath],
    fluid: &[f64],
    slot_dt: f64,
) -> Result<DisturbanceStats, StochasticError> {
    let n_runs = paths.len();
    if n_runs == 0 {
        return Err(StochasticError::NoPaths);
    }
    let len = fluid.len();
    if let Some(p) = paths.iter().find(|p| p.len() != len) {
        return Err(StochasticError::MismatchedHorizon {
            expected: len,
            got: p.len(),
        });
    }
    let n = n_runs as f64;
    let mut stats = DisturbanceStats {
        times: Vec::with_capacity(len),
        mean_queue: Vec::with_capacity(len),
        fluid: fluid.to_vec(),
        mean_disturbance: Vec::with_capacity(len),
        var_disturbance: Vec::with_capacity(len),
        std_error: Vec::with_capacity(len),
        n_runs,
    };
    for (i, &f) in fluid.iter().enumerate() {
        let mean = sum(paths.iter().map(|p| p.queue[i] as f64)) / n;
        let var = if n_runs > 1 {
            sum(paths.iter().map(|p| {
                let d = p.queue[i] as f64 - mean;
                d * d
            })) / (n - 1.0)
        } else {
            f64::NAN
        };
        stats.times.push(i as f64 * slot_dt);
        stats.mean_queue.push(mean);
        stats.mean_disturbance.push(mean - f);
        stats.var_disturbance.push(var);
        stats.std_error.push(libm::sqrt(var / n));
    }
    Ok(stats)
}

impl DisturbanceStats {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `|mean N(t)| / SE(t)`; zero when both vanish, infinite when only the
    /// standard error does.
    pub fn z_score(&self, i: usize) -> f64 {
        let dev = self.mean_disturbance[i].abs();
        let se = self.std_error[i];
        if dev == 0.0 {
            0.0
        } else if se > 0.0 {
            dev / se
        } else {
            f64::INFINITY
        }
    }

    pub fn summarize(&self, window: Range<usize>) -> DisturbanceSummary {
        let window = window.start.min(self.len())..window.end.min(self.len());
        let sup_abs_mean = self
            .mean_disturbance
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max);
        let max_abs_z = window.clone().map(|i| self.z_score(i)).fold(0.0, f64::max);
        let var_fit = linear_fit(
            &self.times[window.clone()],
            &self.var_disturbance[window.clone()],
        );
        DisturbanceSummary {
            sup_abs_mean,
            max_abs_z,
            var_fit,
            window_start: window.start,
            window_end: window.end,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deterministic() -> StochasticParams {
        StochasticParams {
            arrival_mean: 0.0,
            service_rate: 1.0,
            slot_dt: 1.0,
            initial_queue: 5,
            n_runs: 3,
            seed: 7,
        }
    }

    #[test]
    fn no_arrivals_drains_one_per_slot() {
        let path = simulate_stochastic(&deterministic(), QueuePolicy::NonIdling, 8, 1).unwrap();
        assert_eq!(path.queue, vec![5, 4, 3, 2, 1, 0, 0, 0, 0]);
        assert_eq!(
            path.allocation,
            vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 5.0, 5.0, 5.0]
        );
    }

    #[test]
    fn same_seed_same_path() {
        let params = StochasticParams {
            arrival_mean: 0.7,
            service_rate: 0.9,
            slot_dt: 0.5,
            initial_queue: 3,
            n_runs: 1,
            seed: 0,
        };
        let a = simulate_stochastic(&params, QueuePolicy::NonIdling, 200, 99).unwrap();
        let b = simulate_stochastic(&params, QueuePolicy::NonIdling, 200, 99).unwrap();
        assert_eq!(a, b);
        let c = simulate_stochastic(&params, QueuePolicy::NonIdling, 200, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_randomness_has_no_disturbance() {
        let params = deterministic();
        let paths = simulate_ensemble(&params, 10).unwrap();
        let fluid = fluid_reference(&params, 10).unwrap();
        let stats = disturbance_stats(&paths, &fluid, params.slot_dt).unwrap();
        assert!(stats.mean_disturbance.iter().all(|&x| x.abs() < 1e-12));
        assert!(stats.var_disturbance.iter().all(|&x| x == 0.0));
        assert_eq!(stats.summarize(1..10).max_abs_z, 0.0);
    }

    #[test]
    fn mismatched_horizon_is_rejected() {
        let params = deterministic();
        let paths = simulate_ensemble(&params, 10).unwrap();
        let fluid = fluid_reference(&params, 9).unwrap();
        assert_eq!(
            disturbance_stats(&paths, &fluid, 1.0),
            Err(StochasticError::MismatchedHorizon {
                expected: 10,
                got: 11
            })
        );
    }

    #[test]
    fn single_run_has_undefined_spread() {
        let params = StochasticParams {
            n_runs: 1,
            ..deterministic()
        };
        let paths = simulate_ensemble(&params, 4).unwrap();
        let fluid = fluid_reference(&params, 4).unwrap();
        let stats = disturbance_stats(&paths, &fluid, 1.0).unwrap();
        assert!(stats.std_error.iter().all(|x| x.is_nan()));
    }

    #[test]
    fn invalid_params() {
        let bad = StochasticParams {
            service_rate: 0.0,
            ..deterministic()
        };
        assert!(simulate_stochastic(&bad, QueuePolicy::NonIdling, 1, 0).is_err());
        let bad = StochasticParams {
            n_runs: 0,
            ..deterministic()
        };
        assert!(bad.validate().is_err());
    }
}
