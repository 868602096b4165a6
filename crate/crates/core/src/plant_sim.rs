//! Seeded stochastic simulation of the linear plant with cost and regret
//! accounting.
//!
//! One master seed spawns independent sub-streams for process noise,
//! exploration noise, and per-epoch Monte Carlo draws, so controller variants
//! replayed under the same seed see identical disturbance realizations.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::control_math::SystemPair;
use crate::error::{Error, Result};

/// Trial-level simulation parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimConfig {
    /// Horizon `T` (at least 4).
    pub horizon: usize,
    /// Master seed for all randomness in the trial.
    pub seed: u64,
    /// Process-noise standard deviation.
    pub sigma_w: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 4 {
            return Err(Error::Config(format!(
                "horizon must be at least 4, got {}",
                self.horizon
            )));
        }
        if !(self.sigma_w.is_finite() && self.sigma_w > 0.0) {
            return Err(Error::Config(format!(
                "sigma_w must be a positive finite number, got {}",
                self.sigma_w
            )));
        }
        Ok(())
    }
}

/// Sub-stream identifiers hung off one master seed.
const STREAM_PROCESS: u64 = 1;
const STREAM_EXPLORE: u64 = 2;
const STREAM_MC_BASE: u64 = 0x4d43_0000_0000_0000; // per-epoch Monte Carlo

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Independent per-trial noise sources.
pub struct TrialRng {
    process: ChaCha12Rng,
    explore: ChaCha12Rng,
    seed: u64,
}

impl TrialRng {
    pub fn new(seed: u64) -> Self {
        Self {
            process: stream_rng(seed, STREAM_PROCESS),
            explore: stream_rng(seed, STREAM_EXPLORE),
            seed,
        }
    }

    /// Next process disturbance `w_t ~ N(0, sigma_w^2 I)`.
    pub fn process_noise(&mut self, dim: usize, sigma_w: f64) -> DVector<f64> {
        DVector::from_fn(dim, |_, _| {
            sigma_w * self.process.sample::<f64, _>(StandardNormal)
        })
    }

    /// Next exploration draw `g_t ~ N(0, I)`.
    pub fn exploration_noise(&mut self, dim: usize) -> DVector<f64> {
        DVector::from_fn(dim, |_, _| self.explore.sample::<f64, _>(StandardNormal))
    }

    /// Fresh generator for epoch-`k` Monte Carlo draws, independent of the
    /// per-step streams and of how many draws other epochs consumed.
    pub fn epoch_mc_rng(&self, k: usize) -> ChaCha12Rng {
        stream_rng(self.seed, STREAM_MC_BASE | k as u64)
    }
}

/// One step of `x_{t+1} = A x_t + B u_t + w_t`.
pub fn step(
    x: &DVector<f64>,
    u: &DVector<f64>,
    sys: &SystemPair,
    w: &DVector<f64>,
) -> Result<DVector<f64>> {
    if x.len() != sys.dx() || u.len() != sys.du() || w.len() != sys.dx() {
        return Err(Error::DimensionMismatch(format!(
            "step got x:{} u:{} w:{} for system ({}, {})",
            x.len(),
            u.len(),
            w.len(),
            sys.dx(),
            sys.du()
        )));
    }
    Ok(&sys.a * x + &sys.b * u + w)
}

/// Deterministic stream of `n` i.i.d. standard Gaussian vectors.
pub fn gaussian_stream(seed: u64, n: usize, dim: usize) -> Vec<DVector<f64>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

/// Prefix sums of costs minus `t * jstar`.
pub fn regret_account(costs: &[f64], jstar: f64) -> Vec<f64> {
    let mut acc = 0.0;
    costs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            acc += c;
            acc - (i as f64 + 1.0) * jstar
        })
        .collect()
}

/// Running cost record for one trial.
#[derive(Debug, Clone, Default)]
pub struct CostAccumulator {
    pub cumulative_cost: f64,
    pub per_step_costs: Vec<f64>,
}

impl CostAccumulator {
    pub fn push(&mut self, cost: f64) {
        self.cumulative_cost += cost;
        self.per_step_costs.push(cost);
    }

    /// Regret curve against the optimal average cost.
    pub fn regret_curve(&self, jstar: f64) -> Vec<f64> {
        regret_account(&self.per_step_costs, jstar)
    }
}
