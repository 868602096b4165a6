//! The plant and controller state machines of the adaptive-scale protocol.
//!
//! A trial is one logical thread: the plant and controller are stepped
//! alternately at doubling epoch boundaries, exchanging bits over the
//! rate-limited uplink and a full-precision gain over the downlink. Distinct
//! trials share nothing and parallelize freely.

mod safe_set;
mod schedule;
mod trial;
mod trigger;

pub use safe_set::{project_safe, SafeSet};
pub use schedule::{
    base_schedule, exploration_variance, fallback_shield, safe_round_init, ScheduleConstants,
};
pub use trial::{
    run_trial, CodecVariant, EpochRecord, TrialConfig, TrialResult,
};
pub use trigger::{bootstrap_trigger, theoretical_trigger, TriggerConfig, TriggerVariant};

use nalgebra::DVector;

/// Epoch length `tau_k = 2^k`.
pub fn epoch_length(k: usize) -> usize {
    1usize << k
}

/// Provenance of a parameter estimate at a given epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateTag {
    /// Unquantized OLS estimate, plant only.
    RawOls,
    /// Plant-side safe projection of the OLS estimate.
    PlantProjected,
    /// Shared decoded estimate, known to both endpoints.
    SharedDecoded,
    /// Controller-side safe projection of the decoded estimate.
    ControllerProjected,
}

/// A parameter vector together with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamEstimate {
    pub theta: DVector<f64>,
    pub tag: EstimateTag,
}

impl ParamEstimate {
    pub fn new(theta: DVector<f64>, tag: EstimateTag) -> Self {
        Self { theta, tag }
    }

    /// Project into a safe set, retagging by which endpoint projected.
    pub fn projected(&self, safe: &SafeSet, tag: EstimateTag) -> Self {
        Self {
            theta: safe.project(&self.theta),
            tag,
        }
    }
}
