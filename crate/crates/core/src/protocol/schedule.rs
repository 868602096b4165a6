//! Safe-round initialization: exploration variance, two-scale schedule
//! constants, and the safe set, all derived deterministically from the shared
//! decoded center so both endpoints compute identical values.

use crate::control_math::{op_norm, solve_dare_default, CostPair, SystemPair};
use crate::error::{Error, Result};
use crate::param::sys_to_theta;

use super::safe_set::SafeSet;

/// Constants fixed at the safe epoch and used for the rest of the trial.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScheduleConstants {
    pub sigma_in_sq: f64,
    pub c_slow: f64,
    pub c_fast: f64,
    pub vslow_hat: f64,
    pub vfast_hat: f64,
    pub pop_hat: f64,
    pub c0: f64,
}

/// Compute exploration variance, two-scale constants, and the safe set from
/// the decoded pair. All logarithms are base 2.
///
/// With `sigma_in_sq_override` set, the override replaces the formula value
/// and the schedule constants are derived from the effective variance.
pub fn safe_round_init(
    decoded: &SystemPair,
    r_safe: f64,
    rho: f64,
    delta: f64,
    cost: &CostPair,
    c0: f64,
    sigma_in_sq_override: Option<f64>,
) -> Result<(ScheduleConstants, SafeSet)> {
    let dx = decoded.dx() as f64;
    let du = decoded.du() as f64;
    let sol = solve_dare_default(decoded, cost)
        .map_err(|e| Error::RiccatiFailure(format!("safe-round init on decoded pair: {e}")))?;
    let pop_hat = 1.0835 * sol.p_op_norm();
    let sigma_formula = dx.sqrt()
        * pop_hat.powf(4.5)
        * (op_norm(&decoded.b) + r_safe).max(1.0)
        * (pop_hat / delta).log2().sqrt();
    let sigma_in_sq = sigma_in_sq_override.unwrap_or(sigma_formula);
    if !(sigma_in_sq > 0.0 && sigma_in_sq.is_finite()) {
        return Err(Error::Config(format!(
            "exploration variance must be positive, got {sigma_in_sq}"
        )));
    }
    let log2_inv_delta = (1.0 / delta).log2();
    let vslow_hat = c0.sqrt() * pop_hat * (dx * du * log2_inv_delta / sigma_in_sq).sqrt();
    let vfast_hat = c0.sqrt() * pop_hat.powf(1.5) * dx * log2_inv_delta;
    let quarter_root = 2f64.powf(0.25);
    let c_slow = (1.0 + quarter_root) / (1.0 - rho * quarter_root) * vslow_hat;
    let c_fast = (1.0 + std::f64::consts::SQRT_2) / (1.0 - rho * std::f64::consts::SQRT_2)
        * vfast_hat;
    let constants = ScheduleConstants {
        sigma_in_sq,
        c_slow,
        c_fast,
        vslow_hat,
        vfast_hat,
        pop_hat,
        c0,
    };
    let safe = SafeSet::new(sys_to_theta(decoded), r_safe, decoded.dx(), decoded.du());
    Ok((constants, safe))
}

/// Ideal base radius `c_slow tau^{-1/4} + c_fast tau^{-1/2}`.
pub fn base_schedule(sched: &ScheduleConstants, tau_k: usize) -> f64 {
    debug_assert!(tau_k >= 1);
    let tau = tau_k as f64;
    sched.c_slow * tau.powf(-0.25) + sched.c_fast * tau.powf(-0.5)
}

/// Decaying exploration variance `min(1, sigma_in^2 tau^{-1/2})`.
pub fn exploration_variance(sigma_in_sq: f64, tau_k: usize) -> f64 {
    debug_assert!(tau_k >= 1);
    (sigma_in_sq / (tau_k as f64).sqrt()).min(1.0)
}

/// Runtime shield: revert to the baseline controller when the state norm
/// exceeds `mult` times the largest norm seen during pre-safe exploration.
pub fn fallback_shield(x_norm: f64, presafe_max_norm: f64, mult: f64) -> bool {
    x_norm > mult * presafe_max_norm
}
