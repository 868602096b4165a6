//! Safe-phase triggers: the theoretical confidence test and the Monte Carlo
//! bootstrap stability test used by the practical variant.

use rand::Rng;

use crate::control_math::{solve_dare_default, spectral_radius, CostPair, RiccatiSolution, SystemPair};
use crate::ols::{sample_ols_posterior_with, ConfidenceScalar, OlsResult};

/// Which trigger decides the safe epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerVariant {
    Theoretical,
    Bootstrap,
}

/// Trigger parameters; defaults match the benchmark setup.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TriggerConfig {
    pub variant: TriggerVariant,
    /// Monte Carlo sample count for the bootstrap test.
    pub n_mc: usize,
    /// Spectral-radius acceptance threshold for sampled closed loops.
    pub rho_threshold: f64,
    /// State-norm multiple that trips the runtime fallback shield.
    pub fallback_multiplier: f64,
}

impl Default for TriggerConfig {
    fn default() -> Self {
        Self {
            variant: TriggerVariant::Bootstrap,
            n_mc: 50,
            rho_threshold: 0.99,
            fallback_multiplier: 5.0,
        }
    }
}

/// Certainty-equivalent Riccati solution on the OLS estimate, if solvable.
fn estimate_riccati(ols: &OlsResult, cost: &CostPair) -> Option<RiccatiSolution> {
    let sys = SystemPair::new(ols.ahat.clone(), ols.bhat.clone()).ok()?;
    solve_dare_default(&sys, cost).ok()
}

/// Theoretical trigger: `Lambda_k >= I` and `sqrt(Conf_k) <= 1/(9 C_safe(Ahat, Bhat))`.
///
/// Returns `false` (never an error) when the covariance gate fails, the
/// confidence is infinite, or the DARE on the estimate does not converge.
pub fn theoretical_trigger(ols: &OlsResult, conf: &ConfidenceScalar, cost: &CostPair) -> bool {
    theoretical_trigger_detail(ols, conf, cost).is_some()
}

pub(crate) fn theoretical_trigger_detail(
    ols: &OlsResult,
    conf: &ConfidenceScalar,
    cost: &CostPair,
) -> Option<RiccatiSolution> {
    if ols.lambda_min() < 1.0 || !conf.value.is_finite() || conf.value < 0.0 {
        return None;
    }
    let sol = estimate_riccati(ols, cost)?;
    let c_safe = 54.0 * sol.p_op_norm().powi(5);
    if conf.value.sqrt() <= 1.0 / (9.0 * c_safe) {
        Some(sol)
    } else {
        None
    }
}

/// Bootstrap trigger: fire iff every posterior-sampled system is stabilized
/// by the certainty-equivalent gain at the configured radius threshold.
pub fn bootstrap_trigger(
    ols: &OlsResult,
    sigma_w: f64,
    cfg: &TriggerConfig,
    cost: &CostPair,
    seed: u64,
) -> bool {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    bootstrap_trigger_detail(ols, sigma_w, cfg, cost, &mut rng).is_some()
}

pub(crate) fn bootstrap_trigger_detail<R: Rng>(
    ols: &OlsResult,
    sigma_w: f64,
    cfg: &TriggerConfig,
    cost: &CostPair,
    rng: &mut R,
) -> Option<RiccatiSolution> {
    let sol = estimate_riccati(ols, cost)?;
    let samples = sample_ols_posterior_with(ols, sigma_w, cfg.n_mc, rng).ok()?;
    for s in &samples {
        let a_cl = &s.a + &s.b * &sol.k;
        if spectral_radius(&a_cl) >= cfg.rho_threshold {
            return None;
        }
    }
    Some(sol)
}
