//! Multi-trial experiment runner with a seed-paired worker pool.
//!
//! Trials are dispatched to worker threads (capped by `QCE_THREADS`) and
//! merged in seed order, so output never depends on scheduling. Variants
//! share the trial seeds, hence identical disturbance realizations: the
//! quantized and unquantized controllers are compared pathwise.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ols::{confidence, ols_fit};
use crate::plant_sim::{step, SimConfig, TrialRng};
use crate::protocol::{run_trial, TrialConfig, TrialResult, TriggerVariant};

use super::output::{median, quantile};
use super::systems::BenchmarkSystem;

/// Controller variants exposed by the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Full-precision certainty equivalence (codec bypassed).
    UnquantizedCe,
    /// Coordinate codec, bootstrap trigger, unit exploration variance.
    PracticalQce,
    /// Covering-codebook codec with the adaptive multiplier; bootstrap
    /// trigger so the safe phase is reachable at benchmark horizons.
    TheoreticalQce,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variant::UnquantizedCe => "unquantized",
            Variant::PracticalQce => "practical",
            Variant::TheoreticalQce => "theoretical",
        };
        write!(f, "{s}")
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unquantized" | "ce" => Ok(Variant::UnquantizedCe),
            "practical" | "qce" => Ok(Variant::PracticalQce),
            "theoretical" | "rho_net" => Ok(Variant::TheoreticalQce),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }
}

/// Trial configuration for a variant at the given simulation parameters.
pub fn variant_config(variant: Variant, sim: SimConfig) -> TrialConfig {
    match variant {
        Variant::UnquantizedCe => TrialConfig::unquantized(sim),
        Variant::PracticalQce => TrialConfig::practical(sim),
        Variant::TheoreticalQce => {
            let mut cfg = TrialConfig::theoretical(sim);
            cfg.trigger.variant = TriggerVariant::Bootstrap;
            cfg
        }
    }
}

/// Results of one experiment: per-variant trial sets under paired seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Experiment {
    pub system: String,
    pub horizon: usize,
    pub n_trials: usize,
    pub base_seed: u64,
    pub sets: Vec<(Variant, Vec<TrialResult>)>,
}

impl Experiment {
    pub fn trials(&self, variant: Variant) -> Option<&[TrialResult]> {
        self.sets
            .iter()
            .find(|(v, _)| *v == variant)
            .map(|(_, t)| t.as_slice())
    }
}

fn worker_count() -> usize {
    std::env::var("QCE_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Run `n_trials` seeds for each variant; seeds are `base_seed + i`.
pub fn run_experiment(
    bench: &BenchmarkSystem,
    variants: &[Variant],
    horizon: usize,
    n_trials: usize,
    base_seed: u64,
) -> Result<Experiment> {
    let jobs: Vec<(usize, Variant, u64)> = variants
        .iter()
        .flat_map(|&v| (0..n_trials).map(move |i| (0usize, v, base_seed + i as u64)))
        .enumerate()
        .map(|(slot, (_, v, seed))| (slot, v, seed))
        .collect();
    let results: Mutex<Vec<Option<TrialResult>>> = Mutex::new(vec![None; jobs.len()]);
    let first_error: Mutex<Option<Error>> = Mutex::new(None);
    let next_job = AtomicUsize::new(0);
    let workers = worker_count().min(jobs.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next_job.fetch_add(1, Ordering::Relaxed);
                if idx >= jobs.len() {
                    return;
                }
                let (slot, variant, seed) = jobs[idx];
                let cfg = variant_config(
                    variant,
                    SimConfig {
                        horizon,
                        seed,
                        sigma_w: 1.0,
                    },
                );
                match run_trial(&bench.sys, &bench.cost, &bench.k0, &cfg) {
                    Ok(res) => {
                        results.lock().expect("results lock")[slot] = Some(res);
                    }
                    Err(e) => {
                        let mut guard = first_error.lock().expect("error lock");
                        if guard.is_none() {
                            *guard = Some(e);
                        }
                    }
                }
            });
        }
    });

    if let Some(e) = first_error.into_inner().expect("error lock") {
        return Err(e);
    }
    let merged = results.into_inner().expect("results lock");
    let mut sets: Vec<(Variant, Vec<TrialResult>)> = Vec::with_capacity(variants.len());
    let mut iter = merged.into_iter();
    for &v in variants {
        let trials: Vec<TrialResult> = iter
            .by_ref()
            .take(n_trials)
            .map(|r| r.expect("missing trial result"))
            .collect();
        sets.push((v, trials));
    }
    Ok(Experiment {
        system: bench.name.to_string(),
        horizon,
        n_trials,
        base_seed,
        sets,
    })
}

/// Interquartile band at a sampled time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledBand {
    pub t: usize,
    pub variant: Variant,
    pub median_regret: f64,
    pub q25: f64,
    pub q75: f64,
    pub median_bits: f64,
}

/// Headline numbers for one variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: Variant,
    pub median_regret: f64,
    pub median_total_bits: f64,
    pub median_k_safe: Option<f64>,
    pub trials_with_fallback: usize,
}

/// Experiment summary with the paired quantization overhead.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub system: String,
    pub horizon: usize,
    pub n_trials: usize,
    pub base_seed: u64,
    pub variants: Vec<VariantSummary>,
    pub ce_median_regret: Option<f64>,
    pub qce_median_regret: Option<f64>,
    /// `(qce - ce) / ce * 100`.
    pub overhead_pct: Option<f64>,
    pub median_bits: Option<f64>,
    pub sampled_bands: Vec<SampledBand>,
}

/// Logarithmically spaced sample times in `[8, horizon]`, always ending at
/// the horizon.
pub fn sample_times(horizon: usize, count: usize) -> Vec<usize> {
    let mut times = Vec::new();
    let lo = 8.0f64.min(horizon as f64);
    for i in 0..count {
        let frac = i as f64 / (count.max(2) - 1) as f64;
        let t = (lo * (horizon as f64 / lo).powf(frac)).round() as usize;
        let t = t.clamp(1, horizon);
        if times.last() != Some(&t) {
            times.push(t);
        }
    }
    if times.last() != Some(&horizon) {
        times.push(horizon);
    }
    times
}

pub fn summarize(exp: &Experiment) -> ExperimentSummary {
    let mut variants = Vec::new();
    let mut bands = Vec::new();
    let times = sample_times(exp.horizon, 24);
    for (variant, trials) in &exp.sets {
        let finals: Vec<f64> = trials.iter().map(|t| t.final_regret()).collect();
        let bits: Vec<f64> = trials.iter().map(|t| t.total_bits() as f64).collect();
        let k_safes: Vec<f64> = trials
            .iter()
            .filter_map(|t| t.k_safe.map(|k| k as f64))
            .collect();
        variants.push(VariantSummary {
            variant: *variant,
            median_regret: median(&finals),
            median_total_bits: median(&bits),
            median_k_safe: if k_safes.is_empty() {
                None
            } else {
                Some(median(&k_safes))
            },
            trials_with_fallback: trials.iter().filter(|t| t.fallback_count > 0).count(),
        });
        for &t in &times {
            let idx = t - 1;
            let regrets: Vec<f64> = trials.iter().map(|tr| tr.regret_curve[idx]).collect();
            let bits_t: Vec<f64> = trials.iter().map(|tr| tr.bits_curve[idx] as f64).collect();
            bands.push(SampledBand {
                t,
                variant: *variant,
                median_regret: median(&regrets),
                q25: quantile(&regrets, 0.25),
                q75: quantile(&regrets, 0.75),
                median_bits: median(&bits_t),
            });
        }
    }
    let find = |v: Variant| variants.iter().find(|s| s.variant == v);
    let ce = find(Variant::UnquantizedCe).map(|s| s.median_regret);
    let qce = find(Variant::PracticalQce)
        .or_else(|| find(Variant::TheoreticalQce))
        .map(|s| s.median_regret);
    let overhead = match (ce, qce) {
        (Some(ce), Some(qce)) if ce != 0.0 => Some((qce - ce) / ce * 100.0),
        _ => None,
    };
    let bits = find(Variant::PracticalQce)
        .or_else(|| find(Variant::TheoreticalQce))
        .map(|s| s.median_total_bits);
    ExperimentSummary {
        system: exp.system.clone(),
        horizon: exp.horizon,
        n_trials: exp.n_trials,
        base_seed: exp.base_seed,
        variants,
        ce_median_regret: ce,
        qce_median_regret: qce,
        overhead_pct: overhead,
        median_bits: bits,
        sampled_bands: bands,
    }
}

/// One row of the trigger-gap table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriggerGapRow {
    pub system: String,
    pub p_norm: f64,
    pub c_safe: f64,
    pub two_eps_target: f64,
    /// Median over seeds of the empirical confidence radius at the last
    /// complete epoch within the horizon, under baseline exploration.
    pub median_sqrt_conf: f64,
}

/// Per-system gap between the theoretical trigger threshold and the
/// empirically achievable confidence radius at horizon `T`.
pub fn trigger_gap_table(
    systems: &[BenchmarkSystem],
    horizon: usize,
    delta: f64,
    n_seeds: usize,
    base_seed: u64,
) -> Result<Vec<TriggerGapRow>> {
    let mut rows = Vec::with_capacity(systems.len());
    for bench in systems {
        let sol = crate::control_math::solve_dare_default(&bench.sys, &bench.cost)
            .map_err(|e| Error::RiccatiFailure(format!("{}: {e}", bench.name)))?;
        let p_norm = sol.p_op_norm();
        let c_safe = 54.0 * p_norm.powi(5);
        let two_eps = 2.0 / (9.0 * c_safe);

        // last epoch whose window [2^{k-1}, 2^k - 1] fits inside the horizon
        let k = ((horizon + 1) as f64).log2().floor() as usize;
        let lo = 1usize << (k - 1);
        let hi = (1usize << k) - 1;
        let dx = bench.sys.dx();
        let du = bench.sys.du();
        let mut sqrt_confs = Vec::with_capacity(n_seeds);
        for s in 0..n_seeds {
            let mut rng = TrialRng::new(base_seed + s as u64);
            let mut x = nalgebra::DVector::zeros(dx);
            let mut states = Vec::with_capacity(hi - lo + 2);
            let mut inputs = Vec::with_capacity(hi - lo + 1);
            for t in 1..=hi {
                let g = rng.exploration_noise(du);
                let u = &bench.k0 * &x + g;
                let w = rng.process_noise(dx, 1.0);
                let next = step(&x, &u, &bench.sys, &w)?;
                if t >= lo {
                    states.push(x.clone());
                    inputs.push(u);
                }
                x = next;
            }
            states.push(x.clone());
            let ols = ols_fit(&states, &inputs)?;
            let conf = confidence(&ols, k, delta, dx + du);
            sqrt_confs.push(conf.value.max(0.0).sqrt());
        }
        rows.push(TriggerGapRow {
            system: bench.name.to_string(),
            p_norm,
            c_safe,
            two_eps_target: two_eps,
            median_sqrt_conf: median(&sqrt_confs),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::systems::{benchmark_system, SystemName};

    #[test]
    fn single_trial_summary_equals_the_trial() {
        let bench = benchmark_system(SystemName::Scalar).unwrap();
        let exp = run_experiment(&bench, &[Variant::PracticalQce], 256, 1, 42).unwrap();
        let summary = summarize(&exp);
        let trial = &exp.trials(Variant::PracticalQce).unwrap()[0];
        assert_eq!(summary.qce_median_regret, Some(trial.final_regret()));
        assert_eq!(
            summary.median_bits,
            Some(trial.total_bits() as f64)
        );
    }

    #[test]
    fn identical_base_seeds_reproduce() {
        let bench = benchmark_system(SystemName::Scalar).unwrap();
        let a = run_experiment(&bench, &[Variant::PracticalQce], 128, 3, 7).unwrap();
        let b = run_experiment(&bench, &[Variant::PracticalQce], 128, 3, 7).unwrap();
        let ta = a.trials(Variant::PracticalQce).unwrap();
        let tb = b.trials(Variant::PracticalQce).unwrap();
        for (x, y) in ta.iter().zip(tb.iter()) {
            assert_eq!(x.regret_curve, y.regret_curve);
            assert_eq!(x.bits_curve, y.bits_curve);
        }
    }

    #[test]
    fn sample_times_end_at_horizon() {
        let times = sample_times(10_000, 24);
        assert_eq!(*times.last().unwrap(), 10_000);
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }
}
