//! Cross-module behavior: bit-curve phase structure, regret normalization,
//! coordinate-codec tracking error, and artifact round trips.

use qce_core::experiments::{
    benchmark_system, curve_rows, median, read_curves_csv, run_experiment, summarize, sample_times,
    trigger_gap_table, write_curves_csv, SystemName, Variant,
};
use qce_core::plant_sim::SimConfig;
use qce_core::protocol::{run_trial, TrialConfig};

#[test]
fn bits_curve_has_three_phases() {
    let bench = benchmark_system(SystemName::Scalar).unwrap();
    for seed in 0..5u64 {
        let cfg = TrialConfig::practical(SimConfig {
            horizon: 1 << 13,
            seed: 40 + seed,
            sigma_w: 1.0,
        });
        let res = run_trial(&bench.sys, &bench.cost, &bench.k0, &cfg).unwrap();
        let k_safe = res.k_safe.expect("safe phase reached");

        // phase 1: one flag bit per pre-safe epoch
        for e in res.epochs.iter().filter(|e| e.k < k_safe) {
            assert_eq!(e.bits, 1, "seed {seed} epoch {} not a lone flag", e.k);
        }
        // phase 2: the initialization jump dominates every other epoch
        let init_epoch = res.epochs.iter().find(|e| e.k == k_safe).unwrap();
        let max_other = res
            .epochs
            .iter()
            .filter(|e| e.k != k_safe)
            .map(|e| e.bits)
            .max()
            .unwrap();
        assert!(
            init_epoch.bits > max_other,
            "seed {seed}: init {} vs max other {max_other}",
            init_epoch.bits
        );
        // phase 3: bounded per-epoch tracking increments
        let ds = bench.sys.ds() as u64;
        for e in res.epochs.iter().filter(|e| e.k > k_safe) {
            assert!(
                e.bits >= 2 * ds && e.bits <= 64 * ds,
                "seed {seed} epoch {}: tracking cost {} out of range",
                e.k,
                e.bits
            );
        }
    }
}

#[test]
fn coordinate_codec_tracking_error_bound() {
    let bench = benchmark_system(SystemName::DoubleIntegrator).unwrap();
    let ds = bench.sys.ds() as f64;
    for seed in 0..5u64 {
        let cfg = TrialConfig::practical(SimConfig {
            horizon: 1 << 12,
            seed: 70 + seed,
            sigma_w: 1.0,
        });
        let res = run_trial(&bench.sys, &bench.cost, &bench.k0, &cfg).unwrap();
        let k_safe = res.k_safe.expect("safe phase reached");
        for e in res.epochs.iter().filter(|e| e.k > k_safe) {
            let err = e.reconstruction_error.unwrap();
            let bound = ds.sqrt() * 0.5 / (e.tau as f64).sqrt();
            assert!(
                err <= bound + 1e-12,
                "seed {seed} epoch {}: reconstruction {err:.3e} > {bound:.3e}",
                e.k
            );
        }
    }
}

#[test]
fn normalized_regret_flattens_for_the_baseline() {
    // median over the 50-trial experiment seed set
    let bench = benchmark_system(SystemName::Scalar).unwrap();
    let mut at_1k = Vec::new();
    let mut at_10k = Vec::new();
    for seed in 0..50u64 {
        let cfg = TrialConfig::unquantized(SimConfig {
            horizon: 10_000,
            seed: 1 + seed,
            sigma_w: 1.0,
        });
        let res = run_trial(&bench.sys, &bench.cost, &bench.k0, &cfg).unwrap();
        let norm = res.normalized_regret();
        at_1k.push(norm[999]);
        at_10k.push(norm[9999]);
    }
    assert!(
        median(&at_10k) <= median(&at_1k),
        "normalized regret rose: {:.2} -> {:.2}",
        median(&at_1k),
        median(&at_10k)
    );
}

#[test]
fn csv_round_trip_is_exact() {
    let bench = benchmark_system(SystemName::Scalar).unwrap();
    let exp = run_experiment(&bench, &[Variant::PracticalQce], 512, 5, 3).unwrap();
    let rows = curve_rows(exp.trials(Variant::PracticalQce).unwrap());
    let dir = std::env::temp_dir().join("qce_csv_roundtrip");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("scalar_practical.csv");
    write_curves_csv(&path, &rows).unwrap();
    let back = read_curves_csv(&path).unwrap();
    assert_eq!(rows, back);

    // summaries serialize deterministically
    let summary = summarize(&exp);
    let a = serde_json::to_string(&summary).unwrap();
    let b = serde_json::to_string(&summarize(&exp)).unwrap();
    assert_eq!(a, b);
    assert!(!sample_times(512, 24).is_empty());
}

#[test]
fn trigger_gap_scalar_band() {
    let bench = benchmark_system(SystemName::Scalar).unwrap();
    let rows = trigger_gap_table(&[bench], 10_000, 1e-4, 10, 1).unwrap();
    let row = &rows[0];
    assert!((row.two_eps_target - 2.3e-4).abs() <= 0.05 * 2.3e-4);
    // order-of-magnitude band around the published empirical value
    assert!(
        row.median_sqrt_conf >= 1e-2 && row.median_sqrt_conf <= 1.0,
        "sqrt(Conf) = {:.3e}",
        row.median_sqrt_conf
    );
    // the gap itself: empirical confidence is far above the trigger threshold
    assert!(row.median_sqrt_conf > row.two_eps_target);
}
