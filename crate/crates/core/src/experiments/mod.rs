//! Benchmark systems and the multi-trial experiment harness.

mod output;
mod runner;
mod systems;

pub use output::{curve_rows, median, quantile, read_curves_csv, write_curves_csv, write_json, CurveRow};
pub use runner::{
    run_experiment, sample_times, summarize, trigger_gap_table, variant_config, Experiment,
    ExperimentSummary, SampledBand, TriggerGapRow, Variant, VariantSummary,
};
pub use systems::{available_systems, benchmark_system, BenchmarkSystem, SystemName};
