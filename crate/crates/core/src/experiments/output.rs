//! CSV and JSON emission for experiment artifacts.
//!
//! One CSV per `(system, variant)` holds the aggregated curves at full time
//! resolution with columns `t, median_regret, q25, q75, median_bits`. One
//! JSON summary per experiment holds the headline numbers and sampled
//! interquartile bands. Identical inputs produce byte-identical files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::protocol::TrialResult;

/// Aggregated per-time-step statistics across trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub t: usize,
    pub median_regret: f64,
    pub q25: f64,
    pub q75: f64,
    pub median_bits: f64,
}

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let pos = (v.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < v.len() {
        v[lo] * (1.0 - frac) + v[lo + 1] * frac
    } else {
        v[lo]
    }
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Reduce a set of trials to per-time-step median and quartile curves.
pub fn curve_rows(trials: &[TrialResult]) -> Vec<CurveRow> {
    if trials.is_empty() {
        return Vec::new();
    }
    let horizon = trials
        .iter()
        .map(|tr| tr.regret_curve.len())
        .min()
        .unwrap_or(0);
    let mut rows = Vec::with_capacity(horizon);
    let mut regrets = vec![0.0; trials.len()];
    let mut bits = vec![0.0; trials.len()];
    for t in 0..horizon {
        for (i, tr) in trials.iter().enumerate() {
            regrets[i] = tr.regret_curve[t];
            bits[i] = tr.bits_curve[t] as f64;
        }
        rows.push(CurveRow {
            t: t + 1,
            median_regret: median(&regrets),
            q25: quantile(&regrets, 0.25),
            q75: quantile(&regrets, 0.75),
            median_bits: median(&bits),
        });
    }
    rows
}

pub fn write_curves_csv(path: &Path, rows: &[CurveRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_curves_csv(path: &Path) -> Result<Vec<CurveRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record?);
    }
    Ok(rows)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
