//! Benchmark system definitions.
//!
//! The scalar and double-integrator plants are defined inline. The pendulum
//! and airliner models ship as JSON data files with embedded checksums and
//! expected spectral quantities; a file that fails its validation marks the
//! benchmark unavailable rather than silently running a wrong model.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::control_math::{solve_dare_default, spectral_radius, CostPair, SystemPair};
use crate::error::{Error, Result};

const PENDULUM_JSON: &str = include_str!("../../data/inverted_pendulum.json");
const BOEING_JSON: &str = include_str!("../../data/boeing747.json");

/// The four benchmark plants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemName {
    Scalar,
    DoubleIntegrator,
    InvertedPendulum,
    Boeing747,
}

impl SystemName {
    pub const ALL: [SystemName; 4] = [
        SystemName::Scalar,
        SystemName::DoubleIntegrator,
        SystemName::InvertedPendulum,
        SystemName::Boeing747,
    ];
}

impl fmt::Display for SystemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SystemName::Scalar => "scalar",
            SystemName::DoubleIntegrator => "double_integrator",
            SystemName::InvertedPendulum => "inverted_pendulum",
            SystemName::Boeing747 => "boeing747",
        };
        write!(f, "{s}")
    }
}

impl FromStr for SystemName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scalar" => Ok(SystemName::Scalar),
            "double_integrator" => Ok(SystemName::DoubleIntegrator),
            "inverted_pendulum" => Ok(SystemName::InvertedPendulum),
            "boeing747" => Ok(SystemName::Boeing747),
            other => Err(Error::UnknownSystem(other.to_string())),
        }
    }
}

/// A validated benchmark plant with its baseline stabilizing gain.
#[derive(Debug, Clone)]
pub struct BenchmarkSystem {
    pub name: SystemName,
    pub sys: SystemPair,
    pub cost: CostPair,
    pub k0: DMatrix<f64>,
    pub expected_rho: f64,
    pub expected_pnorm: f64,
}

#[derive(Debug, Deserialize)]
struct SystemFile {
    name: String,
    dx: usize,
    du: usize,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    expected_rho: f64,
    expected_pnorm: f64,
    checksum: String,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Canonical matrix rendering used by the checksum: entries in row order,
/// shortest round-trip formatting, rows `;`-separated, matrices `|`-separated.
fn canonical_matrices(a: &[Vec<f64>], b: &[Vec<f64>]) -> String {
    let render = |m: &[Vec<f64>]| {
        m.iter()
            .map(|row| {
                row.iter()
                    .map(|v| format!("{v:?}"))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join(";")
    };
    format!("{}|{}", render(a), render(b))
}

fn rows_to_matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::ValidationFailure(format!(
            "{what} must be {nrows}x{ncols}"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn load_system_file(json: &str, expected_name: &str) -> Result<(SystemPair, f64, f64)> {
    let file: SystemFile = serde_json::from_str(json)?;
    if file.name != expected_name {
        return Err(Error::ValidationFailure(format!(
            "data file names `{}`, expected `{expected_name}`",
            file.name
        )));
    }
    let canonical = canonical_matrices(&file.a, &file.b);
    let checksum = format!("fnv1a64:{:016x}", fnv1a64(canonical.as_bytes()));
    if checksum != file.checksum {
        return Err(Error::ValidationFailure(format!(
            "checksum mismatch for `{expected_name}`: computed {checksum}, file says {}",
            file.checksum
        )));
    }
    let a = rows_to_matrix(&file.a, file.dx, file.dx, "A")?;
    let b = rows_to_matrix(&file.b, file.dx, file.du, "B")?;
    Ok((
        SystemPair::new(a, b)?,
        file.expected_rho,
        file.expected_pnorm,
    ))
}

/// Baseline gain: the optimal gain of a detuned model (`0.9 A`, exact `B`),
/// a stand-in for a coarse prior stabilizer.
fn baseline_gain(sys: &SystemPair, cost: &CostPair) -> Result<DMatrix<f64>> {
    let rough = SystemPair::new(&sys.a * 0.9, sys.b.clone())?;
    let k0 = solve_dare_default(&rough, cost)
        .map_err(|e| Error::ValidationFailure(format!("baseline gain synthesis failed: {e}")))?
        .k;
    Ok(k0)
}

fn validate(
    name: SystemName,
    sys: SystemPair,
    expected_rho: f64,
    expected_pnorm: f64,
) -> Result<BenchmarkSystem> {
    let cost = CostPair::identity(sys.dx(), sys.du());
    let rho = spectral_radius(&sys.a);
    if (rho - expected_rho).abs() > 0.005 {
        return Err(Error::ValidationFailure(format!(
            "{name}: spectral radius {rho:.4} differs from expected {expected_rho}"
        )));
    }
    let pnorm = solve_dare_default(&sys, &cost)
        .map_err(|e| Error::ValidationFailure(format!("{name}: Riccati solve failed: {e}")))?
        .p_op_norm();
    if (pnorm - expected_pnorm).abs() > 0.02 * expected_pnorm {
        return Err(Error::ValidationFailure(format!(
            "{name}: ||P|| = {pnorm:.3} differs from expected {expected_pnorm} by more than 2%"
        )));
    }
    let k0 = baseline_gain(&sys, &cost)?;
    let rho_cl = spectral_radius(&(&sys.a + &sys.b * &k0));
    if rho_cl >= 1.0 {
        return Err(Error::ValidationFailure(format!(
            "{name}: baseline gain fails to stabilize (radius {rho_cl:.4})"
        )));
    }
    Ok(BenchmarkSystem {
        name,
        sys,
        cost,
        k0,
        expected_rho,
        expected_pnorm,
    })
}

/// Look up and validate a benchmark system.
pub fn benchmark_system(name: SystemName) -> Result<BenchmarkSystem> {
    match name {
        SystemName::Scalar => validate(
            name,
            SystemPair::new(
                DMatrix::from_element(1, 1, 1.1),
                DMatrix::from_element(1, 1, 1.0),
            )?,
            1.1,
            1.77,
        ),
        SystemName::DoubleIntegrator => validate(
            name,
            SystemPair::new(
                DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
                DMatrix::from_column_slice(2, 1, &[0.5, 1.0]),
            )?,
            1.0,
            3.60,
        ),
        SystemName::InvertedPendulum => {
            let (sys, rho, pnorm) = load_system_file(PENDULUM_JSON, "inverted_pendulum")?;
            validate(name, sys, rho, pnorm)
        }
        SystemName::Boeing747 => {
            let (sys, rho, pnorm) = load_system_file(BOEING_JSON, "boeing747")?;
            validate(name, sys, rho, pnorm)
        }
    }
}

/// All benchmark systems whose definitions validate.
pub fn available_systems() -> Vec<BenchmarkSystem> {
    SystemName::ALL
        .iter()
        .filter_map(|&n| benchmark_system(n).ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_and_integrator_validate() {
        let s = benchmark_system(SystemName::Scalar).unwrap();
        assert_eq!(s.sys.dx(), 1);
        let d = benchmark_system(SystemName::DoubleIntegrator).unwrap();
        assert_eq!(d.sys.ds(), 6);
    }

    #[test]
    fn data_file_systems_validate() {
        let p = benchmark_system(SystemName::InvertedPendulum).unwrap();
        assert_eq!(p.sys.dx(), 2);
        let b = benchmark_system(SystemName::Boeing747).unwrap();
        assert_eq!(b.sys.dx(), 4);
        assert_eq!(b.sys.du(), 2);
        assert_eq!(b.sys.ds(), 24);
    }

    #[test]
    fn unknown_name_is_rejected() {
        assert!(matches!(
            "sputnik".parse::<SystemName>(),
            Err(Error::UnknownSystem(_))
        ));
        for n in SystemName::ALL {
            assert_eq!(n.to_string().parse::<SystemName>().unwrap(), n);
        }
    }
}
