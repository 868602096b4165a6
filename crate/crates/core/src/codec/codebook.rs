//! Lattice realization of the unit-ball covering codebook.
//!
//! The codebook is a scaled integer lattice with spacing `g = 2 rho / sqrt(ds)`.
//! A lattice point is kept whenever its cell intersects the unit ball, and
//! points outside the ball are radially projected onto it. Projection onto a
//! convex set is non-expansive, so every unit-ball vector stays within `rho`
//! of the codeword for its own cell and the covering radius is `rho` for the
//! whole ball, not just its interior. Both endpoints rebuild the codebook
//! from `(ds, rho)` alone; nothing about it is ever transmitted.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Feasibility guard: `ds * log2(1 + ceil(sqrt(ds)/rho))` must stay below this.
const GUARD_LIMIT: f64 = 28.0;

/// A fixed covering codebook of the unit ball shared by plant and controller.
#[derive(Debug, Clone)]
pub struct CodebookConfig {
    pub rho: f64,
    pub ds: usize,
    pub codewords: Vec<DVector<f64>>,
    /// Fixed index width `ceil(log2 |C|)` used on the wire.
    pub index_bits: usize,
    /// Lattice spacing `2 rho / sqrt(ds)`.
    pub spacing: f64,
}

/// Build the lattice codebook for dimension `ds` at resolution `rho`.
pub fn build_codebook(ds: usize, rho: f64) -> Result<CodebookConfig> {
    if !(rho > 0.0 && rho < std::f64::consts::FRAC_1_SQRT_2) {
        return Err(Error::RhoOutOfRange(rho));
    }
    if ds == 0 {
        return Err(Error::DimensionMismatch("codebook dimension is zero".into()));
    }
    let guard = ds as f64 * (1.0 + ((ds as f64).sqrt() / rho).ceil()).log2();
    if guard > GUARD_LIMIT {
        return Err(Error::Infeasible {
            ds,
            rho,
            guard,
            limit: GUARD_LIMIT,
        });
    }

    let g = 2.0 * rho / (ds as f64).sqrt();
    let zmax = (1.0 / g + 0.5).ceil() as i64;
    let mut codewords = Vec::new();
    let mut z = vec![-zmax; ds];
    'outer: loop {
        // nearest point of the cell [g z +- g/2]^ds to the origin
        let cell_dist_sq: f64 = z
            .iter()
            .map(|&zi| {
                let lo = (g * zi as f64).abs() - g / 2.0;
                if lo > 0.0 {
                    lo * lo
                } else {
                    0.0
                }
            })
            .sum();
        if cell_dist_sq <= 1.0 + 1e-12 {
            let mut w = DVector::from_iterator(ds, z.iter().map(|&zi| g * zi as f64));
            let norm = w.norm();
            if norm > 1.0 {
                w /= norm;
            }
            codewords.push(w);
        }
        // odometer increment, last coordinate fastest
        for i in (0..ds).rev() {
            if z[i] < zmax {
                z[i] += 1;
                continue 'outer;
            }
            z[i] = -zmax;
        }
        break;
    }

    let index_bits = usize::BITS as usize - (codewords.len().max(1) - 1).leading_zeros() as usize;
    Ok(CodebookConfig {
        rho,
        ds,
        codewords,
        index_bits,
        spacing: g,
    })
}

/// Nearest-codeword quantization of an innovation at scale `s`.
///
/// Returns the codeword index and the reconstruction `s * c_q`. Ties break to
/// the lowest index. Errors if the caller violated `||delta|| <= s`.
pub fn quantize_innovation(
    delta: &DVector<f64>,
    s: f64,
    cb: &CodebookConfig,
) -> Result<(usize, DVector<f64>)> {
    if delta.len() != cb.ds {
        return Err(Error::DimensionMismatch(format!(
            "innovation has dimension {}, codebook {}",
            delta.len(),
            cb.ds
        )));
    }
    let norm = delta.norm();
    if norm > s * (1.0 + 1e-12) {
        return Err(Error::Overflow { norm, scale: s });
    }
    let target = delta.as_slice();
    let mut best = 0usize;
    let mut best_dist = f64::INFINITY;
    for (i, c) in cb.codewords.iter().enumerate() {
        let dist: f64 = target
            .iter()
            .zip(c.as_slice())
            .map(|(&x, &y)| {
                let d = x - s * y;
                d * d
            })
            .sum();
        if dist < best_dist {
            best_dist = dist;
            best = i;
        }
    }
    Ok((best, &cb.codewords[best] * s))
}

/// Reconstruction `s * c_q` for a received index.
pub fn reconstruct(index: usize, s: f64, cb: &CodebookConfig) -> Result<DVector<f64>> {
    cb.codewords
        .get(index)
        .map(|c| c * s)
        .ok_or_else(|| Error::Decode(format!("codeword index {index} out of range")))
}

/// Smallest integer multiplier making the innovation fit the base radius:
/// `max(1, ceil(delta_norm / s_base))`.
pub fn adaptive_multiplier(delta_norm: f64, s_base: f64) -> u64 {
    debug_assert!(s_base > 0.0);
    let m = (delta_norm / s_base).ceil();
    if m < 1.0 {
        1
    } else {
        m as u64
    }
}
