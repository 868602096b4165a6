//! Vectorized parameter helpers.
//!
//! The uplink speaks in terms of `theta = vec(A, B)`: column-major entries of
//! `A` followed by column-major entries of `B`. Both endpoints must agree on
//! this layout bit for bit, so every conversion goes through here.

use nalgebra::{DMatrix, DVector};

use crate::control_math::SystemPair;
use crate::error::{Error, Result};

/// Stack `(A, B)` into a parameter vector of length `dx^2 + dx*du`.
pub fn mats_to_theta(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DVector<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a.as_slice());
    out.extend_from_slice(b.as_slice());
    DVector::from_vec(out)
}

/// Split a parameter vector back into `(A, B)` for the given dimensions.
pub fn theta_to_mats(theta: &DVector<f64>, dx: usize, du: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let ds = dx * dx + dx * du;
    if theta.len() != ds {
        return Err(Error::DimensionMismatch(format!(
            "parameter vector has length {}, expected {} for ({dx}, {du})",
            theta.len(),
            ds
        )));
    }
    let a = DMatrix::from_column_slice(dx, dx, &theta.as_slice()[..dx * dx]);
    let b = DMatrix::from_column_slice(dx, du, &theta.as_slice()[dx * dx..]);
    Ok((a, b))
}

/// Parameter vector of a system pair.
pub fn sys_to_theta(sys: &SystemPair) -> DVector<f64> {
    mats_to_theta(&sys.a, &sys.b)
}

/// Interpret a parameter vector as a system pair.
pub fn theta_to_sys(theta: &DVector<f64>, dx: usize, du: usize) -> Result<SystemPair> {
    let (a, b) = theta_to_mats(theta, dx, du)?;
    SystemPair::new(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_layout() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = DMatrix::from_row_slice(2, 1, &[5.0, 6.0]);
        let theta = mats_to_theta(&a, &b);
        // column-major: A columns first, then B
        assert_eq!(theta.as_slice(), &[1.0, 3.0, 2.0, 4.0, 5.0, 6.0]);
        let (a2, b2) = theta_to_mats(&theta, 2, 1).unwrap();
        assert_eq!(a, a2);
        assert_eq!(b, b2);
    }
}
