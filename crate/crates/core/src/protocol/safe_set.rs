//! Operator-norm safe set around the shared decoded estimate.

use nalgebra::{DMatrix, DVector};

use crate::control_math::{op_norm, safe_constant, CostPair};
use crate::error::Result;
use crate::param::{mats_to_theta, theta_to_mats, theta_to_sys};

/// Neighborhood `max(||A - Ac||_op, ||B - Bc||_op) <= r_safe` of a decoded
/// center, within which every certainty-equivalent controller is stabilizing.
#[derive(Debug, Clone, PartialEq)]
pub struct SafeSet {
    pub center: DVector<f64>,
    pub r_safe: f64,
    pub dx: usize,
    pub du: usize,
}

impl SafeSet {
    pub fn new(center: DVector<f64>, r_safe: f64, dx: usize, du: usize) -> Self {
        debug_assert_eq!(center.len(), dx * dx + dx * du);
        Self {
            center,
            r_safe,
            dx,
            du,
        }
    }

    /// Membership test with a small relative slack for rounding.
    pub fn contains(&self, theta: &DVector<f64>) -> bool {
        let (da, db) = match self.block_deviation(theta) {
            Ok(v) => v,
            Err(_) => return false,
        };
        let tol = 1e-9 * (1.0 + self.r_safe);
        da.max(db) <= self.r_safe + tol
    }

    fn block_deviation(&self, theta: &DVector<f64>) -> Result<(f64, f64)> {
        let (a, b) = theta_to_mats(theta, self.dx, self.du)?;
        let (ac, bc) = theta_to_mats(&self.center, self.dx, self.du)?;
        Ok((op_norm(&(a - ac)), op_norm(&(b - bc))))
    }

    /// Frobenius-metric projection: clip each block's singular values to
    /// `r_safe` around the center. Idempotent and non-expansive.
    ///
    /// Non-finite input (a diverged estimate) projects to the center.
    pub fn project(&self, theta: &DVector<f64>) -> DVector<f64> {
        if theta.iter().any(|v| !v.is_finite()) {
            return self.center.clone();
        }
        let (a, b) = theta_to_mats(theta, self.dx, self.du).expect("dimension checked");
        let (ac, bc) = theta_to_mats(&self.center, self.dx, self.du).expect("dimension checked");
        let pa = &ac + clip_op_norm(&(a - &ac), self.r_safe);
        let pb = &bc + clip_op_norm(&(b - &bc), self.r_safe);
        mats_to_theta(&pa, &pb)
    }

    /// Recompute the safe radius from the center, `1 / (3 C_safe(center))`.
    pub fn radius_from_center(&self, cost: &CostPair) -> Result<f64> {
        let sys = theta_to_sys(&self.center, self.dx, self.du)?;
        Ok(1.0 / (3.0 * safe_constant(&sys, cost)?))
    }
}

/// Clip the singular values of a matrix to `r`.
fn clip_op_norm(m: &DMatrix<f64>, r: f64) -> DMatrix<f64> {
    if op_norm(m) <= r {
        return m.clone();
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd with u");
    let vt = svd.v_t.expect("svd with vt");
    let clipped = DVector::from_iterator(
        svd.singular_values.len(),
        svd.singular_values.iter().map(|&s| s.min(r)),
    );
    &u * DMatrix::from_diagonal(&clipped) * &vt
}

/// Projection of a parameter vector onto a safe set.
pub fn project_safe(theta: &DVector<f64>, safe: &SafeSet) -> DVector<f64> {
    safe.project(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn scalar_set(center_a: f64, center_b: f64, r: f64) -> SafeSet {
        SafeSet::new(DVector::from_column_slice(&[center_a, center_b]), r, 1, 1)
    }

    #[test]
    fn identity_inside_the_set() {
        let set = scalar_set(0.0, 0.0, 1.0);
        let theta = DVector::from_column_slice(&[0.5, -0.3]);
        assert!(set.contains(&theta));
        assert_eq!(set.project(&theta), theta);
    }

    #[test]
    fn scalar_clip() {
        let set = scalar_set(0.0, 0.0, 1.0);
        let theta = DVector::from_column_slice(&[1.7, 0.0]);
        let proj = set.project(&theta);
        assert!((proj[0] - 1.0).abs() < 1e-12);
        assert_eq!(proj[1], 0.0);
        assert!(set.contains(&proj));
    }

    #[test]
    fn projection_idempotent_and_nonexpansive() {
        let mut rng = StdRng::seed_from_u64(77);
        let center = DVector::from_fn(6, |_, _| rng.sample::<f64, _>(StandardNormal));
        let set = SafeSet::new(center, 0.4, 2, 1);
        for _ in 0..1000 {
            let t1 = DVector::from_fn(6, |_, _| 2.0 * rng.sample::<f64, _>(StandardNormal));
            let t2 = DVector::from_fn(6, |_, _| 2.0 * rng.sample::<f64, _>(StandardNormal));
            let p1 = set.project(&t1);
            let p2 = set.project(&t2);
            assert!(set.contains(&p1));
            // idempotence
            assert!((set.project(&p1) - &p1).norm() <= 1e-10);
            // non-expansiveness in Frobenius norm
            assert!((&p1 - &p2).norm() <= (&t1 - &t2).norm() + 1e-10);
        }
    }
}
