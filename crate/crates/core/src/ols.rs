//! Per-epoch ordinary least squares identification and the self-normalized
//! confidence scalar that gates the safe trigger.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::control_math::SystemPair;
use crate::error::{Error, Result};

/// Relative eigenvalue cutoff for the pseudo-inverse.
const PINV_CUTOFF: f64 = 1e-10;

/// Least-squares estimate over one epoch window.
#[derive(Debug, Clone)]
pub struct OlsResult {
    pub ahat: DMatrix<f64>,
    pub bhat: DMatrix<f64>,
    /// Empirical covariance `sum_t z_t z_t^T` over the window.
    pub lambda: DMatrix<f64>,
    pub n_samples: usize,
}

impl OlsResult {
    pub fn dx(&self) -> usize {
        self.ahat.nrows()
    }

    pub fn du(&self) -> usize {
        self.bhat.ncols()
    }

    /// Smallest eigenvalue of the empirical covariance.
    pub fn lambda_min(&self) -> f64 {
        crate::control_math::min_eig_sym(&self.lambda)
    }

    /// Whether the covariance fell below the pseudo-inverse cutoff.
    pub fn is_singular(&self) -> bool {
        let eigs = self.lambda.clone().symmetric_eigen().eigenvalues;
        let max = eigs.iter().fold(0.0f64, |a, e| a.max(*e));
        eigs.iter().any(|e| *e <= PINV_CUTOFF * max.max(1e-300))
    }

    /// Stacked estimate `[Ahat | Bhat]` of shape `dx x (dx + du)`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dx(), self.dx() + self.du());
        m.view_mut((0, 0), (self.dx(), self.dx())).copy_from(&self.ahat);
        m.view_mut((0, self.dx()), (self.dx(), self.du()))
            .copy_from(&self.bhat);
        m
    }
}

/// Moore-Penrose inverse of a symmetric PSD matrix via eigendecomposition.
fn sym_pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let cutoff = PINV_CUTOFF * max.max(1e-300);
    let inv_diag = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&l| if l > cutoff { 1.0 / l } else { 0.0 }),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&inv_diag) * eig.eigenvectors.transpose()
}

/// Fit `[Ahat | Bhat] = (sum x_{t+1} z_t^T) Lambda^+` over aligned sequences.
///
/// `states` must hold one more entry than `inputs`: the pairs are
/// `(z_t = (x_t, u_t), x_{t+1})` for `t` in the window.
pub fn ols_fit(states: &[DVector<f64>], inputs: &[DVector<f64>]) -> Result<OlsResult> {
    if inputs.is_empty() || states.len() != inputs.len() + 1 {
        return Err(Error::EmptyWindow);
    }
    let dx = states[0].len();
    let du = inputs[0].len();
    let d = dx + du;
    let mut lambda = DMatrix::zeros(d, d);
    let mut cross = DMatrix::zeros(dx, d);
    let mut z = DVector::zeros(d);
    for t in 0..inputs.len() {
        z.rows_mut(0, dx).copy_from(&states[t]);
        z.rows_mut(dx, du).copy_from(&inputs[t]);
        lambda += &z * z.transpose();
        cross += &states[t + 1] * z.transpose();
    }
    lambda = (&lambda + lambda.transpose()) * 0.5;
    let est = cross * sym_pinv(&lambda);
    let ahat = est.view((0, 0), (dx, dx)).into_owned();
    let bhat = est.view((0, dx), (dx, du)).into_owned();
    Ok(OlsResult {
        ahat,
        bhat,
        lambda,
        n_samples: inputs.len(),
    })
}

/// Self-normalized confidence scalar for epoch `k`.
#[derive(Debug, Clone, Copy)]
pub struct ConfidenceScalar {
    /// Confidence value; `+inf` when the covariance is not positive definite.
    pub value: f64,
    pub lambda_min: f64,
    pub epoch: usize,
    pub delta: f64,
}

/// `Conf_k = 6 lambda_min(L)^{-1} (d log2 5 + log2(4 k^2 det(3 L) / delta))`.
///
/// All logarithms are base 2. Returns `+inf` when the covariance is singular.
pub fn confidence(res: &OlsResult, k: usize, delta: f64, d: usize) -> ConfidenceScalar {
    debug_assert!(k >= 1 && delta > 0.0 && delta < 1.0);
    let eigs = res.lambda.clone().symmetric_eigen().eigenvalues;
    let lambda_min = eigs.iter().fold(f64::INFINITY, |a, e| a.min(*e));
    if lambda_min <= 0.0 {
        return ConfidenceScalar {
            value: f64::INFINITY,
            lambda_min,
            epoch: k,
            delta,
        };
    }
    // log2 det(3 Lambda) as a sum of eigenvalue logs keeps the determinant
    // out of floating-point range trouble.
    let log2_det3: f64 = eigs.iter().map(|&l| (3.0 * l).log2()).sum();
    let log_term = (4.0 * (k as f64) * (k as f64) / delta).log2() + log2_det3;
    let value = 6.0 / lambda_min * ((d as f64) * 5f64.log2() + log_term);
    ConfidenceScalar {
        value,
        lambda_min,
        epoch: k,
        delta,
    }
}

/// Draw `n_samples` systems from the OLS sampling distribution: each row of
/// `[A | B]` is `N(row([Ahat | Bhat]), sigma_w^2 Lambda^{-1})`.
pub fn sample_ols_posterior(
    res: &OlsResult,
    sigma_w: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<SystemPair>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    sample_ols_posterior_with(res, sigma_w, n_samples, &mut rng)
}

/// Like [`sample_ols_posterior`] but drawing from a caller-owned generator.
pub fn sample_ols_posterior_with<R: Rng>(
    res: &OlsResult,
    sigma_w: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<SystemPair>> {
    let d = res.dx() + res.du();
    let lambda_inv = res
        .lambda
        .clone()
        .cholesky()
        .ok_or(Error::SingularCovariance)?
        .inverse();
    let chol = lambda_inv.cholesky().ok_or(Error::SingularCovariance)?;
    let l = chol.l();
    let mean = res.stacked();
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut sample = mean.clone();
        for i in 0..res.dx() {
            let g = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let noise = &l * g * sigma_w;
            for j in 0..d {
                sample[(i, j)] += noise[j];
            }
        }
        let a = sample.view((0, 0), (res.dx(), res.dx())).into_owned();
        let b = sample.view((0, res.dx()), (res.dx(), res.du())).into_owned();
        out.push(SystemPair::new(a, b)?);
    }
    Ok(out)
}
