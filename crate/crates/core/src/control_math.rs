//! Matrix primitives for controller synthesis.
//!
//! Discrete algebraic Riccati and discrete Lyapunov solvers, optimal gains,
//! spectral quantities, and the safe constant that scales stability margins.
//! Everything here is a pure function of its inputs and sized for dense
//! matrices up to a few dozen states.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Plant matrices `(A, B)` of `x_{t+1} = A x_t + B u_t + w_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemPair {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl SystemPair {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "B must have {} rows, got {}",
                a.nrows(),
                b.nrows()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::DimensionMismatch(
                "system matrices must be finite".into(),
            ));
        }
        Ok(Self { a, b })
    }

    /// State dimension.
    pub fn dx(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn du(&self) -> usize {
        self.b.ncols()
    }

    /// Regressor dimension `dx + du`.
    pub fn d(&self) -> usize {
        self.dx() + self.du()
    }

    /// Number of unknown parameters `dx^2 + dx*du`.
    pub fn ds(&self) -> usize {
        self.dx() * self.dx() + self.dx() * self.du()
    }
}

/// Cost matrices `(Rx, Ru)`, both symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct CostPair {
    pub rx: DMatrix<f64>,
    pub ru: DMatrix<f64>,
}

impl CostPair {
    pub fn new(rx: DMatrix<f64>, ru: DMatrix<f64>) -> Result<Self> {
        check_spd(&rx, "Rx")?;
        check_spd(&ru, "Ru")?;
        Ok(Self { rx, ru })
    }

    /// Identity costs of the given dimensions.
    pub fn identity(dx: usize, du: usize) -> Self {
        Self {
            rx: DMatrix::identity(dx, dx),
            ru: DMatrix::identity(du, du),
        }
    }
}

fn check_spd(m: &DMatrix<f64>, name: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{name} must be square")));
    }
    let scale = 1.0 + m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let asym = (m - m.transpose()).abs().max();
    if asym > 1e-12 * scale {
        return Err(Error::DimensionMismatch(format!(
            "{name} must be symmetric (asymmetry {asym:.3e})"
        )));
    }
    if min_eig_sym(m) <= 0.0 {
        return Err(Error::DimensionMismatch(format!(
            "{name} must be positive definite"
        )));
    }
    Ok(())
}

/// Stabilizing DARE solution with the induced gain and closed loop.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    /// Stabilizing fixed point of the Riccati map.
    pub p: DMatrix<f64>,
    /// Optimal stationary gain; the closed loop is `A + B K`.
    pub k: DMatrix<f64>,
    /// Closed-loop matrix `A + B K`.
    pub a_cl: DMatrix<f64>,
    /// Fixed-point iterations used.
    pub iterations: usize,
    /// Final Riccati residual in Frobenius norm.
    pub residual: f64,
}

impl RiccatiSolution {
    /// `||P||_op`, the largest eigenvalue of the (symmetric PSD) solution.
    pub fn p_op_norm(&self) -> f64 {
        sym_op_norm(&self.p)
    }
}

/// Solution of the discrete Lyapunov equation `X = M^T X M + Q`.
#[derive(Debug, Clone)]
pub struct LyapunovSolution {
    pub x: DMatrix<f64>,
}

/// Riccati map `P -> A^T P A + Rx - A^T P B (Ru + B^T P B)^{-1} B^T P A`.
fn riccati_map(p: &DMatrix<f64>, sys: &SystemPair, cost: &CostPair) -> Option<DMatrix<f64>> {
    let at_p = sys.a.transpose() * p;
    let bt_p = sys.b.transpose() * p;
    let gram = &cost.ru + &bt_p * &sys.b;
    let chol = gram.cholesky()?;
    let bt_p_a = &bt_p * &sys.a;
    let correction = bt_p_a.transpose() * chol.solve(&bt_p_a);
    let next = &at_p * &sys.a + &cost.rx - correction;
    // Symmetrize to keep rounding drift out of the iteration.
    Some((&next + next.transpose()) * 0.5)
}

/// Gain for a given `P`: `K = -(Ru + B^T P B)^{-1} B^T P A`.
fn gain_for(p: &DMatrix<f64>, sys: &SystemPair, cost: &CostPair) -> Option<DMatrix<f64>> {
    let bt_p = sys.b.transpose() * p;
    let gram = &cost.ru + &bt_p * &sys.b;
    let chol = gram.cholesky()?;
    Some(-chol.solve(&(&bt_p * &sys.a)))
}

/// Solve the DARE by fixed-point iteration of the Riccati map from `P_0 = Rx`.
///
/// The iteration is monotone from below for stabilizable pairs, so it doubles
/// as the stabilizability test: failure to converge (or an unstable closed
/// loop at the fixed point) reports `NonConvergence`.
pub fn solve_dare(
    sys: &SystemPair,
    cost: &CostPair,
    tol: f64,
    max_iter: usize,
) -> Result<RiccatiSolution> {
    if cost.rx.nrows() != sys.dx() || cost.ru.nrows() != sys.du() {
        return Err(Error::DimensionMismatch(format!(
            "cost dims ({}, {}) do not match system dims ({}, {})",
            cost.rx.nrows(),
            cost.ru.nrows(),
            sys.dx(),
            sys.du()
        )));
    }
    let mut p = cost.rx.clone();
    let mut last_step = f64::INFINITY;
    for it in 1..=max_iter {
        let next = riccati_map(&p, sys, cost).ok_or(Error::NonConvergence {
            max_iter,
            residual: last_step,
        })?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonConvergence {
                max_iter,
                residual: f64::INFINITY,
            });
        }
        last_step = (&next - &p).norm();
        let converged = last_step <= tol * (1.0 + p.norm());
        p = next;
        if converged {
            let k = gain_for(&p, sys, cost).ok_or(Error::NonConvergence {
                max_iter,
                residual: last_step,
            })?;
            let a_cl = &sys.a + &sys.b * &k;
            let rho = spectral_radius(&a_cl);
            if rho >= 1.0 {
                return Err(Error::NonConvergence {
                    max_iter,
                    residual: last_step,
                });
            }
            let residual = dare_residual(&p, sys, cost);
            return Ok(RiccatiSolution {
                p,
                k,
                a_cl,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        max_iter,
        residual: last_step,
    })
}

/// Frobenius norm of `P - (A^T P A + Rx - A^T P B (Ru + B^T P B)^{-1} B^T P A)`.
pub fn dare_residual(p: &DMatrix<f64>, sys: &SystemPair, cost: &CostPair) -> f64 {
    match riccati_map(p, sys, cost) {
        Some(mapped) => (p - mapped).norm(),
        None => f64::INFINITY,
    }
}

/// Default-tolerance DARE solve (tol 1e-12, 10 000 iterations).
pub fn solve_dare_default(sys: &SystemPair, cost: &CostPair) -> Result<RiccatiSolution> {
    solve_dare(sys, cost, 1e-12, 10_000)
}

const DLYAP_KRON_MAX_DIM: usize = 8;

/// Solve `X = M^T X M + Q` for Schur-stable `M` and PSD `Q`.
///
/// Kronecker vectorization up to 8 states, series summation beyond.
pub fn solve_dlyap(m: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<LyapunovSolution> {
    if !m.is_square() || q.shape() != m.shape() {
        return Err(Error::DimensionMismatch(
            "dlyap needs square M and Q of matching size".into(),
        ));
    }
    let rho = spectral_radius(m);
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    let n = m.nrows();
    let x = if n <= DLYAP_KRON_MAX_DIM {
        let mt = m.transpose();
        let kron = mt.kronecker(&mt);
        let lhs = DMatrix::identity(n * n, n * n) - kron;
        let rhs = DVector::from_column_slice(q.as_slice());
        let sol = lhs
            .lu()
            .solve(&rhs)
            .ok_or(Error::Unstable { rho })?;
        DMatrix::from_column_slice(n, n, sol.as_slice())
    } else {
        // sum (M^T)^i Q M^i until the terms fall below working precision
        let mut x = q.clone();
        let mut term = q.clone();
        let mt = m.transpose();
        for _ in 0..100_000 {
            term = &mt * &term * m;
            let tn = term.norm();
            x += &term;
            if tn <= 1e-16 * (1.0 + x.norm()) {
                break;
            }
        }
        x
    };
    Ok(LyapunovSolution {
        x: (&x + x.transpose()) * 0.5,
    })
}

/// Residual `||X - M^T X M - Q||_F` of a candidate Lyapunov solution.
pub fn dlyap_residual(x: &DMatrix<f64>, m: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    (x - m.transpose() * x * m - q).norm()
}

/// Safe constant `54 ||P_inf(A,B)||_op^5`.
pub fn safe_constant(sys: &SystemPair, cost: &CostPair) -> Result<f64> {
    let sol = solve_dare_default(sys, cost)?;
    Ok(54.0 * sol.p_op_norm().powi(5))
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|e| e.norm())
        .fold(0.0, f64::max)
}

/// Operator (spectral) norm of a general matrix.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0f64, |acc, s| acc.max(*s))
}

/// Operator norm of a symmetric matrix via its eigenvalues.
pub fn sym_op_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, e| acc.max(e.abs()))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eig_sym(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, e| acc.min(*e))
}

/// Grid maximum of `sigma_max((e^{iw} I - M)^{-1})` over `w in [0, 2pi)`.
///
/// A cheap resolvent-norm diagnostic; refine by doubling `grid_points`.
pub fn hinf_diagnostic(m: &DMatrix<f64>, grid_points: usize) -> Result<f64> {
    let rho = spectral_radius(m);
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    let n = m.nrows();
    let mc = m.map(|v| Complex::new(v, 0.0));
    let mut best = 0.0f64;
    for j in 0..grid_points.max(1) {
        let w = 2.0 * std::f64::consts::PI * (j as f64) / (grid_points.max(1) as f64);
        let z = Complex::new(w.cos(), w.sin());
        let shifted = DMatrix::from_diagonal_element(n, n, z) - &mc;
        let sigma_min = shifted
            .singular_values()
            .iter()
            .fold(f64::INFINITY, |acc, s| acc.min(*s));
        if sigma_min > 0.0 {
            best = best.max(1.0 / sigma_min);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn scalar_sys(a: f64, b: f64) -> SystemPair {
        SystemPair::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
        )
        .unwrap()
    }

    #[test]
    fn dare_scalar_unstable() {
        // exact root of p^2 - 1.21 p - 1 = 0
        let expected = (1.21 + (1.21f64 * 1.21 + 4.0).sqrt()) / 2.0;
        let sol = solve_dare_default(&scalar_sys(1.1, 1.0), &CostPair::identity(1, 1)).unwrap();
        assert_relative_eq!(sol.p[(0, 0)], expected, max_relative = 1e-10);
        assert_relative_eq!(sol.p_op_norm(), 1.7738, max_relative = 1e-3);
    }

    #[test]
    fn dare_zero_dynamics() {
        let sol = solve_dare_default(&scalar_sys(0.0, 1.0), &CostPair::identity(1, 1)).unwrap();
        assert_relative_eq!(sol.p[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(sol.k[(0, 0)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn dare_double_integrator() {
        let sys = SystemPair::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            DMatrix::from_column_slice(2, 1, &[0.5, 1.0]),
        )
        .unwrap();
        let sol = solve_dare_default(&sys, &CostPair::identity(2, 1)).unwrap();
        assert_relative_eq!(sol.p_op_norm(), 3.60, max_relative = 0.01);
        assert!(spectral_radius(&sol.a_cl) < 1.0);
    }

    #[test]
    fn dare_residual_invariant() {
        for (a, b) in [(1.1, 1.0), (0.0, 1.0), (0.9, 0.3), (-1.4, 2.0)] {
            let sys = scalar_sys(a, b);
            let cost = CostPair::identity(1, 1);
            let sol = solve_dare_default(&sys, &cost).unwrap();
            assert!(sol.residual <= 1e-8 * (1.0 + sol.p.norm()));
        }
    }

    #[test]
    fn dare_random_stabilizable_pairs() {
        let mut rng = StdRng::seed_from_u64(42);
        let mut accepted = 0;
        while accepted < 100 {
            let dx = rng.random_range(1..=4);
            let du = rng.random_range(1..=4);
            let a = DMatrix::from_fn(dx, dx, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            let b = DMatrix::from_fn(dx, du, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            let sys = SystemPair::new(a, b).unwrap();
            let cost = CostPair::identity(dx, du);
            // rejection-sample pairs where the iteration converges
            if let Ok(sol) = solve_dare_default(&sys, &cost) {
                assert!(sol.residual <= 1e-8 * (1.0 + sol.p.norm()));
                assert!(spectral_radius(&sol.a_cl) < 1.0);
                accepted += 1;
            }
        }
    }

    #[test]
    fn dlyap_trivial_and_scalar() {
        let sol = solve_dlyap(&DMatrix::zeros(2, 2), &DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(sol.x, DMatrix::identity(2, 2), epsilon = 1e-12);

        let sol = solve_dlyap(
            &DMatrix::from_element(1, 1, 0.5),
            &DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        assert_relative_eq!(sol.x[(0, 0)], 1.0 / (1.0 - 0.25), epsilon = 1e-12);

        let sol = solve_dlyap(
            &DMatrix::from_element(1, 1, 0.9),
            &DMatrix::from_element(1, 1, 2.0),
        )
        .unwrap();
        assert_relative_eq!(sol.x[(0, 0)], 2.0 / (1.0 - 0.81), epsilon = 1e-10);
    }

    #[test]
    fn dlyap_rejects_unstable() {
        let err = solve_dlyap(&DMatrix::from_element(1, 1, 1.0), &DMatrix::identity(1, 1));
        assert!(matches!(err, Err(Error::Unstable { .. })));
    }

    #[test]
    fn dlyap_matches_truncated_series() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.random_range(1..=4);
            let mut m = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            let rho = spectral_radius(&m);
            if rho >= 0.95 {
                m *= 0.9 / rho;
            }
            let q = {
                let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
                &g * g.transpose()
            };
            let sol = solve_dlyap(&m, &q).unwrap();
            // independent oracle: truncated series with rho^N < 1e-10
            let rho = spectral_radius(&m).max(1e-6);
            let steps = ((-10.0f64 * std::f64::consts::LN_10) / rho.ln()).ceil() as usize + 1;
            let mut series = q.clone();
            let mut term = q.clone();
            let mt = m.transpose();
            for _ in 0..steps {
                term = &mt * &term * &m;
                series += &term;
            }
            assert!((&sol.x - &series).norm() <= 1e-6 * (1.0 + series.norm()));
        }
    }

    #[test]
    fn safe_constant_examples() {
        let c = safe_constant(&scalar_sys(1.1, 1.0), &CostPair::identity(1, 1)).unwrap();
        assert_relative_eq!(c, 9.5e2, max_relative = 0.05);

        // unit-norm P gives exactly the leading coefficient
        let c = safe_constant(&scalar_sys(0.0, 1.0), &CostPair::identity(1, 1)).unwrap();
        assert_relative_eq!(c, 54.0, epsilon = 1e-9);
    }

    #[test]
    fn spectral_radius_examples() {
        assert_relative_eq!(spectral_radius(&DMatrix::identity(2, 2)), 1.0, epsilon = 1e-12);
        let jordan = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert_relative_eq!(spectral_radius(&jordan), 1.0, epsilon = 1e-9);
        assert_relative_eq!(
            spectral_radius(&DMatrix::from_element(1, 1, 1.1)),
            1.1,
            epsilon = 1e-12
        );
    }

    #[test]
    fn hinf_examples() {
        let z = DMatrix::zeros(2, 2);
        assert_relative_eq!(hinf_diagnostic(&z, 64).unwrap(), 1.0, epsilon = 1e-9);
        // 1 / min_w |e^{iw} - 0.5| = 2, attained at w = 0 which the grid contains
        let m = DMatrix::from_element(1, 1, 0.5);
        assert_relative_eq!(hinf_diagnostic(&m, 128).unwrap(), 2.0, epsilon = 1e-9);
        // minimized at w = pi, contained in every even grid
        let m = DMatrix::from_element(1, 1, -0.9);
        assert_relative_eq!(hinf_diagnostic(&m, 128).unwrap(), 10.0, epsilon = 1e-6);
        // refinement never decreases the estimate
        let m = DMatrix::from_row_slice(2, 2, &[0.3, 0.5, -0.2, 0.4]);
        let g64 = hinf_diagnostic(&m, 64).unwrap();
        let g128 = hinf_diagnostic(&m, 128).unwrap();
        let g256 = hinf_diagnostic(&m, 256).unwrap();
        assert!(g64 <= g128 + 1e-12 && g128 <= g256 + 1e-12);
    }

    #[test]
    fn gain_is_argmin_of_average_cost() {
        // J(K) = sigma_w^2 Tr(dlyap[A + BK, Rx + K' Ru K])
        let cases = [
            (scalar_sys(1.1, 1.0), CostPair::identity(1, 1)),
            (
                SystemPair::new(
                    DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
                    DMatrix::from_column_slice(2, 1, &[0.5, 1.0]),
                )
                .unwrap(),
                CostPair::identity(2, 1),
            ),
        ];
        let mut rng = StdRng::seed_from_u64(3);
        for (sys, cost) in cases {
            let sol = solve_dare_default(&sys, &cost).unwrap();
            let eval = |k: &DMatrix<f64>| -> f64 {
                let a_cl = &sys.a + &sys.b * k;
                let q = &cost.rx + k.transpose() * &cost.ru * k;
                solve_dlyap(&a_cl, &q).unwrap().x.trace()
            };
            let base = eval(&sol.k);
            for _ in 0..20 {
                let delta = DMatrix::from_fn(sys.du(), sys.dx(), |_, _| {
                    rng.sample::<f64, _>(rand_distr::StandardNormal)
                });
                let perturbed = &sol.k + delta * 1e-3;
                assert!(eval(&perturbed) >= base - 1e-12);
            }
        }
    }
}
