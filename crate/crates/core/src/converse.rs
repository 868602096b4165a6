//! Hard-instance kit for the communication lower bound.
//!
//! Given a gain `K`, the construction produces a system `(A_K, B_K)` whose
//! optimal controller is exactly `K` and whose optimal cost is independent of
//! `K`. The per-instance algebra is closed-form, so it cross-validates the
//! Riccati solver: two independent code paths must land on the same fixed
//! point. The module also evaluates the closed-form bit lower bound and the
//! quantization inflation factors.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::control_math::{
    min_eig_sym, solve_dare_default, sym_op_norm, CostPair, SystemPair,
};
use crate::error::{Error, Result};

/// Eigenvalue floor below which the construction refuses to take square roots.
const EIG_FLOOR: f64 = 1e-12;

/// A constructed instance with optimal gain `K` and cost `J_P`.
#[derive(Debug, Clone)]
pub struct HardInstance {
    pub k: DMatrix<f64>,
    pub c: f64,
    pub p: DMatrix<f64>,
    pub m_k: DMatrix<f64>,
    pub phi_k: DMatrix<f64>,
    pub a_k: DMatrix<f64>,
    pub b_k: DMatrix<f64>,
    pub s_k: DMatrix<f64>,
    pub j_p: f64,
    pub cost: CostPair,
    pub sigma_w: f64,
}

impl HardInstance {
    pub fn system(&self) -> Result<SystemPair> {
        SystemPair::new(self.a_k.clone(), self.b_k.clone())
    }

    /// Quadratic value function `V(x) = x^T P x`.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.p * x)[(0, 0)]
    }
}

/// Symmetric PSD square root via eigendecomposition, flooring eigenvalues.
fn sym_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, e| a.min(*e));
    if min < EIG_FLOOR {
        return Err(Error::SingularPhi { min_eig: min });
    }
    let sqrt_diag = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| l.sqrt()),
    );
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&sqrt_diag) * eig.eigenvectors.transpose())
}

fn sym_inv_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, e| a.min(*e));
    if min < EIG_FLOOR {
        return Err(Error::SingularPhi { min_eig: min });
    }
    let inv_sqrt_diag = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| 1.0 / l.sqrt()),
    );
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt_diag) * eig.eigenvectors.transpose())
}

/// Default constant choice `1.01 (1 + r^2 lmax(Ru) / lmin(Rx))`.
pub fn default_c(r: f64, cost: &CostPair) -> f64 {
    1.01 * (1.0 + r * r * sym_op_norm(&cost.ru) / min_eig_sym(&cost.rx))
}

/// Build the instance for a gain `K` (du x dx) at constant `c`.
pub fn build_hard_instance(
    k: &DMatrix<f64>,
    cost: &CostPair,
    sigma_w: f64,
    c: f64,
) -> Result<HardInstance> {
    let du = k.nrows();
    let dx = k.ncols();
    if cost.rx.nrows() != dx || cost.ru.nrows() != du {
        return Err(Error::DimensionMismatch(format!(
            "gain is {du}x{dx} but costs are {}x{} / {}x{}",
            cost.rx.nrows(),
            cost.rx.ncols(),
            cost.ru.nrows(),
            cost.ru.ncols()
        )));
    }
    let k_norm = k.norm();
    let bound = 1.0 + k_norm * k_norm * sym_op_norm(&cost.ru) / min_eig_sym(&cost.rx);
    if c <= bound {
        return Err(Error::CChoiceViolated { c, bound });
    }
    let p = &cost.rx * c;
    let m_k = &cost.rx * (c - 1.0) - k.transpose() * &cost.ru * k;
    let phi_k = sym_inv_sqrt(&p)? * sym_sqrt(&m_k)?;
    let p_inv = p
        .clone()
        .cholesky()
        .ok_or(Error::SingularPhi { min_eig: 0.0 })?
        .inverse();
    let phi_inv_t = phi_k
        .transpose()
        .lu()
        .try_inverse()
        .ok_or(Error::SingularPhi { min_eig: 0.0 })?;
    let b_k = -&p_inv * phi_inv_t * k.transpose() * &cost.ru;
    let a_k = &phi_k - &b_k * k;
    let s_k = &cost.ru + b_k.transpose() * &p * &b_k;
    let j_p = sigma_w * sigma_w * p.trace();
    Ok(HardInstance {
        k: k.clone(),
        c,
        p,
        m_k,
        phi_k,
        a_k,
        b_k,
        s_k,
        j_p,
        cost: cost.clone(),
        sigma_w,
    })
}

/// Largest violation among the instance's defining identities.
pub fn instance_identity_residual(inst: &HardInstance) -> f64 {
    let closed_loop = (&inst.a_k + &inst.b_k * &inst.k - &inst.phi_k).norm();
    let phi_p_phi = (inst.phi_k.transpose() * &inst.p * &inst.phi_k - &inst.m_k).norm();
    let cross = (inst.b_k.transpose() * &inst.p * &inst.phi_k + &inst.cost.ru * &inst.k).norm();
    let dare = (&inst.cost.rx
        + inst.k.transpose() * &inst.cost.ru * &inst.k
        + inst.phi_k.transpose() * &inst.p * &inst.phi_k
        - &inst.p)
        .norm();
    closed_loop.max(phi_p_phi).max(cross).max(dare)
}

/// Gap between the constructed fixed point and the iterative Riccati solver.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct FixedPointGap {
    /// `||K_inf(A_K, B_K) - K||_F`.
    pub gain_gap: f64,
    /// `|sigma_w^2 Tr(P_inf) - J_P| / J_P`.
    pub cost_rel_gap: f64,
}

/// Solve the DARE on the constructed instance and compare with the target.
pub fn verify_fixed_point(inst: &HardInstance, cost: &CostPair) -> Result<FixedPointGap> {
    let sys = inst.system()?;
    let sol = solve_dare_default(&sys, cost)
        .map_err(|e| Error::RiccatiFailure(format!("hard instance: {e}")))?;
    let gain_gap = (&sol.k - &inst.k).norm();
    let jhat = inst.sigma_w * inst.sigma_w * sol.p.trace();
    let cost_rel_gap = (jhat - inst.j_p).abs() / inst.j_p;
    Ok(FixedPointGap {
        gain_gap,
        cost_rel_gap,
    })
}

/// One-step identity residual at `(x, u)` after taking the noise expectation
/// analytically: the quadratic excess `(u - Kx)^T S_K (u - Kx)` must absorb
/// the Bellman discrepancy exactly.
pub fn bellman_residual(inst: &HardInstance, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
    let stage = (x.transpose() * &inst.cost.rx * x)[(0, 0)]
        + (u.transpose() * &inst.cost.ru * u)[(0, 0)];
    let next = &inst.a_k * x + &inst.b_k * u;
    let expected_next_value = inst.value(&next) + inst.sigma_w * inst.sigma_w * inst.p.trace();
    let excess = {
        let dev = u - &inst.k * x;
        (dev.transpose() * &inst.s_k * &dev)[(0, 0)]
    };
    stage + expected_next_value - inst.value(x) - inst.j_p - excess
}

/// Monte Carlo check of the summed identity.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RegretIdentityReport {
    /// Mean of the summed excess terms.
    pub excess_mean: f64,
    pub excess_se: f64,
    /// Mean of regret plus terminal value.
    pub regret_mean: f64,
    pub regret_se: f64,
    pub combined_se: f64,
    pub gap: f64,
    pub pass: bool,
}

/// Compare `sum_t eps_t` against `E[Regret_T] + E[V(x_{T+1})]` for a
/// state-feedback policy, over `n_trials` independent rollouts.
pub fn regret_identity_check<F>(
    inst: &HardInstance,
    policy: F,
    horizon: usize,
    n_trials: usize,
    seed: u64,
) -> RegretIdentityReport
where
    F: Fn(usize, &DVector<f64>) -> DVector<f64>,
{
    let dx = inst.a_k.nrows();
    let mut lhs = Vec::with_capacity(n_trials);
    let mut rhs = Vec::with_capacity(n_trials);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 0..n_trials {
        let mut x = DVector::zeros(dx);
        let mut excess = 0.0;
        let mut cost_sum = 0.0;
        for t in 1..=horizon {
            let u = policy(t, &x);
            let dev = &u - &inst.k * &x;
            excess += (dev.transpose() * &inst.s_k * &dev)[(0, 0)];
            cost_sum += (x.transpose() * &inst.cost.rx * &x)[(0, 0)]
                + (u.transpose() * &inst.cost.ru * &u)[(0, 0)];
            let w = DVector::from_fn(dx, |_, _| {
                inst.sigma_w * rng.sample::<f64, _>(StandardNormal)
            });
            x = &inst.a_k * &x + &inst.b_k * &u + w;
        }
        lhs.push(excess);
        rhs.push(cost_sum - horizon as f64 * inst.j_p + inst.value(&x));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let se = |v: &[f64], m: f64| {
        if v.len() < 2 {
            return 0.0;
        }
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
        (var / v.len() as f64).sqrt()
    };
    let excess_mean = mean(&lhs);
    let regret_mean = mean(&rhs);
    let excess_se = se(&lhs, excess_mean);
    let regret_se = se(&rhs, regret_mean);
    let combined_se = (excess_se * excess_se + regret_se * regret_se).sqrt();
    let gap = (excess_mean - regret_mean).abs();
    let scale = 1.0 + excess_mean.abs() + regret_mean.abs();
    RegretIdentityReport {
        excess_mean,
        excess_se,
        regret_mean,
        regret_se,
        combined_se,
        gap,
        pass: gap <= 3.0 * combined_se + 1e-9 * scale,
    }
}

/// Closed-form evaluation of the bit lower bound.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BoundsReport {
    pub alpha: f64,
    pub horizon: u64,
    pub dx: usize,
    pub du: usize,
    pub r: f64,
    pub sigma_w: f64,
    pub c1: f64,
    pub c: f64,
    /// `du dx (1 - alpha) / 2`, the log2(T) coefficient.
    pub coefficient: f64,
    pub c_est: f64,
    pub constant_c: f64,
    pub bits_lower: f64,
}

/// Evaluate `B(T) >= (du dx / 2)(1 - alpha) log2 T - C`.
#[allow(clippy::too_many_arguments)]
pub fn bits_lower_bound(
    alpha: f64,
    horizon: u64,
    dx: usize,
    du: usize,
    r: f64,
    cost: &CostPair,
    sigma_w: f64,
    c1: f64,
    c: f64,
) -> Result<BoundsReport> {
    if !(0.5..1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha must lie in [1/2, 1), got {alpha}")));
    }
    if horizon < 4 {
        return Err(Error::Config("horizon must be at least 4".into()));
    }
    let bound = 1.0 + r * r * sym_op_norm(&cost.ru) / min_eig_sym(&cost.rx);
    if c <= bound {
        return Err(Error::CChoiceViolated { c, bound });
    }
    let n = (du * dx) as f64;
    let c0 = sigma_w * sigma_w * min_eig_sym(&cost.ru);
    let j_p = sigma_w * sigma_w * c * cost.rx.trace();
    let c_est = (5.0 * c / c0) * (c1 + c * j_p);
    let constant_c = 1.0
        + n / 2.0 * (2.0 * std::f64::consts::PI * std::f64::consts::E * c_est / n).log2()
        - n * (2.0 * r / n.sqrt()).log2();
    let coefficient = n * (1.0 - alpha) / 2.0;
    let bits_lower = coefficient * (horizon as f64).log2() - constant_c;
    Ok(BoundsReport {
        alpha,
        horizon,
        dx,
        du,
        r,
        sigma_w,
        c1,
        c,
        coefficient,
        c_est,
        constant_c,
        bits_lower,
    })
}

/// Quantization inflation factors and multiplier constants at resolution `rho`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct InflationFactors {
    pub c_rho: f64,
    pub beta: f64,
    pub m_inf: f64,
    /// `ceil(m_inf)`, the contracted multiplier ceiling.
    pub m_rho: u64,
    /// Elias Gamma cost of the contracted multiplier.
    pub b_rho: u64,
    pub q_slow: f64,
    pub q_fast: f64,
}

pub fn inflation_factors(rho: f64, c0: f64) -> Result<InflationFactors> {
    if !(rho > 0.0 && rho < std::f64::consts::FRAC_1_SQRT_2) {
        return Err(Error::RhoOutOfRange(rho));
    }
    let beta = rho * std::f64::consts::SQRT_2;
    let c_rho = 1.0 / (1.0 - beta);
    let m_inf = (2.0 - beta) / (1.0 - beta);
    let m_rho = m_inf.ceil() as u64;
    let b_rho = 2 * (63 - m_rho.leading_zeros() as u64) + 1;
    let quarter_root = 2f64.powf(0.25);
    let slow_ratio = (1.0 + quarter_root) / (1.0 - rho * quarter_root);
    let fast_ratio = (1.0 + std::f64::consts::SQRT_2) / (1.0 - beta);
    let q_slow = rho * rho * c_rho * c_rho * slow_ratio * slow_ratio * c0 * 1.0835f64.powi(4);
    let q_fast = rho * rho * c_rho * c_rho * fast_ratio * fast_ratio * c0 * 1.0835f64.powi(6);
    Ok(InflationFactors {
        c_rho,
        beta,
        m_inf,
        m_rho,
        b_rho,
        q_slow,
        q_fast,
    })
}

/// Horizon-dependent part of the total communication bound.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CommBudget {
    /// Per-doubling bit cost `ds log2(1 + 2/rho) + b_rho`.
    pub bracket: f64,
    /// `bracket * log2(T)`.
    pub leading_bits: f64,
    /// One-time terms that the bound leaves symbolic.
    pub symbolic_overhead: String,
}

pub fn comm_budget_bound(ds: usize, rho: f64, horizon: u64) -> Result<CommBudget> {
    if horizon < 2 {
        return Err(Error::Config("horizon must be at least 2".into()));
    }
    let infl = inflation_factors(rho, 1.0)?;
    let bracket = ds as f64 * (1.0 + 2.0 / rho).log2() + infl.b_rho as f64;
    Ok(CommBudget {
        bracket,
        leading_bits: bracket * (horizon as f64).log2(),
        symbolic_overhead:
            "B_init + O(log tau_safe + log^2 tau_ls), one-time terms reported symbolically".into(),
    })
}

/// Uniform draw from the gain cube `[-a, a]^{du x dx}` with `a = r/sqrt(du dx)`.
pub fn sample_gain_cube<R: Rng>(rng: &mut R, dx: usize, du: usize, r: f64) -> DMatrix<f64> {
    let a = r / ((du * dx) as f64).sqrt();
    DMatrix::from_fn(du, dx, |_, _| (rng.random::<f64>() * 2.0 - 1.0) * a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control_math::spectral_radius;
    use approx::assert_relative_eq;

    fn scalar_instance(k: f64, c: f64) -> HardInstance {
        let gain = DMatrix::from_element(1, 1, k);
        build_hard_instance(&gain, &CostPair::identity(1, 1), 1.0, c).unwrap()
    }

    #[test]
    fn worked_scalar_instance() {
        let inst = scalar_instance(0.3, 2.0);
        // independent closed-form: Phi = sqrt(0.455), B = -0.15/Phi, A = Phi + 0.3*0.15/Phi
        let phi = (0.455f64).sqrt();
        let b = -0.15 / phi;
        let a = phi - b * 0.3;
        assert_relative_eq!(inst.phi_k[(0, 0)], phi, epsilon = 1e-12);
        assert_relative_eq!(inst.b_k[(0, 0)], b, epsilon = 1e-12);
        assert_relative_eq!(inst.a_k[(0, 0)], a, epsilon = 1e-12);
        assert_relative_eq!(inst.phi_k[(0, 0)], 0.67454, max_relative = 1e-4);
        assert_relative_eq!(inst.b_k[(0, 0)], -0.22239, max_relative = 1e-4);
        assert_relative_eq!(inst.a_k[(0, 0)], 0.74126, max_relative = 1e-4);
    }

    #[test]
    fn zero_gain_collapses_cross_term() {
        let inst = scalar_instance(0.0, 2.0);
        assert_relative_eq!(inst.m_k[(0, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(inst.phi_k[(0, 0)], 0.5f64.sqrt(), epsilon = 1e-14);
        assert_eq!(inst.b_k[(0, 0)], 0.0);
        assert_relative_eq!(inst.a_k[(0, 0)], 0.5f64.sqrt(), epsilon = 1e-14);
        // zero input matrix forces the zero gain exactly
        let gap = verify_fixed_point(&inst, &CostPair::identity(1, 1)).unwrap();
        assert_eq!(gap.gain_gap, 0.0);
    }

    #[test]
    fn c_choice_precondition() {
        let gain = DMatrix::from_element(1, 1, 1.0);
        let err = build_hard_instance(&gain, &CostPair::identity(1, 1), 1.0, 1.5);
        assert!(matches!(err, Err(Error::CChoiceViolated { .. })));
    }

    #[test]
    fn random_instances_satisfy_identities_and_spectral_bound() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for (dx, du) in [(1usize, 1usize), (2, 1), (2, 2)] {
            let cost = CostPair::identity(dx, du);
            let r = 0.5;
            let c = default_c(r, &cost);
            for _ in 0..30 {
                let k = sample_gain_cube(&mut rng, dx, du, r);
                let inst = build_hard_instance(&k, &cost, 1.0, c).unwrap();
                assert!(instance_identity_residual(&inst) <= 1e-10);
                let rho = spectral_radius(&inst.phi_k);
                assert!(rho <= ((c - 1.0) / c).sqrt() + 1e-12);
                assert!(rho < 1.0);
            }
        }
    }

    #[test]
    fn fixed_point_matches_riccati_solver() {
        let inst = scalar_instance(0.3, 2.0);
        let gap = verify_fixed_point(&inst, &CostPair::identity(1, 1)).unwrap();
        assert!(gap.gain_gap <= 1e-8, "gain gap {}", gap.gain_gap);
        assert!(gap.cost_rel_gap <= 1e-8, "cost gap {}", gap.cost_rel_gap);
    }

    #[test]
    fn bellman_residual_examples() {
        let inst = scalar_instance(0.3, 2.0);
        let zero = DVector::zeros(1);
        assert_eq!(bellman_residual(&inst, &zero, &zero), 0.0);
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let x = DVector::from_fn(1, |_, _| 3.0 * rng.sample::<f64, _>(StandardNormal));
            let u_opt = &inst.k * &x;
            let r = bellman_residual(&inst, &x, &u_opt);
            assert!(r.abs() <= 1e-9 * (1.0 + x.norm_squared() + u_opt.norm_squared()));
            let u = DVector::from_fn(1, |_, _| 3.0 * rng.sample::<f64, _>(StandardNormal));
            let r = bellman_residual(&inst, &x, &u);
            assert!(r.abs() <= 1e-9 * (1.0 + x.norm_squared() + u.norm_squared()));
        }
    }

    #[test]
    fn regret_identity_optimal_policy() {
        let inst = scalar_instance(0.3, 2.0);
        let k = inst.k.clone();
        let report = regret_identity_check(&inst, |_, x| &k * x, 200, 400, 9);
        assert!(report.pass, "{report:?}");
        assert!(report.excess_mean.abs() < 1e-9);
    }

    #[test]
    fn regret_identity_noise_free_is_exact() {
        let gain = DMatrix::from_element(1, 1, 0.3);
        let inst = build_hard_instance(&gain, &CostPair::identity(1, 1), 1e-12, 2.0).unwrap();
        let report = regret_identity_check(&inst, |_, x| x * 0.4, 100, 3, 2);
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn bits_lower_bound_properties() {
        let cost = CostPair::identity(1, 1);
        let rep = bits_lower_bound(0.5, 1 << 20, 1, 1, 0.5, &cost, 1.0, 1.0, 1.3).unwrap();
        assert_eq!(rep.coefficient, 0.25);
        // dual-path re-evaluation of the closed form
        let c0 = 1.0;
        let j_p = 1.3;
        let c_est = (5.0 * 1.3 / c0) * (1.0 + 1.3 * j_p);
        assert_relative_eq!(rep.c_est, c_est, epsilon = 1e-12);
        let constant = 1.0
            + 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * c_est).log2()
            - (2.0 * 0.5f64).log2();
        assert_relative_eq!(rep.constant_c, constant, epsilon = 1e-12);
        assert_relative_eq!(rep.bits_lower, 0.25 * 20.0 - constant, epsilon = 1e-12);

        // doubling the horizon adds exactly the coefficient
        let rep2 = bits_lower_bound(0.5, 1 << 21, 1, 1, 0.5, &cost, 1.0, 1.0, 1.3).unwrap();
        assert_relative_eq!(
            rep2.bits_lower - rep.bits_lower,
            rep.coefficient,
            epsilon = 1e-9
        );
        // monotone in (1 - alpha)
        let rep3 = bits_lower_bound(0.75, 1 << 20, 1, 1, 0.5, &cost, 1.0, 1.0, 1.3).unwrap();
        assert!(rep3.coefficient < rep.coefficient);
    }

    #[test]
    #[allow(clippy::approx_constant)] // frozen decimal oracles for beta and C_rho
    fn inflation_factor_values() {
        let f = inflation_factors(0.5, 1.0).unwrap();
        assert_relative_eq!(f.beta, 0.70711, max_relative = 1e-4);
        assert_relative_eq!(f.c_rho, 3.41421, max_relative = 1e-5);
        assert_relative_eq!(f.m_inf, 4.41421, max_relative = 1e-5);
        assert_eq!(f.m_rho, 5);
        assert_eq!(f.b_rho, 5);

        // formula ratio identity
        let ratio = f.q_fast / f.q_slow;
        let fast = (1.0 + std::f64::consts::SQRT_2) / (1.0 - 0.5 * std::f64::consts::SQRT_2);
        let quarter = 2f64.powf(0.25);
        let slow = (1.0 + quarter) / (1.0 - 0.5 * quarter);
        assert_relative_eq!(
            ratio,
            (fast / slow).powi(2) * 1.0835f64.powi(2),
            epsilon = 1e-9
        );

        // vanishing resolution limit
        let tiny = inflation_factors(1e-6, 1.0).unwrap();
        assert!(tiny.q_slow < 1e-10 && tiny.q_fast < 1e-10);
        assert!(matches!(
            inflation_factors(0.8, 1.0),
            Err(Error::RhoOutOfRange(_))
        ));
    }

    #[test]
    fn comm_budget_values() {
        let b = comm_budget_bound(2, 0.5, 1 << 10).unwrap();
        assert_relative_eq!(b.bracket, 2.0 * 5f64.log2() + 5.0, epsilon = 1e-12);
        assert_relative_eq!(b.leading_bits, b.bracket * 10.0, epsilon = 1e-9);
        assert_relative_eq!(b.leading_bits, 96.44, max_relative = 1e-3);

        let b2 = comm_budget_bound(2, 0.5, 1 << 11).unwrap();
        assert_relative_eq!(b2.leading_bits - b.leading_bits, b.bracket, epsilon = 1e-9);

        // the index-cost part of the bracket decreases in rho; the multiplier
        // cost b_rho is a step function, so compare with it removed
        let fine = comm_budget_bound(2, 0.3, 1 << 10).unwrap();
        let fine_b = inflation_factors(0.3, 1.0).unwrap().b_rho as f64;
        let coarse_b = inflation_factors(0.5, 1.0).unwrap().b_rho as f64;
        assert!(fine.bracket - fine_b > b.bracket - coarse_b);
    }
}
