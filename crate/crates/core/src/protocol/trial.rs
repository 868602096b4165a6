//! End-to-end closed-loop trial.
//!
//! Epoch `k` covers time steps `[2^k, 2^{k+1})`. Steps 1 through 3 run the
//! baseline controller with unit Gaussian excitation (the very first action
//! is pure excitation since `x_1 = 0`). At each boundary `t = 2^k` the plant
//! fits OLS on the previous epoch's window, transmits its epoch message, and
//! the controller replies with a full-precision gain for the coming epoch.
//!
//! Both endpoints derive their shared state by decoding the same bits through
//! the same functions, so the plant-side mirror and the controller-side
//! estimate agree exactly; every trial records that they did.

use nalgebra::{DMatrix, DVector};

use crate::codec::{
    absolute_init, adaptive_multiplier, build_codebook, coord_quantize,
    decode_coord_reconstruction, decode_init_reconstruction, quantize_innovation, reconstruct,
    BitLedger, BitReader, BitStream, CodebookConfig, UplinkMessage,
};
use crate::control_math::{solve_dare_default, spectral_radius, CostPair, SystemPair};
use crate::error::{Error, Result};
use crate::ols::{confidence, ols_fit, OlsResult};
use crate::param::{mats_to_theta, theta_to_sys};
use crate::plant_sim::{step, SimConfig, TrialRng};

use super::safe_set::SafeSet;
use super::schedule::{base_schedule, exploration_variance, fallback_shield, safe_round_init, ScheduleConstants};
use super::trigger::{bootstrap_trigger_detail, theoretical_trigger_detail, TriggerConfig, TriggerVariant};
use super::epoch_length;

/// How parameter updates cross the uplink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodecVariant {
    /// Lattice covering codebook with the adaptive multiplier.
    RhoNet,
    /// Coordinate-wise scalar quantizer with step `1/sqrt(tau_k)`.
    Coordinate,
    /// Codec bypassed; the controller receives the plant estimate exactly.
    Unquantized,
}

/// Full configuration of one trial.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrialConfig {
    pub sim: SimConfig,
    pub delta: f64,
    pub rho: f64,
    pub codec: CodecVariant,
    pub trigger: TriggerConfig,
    /// Replaces the exploration-variance formula when set.
    pub sigma_in_sq_override: Option<f64>,
    pub c0: f64,
}

impl TrialConfig {
    /// Practical variant: coordinate codec, bootstrap trigger, unit
    /// exploration variance, runtime shield at five times the pre-safe norm.
    pub fn practical(sim: SimConfig) -> Self {
        Self {
            sim,
            delta: 1e-4,
            rho: 0.5,
            codec: CodecVariant::Coordinate,
            trigger: TriggerConfig::default(),
            sigma_in_sq_override: Some(1.0),
            c0: 1.0,
        }
    }

    /// Covering-codebook variant with the theoretical confidence trigger.
    pub fn theoretical(sim: SimConfig) -> Self {
        Self {
            sim,
            delta: 1e-4,
            rho: 0.5,
            codec: CodecVariant::RhoNet,
            trigger: TriggerConfig {
                variant: TriggerVariant::Theoretical,
                fallback_multiplier: f64::INFINITY,
                ..TriggerConfig::default()
            },
            sigma_in_sq_override: None,
            c0: 1.0,
        }
    }

    /// Full-precision certainty-equivalence baseline, otherwise matching the
    /// practical variant so paired comparisons isolate the quantization.
    pub fn unquantized(sim: SimConfig) -> Self {
        Self {
            codec: CodecVariant::Unquantized,
            ..Self::practical(sim)
        }
    }
}

/// Per-epoch protocol record.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EpochRecord {
    pub k: usize,
    pub tau: usize,
    pub presafe: bool,
    /// Uplink bits spent by this epoch's message(s).
    pub bits: u64,
    pub multiplier: Option<u64>,
    pub innovation_norm: Option<f64>,
    pub scale: Option<f64>,
    /// Plant-side `||theta_tilde - theta_bar||_2` after the update.
    pub reconstruction_error: Option<f64>,
    pub mirror_exact: bool,
    pub riccati_fallback: bool,
}

/// Everything a trial produces.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub k_safe: Option<usize>,
    pub jstar: f64,
    pub regret_curve: Vec<f64>,
    pub bits_curve: Vec<u64>,
    pub bits_breakdown: BitLedger,
    /// `(epoch, m_k)` series for post-safe covering-codebook epochs.
    pub multipliers: Vec<(usize, u64)>,
    pub fallback_count: usize,
    pub riccati_fallback_epochs: usize,
    /// Plant mirror matched the controller decode at every epoch.
    pub mirror_exact: bool,
    pub epochs: Vec<EpochRecord>,
}

impl TrialResult {
    pub fn total_bits(&self) -> u64 {
        self.bits_curve.last().copied().unwrap_or(0)
    }

    pub fn final_regret(&self) -> f64 {
        self.regret_curve.last().copied().unwrap_or(0.0)
    }

    /// `Regret(t) / sqrt(t)` curve.
    pub fn normalized_regret(&self) -> Vec<f64> {
        self.regret_curve
            .iter()
            .enumerate()
            .map(|(i, r)| r / ((i + 1) as f64).sqrt())
            .collect()
    }
}

/// Shared outcome of decoding one epoch's uplink payload.
struct DecodedEpoch {
    theta_tilde: DVector<f64>,
    multiplier: Option<u64>,
}

/// Decode a post-safe tracking payload and advance the shared estimate.
/// Both endpoints run this exact function on the same bits.
fn decode_track_update(
    reader: &mut BitReader<'_>,
    codec: CodecVariant,
    cb: Option<&CodebookConfig>,
    sched: &ScheduleConstants,
    tau_k: usize,
    theta_prev: &DVector<f64>,
    ds: usize,
) -> Result<DecodedEpoch> {
    match codec {
        CodecVariant::RhoNet => {
            let cb = cb.ok_or_else(|| Error::Config("covering codebook missing".into()))?;
            let msg = UplinkMessage::decode_track(reader, cb.index_bits)?;
            let (multiplier, index) = match msg {
                UplinkMessage::Track { multiplier, index } => (multiplier, index),
                _ => unreachable!(),
            };
            let s = multiplier as f64 * base_schedule(sched, tau_k);
            let delta = reconstruct(index, s, cb)?;
            Ok(DecodedEpoch {
                theta_tilde: theta_prev + delta,
                multiplier: Some(multiplier),
            })
        }
        CodecVariant::Coordinate => {
            let msg = UplinkMessage::decode_coord_track(reader, ds)?;
            let delta = decode_coord_reconstruction(&msg, tau_k)?;
            Ok(DecodedEpoch {
                theta_tilde: theta_prev + delta,
                multiplier: None,
            })
        }
        CodecVariant::Unquantized => Err(Error::Config(
            "unquantized variant carries no bits to decode".into(),
        )),
    }
}

/// Shared safe-round state derived from a decoded center. Deterministic in
/// its inputs, so plant and controller obtain bit-identical copies.
struct SharedSafeState {
    theta_tilde: DVector<f64>,
    sched: ScheduleConstants,
    set: SafeSet,
}

fn init_shared_state(
    theta_decoded: DVector<f64>,
    dx: usize,
    du: usize,
    cfg: &TrialConfig,
    cost: &CostPair,
) -> Result<SharedSafeState> {
    let decoded_sys = theta_to_sys(&theta_decoded, dx, du)?;
    let sol = solve_dare_default(&decoded_sys, cost)
        .map_err(|e| Error::RiccatiFailure(format!("decoded center: {e}")))?;
    let r_safe = 1.0 / (3.0 * 54.0 * sol.p_op_norm().powi(5));
    let (sched, set) = safe_round_init(
        &decoded_sys,
        r_safe,
        cfg.rho,
        cfg.delta,
        cost,
        cfg.c0,
        cfg.sigma_in_sq_override,
    )?;
    Ok(SharedSafeState {
        theta_tilde: theta_decoded,
        sched,
        set,
    })
}

/// Uplink payload for one epoch.
enum EpochUplink {
    Bits(BitStream),
    /// Unquantized variant: the exact estimate, `init` marking the safe epoch.
    Exact { theta: DVector<f64>, init: bool },
    /// Unquantized variant, pre-safe epoch without a trigger.
    ExactFlag,
}

struct Plant {
    cost: CostPair,
    cfg: TrialConfig,
    codebook: Option<CodebookConfig>,
    dx: usize,
    du: usize,
    safe: Option<SharedSafeState>,
    k_safe: Option<usize>,
}

/// Whether estimates are projected onto the safe set. The safe-set geometry
/// is certified only by the theoretical trigger: its firing condition makes
/// the decoded center accurate enough that the ball around it contains the
/// truth. The bootstrap trigger certifies no such thing, and clamping every
/// later estimate to a radius of `1/(3 C_safe)` around an early rough center
/// would freeze its error in place; under that trigger the estimates track
/// freely and the runtime fallback shield covers stability instead.
fn projection_active(cfg: &TrialConfig) -> bool {
    matches!(cfg.trigger.variant, TriggerVariant::Theoretical)
}

struct PlantEpochOutcome {
    uplink: EpochUplink,
    record_bits: Vec<(UplinkMessage, usize)>,
    multiplier: Option<u64>,
    innovation_norm: Option<f64>,
    scale: Option<f64>,
    reconstruction_error: Option<f64>,
}

impl Plant {
    fn post_safe(&self) -> bool {
        self.safe.is_some()
    }

    fn epoch_message(
        &mut self,
        k: usize,
        window_states: &[DVector<f64>],
        window_inputs: &[DVector<f64>],
        rng: &TrialRng,
    ) -> Result<PlantEpochOutcome> {
        let ols = ols_fit(window_states, window_inputs)?;
        if self.safe.is_none() {
            self.presafe_epoch(k, &ols, rng)
        } else {
            self.tracking_epoch(k, &ols)
        }
    }

    fn presafe_epoch(
        &mut self,
        k: usize,
        ols: &OlsResult,
        rng: &TrialRng,
    ) -> Result<PlantEpochOutcome> {
        let fired = match self.cfg.trigger.variant {
            TriggerVariant::Theoretical => {
                let conf = confidence(ols, k, self.cfg.delta, self.dx + self.du);
                theoretical_trigger_detail(ols, &conf, &self.cost)
            }
            TriggerVariant::Bootstrap => {
                let mut mc = rng.epoch_mc_rng(k);
                bootstrap_trigger_detail(ols, self.cfg.sim.sigma_w, &self.cfg.trigger, &self.cost, &mut mc)
            }
        };

        let not_fired = |this: &Self| -> Result<PlantEpochOutcome> {
            let msg = UplinkMessage::SafeFlag(false);
            Ok(PlantEpochOutcome {
                uplink: match this.cfg.codec {
                    CodecVariant::Unquantized => EpochUplink::ExactFlag,
                    _ => EpochUplink::Bits(msg.encode(0)?),
                },
                record_bits: match this.cfg.codec {
                    CodecVariant::Unquantized => vec![],
                    _ => vec![(msg, 0)],
                },
                multiplier: None,
                innovation_norm: None,
                scale: None,
                reconstruction_error: None,
            })
        };

        let Some(sol) = fired else {
            return not_fired(self);
        };
        let eps_target = 1.0 / (9.0 * 54.0 * sol.p_op_norm().powi(5));
        let theta_hat = mats_to_theta(&ols.ahat, &ols.bhat);
        if theta_hat.iter().any(|v| !v.is_finite()) {
            return not_fired(self);
        }

        if matches!(self.cfg.codec, CodecVariant::Unquantized) {
            // exact init: the shared center is the raw estimate
            match init_shared_state(theta_hat.clone(), self.dx, self.du, &self.cfg, &self.cost) {
                Ok(state) => {
                    self.safe = Some(state);
                    self.k_safe = Some(k);
                    Ok(PlantEpochOutcome {
                        uplink: EpochUplink::Exact {
                            theta: theta_hat,
                            init: true,
                        },
                        record_bits: vec![],
                        multiplier: None,
                        innovation_norm: None,
                        scale: None,
                        reconstruction_error: Some(0.0),
                    })
                }
                // synthesis failed on the would-be center: stay pre-safe
                Err(_) => not_fired(self),
            }
        } else {
            let (init_msg, decoded) = absolute_init(&theta_hat, eps_target)?;
            match init_shared_state(decoded.clone(), self.dx, self.du, &self.cfg, &self.cost) {
                Ok(state) => {
                    let recon_err = (&decoded - &theta_hat).norm();
                    self.safe = Some(state);
                    self.k_safe = Some(k);
                    let flag = UplinkMessage::SafeFlag(true);
                    let mut bits = flag.encode(0)?;
                    bits.extend(&init_msg.encode(0)?);
                    Ok(PlantEpochOutcome {
                        uplink: EpochUplink::Bits(bits),
                        record_bits: vec![(flag, 0), (init_msg, 0)],
                        multiplier: None,
                        innovation_norm: None,
                        scale: None,
                        reconstruction_error: Some(recon_err),
                    })
                }
                Err(_) => not_fired(self),
            }
        }
    }

    fn tracking_epoch(&mut self, k: usize, ols: &OlsResult) -> Result<PlantEpochOutcome> {
        let tau_k = epoch_length(k);
        let project = projection_active(&self.cfg);
        let state = self.safe.as_mut().expect("post-safe");
        // a diverged trajectory can hand OLS non-finite data; track in place
        // rather than poisoning the shared state
        let theta_hat = {
            let raw = mats_to_theta(&ols.ahat, &ols.bhat);
            if raw.iter().all(|v| v.is_finite()) {
                raw
            } else {
                state.theta_tilde.clone()
            }
        };
        let theta_bar = if project {
            state.set.project(&theta_hat)
        } else {
            theta_hat
        };
        let delta = &theta_bar - &state.theta_tilde;
        let innovation_norm = delta.norm();

        match self.cfg.codec {
            CodecVariant::RhoNet => {
                let cb = self.codebook.as_ref().expect("codebook built at config");
                let s_base = base_schedule(&state.sched, tau_k);
                let m = adaptive_multiplier(innovation_norm, s_base);
                let s = m as f64 * s_base;
                let (index, _) = quantize_innovation(&delta, s, cb)?;
                let msg = UplinkMessage::Track {
                    multiplier: m,
                    index,
                };
                let bits = msg.encode(cb.index_bits)?;
                // mirror via the shared decode path
                let mut reader = bits.reader();
                let decoded = decode_track_update(
                    &mut reader,
                    CodecVariant::RhoNet,
                    Some(cb),
                    &state.sched,
                    tau_k,
                    &state.theta_tilde,
                    self.dx * self.dx + self.dx * self.du,
                )?;
                state.theta_tilde = decoded.theta_tilde;
                let recon = (&state.theta_tilde - &theta_bar).norm();
                Ok(PlantEpochOutcome {
                    uplink: EpochUplink::Bits(bits),
                    record_bits: vec![(msg, cb.index_bits)],
                    multiplier: decoded.multiplier,
                    innovation_norm: Some(innovation_norm),
                    scale: Some(s),
                    reconstruction_error: Some(recon),
                })
            }
            CodecVariant::Coordinate => {
                let (msg, _) = coord_quantize(&delta, tau_k)?;
                let bits = msg.encode(0)?;
                let mut reader = bits.reader();
                let decoded = decode_track_update(
                    &mut reader,
                    CodecVariant::Coordinate,
                    None,
                    &state.sched,
                    tau_k,
                    &state.theta_tilde,
                    self.dx * self.dx + self.dx * self.du,
                )?;
                state.theta_tilde = decoded.theta_tilde;
                let recon = (&state.theta_tilde - &theta_bar).norm();
                Ok(PlantEpochOutcome {
                    uplink: EpochUplink::Bits(bits),
                    record_bits: vec![(msg, 0)],
                    multiplier: None,
                    innovation_norm: Some(innovation_norm),
                    scale: None,
                    reconstruction_error: Some(recon),
                })
            }
            CodecVariant::Unquantized => {
                state.theta_tilde = theta_bar.clone();
                Ok(PlantEpochOutcome {
                    uplink: EpochUplink::Exact {
                        theta: theta_bar,
                        init: false,
                    },
                    record_bits: vec![],
                    multiplier: None,
                    innovation_norm: Some(innovation_norm),
                    scale: None,
                    reconstruction_error: Some(0.0),
                })
            }
        }
    }
}

struct Controller {
    k0: DMatrix<f64>,
    cost: CostPair,
    cfg: TrialConfig,
    codebook: Option<CodebookConfig>,
    dx: usize,
    du: usize,
    safe: Option<SharedSafeState>,
    gain: DMatrix<f64>,
}

struct ControllerOutcome {
    riccati_fallback: bool,
}

impl Controller {
    fn receive(&mut self, k: usize, uplink: &EpochUplink) -> Result<ControllerOutcome> {
        let tau_k = epoch_length(k);
        let ds = self.dx * self.dx + self.dx * self.du;
        match uplink {
            EpochUplink::ExactFlag => {
                self.gain = self.k0.clone();
                Ok(ControllerOutcome {
                    riccati_fallback: false,
                })
            }
            EpochUplink::Exact { theta, init } => {
                if *init {
                    let state =
                        init_shared_state(theta.clone(), self.dx, self.du, &self.cfg, &self.cost)?;
                    self.safe = Some(state);
                } else {
                    let state = self.safe.as_mut().ok_or_else(|| {
                        Error::Config("tracking update before initialization".into())
                    })?;
                    state.theta_tilde = theta.clone();
                }
                self.synthesize()
            }
            EpochUplink::Bits(bits) => {
                let mut reader = bits.reader();
                if let Some(state) = &mut self.safe {
                    let decoded = decode_track_update(
                        &mut reader,
                        self.cfg.codec,
                        self.codebook.as_ref(),
                        &state.sched,
                        tau_k,
                        &state.theta_tilde,
                        ds,
                    )?;
                    state.theta_tilde = decoded.theta_tilde;
                } else {
                    let fired = reader.read_bit()?;
                    if !fired {
                        self.gain = self.k0.clone();
                        return Ok(ControllerOutcome {
                            riccati_fallback: false,
                        });
                    }
                    let init = UplinkMessage::decode_init(&mut reader, ds)?;
                    let decoded = decode_init_reconstruction(&init)?;
                    let state =
                        init_shared_state(decoded, self.dx, self.du, &self.cfg, &self.cost)?;
                    self.safe = Some(state);
                }
                if reader.remaining() != 0 {
                    return Err(Error::Decode(format!(
                        "{} trailing bits in epoch {k} payload",
                        reader.remaining()
                    )));
                }
                self.synthesize()
            }
        }
    }

    /// Project the shared estimate (theoretical trigger only) and synthesize
    /// the CE gain. On a Riccati failure the previous gain is reused and the
    /// epoch is flagged.
    fn synthesize(&mut self) -> Result<ControllerOutcome> {
        let theta_check = {
            let state = self.safe.as_ref().expect("post-safe");
            if projection_active(&self.cfg) {
                state.set.project(&state.theta_tilde)
            } else {
                state.theta_tilde.clone()
            }
        };
        let synthesized = theta_to_sys(&theta_check, self.dx, self.du)
            .and_then(|sys| solve_dare_default(&sys, &self.cost));
        match synthesized {
            Ok(sol) => {
                self.gain = sol.k;
                Ok(ControllerOutcome {
                    riccati_fallback: false,
                })
            }
            Err(_) => Ok(ControllerOutcome {
                riccati_fallback: true,
            }),
        }
    }
}

/// Run one closed-loop trial of the protocol.
pub fn run_trial(
    sys: &SystemPair,
    cost: &CostPair,
    k0: &DMatrix<f64>,
    cfg: &TrialConfig,
) -> Result<TrialResult> {
    cfg.sim.validate()?;
    let dx = sys.dx();
    let du = sys.du();
    if k0.nrows() != du || k0.ncols() != dx {
        return Err(Error::DimensionMismatch(format!(
            "K0 must be {du}x{dx}, got {}x{}",
            k0.nrows(),
            k0.ncols()
        )));
    }
    let rho_cl = spectral_radius(&(&sys.a + &sys.b * k0));
    if rho_cl >= 1.0 {
        return Err(Error::Config(format!(
            "K0 must stabilize the plant (closed-loop radius {rho_cl:.4})"
        )));
    }
    let codebook = match cfg.codec {
        CodecVariant::RhoNet => Some(build_codebook(sys.ds(), cfg.rho)?),
        _ => None,
    };

    let jstar = cfg.sim.sigma_w * cfg.sim.sigma_w
        * solve_dare_default(sys, cost)
            .map_err(|e| Error::RiccatiFailure(format!("true system: {e}")))?
            .p
            .trace();

    let horizon = cfg.sim.horizon;
    let mut rng = TrialRng::new(cfg.sim.seed);
    let mut plant = Plant {
        cost: cost.clone(),
        cfg: *cfg,
        codebook: codebook.clone(),
        dx,
        du,
        safe: None,
        k_safe: None,
    };
    let mut ctrl = Controller {
        k0: k0.clone(),
        cost: cost.clone(),
        cfg: *cfg,
        codebook,
        dx,
        du,
        safe: None,
        gain: k0.clone(),
    };

    let mut states: Vec<DVector<f64>> = vec![DVector::zeros(dx)];
    let mut inputs: Vec<DVector<f64>> = Vec::with_capacity(horizon);
    let mut costs = crate::plant_sim::CostAccumulator::default();
    let mut bits_curve: Vec<u64> = Vec::with_capacity(horizon);
    let mut ledger = BitLedger::default();
    let mut epochs: Vec<EpochRecord> = Vec::new();
    let mut multipliers: Vec<(usize, u64)> = Vec::new();
    let mut fallback_count = 0usize;
    let mut riccati_fallback_epochs = 0usize;
    let mut mirror_exact = true;
    let mut presafe_max_norm = 0.0f64;
    let in_fallback = std::cell::Cell::new(false);

    let mut execute = |t: usize,
                       states: &mut Vec<DVector<f64>>,
                       inputs: &mut Vec<DVector<f64>>,
                       plant_safe: bool,
                       gain: &DMatrix<f64>,
                       sigma_k: f64,
                       rng: &mut TrialRng,
                       bits_total: u64|
     -> Result<()> {
        debug_assert_eq!(states.len(), t);
        let x = states.last().expect("state history nonempty").clone();
        let g = rng.exploration_noise(du);
        let u = if !plant_safe {
            presafe_max_norm = presafe_max_norm.max(x.norm());
            k0 * &x + g
        } else {
            // once tripped, the shield stays on K0 with full exploration for
            // the rest of the epoch; the next boundary brings a fresh gain
            if !in_fallback.get()
                && fallback_shield(x.norm(), presafe_max_norm, cfg.trigger.fallback_multiplier)
            {
                in_fallback.set(true);
                fallback_count += 1;
            }
            if in_fallback.get() {
                k0 * &x + g
            } else {
                gain * &x + g * sigma_k
            }
        };
        let c = (x.transpose() * &cost.rx * &x)[(0, 0)] + (u.transpose() * &cost.ru * &u)[(0, 0)];
        costs.push(c);
        bits_curve.push(bits_total);
        let w = rng.process_noise(dx, cfg.sim.sigma_w);
        let next = step(&x, &u, sys, &w)?;
        states.push(next);
        inputs.push(u);
        Ok(())
    };

    // steps before the first epoch boundary run the baseline controller
    let mut bits_total = 0u64;
    for t in 1..=horizon.min(3) {
        execute(
            t,
            &mut states,
            &mut inputs,
            false,
            &ctrl.gain,
            1.0,
            &mut rng,
            bits_total,
        )?;
    }

    let mut k = 2usize;
    while epoch_length(k) <= horizon {
        let tau_prev = epoch_length(k - 1);
        let tau_k = epoch_length(k);
        let window_states = &states[tau_prev - 1..tau_k];
        let window_inputs = &inputs[tau_prev - 1..tau_k - 1];

        let outcome = plant.epoch_message(k, window_states, window_inputs, &rng)?;
        let mut epoch_bits = 0u64;
        for (msg, index_bits) in &outcome.record_bits {
            ledger.add_message(msg, *index_bits);
            epoch_bits += msg.bit_cost(*index_bits) as u64;
        }
        bits_total += epoch_bits;

        let ctrl_outcome = ctrl.receive(k, &outcome.uplink)?;
        if ctrl_outcome.riccati_fallback {
            riccati_fallback_epochs += 1;
        }

        let epoch_mirror_exact = match (&plant.safe, &ctrl.safe) {
            (Some(p), Some(c)) => p.theta_tilde == c.theta_tilde,
            (None, None) => true,
            _ => false,
        };
        mirror_exact &= epoch_mirror_exact;

        if let Some(m) = outcome.multiplier {
            multipliers.push((k, m));
        }
        epochs.push(EpochRecord {
            k,
            tau: tau_k,
            presafe: plant.safe.is_none() || plant.k_safe == Some(k),
            bits: epoch_bits,
            multiplier: outcome.multiplier,
            innovation_norm: outcome.innovation_norm,
            scale: outcome.scale,
            reconstruction_error: outcome.reconstruction_error,
            mirror_exact: epoch_mirror_exact,
            riccati_fallback: ctrl_outcome.riccati_fallback,
        });

        let sigma_k = if let Some(state) = &plant.safe {
            exploration_variance(state.sched.sigma_in_sq, tau_k).sqrt()
        } else {
            1.0
        };
        in_fallback.set(false);
        let plant_safe = plant.post_safe();
        let gain = ctrl.gain.clone();
        let last = horizon.min(epoch_length(k + 1) - 1);
        for t in tau_k..=last {
            execute(
                t,
                &mut states,
                &mut inputs,
                plant_safe,
                &gain,
                sigma_k,
                &mut rng,
                bits_total,
            )?;
        }
        k += 1;
    }

    debug_assert_eq!(costs.per_step_costs.len(), horizon);
    debug_assert_eq!(ledger.total(), bits_total);
    let regret_curve = costs.regret_curve(jstar);

    Ok(TrialResult {
        seed: cfg.sim.seed,
        k_safe: plant.k_safe,
        jstar,
        regret_curve,
        bits_curve,
        bits_breakdown: ledger,
        multipliers,
        fallback_count,
        riccati_fallback_epochs,
        mirror_exact,
        epochs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_sys() -> (SystemPair, CostPair) {
        (
            SystemPair::new(
                DMatrix::from_element(1, 1, 1.1),
                DMatrix::from_element(1, 1, 1.0),
            )
            .unwrap(),
            CostPair::identity(1, 1),
        )
    }

    fn detuned_k0(sys: &SystemPair, cost: &CostPair) -> DMatrix<f64> {
        let rough = SystemPair::new(&sys.a * 0.9, sys.b.clone()).unwrap();
        solve_dare_default(&rough, cost).unwrap().k
    }

    fn sim(horizon: usize, seed: u64) -> SimConfig {
        SimConfig {
            horizon,
            seed,
            sigma_w: 1.0,
        }
    }

    #[test]
    fn rejects_destabilizing_k0() {
        let (sys, cost) = scalar_sys();
        let k0 = DMatrix::from_element(1, 1, 0.0);
        let cfg = TrialConfig::practical(sim(64, 1));
        assert!(run_trial(&sys, &cost, &k0, &cfg).is_err());
    }

    #[test]
    fn presafe_epochs_cost_one_bit() {
        let (sys, cost) = scalar_sys();
        let k0 = detuned_k0(&sys, &cost);
        let cfg = TrialConfig::practical(sim(1 << 10, 7));
        let res = run_trial(&sys, &cost, &k0, &cfg).unwrap();
        for e in &res.epochs {
            if res.k_safe.is_none_or(|ks| e.k < ks) {
                assert_eq!(e.bits, 1, "epoch {} should cost one flag bit", e.k);
            }
        }
        assert!(res.mirror_exact);
    }

    #[test]
    fn bits_curve_is_a_nondecreasing_step_function() {
        let (sys, cost) = scalar_sys();
        let k0 = detuned_k0(&sys, &cost);
        let cfg = TrialConfig::practical(sim(1 << 9, 3));
        let res = run_trial(&sys, &cost, &k0, &cfg).unwrap();
        assert!(res.bits_curve.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(res.bits_breakdown.total(), res.total_bits());
        // constant within epochs: changes only at epoch boundaries 2^k
        for (t, w) in res.bits_curve.windows(2).enumerate() {
            let next_t = t + 2; // 1-indexed time of w[1]
            if w[0] != w[1] {
                assert!(next_t.is_power_of_two(), "jump at t={next_t}");
            }
        }
    }

    #[test]
    fn zero_noise_null_run_stays_at_origin() {
        // zero process noise (tiny positive sigma rejected: use literal zero
        // path by overriding after validation is impossible, so use an
        // effectively-zero noise level) with K0 equal to the optimal gain
        let (sys, cost) = scalar_sys();
        let kstar = solve_dare_default(&sys, &cost).unwrap().k;
        let mut cfg = TrialConfig::practical(SimConfig {
            horizon: 64,
            seed: 5,
            sigma_w: 1e-300,
        });
        cfg.trigger.n_mc = 0; // degenerate covariance would never fire otherwise
        let res = run_trial(&sys, &cost, &kstar, &cfg).unwrap();
        // exploration noise keeps the state near but not at zero; the cost
        // scale is set by the unit excitation, far above the noise floor
        assert!(res.regret_curve.last().unwrap().is_finite());
    }

    #[test]
    fn identical_seeds_replay_identically() {
        let (sys, cost) = scalar_sys();
        let k0 = detuned_k0(&sys, &cost);
        let cfg = TrialConfig::practical(sim(1 << 9, 11));
        let a = run_trial(&sys, &cost, &k0, &cfg).unwrap();
        let b = run_trial(&sys, &cost, &k0, &cfg).unwrap();
        assert_eq!(a.regret_curve, b.regret_curve);
        assert_eq!(a.bits_curve, b.bits_curve);
        assert_eq!(a.multipliers, b.multipliers);
    }

    #[test]
    fn rho_net_variant_tracks_and_contracts() {
        let (sys, cost) = scalar_sys();
        let k0 = detuned_k0(&sys, &cost);
        let mut cfg = TrialConfig::theoretical(sim(1 << 12, 2));
        // the theoretical trigger cannot fire at this scale; drive the safe
        // phase with the bootstrap trigger while keeping the covering codec
        cfg.trigger.variant = TriggerVariant::Bootstrap;
        let res = run_trial(&sys, &cost, &k0, &cfg).unwrap();
        assert!(res.k_safe.is_some());
        assert!(res.mirror_exact);
        assert!(!res.multipliers.is_empty());
        for e in &res.epochs {
            if let (Some(norm), Some(scale)) = (e.innovation_norm, e.scale) {
                assert!(norm <= scale * (1.0 + 1e-12), "overflow at epoch {}", e.k);
            }
            if let (Some(err), Some(scale)) = (e.reconstruction_error, e.scale) {
                assert!(err <= cfg.rho * scale + 1e-12, "covering bound at {}", e.k);
            }
        }
    }

    #[test]
    fn unquantized_variant_transmits_nothing() {
        let (sys, cost) = scalar_sys();
        let k0 = detuned_k0(&sys, &cost);
        let cfg = TrialConfig::unquantized(sim(1 << 10, 13));
        let res = run_trial(&sys, &cost, &k0, &cfg).unwrap();
        assert_eq!(res.total_bits(), 0);
        assert!(res.mirror_exact);
        assert!(res.k_safe.is_some());
    }
}
