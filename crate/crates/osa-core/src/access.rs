//! Collision-constrained channel access.
//!
//! A secondary link may transmit after sensing, but the fraction of primary
//! busy slots it collides with must stay below a constraint `zeta`. Because
//! the sensing outcome is binary, a transmission policy is fully described by
//! two probabilities — transmit given an idle observation and transmit given a
//! busy observation — and the throughput-optimal policy under the constraint
//! has a closed form in the detector's miss probability `delta` alone:
//!
//! ```text
//! delta > zeta:  (zeta / delta, 0)                 throttle idle observations
//! delta < zeta:  (1, (zeta - delta) / (1 - delta)) spend leftover budget
//! delta = zeta:  (1, 0)                            trust the detector
//! ```
//!
//! All three branches make the conditional collision probability exactly
//! `zeta`, which is what lets sensing design and access design be separated:
//! the best operating point on a ROC is the one with `delta = zeta`.

use crate::channel::ChannelChain;
use crate::detector::{Observation, RocCurve};
use crate::tracker::{self, RunConfig, Strategy, TrackRecord, TrackerError};
use alloc::vec::Vec;
use core::fmt;
use rand::Rng;

/// Which denominator collision accounting uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollisionSpace {
    /// Collisions per slot in which the sensed channel was truly busy.
    #[default]
    PerBusySlotConditional,
    /// Collisions per slot overall.
    PerSlotUnconditional,
}

/// Regulatory interference limits a secondary link operates under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceConstraint {
    /// Maximum tolerable collision probability for the primary.
    pub zeta: f64,
    /// Power regulation coefficient used by geometry-based power caps.
    pub eta: f64,
    /// Accounting convention for reporting collisions.
    pub collision_space: CollisionSpace,
}

/// Randomised transmission policy over the two sensing outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessPolicy {
    /// P(transmit | detector said idle).
    pub p_tx_given_idle_obs: f64,
    /// P(transmit | detector said busy).
    pub p_tx_given_busy_obs: f64,
}

impl AccessPolicy {
    /// Probability of transmitting in a slot whose sensed channel is truly
    /// busy: `delta * p_idle_obs + (1 - delta) * p_busy_obs`.
    pub fn collision_probability(&self, delta: f64) -> f64 {
        delta * self.p_tx_given_idle_obs + (1.0 - delta) * self.p_tx_given_busy_obs
    }
}

/// Throughput-optimal transmission policy meeting the collision constraint.
///
/// `delta` must lie in `[0, 1)` — a detector that always misses carries no
/// information to throttle against — and `zeta` in `[0, 1)`.
pub fn optimal_access_policy(delta: f64, zeta: f64) -> Result<AccessPolicy, AccessError> {
    if !(0.0..1.0).contains(&delta) {
        return Err(AccessError::UninformativeDetector { delta });
    }
    if !(0.0..1.0).contains(&zeta) {
        return Err(AccessError::InvalidZeta { zeta });
    }
    let policy = if delta > zeta {
        AccessPolicy { p_tx_given_idle_obs: zeta / delta, p_tx_given_busy_obs: 0.0 }
    } else if delta < zeta {
        AccessPolicy {
            p_tx_given_idle_obs: 1.0,
            p_tx_given_busy_obs: (zeta - delta) / (1.0 - delta),
        }
    } else {
        AccessPolicy { p_tx_given_idle_obs: 1.0, p_tx_given_busy_obs: 0.0 }
    };
    Ok(policy)
}

/// Draws the transmit/defer decision for one slot.
///
/// Consumes exactly one uniform per call so RNG streams stay aligned across
/// policies.
pub fn decide_access<R: Rng + ?Sized>(
    observation: Observation,
    policy: &AccessPolicy,
    rng: &mut R,
) -> bool {
    let p = match observation {
        Observation::Idle => policy.p_tx_given_idle_obs,
        Observation::Busy => policy.p_tx_given_busy_obs,
    };
    rng.gen::<f64>() < p
}

/// Collision accounting over a finished run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionStats {
    /// Slots in the record.
    pub total_slots: u64,
    /// Slots in which the link transmitted.
    pub access_slots: u64,
    /// Slots in which the sensed channel was truly busy.
    pub busy_slots: u64,
    /// Slots in which the link transmitted while the sensed channel was busy.
    pub collisions: u64,
    /// Collisions per busy slot; `None` when no busy slot was ever sensed.
    pub conditional: Option<f64>,
    /// Collisions per slot.
    pub unconditional: f64,
}

impl CollisionStats {
    /// The rate in the requested accounting space; conditional accounting is
    /// undefined (`None`) when the record contains no sensed-busy slot.
    pub fn rate(&self, space: CollisionSpace) -> Option<f64> {
        match space {
            CollisionSpace::PerBusySlotConditional => self.conditional,
            CollisionSpace::PerSlotUnconditional => Some(self.unconditional),
        }
    }
}

/// Computes collision statistics from a run record.
pub fn collision_stats(record: &TrackRecord) -> CollisionStats {
    let total = record.len() as u64;
    let mut busy = 0u64;
    let mut collisions = 0u64;
    let mut accesses = 0u64;
    for t in 0..record.len() {
        let channel = record.actions[t] as usize;
        let sensed_idle = record.state_bits[t] >> channel & 1 == 1;
        if !sensed_idle {
            busy += 1;
        }
        if record.accessed[t] {
            accesses += 1;
            if !sensed_idle {
                collisions += 1;
            }
        }
    }
    CollisionStats {
        total_slots: total,
        access_slots: accesses,
        busy_slots: busy,
        collisions,
        conditional: (busy > 0).then(|| collisions as f64 / busy as f64),
        unconditional: if total > 0 { collisions as f64 / total as f64 } else { 0.0 },
    }
}

/// One row of an operating-point sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPointReport {
    /// Miss probability the detector was tuned to.
    pub delta: f64,
    /// False alarm probability read off the ROC at that `delta`.
    pub epsilon: f64,
    /// Mean delivered bits per slot.
    pub mean_throughput: f64,
    /// Standard error of the per-slot throughput mean.
    pub throughput_se: f64,
    /// Conditional collision rate, when any busy slot was sensed.
    pub collision_conditional: Option<f64>,
    /// Binomial standard error of the conditional rate.
    pub collision_conditional_se: Option<f64>,
    /// Unconditional collision rate.
    pub collision_unconditional: f64,
}

/// Sweeps the closed loop across detector operating points on a ROC.
///
/// Every point reuses the same seed (common random numbers), so differences
/// between neighbouring points reflect the operating point rather than
/// sampling noise. Each point runs `slots` slots with the optimal access
/// policy for `(delta, zeta)` and the false alarm rate interpolated from the
/// curve.
pub fn throughput_vs_operating_point(
    chains: &[ChannelChain],
    strategy: Strategy<'_>,
    roc: &RocCurve,
    zeta: f64,
    deltas: &[f64],
    slots: u64,
    seed: u64,
) -> Result<Vec<OperatingPointReport>, TrackerError> {
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let epsilon = roc.epsilon_at(delta);
        let cfg = RunConfig {
            chains,
            joint_matrix: None,
            initial: crate::channel::InitialOccupancy::Stationary,
            epsilon,
            delta,
            zeta,
            slots,
        };
        let record = tracker::run_tracking(&cfg, strategy, &mut tracker::AllowAll, seed)?;
        rows.push(summarise_point(delta, epsilon, &record));
    }
    Ok(rows)
}

fn summarise_point(delta: f64, epsilon: f64, record: &TrackRecord) -> OperatingPointReport {
    let n = record.len() as f64;
    let sum: f64 = record.rewards.iter().sum();
    let sumsq: f64 = record.rewards.iter().map(|r| r * r).sum();
    let mean = sum / n;
    let var = (sumsq / n - mean * mean).max(0.0);
    let stats = collision_stats(record);
    OperatingPointReport {
        delta,
        epsilon,
        mean_throughput: mean,
        throughput_se: libm::sqrt(var / n),
        collision_conditional: stats.conditional,
        collision_conditional_se: stats
            .conditional
            .map(|p| libm::sqrt(p * (1.0 - p) / stats.busy_slots as f64)),
        collision_unconditional: stats.unconditional,
    }
}

/// Validation errors for access policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AccessError {
    /// `delta = 1` (or outside `[0, 1)`): sensing is uninformative and the
    /// optimal-policy construction is undefined.
    UninformativeDetector { delta: f64 },
    /// `zeta` must lie in `[0, 1)`.
    InvalidZeta { zeta: f64 },
}

impl fmt::Display for AccessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UninformativeDetector { delta } => {
                write!(f, "delta = {delta} must lie in [0, 1) for an access policy to exist")
            }
            Self::InvalidZeta { zeta } => write!(f, "zeta = {zeta} must lie in [0, 1)"),
        }
    }
}

impl core::error::Error for AccessError {}
