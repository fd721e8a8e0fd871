//! Spectrum sensing detectors.
//!
//! Sensing a channel is abstracted as a binary test characterised by a false
//! alarm probability `epsilon` (idle declared busy) and a miss probability
//! `delta` (busy declared idle). Available operating points are described by
//! a piecewise-linear [`RocCurve`]; an energy detector design routine derives
//! such curves, and [`samples_required`] inverts it to show how the sensing
//! burden grows as `1/SNR^2` at low SNR, against the `1/SNR` coherent
//! (matched-filter style) reference.
//!
//! The energy detector model: `Ns` real samples, each `N(0, sigma_n^2)` when
//! the channel is idle and `N(0, (1 + SNR) * sigma_n^2)` when the primary is
//! on; the test statistic is the average energy normalised by `sigma_n^2`,
//! compared against a threshold `tau`. For moderate `Ns` the statistic is
//! approximately Gaussian:
//!
//! ```text
//! epsilon   = Q((tau - 1)         * sqrt(Ns / 2))
//! 1 - delta = Q((tau - (1 + SNR)) * sqrt(Ns / 2) / (1 + SNR))
//! ```
//!
//! SNR is linear throughout (not dB).

use crate::math::{q, q_inv};
use alloc::vec::Vec;
use core::fmt;
use rand::Rng;

/// Outcome of sensing one channel for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observation {
    /// The detector declared the channel unoccupied.
    Idle,
    /// The detector declared the channel occupied.
    Busy,
}

impl Observation {
    /// `true` when the detector declared the channel idle.
    pub fn is_idle(self) -> bool {
        matches!(self, Observation::Idle)
    }
}

/// Draws one sensing outcome for a channel whose true state is `truly_idle`.
///
/// False alarms occur with probability `epsilon`, misses with probability
/// `delta`. Exactly one uniform is consumed per call regardless of the
/// parameters, so RNG streams stay aligned across detector settings.
pub fn sense<R: Rng + ?Sized>(
    truly_idle: bool,
    epsilon: f64,
    delta: f64,
    rng: &mut R,
) -> Observation {
    debug_assert!((0.0..=1.0).contains(&epsilon) && (0.0..=1.0).contains(&delta));
    let u: f64 = rng.gen();
    if truly_idle {
        if u < epsilon {
            Observation::Busy
        } else {
            Observation::Idle
        }
    } else if u < delta {
        Observation::Idle
    } else {
        Observation::Busy
    }
}

/// One operating point on a receiver operating characteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// False alarm probability.
    pub epsilon: f64,
    /// Miss probability.
    pub delta: f64,
}

/// Piecewise-linear ROC: achievable `(epsilon, delta)` operating points.
///
/// Points are kept sorted by strictly increasing `epsilon` with nonincreasing
/// `delta`; queries interpolate linearly and clamp outside the sampled range.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    points: Vec<RocPoint>,
}

impl RocCurve {
    /// Validates and wraps a point list.
    ///
    /// Requires at least two points, all values in `[0, 1]`, `epsilon`
    /// strictly increasing, and `delta` nonincreasing.
    pub fn new(points: Vec<RocPoint>) -> Result<Self, DetectorError> {
        if points.len() < 2 {
            return Err(DetectorError::TooFewPoints { got: points.len() });
        }
        for (i, p) in points.iter().enumerate() {
            let in_range = (0.0..=1.0).contains(&p.epsilon) && (0.0..=1.0).contains(&p.delta);
            if !in_range || !p.epsilon.is_finite() || !p.delta.is_finite() {
                return Err(DetectorError::InvalidPoint { index: i });
            }
        }
        for i in 1..points.len() {
            if points[i].epsilon <= points[i - 1].epsilon {
                return Err(DetectorError::NonMonotone { index: i, field: "epsilon" });
            }
            if points[i].delta > points[i - 1].delta {
                return Err(DetectorError::NonMonotone { index: i, field: "delta" });
            }
        }
        Ok(Self { points })
    }

    /// The chance line `delta = 1 - epsilon`: sensing that carries no
    /// information beyond the slot-level coin flip.
    pub fn chance_line() -> Self {
        Self {
            points: alloc::vec![
                RocPoint { epsilon: 0.0, delta: 1.0 },
                RocPoint { epsilon: 1.0, delta: 0.0 },
            ],
        }
    }

    /// Concave binormal ROC with deflection `d`: the curve traced by
    /// `epsilon = Q(t)`, `1 - delta = Q(t - d)` as the threshold `t` sweeps.
    /// Useful as a well-behaved fixture for operating-point studies.
    pub fn binormal(d: f64) -> Self {
        debug_assert!(d > 0.0);
        let mut points = alloc::vec![RocPoint { epsilon: 0.0, delta: 1.0 }];
        let steps = 240;
        for i in (0..=steps).rev() {
            // t from +6 down to -6 so epsilon increases monotonically.
            let t = -6.0 + 12.0 * i as f64 / steps as f64;
            push_sampled_point(&mut points, q(t), 1.0 - q(t - d));
        }
        points.push(RocPoint { epsilon: 1.0, delta: 0.0 });
        Self::new(points).expect("binormal construction is monotone")
    }

    /// The operating points, sorted by ascending `epsilon`.
    pub fn points(&self) -> &[RocPoint] {
        &self.points
    }

    /// Miss probability at a given false alarm probability (clamped and
    /// linearly interpolated).
    pub fn delta_at(&self, epsilon: f64) -> f64 {
        let pts = &self.points;
        if epsilon <= pts[0].epsilon {
            return pts[0].delta;
        }
        if epsilon >= pts[pts.len() - 1].epsilon {
            return pts[pts.len() - 1].delta;
        }
        let i = match pts.binary_search_by(|p| p.epsilon.partial_cmp(&epsilon).unwrap()) {
            Ok(i) => return pts[i].delta,
            Err(i) => i,
        };
        let (a, b) = (&pts[i - 1], &pts[i]);
        let t = (epsilon - a.epsilon) / (b.epsilon - a.epsilon);
        a.delta + t * (b.delta - a.delta)
    }

    /// False alarm probability at a given miss probability.
    ///
    /// On flat `delta` stretches the smallest achieving `epsilon` is returned;
    /// outside the sampled range the nearest endpoint's `epsilon` is used.
    pub fn epsilon_at(&self, delta: f64) -> f64 {
        let pts = &self.points;
        if delta >= pts[0].delta {
            return pts[0].epsilon;
        }
        if delta <= pts[pts.len() - 1].delta {
            // Walk back over any terminal flat stretch to its smallest epsilon.
            let d_last = pts[pts.len() - 1].delta;
            let mut i = pts.len() - 1;
            while i > 0 && pts[i - 1].delta == d_last {
                i -= 1;
            }
            return pts[i].epsilon;
        }
        // delta is strictly between pts[0].delta and pts[last].delta.
        let mut i = 1;
        while pts[i].delta > delta {
            i += 1;
        }
        let (a, b) = (&pts[i - 1], &pts[i]);
        if a.delta == b.delta {
            return a.epsilon;
        }
        let t = (a.delta - delta) / (a.delta - b.delta);
        a.epsilon + t * (b.epsilon - a.epsilon)
    }

    /// Whether the detection-power curve `1 - delta` is concave in `epsilon`
    /// (successive slopes nonincreasing within a small tolerance).
    pub fn concave(&self) -> bool {
        let mut prev_slope = f64::INFINITY;
        for w in self.points.windows(2) {
            let slope = ((1.0 - w[1].delta) - (1.0 - w[0].delta)) / (w[1].epsilon - w[0].epsilon);
            let tol = 1e-9 * slope.abs().max(prev_slope.abs().min(f64::MAX)).max(1.0);
            if slope > prev_slope + tol {
                return false;
            }
            prev_slope = slope;
        }
        true
    }
}

/// Appends a sampled `(epsilon, delta)` point if it keeps the curve strictly
/// monotone and stays out of the saturated tails, where differences between
/// consecutive samples drown in floating-point rounding. The exact endpoints
/// `(0, 1)` and `(1, 0)` cover the clipped regions by interpolation.
fn push_sampled_point(points: &mut Vec<RocPoint>, epsilon: f64, delta: f64) {
    const SATURATION: f64 = 1e-9;
    let last = points.last().expect("seeded with the (0, 1) endpoint");
    if epsilon > last.epsilon
        && delta <= last.delta
        && epsilon < 1.0 - SATURATION
        && delta > SATURATION
    {
        points.push(RocPoint { epsilon, delta });
    }
}

/// Parameters of an energy detector: sample count, linear SNR, and decision
/// threshold in multiples of the noise power `sigma_n^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDetectorSpec {
    /// Received primary signal-to-noise ratio (linear).
    pub snr: f64,
    /// Number of energy samples integrated per sensing decision.
    pub num_samples: u64,
    /// Decision threshold on the normalised average energy.
    pub threshold: f64,
}

impl EnergyDetectorSpec {
    /// Builds a spec, validating `snr > 0`, `num_samples >= 1`, and a finite
    /// nonnegative threshold.
    pub fn new(snr: f64, num_samples: u64, threshold: f64) -> Result<Self, DetectorError> {
        if !(snr > 0.0) || !snr.is_finite() {
            return Err(DetectorError::InvalidSnr { value: snr });
        }
        if num_samples == 0 {
            return Err(DetectorError::ZeroSamples);
        }
        if !(threshold >= 0.0) || !threshold.is_finite() {
            return Err(DetectorError::InvalidThreshold { value: threshold });
        }
        Ok(Self { snr, num_samples, threshold })
    }

    /// The `(epsilon, delta)` pair at this spec's own threshold under the
    /// Gaussian approximation.
    pub fn operating_point(&self) -> RocPoint {
        let ns = self.num_samples as f64;
        let scale = libm::sqrt(ns / 2.0);
        let epsilon = q((self.threshold - 1.0) * scale);
        let power = q((self.threshold - (1.0 + self.snr)) * scale / (1.0 + self.snr));
        RocPoint { epsilon, delta: 1.0 - power }
    }
}

/// Analytic Gaussian-approximation ROC for an energy detector, sampled over a
/// threshold grid wide enough to cover both hypotheses out to eight standard
/// deviations, with exact `(0, 1)` and `(1, 0)` endpoints attached.
pub fn energy_roc_analytic(spec: &EnergyDetectorSpec) -> RocCurve {
    let ns = spec.num_samples as f64;
    let sd0 = libm::sqrt(2.0 / ns);
    let sd1 = (1.0 + spec.snr) * sd0;
    let lo = (1.0 - 8.0 * sd0).min(1.0 + spec.snr - 8.0 * sd1).max(0.0);
    let hi = (1.0 + 8.0 * sd0).max(1.0 + spec.snr + 8.0 * sd1);

    let mut points = alloc::vec![RocPoint { epsilon: 0.0, delta: 1.0 }];
    let steps = 400;
    for i in (0..=steps).rev() {
        // Threshold descends so epsilon ascends.
        let tau = lo + (hi - lo) * i as f64 / steps as f64;
        let p = EnergyDetectorSpec { threshold: tau, ..*spec }.operating_point();
        push_sampled_point(&mut points, p.epsilon, p.delta);
    }
    points.push(RocPoint { epsilon: 1.0, delta: 0.0 });
    RocCurve::new(points).expect("analytic sweep is monotone")
}

/// Sensing budget needed to hit a target operating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleRequirement {
    /// Energy detector samples under the Gaussian approximation; grows as
    /// `1/SNR^2` when the SNR is small.
    pub energy_detector: u64,
    /// Coherent-processing reference for the same deflection, `c / SNR`
    /// samples with `c = (Q^-1(epsilon) - Q^-1(power))^2`.
    pub matched_filter: u64,
}

/// Smallest energy-detector sample count achieving false alarm
/// `epsilon_target` and detection power `power_target` (that is,
/// `delta = 1 - power_target`) at linear SNR `snr`.
///
/// Solving the two Gaussian-approximation equations for a common threshold
/// gives `Ns = 2 * ((z_eps - (1 + snr) * z_pow) / snr)^2` with
/// `z_eps = Q^-1(epsilon_target)`, `z_pow = Q^-1(power_target)`.
/// Chance-level targets (`power == epsilon`) need no integration and return 1;
/// targets below the chance line, or unreachable under the approximation, are
/// rejected as infeasible.
pub fn samples_required(
    snr: f64,
    epsilon_target: f64,
    power_target: f64,
) -> Result<SampleRequirement, DetectorError> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(DetectorError::InvalidSnr { value: snr });
    }
    for (name, value) in [("epsilon_target", epsilon_target), ("power_target", power_target)] {
        if !(value > 0.0 && value < 1.0) {
            return Err(DetectorError::InvalidTarget { name, value });
        }
    }
    if power_target < epsilon_target {
        return Err(DetectorError::InfeasibleTargets { epsilon_target, power_target });
    }
    if power_target == epsilon_target {
        return Ok(SampleRequirement { energy_detector: 1, matched_filter: 1 });
    }
    let z_eps = q_inv(epsilon_target);
    let z_pow = q_inv(power_target);
    let deflection = z_eps - (1.0 + snr) * z_pow;
    if deflection <= 0.0 {
        return Err(DetectorError::InfeasibleTargets { epsilon_target, power_target });
    }
    let ns = 2.0 * (deflection / snr) * (deflection / snr);
    let coherent = (z_eps - z_pow) * (z_eps - z_pow) / snr;
    Ok(SampleRequirement {
        energy_detector: (libm::ceil(ns) as u64).max(1),
        matched_filter: (libm::ceil(coherent) as u64).max(1),
    })
}

/// Validation and feasibility errors for detector construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorError {
    /// SNR must be positive, finite, and linear (not dB).
    InvalidSnr { value: f64 },
    /// Sample counts must be at least 1.
    ZeroSamples,
    /// Threshold must be finite and nonnegative.
    InvalidThreshold { value: f64 },
    /// A design target must lie strictly inside `(0, 1)`.
    InvalidTarget { name: &'static str, value: f64 },
    /// The requested operating point is below the chance line or unreachable
    /// under the Gaussian approximation at any sample count.
    InfeasibleTargets { epsilon_target: f64, power_target: f64 },
    /// A ROC needs at least two points.
    TooFewPoints { got: usize },
    /// A ROC point fell outside the unit square.
    InvalidPoint { index: usize },
    /// ROC points must have strictly increasing `epsilon` and nonincreasing
    /// `delta`.
    NonMonotone { index: usize, field: &'static str },
}

impl fmt::Display for DetectorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidSnr { value } => write!(f, "snr = {value} must be positive and finite"),
            Self::ZeroSamples => write!(f, "num_samples must be at least 1"),
            Self::InvalidThreshold { value } => {
                write!(f, "threshold = {value} must be finite and nonnegative")
            }
            Self::InvalidTarget { name, value } => {
                write!(f, "{name} = {value} must lie strictly inside (0, 1)")
            }
            Self::InfeasibleTargets { epsilon_target, power_target } => write!(
                f,
                "targets (epsilon = {epsilon_target}, power = {power_target}) are infeasible for an energy detector at this snr"
            ),
            Self::TooFewPoints { got } => write!(f, "a roc curve needs at least 2 points, got {got}"),
            Self::InvalidPoint { index } => {
                write!(f, "roc point {index} lies outside the unit square")
            }
            Self::NonMonotone { index, field } => {
                write!(f, "roc point {index} breaks {field} monotonicity")
            }
        }
    }
}

impl core::error::Error for DetectorError {}
