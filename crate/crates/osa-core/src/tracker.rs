//! Opportunity tracking: belief filters over channel occupancy and sensing
//! strategies built on them.
//!
//! With one channel sensed per slot the tracker maintains, for every channel,
//! the probability that it is idle *now*. Each slot the belief on the sensed
//! channel is corrected by Bayes' rule against the detector's error rates and
//! every channel is then pushed one slot forward through its chain:
//!
//! ```text
//! idle observed:  p <- p (1 - epsilon) / (p (1 - epsilon) + (1 - p) delta)
//! busy observed:  p <- p epsilon       / (p epsilon + (1 - p) (1 - delta))
//! then            p <- p p_ii + (1 - p) p_bi        (every channel)
//! ```
//!
//! For independent chains the joint occupancy distribution stays in product
//! form, so the per-channel filter is exact. An optional joint-filter mode
//! tracks the full distribution over all `2^N` patterns instead, which is the
//! exact filter for correlated (joint-matrix) occupancy and doubles as an
//! independent reference for the product filter.
//!
//! Three sensing strategies are provided: `static` (best long-run channel),
//! `myopic` (best channel under the current belief), and finite-horizon
//! `value_iteration` on a discretised belief grid with multilinear
//! interpolation. Ties always break toward the lowest channel index.

use crate::access::{decide_access, optimal_access_policy, AccessError, AccessPolicy};
use crate::channel::{
    stationary_distribution, ChannelChain, ChannelError, InitialOccupancy, JointMatrix,
    OccupancyProcess,
};
use crate::detector::{sense, Observation};
use alloc::vec::Vec;
use core::fmt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest channel count supported by the exact joint filter and the value
/// iteration grid.
pub const MAX_EXACT_CHANNELS: usize = 4;

/// Default number of grid points per belief dimension for value iteration.
pub const DEFAULT_GRID_POINTS: usize = 33;

/// Bayes correction of a single channel's idle probability after sensing it.
///
/// Returns the posterior idle probability given the prior `p` and one
/// observation drawn through a detector with false alarm `epsilon` and miss
/// `delta`. Errors if the observation has zero probability under the prior
/// (for example a busy observation when `p = 1` and `epsilon = 0`).
pub fn bayes_correct(
    p: f64,
    observation: Observation,
    epsilon: f64,
    delta: f64,
) -> Result<f64, TrackerError> {
    debug_assert!((0.0..=1.0).contains(&p));
    debug_assert!((0.0..=1.0).contains(&epsilon) && (0.0..=1.0).contains(&delta));
    let (numerator, denominator) = match observation {
        Observation::Idle => {
            let num = p * (1.0 - epsilon);
            (num, num + (1.0 - p) * delta)
        }
        Observation::Busy => {
            let num = p * epsilon;
            (num, num + (1.0 - p) * (1.0 - delta))
        }
    };
    if denominator <= 0.0 {
        return Err(TrackerError::InconsistentObservation);
    }
    Ok(numerator / denominator)
}

/// Exact Bayesian filter over all `2^N` occupancy patterns.
///
/// Maintains the full joint distribution and updates it with the same
/// observation model as the product filter: a likelihood reweighting on the
/// sensed channel's bit followed by one step of the joint transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct JointBelief {
    matrix: JointMatrix,
    dist: Vec<f64>,
}

impl JointBelief {
    /// Filter initialised at the matrix's stationary pattern distribution.
    pub fn stationary(matrix: JointMatrix) -> Self {
        let dist = matrix.stationary_pattern();
        Self { matrix, dist }
    }

    /// Filter initialised at the product distribution of the given per-channel
    /// idle probabilities.
    pub fn from_marginals(matrix: JointMatrix, marginals: &[f64]) -> Result<Self, TrackerError> {
        if marginals.len() != matrix.n_channels() {
            return Err(TrackerError::DimensionMismatch {
                expected: matrix.n_channels(),
                got: marginals.len(),
            });
        }
        for &m in marginals {
            if !(0.0..=1.0).contains(&m) {
                return Err(TrackerError::BadBelief { value: m });
            }
        }
        let dim = 1usize << matrix.n_channels();
        let mut dist = Vec::with_capacity(dim);
        for s in 0..dim {
            let mut p = 1.0;
            for (k, &m) in marginals.iter().enumerate() {
                p *= if s >> k & 1 == 1 { m } else { 1.0 - m };
            }
            dist.push(p);
        }
        Ok(Self { matrix, dist })
    }

    /// One filter step: likelihood reweighting for an observation of channel
    /// `action`, then prediction through the joint matrix.
    pub fn update(
        &mut self,
        action: usize,
        observation: Observation,
        epsilon: f64,
        delta: f64,
    ) -> Result<(), TrackerError> {
        let dim = self.dist.len();
        let mut weighted = Vec::with_capacity(dim);
        let mut total = 0.0;
        for (s, &p) in self.dist.iter().enumerate() {
            let idle = s >> action & 1 == 1;
            let like = match observation {
                Observation::Idle => {
                    if idle {
                        1.0 - epsilon
                    } else {
                        delta
                    }
                }
                Observation::Busy => {
                    if idle {
                        epsilon
                    } else {
                        1.0 - delta
                    }
                }
            };
            let w = p * like;
            total += w;
            weighted.push(w);
        }
        if total <= 0.0 {
            return Err(TrackerError::InconsistentObservation);
        }
        for (t, slot) in self.dist.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (s, &w) in weighted.iter().enumerate() {
                acc += w * self.matrix.prob(s, t);
            }
            *slot = acc / total;
        }
        Ok(())
    }

    /// Per-channel idle probabilities implied by the joint distribution.
    pub fn marginals(&self) -> Vec<f64> {
        let n = self.matrix.n_channels();
        let mut out = alloc::vec![0.0; n];
        for (s, &p) in self.dist.iter().enumerate() {
            for (k, slot) in out.iter_mut().enumerate() {
                if s >> k & 1 == 1 {
                    *slot += p;
                }
            }
        }
        out
    }

    /// The tracked pattern distribution (index bit `k` = channel `k` idle).
    pub fn dist(&self) -> &[f64] {
        &self.dist
    }
}

/// Belief over channel occupancy: one idle probability per channel, with an
/// optional exact joint filter running alongside.
///
/// When the joint filter is enabled, [`BeliefState::update`] takes its
/// marginals as the authoritative per-channel probabilities; this is the
/// exact mode for correlated occupancy.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    probs: Vec<f64>,
    joint: Option<JointBelief>,
}

impl BeliefState {
    /// Belief from explicit per-channel idle probabilities.
    pub fn from_marginals(probs: Vec<f64>) -> Result<Self, TrackerError> {
        for &p in &probs {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(TrackerError::BadBelief { value: p });
            }
        }
        if probs.is_empty() {
            return Err(TrackerError::Channel(ChannelError::EmptyChannelSet));
        }
        Ok(Self { probs, joint: None })
    }

    /// Uninformed starting belief: each channel at its stationary idle
    /// probability (0.5 for the reducible chain, which has no unique one).
    pub fn stationary(chains: &[ChannelChain]) -> Self {
        let probs = chains.iter().map(stationary_or_half).collect();
        Self { probs, joint: None }
    }

    /// Exact-mode starting belief for joint-matrix occupancy: the joint filter
    /// at the matrix's stationary law.
    pub fn stationary_joint(matrix: JointMatrix) -> Self {
        let joint = JointBelief::stationary(matrix);
        Self { probs: joint.marginals(), joint: Some(joint) }
    }

    /// Attaches an exact joint filter seeded from the current marginals.
    pub fn enable_joint(&mut self, matrix: JointMatrix) -> Result<(), TrackerError> {
        self.joint = Some(JointBelief::from_marginals(matrix, &self.probs)?);
        Ok(())
    }

    /// Per-channel idle probabilities.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// The joint filter, when exact mode is enabled.
    pub fn joint(&self) -> Option<&JointBelief> {
        self.joint.as_ref()
    }

    /// One tracking step: Bayes correction on the sensed channel, then a
    /// one-slot prediction of every channel.
    pub fn update(
        &mut self,
        chains: &[ChannelChain],
        action: usize,
        observation: Observation,
        epsilon: f64,
        delta: f64,
    ) -> Result<(), TrackerError> {
        if chains.len() != self.probs.len() {
            return Err(TrackerError::DimensionMismatch {
                expected: self.probs.len(),
                got: chains.len(),
            });
        }
        if action >= self.probs.len() {
            return Err(TrackerError::DimensionMismatch {
                expected: self.probs.len(),
                got: action + 1,
            });
        }
        match &mut self.joint {
            Some(joint) => {
                joint.update(action, observation, epsilon, delta)?;
                self.probs = joint.marginals();
            }
            None => {
                self.probs[action] = bayes_correct(self.probs[action], observation, epsilon, delta)?;
                for (k, chain) in chains.iter().enumerate() {
                    self.probs[k] = chain.predict(self.probs[k]);
                }
            }
        }
        Ok(())
    }
}

fn stationary_or_half(chain: &ChannelChain) -> f64 {
    stationary_distribution(chain).map(|s| s.pi_idle).unwrap_or(0.5)
}

fn argmax_lowest(scores: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, s) in scores.enumerate() {
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

/// Channel a belief-free sensor should park on: the one maximising
/// `bandwidth * stationary idle probability`, ties to the lowest index.
pub fn static_choice(chains: &[ChannelChain]) -> usize {
    argmax_lowest(chains.iter().map(|c| c.bandwidth * stationary_or_half(c)))
}

/// Channel maximising expected immediate opportunity under the current
/// belief, `bandwidth * P(idle)`, ties to the lowest index.
pub fn myopic_choice(chains: &[ChannelChain], beliefs: &[f64]) -> usize {
    debug_assert_eq!(chains.len(), beliefs.len());
    argmax_lowest(chains.iter().zip(beliefs).map(|(c, &b)| c.bandwidth * b))
}

/// Configuration for finite-horizon value iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValueIterationConfig {
    /// Lookahead depth in slots (at least 1).
    pub horizon: u32,
    /// Grid points per belief dimension (at least 2).
    pub grid_points: usize,
}

impl ValueIterationConfig {
    /// Config with the default grid resolution.
    pub fn new(horizon: u32) -> Self {
        Self { horizon, grid_points: DEFAULT_GRID_POINTS }
    }
}

/// One stage of the value function: values and greedy actions on the belief
/// grid for a fixed number of remaining slots.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueStage {
    /// Interpolation table over the belief grid (row-major, channel 0 fastest).
    pub values: Vec<f64>,
    /// Greedy action at each grid point.
    pub actions: Vec<u16>,
}

/// Finite-horizon sensing policy from value iteration on a belief grid.
///
/// The policy is self-contained: it remembers the chains, detector operating
/// point, and access policy it was computed for, and can score or pick
/// actions for arbitrary beliefs by multilinear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingPolicy {
    chains: Vec<ChannelChain>,
    epsilon: f64,
    delta: f64,
    access: AccessPolicy,
    grid_points: usize,
    horizon: u32,
    stages: Vec<ValueStage>,
}

/// Computes the finite-horizon value function for sensing one channel per
/// slot under the optimal access policy for `(delta, zeta)`.
///
/// The state space is the product belief grid with `cfg.grid_points` points
/// per channel; expected one-slot reward for sensing channel `a` is
/// `B_a * p_a * ((1 - epsilon) q_idle + epsilon q_busy)` and continuation
/// values are interpolated multilinearly. Exact only for independent chains;
/// limited to [`MAX_EXACT_CHANNELS`] channels.
pub fn value_iteration(
    chains: &[ChannelChain],
    epsilon: f64,
    delta: f64,
    zeta: f64,
    cfg: ValueIterationConfig,
) -> Result<SensingPolicy, TrackerError> {
    let n = chains.len();
    if n == 0 {
        return Err(TrackerError::Channel(ChannelError::EmptyChannelSet));
    }
    if n > MAX_EXACT_CHANNELS {
        return Err(TrackerError::TooManyChannels { n });
    }
    if cfg.grid_points < 2 {
        return Err(TrackerError::GridTooCoarse { got: cfg.grid_points });
    }
    if cfg.horizon == 0 {
        return Err(TrackerError::ZeroHorizon);
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(TrackerError::BadBelief { value: epsilon });
    }
    let access = optimal_access_policy(delta, zeta)?;

    let mut policy = SensingPolicy {
        chains: chains.to_vec(),
        epsilon,
        delta,
        access,
        grid_points: cfg.grid_points,
        horizon: cfg.horizon,
        stages: Vec::with_capacity(cfg.horizon as usize),
    };

    let g = cfg.grid_points;
    let total = g.pow(n as u32);
    let mut point = [0.0f64; MAX_EXACT_CHANNELS];
    for _ in 1..=cfg.horizon {
        let mut values = alloc::vec![0.0; total];
        let mut actions = alloc::vec![0u16; total];
        for idx in 0..total {
            decode_grid_point(idx, n, g, &mut point);
            let (a, v) = policy.lookahead(&point[..n], policy.stages.last());
            values[idx] = v;
            actions[idx] = a as u16;
        }
        policy.stages.push(ValueStage { values, actions });
    }
    Ok(policy)
}

impl SensingPolicy {
    /// Lookahead depth the policy was computed for.
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Grid points per belief dimension.
    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    /// Number of channels.
    pub fn n_channels(&self) -> usize {
        self.chains.len()
    }

    /// The stage for `remaining` slots to go (1-based, clamped to the
    /// horizon).
    pub fn stage(&self, remaining: u32) -> &ValueStage {
        let r = remaining.clamp(1, self.horizon) as usize;
        &self.stages[r - 1]
    }

    /// Belief coordinate of grid index `i` along one dimension.
    pub fn grid_coordinate(&self, i: usize) -> f64 {
        i as f64 / (self.grid_points - 1) as f64
    }

    /// Interpolated value of a belief with `remaining` slots to go.
    pub fn value_at(&self, beliefs: &[f64], remaining: u32) -> f64 {
        interpolate(&self.stage(remaining).values, self.chains.len(), self.grid_points, beliefs)
    }

    /// Greedy sensing action for a belief with `remaining` slots to go
    /// (one-step lookahead against the stored continuation values), ties to
    /// the lowest index.
    pub fn greedy_action(&self, beliefs: &[f64], remaining: u32) -> usize {
        let r = remaining.clamp(1, self.horizon);
        let continuation = if r >= 2 { Some(&self.stages[(r - 2) as usize]) } else { None };
        self.lookahead(beliefs, continuation).0
    }

    /// Best (action, value) at a belief given an optional continuation stage.
    fn lookahead(&self, beliefs: &[f64], continuation: Option<&ValueStage>) -> (usize, f64) {
        let n = self.chains.len();
        let c = (1.0 - self.epsilon) * self.access.p_tx_given_idle_obs
            + self.epsilon * self.access.p_tx_given_busy_obs;
        let mut best = (0usize, f64::NEG_INFINITY);
        let mut next = [0.0f64; MAX_EXACT_CHANNELS];
        for a in 0..n {
            let p = beliefs[a];
            let mut q = self.chains[a].bandwidth * p * c;
            if let Some(stage) = continuation {
                let p_idle_obs = p * (1.0 - self.epsilon) + (1.0 - p) * self.delta;
                for (obs, w) in
                    [(Observation::Idle, p_idle_obs), (Observation::Busy, 1.0 - p_idle_obs)]
                {
                    if w <= 0.0 {
                        continue;
                    }
                    // w > 0 is exactly the Bayes denominator, so this cannot fail.
                    let corrected = bayes_correct(p, obs, self.epsilon, self.delta)
                        .expect("positive-probability observation");
                    for k in 0..n {
                        let b = if k == a { corrected } else { beliefs[k] };
                        next[k] = self.chains[k].predict(b);
                    }
                    q += w * interpolate(&stage.values, n, self.grid_points, &next[..n]);
                }
            }
            if q > best.1 {
                best = (a, q);
            }
        }
        best
    }
}

fn decode_grid_point(mut idx: usize, n: usize, g: usize, out: &mut [f64; MAX_EXACT_CHANNELS]) {
    for slot in out.iter_mut().take(n) {
        *slot = (idx % g) as f64 / (g - 1) as f64;
        idx /= g;
    }
}

/// Multilinear interpolation of a value table over the unit belief cube.
fn interpolate(values: &[f64], n: usize, g: usize, beliefs: &[f64]) -> f64 {
    debug_assert_eq!(beliefs.len(), n);
    let mut base = [0usize; MAX_EXACT_CHANNELS];
    let mut frac = [0.0f64; MAX_EXACT_CHANNELS];
    for k in 0..n {
        let b = beliefs[k].clamp(0.0, 1.0);
        let t = b * (g - 1) as f64;
        let i = (t as usize).min(g - 2);
        base[k] = i;
        frac[k] = t - i as f64;
    }
    let mut acc = 0.0;
    for corner in 0..1usize << n {
        let mut w = 1.0;
        let mut idx = 0usize;
        let mut stride = 1usize;
        for k in 0..n {
            let hi = corner >> k & 1 == 1;
            w *= if hi { frac[k] } else { 1.0 - frac[k] };
            idx += (base[k] + hi as usize) * stride;
            stride *= g;
        }
        if w > 0.0 {
            acc += w * values[idx];
        }
    }
    acc
}

/// Sensing strategy used by the closed loop.
#[derive(Debug, Clone, Copy)]
pub enum Strategy<'a> {
    /// Always sense the best long-run channel.
    Static,
    /// Sense the best channel under the current belief.
    Myopic,
    /// Follow a precomputed value-iteration policy (receding horizon).
    ValueIteration(&'a SensingPolicy),
}

/// Hook consulted before each transmission the access policy wants to make.
///
/// Returning `false` suppresses the transmission; the run records it as a
/// gated denial. The trivial implementation is [`AllowAll`].
pub trait AccessGate {
    /// Whether a transmission on `channel` at `slot` may proceed.
    fn permit(&mut self, channel: usize, slot: u64) -> bool;
}

/// Gate that never blocks.
pub struct AllowAll;

impl AccessGate for AllowAll {
    fn permit(&mut self, _channel: usize, _slot: u64) -> bool {
        true
    }
}

/// Closed-loop run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig<'a> {
    /// Per-channel chains (bandwidths included).
    pub chains: &'a [ChannelChain],
    /// Correlated occupancy: evolve patterns under this matrix and track with
    /// the exact joint filter instead of the product filter.
    pub joint_matrix: Option<&'a JointMatrix>,
    /// Initial occupancy pattern law.
    pub initial: InitialOccupancy,
    /// Detector false alarm probability.
    pub epsilon: f64,
    /// Detector miss probability.
    pub delta: f64,
    /// Collision constraint the access policy must meet.
    pub zeta: f64,
    /// Slots to simulate.
    pub slots: u64,
}

/// Per-slot trace of a closed-loop run, stored column-wise.
///
/// `beliefs` holds the tracker's prior at the start of each slot (before that
/// slot's observation), flattened to `slots * n_channels` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRecord {
    n_channels: usize,
    /// Sensed channel per slot.
    pub actions: Vec<u32>,
    /// Detector outcome per slot.
    pub observations: Vec<Observation>,
    /// Whether a transmission happened.
    pub accessed: Vec<bool>,
    /// True occupancy pattern (bit `k` set = channel `k` idle).
    pub state_bits: Vec<u64>,
    /// Delivered bits (the sensed channel's bandwidth when a transmission
    /// landed on a truly idle channel, else 0).
    pub rewards: Vec<f64>,
    /// Whether a transmission landed on a busy channel.
    pub collisions: Vec<bool>,
    /// Prior idle probabilities at the start of each slot, flattened.
    pub beliefs: Vec<f64>,
    /// Transmissions the access policy wanted but the gate suppressed.
    pub gated_denials: u64,
}

impl TrackRecord {
    fn with_capacity(n_channels: usize, slots: usize) -> Self {
        Self {
            n_channels,
            actions: Vec::with_capacity(slots),
            observations: Vec::with_capacity(slots),
            accessed: Vec::with_capacity(slots),
            state_bits: Vec::with_capacity(slots),
            rewards: Vec::with_capacity(slots),
            collisions: Vec::with_capacity(slots),
            beliefs: Vec::with_capacity(slots * n_channels),
            gated_denials: 0,
        }
    }

    /// Number of recorded slots.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    /// Whether the record is empty.
    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Number of channels in the run.
    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// The belief row (prior idle probabilities) for one slot.
    pub fn belief_row(&self, slot: usize) -> &[f64] {
        &self.beliefs[slot * self.n_channels..(slot + 1) * self.n_channels]
    }

    /// Total delivered bits.
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Runs the closed sensing-access loop for `cfg.slots` slots.
///
/// Slot order: record the prior belief, choose a channel, sense it, draw the
/// access decision, consult the gate, book reward and collision, update the
/// belief, and finally step the occupancy process. All randomness comes from
/// a ChaCha stream seeded with `seed`, and every slot consumes a fixed number
/// of draws (one for sensing, one for access, plus the occupancy step), so
/// records are reproducible byte-for-byte for a given `(config, seed)` pair.
pub fn run_tracking(
    cfg: &RunConfig<'_>,
    strategy: Strategy<'_>,
    gate: &mut dyn AccessGate,
    seed: u64,
) -> Result<TrackRecord, TrackerError> {
    if !(0.0..=1.0).contains(&cfg.epsilon) {
        return Err(TrackerError::BadBelief { value: cfg.epsilon });
    }
    let access = optimal_access_policy(cfg.delta, cfg.zeta)?;
    if let Strategy::ValueIteration(policy) = strategy {
        if policy.n_channels() != cfg.chains.len() {
            return Err(TrackerError::DimensionMismatch {
                expected: cfg.chains.len(),
                got: policy.n_channels(),
            });
        }
    }

    let mut process = match cfg.joint_matrix {
        Some(matrix) => {
            OccupancyProcess::with_joint_matrix(cfg.chains.to_vec(), matrix.clone())?
        }
        None => OccupancyProcess::new(cfg.chains.to_vec())?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    process.reset(&cfg.initial, &mut rng)?;

    let mut belief = match cfg.joint_matrix {
        Some(matrix) => BeliefState::stationary_joint(matrix.clone()),
        None => BeliefState::stationary(cfg.chains),
    };
    let static_action = static_choice(cfg.chains);

    let mut record = TrackRecord::with_capacity(cfg.chains.len(), cfg.slots as usize);
    for slot in 0..cfg.slots {
        record.beliefs.extend_from_slice(belief.probs());

        let action = match strategy {
            Strategy::Static => static_action,
            Strategy::Myopic => myopic_choice(cfg.chains, belief.probs()),
            Strategy::ValueIteration(policy) => {
                policy.greedy_action(belief.probs(), policy.horizon())
            }
        };

        let truly_idle = process.state()[action];
        let observation = sense(truly_idle, cfg.epsilon, cfg.delta, &mut rng);
        let wants_tx = decide_access(observation, &access, &mut rng);
        let accessed = if wants_tx {
            let allowed = gate.permit(action, slot);
            if !allowed {
                record.gated_denials += 1;
            }
            allowed
        } else {
            false
        };

        record.actions.push(action as u32);
        record.observations.push(observation);
        record.accessed.push(accessed);
        record.state_bits.push(process.state_bits());
        record.rewards.push(if accessed && truly_idle {
            cfg.chains[action].bandwidth
        } else {
            0.0
        });
        record.collisions.push(accessed && !truly_idle);

        belief.update(cfg.chains, action, observation, cfg.epsilon, cfg.delta)?;
        process.step(&mut rng);
    }
    Ok(record)
}

/// Errors from belief tracking and the closed loop.
#[derive(Debug, Clone, PartialEq)]
pub enum TrackerError {
    /// Underlying channel-model error.
    Channel(ChannelError),
    /// Underlying access-policy error.
    Access(AccessError),
    /// An observation arrived that has probability zero under the belief.
    InconsistentObservation,
    /// Value iteration and the joint filter support at most
    /// [`MAX_EXACT_CHANNELS`] channels.
    TooManyChannels { n: usize },
    /// The belief grid needs at least two points per dimension.
    GridTooCoarse { got: usize },
    /// Value iteration needs a horizon of at least 1.
    ZeroHorizon,
    /// Mismatched channel counts between components.
    DimensionMismatch { expected: usize, got: usize },
    /// A probability fell outside `[0, 1]`.
    BadBelief { value: f64 },
}

impl From<ChannelError> for TrackerError {
    fn from(e: ChannelError) -> Self {
        Self::Channel(e)
    }
}

impl From<AccessError> for TrackerError {
    fn from(e: AccessError) -> Self {
        Self::Access(e)
    }
}

impl fmt::Display for TrackerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Channel(e) => write!(f, "channel model: {e}"),
            Self::Access(e) => write!(f, "access policy: {e}"),
            Self::InconsistentObservation => {
                write!(f, "observation has probability zero under the current belief")
            }
            Self::TooManyChannels { n } => {
                write!(f, "exact mode supports at most {MAX_EXACT_CHANNELS} channels, got {n}")
            }
            Self::GridTooCoarse { got } => {
                write!(f, "belief grid needs at least 2 points per dimension, got {got}")
            }
            Self::ZeroHorizon => write!(f, "value iteration horizon must be at least 1"),
            Self::DimensionMismatch { expected, got } => {
                write!(f, "expected {expected} channels, got {got}")
            }
            Self::BadBelief { value } => {
                write!(f, "probability {value} outside [0, 1]")
            }
        }
    }
}

impl core::error::Error for TrackerError {}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn chain(p_ii: f64, p_bi: f64, b: f64) -> ChannelChain {
        ChannelChain::new(p_ii, p_bi, b).unwrap()
    }

    #[test]
    fn idle_observation_sharpens_belief_upward() {
        // p = 0.5, epsilon = 0.1, delta = 0.2:
        // 0.5 * 0.9 / (0.5 * 0.9 + 0.5 * 0.2) = 0.45 / 0.55 = 0.818181...
        let p = bayes_correct(0.5, Observation::Idle, 0.1, 0.2).unwrap();
        assert!((p - 0.8181818181818182).abs() < 1e-15);
    }

    #[test]
    fn busy_observation_sharpens_belief_downward() {
        // 0.5 * 0.1 / (0.5 * 0.1 + 0.5 * 0.8) = 0.05 / 0.45 = 0.111111...
        let p = bayes_correct(0.5, Observation::Busy, 0.1, 0.2).unwrap();
        assert!((p - 0.1111111111111111).abs() < 1e-15);
    }

    #[test]
    fn chance_level_detector_leaves_belief_unchanged() {
        // epsilon = delta = 0.5 carries no information.
        for &obs in &[Observation::Idle, Observation::Busy] {
            let p = bayes_correct(0.3, obs, 0.5, 0.5).unwrap();
            assert!((p - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn perfect_sensing_collapses_belief() {
        assert_eq!(bayes_correct(0.7, Observation::Idle, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bayes_correct(0.7, Observation::Busy, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn impossible_observation_errors() {
        // p = 1 with epsilon = 0: a busy observation has probability zero.
        assert_eq!(
            bayes_correct(1.0, Observation::Busy, 0.0, 0.3),
            Err(TrackerError::InconsistentObservation)
        );
    }

    #[test]
    fn belief_update_corrects_then_predicts() {
        // Sensed channel: correct 0.5 -> 0.818181..., then predict through
        // (0.8, 0.3): 0.818181 * 0.8 + 0.181818 * 0.3 = 0.709090...
        // Unsensed channel: predict only: 0.5 * 0.5 + 0.5 * 0.4 = 0.45.
        let chains = [chain(0.8, 0.3, 1.0), chain(0.5, 0.4, 1.0)];
        let mut b = BeliefState::from_marginals(vec![0.5, 0.5]).unwrap();
        b.update(&chains, 0, Observation::Idle, 0.1, 0.2).unwrap();
        assert!((b.probs()[0] - 0.7090909090909091).abs() < 1e-12);
        assert!((b.probs()[1] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn stationary_belief_matches_chains() {
        let chains = [chain(0.8, 0.3, 1.0), chain(0.5, 0.4, 1.0)];
        let b = BeliefState::stationary(&chains);
        assert!((b.probs()[0] - 0.6).abs() < 1e-15);
        assert!((b.probs()[1] - 0.4 / 0.9).abs() < 1e-15);
    }

    #[test]
    fn static_choice_weighs_bandwidth_against_availability() {
        // Channel 0: 1.0 * 0.6 = 0.6; channel 1: 2.0 * 0.444 = 0.888 -> 1.
        let chains = [chain(0.8, 0.3, 1.0), chain(0.5, 0.4, 2.0)];
        assert_eq!(static_choice(&chains), 1);
    }

    #[test]
    fn choices_break_ties_toward_lowest_index() {
        let chains = [chain(0.8, 0.3, 1.0), chain(0.8, 0.3, 1.0)];
        assert_eq!(static_choice(&chains), 0);
        assert_eq!(myopic_choice(&chains, &[0.7, 0.7]), 0);
        assert_eq!(myopic_choice(&chains, &[0.2, 0.9]), 1);
    }

    #[test]
    fn product_filter_matches_joint_filter_on_independent_chains() {
        // Drive both filters with identical observation sequences; their
        // marginals must agree to near machine precision.
        use rand::{Rng, SeedableRng};
        let chains = [chain(0.8, 0.3, 1.0), chain(0.5, 0.4, 1.0)];
        let matrix = JointMatrix::from_product(&chains).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let mut product = BeliefState::stationary(&chains);
            let mut joint = JointBelief::from_marginals(matrix.clone(), product.probs()).unwrap();
            for step in 0..200 {
                let action = step % chains.len();
                let obs = if rng.gen::<f64>() < 0.5 { Observation::Idle } else { Observation::Busy };
                product.update(&chains, action, obs, 0.1, 0.2).unwrap();
                joint.update(action, obs, 0.1, 0.2).unwrap();
                for (a, b) in product.probs().iter().zip(joint.marginals()) {
                    assert!((a - b).abs() < 1e-9, "filters diverged: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn single_channel_value_matches_marginal_recursion() {
        // With one channel the optimal value is in closed form: the belief's
        // t-step predictions summed and scaled by B * (1 - epsilon) (the trust
        // policy at delta = zeta transmits only on idle observations). The
        // grid backup preserves linearity exactly, so this holds to 1e-9 even
        // between grid points.
        let chains = [chain(0.8, 0.3, 2.0)];
        let (eps, delta, zeta) = (0.1, 0.1, 0.1);
        let horizon = 4;
        let policy = value_iteration(
            &chains,
            eps,
            delta,
            zeta,
            ValueIterationConfig { horizon, grid_points: 9 },
        )
        .unwrap();
        for &b0 in &[0.0, 0.125, 0.3, 0.6, 0.875, 1.0] {
            let mut expected = 0.0;
            let mut m = b0;
            for _ in 0..horizon {
                expected += 2.0 * m * (1.0 - eps);
                m = chains[0].predict(m);
            }
            let got = policy.value_at(&[b0], horizon);
            assert!((got - expected).abs() < 1e-9, "b0={b0}: {got} vs {expected}");
        }
    }

    #[test]
    fn horizon_one_greedy_equals_myopic() {
        let chains = [chain(0.9, 0.2, 1.0), chain(0.6, 0.4, 1.5), chain(0.3, 0.2, 3.0)];
        let policy = value_iteration(
            &chains,
            0.1,
            0.1,
            0.1,
            ValueIterationConfig { horizon: 1, grid_points: 9 },
        )
        .unwrap();
        let g = policy.grid_points();
        for i in 0..g {
            for j in 0..g {
                for k in 0..g {
                    let b = [
                        policy.grid_coordinate(i),
                        policy.grid_coordinate(j),
                        policy.grid_coordinate(k),
                    ];
                    assert_eq!(policy.greedy_action(&b, 1), myopic_choice(&chains, &b));
                }
            }
        }
    }

    #[test]
    fn value_grows_with_horizon() {
        let chains = [chain(0.9, 0.1, 1.0), chain(0.5, 0.4, 2.0)];
        let mk = |h| {
            value_iteration(&chains, 0.1, 0.1, 0.1, ValueIterationConfig { horizon: h, grid_points: 17 })
                .unwrap()
        };
        let p3 = mk(3);
        for idx in 0..17 * 17 {
            let short = p3.stage(2).values[idx];
            let long = p3.stage(3).values[idx];
            assert!(long >= short - 1e-12, "value shrank with horizon at {idx}");
        }
    }

    #[test]
    fn value_iteration_validates_inputs() {
        let chains = vec![chain(0.8, 0.3, 1.0); 5];
        assert_eq!(
            value_iteration(&chains, 0.1, 0.1, 0.1, ValueIterationConfig::new(2)),
            Err(TrackerError::TooManyChannels { n: 5 })
        );
        let two = [chain(0.8, 0.3, 1.0)];
        assert_eq!(
            value_iteration(&two, 0.1, 0.1, 0.1, ValueIterationConfig { horizon: 0, grid_points: 9 }),
            Err(TrackerError::ZeroHorizon)
        );
        assert_eq!(
            value_iteration(&two, 0.1, 0.1, 0.1, ValueIterationConfig { horizon: 1, grid_points: 1 }),
            Err(TrackerError::GridTooCoarse { got: 1 })
        );
    }

    #[test]
    fn always_idle_channels_give_full_throughput() {
        // p_bi = 1 means every channel is idle after one slot regardless of
        // history; with perfect sensing and a fixed all-idle start the myopic
        // tracker collects the best bandwidth every slot.
        let chains = [chain(1.0, 1.0, 1.0), chain(1.0, 1.0, 2.0)];
        let cfg = RunConfig {
            chains: &chains,
            joint_matrix: None,
            initial: InitialOccupancy::Fixed(vec![true, true]),
            epsilon: 0.0,
            delta: 0.0,
            zeta: 0.1,
            slots: 500,
        };
        let record = run_tracking(&cfg, Strategy::Myopic, &mut AllowAll, 3).unwrap();
        assert_eq!(record.total_reward(), 2.0 * 500.0);
        assert!(record.collisions.iter().all(|&c| !c));
    }

    #[test]
    fn runs_are_deterministic_per_seed() {
        let chains = [chain(0.9, 0.2, 1.0), chain(0.6, 0.3, 1.5)];
        let cfg = RunConfig {
            chains: &chains,
            joint_matrix: None,
            initial: InitialOccupancy::Stationary,
            epsilon: 0.1,
            delta: 0.1,
            zeta: 0.1,
            slots: 2000,
        };
        let a = run_tracking(&cfg, Strategy::Myopic, &mut AllowAll, 42).unwrap();
        let b = run_tracking(&cfg, Strategy::Myopic, &mut AllowAll, 42).unwrap();
        assert_eq!(a, b);
        let c = run_tracking(&cfg, Strategy::Myopic, &mut AllowAll, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn reducible_chains_run_with_fallback_belief() {
        let chains = [chain(1.0, 0.0, 1.0)];
        let cfg = RunConfig {
            chains: &chains,
            joint_matrix: None,
            initial: InitialOccupancy::Fixed(vec![true]),
            epsilon: 0.0,
            delta: 0.0,
            zeta: 0.1,
            slots: 50,
        };
        let record = run_tracking(&cfg, Strategy::Myopic, &mut AllowAll, 1).unwrap();
        assert_eq!(record.total_reward(), 50.0);
    }

    #[test]
    fn blocking_gate_suppresses_all_transmissions() {
        struct DenyAll;
        impl AccessGate for DenyAll {
            fn permit(&mut self, _c: usize, _s: u64) -> bool {
                false
            }
        }
        let chains = [chain(1.0, 1.0, 1.0)];
        let cfg = RunConfig {
            chains: &chains,
            joint_matrix: None,
            initial: InitialOccupancy::Fixed(vec![true]),
            epsilon: 0.0,
            delta: 0.0,
            zeta: 0.1,
            slots: 100,
        };
        let record = run_tracking(&cfg, Strategy::Myopic, &mut DenyAll, 1).unwrap();
        assert_eq!(record.total_reward(), 0.0);
        assert!(record.accessed.iter().all(|&a| !a));
        assert_eq!(record.gated_denials, 100);
    }

    #[test]
    fn joint_occupancy_mode_tracks_with_exact_filter() {
        // Correlated two-channel occupancy: both channels flip together.
        // The exact filter pins the pattern after one clean observation.
        let chains = [chain(0.9, 0.1, 1.0), chain(0.9, 0.1, 1.0)];
        let dim = 4;
        let mut rows = vec![0.0; dim * dim];
        for s in 0..dim {
            // Perfectly coupled: move to 00 or 11 only.
            let idle_next = if s == 3 { 0.9 } else { 0.1 };
            rows[s * dim + 3] = idle_next;
            rows[s * dim] = 1.0 - idle_next;
        }
        let matrix = JointMatrix::new(2, rows).unwrap();
        let cfg = RunConfig {
            chains: &chains,
            joint_matrix: Some(&matrix),
            initial: InitialOccupancy::Stationary,
            epsilon: 0.0,
            delta: 0.0,
            zeta: 0.1,
            slots: 400,
        };
        let record = run_tracking(&cfg, Strategy::Myopic, &mut AllowAll, 17).unwrap();
        // After an idle observation of channel 0 the coupled filter must also
        // raise channel 1's belief to the same value.
        for t in 1..record.len() {
            let b = record.belief_row(t);
            assert!((b[0] - b[1]).abs() < 1e-12, "coupled beliefs diverged at {t}");
        }
    }
}
