//! Primary-user channel occupancy models.
//!
//! Each licensed channel is a two-state Markov chain over `{idle, busy}`
//! sampled once per slot. `p_ii` is the probability an idle channel stays
//! idle, `p_bi` the probability a busy channel turns idle. A set of channels
//! evolves either as independent chains (product mode) or, for small channel
//! counts, under an explicit joint transition matrix over all `2^N` occupancy
//! patterns so correlated primary activity can be modelled.
//!
//! Throughout the crate `true` means *idle* (an opportunity), and joint state
//! indices put channel `k` at bit `k` (bit set = idle).

use alloc::vec::Vec;
use core::fmt;
use rand::Rng;

/// Largest channel count accepted in joint-matrix mode (`2^8 = 256` states).
pub const MAX_JOINT_CHANNELS: usize = 8;

/// Two-state occupancy chain for one licensed channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelChain {
    /// P(idle at t+1 | idle at t).
    pub p_ii: f64,
    /// P(idle at t+1 | busy at t).
    pub p_bi: f64,
    /// Channel bandwidth in bits per slot when used at capacity.
    pub bandwidth: f64,
}

impl ChannelChain {
    /// Builds a chain, validating that both transition entries are
    /// probabilities and the bandwidth is positive and finite.
    pub fn new(p_ii: f64, p_bi: f64, bandwidth: f64) -> Result<Self, ChannelError> {
        for (name, value) in [("p_ii", p_ii), ("p_bi", p_bi)] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(ChannelError::InvalidProbability { name, value });
            }
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(ChannelError::InvalidBandwidth { value: bandwidth });
        }
        Ok(Self { p_ii, p_bi, bandwidth })
    }

    /// One-slot belief prediction: the probability of being idle next slot
    /// given probability `p_idle` of being idle now.
    pub fn predict(&self, p_idle: f64) -> f64 {
        p_idle * self.p_ii + (1.0 - p_idle) * self.p_bi
    }
}

/// Stationary idle probability of a chain, with degenerate-chain handling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryIdle {
    /// Long-run fraction of idle slots.
    pub pi_idle: f64,
    /// Set when the chain is the period-2 flip chain (`p_ii = 0`, `p_bi = 1`);
    /// `pi_idle` is then the time-average 0.5 rather than a limit.
    pub periodic: bool,
}

/// Stationary idle probability `pi = p_bi / (1 - p_ii + p_bi)`.
///
/// The reducible chain (`p_ii = 1`, `p_bi = 0`) has no unique stationary
/// distribution and is rejected. The periodic flip chain is reported as the
/// time-average 0.5 with [`StationaryIdle::periodic`] set.
pub fn stationary_distribution(chain: &ChannelChain) -> Result<StationaryIdle, ChannelError> {
    if chain.p_ii == 1.0 && chain.p_bi == 0.0 {
        return Err(ChannelError::ReducibleChain);
    }
    if chain.p_ii == 0.0 && chain.p_bi == 1.0 {
        return Ok(StationaryIdle { pi_idle: 0.5, periodic: true });
    }
    let pi = chain.p_bi / (1.0 - chain.p_ii + chain.p_bi);
    Ok(StationaryIdle { pi_idle: pi, periodic: false })
}

/// Explicit joint transition matrix over all `2^n` occupancy patterns.
///
/// Row `s` holds the distribution of the next pattern given current pattern
/// `s`; bit `k` of a pattern index is channel `k` (set = idle).
#[derive(Debug, Clone, PartialEq)]
pub struct JointMatrix {
    n_channels: usize,
    /// Row-major `2^n x 2^n` transition probabilities.
    rows: Vec<f64>,
}

/// Row sums may deviate from exactly 1 by at most this much.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

impl JointMatrix {
    /// Validates and wraps a row-major `2^n x 2^n` matrix.
    pub fn new(n_channels: usize, rows: Vec<f64>) -> Result<Self, ChannelError> {
        if n_channels == 0 {
            return Err(ChannelError::EmptyChannelSet);
        }
        if n_channels > MAX_JOINT_CHANNELS {
            return Err(ChannelError::JointTooLarge { n: n_channels });
        }
        let dim = 1usize << n_channels;
        if rows.len() != dim * dim {
            return Err(ChannelError::MatrixShape { expected: dim * dim, got: rows.len() });
        }
        for (r, row) in rows.chunks(dim).enumerate() {
            let mut sum = 0.0;
            for &v in row {
                if !(0.0..=1.0 + ROW_SUM_TOLERANCE).contains(&v) || !v.is_finite() {
                    return Err(ChannelError::InvalidProbability { name: "joint entry", value: v });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(ChannelError::RowSum { row: r, sum });
            }
        }
        Ok(Self { n_channels, rows })
    }

    /// Tensor product of independent per-channel chains: the joint matrix that
    /// reproduces product-mode dynamics exactly.
    pub fn from_product(chains: &[ChannelChain]) -> Result<Self, ChannelError> {
        if chains.is_empty() {
            return Err(ChannelError::EmptyChannelSet);
        }
        if chains.len() > MAX_JOINT_CHANNELS {
            return Err(ChannelError::JointTooLarge { n: chains.len() });
        }
        let n = chains.len();
        let dim = 1usize << n;
        let mut rows = Vec::with_capacity(dim * dim);
        for s in 0..dim {
            for t in 0..dim {
                let mut p = 1.0;
                for (k, chain) in chains.iter().enumerate() {
                    let idle_now = s >> k & 1 == 1;
                    let idle_next = t >> k & 1 == 1;
                    let p_idle_next = if idle_now { chain.p_ii } else { chain.p_bi };
                    p *= if idle_next { p_idle_next } else { 1.0 - p_idle_next };
                }
                rows.push(p);
            }
        }
        Ok(Self { n_channels: n, rows })
    }

    /// Number of channels covered by the matrix.
    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// Transition probability from pattern `from` to pattern `to`.
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        let dim = 1usize << self.n_channels;
        self.rows[from * dim + to]
    }

    /// Row `from` as a slice over destination patterns.
    pub fn row(&self, from: usize) -> &[f64] {
        let dim = 1usize << self.n_channels;
        &self.rows[from * dim..(from + 1) * dim]
    }

    /// Stationary pattern distribution by power iteration from uniform.
    ///
    /// Converges geometrically for ergodic matrices; iteration stops once the
    /// L1 change drops below 1e-14 (or after 4096 rounds for degenerate
    /// matrices, returning the time-average-like iterate reached).
    pub fn stationary_pattern(&self) -> Vec<f64> {
        let dim = 1usize << self.n_channels;
        let mut dist = alloc::vec![1.0 / dim as f64; dim];
        let mut next = alloc::vec![0.0; dim];
        for _ in 0..4096 {
            next.iter_mut().for_each(|v| *v = 0.0);
            for (s, &p) in dist.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (t, &q) in self.row(s).iter().enumerate() {
                    next[t] += p * q;
                }
            }
            let l1: f64 = dist.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            core::mem::swap(&mut dist, &mut next);
            if l1 < 1e-14 {
                break;
            }
        }
        dist
    }
}

/// How the occupancy state is initialised at slot 0.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialOccupancy {
    /// Sample each channel independently from its stationary distribution.
    Stationary,
    /// Start from a fixed pattern (`true` = idle), one entry per channel.
    Fixed(Vec<bool>),
}

/// Evolution mode for a channel set.
#[derive(Debug, Clone, PartialEq)]
enum OccupancyMode {
    Product,
    Joint(JointMatrix),
}

/// Discrete-time occupancy process over a set of channels.
///
/// Construction validates the chain set; the state starts all-idle and should
/// be initialised with [`OccupancyProcess::reset`] before use so runs are
/// explicit about their starting distribution.
#[derive(Debug, Clone)]
pub struct OccupancyProcess {
    chains: Vec<ChannelChain>,
    mode: OccupancyMode,
    state: Vec<bool>,
    slot: u64,
}

impl OccupancyProcess {
    /// Product-mode process: channels evolve independently.
    pub fn new(chains: Vec<ChannelChain>) -> Result<Self, ChannelError> {
        if chains.is_empty() {
            return Err(ChannelError::EmptyChannelSet);
        }
        let n = chains.len();
        Ok(Self { chains, mode: OccupancyMode::Product, state: alloc::vec![true; n], slot: 0 })
    }

    /// Joint-matrix mode: patterns evolve under `matrix`, which must cover
    /// exactly the given channels.
    pub fn with_joint_matrix(
        chains: Vec<ChannelChain>,
        matrix: JointMatrix,
    ) -> Result<Self, ChannelError> {
        if chains.is_empty() {
            return Err(ChannelError::EmptyChannelSet);
        }
        if matrix.n_channels() != chains.len() {
            return Err(ChannelError::StateMismatch {
                expected: chains.len(),
                got: matrix.n_channels(),
            });
        }
        let n = chains.len();
        Ok(Self {
            chains,
            mode: OccupancyMode::Joint(matrix),
            state: alloc::vec![true; n],
            slot: 0,
        })
    }

    /// Re-initialises the state and resets the slot counter to 0.
    ///
    /// Stationary initialisation draws one uniform per channel in index order
    /// (product mode) or a single uniform against the joint stationary law
    /// (joint mode), so a given RNG seed always yields the same starting
    /// pattern.
    pub fn reset<R: Rng + ?Sized>(
        &mut self,
        init: &InitialOccupancy,
        rng: &mut R,
    ) -> Result<(), ChannelError> {
        match init {
            InitialOccupancy::Stationary => match &self.mode {
                OccupancyMode::Product => {
                    for k in 0..self.chains.len() {
                        let pi = stationary_distribution(&self.chains[k])?.pi_idle;
                        self.state[k] = rng.gen::<f64>() < pi;
                    }
                }
                OccupancyMode::Joint(matrix) => {
                    let dist = matrix.stationary_pattern();
                    let u: f64 = rng.gen();
                    let mut acc = 0.0;
                    let mut pattern = dist.len() - 1;
                    for (i, &p) in dist.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            pattern = i;
                            break;
                        }
                    }
                    for k in 0..self.state.len() {
                        self.state[k] = pattern >> k & 1 == 1;
                    }
                }
            },
            InitialOccupancy::Fixed(pattern) => {
                if pattern.len() != self.chains.len() {
                    return Err(ChannelError::StateMismatch {
                        expected: self.chains.len(),
                        got: pattern.len(),
                    });
                }
                self.state.copy_from_slice(pattern);
            }
        }
        self.slot = 0;
        Ok(())
    }

    /// Advances one slot and returns the new state.
    ///
    /// Product mode draws one uniform per channel in index order; joint mode
    /// draws a single uniform and walks the cumulative row, so trajectories
    /// are reproducible for a fixed seed in either mode.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[bool] {
        match &self.mode {
            OccupancyMode::Product => {
                for (k, chain) in self.chains.iter().enumerate() {
                    let p_idle = if self.state[k] { chain.p_ii } else { chain.p_bi };
                    self.state[k] = rng.gen::<f64>() < p_idle;
                }
            }
            OccupancyMode::Joint(matrix) => {
                let from = pattern_index(&self.state);
                let row = matrix.row(from);
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut to = row.len() - 1; // land on the last pattern if rounding leaves a sliver
                for (i, &p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        to = i;
                        break;
                    }
                }
                for k in 0..self.state.len() {
                    self.state[k] = to >> k & 1 == 1;
                }
            }
        }
        self.slot += 1;
        &self.state
    }

    /// Current occupancy pattern (`true` = idle).
    pub fn state(&self) -> &[bool] {
        &self.state
    }

    /// Current pattern as a bit index (bit `k` set = channel `k` idle).
    pub fn state_bits(&self) -> u64 {
        self.state.iter().enumerate().map(|(k, &idle)| (idle as u64) << k).sum()
    }

    /// Slots elapsed since the last reset.
    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// The per-channel chains.
    pub fn chains(&self) -> &[ChannelChain] {
        &self.chains
    }

    /// Number of channels.
    pub fn n_channels(&self) -> usize {
        self.chains.len()
    }
}

/// Packs an idle pattern into a state index (bit `k` set = channel `k` idle).
pub fn pattern_index(state: &[bool]) -> usize {
    state.iter().enumerate().map(|(k, &idle)| (idle as usize) << k).sum()
}

/// Validation and dimension errors for channel models.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelError {
    /// A transition entry was outside `[0, 1]` or not finite.
    InvalidProbability { name: &'static str, value: f64 },
    /// Bandwidth was not a positive finite number.
    InvalidBandwidth { value: f64 },
    /// `p_ii = 1` and `p_bi = 0`: both states absorbing, no unique stationary law.
    ReducibleChain,
    /// A channel set or matrix covered zero channels.
    EmptyChannelSet,
    /// Joint-matrix mode is limited to [`MAX_JOINT_CHANNELS`] channels.
    JointTooLarge { n: usize },
    /// The joint matrix had the wrong number of entries.
    MatrixShape { expected: usize, got: usize },
    /// A joint matrix row did not sum to 1 within [`ROW_SUM_TOLERANCE`].
    RowSum { row: usize, sum: f64 },
    /// A pattern or matrix did not match the channel count.
    StateMismatch { expected: usize, got: usize },
}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidProbability { name, value } => {
                write!(f, "{name} = {value} is not a probability in [0, 1]")
            }
            Self::InvalidBandwidth { value } => {
                write!(f, "bandwidth = {value} must be positive and finite")
            }
            Self::ReducibleChain => {
                write!(f, "chain with p_ii = 1 and p_bi = 0 is reducible; stationary distribution undefined")
            }
            Self::EmptyChannelSet => write!(f, "channel set is empty"),
            Self::JointTooLarge { n } => {
                write!(f, "joint-matrix mode supports at most {MAX_JOINT_CHANNELS} channels, got {n}")
            }
            Self::MatrixShape { expected, got } => {
                write!(f, "joint matrix needs {expected} entries, got {got}")
            }
            Self::RowSum { row, sum } => {
                write!(f, "joint matrix row {row} sums to {sum}, expected 1 within {ROW_SUM_TOLERANCE}")
            }
            Self::StateMismatch { expected, got } => {
                write!(f, "expected {expected} channels, got {got}")
            }
        }
    }
}

impl core::error::Error for ChannelError {}
