//! Disk-model geometry: where spectrum opportunities exist in space.
//!
//! A secondary link `tx -> rx` has an opportunity on a channel exactly when
//! two disks are clear: no active primary *receiver* within `r_tx` of the
//! secondary transmitter (so the transmission cannot trample a primary
//! reception), and no active primary *transmitter* within `r_rx` of the
//! secondary receiver (so the reception itself is clean). Both disks are
//! closed: a node exactly on the boundary blocks the opportunity.
//!
//! Primary receivers are hard to detect directly, so a practical transmitter
//! falls back to detecting primary *transmitters* out to `R_p + r_tx`, where
//! `R_p` is the primary coverage radius. Every receiver sits within `R_p` of
//! the transmitter it listens to, so this test is conservative: it never
//! declares an opportunity that would hit a primary receiver, at the cost of
//! overlooking real opportunities. The exact receiver-side test additionally
//! needs cooperation from the secondary receiver (an RTS/CTS style exchange),
//! which [`Topology::rts_cts_opportunity`] models in both variants.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// A planar position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    /// Euclidean distance to another point.
    pub fn distance(&self, other: &Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

/// What a primary node does on one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelRole {
    /// Radiates on the channel; blocks nearby secondary receivers.
    Transmitting,
    /// Listens on the channel; must be protected from secondary transmitters.
    Receiving,
    /// Not using the channel.
    Silent,
}

/// A primary-system node with a fixed role per channel.
///
/// Roles are constant over a run; `active_slots` optionally restricts the
/// node's activity to a half-open slot window `[start, end)` (outside it the
/// node is silent on every channel).
#[derive(Debug, Clone, PartialEq)]
pub struct PrimaryNode {
    /// Identifier used by configs and reports.
    pub id: String,
    pub position: Point,
    /// Role on each channel; length must equal the topology channel count.
    pub roles: Vec<ChannelRole>,
    /// Active slot window `[start, end)`; `None` means always active.
    pub active_slots: Option<(u64, u64)>,
}

impl PrimaryNode {
    /// Whether the node plays `role` on `channel` at `slot`.
    fn is_active(&self, role: ChannelRole, channel: usize, slot: u64) -> bool {
        let in_window = match self.active_slots {
            Some((start, end)) => (start..end).contains(&slot),
            None => true,
        };
        in_window && self.roles[channel] == role
    }
}

/// A secondary transmitter/receiver pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondaryPair {
    /// Identifier used by configs and reports.
    pub id: String,
    pub tx: Point,
    pub rx: Point,
}

/// Disk-model radii and propagation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskParams {
    /// Interference radius around a secondary transmitter.
    pub r_tx: f64,
    /// Sensitivity radius around a secondary receiver.
    pub r_rx: f64,
    /// Primary coverage radius: receivers lie within this of their transmitter.
    pub r_p: f64,
    /// Path-loss exponent used by the power caps.
    pub alpha: f64,
}

/// How the transmitter side of an RTS/CTS handshake decides clearance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectMode {
    /// Genie test against actual primary receivers within `r_tx`.
    Exact,
    /// Listen-only test against primary transmitters within `R_p + r_tx`.
    Conservative,
}

/// A static layout of primary nodes and secondary pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    n_channels: usize,
    params: DiskParams,
    primaries: Vec<PrimaryNode>,
    secondaries: Vec<SecondaryPair>,
}

impl Topology {
    /// Validates and assembles a topology.
    ///
    /// Checks that the disk parameters are positive and finite, every node's
    /// role list covers all channels, and every receiving node has a
    /// transmitting node on the same channel within `R_p` — the pairing that
    /// makes the conservative detector sound.
    pub fn new(
        n_channels: usize,
        params: DiskParams,
        primaries: Vec<PrimaryNode>,
        secondaries: Vec<SecondaryPair>,
    ) -> Result<Self, GeometryError> {
        if n_channels == 0 {
            return Err(GeometryError::NoChannels);
        }
        for (name, value) in [
            ("r_tx", params.r_tx),
            ("r_rx", params.r_rx),
            ("r_p", params.r_p),
            ("alpha", params.alpha),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(GeometryError::InvalidParameter { name, value });
            }
        }
        for (i, node) in primaries.iter().enumerate() {
            if node.roles.len() != n_channels {
                return Err(GeometryError::RoleLength {
                    node: i,
                    expected: n_channels,
                    got: node.roles.len(),
                });
            }
        }
        for (i, node) in primaries.iter().enumerate() {
            for (c, &role) in node.roles.iter().enumerate() {
                if role != ChannelRole::Receiving {
                    continue;
                }
                let covered = primaries.iter().any(|other| {
                    other.roles[c] == ChannelRole::Transmitting
                        && other.position.distance(&node.position) <= params.r_p
                });
                if !covered {
                    return Err(GeometryError::OrphanReceiver { node: i, channel: c });
                }
            }
        }
        Ok(Self { n_channels, params, primaries, secondaries })
    }

    /// Number of channels roles are defined over.
    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// Disk parameters.
    pub fn params(&self) -> &DiskParams {
        &self.params
    }

    /// Primary nodes.
    pub fn primaries(&self) -> &[PrimaryNode] {
        &self.primaries
    }

    /// Secondary pairs.
    pub fn secondaries(&self) -> &[SecondaryPair] {
        &self.secondaries
    }

    /// Index of the secondary pair with the given id.
    pub fn pair_index(&self, id: &str) -> Option<usize> {
        self.secondaries.iter().position(|p| p.id == id)
    }

    fn pair(&self, index: usize) -> Result<&SecondaryPair, GeometryError> {
        self.secondaries.get(index).ok_or(GeometryError::UnknownPair { index })
    }

    fn check_channel(&self, channel: usize) -> Result<(), GeometryError> {
        if channel >= self.n_channels {
            return Err(GeometryError::UnknownChannel { channel });
        }
        Ok(())
    }

    /// Distance from `point` to the nearest node active as `role` on
    /// `channel` at `slot`, if any.
    fn nearest_active(
        &self,
        point: &Point,
        role: ChannelRole,
        channel: usize,
        slot: u64,
    ) -> Option<f64> {
        self.primaries
            .iter()
            .filter(|n| n.is_active(role, channel, slot))
            .map(|n| n.position.distance(point))
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    }

    /// Whether any node active as `role` lies within `radius` (closed disk)
    /// of `point`.
    fn any_within(
        &self,
        point: &Point,
        role: ChannelRole,
        channel: usize,
        slot: u64,
        radius: f64,
    ) -> bool {
        self.nearest_active(point, role, channel, slot)
            .is_some_and(|d| d <= radius)
    }

    /// Ground-truth spectrum opportunity for a secondary pair on a channel:
    /// no active primary receiver within `r_tx` of the pair's transmitter and
    /// no active primary transmitter within `r_rx` of its receiver.
    pub fn is_opportunity(
        &self,
        pair: usize,
        channel: usize,
        slot: u64,
    ) -> Result<bool, GeometryError> {
        self.check_channel(channel)?;
        let pair = self.pair(pair)?;
        let tx_clear =
            !self.any_within(&pair.tx, ChannelRole::Receiving, channel, slot, self.params.r_tx);
        let rx_clear =
            !self.any_within(&pair.rx, ChannelRole::Transmitting, channel, slot, self.params.r_rx);
        Ok(tx_clear && rx_clear)
    }

    /// Listen-only opportunity detection at the secondary transmitter: clear
    /// when no active primary transmitter lies within `R_p + r_tx`.
    ///
    /// Sound but not complete: a `true` never conflicts with a primary
    /// receiver near the transmitter, while a `false` may overlook a real
    /// opportunity (the detection disk is larger than necessary).
    pub fn conservative_detect(
        &self,
        pair: usize,
        channel: usize,
        slot: u64,
    ) -> Result<bool, GeometryError> {
        self.check_channel(channel)?;
        let pair = self.pair(pair)?;
        let radius = self.params.r_p + self.params.r_tx;
        Ok(!self.any_within(&pair.tx, ChannelRole::Transmitting, channel, slot, radius))
    }

    /// Joint transmitter/receiver clearance with an RTS/CTS style exchange:
    /// the transmitter checks its own disk (per `mode`) and the receiver
    /// confirms no active primary transmitter within `r_rx`.
    ///
    /// With [`DetectMode::Exact`] this coincides with [`Self::is_opportunity`].
    pub fn rts_cts_opportunity(
        &self,
        pair: usize,
        channel: usize,
        slot: u64,
        mode: DetectMode,
    ) -> Result<bool, GeometryError> {
        let tx_clear = match mode {
            DetectMode::Exact => {
                self.check_channel(channel)?;
                let p = self.pair(pair)?;
                !self.any_within(&p.tx, ChannelRole::Receiving, channel, slot, self.params.r_tx)
            }
            DetectMode::Conservative => self.conservative_detect(pair, channel, slot)?,
        };
        let p = self.pair(pair)?;
        let rx_clear =
            !self.any_within(&p.rx, ChannelRole::Transmitting, channel, slot, self.params.r_rx);
        Ok(tx_clear && rx_clear)
    }

    /// Power cap from the nearest active primary receiver:
    /// `eta * d^alpha`, or infinity when no receiver is active on the channel.
    pub fn power_bound_exact(
        &self,
        pair: usize,
        channel: usize,
        slot: u64,
        eta: f64,
    ) -> Result<f64, GeometryError> {
        self.check_channel(channel)?;
        let p = self.pair(pair)?;
        Ok(
            match self.nearest_active(&p.tx, ChannelRole::Receiving, channel, slot) {
                Some(d) => power_cap(eta, d, self.params.alpha)?,
                None => f64::INFINITY,
            },
        )
    }

    /// Power cap from the nearest active primary transmitter, discounting the
    /// coverage radius: `eta * (d - R_p)^alpha`, zero inside coverage, or
    /// infinity when no transmitter is active on the channel.
    pub fn power_bound_conservative(
        &self,
        pair: usize,
        channel: usize,
        slot: u64,
        eta: f64,
    ) -> Result<f64, GeometryError> {
        self.check_channel(channel)?;
        let p = self.pair(pair)?;
        Ok(
            match self.nearest_active(&p.tx, ChannelRole::Transmitting, channel, slot) {
                Some(d) => power_cap_conservative(eta, d, self.params.alpha, self.params.r_p)?,
                None => f64::INFINITY,
            },
        )
    }
}

/// Transmission power cap `eta * d^alpha` for a transmitter at distance `d`
/// from the nearest primary receiver.
pub fn power_cap(eta: f64, distance: f64, alpha: f64) -> Result<f64, GeometryError> {
    validate_power_args(eta, distance, alpha)?;
    Ok(eta * libm::pow(distance, alpha))
}

/// Conservative power cap `eta * (d - r_p)^alpha` for a transmitter at
/// distance `d` from the nearest primary *transmitter*: the unheard receiver
/// could be anywhere inside that transmitter's coverage disk, so only the
/// margin beyond `r_p` counts. Zero when `d <= r_p`.
pub fn power_cap_conservative(
    eta: f64,
    distance: f64,
    alpha: f64,
    r_p: f64,
) -> Result<f64, GeometryError> {
    validate_power_args(eta, distance, alpha)?;
    if !(r_p > 0.0) || !r_p.is_finite() {
        return Err(GeometryError::InvalidParameter { name: "r_p", value: r_p });
    }
    if distance <= r_p {
        return Ok(0.0);
    }
    Ok(eta * libm::pow(distance - r_p, alpha))
}

fn validate_power_args(eta: f64, distance: f64, alpha: f64) -> Result<(), GeometryError> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(GeometryError::InvalidParameter { name: "eta", value: eta });
    }
    if !(distance >= 0.0) || !distance.is_finite() {
        return Err(GeometryError::InvalidParameter { name: "distance", value: distance });
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(GeometryError::InvalidParameter { name: "alpha", value: alpha });
    }
    Ok(())
}

/// Validation and lookup errors for topologies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometryError {
    /// A topology needs at least one channel.
    NoChannels,
    /// A radius, exponent, or power argument was nonpositive or not finite.
    InvalidParameter { name: &'static str, value: f64 },
    /// A node's role list did not cover every channel.
    RoleLength { node: usize, expected: usize, got: usize },
    /// A receiving node had no transmitting node within `R_p` on the channel.
    OrphanReceiver { node: usize, channel: usize },
    /// Secondary pair index out of range.
    UnknownPair { index: usize },
    /// Channel index out of range.
    UnknownChannel { channel: usize },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoChannels => write!(f, "topology needs at least one channel"),
            Self::InvalidParameter { name, value } => {
                write!(f, "{name} = {value} must be positive and finite")
            }
            Self::RoleLength { node, expected, got } => {
                write!(f, "primary node {node} lists {got} roles, expected {expected}")
            }
            Self::OrphanReceiver { node, channel } => write!(
                f,
                "primary node {node} receives on channel {channel} with no transmitter within r_p"
            ),
            Self::UnknownPair { index } => write!(f, "no secondary pair at index {index}"),
            Self::UnknownChannel { channel } => write!(f, "no channel {channel}"),
        }
    }
}

impl core::error::Error for GeometryError {}
