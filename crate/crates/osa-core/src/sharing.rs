//! Spectrum sharing as list coloring of a conflict graph.
//!
//! Secondary users become vertices; an edge joins two users close enough to
//! interfere. Each vertex carries a list of admissible colors — the channels
//! not claimed by any primary whose coverage disk contains the user — and a
//! coloring assigns channels so that no edge shares a color. Utilities weigh
//! assignments either by total bandwidth or by a proportional-fairness
//! criterion that favors spreading bandwidth across users.
//!
//! Two families of coloring algorithms are provided: centralized greedy
//! sweeps in a configurable vertex order, and a synchronous randomized scheme
//! in which vertices claim colors in rounds using only neighbor state, as a
//! network without a central controller would.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Point;

/// A primary transmitter that claims one channel over a coverage disk.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimaryClaim {
    pub id: String,
    pub position: Point,
    /// Coverage radius of the claim (closed disk).
    pub radius: f64,
    /// The claimed channel.
    pub channel: usize,
}

/// A secondary user competing for leftover channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondaryUser {
    pub id: String,
    pub position: Point,
}

/// A per-vertex channel assignment; an empty set means uncolored.
pub type Assignment = Vec<Vec<usize>>;

/// Vertex visiting order for the greedy sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorOrder {
    /// Vertices in index order.
    Index,
    /// Highest degree first, ties by lower index.
    MaxDegreeFirst,
}

/// How many channels one user may hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorMode {
    /// Each user takes at most one channel: the feasible one with the
    /// largest bandwidth, ties to the lowest index.
    SingleChannel,
    /// Each user takes every channel still feasible when visited.
    MultiChannel,
}

/// Assignment figure of merit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtilityModel {
    /// Total assigned bandwidth.
    Sum,
    /// `sum over users of ln(1 + assigned bandwidth)`: concave per user, so
    /// spreading bandwidth beats concentrating it.
    ProportionalFair,
}

/// Result of the distributed rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributedOutcome {
    pub assignment: Assignment,
    /// Synchronous rounds actually executed.
    pub rounds: usize,
    /// Whether every vertex ran out of feasible colors before the round cap.
    pub converged: bool,
}

/// An undirected conflict graph with per-vertex color lists.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictGraph {
    n_colors: usize,
    bandwidths: Vec<f64>,
    ids: Vec<String>,
    /// Sorted, deduplicated admissible colors per vertex.
    colors: Vec<Vec<usize>>,
    /// Sorted neighbor lists.
    adjacency: Vec<Vec<usize>>,
}

impl ConflictGraph {
    /// Builds a graph from explicit vertices and edges.
    ///
    /// Color lists may be empty (a fully covered user simply cannot be
    /// colored). Edges are undirected; duplicates are merged and self-loops
    /// rejected.
    pub fn new(
        n_colors: usize,
        bandwidths: Vec<f64>,
        vertices: Vec<(String, Vec<usize>)>,
        edges: &[(usize, usize)],
    ) -> Result<Self, SharingError> {
        if n_colors == 0 {
            return Err(SharingError::NoColors);
        }
        if bandwidths.len() != n_colors {
            return Err(SharingError::BandwidthCount {
                expected: n_colors,
                got: bandwidths.len(),
            });
        }
        for (c, &b) in bandwidths.iter().enumerate() {
            if !(b > 0.0) || !b.is_finite() {
                return Err(SharingError::BadBandwidth { color: c, value: b });
            }
        }
        let n = vertices.len();
        let mut ids = Vec::with_capacity(n);
        let mut colors = Vec::with_capacity(n);
        for (v, (id, mut list)) in vertices.into_iter().enumerate() {
            list.sort_unstable();
            list.dedup();
            if let Some(&c) = list.last() {
                if c >= n_colors {
                    return Err(SharingError::BadColor { vertex: v, color: c });
                }
            }
            ids.push(id);
            colors.push(list);
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == v {
                return Err(SharingError::SelfLoop { vertex: u });
            }
            if u >= n || v >= n {
                return Err(SharingError::BadEdge { u, v });
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { n_colors, bandwidths, ids, colors, adjacency })
    }

    /// Derives the conflict graph of a planar layout: a user's color list is
    /// every channel except those claimed by a primary whose disk covers the
    /// user, and two users conflict when their distance is at most
    /// `interference_radius` (closed disks on both counts).
    pub fn from_layout(
        n_colors: usize,
        bandwidths: Vec<f64>,
        claims: &[PrimaryClaim],
        users: &[SecondaryUser],
        interference_radius: f64,
    ) -> Result<Self, SharingError> {
        if !(interference_radius >= 0.0) || !interference_radius.is_finite() {
            return Err(SharingError::BadRadius { value: interference_radius });
        }
        for claim in claims {
            if claim.channel >= n_colors {
                return Err(SharingError::BadClaimChannel {
                    id: claim.id.clone(),
                    channel: claim.channel,
                });
            }
            if !(claim.radius > 0.0) || !claim.radius.is_finite() {
                return Err(SharingError::BadRadius { value: claim.radius });
            }
        }
        let vertices = users
            .iter()
            .map(|user| {
                let list = (0..n_colors)
                    .filter(|&c| {
                        !claims.iter().any(|claim| {
                            claim.channel == c
                                && claim.position.distance(&user.position) <= claim.radius
                        })
                    })
                    .collect();
                (user.id.clone(), list)
            })
            .collect();
        let mut edges = Vec::new();
        for u in 0..users.len() {
            for v in u + 1..users.len() {
                if users[u].position.distance(&users[v].position) <= interference_radius {
                    edges.push((u, v));
                }
            }
        }
        Self::new(n_colors, bandwidths, vertices, &edges)
    }

    pub fn n_vertices(&self) -> usize {
        self.ids.len()
    }

    pub fn n_colors(&self) -> usize {
        self.n_colors
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn vertex_id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    /// Index of the vertex with the given id.
    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id)
    }

    /// Admissible colors of a vertex, sorted ascending.
    pub fn vertex_colors(&self, v: usize) -> &[usize] {
        &self.colors[v]
    }

    /// Neighbors of a vertex, sorted ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Greedy list coloring: visit vertices in `order`, each claiming colors
    /// from its list that no already-visited neighbor holds.
    pub fn greedy(&self, order: ColorOrder, mode: ColorMode) -> Assignment {
        let n = self.n_vertices();
        let mut sweep: Vec<usize> = (0..n).collect();
        if order == ColorOrder::MaxDegreeFirst {
            // Stable sort keeps index order among equal degrees.
            sweep.sort_by(|&a, &b| self.degree(b).cmp(&self.degree(a)));
        }
        let mut assignment: Assignment = vec![Vec::new(); n];
        for &v in &sweep {
            let feasible: Vec<usize> = self.colors[v]
                .iter()
                .copied()
                .filter(|&c| !self.adjacency[v].iter().any(|&u| assignment[u].contains(&c)))
                .collect();
            match mode {
                ColorMode::MultiChannel => assignment[v] = feasible,
                ColorMode::SingleChannel => {
                    if let Some(best) = pick_widest(&feasible, &self.bandwidths) {
                        assignment[v].push(best);
                    }
                }
            }
        }
        assignment
    }

    /// Randomized distributed coloring in synchronous rounds.
    ///
    /// Each round, every vertex that can still claim a color proposes one
    /// feasible color at random along with a random priority; a proposal
    /// sticks unless a neighbor proposed the same color with higher priority
    /// (ties to the lower vertex index). Each round the globally strongest
    /// proposer wins, so the scheme always makes progress and converges to a
    /// maximal assignment within `max_rounds` when the cap is generous.
    pub fn distributed(
        &self,
        mode: ColorMode,
        max_rounds: usize,
        seed: u64,
    ) -> DistributedOutcome {
        let n = self.n_vertices();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut assignment: Assignment = vec![Vec::new(); n];
        let mut rounds = 0;
        let mut converged = false;
        while rounds < max_rounds {
            // Proposal phase: (color, priority) per active vertex.
            let mut proposals: Vec<Option<(usize, u64)>> = vec![None; n];
            let mut any_active = false;
            for v in 0..n {
                if mode == ColorMode::SingleChannel && !assignment[v].is_empty() {
                    continue;
                }
                let feasible: Vec<usize> = self.colors[v]
                    .iter()
                    .copied()
                    .filter(|&c| {
                        !assignment[v].contains(&c)
                            && !self.adjacency[v].iter().any(|&u| assignment[u].contains(&c))
                    })
                    .collect();
                if feasible.is_empty() {
                    continue;
                }
                any_active = true;
                let pick = feasible[rng.gen_range(0..feasible.len())];
                proposals[v] = Some((pick, rng.gen::<u64>()));
            }
            if !any_active {
                converged = true;
                break;
            }
            rounds += 1;
            // Resolution phase: a proposal survives unless a neighbor made a
            // stronger proposal for the same color.
            for v in 0..n {
                let Some((color, priority)) = proposals[v] else { continue };
                let beaten = self.adjacency[v].iter().any(|&u| {
                    matches!(
                        proposals[u],
                        Some((c, p)) if c == color && (p, v) > (priority, u)
                    )
                });
                if !beaten {
                    assignment[v].push(color);
                }
            }
        }
        if !converged {
            // The cap may have landed exactly on the finishing round.
            converged = (0..n).all(|v| {
                (mode == ColorMode::SingleChannel && !assignment[v].is_empty())
                    || self.colors[v].iter().all(|&c| {
                        assignment[v].contains(&c)
                            || self.adjacency[v].iter().any(|&u| assignment[u].contains(&c))
                    })
            });
        }
        for list in &mut assignment {
            list.sort_unstable();
        }
        DistributedOutcome { assignment, rounds, converged }
    }

    /// Checks that an assignment only uses listed colors, holds no
    /// duplicates, and never puts one color on both ends of an edge.
    pub fn validate(&self, assignment: &Assignment) -> Result<(), SharingError> {
        if assignment.len() != self.n_vertices() {
            return Err(SharingError::AssignmentLength {
                expected: self.n_vertices(),
                got: assignment.len(),
            });
        }
        for (v, list) in assignment.iter().enumerate() {
            for (i, &c) in list.iter().enumerate() {
                if !self.colors[v].contains(&c) {
                    return Err(SharingError::UnlistedColor { vertex: v, color: c });
                }
                if list[..i].contains(&c) {
                    return Err(SharingError::DuplicateColor { vertex: v, color: c });
                }
                for &u in &self.adjacency[v] {
                    if u > v && assignment[u].contains(&c) {
                        return Err(SharingError::ConflictingEdge { u: v, v: u, color: c });
                    }
                }
            }
        }
        Ok(())
    }

    /// Scores a valid assignment under the chosen utility model.
    pub fn utility(
        &self,
        assignment: &Assignment,
        model: UtilityModel,
    ) -> Result<f64, SharingError> {
        self.validate(assignment)?;
        let per_vertex = assignment
            .iter()
            .map(|list| list.iter().map(|&c| self.bandwidths[c]).sum::<f64>());
        Ok(match model {
            UtilityModel::Sum => per_vertex.sum(),
            UtilityModel::ProportionalFair => per_vertex.map(|b| libm::log(1.0 + b)).sum(),
        })
    }
}

/// Feasible color with the largest bandwidth, ties to the lowest index.
fn pick_widest(feasible: &[usize], bandwidths: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for &c in feasible {
        best = match best {
            Some(b) if bandwidths[c] > bandwidths[b] => Some(c),
            None => Some(c),
            keep => keep,
        };
    }
    best
}

/// Construction and validation errors for conflict graphs.
#[derive(Debug, Clone, PartialEq)]
pub enum SharingError {
    /// A graph needs at least one color.
    NoColors,
    /// Bandwidth vector length does not match the color count.
    BandwidthCount { expected: usize, got: usize },
    /// Bandwidths must be positive and finite.
    BadBandwidth { color: usize, value: f64 },
    /// A color list mentioned a color outside the palette.
    BadColor { vertex: usize, color: usize },
    /// An edge endpoint was out of range.
    BadEdge { u: usize, v: usize },
    /// Edges must join distinct vertices.
    SelfLoop { vertex: usize },
    /// A radius was nonpositive or not finite.
    BadRadius { value: f64 },
    /// A primary claim named a channel outside the palette.
    BadClaimChannel { id: String, channel: usize },
    /// Assignment vector length does not match the vertex count.
    AssignmentLength { expected: usize, got: usize },
    /// An assignment used a color missing from the vertex's list.
    UnlistedColor { vertex: usize, color: usize },
    /// An assignment repeated a color within one vertex.
    DuplicateColor { vertex: usize, color: usize },
    /// Both ends of an edge held the same color.
    ConflictingEdge { u: usize, v: usize, color: usize },
}

impl fmt::Display for SharingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoColors => write!(f, "conflict graph needs at least one color"),
            Self::BandwidthCount { expected, got } => {
                write!(f, "expected {expected} bandwidths, got {got}")
            }
            Self::BadBandwidth { color, value } => {
                write!(f, "bandwidth of color {color} is {value}, must be positive and finite")
            }
            Self::BadColor { vertex, color } => {
                write!(f, "vertex {vertex} lists color {color} outside the palette")
            }
            Self::BadEdge { u, v } => write!(f, "edge ({u}, {v}) endpoint out of range"),
            Self::SelfLoop { vertex } => write!(f, "self-loop at vertex {vertex}"),
            Self::BadRadius { value } => {
                write!(f, "radius {value} must be nonnegative and finite")
            }
            Self::BadClaimChannel { id, channel } => {
                write!(f, "primary {id} claims channel {channel} outside the palette")
            }
            Self::AssignmentLength { expected, got } => {
                write!(f, "assignment covers {got} vertices, graph has {expected}")
            }
            Self::UnlistedColor { vertex, color } => {
                write!(f, "vertex {vertex} assigned color {color} missing from its list")
            }
            Self::DuplicateColor { vertex, color } => {
                write!(f, "vertex {vertex} assigned color {color} twice")
            }
            Self::ConflictingEdge { u, v, color } => {
                write!(f, "vertices {u} and {v} share color {color} across an edge")
            }
        }
    }
}

impl core::error::Error for SharingError {}
