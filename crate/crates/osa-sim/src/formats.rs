//! Text formats for the artifacts the tools exchange: operating
//! characteristics, conflict graphs, policy rule sets, and transmission
//! requests.
//!
//! All four formats are line oriented with `#` comments, and every parse
//! error names the line it came from.

use std::path::Path;

use osa_core::detector::{RocCurve, RocPoint};
use osa_core::geometry::Point;
use osa_core::policy::{Caps, Condition, Effect, PolicyRule, PolicySet, Rect, TransmissionRequest};
use osa_core::sharing::{ConflictGraph, PrimaryClaim, SecondaryUser};
use thiserror::Error;

/// Parse failures for the exchange formats.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{message}")]
    Structure { message: String },
}

fn perr(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse { line, message: message.into() }
}

fn read(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path)
        .map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

/// Lines with comments stripped, keeping 1-based numbers for nonempty ones.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(idx, full)| {
        let line = match full.split_once('#') {
            Some((before, _)) => before.trim(),
            None => full.trim(),
        };
        (!line.is_empty()).then_some((idx + 1, line))
    })
}

fn parse_f64(line: usize, what: &str, token: &str) -> Result<f64, FormatError> {
    token.parse().map_err(|_| perr(line, format!("{what} expects a number, got `{token}`")))
}

fn parse_usize(line: usize, what: &str, token: &str) -> Result<usize, FormatError> {
    token
        .parse()
        .map_err(|_| perr(line, format!("{what} expects a nonnegative integer, got `{token}`")))
}

fn parse_u64(line: usize, what: &str, token: &str) -> Result<u64, FormatError> {
    token
        .parse()
        .map_err(|_| perr(line, format!("{what} expects a nonnegative integer, got `{token}`")))
}

// ---------------------------------------------------------------------------
// Operating characteristics: two columns, epsilon then delta
// ---------------------------------------------------------------------------

/// Renders a curve as two whitespace-separated columns with a header comment.
pub fn write_roc(curve: &RocCurve) -> String {
    let mut out = String::from("# epsilon delta\n");
    for p in curve.points() {
        out.push_str(&format!("{:e} {:e}\n", p.epsilon, p.delta));
    }
    out
}

/// Parses a two-column curve; rows must already satisfy the curve invariants
/// (epsilon strictly increasing, delta nonincreasing).
pub fn parse_roc(text: &str) -> Result<RocCurve, FormatError> {
    let mut points = Vec::new();
    for (line, content) in content_lines(text) {
        let mut words = content.split_whitespace();
        let (Some(eps), Some(delta), None) = (words.next(), words.next(), words.next()) else {
            return Err(perr(line, "expected two columns: epsilon delta"));
        };
        points.push(RocPoint {
            epsilon: parse_f64(line, "epsilon", eps)?,
            delta: parse_f64(line, "delta", delta)?,
        });
    }
    RocCurve::new(points)
        .map_err(|e| FormatError::Structure { message: format!("invalid curve: {e}") })
}

/// Reads a curve file.
pub fn load_roc(path: &Path) -> Result<RocCurve, FormatError> {
    parse_roc(&read(path)?)
}

// ---------------------------------------------------------------------------
// Conflict graphs
// ---------------------------------------------------------------------------

/// Parses a conflict-graph file.
///
/// The header gives `colors = <n>` and optionally `bandwidths = <list>`.
/// Then either an explicit graph:
///
/// ```text
/// vertex a 15 20 list:0,1
/// edge a b
/// ```
///
/// or a planar layout from which lists and edges are derived:
///
/// ```text
/// radius = 13
/// primary p1 0 0 16 0      # id x y coverage channel
/// user a 15 20
/// ```
///
/// The two styles cannot be mixed. Vertex positions in the explicit style
/// are informational only.
pub fn parse_graph(text: &str) -> Result<ConflictGraph, FormatError> {
    let mut n_colors: Option<usize> = None;
    let mut bandwidths: Option<Vec<f64>> = None;
    let mut radius: Option<f64> = None;
    let mut vertices: Vec<(String, Vec<usize>)> = Vec::new();
    let mut named_edges: Vec<(usize, String, String)> = Vec::new();
    let mut claims: Vec<PrimaryClaim> = Vec::new();
    let mut users: Vec<SecondaryUser> = Vec::new();

    for (line, content) in content_lines(text) {
        if let Some((key, value)) = content.split_once('=') {
            let (key, value) = (key.trim(), value.trim());
            match key {
                "colors" => n_colors = Some(parse_usize(line, "colors", value)?),
                "bandwidths" => {
                    let list: Result<Vec<f64>, _> = value
                        .split([' ', '\t', ','])
                        .filter(|t| !t.is_empty())
                        .map(|t| parse_f64(line, "bandwidths", t))
                        .collect();
                    bandwidths = Some(list?);
                }
                "radius" => radius = Some(parse_f64(line, "radius", value)?),
                other => return Err(perr(line, format!("unknown key `{other}`"))),
            }
            continue;
        }
        let mut words = content.split_whitespace();
        let directive = words.next().expect("content lines are nonempty");
        let mut field = |name: &str| {
            words
                .next()
                .map(str::to_string)
                .ok_or_else(|| perr(line, format!("`{directive}` is missing {name}")))
        };
        match directive {
            "vertex" => {
                let id = field("id")?;
                let _x = parse_f64(line, "x", &field("x")?)?;
                let _y = parse_f64(line, "y", &field("y")?)?;
                let list_field = field("list")?;
                let Some(list) = list_field.strip_prefix("list:") else {
                    return Err(perr(line, "vertex colors must be written as list:0,1,..."));
                };
                let colors: Result<Vec<usize>, _> = list
                    .split(',')
                    .filter(|t| !t.is_empty())
                    .map(|t| parse_usize(line, "color", t))
                    .collect();
                if vertices.iter().any(|(existing, _)| *existing == id) {
                    return Err(perr(line, format!("duplicate vertex id `{id}`")));
                }
                vertices.push((id, colors?));
            }
            "edge" => {
                named_edges.push((line, field("first endpoint")?, field("second endpoint")?));
            }
            "primary" => {
                claims.push(PrimaryClaim {
                    id: field("id")?,
                    position: Point {
                        x: parse_f64(line, "x", &field("x")?)?,
                        y: parse_f64(line, "y", &field("y")?)?,
                    },
                    radius: parse_f64(line, "coverage", &field("coverage")?)?,
                    channel: parse_usize(line, "channel", &field("channel")?)?,
                });
            }
            "user" => {
                users.push(SecondaryUser {
                    id: field("id")?,
                    position: Point {
                        x: parse_f64(line, "x", &field("x")?)?,
                        y: parse_f64(line, "y", &field("y")?)?,
                    },
                });
            }
            other => return Err(perr(line, format!("unknown directive `{other}`"))),
        }
    }

    let n_colors = n_colors
        .ok_or(FormatError::Structure { message: "missing `colors = <n>`".to_string() })?;
    let bandwidths = bandwidths.unwrap_or_else(|| vec![1.0; n_colors]);
    let explicit = !vertices.is_empty() || !named_edges.is_empty();
    let layout = !claims.is_empty() || !users.is_empty() || radius.is_some();
    if explicit && layout {
        return Err(FormatError::Structure {
            message: "mix of explicit vertex/edge lines and layout lines".to_string(),
        });
    }
    let graph = if explicit {
        let mut edges = Vec::with_capacity(named_edges.len());
        for (line, a, b) in named_edges {
            let index = |id: &str| {
                vertices
                    .iter()
                    .position(|(existing, _)| existing == id)
                    .ok_or_else(|| perr(line, format!("edge names unknown vertex `{id}`")))
            };
            edges.push((index(&a)?, index(&b)?));
        }
        ConflictGraph::new(n_colors, bandwidths, vertices, &edges)
    } else {
        let radius = radius.ok_or(FormatError::Structure {
            message: "layout graphs need `radius = <interference radius>`".to_string(),
        })?;
        ConflictGraph::from_layout(n_colors, bandwidths, &claims, &users, radius)
    };
    graph.map_err(|e| FormatError::Structure { message: format!("invalid graph: {e}") })
}

/// Reads a conflict-graph file.
pub fn load_graph(path: &Path) -> Result<ConflictGraph, FormatError> {
    parse_graph(&read(path)?)
}

// ---------------------------------------------------------------------------
// Policy rule sets
// ---------------------------------------------------------------------------

/// Parses a policy file: a top-level `default = permit|deny` plus one
/// `[rule <id>]` section per rule.
///
/// ```text
/// default = deny
///
/// [rule open-bands]
/// priority = 10
/// match.band = 0 1
/// effect = permit
/// cap.power = 1.0
/// cap.duration = 10
/// ```
///
/// Rule keys: `priority` and `effect` are required; conditions are
/// `match.band` (list), `match.region` (x_min x_max y_min y_max),
/// `match.time` (start end), and `match.detector_class` (list); caps are
/// `cap.power`, `cap.duration`, and `cap.bands` (list).
pub fn parse_policy(text: &str) -> Result<PolicySet, FormatError> {
    let mut default_effect: Option<Effect> = None;
    let mut rules: Vec<PolicyRule> = Vec::new();
    let mut current: Option<(usize, RuleDraft)> = None;

    for (line, content) in content_lines(text) {
        if let Some(header) = content.strip_prefix('[') {
            let header =
                header.strip_suffix(']').ok_or_else(|| perr(line, "unterminated section header"))?;
            let id = header
                .strip_prefix("rule")
                .map(str::trim)
                .filter(|id| !id.is_empty())
                .ok_or_else(|| perr(line, "expected `[rule <id>]`"))?;
            if let Some((at, draft)) = current.take() {
                rules.push(draft.build(at)?);
            }
            current = Some((line, RuleDraft::new(id)));
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(perr(line, "expected `key = value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        match &mut current {
            None => match key {
                "default" => default_effect = Some(parse_effect(line, value)?),
                other => {
                    return Err(perr(line, format!("unknown key `{other}` outside any rule")))
                }
            },
            Some((_, draft)) => draft.set(line, key, value)?,
        }
    }
    if let Some((at, draft)) = current.take() {
        rules.push(draft.build(at)?);
    }
    let default_effect = default_effect.ok_or(FormatError::Structure {
        message: "missing `default = permit|deny`".to_string(),
    })?;
    PolicySet::new(rules, default_effect)
        .map_err(|e| FormatError::Structure { message: format!("invalid policy: {e}") })
}

/// Reads a policy file.
pub fn load_policy(path: &Path) -> Result<PolicySet, FormatError> {
    parse_policy(&read(path)?)
}

fn parse_effect(line: usize, value: &str) -> Result<Effect, FormatError> {
    match value {
        "permit" => Ok(Effect::Permit),
        "deny" => Ok(Effect::Deny),
        other => Err(perr(line, format!("expected permit or deny, got `{other}`"))),
    }
}

fn parse_usize_list(line: usize, what: &str, value: &str) -> Result<Vec<usize>, FormatError> {
    value
        .split([' ', '\t', ','])
        .filter(|t| !t.is_empty())
        .map(|t| parse_usize(line, what, t))
        .collect()
}

struct RuleDraft {
    id: String,
    priority: Option<u32>,
    effect: Option<Effect>,
    condition: Condition,
    caps: Caps,
}

impl RuleDraft {
    fn new(id: &str) -> Self {
        Self {
            id: id.to_string(),
            priority: None,
            effect: None,
            condition: Condition::default(),
            caps: Caps::default(),
        }
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), FormatError> {
        match key {
            "priority" => {
                self.priority = Some(value.parse().map_err(|_| {
                    perr(line, format!("priority expects an integer, got `{value}`"))
                })?)
            }
            "effect" => self.effect = Some(parse_effect(line, value)?),
            "match.band" => {
                self.condition.bands = Some(parse_usize_list(line, "match.band", value)?)
            }
            "match.region" => {
                let nums: Result<Vec<f64>, _> = value
                    .split_whitespace()
                    .map(|t| parse_f64(line, "match.region", t))
                    .collect();
                let nums = nums?;
                let [x_min, x_max, y_min, y_max] = nums[..] else {
                    return Err(perr(line, "match.region expects: x_min x_max y_min y_max"));
                };
                self.condition.region = Some(Rect { x_min, x_max, y_min, y_max });
            }
            "match.time" => {
                let mut words = value.split_whitespace();
                let (Some(start), Some(end), None) = (words.next(), words.next(), words.next())
                else {
                    return Err(perr(line, "match.time expects: start end"));
                };
                self.condition.time = Some((
                    parse_u64(line, "match.time", start)?,
                    parse_u64(line, "match.time", end)?,
                ));
            }
            "match.detector_class" => {
                self.condition.detector_classes = Some(
                    value
                        .split([' ', '\t', ','])
                        .filter(|t| !t.is_empty())
                        .map(str::to_string)
                        .collect(),
                );
            }
            "cap.power" => self.caps.max_power = Some(parse_f64(line, "cap.power", value)?),
            "cap.duration" => {
                self.caps.max_duration = Some(parse_u64(line, "cap.duration", value)?)
            }
            "cap.bands" => self.caps.allowed_bands = Some(parse_usize_list(line, "cap.bands", value)?),
            other => return Err(perr(line, format!("unknown rule key `{other}`"))),
        }
        Ok(())
    }

    fn build(self, line: usize) -> Result<PolicyRule, FormatError> {
        Ok(PolicyRule {
            priority: self
                .priority
                .ok_or_else(|| perr(line, format!("rule `{}` is missing priority", self.id)))?,
            effect: self
                .effect
                .ok_or_else(|| perr(line, format!("rule `{}` is missing effect", self.id)))?,
            id: self.id,
            condition: self.condition,
            caps: self.caps,
        })
    }
}

// ---------------------------------------------------------------------------
// Transmission requests
// ---------------------------------------------------------------------------

/// Parses a request file of plain `key = value` lines: `band`, `power`,
/// `duration`, `location` (x y), `time`, and `detector_class`.
pub fn parse_request(text: &str) -> Result<TransmissionRequest, FormatError> {
    let mut band = None;
    let mut power = None;
    let mut duration = None;
    let mut location = None;
    let mut time = None;
    let mut detector_class = None;
    for (line, content) in content_lines(text) {
        let Some((key, value)) = content.split_once('=') else {
            return Err(perr(line, "expected `key = value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "band" => band = Some(parse_usize(line, "band", value)?),
            "power" => power = Some(parse_f64(line, "power", value)?),
            "duration" => duration = Some(parse_u64(line, "duration", value)?),
            "location" => {
                let mut words = value.split_whitespace();
                let (Some(x), Some(y), None) = (words.next(), words.next(), words.next()) else {
                    return Err(perr(line, "location expects: x y"));
                };
                location = Some(Point {
                    x: parse_f64(line, "location", x)?,
                    y: parse_f64(line, "location", y)?,
                });
            }
            "time" => time = Some(parse_u64(line, "time", value)?),
            "detector_class" => detector_class = Some(value.to_string()),
            other => return Err(perr(line, format!("unknown key `{other}`"))),
        }
    }
    let need = |what: &str| FormatError::Structure { message: format!("missing `{what}`") };
    Ok(TransmissionRequest {
        band: band.ok_or_else(|| need("band"))?,
        power: power.ok_or_else(|| need("power"))?,
        duration: duration.ok_or_else(|| need("duration"))?,
        location: location.ok_or_else(|| need("location"))?,
        time: time.unwrap_or(0),
        detector_class: detector_class.ok_or_else(|| need("detector_class"))?,
    })
}

/// Reads a request file.
pub fn load_request(path: &Path) -> Result<TransmissionRequest, FormatError> {
    parse_request(&read(path)?)
}
