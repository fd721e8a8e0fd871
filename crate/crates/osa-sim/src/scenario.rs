//! Scenario files: a flat, line-oriented description of one experiment.
//!
//! A scenario is divided into bracketed sections. `[channels]`, `[detector]`,
//! `[constraint]`, `[strategy]`, and `[run]` are required; `[topology]` and
//! `[policy]` are optional. Within a section each line is either a
//! `key = value` pair or, in `[topology]`, a `primary`/`pair` directive.
//! Blank lines are skipped and `#` starts a comment. Errors carry the line
//! number they were found on.
//!
//! ```text
//! [channels]
//! count = 3
//! p_ii = 0.99 0.98 0.97
//! p_bi = 0.01 0.02 0.03
//! bandwidth = 1 1 1
//! initial = busy busy busy
//!
//! [detector]
//! epsilon = 0.1
//! delta = 0.1
//!
//! [constraint]
//! zeta = 0.1
//!
//! [strategy]
//! kind = value_iteration
//! horizon = 3
//!
//! [run]
//! slots = 1500
//! seeds = 0..10
//! ```
//!
//! The raw file contents are kept verbatim so reports can carry a hash of
//! exactly what was run.

use std::path::{Path, PathBuf};

use osa_core::access::CollisionSpace;
use osa_core::channel::{ChannelChain, InitialOccupancy};
use osa_core::geometry::{
    ChannelRole, DiskParams, Point, PrimaryNode, SecondaryPair, Topology,
};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// How the sensing front end is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectorSpec {
    /// An operating point given directly.
    Fixed { epsilon: f64, delta: f64 },
    /// A point on a receiver operating characteristic, chosen by its miss
    /// probability.
    Curve { source: RocSource, delta: f64 },
    /// An energy detector at an explicit threshold.
    Energy { snr: f64, samples: u64, threshold: f64 },
}

/// Where a referenced operating characteristic comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum RocSource {
    /// Two-column text file, resolved relative to the scenario file.
    File(PathBuf),
    /// Synthetic binormal curve with the given separation.
    Binormal(f64),
    /// Analytic energy-detector curve.
    Energy { snr: f64, samples: u64 },
}

/// Which sensing strategy drives channel selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    Static,
    Myopic,
    ValueIteration,
}

/// Reference to a policy file plus the transmission parameters the link
/// would use, for gating and auditing a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRef {
    /// Rules file, resolved relative to the scenario file.
    pub file: PathBuf,
    /// Transmit power per access.
    pub power: f64,
    /// Where the link operates.
    pub location: Point,
    /// Detector certification class presented to the policy.
    pub detector_class: String,
}

/// A fully parsed scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub chains: Vec<ChannelChain>,
    pub initial: InitialOccupancy,
    pub detector: DetectorSpec,
    pub zeta: f64,
    pub collision_space: CollisionSpace,
    pub strategy: StrategyKind,
    /// Planning horizon; meaningful only for value iteration.
    pub horizon: usize,
    /// Belief-grid resolution per channel; meaningful only for value iteration.
    pub grid_points: Option<usize>,
    pub slots: u64,
    pub seeds: Vec<u64>,
    /// Throughput window length; defaults to `slots / 20` when absent.
    pub window: Option<usize>,
    pub topology: Option<Topology>,
    pub policy: Option<PolicyRef>,
    /// Verbatim file contents, hashed into reports.
    pub raw: String,
    /// Directory referenced files resolve against.
    pub base_dir: PathBuf,
}

impl Scenario {
    /// Reads and parses a scenario file.
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&raw, base_dir)
    }

    /// Parses scenario text; `base_dir` anchors relative file references.
    pub fn parse(raw: &str, base_dir: PathBuf) -> Result<Self, ScenarioError> {
        let mut sections = split_sections(raw)?;

        let channels = sections.take("channels").ok_or(missing("channels"))?;
        let detector = sections.take("detector").ok_or(missing("detector"))?;
        let constraint = sections.take("constraint").ok_or(missing("constraint"))?;
        let strategy = sections.take("strategy").ok_or(missing("strategy"))?;
        let run = sections.take("run").ok_or(missing("run"))?;
        let topology = sections.take("topology");
        let policy = sections.take("policy");
        if let Some(stray) = sections.remainder() {
            return Err(perr(stray.line, format!("unknown section [{}]", stray.name)));
        }

        let (chains, initial) = parse_channels(channels)?;
        let detector = parse_detector(detector, &base_dir)?;
        let (zeta, collision_space) = parse_constraint(constraint)?;
        let (strategy, horizon, grid_points) = parse_strategy(strategy)?;
        let (slots, seeds, window) = parse_run(run)?;
        let topology = topology.map(|s| parse_topology(s, chains.len())).transpose()?;
        let policy = policy.map(|s| parse_policy(s, &base_dir)).transpose()?;

        Ok(Scenario {
            chains,
            initial,
            detector,
            zeta,
            collision_space,
            strategy,
            horizon,
            grid_points,
            slots,
            seeds,
            window,
            topology,
            policy,
            raw: raw.to_string(),
            base_dir,
        })
    }

    /// Hex SHA-256 of the verbatim scenario text.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.raw.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            use std::fmt::Write;
            write!(hex, "{byte:02x}").expect("writing to a string cannot fail");
        }
        hex
    }

    /// Window length used for throughput-over-time reports.
    pub fn window_len(&self) -> usize {
        self.window.unwrap_or_else(|| ((self.slots / 20) as usize).max(1))
    }
}

/// Scenario reading and parsing failures.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{message}")]
    Structure { message: String },
}

fn perr(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse { line, message: message.into() }
}

fn missing(section: &str) -> ScenarioError {
    ScenarioError::Structure { message: format!("missing required section [{section}]") }
}

// ---------------------------------------------------------------------------
// Line-level structure
// ---------------------------------------------------------------------------

struct Entry {
    line: usize,
    key: String,
    value: String,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
    /// Lines without `=`, used by `[topology]` for node directives.
    directives: Vec<(usize, String)>,
}

struct Sections(Vec<Section>);

impl Sections {
    fn take(&mut self, name: &str) -> Option<Section> {
        let idx = self.0.iter().position(|s| s.name == name)?;
        Some(self.0.remove(idx))
    }

    fn remainder(&self) -> Option<&Section> {
        self.0.first()
    }
}

fn split_sections(raw: &str) -> Result<Sections, ScenarioError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, full_line) in raw.lines().enumerate() {
        let line = idx + 1;
        let text = match full_line.split_once('#') {
            Some((before, _)) => before.trim(),
            None => full_line.trim(),
        };
        if text.is_empty() {
            continue;
        }
        if let Some(name) = text.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| perr(line, "unterminated section header"))?
                .trim()
                .to_string();
            if sections.iter().any(|s| s.name == name) {
                return Err(perr(line, format!("section [{name}] appears twice")));
            }
            sections.push(Section { name, line, entries: Vec::new(), directives: Vec::new() });
            continue;
        }
        let Some(section) = sections.last_mut() else {
            return Err(perr(line, "content before the first section header"));
        };
        match text.split_once('=') {
            Some((key, value)) => section.entries.push(Entry {
                line,
                key: key.trim().to_string(),
                value: value.trim().to_string(),
            }),
            None => section.directives.push((line, text.to_string())),
        }
    }
    Ok(Sections(sections))
}

impl Section {
    /// Removes a key, erroring on duplicates.
    fn take(&mut self, key: &str) -> Result<Option<(usize, String)>, ScenarioError> {
        let mut found = None;
        let mut i = 0;
        while i < self.entries.len() {
            if self.entries[i].key == key {
                let entry = self.entries.remove(i);
                if found.is_some() {
                    return Err(perr(
                        entry.line,
                        format!("duplicate key `{key}` in [{}]", self.name),
                    ));
                }
                found = Some((entry.line, entry.value));
            } else {
                i += 1;
            }
        }
        Ok(found)
    }

    fn require(&mut self, key: &str) -> Result<(usize, String), ScenarioError> {
        self.take(key)?.ok_or_else(|| {
            perr(self.line, format!("[{}] is missing required key `{key}`", self.name))
        })
    }

    /// Errors on any key or directive left unconsumed.
    fn finish(self) -> Result<(), ScenarioError> {
        if let Some(entry) = self.entries.first() {
            return Err(perr(
                entry.line,
                format!("unknown key `{}` in [{}]", entry.key, self.name),
            ));
        }
        if let Some((line, text)) = self.directives.first() {
            let word = text.split_whitespace().next().unwrap_or(text);
            return Err(perr(*line, format!("unexpected directive `{word}` in [{}]", self.name)));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Value parsers
// ---------------------------------------------------------------------------

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ScenarioError> {
    value.parse().map_err(|_| perr(line, format!("`{key}` expects a number, got `{value}`")))
}

fn parse_u64(line: usize, key: &str, value: &str) -> Result<u64, ScenarioError> {
    value
        .parse()
        .map_err(|_| perr(line, format!("`{key}` expects a nonnegative integer, got `{value}`")))
}

fn parse_prob(line: usize, key: &str, value: &str) -> Result<f64, ScenarioError> {
    let p = parse_f64(line, key, value)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(perr(line, format!("`{key}` must lie in [0, 1], got {p}")));
    }
    Ok(p)
}

fn tokens(value: &str) -> impl Iterator<Item = &str> {
    value.split([' ', '\t', ',']).filter(|t| !t.is_empty())
}

fn parse_f64_list(
    line: usize,
    key: &str,
    value: &str,
    expected: usize,
) -> Result<Vec<f64>, ScenarioError> {
    let list: Result<Vec<f64>, _> = tokens(value).map(|t| parse_f64(line, key, t)).collect();
    let list = list?;
    if list.len() != expected {
        return Err(perr(
            line,
            format!("`{key}` lists {} values, expected {expected}", list.len()),
        ));
    }
    Ok(list)
}

fn parse_seeds(line: usize, value: &str) -> Result<Vec<u64>, ScenarioError> {
    if let Some((start, end)) = value.split_once("..") {
        let start = parse_u64(line, "seeds", start.trim())?;
        let end = parse_u64(line, "seeds", end.trim())?;
        if end <= start {
            return Err(perr(line, format!("seed range {start}..{end} is empty")));
        }
        return Ok((start..end).collect());
    }
    let seeds: Result<Vec<u64>, _> = tokens(value).map(|t| parse_u64(line, "seeds", t)).collect();
    let seeds = seeds?;
    if seeds.is_empty() {
        return Err(perr(line, "`seeds` lists no seeds"));
    }
    Ok(seeds)
}

// ---------------------------------------------------------------------------
// Section parsers
// ---------------------------------------------------------------------------

fn parse_channels(
    mut s: Section,
) -> Result<(Vec<ChannelChain>, InitialOccupancy), ScenarioError> {
    let (count_line, count) = s.require("count")?;
    let count = parse_u64(count_line, "count", &count)? as usize;
    if count == 0 {
        return Err(perr(count_line, "`count` must be at least 1"));
    }
    let (pii_line, pii) = s.require("p_ii")?;
    let p_ii = parse_f64_list(pii_line, "p_ii", &pii, count)?;
    let (pbi_line, pbi) = s.require("p_bi")?;
    let p_bi = parse_f64_list(pbi_line, "p_bi", &pbi, count)?;
    let bandwidth = match s.take("bandwidth")? {
        Some((line, value)) => parse_f64_list(line, "bandwidth", &value, count)?,
        None => vec![1.0; count],
    };
    let mut chains = Vec::with_capacity(count);
    for i in 0..count {
        let chain = ChannelChain::new(p_ii[i], p_bi[i], bandwidth[i])
            .map_err(|e| perr(pii_line, format!("channel {i}: {e}")))?;
        chains.push(chain);
    }
    let initial = match s.take("initial")? {
        None => InitialOccupancy::Stationary,
        Some((_, value)) if value == "stationary" => InitialOccupancy::Stationary,
        Some((line, value)) => {
            let states: Result<Vec<bool>, _> = tokens(&value)
                .map(|t| match t {
                    "idle" => Ok(true),
                    "busy" => Ok(false),
                    other => {
                        Err(perr(line, format!("`initial` expects idle/busy, got `{other}`")))
                    }
                })
                .collect();
            let states = states?;
            if states.len() != count {
                return Err(perr(
                    line,
                    format!("`initial` lists {} states, expected {count}", states.len()),
                ));
            }
            InitialOccupancy::Fixed(states)
        }
    };
    s.finish()?;
    Ok((chains, initial))
}

fn parse_roc_source(line: usize, value: &str, base_dir: &Path) -> Result<RocSource, ScenarioError> {
    if let Some(rest) = value.strip_prefix("binormal:") {
        let d = parse_f64(line, "roc", rest)?;
        if !(d > 0.0) || !d.is_finite() {
            return Err(perr(line, format!("binormal separation must be positive, got {d}")));
        }
        return Ok(RocSource::Binormal(d));
    }
    if let Some(rest) = value.strip_prefix("energy:") {
        let (snr, samples) = rest
            .split_once(':')
            .ok_or_else(|| perr(line, "`roc = energy:<snr>:<samples>` needs both fields"))?;
        return Ok(RocSource::Energy {
            snr: parse_f64(line, "roc", snr)?,
            samples: parse_u64(line, "roc", samples)?,
        });
    }
    Ok(RocSource::File(base_dir.join(value)))
}

fn parse_detector(mut s: Section, base_dir: &Path) -> Result<DetectorSpec, ScenarioError> {
    let roc = s.take("roc")?;
    let snr = s.take("snr")?;
    let spec = if let Some((roc_line, roc_value)) = roc {
        if let Some((line, _)) = snr {
            return Err(perr(line, "`snr` conflicts with `roc`; pick one detector form"));
        }
        let source = parse_roc_source(roc_line, &roc_value, base_dir)?;
        let (dline, dvalue) = s.require("delta")?;
        let delta = parse_prob(dline, "delta", &dvalue)?;
        DetectorSpec::Curve { source, delta }
    } else if let Some((_, snr_value)) = snr {
        let (sline, samples) = s.require("samples")?;
        let (tline, threshold) = s.require("threshold")?;
        DetectorSpec::Energy {
            snr: parse_f64(s.line, "snr", &snr_value)?,
            samples: parse_u64(sline, "samples", &samples)?,
            threshold: parse_f64(tline, "threshold", &threshold)?,
        }
    } else {
        let (eline, evalue) = s.require("epsilon")?;
        let (dline, dvalue) = s.require("delta")?;
        DetectorSpec::Fixed {
            epsilon: parse_prob(eline, "epsilon", &evalue)?,
            delta: parse_prob(dline, "delta", &dvalue)?,
        }
    };
    s.finish()?;
    Ok(spec)
}

fn parse_constraint(mut s: Section) -> Result<(f64, CollisionSpace), ScenarioError> {
    let (zline, zvalue) = s.require("zeta")?;
    let zeta = parse_prob(zline, "zeta", &zvalue)?;
    if zeta >= 1.0 {
        return Err(perr(zline, "`zeta` must be below 1"));
    }
    let space = match s.take("collision_space")? {
        None => CollisionSpace::PerBusySlotConditional,
        Some((_, v)) if v == "conditional" => CollisionSpace::PerBusySlotConditional,
        Some((_, v)) if v == "unconditional" => CollisionSpace::PerSlotUnconditional,
        Some((line, v)) => {
            return Err(perr(
                line,
                format!("`collision_space` expects conditional or unconditional, got `{v}`"),
            ))
        }
    };
    s.finish()?;
    Ok((zeta, space))
}

fn parse_strategy(mut s: Section) -> Result<(StrategyKind, usize, Option<usize>), ScenarioError> {
    let (kline, kvalue) = s.require("kind")?;
    let kind = match kvalue.as_str() {
        "static" => StrategyKind::Static,
        "myopic" => StrategyKind::Myopic,
        "value_iteration" => StrategyKind::ValueIteration,
        other => {
            return Err(perr(
                kline,
                format!("`kind` expects static, myopic, or value_iteration, got `{other}`"),
            ))
        }
    };
    let horizon = s.take("horizon")?;
    let grid_points = s.take("grid_points")?;
    if kind != StrategyKind::ValueIteration {
        if let Some((line, _)) = horizon {
            return Err(perr(line, "`horizon` only applies to value_iteration"));
        }
        if let Some((line, _)) = grid_points {
            return Err(perr(line, "`grid_points` only applies to value_iteration"));
        }
        s.finish()?;
        return Ok((kind, 1, None));
    }
    let horizon = match horizon {
        Some((line, value)) => {
            let h = parse_u64(line, "horizon", &value)? as usize;
            if h == 0 {
                return Err(perr(line, "`horizon` must be at least 1"));
            }
            h
        }
        None => return Err(perr(kline, "value_iteration requires `horizon`")),
    };
    let grid_points = match grid_points {
        Some((line, value)) => {
            let g = parse_u64(line, "grid_points", &value)? as usize;
            if g < 2 {
                return Err(perr(line, "`grid_points` must be at least 2"));
            }
            Some(g)
        }
        None => None,
    };
    s.finish()?;
    Ok((kind, horizon, grid_points))
}

fn parse_run(mut s: Section) -> Result<(u64, Vec<u64>, Option<usize>), ScenarioError> {
    let (sline, svalue) = s.require("slots")?;
    let slots = parse_u64(sline, "slots", &svalue)?;
    if slots == 0 {
        return Err(perr(sline, "`slots` must be at least 1"));
    }
    let (seed_line, seed_value) = s.require("seeds")?;
    let seeds = parse_seeds(seed_line, &seed_value)?;
    let window = match s.take("window")? {
        Some((line, value)) => {
            let w = parse_u64(line, "window", &value)? as usize;
            if w == 0 {
                return Err(perr(line, "`window` must be at least 1"));
            }
            Some(w)
        }
        None => None,
    };
    s.finish()?;
    Ok((slots, seeds, window))
}

fn parse_topology(mut s: Section, n_channels: usize) -> Result<Topology, ScenarioError> {
    let mut radius = |key: &str| -> Result<f64, ScenarioError> {
        let (line, value) = s.require(key)?;
        parse_f64(line, key, &value)
    };
    let params = DiskParams {
        r_tx: radius("r_tx")?,
        r_rx: radius("r_rx")?,
        r_p: radius("r_p")?,
        alpha: radius("alpha")?,
    };
    let section_line = s.line;
    let mut primaries = Vec::new();
    let mut pairs = Vec::new();
    for (line, text) in std::mem::take(&mut s.directives) {
        let mut words = text.split_whitespace();
        match words.next() {
            Some("primary") => {
                let id = words
                    .next()
                    .ok_or_else(|| perr(line, "`primary` needs: id x y roles..."))?;
                let x = words.next().ok_or_else(|| perr(line, "`primary` is missing x"))?;
                let y = words.next().ok_or_else(|| perr(line, "`primary` is missing y"))?;
                let roles: Result<Vec<ChannelRole>, _> = words
                    .map(|w| match w {
                        "tx" => Ok(ChannelRole::Transmitting),
                        "rx" => Ok(ChannelRole::Receiving),
                        "-" => Ok(ChannelRole::Silent),
                        other => {
                            Err(perr(line, format!("role expects tx, rx, or -, got `{other}`")))
                        }
                    })
                    .collect();
                let roles = roles?;
                if roles.len() != n_channels {
                    return Err(perr(
                        line,
                        format!("`primary` lists {} roles, expected {n_channels}", roles.len()),
                    ));
                }
                primaries.push(PrimaryNode {
                    id: id.to_string(),
                    position: Point {
                        x: parse_f64(line, "x", x)?,
                        y: parse_f64(line, "y", y)?,
                    },
                    roles,
                    active_slots: None,
                });
            }
            Some("pair") => {
                let mut field = |name: &str| {
                    words
                        .next()
                        .map(str::to_string)
                        .ok_or_else(|| perr(line, format!("`pair` is missing {name}")))
                };
                let id = field("id")?;
                let tx_x = field("tx_x")?;
                let tx_y = field("tx_y")?;
                let rx_x = field("rx_x")?;
                let rx_y = field("rx_y")?;
                pairs.push(SecondaryPair {
                    id,
                    tx: Point {
                        x: parse_f64(line, "tx_x", &tx_x)?,
                        y: parse_f64(line, "tx_y", &tx_y)?,
                    },
                    rx: Point {
                        x: parse_f64(line, "rx_x", &rx_x)?,
                        y: parse_f64(line, "rx_y", &rx_y)?,
                    },
                });
            }
            Some(other) => {
                return Err(perr(line, format!("expected `primary` or `pair`, got `{other}`")))
            }
            None => unreachable!("blank directives are filtered out"),
        }
    }
    s.finish()?;
    Topology::new(n_channels, params, primaries, pairs)
        .map_err(|e| perr(section_line, format!("invalid topology: {e}")))
}

fn parse_policy(mut s: Section, base_dir: &Path) -> Result<PolicyRef, ScenarioError> {
    let (_, file) = s.require("file")?;
    let (pline, pvalue) = s.require("power")?;
    let power = parse_f64(pline, "power", &pvalue)?;
    if !(power >= 0.0) || !power.is_finite() {
        return Err(perr(pline, format!("`power` must be nonnegative, got {pvalue}")));
    }
    let (lline, lvalue) = s.require("location")?;
    let coords = parse_f64_list(lline, "location", &lvalue, 2)?;
    let (_, detector_class) = s.require("detector_class")?;
    s.finish()?;
    Ok(PolicyRef {
        file: base_dir.join(file),
        power,
        location: Point { x: coords[0], y: coords[1] },
        detector_class,
    })
}
