//! Executes scenarios: seeded tracking runs, parameter sweeps, and the
//! report files they produce.
//!
//! A run writes, into one output directory: a per-slot trace per seed
//! (`trace_seed<k>.csv`), per-seed figures (`metrics.csv`), throughput over
//! time (`windows.csv`), and a human-readable `summary.txt` stamped with the
//! SHA-256 of the scenario text. A sweep writes `sweep.csv` with one row per
//! grid value, all points sharing the same seeds so curves differ only
//! through the swept parameter. Everything is deterministic: running the
//! same scenario twice produces byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use osa_core::channel::stationary_distribution;
use osa_core::detector::{energy_roc_analytic, DetectorError, EnergyDetectorSpec, RocCurve};
use osa_core::geometry::DetectMode;
use osa_core::policy::{PolicyError, PolicyGate, PolicySet};
use osa_core::tracker::{
    run_tracking, value_iteration, AllowAll, RunConfig, SensingPolicy, Strategy, TrackRecord,
    TrackerError, ValueIterationConfig,
};
use thiserror::Error;

use crate::formats::{load_policy, load_roc, FormatError};
use crate::metrics::{
    aggregate, collision_in_space, mean_se, seed_metrics, windowed_throughput, Aggregate,
    SeedMetrics, WindowPoint,
};
use crate::scenario::{DetectorSpec, RocSource, Scenario, StrategyKind};

/// Errors from executing a scenario.
#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Sweep(String),
}

/// Operating point (and optionally the curve it came from) after resolving
/// the detector section.
#[derive(Debug, Clone)]
pub struct ResolvedDetector {
    pub epsilon: f64,
    pub delta: f64,
    pub curve: Option<RocCurve>,
}

/// Turns a detector spec into a concrete operating point.
pub fn resolve_detector(spec: &DetectorSpec) -> Result<ResolvedDetector, RunnerError> {
    Ok(match spec {
        DetectorSpec::Fixed { epsilon, delta } => {
            ResolvedDetector { epsilon: *epsilon, delta: *delta, curve: None }
        }
        DetectorSpec::Curve { source, delta } => {
            let curve = match source {
                RocSource::File(path) => load_roc(path)?,
                RocSource::Binormal(d) => RocCurve::binormal(*d),
                RocSource::Energy { snr, samples } => {
                    energy_roc_analytic(&EnergyDetectorSpec::new(*snr, *samples, 1.0)?)
                }
            };
            ResolvedDetector { epsilon: curve.epsilon_at(*delta), delta: *delta, curve: Some(curve) }
        }
        DetectorSpec::Energy { snr, samples, threshold } => {
            let spec = EnergyDetectorSpec::new(*snr, *samples, *threshold)?;
            let point = spec.operating_point();
            ResolvedDetector {
                epsilon: point.epsilon,
                delta: point.delta,
                curve: Some(energy_roc_analytic(&spec)),
            }
        }
    })
}

/// Compliance counts after auditing every seed's record.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplianceTotals {
    /// Contiguous same-channel transmissions across all seeds.
    pub transmissions: usize,
    /// Transmissions the policy would not have allowed as they happened.
    pub violations: usize,
}

/// Everything a run produced, besides the files on disk.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub per_seed: Vec<SeedMetrics>,
    pub aggregate: Aggregate,
    pub windows: Vec<WindowPoint>,
    /// Present when the scenario references a policy.
    pub compliance: Option<ComplianceTotals>,
    pub config_hash: String,
}

/// One row of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// The swept value.
    pub value: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub zeta: f64,
    pub throughput_mean: f64,
    pub throughput_se: f64,
    /// `None` when no seed had a sensed-busy slot.
    pub collision_conditional: Option<(f64, f64)>,
    pub collision_unconditional: (f64, f64),
}

/// Result of a sweep.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub config_hash: String,
}

/// Which scenario parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Miss probability along the configured operating characteristic.
    Delta,
    /// Interference constraint.
    Zeta,
    /// Energy-detector SNR at the configured threshold and sample count.
    Snr,
    /// Value-iteration lookahead depth.
    Horizon,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Delta => "delta",
            Self::Zeta => "zeta",
            Self::Snr => "snr",
            Self::Horizon => "horizon",
        }
    }
}

/// Parameters for one batch of seeded runs.
struct PointParams {
    epsilon: f64,
    delta: f64,
    zeta: f64,
    horizon: usize,
}

/// Runs every seed at fixed parameters and collects records.
fn run_seeds(
    scenario: &Scenario,
    params: &PointParams,
    seeds: &[u64],
    policy_set: Option<&PolicySet>,
) -> Result<Vec<TrackRecord>, RunnerError> {
    let vi_policy: Option<SensingPolicy> = match scenario.strategy {
        StrategyKind::ValueIteration => {
            let mut config = ValueIterationConfig::new(params.horizon as u32);
            if let Some(g) = scenario.grid_points {
                config.grid_points = g;
            }
            Some(value_iteration(
                &scenario.chains,
                params.epsilon,
                params.delta,
                params.zeta,
                config,
            )?)
        }
        _ => None,
    };
    let strategy = match scenario.strategy {
        StrategyKind::Static => Strategy::Static,
        StrategyKind::Myopic => Strategy::Myopic,
        StrategyKind::ValueIteration => {
            Strategy::ValueIteration(vi_policy.as_ref().expect("built above"))
        }
    };
    let config = RunConfig {
        chains: &scenario.chains,
        joint_matrix: None,
        initial: scenario.initial.clone(),
        epsilon: params.epsilon,
        delta: params.delta,
        zeta: params.zeta,
        slots: scenario.slots,
    };
    let mut records = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let record = match (policy_set, &scenario.policy) {
            (Some(set), Some(pref)) => {
                let mut gate =
                    PolicyGate::new(set, pref.power, pref.location, &pref.detector_class);
                let record = run_tracking(&config, strategy, &mut gate, seed)?;
                if let Some(err) = gate.error() {
                    return Err(err.clone().into());
                }
                record
            }
            _ => run_tracking(&config, strategy, &mut AllowAll, seed)?,
        };
        records.push(record);
    }
    Ok(records)
}

/// Executes a scenario end to end and writes the report files.
pub fn execute_run(
    scenario: &Scenario,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<RunOutcome, RunnerError> {
    let detector = resolve_detector(&scenario.detector)?;
    let policy_set = match &scenario.policy {
        Some(pref) => Some(load_policy(&pref.file)?),
        None => None,
    };
    let seeds: Vec<u64> = match seed_override {
        Some(seed) => vec![seed],
        None => scenario.seeds.clone(),
    };
    let params = PointParams {
        epsilon: detector.epsilon,
        delta: detector.delta,
        zeta: scenario.zeta,
        horizon: scenario.horizon,
    };
    let records = run_seeds(scenario, &params, &seeds, policy_set.as_ref())?;

    let per_seed: Vec<SeedMetrics> = seeds
        .iter()
        .zip(&records)
        .map(|(&seed, record)| seed_metrics(seed, record))
        .collect();
    let agg = aggregate(&per_seed);
    let refs: Vec<&TrackRecord> = records.iter().collect();
    let windows = windowed_throughput(&refs, scenario.window_len());

    // Audit each record against the same policy that gated it.
    let compliance = match (&policy_set, &scenario.policy) {
        (Some(set), Some(pref)) => {
            let mut totals = ComplianceTotals::default();
            for record in &records {
                let powers = vec![pref.power; record.len()];
                let report =
                    set.check_run(record, &powers, pref.location, &pref.detector_class)?;
                totals.transmissions += report.transmissions;
                totals.violations += report.violations.len();
            }
            Some(totals)
        }
        _ => None,
    };

    std::fs::create_dir_all(out_dir)
        .map_err(|source| RunnerError::Io { path: out_dir.to_path_buf(), source })?;
    for (seed, record) in seeds.iter().zip(&records) {
        write_file(out_dir, &format!("trace_seed{seed}.csv"), &render_trace(record))?;
    }
    write_file(out_dir, "metrics.csv", &render_metrics(&per_seed))?;
    write_file(out_dir, "windows.csv", &render_windows(&windows))?;
    let outcome = RunOutcome {
        per_seed,
        aggregate: agg,
        windows,
        compliance,
        config_hash: scenario.config_hash(),
    };
    write_file(out_dir, "summary.txt", &render_summary(scenario, &detector, &outcome))?;
    Ok(outcome)
}

/// Sweeps one parameter over a grid, reusing the scenario's seeds at every
/// point, and writes `sweep.csv`.
pub fn execute_sweep(
    scenario: &Scenario,
    axis: SweepAxis,
    grid: &[f64],
    out_dir: &Path,
) -> Result<SweepOutcome, RunnerError> {
    if grid.is_empty() {
        return Err(RunnerError::Sweep("sweep grid is empty".to_string()));
    }
    let detector = resolve_detector(&scenario.detector)?;
    let policy_set = match &scenario.policy {
        Some(pref) => Some(load_policy(&pref.file)?),
        None => None,
    };
    let mut rows = Vec::with_capacity(grid.len());
    for &value in grid {
        let params = point_params(scenario, &detector, axis, value)?;
        let records = run_seeds(scenario, &params, &scenario.seeds, policy_set.as_ref())?;
        let per_seed: Vec<SeedMetrics> = scenario
            .seeds
            .iter()
            .zip(&records)
            .map(|(&seed, record)| seed_metrics(seed, record))
            .collect();
        let throughput = mean_se(
            &per_seed.iter().map(|m| m.mean_throughput).collect::<Vec<f64>>(),
        );
        let conditional: Vec<f64> =
            per_seed.iter().filter_map(|m| m.collision_conditional).collect();
        let unconditional = mean_se(
            &per_seed.iter().map(|m| m.collision_unconditional).collect::<Vec<f64>>(),
        );
        rows.push(SweepRow {
            value,
            epsilon: params.epsilon,
            delta: params.delta,
            zeta: params.zeta,
            throughput_mean: throughput.mean,
            throughput_se: throughput.se,
            collision_conditional: (!conditional.is_empty()).then(|| {
                let m = mean_se(&conditional);
                (m.mean, m.se)
            }),
            collision_unconditional: (unconditional.mean, unconditional.se),
        });
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|source| RunnerError::Io { path: out_dir.to_path_buf(), source })?;
    write_file(out_dir, "sweep.csv", &render_sweep(axis, &rows))?;
    Ok(SweepOutcome { rows, config_hash: scenario.config_hash() })
}

fn point_params(
    scenario: &Scenario,
    detector: &ResolvedDetector,
    axis: SweepAxis,
    value: f64,
) -> Result<PointParams, RunnerError> {
    let mut params = PointParams {
        epsilon: detector.epsilon,
        delta: detector.delta,
        zeta: scenario.zeta,
        horizon: scenario.horizon,
    };
    match axis {
        SweepAxis::Delta => {
            if !(0.0..=1.0).contains(&value) {
                return Err(RunnerError::Sweep(format!("delta {value} outside [0, 1]")));
            }
            let curve = detector.curve.as_ref().ok_or_else(|| {
                RunnerError::Sweep(
                    "sweeping delta needs an operating characteristic; \
                     configure the detector with `roc = ...` or an energy spec"
                        .to_string(),
                )
            })?;
            params.delta = value;
            params.epsilon = curve.epsilon_at(value);
        }
        SweepAxis::Zeta => {
            if !(0.0..1.0).contains(&value) {
                return Err(RunnerError::Sweep(format!("zeta {value} outside [0, 1)")));
            }
            params.zeta = value;
        }
        SweepAxis::Snr => {
            let DetectorSpec::Energy { samples, threshold, .. } = scenario.detector else {
                return Err(RunnerError::Sweep(
                    "sweeping snr needs an energy detector section (snr/samples/threshold)"
                        .to_string(),
                ));
            };
            let point = EnergyDetectorSpec::new(value, samples, threshold)?.operating_point();
            params.epsilon = point.epsilon;
            params.delta = point.delta;
        }
        SweepAxis::Horizon => {
            if scenario.strategy != StrategyKind::ValueIteration {
                return Err(RunnerError::Sweep(
                    "sweeping horizon needs strategy kind = value_iteration".to_string(),
                ));
            }
            if value < 1.0 || value.fract() != 0.0 {
                return Err(RunnerError::Sweep(format!(
                    "horizon grid values must be positive integers, got {value}"
                )));
            }
            params.horizon = value as usize;
        }
    }
    Ok(params)
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

fn write_file(dir: &Path, name: &str, content: &str) -> Result<(), RunnerError> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|source| RunnerError::Io { path, source })
}

fn render_trace(record: &TrackRecord) -> String {
    let n = record.n_channels();
    let mut out = String::from("slot,action,observation,accessed,state_bits,reward,collision");
    for c in 0..n {
        let _ = write!(out, ",belief_{c}");
    }
    out.push('\n');
    for slot in 0..record.len() {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            slot,
            record.actions[slot],
            if record.observations[slot].is_idle() { "idle" } else { "busy" },
            u8::from(record.accessed[slot]),
            record.state_bits[slot],
            record.rewards[slot],
            u8::from(record.collisions[slot]),
        );
        for belief in record.belief_row(slot) {
            let _ = write!(out, ",{belief}");
        }
        out.push('\n');
    }
    out
}

fn render_metrics(per_seed: &[SeedMetrics]) -> String {
    let mut out = String::from(
        "seed,slots,total_reward,mean_throughput,access_slots,busy_slots,collisions,\
         collision_conditional,collision_unconditional,overlooked_rate,gated_denials\n",
    );
    for m in per_seed {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},",
            m.seed, m.slots, m.total_reward, m.mean_throughput, m.access_slots, m.busy_slots,
            m.collisions
        );
        if let Some(c) = m.collision_conditional {
            let _ = write!(out, "{c}");
        }
        let _ = write!(out, ",{},", m.collision_unconditional);
        if let Some(o) = m.overlooked_rate {
            let _ = write!(out, "{o}");
        }
        let _ = writeln!(out, ",{}", m.gated_denials);
    }
    out
}

fn render_windows(windows: &[WindowPoint]) -> String {
    let mut out = String::from("start,end,mean_throughput\n");
    for w in windows {
        let _ = writeln!(out, "{},{},{}", w.start, w.end, w.mean_throughput);
    }
    out
}

fn render_sweep(axis: SweepAxis, rows: &[SweepRow]) -> String {
    // The first column is prefixed so no axis collides with the plain
    // epsilon/delta/zeta columns that follow.
    let mut out = format!(
        "sweep_{},epsilon,delta,zeta,throughput_mean,throughput_se,collision_conditional_mean,\
         collision_conditional_se,collision_unconditional_mean,collision_unconditional_se\n",
        axis.name()
    );
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},",
            r.value, r.epsilon, r.delta, r.zeta, r.throughput_mean, r.throughput_se
        );
        match r.collision_conditional {
            Some((mean, se)) => {
                let _ = write!(out, "{mean},{se}");
            }
            None => out.push(','),
        }
        let _ = writeln!(
            out,
            ",{},{}",
            r.collision_unconditional.0, r.collision_unconditional.1
        );
    }
    out
}

fn render_summary(
    scenario: &Scenario,
    detector: &ResolvedDetector,
    outcome: &RunOutcome,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario sha256: {}", outcome.config_hash);
    let _ = writeln!(out, "channels: {}", scenario.chains.len());
    for (i, chain) in scenario.chains.iter().enumerate() {
        let availability = match stationary_distribution(chain) {
            Ok(s) => format!("{:.6}{}", s.pi_idle, if s.periodic { " (periodic)" } else { "" }),
            Err(_) => "undefined (reducible)".to_string(),
        };
        let _ = writeln!(
            out,
            "  channel {i}: p_ii={} p_bi={} bandwidth={} stationary_idle={}",
            chain.p_ii, chain.p_bi, chain.bandwidth, availability
        );
    }
    let _ = writeln!(
        out,
        "detector: epsilon={:.6} delta={:.6}{}",
        detector.epsilon,
        detector.delta,
        if detector.curve.is_some() { " (from operating characteristic)" } else { "" }
    );
    let space = match scenario.collision_space {
        osa_core::access::CollisionSpace::PerBusySlotConditional => "conditional",
        osa_core::access::CollisionSpace::PerSlotUnconditional => "unconditional",
    };
    let _ = writeln!(out, "constraint: zeta={} collision space={space}", scenario.zeta);
    let strategy = match scenario.strategy {
        StrategyKind::Static => "static".to_string(),
        StrategyKind::Myopic => "myopic".to_string(),
        StrategyKind::ValueIteration => format!(
            "value_iteration horizon={} grid_points={}",
            scenario.horizon,
            scenario.grid_points.map_or("default".to_string(), |g| g.to_string()),
        ),
    };
    let _ = writeln!(out, "strategy: {strategy}");
    let _ = writeln!(
        out,
        "run: slots={} seeds={} window={}",
        scenario.slots,
        outcome.per_seed.len(),
        scenario.window_len()
    );
    out.push('\n');

    let agg = &outcome.aggregate;
    let _ = writeln!(
        out,
        "throughput: {:.6} +- {:.6} (se over {} seeds)",
        agg.throughput.mean, agg.throughput.se, agg.seeds
    );
    match collision_in_space(agg, scenario.collision_space) {
        Some(rate) => {
            let _ = writeln!(out, "collision rate ({space}): {:.6} +- {:.6}", rate.mean, rate.se);
        }
        None => {
            let _ = writeln!(out, "collision rate ({space}): undefined");
        }
    }
    if agg.conditional_undefined_seeds > 0 {
        let _ = writeln!(
            out,
            "note: conditional collision rate undefined in {} of {} seeds \
             (no sensed-busy slots there)",
            agg.conditional_undefined_seeds, agg.seeds
        );
    }
    match agg.overlooked {
        Some(o) => {
            let _ = writeln!(out, "overlooked opportunities: {:.6} +- {:.6}", o.mean, o.se);
        }
        None => {
            let _ = writeln!(out, "overlooked opportunities: undefined (no idle slots)");
        }
    }
    let _ = writeln!(out, "gated denials: {}", agg.gated_denials);
    if let Some(c) = outcome.compliance {
        let _ = writeln!(
            out,
            "compliance: {} transmissions audited, {} violations",
            c.transmissions, c.violations
        );
    }
    if let Some(topology) = &scenario.topology {
        out.push('\n');
        let _ = writeln!(out, "spatial screening (slot 0):");
        for (p, pair) in topology.secondaries().iter().enumerate() {
            for channel in 0..topology.n_channels() {
                // The topology was validated at parse time; lookups cannot fail.
                let opportunity = topology.is_opportunity(p, channel, 0).unwrap();
                let conservative =
                    topology.rts_cts_opportunity(p, channel, 0, DetectMode::Conservative).unwrap();
                let _ = writeln!(
                    out,
                    "  pair {} channel {channel}: opportunity={} conservative_detect={}",
                    pair.id,
                    if opportunity { "yes" } else { "no" },
                    if conservative { "yes" } else { "no" },
                );
            }
        }
    }
    out
}
