//! Summary statistics over tracking records: per-seed figures, cross-seed
//! aggregates, and throughput over sliding windows.

use osa_core::access::{collision_stats, CollisionSpace};
use osa_core::tracker::TrackRecord;

/// Figures for one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedMetrics {
    pub seed: u64,
    pub slots: u64,
    pub total_reward: f64,
    /// Reward per slot.
    pub mean_throughput: f64,
    /// Slots in which the link transmitted.
    pub access_slots: u64,
    /// Slots in which the sensed channel was truly busy.
    pub busy_slots: u64,
    pub collisions: u64,
    /// Collisions per sensed-busy slot; undefined when no busy slot occurred.
    pub collision_conditional: Option<f64>,
    /// Collisions per slot.
    pub collision_unconditional: f64,
    /// Fraction of slots with at least one idle channel that yielded no
    /// reward; undefined when no channel was ever idle.
    pub overlooked_rate: Option<f64>,
    /// Transmissions the access gate refused.
    pub gated_denials: u64,
}

/// Computes the per-seed figures from a finished record.
pub fn seed_metrics(seed: u64, record: &TrackRecord) -> SeedMetrics {
    let stats = collision_stats(record);
    let slots = record.len() as u64;
    let total_reward = record.total_reward();
    let mut opportunity_slots = 0u64;
    let mut overlooked = 0u64;
    for (bits, reward) in record.state_bits.iter().zip(&record.rewards) {
        if *bits != 0 {
            opportunity_slots += 1;
            if *reward == 0.0 {
                overlooked += 1;
            }
        }
    }
    SeedMetrics {
        seed,
        slots,
        total_reward,
        mean_throughput: total_reward / slots as f64,
        access_slots: stats.access_slots,
        busy_slots: stats.busy_slots,
        collisions: stats.collisions,
        collision_conditional: stats.conditional,
        collision_unconditional: stats.unconditional,
        overlooked_rate: (opportunity_slots > 0)
            .then(|| overlooked as f64 / opportunity_slots as f64),
        gated_denials: record.gated_denials,
    }
}

/// A mean with its standard error across seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    /// Standard error of the mean; zero with a single seed.
    pub se: f64,
}

/// Sample mean and standard error.
pub fn mean_se(samples: &[f64]) -> MeanSe {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return MeanSe { mean, se: 0.0 };
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    MeanSe { mean, se: (var / n).sqrt() }
}

/// Cross-seed aggregate of run metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub seeds: usize,
    pub throughput: MeanSe,
    /// Aggregated over the seeds where the rate was defined.
    pub collision_conditional: Option<MeanSe>,
    /// Seeds in which no busy slot occurred, leaving the conditional rate
    /// undefined there.
    pub conditional_undefined_seeds: usize,
    pub collision_unconditional: MeanSe,
    pub overlooked: Option<MeanSe>,
    pub gated_denials: u64,
}

/// Aggregates per-seed metrics; panics on an empty slice.
pub fn aggregate(per_seed: &[SeedMetrics]) -> Aggregate {
    assert!(!per_seed.is_empty(), "aggregate needs at least one seed");
    let throughput: Vec<f64> = per_seed.iter().map(|m| m.mean_throughput).collect();
    let conditional: Vec<f64> =
        per_seed.iter().filter_map(|m| m.collision_conditional).collect();
    let unconditional: Vec<f64> = per_seed.iter().map(|m| m.collision_unconditional).collect();
    let overlooked: Vec<f64> = per_seed.iter().filter_map(|m| m.overlooked_rate).collect();
    Aggregate {
        seeds: per_seed.len(),
        throughput: mean_se(&throughput),
        collision_conditional: (!conditional.is_empty()).then(|| mean_se(&conditional)),
        conditional_undefined_seeds: per_seed.len() - conditional.len(),
        collision_unconditional: mean_se(&unconditional),
        overlooked: (!overlooked.is_empty()).then(|| mean_se(&overlooked)),
        gated_denials: per_seed.iter().map(|m| m.gated_denials).sum(),
    }
}

/// Collision rate in the configured space, averaged over the seeds where it
/// is defined.
pub fn collision_in_space(aggregate: &Aggregate, space: CollisionSpace) -> Option<MeanSe> {
    match space {
        CollisionSpace::PerBusySlotConditional => aggregate.collision_conditional,
        CollisionSpace::PerSlotUnconditional => Some(aggregate.collision_unconditional),
    }
}

/// Mean throughput over one span of slots, averaged across seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPoint {
    /// First slot of the window.
    pub start: u64,
    /// One past the last slot.
    pub end: u64,
    pub mean_throughput: f64,
}

/// Splits the timeline into consecutive windows of `window` slots (the last
/// may be shorter) and averages the per-window throughput across records.
pub fn windowed_throughput(records: &[&TrackRecord], window: usize) -> Vec<WindowPoint> {
    assert!(window > 0, "window length must be positive");
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let slots = first.len();
    assert!(
        records.iter().all(|r| r.len() == slots),
        "all records must cover the same number of slots"
    );
    let mut points = Vec::new();
    let mut start = 0usize;
    while start < slots {
        let end = (start + window).min(slots);
        let mut sum = 0.0;
        for record in records {
            sum += record.rewards[start..end].iter().sum::<f64>();
        }
        points.push(WindowPoint {
            start: start as u64,
            end: end as u64,
            mean_throughput: sum / (records.len() * (end - start)) as f64,
        });
        start = end;
    }
    points
}

/// Mean per-slot throughput over an arbitrary span, averaged across records.
pub fn span_throughput(records: &[&TrackRecord], start: usize, end: usize) -> f64 {
    assert!(start < end, "empty span");
    let mut sum = 0.0;
    for record in records {
        sum += record.rewards[start..end].iter().sum::<f64>();
    }
    sum / (records.len() * (end - start)) as f64
}
