//! Machine-readable regulatory policy: who may transmit, where, and how.
//!
//! A [`PolicySet`] is an ordered collection of prioritized rules plus a
//! default effect for requests no rule covers. Each rule matches on any
//! combination of band, region, time window, and detector class, and either
//! denies matching requests or permits them subject to caps on power,
//! duration, and band. Evaluation is deterministic: the highest-priority
//! matching rule decides, and two non-identical rules tied at the same
//! priority are reported as a policy authoring error rather than resolved
//! arbitrarily.
//!
//! The same rules can gate a live run slot by slot ([`PolicyGate`]) or audit
//! a finished one ([`PolicySet::check_run`]); a run gated by a policy always
//! audits clean against that policy.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::Point;
use crate::tracker::{AccessGate, TrackRecord};

/// An axis-aligned rectangle, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn contains(&self, p: &Point) -> bool {
        (self.x_min..=self.x_max).contains(&p.x) && (self.y_min..=self.y_max).contains(&p.y)
    }
}

/// What a rule applies to; `None` fields match everything.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Condition {
    /// Bands the rule covers.
    pub bands: Option<Vec<usize>>,
    /// Spatial region the rule covers.
    pub region: Option<Rect>,
    /// Slot window `[start, end)` the rule covers.
    pub time: Option<(u64, u64)>,
    /// Detector classes (certification levels) the rule covers.
    pub detector_classes: Option<Vec<String>>,
}

impl Condition {
    fn matches(&self, request: &TransmissionRequest) -> bool {
        if let Some(bands) = &self.bands {
            if !bands.contains(&request.band) {
                return false;
            }
        }
        if let Some(region) = &self.region {
            if !region.contains(&request.location) {
                return false;
            }
        }
        if let Some((start, end)) = self.time {
            if !(start..end).contains(&request.time) {
                return false;
            }
        }
        if let Some(classes) = &self.detector_classes {
            if !classes.iter().any(|c| c == &request.detector_class) {
                return false;
            }
        }
        true
    }
}

/// Limits a permitting rule may attach.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Caps {
    pub max_power: Option<f64>,
    pub max_duration: Option<u64>,
    /// When present, requests outside these bands are refused outright.
    pub allowed_bands: Option<Vec<usize>>,
}

impl Caps {
    fn is_empty(&self) -> bool {
        self.max_power.is_none() && self.max_duration.is_none() && self.allowed_bands.is_none()
    }
}

/// Whether a matching rule lets the transmission happen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effect {
    Permit,
    Deny,
}

/// One prioritized rule; higher `priority` wins.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRule {
    pub id: String,
    pub priority: u32,
    pub condition: Condition,
    pub effect: Effect,
    /// Only meaningful on permitting rules.
    pub caps: Caps,
}

/// A transmission a secondary user would like to make.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionRequest {
    pub band: usize,
    pub power: f64,
    /// Contiguous slots the transmission would occupy.
    pub duration: u64,
    pub location: Point,
    /// Slot at which the transmission starts.
    pub time: u64,
    pub detector_class: String,
}

/// Outcome of evaluating one request.
#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Yes,
    No,
    /// Permitted only after tightening to the included caps; only the caps
    /// the request exceeded are listed.
    YesWithConstraints(Caps),
}

impl Decision {
    /// Whether the request may proceed exactly as stated.
    pub fn is_unconditional_yes(&self) -> bool {
        *self == Decision::Yes
    }
}

/// A complete, prioritized rule set.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySet {
    rules: Vec<PolicyRule>,
    default_effect: Effect,
}

impl PolicySet {
    /// Validates and assembles a policy.
    ///
    /// Rules must be non-empty with unique ids; regions, time windows, caps,
    /// and condition band lists must be well formed.
    pub fn new(rules: Vec<PolicyRule>, default_effect: Effect) -> Result<Self, PolicyError> {
        if rules.is_empty() {
            return Err(PolicyError::EmptyPolicy);
        }
        for (i, rule) in rules.iter().enumerate() {
            if rules[..i].iter().any(|r| r.id == rule.id) {
                return Err(PolicyError::DuplicateRuleId { id: rule.id.clone() });
            }
            if let Some(region) = &rule.condition.region {
                if region.x_min > region.x_max || region.y_min > region.y_max {
                    return Err(PolicyError::BadRule {
                        id: rule.id.clone(),
                        reason: "region is empty",
                    });
                }
            }
            if let Some((start, end)) = rule.condition.time {
                if start >= end {
                    return Err(PolicyError::BadRule {
                        id: rule.id.clone(),
                        reason: "time window is empty",
                    });
                }
            }
            if let Some(bands) = &rule.condition.bands {
                if bands.is_empty() {
                    return Err(PolicyError::BadRule {
                        id: rule.id.clone(),
                        reason: "band condition is empty",
                    });
                }
            }
            if let Some(p) = rule.caps.max_power {
                if !(p >= 0.0) || !p.is_finite() {
                    return Err(PolicyError::BadRule {
                        id: rule.id.clone(),
                        reason: "max_power cap must be nonnegative and finite",
                    });
                }
            }
            if rule.caps.max_duration == Some(0) {
                return Err(PolicyError::BadRule {
                    id: rule.id.clone(),
                    reason: "max_duration cap must be at least one slot",
                });
            }
            if rule.caps.allowed_bands.as_deref() == Some(&[]) {
                return Err(PolicyError::BadRule {
                    id: rule.id.clone(),
                    reason: "allowed_bands cap is empty",
                });
            }
            if rule.effect == Effect::Deny && !rule.caps.is_empty() {
                return Err(PolicyError::BadRule {
                    id: rule.id.clone(),
                    reason: "deny rules cannot carry caps",
                });
            }
        }
        Ok(Self { rules, default_effect })
    }

    pub fn rules(&self) -> &[PolicyRule] {
        &self.rules
    }

    pub fn default_effect(&self) -> Effect {
        self.default_effect
    }

    /// Decides one request.
    ///
    /// The highest-priority matching rule controls; with no match the default
    /// effect applies. Two non-identical rules matching at the same top
    /// priority make the policy ambiguous for this request, which is an
    /// error, not a coin flip. A permitted request outside a rule's
    /// `allowed_bands` is refused; one exceeding power or duration caps comes
    /// back as [`Decision::YesWithConstraints`] listing just the binding
    /// caps, so a tightened resubmission passes cleanly.
    pub fn evaluate(&self, request: &TransmissionRequest) -> Result<Decision, PolicyError> {
        if !(request.power >= 0.0) || !request.power.is_finite() {
            return Err(PolicyError::BadRequest { reason: "power must be nonnegative and finite" });
        }
        if request.duration == 0 {
            return Err(PolicyError::BadRequest { reason: "duration must be at least one slot" });
        }
        let matching: Vec<&PolicyRule> =
            self.rules.iter().filter(|r| r.condition.matches(request)).collect();
        let Some(top_priority) = matching.iter().map(|r| r.priority).max() else {
            return Ok(match self.default_effect {
                Effect::Permit => Decision::Yes,
                Effect::Deny => Decision::No,
            });
        };
        let top: Vec<&&PolicyRule> =
            matching.iter().filter(|r| r.priority == top_priority).collect();
        let rule = *top[0];
        for other in &top[1..] {
            if other.effect != rule.effect || other.caps != rule.caps {
                return Err(PolicyError::AmbiguousPolicy {
                    rule_a: rule.id.clone(),
                    rule_b: other.id.clone(),
                    priority: top_priority,
                });
            }
        }
        if rule.effect == Effect::Deny {
            return Ok(Decision::No);
        }
        if let Some(bands) = &rule.caps.allowed_bands {
            if !bands.contains(&request.band) {
                return Ok(Decision::No);
            }
        }
        let mut binding = Caps::default();
        if let Some(cap) = rule.caps.max_power {
            if request.power > cap {
                binding.max_power = Some(cap);
            }
        }
        if let Some(cap) = rule.caps.max_duration {
            if request.duration > cap {
                binding.max_duration = Some(cap);
            }
        }
        Ok(if binding.is_empty() { Decision::Yes } else { Decision::YesWithConstraints(binding) })
    }

    /// Audits a finished tracking run against this policy.
    ///
    /// Consecutive accessed slots on the same channel form one transmission;
    /// each is evaluated as a request at its starting slot with the peak
    /// power seen during the run. `powers` gives the transmit power per slot
    /// and must align with the record. Every decision other than an
    /// unconditional yes becomes a violation in the report.
    pub fn check_run(
        &self,
        record: &TrackRecord,
        powers: &[f64],
        location: Point,
        detector_class: &str,
    ) -> Result<ComplianceReport, PolicyError> {
        if powers.len() != record.len() {
            return Err(PolicyError::TraceMismatch {
                expected: record.len(),
                got: powers.len(),
            });
        }
        let mut report = ComplianceReport::default();
        let mut slot = 0usize;
        while slot < record.len() {
            if !record.accessed[slot] {
                slot += 1;
                continue;
            }
            let channel = record.actions[slot] as usize;
            let start = slot;
            let mut peak_power: f64 = 0.0;
            while slot < record.len()
                && record.accessed[slot]
                && record.actions[slot] as usize == channel
            {
                peak_power = peak_power.max(powers[slot]);
                slot += 1;
            }
            let length = (slot - start) as u64;
            let request = TransmissionRequest {
                band: channel,
                power: peak_power,
                duration: length,
                location,
                time: start as u64,
                detector_class: String::from(detector_class),
            };
            report.transmissions += 1;
            match self.evaluate(&request)? {
                Decision::Yes => {}
                Decision::No => report.violations.push(Violation {
                    start_slot: start as u64,
                    channel,
                    duration: length,
                    power: peak_power,
                    kind: ViolationKind::Denied,
                }),
                Decision::YesWithConstraints(caps) => report.violations.push(Violation {
                    start_slot: start as u64,
                    channel,
                    duration: length,
                    power: peak_power,
                    kind: ViolationKind::OverCap(caps),
                }),
            }
        }
        Ok(report)
    }
}

/// One transmission the audit flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub start_slot: u64,
    pub channel: usize,
    pub duration: u64,
    pub power: f64,
    pub kind: ViolationKind,
}

/// Why a transmission was flagged.
#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    /// The controlling rule (or default) refused it outright.
    Denied,
    /// Permitted only under the included caps, which it exceeded.
    OverCap(Caps),
}

/// Result of auditing a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplianceReport {
    /// Contiguous same-channel transmissions found in the record.
    pub transmissions: usize,
    pub violations: Vec<Violation>,
}

impl ComplianceReport {
    pub fn is_compliant(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Slot-by-slot policy enforcement for a live run.
///
/// Before each transmission the gate evaluates a one-slot request at the
/// configured power and location; the duration grows along consecutive
/// permitted slots on the same channel, so a `max_duration` cap makes the
/// gate cut a transmission off rather than let an audit flag it afterwards.
/// Policy evaluation errors deny the slot and are kept for inspection.
#[derive(Debug)]
pub struct PolicyGate<'a> {
    set: &'a PolicySet,
    power: f64,
    location: Point,
    detector_class: String,
    run_channel: usize,
    run_until: Option<u64>,
    run_length: u64,
    error: Option<PolicyError>,
}

impl<'a> PolicyGate<'a> {
    pub fn new(set: &'a PolicySet, power: f64, location: Point, detector_class: &str) -> Self {
        Self {
            set,
            power,
            location,
            detector_class: String::from(detector_class),
            run_channel: 0,
            run_until: None,
            run_length: 0,
            error: None,
        }
    }

    /// First policy evaluation error hit during the run, if any.
    pub fn error(&self) -> Option<&PolicyError> {
        self.error.as_ref()
    }
}

impl AccessGate for PolicyGate<'_> {
    fn permit(&mut self, channel: usize, slot: u64) -> bool {
        let continues =
            self.run_until == Some(slot) && self.run_channel == channel && self.run_length > 0;
        let duration = if continues { self.run_length + 1 } else { 1 };
        let request = TransmissionRequest {
            band: channel,
            power: self.power,
            duration,
            location: self.location,
            time: slot + 1 - duration,
            detector_class: self.detector_class.clone(),
        };
        let permitted = match self.set.evaluate(&request) {
            Ok(decision) => decision.is_unconditional_yes(),
            Err(err) => {
                if self.error.is_none() {
                    self.error = Some(err);
                }
                false
            }
        };
        if permitted {
            self.run_channel = channel;
            self.run_length = duration;
            self.run_until = Some(slot + 1);
        } else {
            self.run_length = 0;
            self.run_until = None;
        }
        permitted
    }
}

/// Authoring and evaluation errors.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyError {
    /// A policy set needs at least one rule.
    EmptyPolicy,
    /// Two rules share an id.
    DuplicateRuleId { id: String },
    /// A rule failed structural validation.
    BadRule { id: String, reason: &'static str },
    /// A request failed structural validation.
    BadRequest { reason: &'static str },
    /// Two non-identical rules matched at the same top priority.
    AmbiguousPolicy { rule_a: String, rule_b: String, priority: u32 },
    /// A power trace did not align with the record being audited.
    TraceMismatch { expected: usize, got: usize },
}

impl fmt::Display for PolicyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyPolicy => write!(f, "policy set has no rules"),
            Self::DuplicateRuleId { id } => write!(f, "duplicate rule id {id:?}"),
            Self::BadRule { id, reason } => write!(f, "rule {id:?}: {reason}"),
            Self::BadRequest { reason } => write!(f, "bad request: {reason}"),
            Self::AmbiguousPolicy { rule_a, rule_b, priority } => write!(
                f,
                "rules {rule_a:?} and {rule_b:?} both match at priority {priority} \
                 with different outcomes"
            ),
            Self::TraceMismatch { expected, got } => {
                write!(f, "power trace has {got} slots, record has {expected}")
            }
        }
    }
}

impl core::error::Error for PolicyError {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelChain, InitialOccupancy};
    use crate::tracker::{run_tracking, AllowAll, RunConfig, Strategy};
    use alloc::string::ToString;
    use alloc::vec;

    /// Three-tier fixture: a general permit on two bands with caps, a
    /// protected zone that denies everything, and a higher-priority carve-out
    /// for certified detectors inside that zone.
    fn tiered_policy() -> PolicySet {
        let zone = Rect { x_min: -10.0, x_max: 10.0, y_min: -10.0, y_max: 10.0 };
        PolicySet::new(
            vec![
                PolicyRule {
                    id: "open-bands".to_string(),
                    priority: 10,
                    condition: Condition { bands: Some(vec![0, 1]), ..Condition::default() },
                    effect: Effect::Permit,
                    caps: Caps {
                        max_power: Some(1.0),
                        max_duration: Some(10),
                        allowed_bands: None,
                    },
                },
                PolicyRule {
                    id: "quiet-zone".to_string(),
                    priority: 20,
                    condition: Condition { region: Some(zone), ..Condition::default() },
                    effect: Effect::Deny,
                    caps: Caps::default(),
                },
                PolicyRule {
                    id: "certified-in-zone".to_string(),
                    priority: 30,
                    condition: Condition {
                        region: Some(zone),
                        detector_classes: Some(vec!["certified".to_string()]),
                        ..Condition::default()
                    },
                    effect: Effect::Permit,
                    caps: Caps { max_power: Some(0.1), ..Caps::default() },
                },
            ],
            Effect::Deny,
        )
        .unwrap()
    }

    fn request(band: usize, power: f64, duration: u64, x: f64, y: f64) -> TransmissionRequest {
        TransmissionRequest {
            band,
            power,
            duration,
            location: Point { x, y },
            time: 0,
            detector_class: "consumer".to_string(),
        }
    }

    #[test]
    fn priority_tiers_resolve_in_order() {
        let policy = tiered_policy();
        // Outside the zone, the open-bands rule permits within caps.
        assert_eq!(policy.evaluate(&request(0, 0.5, 5, 50.0, 0.0)).unwrap(), Decision::Yes);
        // Inside the zone, deny beats the open-bands permit.
        assert_eq!(policy.evaluate(&request(0, 0.5, 5, 0.0, 0.0)).unwrap(), Decision::No);
        // A certified detector outranks the zone denial.
        let mut certified = request(0, 0.05, 5, 0.0, 0.0);
        certified.detector_class = "certified".to_string();
        assert_eq!(policy.evaluate(&certified).unwrap(), Decision::Yes);
        // No matching rule: the default effect denies.
        assert_eq!(policy.evaluate(&request(5, 0.5, 5, 50.0, 0.0)).unwrap(), Decision::No);
    }

    #[test]
    fn exceeding_caps_yields_binding_constraints_and_tightening_passes() {
        let policy = tiered_policy();
        let heavy = request(1, 2.0, 20, 50.0, 0.0);
        let Decision::YesWithConstraints(caps) = policy.evaluate(&heavy).unwrap() else {
            panic!("expected constrained permit");
        };
        // Both caps bind, nothing else is attached.
        assert_eq!(caps.max_power, Some(1.0));
        assert_eq!(caps.max_duration, Some(10));
        assert_eq!(caps.allowed_bands, None);
        // Resubmitting at the caps passes unconditionally.
        let tightened = request(1, 1.0, 10, 50.0, 0.0);
        assert_eq!(policy.evaluate(&tightened).unwrap(), Decision::Yes);
        // Only the violated cap is listed.
        let long = request(1, 0.5, 20, 50.0, 0.0);
        let Decision::YesWithConstraints(caps) = policy.evaluate(&long).unwrap() else {
            panic!("expected constrained permit");
        };
        assert_eq!(caps.max_power, None);
        assert_eq!(caps.max_duration, Some(10));
    }

    #[test]
    fn band_cap_refuses_rather_than_constrains() {
        let policy = PolicySet::new(
            vec![PolicyRule {
                id: "narrow".to_string(),
                priority: 1,
                condition: Condition::default(),
                effect: Effect::Permit,
                caps: Caps { allowed_bands: Some(vec![0]), ..Caps::default() },
            }],
            Effect::Deny,
        )
        .unwrap();
        assert_eq!(policy.evaluate(&request(0, 0.1, 1, 0.0, 0.0)).unwrap(), Decision::Yes);
        assert_eq!(policy.evaluate(&request(1, 0.1, 1, 0.0, 0.0)).unwrap(), Decision::No);
    }

    #[test]
    fn time_windows_scope_rules() {
        let policy = PolicySet::new(
            vec![PolicyRule {
                id: "night-only".to_string(),
                priority: 1,
                condition: Condition { time: Some((100, 200)), ..Condition::default() },
                effect: Effect::Permit,
                caps: Caps::default(),
            }],
            Effect::Deny,
        )
        .unwrap();
        let mut r = request(0, 0.1, 1, 0.0, 0.0);
        r.time = 99;
        assert_eq!(policy.evaluate(&r).unwrap(), Decision::No);
        r.time = 100;
        assert_eq!(policy.evaluate(&r).unwrap(), Decision::Yes);
        r.time = 199;
        assert_eq!(policy.evaluate(&r).unwrap(), Decision::Yes);
        r.time = 200;
        assert_eq!(policy.evaluate(&r).unwrap(), Decision::No);
    }

    #[test]
    fn equal_priority_disagreement_is_ambiguous() {
        let permit = PolicyRule {
            id: "a".to_string(),
            priority: 5,
            condition: Condition::default(),
            effect: Effect::Permit,
            caps: Caps::default(),
        };
        let deny = PolicyRule {
            id: "b".to_string(),
            priority: 5,
            condition: Condition::default(),
            effect: Effect::Deny,
            caps: Caps::default(),
        };
        let policy = PolicySet::new(vec![permit.clone(), deny], Effect::Deny).unwrap();
        let err = policy.evaluate(&request(0, 0.1, 1, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, PolicyError::AmbiguousPolicy { priority: 5, .. }));

        // Identical twins are redundant, not ambiguous.
        let mut twin = permit.clone();
        twin.id = "c".to_string();
        let policy = PolicySet::new(vec![permit, twin], Effect::Deny).unwrap();
        assert_eq!(policy.evaluate(&request(0, 0.1, 1, 0.0, 0.0)).unwrap(), Decision::Yes);
    }

    #[test]
    fn construction_rejects_malformed_rules() {
        assert!(matches!(PolicySet::new(vec![], Effect::Deny), Err(PolicyError::EmptyPolicy)));
        let base = PolicyRule {
            id: "r".to_string(),
            priority: 1,
            condition: Condition::default(),
            effect: Effect::Permit,
            caps: Caps::default(),
        };
        let mut empty_window = base.clone();
        empty_window.condition.time = Some((5, 5));
        assert!(matches!(
            PolicySet::new(vec![empty_window], Effect::Deny),
            Err(PolicyError::BadRule { reason: "time window is empty", .. })
        ));
        let mut capped_deny = base.clone();
        capped_deny.effect = Effect::Deny;
        capped_deny.caps.max_power = Some(1.0);
        assert!(matches!(
            PolicySet::new(vec![capped_deny], Effect::Deny),
            Err(PolicyError::BadRule { reason: "deny rules cannot carry caps", .. })
        ));
        let mut dup = base.clone();
        dup.priority = 2;
        assert!(matches!(
            PolicySet::new(vec![base, dup], Effect::Deny),
            Err(PolicyError::DuplicateRuleId { .. })
        ));
    }

    /// A single always-idle channel so every slot is an access; the policy
    /// caps transmissions at three slots.
    fn run_against(policy: Option<&PolicySet>) -> (TrackRecord, Option<PolicyError>) {
        let chains = vec![ChannelChain::new(1.0 - 1e-12, 1.0 - 1e-12, 1.0).unwrap()];
        let config = RunConfig {
            chains: &chains,
            joint_matrix: None,
            initial: InitialOccupancy::Fixed(vec![true]),
            epsilon: 0.0,
            delta: 0.0,
            zeta: 0.1,
            slots: 20,
        };
        match policy {
            Some(set) => {
                let mut gate = PolicyGate::new(set, 0.5, Point { x: 50.0, y: 0.0 }, "consumer");
                let record = run_tracking(&config, Strategy::Myopic, &mut gate, 11).unwrap();
                let err = gate.error().cloned();
                (record, err)
            }
            None => {
                let mut gate = AllowAll;
                (run_tracking(&config, Strategy::Myopic, &mut gate, 11).unwrap(), None)
            }
        }
    }

    #[test]
    fn audit_flags_ungated_runs_and_clears_gated_ones() {
        let policy = PolicySet::new(
            vec![PolicyRule {
                id: "short-bursts".to_string(),
                priority: 1,
                condition: Condition::default(),
                effect: Effect::Permit,
                caps: Caps { max_duration: Some(3), ..Caps::default() },
            }],
            Effect::Deny,
        )
        .unwrap();
        let location = Point { x: 50.0, y: 0.0 };

        // Ungated: one 20-slot transmission, well over the cap.
        let (record, _) = run_against(None);
        let powers = vec![0.5; record.len()];
        let report = policy.check_run(&record, &powers, location, "consumer").unwrap();
        assert_eq!(report.transmissions, 1);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0].kind, ViolationKind::OverCap(_)));
        assert_eq!(report.violations[0].duration, 20);

        // Gated: the gate cuts each transmission at three slots, the audit
        // then has nothing to flag.
        let (record, err) = run_against(Some(&policy));
        assert_eq!(err, None);
        assert!(record.gated_denials > 0);
        let powers = vec![0.5; record.len()];
        let report = policy.check_run(&record, &powers, location, "consumer").unwrap();
        assert!(report.transmissions > 1);
        assert!(report.is_compliant(), "violations: {:?}", report.violations);

        // Misaligned power trace is an error.
        assert!(matches!(
            policy.check_run(&record, &powers[1..], location, "consumer"),
            Err(PolicyError::TraceMismatch { .. })
        ));
    }

    #[test]
    fn gate_denies_on_policy_error_and_reports_it() {
        let policy = PolicySet::new(
            vec![
                PolicyRule {
                    id: "a".to_string(),
                    priority: 5,
                    condition: Condition::default(),
                    effect: Effect::Permit,
                    caps: Caps::default(),
                },
                PolicyRule {
                    id: "b".to_string(),
                    priority: 5,
                    condition: Condition::default(),
                    effect: Effect::Deny,
                    caps: Caps::default(),
                },
            ],
            Effect::Deny,
        )
        .unwrap();
        let (record, err) = run_against(Some(&policy));
        assert!(matches!(err, Some(PolicyError::AmbiguousPolicy { .. })));
        assert_eq!(record.total_reward(), 0.0);
        assert_eq!(record.gated_denials, 20);
    }
}
