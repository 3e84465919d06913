//! The five RSS safety rules evaluated over a world snapshot.
//!
//! Road frame: `s` grows along the travel direction, `d` grows rightward
//! with `d = 0` at the left road edge. Lane `i` spans
//! `[i·lane_width, (i+1)·lane_width)`; membership is by body center.
//! Evaluation is pure: no state is retained between calls.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{
    lateral_safe_distance, longitudinal_safe_distance, stopping_distance, LateralPair,
    LateralParams, LongitudinalPair, LongitudinalParams,
};

/// Agent identifier. Ties in nearest-agent selection break toward the
/// lower id, so ordering is part of the contract.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleState {
    pub id: AgentId,
    pub lane_index: u32,
    pub s: f64,
    pub d: f64,
    pub v_lon: f64,
    pub v_lat: f64,
    pub length: f64,
    pub width: f64,
}

impl VehicleState {
    pub fn front_bumper(&self) -> f64 {
        self.s + self.length / 2.0
    }

    pub fn rear_bumper(&self) -> f64 {
        self.s - self.length / 2.0
    }

    /// Bumper-to-bumper gap from `self` (rear) to `front`; negative when the
    /// bodies overlap longitudinally.
    pub fn gap_to(&self, front: &VehicleState) -> f64 {
        front.rear_bumper() - self.front_bumper()
    }

    /// Surface-to-surface lateral gap; negative when the bodies overlap.
    pub fn lateral_gap_to(&self, other: &VehicleState) -> f64 {
        (self.d - other.d).abs() - (self.width + other.width) / 2.0
    }

    fn validate(&self) -> Result<(), WorldError> {
        let finite = [self.s, self.d, self.v_lon, self.v_lat, self.length, self.width]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(WorldError::NonFiniteState(self.id));
        }
        if self.length <= 0.0 || self.width <= 0.0 {
            return Err(WorldError::BadBody(self.id));
        }
        if self.v_lon < 0.0 {
            return Err(WorldError::NegativeSpeed(self.id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// A stretch of road where something may be hidden from the ego sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcclusionZone {
    pub s_start: f64,
    pub s_end: f64,
    pub side: Side,
    pub max_emergent_speed: f64,
    pub emergence_point: f64,
}

/// Crossing-path conflict between ego and one other agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConflictZone {
    pub s_ego_entry: f64,
    pub s_ego_exit: f64,
    pub other_id: AgentId,
    pub s_other_entry: f64,
    pub s_other_exit: f64,
    pub ego_has_formal_priority: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldState {
    pub time: f64,
    pub ego_id: AgentId,
    pub agents: Vec<VehicleState>,
    #[serde(default)]
    pub occlusions: Vec<OcclusionZone>,
    #[serde(default)]
    pub conflict_zones: Vec<ConflictZone>,
    pub lane_count: u32,
    pub lane_width: f64,
    pub legal_speed_limit: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("agent {0} has a non-finite state component")]
    NonFiniteState(AgentId),
    #[error("agent {0} has nonpositive length or width")]
    BadBody(AgentId),
    #[error("agent {0} has negative longitudinal speed")]
    NegativeSpeed(AgentId),
    #[error("duplicate agent id {0}")]
    DuplicateAgent(AgentId),
    #[error("ego id {0} not present among agents")]
    MissingEgo(AgentId),
    #[error("agent {0} lane index {1} outside [0, {2})")]
    LaneOutOfRange(AgentId, u32, u32),
    #[error("occlusion zone has s_start >= s_end")]
    BadOcclusion,
    #[error("conflict zone has entry >= exit")]
    BadConflictZone,
    #[error("unknown agent id {0}")]
    UnknownAgent(AgentId),
}

impl WorldState {
    pub fn validate(&self) -> Result<(), WorldError> {
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.agents {
            a.validate()?;
            if !seen.insert(a.id) {
                return Err(WorldError::DuplicateAgent(a.id));
            }
            if a.lane_index >= self.lane_count {
                return Err(WorldError::LaneOutOfRange(a.id, a.lane_index, self.lane_count));
            }
        }
        if !seen.contains(&self.ego_id) {
            return Err(WorldError::MissingEgo(self.ego_id));
        }
        for z in &self.occlusions {
            if !(z.s_start < z.s_end) || z.max_emergent_speed < 0.0 {
                return Err(WorldError::BadOcclusion);
            }
        }
        for c in &self.conflict_zones {
            if !(c.s_ego_entry < c.s_ego_exit) || !(c.s_other_entry < c.s_other_exit) {
                return Err(WorldError::BadConflictZone);
            }
            self.agent(c.other_id)?;
        }
        Ok(())
    }

    pub fn agent(&self, id: AgentId) -> Result<&VehicleState, WorldError> {
        self.agents
            .iter()
            .find(|a| a.id == id)
            .ok_or(WorldError::UnknownAgent(id))
    }

    pub fn ego(&self) -> &VehicleState {
        self.agents
            .iter()
            .find(|a| a.id == self.ego_id)
            .expect("validated world has an ego agent")
    }

    pub fn lane_center(&self, lane: u32) -> f64 {
        (lane as f64 + 0.5) * self.lane_width
    }

    pub fn lane_of(&self, d: f64) -> u32 {
        let idx = (d / self.lane_width).floor();
        idx.clamp(0.0, (self.lane_count.saturating_sub(1)) as f64) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleStatus {
    Safe,
    Dangerous,
    NotApplicable,
}

/// Per-rule judgment. `margin` (actual minus required distance) is present
/// exactly for rules 1 and 2; `counterpart` names the paired agent when the
/// rule evaluates a specific pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleVerdict {
    pub rule: u8,
    pub status: RuleStatus,
    pub margin: Option<f64>,
    pub counterpart: Option<AgentId>,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Maneuver {
    Maintain,
    Brake,
    FullBrake,
    LaneChange(u32),
}

/// Commanded acceleration envelope. Longitudinal accelerations are signed
/// with braking negative; any value inside the range is compliant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProperResponse {
    pub lon_accel_range: (f64, f64),
    pub lat_accel_range: (f64, f64),
    pub maneuver: Maneuver,
}

/// Parameter bundle shared by the rules, scenarios and simulator.
/// `brake_cap` is the physical braking ceiling used for full braking;
/// it defaults to `longitudinal.brake_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RssParams {
    pub longitudinal: LongitudinalParams,
    pub lateral: LateralParams,
    #[serde(default)]
    pub brake_cap: Option<f64>,
}

impl RssParams {
    pub fn new(longitudinal: LongitudinalParams, lateral: LateralParams) -> Self {
        Self { longitudinal, lateral, brake_cap: None }
    }

    pub fn cap(&self) -> f64 {
        self.brake_cap.unwrap_or(self.longitudinal.brake_max)
    }
}

fn pair_gap(rear: &VehicleState, front: &VehicleState) -> LongitudinalPair {
    LongitudinalPair {
        v_rear: rear.v_lon,
        v_front: front.v_lon,
        gap: rear.gap_to(front).max(0.0),
    }
}

/// Nearest same-lane agent strictly ahead of `subject`; ties on position
/// break toward the lower id.
fn front_agent<'a>(world: &'a WorldState, subject: &VehicleState) -> Option<&'a VehicleState> {
    world
        .agents
        .iter()
        .filter(|a| a.id != subject.id && a.lane_index == subject.lane_index && a.s > subject.s)
        .min_by(|a, b| {
            a.s.partial_cmp(&b.s)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.id.cmp(&b.id))
        })
}

/// Rule 1, "do not hit the vehicle in front", evaluated for an arbitrary
/// agent as the rear vehicle.
pub fn evaluate_rule1_for(
    world: &WorldState,
    subject_id: AgentId,
    params: &LongitudinalParams,
) -> Result<RuleVerdict, WorldError> {
    let subject = world.agent(subject_id)?;
    let Some(front) = front_agent(world, subject) else {
        return Ok(RuleVerdict {
            rule: 1,
            status: RuleStatus::NotApplicable,
            margin: None,
            counterpart: None,
            detail: "no vehicle ahead in lane".into(),
        });
    };
    let gap = subject.gap_to(front);
    let d_min = longitudinal_safe_distance(&pair_gap(subject, front), params);
    let margin = gap - d_min;
    let status = if margin >= 0.0 { RuleStatus::Safe } else { RuleStatus::Dangerous };
    Ok(RuleVerdict {
        rule: 1,
        status,
        margin: Some(margin),
        counterpart: Some(front.id),
        detail: format!("gap {:.3} m vs required {:.3} m to agent {}", gap, d_min, front.id),
    })
}

pub fn evaluate_rule1(world: &WorldState, params: &LongitudinalParams) -> RuleVerdict {
    evaluate_rule1_for(world, world.ego_id, params).expect("ego present in validated world")
}

/// Candidates for rule 2: longitudinally overlapping agents within one lane
/// width beyond the adjacent lane (center offset of at most two lane widths).
fn lateral_neighbor<'a>(world: &'a WorldState, subject: &VehicleState) -> Option<&'a VehicleState> {
    world
        .agents
        .iter()
        .filter(|a| {
            a.id != subject.id
                && (a.d - subject.d).abs() <= 2.0 * world.lane_width
                && (a.s - subject.s).abs() <= (a.length + subject.length) / 2.0
        })
        .min_by(|a, b| {
            subject
                .lateral_gap_to(a)
                .partial_cmp(&subject.lateral_gap_to(b))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.id.cmp(&b.id))
        })
}

/// Rule 2, "do not cut in recklessly": the lateral distance to the nearest
/// side-by-side neighbor must not drop below the safe lateral distance.
pub fn evaluate_rule2_for(
    world: &WorldState,
    subject_id: AgentId,
    params: &LateralParams,
) -> Result<RuleVerdict, WorldError> {
    let subject = world.agent(subject_id)?;
    let Some(other) = lateral_neighbor(world, subject) else {
        return Ok(RuleVerdict {
            rule: 2,
            status: RuleStatus::NotApplicable,
            margin: None,
            counterpart: None,
            detail: "no lateral neighbor".into(),
        });
    };
    // Vehicle 1 is the left vehicle; identical centers treat the subject as left.
    let (v1, v2) = if subject.d <= other.d {
        (subject.v_lat, other.v_lat)
    } else {
        (other.v_lat, subject.v_lat)
    };
    let gap = subject.lateral_gap_to(other);
    let pair = LateralPair { v1_lat: v1, v2_lat: v2, lateral_gap: gap.max(0.0) };
    let d_lat = lateral_safe_distance(&pair, params);
    let margin = gap - d_lat;
    let status = if margin >= 0.0 { RuleStatus::Safe } else { RuleStatus::Dangerous };
    Ok(RuleVerdict {
        rule: 2,
        status,
        margin: Some(margin),
        counterpart: Some(other.id),
        detail: format!("lateral gap {:.3} m vs required {:.3} m to agent {}", gap, d_lat, other.id),
    })
}

pub fn evaluate_rule2(world: &WorldState, params: &LateralParams) -> RuleVerdict {
    evaluate_rule2_for(world, world.ego_id, params).expect("ego present in validated world")
}

/// Earliest time to cover `dist` starting at speed `v` while accelerating at
/// `accel`; `None` when unreachable.
fn earliest_time_to(dist: f64, v: f64, accel: f64) -> Option<f64> {
    if dist <= 0.0 {
        return Some(0.0);
    }
    if accel > 0.0 {
        let disc = v * v + 2.0 * accel * dist;
        Some((-v + disc.sqrt()) / accel)
    } else if v > 0.0 {
        Some(dist / v)
    } else {
        None
    }
}

/// Latest time to cover `dist` while decelerating at `decel` (clamped at
/// standstill); `None` means the point is never necessarily reached.
fn latest_time_to(dist: f64, v: f64, decel: f64) -> Option<f64> {
    if dist <= 0.0 {
        return Some(0.0);
    }
    if decel <= 0.0 {
        return if v > 0.0 { Some(dist / v) } else { None };
    }
    if v * v / (2.0 * decel) <= dist {
        // Can come to a stop before covering dist: may stall forever.
        None
    } else {
        Some((v - (v * v - 2.0 * decel * dist).sqrt()) / decel)
    }
}

/// Rule 3, "right of way is given, not taken": conservative occupancy-interval
/// test for each crossing-path conflict. Formal priority never overrides a
/// predicted conflict.
pub fn evaluate_rule3(world: &WorldState, params: &LongitudinalParams) -> RuleVerdict {
    if world.conflict_zones.is_empty() {
        return RuleVerdict {
            rule: 3,
            status: RuleStatus::NotApplicable,
            margin: None,
            counterpart: None,
            detail: "no conflict zones".into(),
        };
    }
    let ego = world.ego();
    for zone in &world.conflict_zones {
        let other = match world.agent(zone.other_id) {
            Ok(a) => a,
            Err(_) => continue,
        };
        let ego_to_entry = zone.s_ego_entry - ego.s;
        let ego_to_exit = zone.s_ego_exit - ego.s;
        let other_to_entry = zone.s_other_entry - other.s;
        let other_to_exit = zone.s_other_exit - other.s;
        if ego_to_exit <= 0.0 || other_to_exit <= 0.0 {
            continue; // one party has already cleared this zone
        }

        let stop_dist = stopping_distance(
            ego.v_lon,
            params.response_time,
            params.accel_max,
            params.brake_min,
        )
        .expect("validated params");
        let can_stop_short = ego_to_entry > 0.0 && stop_dist <= ego_to_entry;
        if can_stop_short {
            let priority = match zone.ego_has_formal_priority {
                Some(true) => "ego holds formal priority but yields",
                Some(false) => "other holds priority",
                None => "priority unknown",
            };
            return RuleVerdict {
                rule: 3,
                status: RuleStatus::Safe,
                margin: None,
                counterpart: Some(other.id),
                detail: format!(
                    "can stop {:.3} m short of conflict entry; required yield ({})",
                    ego_to_entry - stop_dist,
                    priority
                ),
            };
        }

        // Possible presence windows under ±accel_max bounded behavior.
        let ego_earliest = earliest_time_to(ego_to_entry, ego.v_lon, params.accel_max);
        let ego_latest = latest_time_to(ego_to_exit, ego.v_lon, params.brake_min);
        let other_earliest = earliest_time_to(other_to_entry, other.v_lon, params.accel_max);
        let other_latest = latest_time_to(other_to_exit, other.v_lon, params.accel_max);

        let overlap_possible = match (ego_earliest, other_earliest) {
            (Some(ee), Some(oe)) => {
                let ego_before_other_leaves = other_latest.map_or(true, |ol| ee <= ol);
                let other_before_ego_leaves = ego_latest.map_or(true, |el| oe <= el);
                ego_before_other_leaves && other_before_ego_leaves
            }
            // A party that can never reach the zone cannot conflict.
            _ => false,
        };
        if overlap_possible {
            return RuleVerdict {
                rule: 3,
                status: RuleStatus::Dangerous,
                margin: None,
                counterpart: Some(other.id),
                detail: format!(
                    "cannot stop before conflict entry ({:.3} m needed, {:.3} m available) and \
                     simultaneous occupancy with agent {} is possible",
                    stop_dist, ego_to_entry, other.id
                ),
            };
        }
    }
    RuleVerdict {
        rule: 3,
        status: RuleStatus::Safe,
        margin: None,
        counterpart: None,
        detail: "no conflict zone can be occupied simultaneously".into(),
    }
}

/// Largest speed from which the worst-case stopping distance fits within
/// `distance_to_conflict`. Solves v·P + ½αP² + (v+αP)²/(2β) = D for v ≥ 0.
pub fn max_speed_under_occlusion(
    _zone: &OcclusionZone,
    distance_to_conflict: f64,
    params: &LongitudinalParams,
) -> Result<f64, crate::kinematics::KinematicsError> {
    if !(distance_to_conflict >= 0.0) || !distance_to_conflict.is_finite() {
        return Err(crate::kinematics::KinematicsError::Negative(
            "distance_to_conflict",
            distance_to_conflict,
        ));
    }
    let p = params.response_time;
    let a = params.accel_max;
    let b = params.brake_min;
    // v² + 2v·P(β + α) + (αβP² + α²P² − 2βD) = 0
    let half_lin = p * (b + a);
    let constant = a * b * p * p + a * a * p * p - 2.0 * b * distance_to_conflict;
    let disc = half_lin * half_lin - constant;
    if disc <= 0.0 {
        return Ok(0.0);
    }
    Ok((disc.sqrt() - half_lin).max(0.0))
}

/// Speed cap implied by every occlusion zone still ahead of ego, clamped to
/// the legal limit. Zones with no possible emergent agent do not constrain.
pub fn occlusion_speed_cap(world: &WorldState, params: &LongitudinalParams) -> f64 {
    let ego = world.ego();
    let mut cap = world.legal_speed_limit;
    for zone in &world.occlusions {
        if zone.s_end < ego.s || zone.max_emergent_speed <= 0.0 {
            continue;
        }
        let distance = (zone.s_start - ego.s).max(0.0);
        if let Ok(v) = max_speed_under_occlusion(zone, distance, params) {
            cap = cap.min(v);
        }
    }
    cap
}

/// Rule 4, "be cautious in limited visibility": ego must be able to stop
/// before the nearest point where a hidden agent could emerge.
pub fn evaluate_rule4(world: &WorldState, params: &LongitudinalParams) -> RuleVerdict {
    let ego = world.ego();
    let relevant = world
        .occlusions
        .iter()
        .any(|z| z.s_end >= ego.s && z.max_emergent_speed > 0.0);
    if !relevant {
        return RuleVerdict {
            rule: 4,
            status: RuleStatus::NotApplicable,
            margin: None,
            counterpart: None,
            detail: "no occlusion ahead".into(),
        };
    }
    let cap = occlusion_speed_cap(world, params);
    let status = if ego.v_lon <= cap { RuleStatus::Safe } else { RuleStatus::Dangerous };
    RuleVerdict {
        rule: 4,
        status,
        margin: None,
        counterpart: None,
        detail: format!("speed {:.3} m/s vs occlusion cap {:.3} m/s", ego.v_lon, cap),
    }
}

/// The hypothetical world after ego snaps to the center of `target` lane.
fn with_ego_in_lane(world: &WorldState, target: u32) -> WorldState {
    let mut next = world.clone();
    for a in &mut next.agents {
        if a.id == world.ego_id {
            a.lane_index = target;
            a.d = world.lane_center(target);
            a.v_lat = 0.0;
        }
    }
    next
}

/// True when no rule-1/rule-2 verdict involving ego is Dangerous for any
/// agent in `world`.
fn safe_for_everyone_involving_ego(world: &WorldState, params: &RssParams) -> bool {
    for a in &world.agents {
        let r1 = evaluate_rule1_for(world, a.id, &params.longitudinal)
            .expect("agents enumerate themselves");
        if r1.status == RuleStatus::Dangerous
            && (a.id == world.ego_id || r1.counterpart == Some(world.ego_id))
        {
            return false;
        }
        let r2 = evaluate_rule2_for(world, a.id, &params.lateral)
            .expect("agents enumerate themselves");
        if r2.status == RuleStatus::Dangerous
            && (a.id == world.ego_id || r2.counterpart == Some(world.ego_id))
        {
            return false;
        }
    }
    true
}

/// Rule 5, "avoid an accident without causing another": try a left lane
/// change, then a right lane change, then fall back to full braking. A lane
/// change is admissible only when the hypothetical post-change world leaves
/// rules 1 and 2 safe for ego and for every agent paired with ego.
pub fn plan_evasion(world: &WorldState, params: &RssParams) -> ProperResponse {
    let ego = world.ego();
    let danger = evaluate_rule1(world, &params.longitudinal).status == RuleStatus::Dangerous
        || evaluate_rule2(world, &params.lateral).status == RuleStatus::Dangerous;
    if !danger {
        return maintain_response(params);
    }
    let mut candidates = Vec::new();
    if ego.lane_index > 0 {
        candidates.push(ego.lane_index - 1); // left first
    }
    if ego.lane_index + 1 < world.lane_count {
        candidates.push(ego.lane_index + 1);
    }
    for target in candidates {
        let hypothetical = with_ego_in_lane(world, target);
        if safe_for_everyone_involving_ego(&hypothetical, params) {
            let toward = if target < ego.lane_index { -1.0 } else { 1.0 };
            return ProperResponse {
                lon_accel_range: (-params.cap(), 0.0),
                lat_accel_range: sorted_range(0.0, toward * params.lateral.lat_accel_max),
                maneuver: Maneuver::LaneChange(target),
            };
        }
    }
    let cap = params.cap();
    ProperResponse {
        lon_accel_range: (-cap, -cap),
        lat_accel_range: (0.0, 0.0),
        maneuver: Maneuver::FullBrake,
    }
}

fn sorted_range(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn maintain_response(params: &RssParams) -> ProperResponse {
    ProperResponse {
        lon_accel_range: (-params.cap(), params.longitudinal.accel_max),
        lat_accel_range: (-params.lateral.lat_accel_max, params.lateral.lat_accel_max),
        maneuver: Maneuver::Maintain,
    }
}

/// All five verdicts for ego, in rule order. Rule 5 reports whether an
/// evasion is needed and whether one short of full braking exists.
pub fn evaluate_all(world: &WorldState, params: &RssParams) -> Vec<RuleVerdict> {
    let r1 = evaluate_rule1(world, &params.longitudinal);
    let r2 = evaluate_rule2(world, &params.lateral);
    let r3 = evaluate_rule3(world, &params.longitudinal);
    let r4 = evaluate_rule4(world, &params.longitudinal);
    let r5 = rule5_verdict(world, params, &r1);
    vec![r1, r2, r3, r4, r5]
}

fn rule5_verdict(world: &WorldState, params: &RssParams, r1: &RuleVerdict) -> RuleVerdict {
    if !collision_unavoidable_by_braking(world, params, r1) {
        return RuleVerdict {
            rule: 5,
            status: RuleStatus::NotApplicable,
            margin: None,
            counterpart: None,
            detail: "no evasion needed".into(),
        };
    }
    let response = plan_evasion(world, params);
    match response.maneuver {
        Maneuver::LaneChange(target) => RuleVerdict {
            rule: 5,
            status: RuleStatus::Safe,
            margin: None,
            counterpart: r1.counterpart,
            detail: format!("evasion available: lane change to lane {}", target),
        },
        _ => RuleVerdict {
            rule: 5,
            status: RuleStatus::Dangerous,
            margin: None,
            counterpart: r1.counterpart,
            detail: "no admissible lane change; full brake".into(),
        },
    }
}

/// True when rule 1 is Dangerous and even braking at the physical cap cannot
/// restore the worst-case stopping guarantee.
fn collision_unavoidable_by_braking(
    world: &WorldState,
    params: &RssParams,
    r1: &RuleVerdict,
) -> bool {
    if r1.status != RuleStatus::Dangerous {
        return false;
    }
    let Some(front_id) = r1.counterpart else { return false };
    let ego = world.ego();
    let front = world.agent(front_id).expect("counterpart exists");
    let full = LongitudinalParams {
        brake_min: params.cap().max(params.longitudinal.brake_min),
        ..params.longitudinal
    };
    let d_full = longitudinal_safe_distance(&pair_gap(ego, front), &full);
    ego.gap_to(front) < d_full
}

/// Combined proper response over all five rules.
pub fn proper_response(world: &WorldState, params: &RssParams) -> ProperResponse {
    let verdicts = evaluate_all(world, params);
    let r1 = &verdicts[0];
    let r2 = &verdicts[1];
    let r3 = &verdicts[2];
    let r4 = &verdicts[3];

    if collision_unavoidable_by_braking(world, params, r1) {
        return plan_evasion(world, params);
    }

    let lon_danger = r1.status == RuleStatus::Dangerous || r3.status == RuleStatus::Dangerous;
    let over_cap = r4.status == RuleStatus::Dangerous;
    let lat_danger = r2.status == RuleStatus::Dangerous;

    if !lon_danger && !over_cap && !lat_danger {
        return maintain_response(params);
    }

    // Any braking of at least brake_min, up to the physical cap, is compliant.
    let lon = (-params.cap(), -params.longitudinal.brake_min);
    let ego = world.ego();
    let center = world.lane_center(ego.lane_index);
    let toward_center = if lat_danger {
        let dir = (center - ego.d).signum();
        sorted_range(0.0, dir * params.lateral.lat_accel_max)
    } else {
        (0.0, 0.0)
    };
    ProperResponse { lon_accel_range: lon, lat_accel_range: toward_center, maneuver: Maneuver::Brake }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vehicle(id: u32, lane: u32, s: f64, v: f64) -> VehicleState {
        VehicleState {
            id: AgentId(id),
            lane_index: lane,
            s,
            d: (lane as f64 + 0.5) * 3.5,
            v_lon: v,
            v_lat: 0.0,
            length: 4.5,
            width: 1.8,
        }
    }

    fn world(agents: Vec<VehicleState>, lanes: u32) -> WorldState {
        let w = WorldState {
            time: 0.0,
            ego_id: AgentId(0),
            agents,
            occlusions: vec![],
            conflict_zones: vec![],
            lane_count: lanes,
            lane_width: 3.5,
            legal_speed_limit: 50.0,
        };
        w.validate().unwrap();
        w
    }

    fn params() -> RssParams {
        RssParams::new(
            LongitudinalParams::new(1.0, 2.0, 4.0, 8.0).unwrap(),
            LateralParams::new(0.5, 1.0, 2.0, 2.0, 0.1).unwrap(),
        )
    }

    /// Gap here is bumper to bumper, so center distance adds one length.
    fn follow_world(gap: f64) -> WorldState {
        world(vec![vehicle(0, 0, 0.0, 30.0), vehicle(1, 0, gap + 4.5, 30.0)], 1)
    }

    #[test]
    fn rule1_no_front_vehicle() {
        let w = world(vec![vehicle(0, 0, 0.0, 30.0)], 1);
        let v = evaluate_rule1(&w, &params().longitudinal);
        assert_eq!(v.status, RuleStatus::NotApplicable);
        assert_eq!(v.margin, None);
    }

    #[test]
    fn rule1_margins_match_hand_values() {
        let v = evaluate_rule1(&follow_world(110.0), &params().longitudinal);
        assert_eq!(v.status, RuleStatus::Safe);
        assert!((v.margin.unwrap() - 7.25).abs() < 1e-9);

        let v = evaluate_rule1(&follow_world(100.0), &params().longitudinal);
        assert_eq!(v.status, RuleStatus::Dangerous);
        assert!((v.margin.unwrap() + 2.75).abs() < 1e-9);
    }

    fn lateral_world(gap: f64) -> WorldState {
        // Ego left at lane 0, neighbor right, side by side; surface gap = gap.
        let mut ego = vehicle(0, 0, 0.0, 20.0);
        ego.v_lat = 1.0;
        let mut other = vehicle(1, 1, 0.0, 20.0);
        other.v_lat = -1.0;
        other.d = ego.d + gap + 1.8;
        let mut w = world(vec![ego, other], 2);
        w.agents[1].lane_index = w.lane_of(w.agents[1].d);
        w
    }

    #[test]
    fn rule2_margins_match_hand_values() {
        let p = params();
        let v = evaluate_rule2(&lateral_world(3.0), &p.lateral);
        assert_eq!(v.status, RuleStatus::Safe);
        assert!((v.margin.unwrap() - 0.525).abs() < 1e-9);

        let v = evaluate_rule2(&lateral_world(2.0), &p.lateral);
        assert_eq!(v.status, RuleStatus::Dangerous);
        assert!((v.margin.unwrap() + 0.475).abs() < 1e-9);
    }

    #[test]
    fn rule2_not_applicable_without_neighbor() {
        let w = world(vec![vehicle(0, 0, 0.0, 30.0), vehicle(1, 0, 200.0, 30.0)], 1);
        let v = evaluate_rule2(&w, &params().lateral);
        assert_eq!(v.status, RuleStatus::NotApplicable);
    }

    #[test]
    fn rule3_not_applicable_without_zones() {
        let w = follow_world(110.0);
        assert_eq!(evaluate_rule3(&w, &params().longitudinal).status, RuleStatus::NotApplicable);
    }

    #[test]
    fn rule3_yields_when_ego_can_stop() {
        let mut w = world(vec![vehicle(0, 0, 0.0, 10.0), vehicle(1, 1, 0.0, 10.0)], 2);
        w.conflict_zones.push(ConflictZone {
            s_ego_entry: 200.0,
            s_ego_exit: 210.0,
            other_id: AgentId(1),
            s_other_entry: 15.0,
            s_other_exit: 25.0,
            ego_has_formal_priority: Some(true),
        });
        let v = evaluate_rule3(&w, &params().longitudinal);
        assert_eq!(v.status, RuleStatus::Safe);
        assert!(v.detail.contains("yield"));
        assert_eq!(v.margin, None);
    }

    #[test]
    fn rule3_dangerous_when_overlap_possible_and_cannot_stop() {
        // Ego too close to stop: stopping distance at 10 m/s, P=1, a=2, b=4 is
        // 10 + 1 + 18 = 29 m, entry only 20 m away. Priority must not matter.
        let mut w = world(vec![vehicle(0, 0, 0.0, 10.0), vehicle(1, 1, 0.0, 10.0)], 2);
        w.conflict_zones.push(ConflictZone {
            s_ego_entry: 20.0,
            s_ego_exit: 30.0,
            other_id: AgentId(1),
            s_other_entry: 15.0,
            s_other_exit: 25.0,
            ego_has_formal_priority: Some(true),
        });
        let v = evaluate_rule3(&w, &params().longitudinal);
        assert_eq!(v.status, RuleStatus::Dangerous);
    }

    #[test]
    fn occlusion_cap_matches_quadratic_solution() {
        let zone = OcclusionZone {
            s_start: 20.0,
            s_end: 40.0,
            side: Side::Right,
            max_emergent_speed: 2.0,
            emergence_point: 1.0,
        };
        let p = LongitudinalParams::new(0.5, 0.0, 4.0, 8.0).unwrap();
        let v = max_speed_under_occlusion(&zone, 20.0, &p).unwrap();
        // Positive root of v²/8 + 0.5·v = 20.
        assert!((v - 10.80624) < 1e-4 && (10.80624 - v) < 1e-4);
        let back = stopping_distance(v, 0.5, 0.0, 4.0).unwrap();
        assert!(back <= 20.0 + 1e-9);
        let above = stopping_distance(v + 1e-6, 0.5, 0.0, 4.0).unwrap();
        assert!(above >= 20.0 - 1e-9);

        assert_eq!(max_speed_under_occlusion(&zone, 0.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn rule4_not_applicable_without_occlusion() {
        let w = follow_world(110.0);
        let p = params();
        assert_eq!(evaluate_rule4(&w, &p.longitudinal).status, RuleStatus::NotApplicable);
        assert_eq!(occlusion_speed_cap(&w, &p.longitudinal), w.legal_speed_limit);
    }

    #[test]
    fn rule4_caps_speed_ahead_of_occlusion() {
        let mut w = world(vec![vehicle(0, 0, 0.0, 15.0)], 1);
        w.occlusions.push(OcclusionZone {
            s_start: 20.0,
            s_end: 40.0,
            side: Side::Right,
            max_emergent_speed: 2.0,
            emergence_point: 1.0,
        });
        let p = LongitudinalParams::new(0.5, 0.0, 4.0, 8.0).unwrap();
        let v = evaluate_rule4(&w, &p);
        assert_eq!(v.status, RuleStatus::Dangerous);
        let bundle = RssParams::new(p, params().lateral);
        let resp = proper_response(&w, &bundle);
        assert_eq!(resp.maneuver, Maneuver::Brake);
    }

    #[test]
    fn evasion_prefers_left_then_right_then_full_brake() {
        let p = params();
        // Obstacle dead ahead, three lanes, both sides empty: go left.
        let mut agents = vec![vehicle(0, 1, 0.0, 30.0), vehicle(1, 1, 30.0, 0.0)];
        let w = world(agents.clone(), 3);
        let resp = plan_evasion(&w, &p);
        assert_eq!(resp.maneuver, Maneuver::LaneChange(0));

        // Left lane blocked by a slow car right beside ego: go right.
        agents.push(vehicle(2, 0, 2.0, 5.0));
        let w = world(agents.clone(), 3);
        let resp = plan_evasion(&w, &p);
        assert_eq!(resp.maneuver, Maneuver::LaneChange(2));

        // Right lane occupied within the follower's safe distance: full brake.
        agents.push(vehicle(3, 2, -20.0, 30.0));
        let w = world(agents, 3);
        let resp = plan_evasion(&w, &p);
        assert_eq!(resp.maneuver, Maneuver::FullBrake);
        assert_eq!(resp.lon_accel_range, (-8.0, -8.0));
    }

    #[test]
    fn evasion_without_danger_maintains() {
        let w = follow_world(200.0);
        assert_eq!(plan_evasion(&w, &params()).maneuver, Maneuver::Maintain);
    }

    #[test]
    fn proper_response_all_clear_maintains() {
        let resp = proper_response(&follow_world(200.0), &params());
        assert_eq!(resp.maneuver, Maneuver::Maintain);
    }

    #[test]
    fn proper_response_brakes_on_rule1_danger() {
        let resp = proper_response(&follow_world(100.0), &params());
        assert_eq!(resp.maneuver, Maneuver::Brake);
        let (lo, hi) = resp.lon_accel_range;
        assert_eq!(hi, -4.0);
        assert_eq!(lo, -8.0);
    }

    #[test]
    fn verdict_monotone_in_gap() {
        let p = params();
        let mut last_danger = true;
        for gap in [20.0, 60.0, 102.0, 103.0, 150.0, 400.0] {
            let v = evaluate_rule1(&follow_world(gap), &p.longitudinal);
            let danger = v.status == RuleStatus::Dangerous;
            assert!(!danger || last_danger, "gap widening flipped Safe back to Dangerous");
            last_danger = danger;
        }
    }
}
