//! Simulation traces: per-frame record of world, commands and verdicts,
//! with CSV/JSON export and derived series for plotting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::kinematics::{lateral_safe_distance, longitudinal_safe_distance, LateralPair, LongitudinalPair};
use crate::rules::{proper_response, AgentId, RssParams, RuleStatus, RuleVerdict, WorldState};

/// Acceleration command applied to one agent for one frame. `set_v_lat`
/// overrides the lateral velocity before integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct AgentCommand {
    pub a_lon: f64,
    pub a_lat: f64,
    pub set_v_lat: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub time: f64,
    pub agents: (AgentId, AgentId),
    pub relative_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub time: f64,
    pub world: WorldState,
    pub commands: BTreeMap<AgentId, AgentCommand>,
    pub verdicts: BTreeMap<AgentId, Vec<RuleVerdict>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub scenario_id: String,
    pub dt: f64,
    pub params: RssParams,
    pub frames: Vec<Frame>,
    pub collision: Option<CollisionEvent>,
}

/// Who created each dangerous situation that ended in the collision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct BlameReport {
    pub blamed: Vec<AgentId>,
    pub rationale: BTreeMap<AgentId, Vec<(f64, u8)>>,
}

/// A frame where ego's applied longitudinal command fell outside the
/// proper-response envelope while some rule reported danger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoViolation {
    pub time: f64,
    pub rules: Vec<u8>,
    pub a_lon: f64,
    pub required: (f64, f64),
}

impl Trace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// One row per frame per agent; statuses for rules the agent was not
    /// evaluated against are left blank.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "time,agent,lane,s,d,v_lon,v_lat,a_lon_cmd,set_v_lat_cmd,rule1,rule2,rule3,rule4,rule5\n",
        );
        for frame in &self.frames {
            for agent in &frame.world.agents {
                let cmd = frame.commands.get(&agent.id).copied().unwrap_or_default();
                let mut statuses = vec![String::new(); 5];
                if let Some(verdicts) = frame.verdicts.get(&agent.id) {
                    for v in verdicts {
                        if (1..=5).contains(&v.rule) {
                            statuses[(v.rule - 1) as usize] = status_str(v.status).into();
                        }
                    }
                }
                let set_v_lat =
                    cmd.set_v_lat.map(|v| format!("{:.6}", v)).unwrap_or_default();
                out.push_str(&format!(
                    "{:.4},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}\n",
                    frame.time,
                    agent.id,
                    agent.lane_index,
                    agent.s,
                    agent.d,
                    agent.v_lon,
                    agent.v_lat,
                    cmd.a_lon,
                    set_v_lat,
                    statuses.join(","),
                ));
            }
        }
        out
    }

    /// (time, actual gap, required distance) for ego against its current
    /// front vehicle; frames without a front vehicle are skipped.
    pub fn longitudinal_gap_series(&self) -> Vec<(f64, f64, f64)> {
        let mut series = Vec::new();
        for frame in &self.frames {
            let world = &frame.world;
            let ego = world.ego();
            let front = world
                .agents
                .iter()
                .filter(|a| a.id != ego.id && a.lane_index == ego.lane_index && a.s > ego.s)
                .min_by(|a, b| a.s.partial_cmp(&b.s).unwrap().then(a.id.cmp(&b.id)));
            if let Some(front) = front {
                let gap = ego.gap_to(front);
                let pair = LongitudinalPair {
                    v_rear: ego.v_lon,
                    v_front: front.v_lon,
                    gap: gap.max(0.0),
                };
                let d_min = longitudinal_safe_distance(&pair, &self.params.longitudinal);
                series.push((frame.time, gap, d_min));
            }
        }
        series
    }

    /// (time, actual lateral gap, required lateral distance) for ego against
    /// its nearest side-by-side neighbor.
    pub fn lateral_gap_series(&self) -> Vec<(f64, f64, f64)> {
        let mut series = Vec::new();
        for frame in &self.frames {
            let world = &frame.world;
            let ego = world.ego();
            let neighbor = world
                .agents
                .iter()
                .filter(|a| {
                    a.id != ego.id
                        && (a.d - ego.d).abs() <= 2.0 * world.lane_width
                        && (a.s - ego.s).abs() <= (a.length + ego.length) / 2.0
                })
                .min_by(|a, b| {
                    ego.lateral_gap_to(a)
                        .partial_cmp(&ego.lateral_gap_to(b))
                        .unwrap()
                        .then(a.id.cmp(&b.id))
                });
            if let Some(other) = neighbor {
                let (v1, v2) = if ego.d <= other.d {
                    (ego.v_lat, other.v_lat)
                } else {
                    (other.v_lat, ego.v_lat)
                };
                let gap = ego.lateral_gap_to(other);
                let pair = LateralPair { v1_lat: v1, v2_lat: v2, lateral_gap: gap.max(0.0) };
                let d_lat = lateral_safe_distance(&pair, &self.params.lateral);
                series.push((frame.time, gap, d_lat));
            }
        }
        series
    }

    /// Frames where ego ignored the proper response. The envelope is
    /// re-derived from the recorded world, so this is a pure audit.
    pub fn ego_violations(&self) -> Vec<EgoViolation> {
        const TOL: f64 = 1e-9;
        let mut violations = Vec::new();
        for frame in &self.frames {
            let Some(verdicts) = frame.verdicts.get(&frame.world.ego_id) else { continue };
            let dangerous: Vec<u8> = verdicts
                .iter()
                .filter(|v| v.status == RuleStatus::Dangerous && v.rule <= 4)
                .map(|v| v.rule)
                .collect();
            if dangerous.is_empty() {
                continue;
            }
            let required = proper_response(&frame.world, &self.params).lon_accel_range;
            let a_lon = frame
                .commands
                .get(&frame.world.ego_id)
                .map(|c| c.a_lon)
                .unwrap_or(0.0);
            if a_lon < required.0 - TOL || a_lon > required.1 + TOL {
                violations.push(EgoViolation {
                    time: frame.time,
                    rules: dangerous,
                    a_lon,
                    required,
                });
            }
        }
        violations
    }
}

fn status_str(status: RuleStatus) -> &'static str {
    match status {
        RuleStatus::Safe => "Safe",
        RuleStatus::Dangerous => "Dangerous",
        RuleStatus::NotApplicable => "NotApplicable",
    }
}
