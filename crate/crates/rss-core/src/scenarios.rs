//! Declarative scenario catalog and lane-change classification.
//!
//! The shipped catalog covers the multi-driver pre-crash families: one
//! unified follow-lead family with four parameterizations (front
//! accelerates, moves slower, decelerates, stops), plus lane-change,
//! wrong-lane-turn and drift families in a safe and an unsafe variant.
//! Scenario files are JSON with SI units throughout; unknown keys are
//! rejected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{longitudinal_safe_distance, LateralParams, LongitudinalParams, LongitudinalPair};
use crate::rules::{AgentId, RssParams, VehicleState, WorldError, WorldState};

pub const DEFAULT_LANE_WIDTH: f64 = 3.5;
pub const DEFAULT_SPEED_LIMIT: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioFamily {
    FollowLead,
    LaneChange,
    WrongLaneTurn,
    Drift,
}

/// A scripted command applied to one agent at one instant. Commands stay in
/// force until replaced by a later command of the same kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionCommand {
    /// Hold this longitudinal acceleration (m/s²; braking negative).
    SetLonAccel { value: f64 },
    /// Hold this lateral velocity (m/s; rightward positive).
    SetLatVel { value: f64 },
    /// Move to the center of `target_lane` at `rate` m/s laterally.
    LaneChange { target_lane: u32, rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedAction {
    pub agent: AgentId,
    pub time: f64,
    pub command: ActionCommand,
}

/// Declarative scenario. The first agent is ego by convention; road
/// geometry derives from the agents (`lane_count` = highest lane + 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub id: String,
    pub family: ScenarioFamily,
    #[serde(default)]
    pub description: String,
    pub agents: Vec<VehicleState>,
    pub actions: Vec<ScriptedAction>,
    pub params: RssParams,
    pub horizon: f64,
    pub dt: f64,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("dt must be > 0, got {0}")]
    BadDt(f64),
    #[error("horizon must be >= 0, got {0}")]
    BadHorizon(f64),
    #[error("action at t={0} outside [0, horizon]")]
    ActionOutOfRange(f64),
    #[error("action references unknown agent {0}")]
    ActionUnknownAgent(AgentId),
    #[error("scenario has no agents")]
    NoAgents,
    #[error("agents {0} and {1} overlap at t=0")]
    InitialOverlap(AgentId, AgentId),
    #[error("world: {0}")]
    World(#[from] WorldError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(ScenarioError::BadDt(self.dt));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(ScenarioError::BadHorizon(self.horizon));
        }
        if self.agents.is_empty() {
            return Err(ScenarioError::NoAgents);
        }
        for action in &self.actions {
            if !(0.0..=self.horizon).contains(&action.time) {
                return Err(ScenarioError::ActionOutOfRange(action.time));
            }
            if !self.agents.iter().any(|a| a.id == action.agent) {
                return Err(ScenarioError::ActionUnknownAgent(action.agent));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let spec: ScenarioSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Builds the t=0 world for a scenario: first agent is ego, lane count is
/// derived from the agents, and overlapping bodies are rejected.
pub fn instantiate(spec: &ScenarioSpec) -> Result<WorldState, ScenarioError> {
    spec.validate()?;
    let lane_count = spec.agents.iter().map(|a| a.lane_index).max().unwrap_or(0) + 1;
    let world = WorldState {
        time: 0.0,
        ego_id: spec.agents[0].id,
        agents: spec.agents.clone(),
        occlusions: vec![],
        conflict_zones: vec![],
        lane_count,
        lane_width: DEFAULT_LANE_WIDTH,
        legal_speed_limit: DEFAULT_SPEED_LIMIT,
    };
    world.validate()?;
    if let Some(hit) = crate::simulator::detect_collision(&world) {
        return Err(ScenarioError::InitialOverlap(hit.agents.0, hit.agents.1));
    }
    Ok(world)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LaneChangeVerdict {
    SafeChange,
    UnsafeChange,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneChangeClassification {
    pub verdict: LaneChangeVerdict,
    pub violated_follower: Option<AgentId>,
    pub intrusion: f64,
}

/// Classifies a completed cut-in against the follower's safe stopping
/// distance: unsafe exactly when the post-change gap is below it.
pub fn classify_lane_change(
    follower: &VehicleState,
    cutter_post_change: &VehicleState,
    params: &LongitudinalParams,
) -> LaneChangeClassification {
    if follower.lane_index != cutter_post_change.lane_index {
        return LaneChangeClassification {
            verdict: LaneChangeVerdict::NotApplicable,
            violated_follower: None,
            intrusion: 0.0,
        };
    }
    let gap = follower.gap_to(cutter_post_change);
    let pair = LongitudinalPair {
        v_rear: follower.v_lon,
        v_front: cutter_post_change.v_lon,
        gap: gap.max(0.0),
    };
    let d_min = longitudinal_safe_distance(&pair, params);
    if gap >= d_min {
        LaneChangeClassification {
            verdict: LaneChangeVerdict::SafeChange,
            violated_follower: None,
            intrusion: 0.0,
        }
    } else {
        LaneChangeClassification {
            verdict: LaneChangeVerdict::UnsafeChange,
            violated_follower: Some(follower.id),
            intrusion: d_min - gap,
        }
    }
}

fn agent(id: u32, lane: u32, s: f64, v_lon: f64) -> VehicleState {
    VehicleState {
        id: AgentId(id),
        lane_index: lane,
        s,
        d: (lane as f64 + 0.5) * DEFAULT_LANE_WIDTH,
        v_lon,
        v_lat: 0.0,
        length: 4.5,
        width: 1.8,
    }
}

fn catalog_params() -> RssParams {
    RssParams::new(
        LongitudinalParams::new(1.0, 2.0, 4.0, 8.0).expect("catalog longitudinal params"),
        LateralParams::new(0.5, 1.0, 2.0, 2.0, 0.1).expect("catalog lateral params"),
    )
}

fn follow_lead(id: &str, description: &str, lead_v: f64, actions: Vec<ScriptedAction>) -> ScenarioSpec {
    let params = catalog_params();
    let ego = agent(0, 0, 0.0, 25.0);
    let pair = LongitudinalPair { v_rear: 25.0, v_front: lead_v, gap: 0.0 };
    let d_min = longitudinal_safe_distance(&pair, &params.longitudinal);
    // Center offset = bumper gap + one body length.
    let lead = agent(1, 0, d_min + 5.0 + 4.5, lead_v);
    ScenarioSpec {
        id: format!("follow-lead/{id}"),
        family: ScenarioFamily::FollowLead,
        description: description.into(),
        agents: vec![ego, lead],
        actions,
        params,
        horizon: 15.0,
        dt: 0.01,
    }
}

fn act(agent: u32, time: f64, command: ActionCommand) -> ScriptedAction {
    ScriptedAction { agent: AgentId(agent), time, command }
}

fn cut_in(
    id: &str,
    family: ScenarioFamily,
    description: &str,
    gap_after_change: f64,
    extra: Vec<ScriptedAction>,
) -> ScenarioSpec {
    let params = catalog_params();
    let ego = agent(0, 0, 0.0, 30.0);
    let cutter = agent(1, 1, gap_after_change + 4.5, 30.0);
    let mut actions = vec![act(1, 2.0, ActionCommand::LaneChange { target_lane: 0, rate: 1.75 })];
    actions.extend(extra);
    ScenarioSpec {
        id: id.into(),
        family,
        description: description.into(),
        agents: vec![ego, cutter],
        actions,
        params,
        horizon: 12.0,
        dt: 0.01,
    }
}

/// The built-in catalog. Construction is pure, so repeated calls serialize
/// byte-identically.
pub fn build_catalog() -> Vec<ScenarioSpec> {
    let params = catalog_params();
    let mut catalog = vec![
        follow_lead(
            "front-accelerates",
            "Lead vehicle accelerates away from a safely following ego.",
            25.0,
            vec![act(1, 1.0, ActionCommand::SetLonAccel { value: 2.0 })],
        ),
        follow_lead(
            "front-slower",
            "Lead vehicle cruises slower than ego; ego must fall in behind.",
            15.0,
            vec![],
        ),
        follow_lead(
            "front-decelerates",
            "Lead vehicle brakes moderately from cruise.",
            25.0,
            vec![act(1, 1.0, ActionCommand::SetLonAccel { value: -4.0 })],
        ),
        follow_lead(
            "front-stops",
            "Lead vehicle brakes at its physical maximum until standstill.",
            25.0,
            vec![act(1, 1.0, ActionCommand::SetLonAccel { value: -8.0 })],
        ),
        cut_in(
            "lane-change/safe",
            ScenarioFamily::LaneChange,
            "Cutter merges ahead leaving more than the follower's safe distance.",
            110.0,
            vec![],
        ),
        cut_in(
            "lane-change/unsafe",
            ScenarioFamily::LaneChange,
            "Cutter merges inside the follower's safe stopping distance, then stops suddenly.",
            50.0,
            vec![act(1, 5.0, ActionCommand::SetLonAccel { value: -8.0 })],
        ),
        cut_in(
            "wrong-lane-turn/safe",
            ScenarioFamily::WrongLaneTurn,
            "Turner enters the oncoming-adjacent lane far ahead of traffic in it.",
            120.0,
            vec![],
        ),
        cut_in(
            "wrong-lane-turn/unsafe",
            ScenarioFamily::WrongLaneTurn,
            "Turner enters the oncoming-adjacent lane just ahead of traffic in it.",
            40.0,
            vec![act(1, 5.0, ActionCommand::SetLonAccel { value: -8.0 })],
        ),
    ];

    // Drift: side-by-side traffic, scripted constant lateral velocity.
    let drifter_safe = {
        let ego = agent(0, 0, 0.0, 25.0);
        let other = agent(1, 1, 0.0, 25.0);
        ScenarioSpec {
            id: "drift/safe".into(),
            family: ScenarioFamily::Drift,
            description: "Neighbor drifts briefly within its lane and recovers.".into(),
            agents: vec![ego, other],
            actions: vec![
                act(1, 1.0, ActionCommand::SetLatVel { value: -0.3 }),
                act(1, 3.0, ActionCommand::SetLatVel { value: 0.0 }),
            ],
            params,
            horizon: 10.0,
            dt: 0.01,
        }
    };
    let drifter_unsafe = {
        let ego = agent(0, 0, 0.0, 25.0);
        let other = agent(1, 1, 0.0, 25.0);
        ScenarioSpec {
            id: "drift/unsafe".into(),
            family: ScenarioFamily::Drift,
            description: "Neighbor drifts continuously into ego's lane.".into(),
            agents: vec![ego, other],
            actions: vec![act(1, 1.0, ActionCommand::SetLatVel { value: -0.5 })],
            params,
            horizon: 10.0,
            dt: 0.01,
        }
    };
    catalog.push(drifter_safe);
    catalog.push(drifter_unsafe);
    catalog
}

/// Looks up a catalog entry by its stable id.
pub fn catalog_entry(id: &str) -> Option<ScenarioSpec> {
    build_catalog().into_iter().find(|s| s.id == id)
}
