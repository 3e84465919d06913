//! Deterministic discrete-time simulation with RSS verdict recording,
//! collision detection and blame assignment.
//!
//! Integration is semi-implicit Euler at fixed `dt`; longitudinal speed is
//! clamped at zero (braking never reverses a vehicle). Identical inputs
//! produce byte-identical traces.

pub mod oracle;
pub mod trace;

use std::collections::BTreeMap;

use crate::rules::{
    evaluate_all, evaluate_rule1_for, evaluate_rule2_for, proper_response, AgentId, Maneuver,
    RuleStatus, RuleVerdict, WorldState,
};
use crate::scenarios::{instantiate, ActionCommand, ScenarioError, ScenarioSpec};

pub use oracle::{worst_case_gap_oracle, worst_case_lateral_oracle};
pub use trace::{AgentCommand, BlameReport, CollisionEvent, EgoViolation, Frame, Trace};

/// Lateral approach speed used by the RSS ego for lane changes and centering.
const EGO_LATERAL_RATE: f64 = 1.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EgoPolicy {
    /// Ego follows the combined proper response every frame.
    Rss,
    /// Ego follows only its scripted actions.
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryPolicy {
    /// Non-ego agents follow their scripted actions.
    Scripted,
    /// A non-ego agent brakes at `brake_max` whenever it is the vehicle
    /// directly ahead of ego in ego's lane (the sudden-stop front/cutter);
    /// otherwise it follows its script, including lateral maneuvers.
    WorstCase,
}

/// One integration step. `commands` defaults any absent agent to coasting.
pub fn step(world: &WorldState, commands: &BTreeMap<AgentId, AgentCommand>, dt: f64) -> WorldState {
    let mut next = world.clone();
    next.time += dt;
    for agent in &mut next.agents {
        let cmd = commands.get(&agent.id).copied().unwrap_or_default();
        agent.v_lat = match cmd.set_v_lat {
            Some(v) => v,
            None => agent.v_lat + cmd.a_lat * dt,
        };
        agent.v_lon = (agent.v_lon + cmd.a_lon * dt).max(0.0);
        agent.s += agent.v_lon * dt;
        agent.d += agent.v_lat * dt;
        agent.lane_index = world.lane_of(agent.d);
    }
    next
}

/// Axis-aligned body overlap in the road frame; touching counts as a
/// collision. Returns the first overlapping pair in id order.
pub fn detect_collision(world: &WorldState) -> Option<CollisionEvent> {
    let mut agents: Vec<_> = world.agents.iter().collect();
    agents.sort_by_key(|a| a.id);
    for (i, a) in agents.iter().enumerate() {
        for b in agents.iter().skip(i + 1) {
            let lon = (a.s - b.s).abs() <= (a.length + b.length) / 2.0;
            let lat = (a.d - b.d).abs() <= (a.width + b.width) / 2.0;
            if lon && lat {
                let dv_lon = a.v_lon - b.v_lon;
                let dv_lat = a.v_lat - b.v_lat;
                return Some(CollisionEvent {
                    time: world.time,
                    agents: (a.id, b.id),
                    relative_speed: (dv_lon * dv_lon + dv_lat * dv_lat).sqrt(),
                });
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy)]
enum LatMode {
    Keep,
    Vel(f64),
    LaneChange { target: u32, rate: f64 },
}

struct Script {
    lon_accel: f64,
    lat: LatMode,
    actions: Vec<(f64, ActionCommand)>,
    next_action: usize,
}

impl Script {
    fn new(actions: Vec<(f64, ActionCommand)>) -> Self {
        Self { lon_accel: 0.0, lat: LatMode::Keep, actions, next_action: 0 }
    }

    fn fire_due(&mut self, time: f64) {
        while let Some((t, command)) = self.actions.get(self.next_action).copied() {
            if t > time + 1e-9 {
                break;
            }
            match command {
                ActionCommand::SetLonAccel { value } => self.lon_accel = value,
                ActionCommand::SetLatVel { value } => self.lat = LatMode::Vel(value),
                ActionCommand::LaneChange { target_lane, rate } => {
                    self.lat = LatMode::LaneChange { target: target_lane, rate }
                }
            }
            self.next_action += 1;
        }
    }

    fn command(&mut self, world: &WorldState, id: AgentId, dt: f64) -> AgentCommand {
        let agent = world.agent(id).expect("scripted agent exists");
        let set_v_lat = match self.lat {
            LatMode::Keep => None,
            LatMode::Vel(v) => Some(v),
            LatMode::LaneChange { target, rate } => {
                let delta = world.lane_center(target) - agent.d;
                if delta.abs() <= rate * dt {
                    self.lat = LatMode::Vel(0.0);
                    Some(delta / dt)
                } else {
                    Some(rate * delta.signum())
                }
            }
        };
        AgentCommand { a_lon: self.lon_accel, a_lat: 0.0, set_v_lat }
    }
}

fn rss_ego_command(world: &WorldState, params: &crate::rules::RssParams, dt: f64) -> AgentCommand {
    let response = proper_response(world, params);
    let ego = world.ego();
    match response.maneuver {
        Maneuver::Maintain => AgentCommand::default(),
        Maneuver::Brake => {
            let center = world.lane_center(ego.lane_index);
            let v_lat = (center - ego.d).clamp(-EGO_LATERAL_RATE, EGO_LATERAL_RATE);
            AgentCommand { a_lon: response.lon_accel_range.1, a_lat: 0.0, set_v_lat: Some(v_lat) }
        }
        Maneuver::FullBrake => AgentCommand {
            a_lon: response.lon_accel_range.0,
            a_lat: 0.0,
            set_v_lat: Some(0.0),
        },
        Maneuver::LaneChange(target) => {
            let delta = world.lane_center(target) - ego.d;
            let v_lat = if delta.abs() <= EGO_LATERAL_RATE * dt {
                delta / dt
            } else {
                EGO_LATERAL_RATE * delta.signum()
            };
            AgentCommand { a_lon: 0.0, a_lat: 0.0, set_v_lat: Some(v_lat) }
        }
    }
}

fn frame_verdicts(world: &WorldState, params: &crate::rules::RssParams) -> BTreeMap<AgentId, Vec<RuleVerdict>> {
    let mut verdicts = BTreeMap::new();
    for agent in &world.agents {
        let list = if agent.id == world.ego_id {
            evaluate_all(world, params)
        } else {
            vec![
                evaluate_rule1_for(world, agent.id, &params.longitudinal)
                    .expect("agent enumerates itself"),
                evaluate_rule2_for(world, agent.id, &params.lateral)
                    .expect("agent enumerates itself"),
            ]
        };
        verdicts.insert(agent.id, list);
    }
    verdicts
}

/// Runs a scenario to its horizon (or first collision) and records every
/// frame. Fully deterministic given the spec and policies.
pub fn run(
    spec: &ScenarioSpec,
    ego_policy: EgoPolicy,
    adversary_policy: AdversaryPolicy,
) -> Result<Trace, ScenarioError> {
    let mut world = instantiate(spec)?;
    let params = spec.params;
    let steps = (spec.horizon / spec.dt).round() as usize;

    let mut scripts: BTreeMap<AgentId, Script> = BTreeMap::new();
    for agent in &spec.agents {
        let mut actions: Vec<(f64, ActionCommand)> = spec
            .actions
            .iter()
            .filter(|a| a.agent == agent.id)
            .map(|a| (a.time, a.command))
            .collect();
        actions.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        scripts.insert(agent.id, Script::new(actions));
    }

    let mut frames = Vec::with_capacity(steps + 1);
    let mut collision = None;

    for k in 0..=steps {
        let time = k as f64 * spec.dt;
        for script in scripts.values_mut() {
            script.fire_due(time);
        }

        let front_of_ego = match adversary_policy {
            AdversaryPolicy::WorstCase => {
                evaluate_rule1_for(&world, world.ego_id, &params.longitudinal)
                    .ok()
                    .and_then(|v| v.counterpart)
            }
            AdversaryPolicy::Scripted => None,
        };
        let mut commands: BTreeMap<AgentId, AgentCommand> = BTreeMap::new();
        for agent in &world.agents {
            let cmd = if agent.id == world.ego_id {
                match ego_policy {
                    EgoPolicy::Rss => rss_ego_command(&world, &params, spec.dt),
                    EgoPolicy::Scripted => {
                        scripts.get_mut(&agent.id).unwrap().command(&world, agent.id, spec.dt)
                    }
                }
            } else {
                let script = scripts.get_mut(&agent.id).unwrap();
                let mut cmd = script.command(&world, agent.id, spec.dt);
                if front_of_ego == Some(agent.id) {
                    cmd.a_lon = -params.longitudinal.brake_max;
                }
                cmd
            };
            commands.insert(agent.id, cmd);
        }

        frames.push(Frame {
            time,
            world: world.clone(),
            commands: commands.clone(),
            verdicts: frame_verdicts(&world, &params),
        });

        if k == steps {
            break;
        }
        world = step(&world, &commands, spec.dt);
        // Keep frame times on the exact grid instead of accumulating dt.
        world.time = (k + 1) as f64 * spec.dt;
        if let Some(event) = detect_collision(&world) {
            frames.push(Frame {
                time: world.time,
                world: world.clone(),
                commands: BTreeMap::new(),
                verdicts: frame_verdicts(&world, &params),
            });
            collision = Some(event);
            break;
        }
    }

    Ok(Trace { scenario_id: spec.id.clone(), dt: spec.dt, params, frames, collision })
}

fn pair_dangerous(frame: &Frame, a: AgentId, b: AgentId) -> Option<(u8, AgentId, AgentId)> {
    // Prefer the rule-1 account of the pair over rule 2.
    for rule in [1u8, 2u8] {
        for (subject, other) in [(a, b), (b, a)] {
            if let Some(verdicts) = frame.verdicts.get(&subject) {
                let hit = verdicts.iter().any(|v| {
                    v.rule == rule
                        && v.status == RuleStatus::Dangerous
                        && v.counterpart == Some(other)
                });
                if hit {
                    return Some((rule, subject, other));
                }
            }
        }
    }
    None
}

/// Assigns blame for a collided trace: the agents whose action first turned
/// the colliding pair dangerous. A cut-in inside the follower's safe
/// distance blames the cutter; closing on a legally braking front vehicle
/// blames the follower.
pub fn assign_blame(trace: &Trace) -> BlameReport {
    let Some(collision) = trace.collision else { return BlameReport::default() };
    let (a, b) = collision.agents;

    let mut transition = None;
    for (idx, frame) in trace.frames.iter().enumerate() {
        if let Some(found) = pair_dangerous(frame, a, b) {
            let fresh = idx == 0 || pair_dangerous(&trace.frames[idx - 1], a, b).is_none();
            if fresh {
                transition = Some((idx, found));
                break;
            }
        }
    }
    let Some((idx, (rule, subject, other))) = transition else {
        return BlameReport::default();
    };

    let frame = &trace.frames[idx];
    let time = frame.time;
    let mut blamed = Vec::new();
    match rule {
        1 => {
            // subject follows `other`. If `other` just entered the lane the
            // danger came from the cut-in; otherwise the follower closed.
            let cutter_entered = idx > 0
                && trace.frames[idx - 1]
                    .world
                    .agent(other)
                    .map(|prev| {
                        frame
                            .world
                            .agent(other)
                            .map(|now| now.lane_index != prev.lane_index)
                            .unwrap_or(false)
                    })
                    .unwrap_or(false);
            blamed.push(if cutter_entered { other } else { subject });
        }
        _ => {
            // Lateral danger: blame whoever moves toward the other.
            let sa = frame.world.agent(subject).ok();
            let sb = frame.world.agent(other).ok();
            if let (Some(x), Some(y)) = (sa, sb) {
                let x_toward = (y.d - x.d).signum() * x.v_lat > 0.0;
                let y_toward = (x.d - y.d).signum() * y.v_lat > 0.0;
                if x_toward {
                    blamed.push(x.id);
                }
                if y_toward {
                    blamed.push(y.id);
                }
            }
            if blamed.is_empty() {
                blamed.extend([subject, other]);
            }
        }
    }
    blamed.sort();
    blamed.dedup();

    let mut rationale = BTreeMap::new();
    for id in &blamed {
        rationale.insert(*id, vec![(time, rule)]);
    }
    BlameReport { blamed, rationale }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::VehicleState;

    fn two_car_world(gap: f64, v_rear: f64, v_front: f64) -> WorldState {
        let rear = VehicleState {
            id: AgentId(0),
            lane_index: 0,
            s: 0.0,
            d: 1.75,
            v_lon: v_rear,
            v_lat: 0.0,
            length: 4.5,
            width: 1.8,
        };
        let front = VehicleState { id: AgentId(1), s: gap + 4.5, ..rear };
        let front = VehicleState { v_lon: v_front, ..front };
        WorldState {
            time: 0.0,
            ego_id: AgentId(0),
            agents: vec![rear, front],
            occlusions: vec![],
            conflict_zones: vec![],
            lane_count: 1,
            lane_width: 3.5,
            legal_speed_limit: 50.0,
        }
    }

    #[test]
    fn step_is_a_fixed_point_at_rest() {
        let world = two_car_world(50.0, 0.0, 0.0);
        let next = step(&world, &BTreeMap::new(), 0.1);
        assert_eq!(next.agents, world.agents);
        assert!((next.time - 0.1).abs() < 1e-12);
    }

    #[test]
    fn step_uniform_motion_advances_exactly() {
        let world = two_car_world(50.0, 10.0, 0.0);
        let next = step(&world, &BTreeMap::new(), 0.1);
        assert!((next.agents[0].s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn step_braking_never_reverses() {
        let world = two_car_world(50.0, 1.0, 0.0);
        let mut commands = BTreeMap::new();
        commands.insert(AgentId(0), AgentCommand { a_lon: -5.0, a_lat: 0.0, set_v_lat: None });
        let next = step(&world, &commands, 1.0);
        assert_eq!(next.agents[0].v_lon, 0.0);
    }

    #[test]
    fn collision_boundary_conventions() {
        // gap > 0: no collision.
        assert!(detect_collision(&two_car_world(0.5, 0.0, 0.0)).is_none());
        // touching exactly: collision.
        let hit = detect_collision(&two_car_world(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(hit.agents, (AgentId(0), AgentId(1)));
        // identical positions: collision.
        assert!(detect_collision(&two_car_world(-4.5, 0.0, 0.0)).is_some());
    }
}
