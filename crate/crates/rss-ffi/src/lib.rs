//! C ABI over the safety-envelope core: plain-struct parameter bundles,
//! out-parameter results with status codes, and an opaque world handle for
//! rule evaluation. All distances/speeds are SI doubles.
//!
//! Every function is safe to call from any thread; the world handle is not
//! synchronized and must not be shared mutably across threads.

use rss_core::kinematics::{
    self, AdhesionContext, LateralPair, LateralParams, LongitudinalPair, LongitudinalParams,
};
use rss_core::rules::{
    self, AgentId, Maneuver, OcclusionZone, RssParams, RuleStatus, Side, VehicleState, WorldState,
};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RssStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InvalidWorld = 3,
    UnknownAgent = 4,
}

/// Longitudinal response parameters (decelerations as positive magnitudes).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RssLongitudinalParams {
    pub response_time: f64,
    pub accel_max: f64,
    pub brake_min: f64,
    pub brake_max: f64,
}

/// Lateral response parameters; vehicle 1 is the left vehicle.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RssLateralParams {
    pub response_time: f64,
    pub lat_accel_max: f64,
    pub brake_min_1: f64,
    pub brake_min_2: f64,
    pub margin: f64,
}

/// Rule evaluation result. `status`: 0 safe, 1 dangerous, 2 not applicable.
/// `margin` and `counterpart` are valid only when their `has_` flag is set.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RssVerdict {
    pub rule: u8,
    pub status: u8,
    pub has_margin: bool,
    pub margin: f64,
    pub has_counterpart: bool,
    pub counterpart: u32,
}

/// Combined proper response. `maneuver`: 0 maintain, 1 brake, 2 full brake,
/// 3 lane change (then `target_lane` is valid). Accelerations are signed
/// with braking negative.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RssProperResponse {
    pub lon_accel_min: f64,
    pub lon_accel_max: f64,
    pub lat_accel_min: f64,
    pub lat_accel_max: f64,
    pub maneuver: u8,
    pub target_lane: u32,
}

/// Opaque world under construction/evaluation.
pub struct RssWorld {
    inner: WorldState,
}

fn lon_params(raw: &RssLongitudinalParams) -> Result<LongitudinalParams, RssStatus> {
    LongitudinalParams::new(raw.response_time, raw.accel_max, raw.brake_min, raw.brake_max)
        .map_err(|_| RssStatus::InvalidParameter)
}

fn lat_params(raw: &RssLateralParams) -> Result<LateralParams, RssStatus> {
    LateralParams::new(
        raw.response_time,
        raw.lat_accel_max,
        raw.brake_min_1,
        raw.brake_min_2,
        raw.margin,
    )
    .map_err(|_| RssStatus::InvalidParameter)
}

macro_rules! check_null {
    ($($ptr:expr),+) => {
        $(if $ptr.is_null() { return RssStatus::NullPointer; })+
    };
}

/// Minimum safe following distance for a rear/front pair.
#[no_mangle]
pub extern "C" fn rss_longitudinal_safe_distance(
    params: *const RssLongitudinalParams,
    v_rear: f64,
    v_front: f64,
    out_distance: *mut f64,
) -> RssStatus {
    check_null!(params, out_distance);
    let params = match lon_params(unsafe { &*params }) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let pair = match LongitudinalPair::new(v_rear, v_front, 0.0) {
        Ok(p) => p,
        Err(_) => return RssStatus::InvalidParameter,
    };
    unsafe { *out_distance = kinematics::longitudinal_safe_distance(&pair, &params) };
    RssStatus::Ok
}

/// Minimum safe lateral distance; `v1` belongs to the left vehicle,
/// rightward positive.
#[no_mangle]
pub extern "C" fn rss_lateral_safe_distance(
    params: *const RssLateralParams,
    v1_lat: f64,
    v2_lat: f64,
    out_distance: *mut f64,
) -> RssStatus {
    check_null!(params, out_distance);
    let params = match lat_params(unsafe { &*params }) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let pair = match LateralPair::new(v1_lat, v2_lat, 0.0) {
        Ok(p) => p,
        Err(_) => return RssStatus::InvalidParameter,
    };
    unsafe { *out_distance = kinematics::lateral_safe_distance(&pair, &params) };
    RssStatus::Ok
}

/// Two-second-rule heuristic following distance.
#[no_mangle]
pub extern "C" fn rss_two_second_gap(v_rear: f64, out_distance: *mut f64) -> RssStatus {
    check_null!(out_distance);
    match kinematics::two_second_gap(v_rear) {
        Ok(d) => {
            unsafe { *out_distance = d };
            RssStatus::Ok
        }
        Err(_) => RssStatus::InvalidParameter,
    }
}

/// Worst-case stopping distance with response delay.
#[no_mangle]
pub extern "C" fn rss_stopping_distance(
    v: f64,
    response_time: f64,
    accel_max: f64,
    brake: f64,
    out_distance: *mut f64,
) -> RssStatus {
    check_null!(out_distance);
    match kinematics::stopping_distance(v, response_time, accel_max, brake) {
        Ok(d) => {
            unsafe { *out_distance = d };
            RssStatus::Ok
        }
        Err(_) => RssStatus::InvalidParameter,
    }
}

/// Caps braking parameters at what the road adhesion can transmit
/// (standard gravity).
#[no_mangle]
pub extern "C" fn rss_effective_braking(
    params: *const RssLongitudinalParams,
    adhesion_coefficient: f64,
    out_params: *mut RssLongitudinalParams,
) -> RssStatus {
    check_null!(params, out_params);
    let parsed = match lon_params(unsafe { &*params }) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let ctx = match AdhesionContext::new(adhesion_coefficient) {
        Ok(c) => c,
        Err(_) => return RssStatus::InvalidParameter,
    };
    let derated = kinematics::effective_braking(&parsed, &ctx);
    unsafe {
        *out_params = RssLongitudinalParams {
            response_time: derated.response_time,
            accel_max: derated.accel_max,
            brake_min: derated.brake_min,
            brake_max: derated.brake_max,
        };
    }
    RssStatus::Ok
}

/// Largest speed from which the worst-case stopping distance fits within
/// `distance_to_conflict`.
#[no_mangle]
pub extern "C" fn rss_max_speed_under_occlusion(
    params: *const RssLongitudinalParams,
    distance_to_conflict: f64,
    out_speed: *mut f64,
) -> RssStatus {
    check_null!(params, out_speed);
    let parsed = match lon_params(unsafe { &*params }) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let zone = OcclusionZone {
        s_start: 0.0,
        s_end: 1.0,
        side: Side::Right,
        max_emergent_speed: 0.0,
        emergence_point: 0.0,
    };
    match rules::max_speed_under_occlusion(&zone, distance_to_conflict, &parsed) {
        Ok(v) => {
            unsafe { *out_speed = v };
            RssStatus::Ok
        }
        Err(_) => RssStatus::InvalidParameter,
    }
}

/// Creates an empty world. Free with `rss_world_free`.
#[no_mangle]
pub extern "C" fn rss_world_new(
    lane_count: u32,
    lane_width: f64,
    legal_speed_limit: f64,
) -> *mut RssWorld {
    if lane_count == 0 || !(lane_width > 0.0) || !(legal_speed_limit >= 0.0) {
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(RssWorld {
        inner: WorldState {
            time: 0.0,
            ego_id: AgentId(0),
            agents: Vec::new(),
            occlusions: Vec::new(),
            conflict_zones: Vec::new(),
            lane_count,
            lane_width,
            legal_speed_limit,
        },
    }))
}

/// Releases a world created by `rss_world_new`. Null is a no-op.
#[no_mangle]
pub extern "C" fn rss_world_free(world: *mut RssWorld) {
    if !world.is_null() {
        drop(unsafe { Box::from_raw(world) });
    }
}

/// Adds one agent. The first agent added becomes ego until
/// `rss_world_set_ego` says otherwise.
#[no_mangle]
pub extern "C" fn rss_world_add_agent(
    world: *mut RssWorld,
    id: u32,
    lane_index: u32,
    s: f64,
    d: f64,
    v_lon: f64,
    v_lat: f64,
    length: f64,
    width: f64,
) -> RssStatus {
    check_null!(world);
    let world = unsafe { &mut *world };
    let first = world.inner.agents.is_empty();
    world.inner.agents.push(VehicleState {
        id: AgentId(id),
        lane_index,
        s,
        d,
        v_lon,
        v_lat,
        length,
        width,
    });
    if first {
        world.inner.ego_id = AgentId(id);
    }
    match world.inner.validate() {
        Ok(()) => RssStatus::Ok,
        Err(_) => {
            world.inner.agents.pop();
            RssStatus::InvalidWorld
        }
    }
}

/// Selects the ego agent by id.
#[no_mangle]
pub extern "C" fn rss_world_set_ego(world: *mut RssWorld, id: u32) -> RssStatus {
    check_null!(world);
    let world = unsafe { &mut *world };
    if world.inner.agent(AgentId(id)).is_err() {
        return RssStatus::UnknownAgent;
    }
    world.inner.ego_id = AgentId(id);
    RssStatus::Ok
}

fn verdict_out(v: &rules::RuleVerdict) -> RssVerdict {
    RssVerdict {
        rule: v.rule,
        status: match v.status {
            RuleStatus::Safe => 0,
            RuleStatus::Dangerous => 1,
            RuleStatus::NotApplicable => 2,
        },
        has_margin: v.margin.is_some(),
        margin: v.margin.unwrap_or(0.0),
        has_counterpart: v.counterpart.is_some(),
        counterpart: v.counterpart.map(|a| a.0).unwrap_or(0),
    }
}

fn ready_world<'a>(world: *const RssWorld) -> Result<&'a WorldState, RssStatus> {
    if world.is_null() {
        return Err(RssStatus::NullPointer);
    }
    let world = unsafe { &*world };
    if world.inner.agents.is_empty() || world.inner.validate().is_err() {
        return Err(RssStatus::InvalidWorld);
    }
    Ok(&world.inner)
}

/// Evaluates rule 1 (safe following distance) for ego.
#[no_mangle]
pub extern "C" fn rss_world_rule1(
    world: *const RssWorld,
    params: *const RssLongitudinalParams,
    out_verdict: *mut RssVerdict,
) -> RssStatus {
    check_null!(params, out_verdict);
    let state = match ready_world(world) {
        Ok(w) => w,
        Err(status) => return status,
    };
    let params = match lon_params(unsafe { &*params }) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let verdict = rules::evaluate_rule1(state, &params);
    unsafe { *out_verdict = verdict_out(&verdict) };
    RssStatus::Ok
}

/// Evaluates rule 2 (safe lateral distance) for ego.
#[no_mangle]
pub extern "C" fn rss_world_rule2(
    world: *const RssWorld,
    params: *const RssLateralParams,
    out_verdict: *mut RssVerdict,
) -> RssStatus {
    check_null!(params, out_verdict);
    let state = match ready_world(world) {
        Ok(w) => w,
        Err(status) => return status,
    };
    let params = match lat_params(unsafe { &*params }) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let verdict = rules::evaluate_rule2(state, &params);
    unsafe { *out_verdict = verdict_out(&verdict) };
    RssStatus::Ok
}

/// Combined proper response over all five rules for ego.
#[no_mangle]
pub extern "C" fn rss_world_proper_response(
    world: *const RssWorld,
    lon: *const RssLongitudinalParams,
    lat: *const RssLateralParams,
    out_response: *mut RssProperResponse,
) -> RssStatus {
    check_null!(lon, lat, out_response);
    let state = match ready_world(world) {
        Ok(w) => w,
        Err(status) => return status,
    };
    let lon = match lon_params(unsafe { &*lon }) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let lat = match lat_params(unsafe { &*lat }) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let response = rules::proper_response(state, &RssParams::new(lon, lat));
    let (maneuver, target_lane) = match response.maneuver {
        Maneuver::Maintain => (0, 0),
        Maneuver::Brake => (1, 0),
        Maneuver::FullBrake => (2, 0),
        Maneuver::LaneChange(lane) => (3, lane),
    };
    unsafe {
        *out_response = RssProperResponse {
            lon_accel_min: response.lon_accel_range.0,
            lon_accel_max: response.lon_accel_range.1,
            lat_accel_min: response.lat_accel_range.0,
            lat_accel_max: response.lat_accel_range.1,
            maneuver,
            target_lane,
        };
    }
    RssStatus::Ok
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lon() -> RssLongitudinalParams {
        RssLongitudinalParams { response_time: 1.0, accel_max: 2.0, brake_min: 4.0, brake_max: 8.0 }
    }

    fn lat() -> RssLateralParams {
        RssLateralParams {
            response_time: 0.5,
            lat_accel_max: 1.0,
            brake_min_1: 2.0,
            brake_min_2: 2.0,
            margin: 0.1,
        }
    }

    #[test]
    fn distance_through_the_c_abi() {
        let mut out = 0.0;
        let status = rss_longitudinal_safe_distance(&lon(), 30.0, 30.0, &mut out);
        assert_eq!(status, RssStatus::Ok);
        assert!((out - 102.75).abs() < 1e-9);

        let status = rss_lateral_safe_distance(&lat(), 1.0, -1.0, &mut out);
        assert_eq!(status, RssStatus::Ok);
        assert!((out - 2.475).abs() < 1e-9);

        let status = rss_two_second_gap(30.0, &mut out);
        assert_eq!(status, RssStatus::Ok);
        assert_eq!(out, 60.0);
    }

    #[test]
    fn invalid_params_and_null_pointers_are_reported() {
        let mut out = 0.0;
        let bad = RssLongitudinalParams { brake_min: 0.0, ..lon() };
        assert_eq!(
            rss_longitudinal_safe_distance(&bad, 10.0, 10.0, &mut out),
            RssStatus::InvalidParameter
        );
        assert_eq!(
            rss_longitudinal_safe_distance(std::ptr::null(), 10.0, 10.0, &mut out),
            RssStatus::NullPointer
        );
        assert_eq!(
            rss_longitudinal_safe_distance(&lon(), 10.0, 10.0, std::ptr::null_mut()),
            RssStatus::NullPointer
        );
        assert_eq!(
            rss_longitudinal_safe_distance(&lon(), -1.0, 10.0, &mut out),
            RssStatus::InvalidParameter
        );
    }

    #[test]
    fn effective_braking_through_the_c_abi() {
        let mut out = lon();
        assert_eq!(rss_effective_braking(&lon(), 0.3, &mut out), RssStatus::Ok);
        assert!((out.brake_min - 2.941995).abs() < 1e-6);
        assert_eq!(out.brake_min, out.brake_max);
        assert_eq!(rss_effective_braking(&lon(), 0.0, &mut out), RssStatus::InvalidParameter);
    }

    #[test]
    fn occlusion_speed_solve_through_the_c_abi() {
        let params = RssLongitudinalParams {
            response_time: 0.5,
            accel_max: 0.0,
            brake_min: 4.0,
            brake_max: 8.0,
        };
        let mut out = 0.0;
        assert_eq!(rss_max_speed_under_occlusion(&params, 20.0, &mut out), RssStatus::Ok);
        assert!((out - 10.8062).abs() < 1e-3);
        assert_eq!(rss_max_speed_under_occlusion(&params, -1.0, &mut out), RssStatus::InvalidParameter);
    }

    #[test]
    fn world_handle_rule_evaluation() {
        let world = rss_world_new(2, 3.5, 50.0);
        assert!(!world.is_null());
        assert_eq!(rss_world_add_agent(world, 0, 0, 0.0, 1.75, 30.0, 0.0, 4.5, 1.8), RssStatus::Ok);
        assert_eq!(
            rss_world_add_agent(world, 1, 0, 104.5, 1.75, 30.0, 0.0, 4.5, 1.8),
            RssStatus::Ok
        );

        let mut verdict = RssVerdict {
            rule: 0,
            status: 0,
            has_margin: false,
            margin: 0.0,
            has_counterpart: false,
            counterpart: 0,
        };
        assert_eq!(rss_world_rule1(world, &lon(), &mut verdict), RssStatus::Ok);
        assert_eq!(verdict.rule, 1);
        assert_eq!(verdict.status, 1); // bumper gap 100 < 102.75
        assert!(verdict.has_margin && verdict.margin < 0.0);
        assert!(verdict.has_counterpart && verdict.counterpart == 1);

        let mut response = RssProperResponse {
            lon_accel_min: 0.0,
            lon_accel_max: 0.0,
            lat_accel_min: 0.0,
            lat_accel_max: 0.0,
            maneuver: 0,
            target_lane: 0,
        };
        assert_eq!(rss_world_proper_response(world, &lon(), &lat(), &mut response), RssStatus::Ok);
        assert_eq!(response.maneuver, 1);
        assert_eq!(response.lon_accel_max, -4.0);

        // Unknown ego id is rejected; an out-of-range agent is rolled back.
        assert_eq!(rss_world_set_ego(world, 9), RssStatus::UnknownAgent);
        assert_eq!(
            rss_world_add_agent(world, 2, 7, 0.0, 1.75, 30.0, 0.0, 4.5, 1.8),
            RssStatus::InvalidWorld
        );
        assert_eq!(rss_world_set_ego(world, 1), RssStatus::Ok);

        rss_world_free(world);
        rss_world_free(std::ptr::null_mut());
    }
}
