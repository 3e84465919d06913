//! Property tests for the module invariants: clamp and decomposition
//! identities, verdict monotonicity, proper-response consistency, evasion
//! re-evaluation, and derating behavior.

use proptest::prelude::*;

use rss_core::kinematics::{
    effective_braking, lateral_safe_distance, longitudinal_safe_distance, positive_part,
    stopping_distance, AdhesionContext, LateralPair, LateralParams, LongitudinalPair,
    LongitudinalParams,
};
use rss_core::rules::{
    evaluate_rule1, evaluate_rule1_for, evaluate_rule2_for, plan_evasion, proper_response,
    AgentId, Maneuver, RssParams, RuleStatus, VehicleState, WorldState,
};

fn lon_params() -> impl Strategy<Value = LongitudinalParams> {
    (0.0..2.0f64, 0.0..5.0f64, 0.5..8.0f64, 0.0..4.0f64).prop_map(|(p, a, bmin, extra)| {
        LongitudinalParams::new(p, a, bmin, bmin + extra).unwrap()
    })
}

fn lat_params() -> impl Strategy<Value = LateralParams> {
    (0.0..2.0f64, 0.0..2.0f64, 0.2..4.0f64, 0.2..4.0f64, 0.0..1.0f64)
        .prop_map(|(p, a, b1, b2, mu)| LateralParams::new(p, a, b1, b2, mu).unwrap())
}

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

fn follow_world(gap: f64, v_rear: f64, v_front: f64) -> WorldState {
    WorldState {
        time: 0.0,
        ego_id: AgentId(0),
        agents: vec![vehicle(0, 0, 0.0, v_rear), vehicle(1, 0, gap + 4.5, v_front)],
        occlusions: vec![],
        conflict_zones: vec![],
        lane_count: 1,
        lane_width: 3.5,
        legal_speed_limit: 50.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn clamp_is_exact_and_nonnegative(x in -1e9..1e9f64) {
        let clamped = positive_part(x).unwrap();
        prop_assert!(clamped >= 0.0);
        if x >= 0.0 {
            prop_assert_eq!(clamped, x);
        } else {
            prop_assert_eq!(clamped, 0.0);
        }
    }

    #[test]
    fn longitudinal_decomposes_exactly(
        params in lon_params(),
        v_rear in 0.0..60.0f64,
        v_front in 0.0..60.0f64,
    ) {
        let pair = LongitudinalPair::new(v_rear, v_front, 0.0).unwrap();
        let d = longitudinal_safe_distance(&pair, &params);
        let rear = stopping_distance(
            v_rear, params.response_time, params.accel_max, params.brake_min,
        ).unwrap();
        let front = v_front * v_front / (2.0 * params.brake_max);
        prop_assert_eq!(d, positive_part(rear - front).unwrap());
        prop_assert!(d >= 0.0);
        if rear - front >= 0.0 {
            prop_assert_eq!(d, rear - front);
        }
    }

    #[test]
    fn lateral_reduces_to_margin_at_rest(mu in 0.0..2.0f64, b in 0.2..4.0f64) {
        let params = LateralParams::new(0.0, 1.5, b, b, mu).unwrap();
        let pair = LateralPair::new(0.0, 0.0, 0.0).unwrap();
        prop_assert_eq!(lateral_safe_distance(&pair, &params), mu);
    }

    #[test]
    fn lateral_result_at_least_margin(
        params in lat_params(),
        v1 in -6.0..6.0f64,
        v2 in -6.0..6.0f64,
    ) {
        let pair = LateralPair::new(v1, v2, 0.0).unwrap();
        prop_assert!(lateral_safe_distance(&pair, &params) >= params.margin);
    }

    #[test]
    fn widening_gap_never_flips_safe_to_dangerous(
        params in lon_params(),
        v_rear in 0.0..50.0f64,
        v_front in 0.0..50.0f64,
        gap in 0.0..200.0f64,
        widen in 0.0..100.0f64,
    ) {
        let bundle = RssParams::new(params, LateralParams::new(0.5, 1.0, 2.0, 2.0, 0.1).unwrap());
        let near = evaluate_rule1(&follow_world(gap, v_rear, v_front), &bundle.longitudinal);
        let far = evaluate_rule1(&follow_world(gap + widen, v_rear, v_front), &bundle.longitudinal);
        if near.status == RuleStatus::Safe {
            prop_assert_eq!(far.status, RuleStatus::Safe);
        }
    }

    #[test]
    fn no_maintain_while_dangerous(
        params in lon_params(),
        v_rear in 0.0..50.0f64,
        v_front in 0.0..50.0f64,
        gap in 0.5..250.0f64,
    ) {
        let bundle = RssParams::new(params, LateralParams::new(0.5, 1.0, 2.0, 2.0, 0.1).unwrap());
        let world = follow_world(gap, v_rear, v_front);
        let verdict = evaluate_rule1(&world, &bundle.longitudinal);
        let response = proper_response(&world, &bundle);
        if verdict.status == RuleStatus::Dangerous {
            prop_assert_ne!(response.maneuver, Maneuver::Maintain);
            if response.maneuver == Maneuver::Brake {
                // Any compliant braking is at least brake_min.
                prop_assert!(response.lon_accel_range.1 <= -bundle.longitudinal.brake_min);
            }
        } else {
            // Rule 1 safe and nothing else applies in this world.
            prop_assert_eq!(response.maneuver, Maneuver::Maintain);
        }
    }

    #[test]
    fn evasion_lane_change_is_safe_on_reevaluation(
        blocker_gap in 5.0..40.0f64,
        follower_s in -120.0..40.0f64,
        follower_v in 0.0..40.0f64,
        ego_v in 5.0..40.0f64,
    ) {
        let bundle = RssParams::new(
            LongitudinalParams::new(1.0, 2.0, 4.0, 8.0).unwrap(),
            LateralParams::new(0.5, 1.0, 2.0, 2.0, 0.1).unwrap(),
        );
        // Ego in the middle lane behind a stopped obstacle; one other agent
        // somewhere in the right lane. Left lane stays empty.
        let ego = vehicle(0, 1, 0.0, ego_v);
        let blocker = vehicle(1, 1, blocker_gap + 4.5, 0.0);
        let follower = vehicle(2, 2, follower_s, follower_v);
        let world = WorldState {
            time: 0.0,
            ego_id: AgentId(0),
            agents: vec![ego, blocker, follower],
            occlusions: vec![],
            conflict_zones: vec![],
            lane_count: 3,
            lane_width: 3.5,
            legal_speed_limit: 50.0,
        };
        let response = plan_evasion(&world, &bundle);
        if let Maneuver::LaneChange(target) = response.maneuver {
            let mut hypothetical = world.clone();
            for agent in &mut hypothetical.agents {
                if agent.id == AgentId(0) {
                    agent.lane_index = target;
                    agent.d = (target as f64 + 0.5) * 3.5;
                    agent.v_lat = 0.0;
                }
            }
            for agent in &hypothetical.agents {
                let r1 = evaluate_rule1_for(&hypothetical, agent.id, &bundle.longitudinal).unwrap();
                let r2 = evaluate_rule2_for(&hypothetical, agent.id, &bundle.lateral).unwrap();
                for v in [r1, r2] {
                    let involves_ego =
                        agent.id == AgentId(0) || v.counterpart == Some(AgentId(0));
                    if involves_ego {
                        prop_assert_ne!(
                            v.status,
                            RuleStatus::Dangerous,
                            "agent {} rule {} dangerous after evasion to lane {}",
                            agent.id, v.rule, target
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn derating_is_idempotent_and_shrinking(
        params in lon_params(),
        mu in 0.05..1.5f64,
        v_rear in 0.0..50.0f64,
    ) {
        let ctx = AdhesionContext::new(mu).unwrap();
        let once = effective_braking(&params, &ctx);
        prop_assert_eq!(effective_braking(&once, &ctx), once);
        prop_assert!(once.brake_min <= params.brake_min);
        prop_assert!(once.brake_max <= params.brake_max);
        prop_assert!(once.brake_min <= once.brake_max);

        // Against a stationary obstacle, losing grip never shortens d_min.
        let pair = LongitudinalPair::new(v_rear, 0.0, 0.0).unwrap();
        let nominal = longitudinal_safe_distance(&pair, &params);
        prop_assert!(longitudinal_safe_distance(&pair, &once) >= nominal);
    }

    #[test]
    fn occlusion_solve_is_tight(
        distance in 0.0..300.0f64,
        params in lon_params(),
    ) {
        let zone = rss_core::rules::OcclusionZone {
            s_start: 0.0,
            s_end: 1.0,
            side: rss_core::rules::Side::Right,
            max_emergent_speed: 1.0,
            emergence_point: 0.5,
        };
        let v = rss_core::rules::max_speed_under_occlusion(&zone, distance, &params).unwrap();
        prop_assert!(v >= 0.0);
        // Even a stopped vehicle covers ground in the worst case (it may
        // accelerate through the response time), so distances below that
        // floor admit no positive speed at all.
        let floor = stopping_distance(
            0.0, params.response_time, params.accel_max, params.brake_min,
        ).unwrap();
        if distance < floor {
            prop_assert_eq!(v, 0.0);
        } else {
            let stop = stopping_distance(
                v, params.response_time, params.accel_max, params.brake_min,
            ).unwrap();
            prop_assert!(stop <= distance + 1e-6, "stop {} exceeds distance {}", stop, distance);
            let above = stopping_distance(
                v + 1e-6, params.response_time, params.accel_max, params.brake_min,
            ).unwrap();
            prop_assert!(above >= distance - 1e-6);
        }
    }
}
