//! Brute-force worst-case rollouts that ground-truth the closed-form safe
//! distances.
//!
//! Each oracle binary-searches the minimal initial gap whose worst-case
//! rollout never violates the safety predicate. Rollouts advance in `dt`
//! slices but split each slice at phase boundaries (end of response time,
//! braking to zero) so piecewise-constant-acceleration motion integrates
//! exactly, and the gap minimum inside a slice is checked at the interior
//! extremum of the quadratic as well as at its ends.

use crate::kinematics::{LateralParams, LongitudinalParams};

const SEARCH_TOL: f64 = 1e-4;

/// Speeds below this are snapped to zero so braking phase splits cannot
/// underflow into zero-length segments.
const ZERO_SPEED: f64 = 1e-12;

/// One vehicle in a rollout, moving along a single axis. `toward` is the
/// signed direction that closes the pair gap.
#[derive(Debug, Clone, Copy)]
struct Body {
    /// Displacement along the closing direction.
    travel: f64,
    /// Velocity along the closing direction.
    v: f64,
}

/// Minimum of the gap quadratic g(τ) = g0 + c1·τ + ½·c2·τ² over [0, seg].
fn quad_min(g0: f64, c1: f64, c2: f64, seg: f64) -> f64 {
    let end = g0 + c1 * seg + 0.5 * c2 * seg * seg;
    let mut min = g0.min(end);
    if c2 != 0.0 {
        let vertex = -c1 / c2;
        if vertex > 0.0 && vertex < seg && c2 > 0.0 {
            // c2 > 0 means the gap quadratic opens upward: interior minimum.
            min = min.min(g0 + c1 * vertex + 0.5 * c2 * vertex * vertex);
        }
    }
    min
}

/// Worst-case longitudinal rollout: rear accelerates at `accel_max` for the
/// response time then brakes at `brake_min`; front brakes at `brake_max`
/// from t = 0; both to standstill. True when the pair gap ever drops below
/// zero.
fn longitudinal_collides(
    gap0: f64,
    v_rear: f64,
    v_front: f64,
    params: &LongitudinalParams,
    dt: f64,
) -> bool {
    let p = params.response_time;
    let mut rear = Body { travel: 0.0, v: v_rear };
    let mut front = Body { travel: 0.0, v: v_front };
    let mut t = 0.0;
    loop {
        if rear.v < ZERO_SPEED {
            rear.v = 0.0;
        }
        if front.v < ZERO_SPEED {
            front.v = 0.0;
        }
        let responding = t < p;
        // A stopped rear vehicle never moves again and the front only moves
        // away, so the gap cannot shrink from here.
        if !responding && rear.v <= 0.0 {
            return false;
        }
        let a_rear = if responding {
            params.accel_max
        } else if rear.v > 0.0 {
            -params.brake_min
        } else {
            0.0
        };
        let a_front = if front.v > 0.0 { -params.brake_max } else { 0.0 };

        let mut seg = dt;
        if responding {
            seg = seg.min(p - t);
        }
        if a_rear < 0.0 {
            seg = seg.min(rear.v / params.brake_min);
        }
        if a_front < 0.0 {
            seg = seg.min(front.v / params.brake_max);
        }
        let gap = gap0 + front.travel - rear.travel;
        let c1 = front.v - rear.v;
        let c2 = a_front - a_rear;
        if quad_min(gap, c1, c2, seg) < 0.0 {
            return true;
        }
        rear.travel += rear.v * seg + 0.5 * a_rear * seg * seg;
        rear.v = (rear.v + a_rear * seg).max(0.0);
        front.travel += front.v * seg + 0.5 * a_front * seg * seg;
        front.v = (front.v + a_front * seg).max(0.0);
        t += seg;
        if responding && p - t < 1e-12 {
            t = p;
        }
    }
}

/// Minimal initial gap that survives the worst-case longitudinal rollout,
/// to within the search tolerance.
pub fn worst_case_gap_oracle(
    v_rear: f64,
    v_front: f64,
    params: &LongitudinalParams,
    dt: f64,
) -> f64 {
    if !longitudinal_collides(0.0, v_rear, v_front, params, dt) {
        return 0.0;
    }
    let p = params.response_time;
    let v_peak = v_rear + params.accel_max * p;
    let mut hi =
        v_rear * p + 0.5 * params.accel_max * p * p + v_peak * v_peak / (2.0 * params.brake_min)
            + 1.0;
    let mut lo = 0.0;
    while longitudinal_collides(hi, v_rear, v_front, params, dt) {
        hi *= 2.0;
    }
    while hi - lo > SEARCH_TOL {
        let mid = 0.5 * (hi + lo);
        if longitudinal_collides(mid, v_rear, v_front, params, dt) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Worst-case lateral rollout: both vehicles accelerate toward each other
/// for the response time, then each brakes its closing motion; a vehicle
/// already receding coasts. True when the gap ever drops below the margin.
fn lateral_closes_below_margin(
    gap0: f64,
    v1: f64,
    v2: f64,
    params: &LateralParams,
    dt: f64,
) -> bool {
    let p = params.response_time;
    // Toward-velocities: rightward for vehicle 1, leftward for vehicle 2.
    let mut one = Body { travel: 0.0, v: v1 };
    let mut two = Body { travel: 0.0, v: -v2 };
    let mut t = 0.0;
    loop {
        if one.v.abs() < ZERO_SPEED {
            one.v = 0.0;
        }
        if two.v.abs() < ZERO_SPEED {
            two.v = 0.0;
        }
        let responding = t < p;
        if !responding && one.v <= 0.0 && two.v <= 0.0 {
            return false;
        }
        let a1 = if responding {
            params.lat_accel_max
        } else if one.v > 0.0 {
            -params.brake_min_1
        } else {
            0.0
        };
        let a2 = if responding {
            params.lat_accel_max
        } else if two.v > 0.0 {
            -params.brake_min_2
        } else {
            0.0
        };

        let mut seg = dt;
        if responding {
            seg = seg.min(p - t);
        }
        if a1 < 0.0 {
            seg = seg.min(one.v / params.brake_min_1);
        }
        if a2 < 0.0 {
            seg = seg.min(two.v / params.brake_min_2);
        }
        let gap = gap0 - one.travel - two.travel;
        let c1 = -(one.v + two.v);
        let c2 = -(a1 + a2);
        if quad_min(gap - params.margin, c1, c2, seg) < 0.0 {
            return true;
        }
        one.travel += one.v * seg + 0.5 * a1 * seg * seg;
        two.travel += two.v * seg + 0.5 * a2 * seg * seg;
        one.v += a1 * seg;
        two.v += a2 * seg;
        if !responding {
            // Braking stops a vehicle's closing motion; it never reverses it.
            if a1 < 0.0 && one.v < 0.0 {
                one.v = 0.0;
            }
            if a2 < 0.0 && two.v < 0.0 {
                two.v = 0.0;
            }
        }
        t += seg;
        if responding && p - t < 1e-12 {
            t = p;
        }
    }
}

/// Minimal initial lateral gap whose worst-case rollout never closes below
/// the fluctuation margin.
pub fn worst_case_lateral_oracle(v1: f64, v2: f64, params: &LateralParams, dt: f64) -> f64 {
    if !lateral_closes_below_margin(params.margin, v1, v2, params, dt) {
        return params.margin;
    }
    let p = params.response_time;
    let u1 = v1.abs() + params.lat_accel_max * p;
    let u2 = v2.abs() + params.lat_accel_max * p;
    let mut hi = params.margin
        + (u1 + u2) * p
        + u1 * u1 / (2.0 * params.brake_min_1)
        + u2 * u2 / (2.0 * params.brake_min_2)
        + 1.0;
    let mut lo = params.margin;
    while lateral_closes_below_margin(hi, v1, v2, params, dt) {
        hi *= 2.0;
    }
    while hi - lo > SEARCH_TOL {
        let mid = 0.5 * (hi + lo);
        if lateral_closes_below_margin(mid, v1, v2, params, dt) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{
        lateral_safe_distance, longitudinal_safe_distance, LateralPair, LongitudinalPair,
    };

    #[test]
    fn longitudinal_oracle_trivial_cases() {
        let params = LongitudinalParams::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(worst_case_gap_oracle(0.0, 0.0, &params, 1e-3), 0.0);

        // Front outruns rear in the worst case.
        let params = LongitudinalParams::new(0.5, 1.0, 3.0, 6.0).unwrap();
        assert_eq!(worst_case_gap_oracle(10.0, 20.0, &params, 1e-3), 0.0);
    }

    #[test]
    fn longitudinal_oracle_matches_hand_value() {
        let params = LongitudinalParams::new(1.0, 2.0, 4.0, 8.0).unwrap();
        let oracle = worst_case_gap_oracle(30.0, 30.0, &params, 1e-3);
        assert!(
            (oracle - 102.75).abs() < 1e-3 * 60.0 + 1e-3,
            "oracle {} vs closed form 102.75",
            oracle
        );
    }

    #[test]
    fn lateral_oracle_matches_hand_value() {
        let params = LateralParams::new(0.5, 1.0, 2.0, 2.0, 0.1).unwrap();
        let oracle = worst_case_lateral_oracle(1.0, -1.0, &params, 1e-3);
        assert!((oracle - 2.475).abs() < 1e-3 * 2.0 + 1e-3, "oracle {}", oracle);
    }

    #[test]
    fn lateral_oracle_trivial_cases() {
        let params = LateralParams::new(0.0, 0.0, 1.0, 1.0, 0.1).unwrap();
        assert_eq!(worst_case_lateral_oracle(0.0, 0.0, &params, 1e-3), 0.1);

        // Strongly diverging: only the margin is needed.
        let params = LateralParams::new(0.2, 1.0, 2.0, 2.0, 0.1).unwrap();
        assert_eq!(worst_case_lateral_oracle(-2.0, 2.0, &params, 1e-3), 0.1);
    }

    #[test]
    fn oracle_agrees_with_closed_form_on_mixed_signs() {
        let params = LateralParams::new(0.7, 0.8, 1.5, 2.5, 0.25).unwrap();
        for (v1, v2) in [(2.0, 1.0), (-0.5, -1.5), (0.3, 0.4), (-1.0, -0.2), (1.5, -2.5)] {
            let closed = lateral_safe_distance(
                &LateralPair { v1_lat: v1, v2_lat: v2, lateral_gap: 0.0 },
                &params,
            );
            let oracle = worst_case_lateral_oracle(v1, v2, &params, 1e-3);
            assert!(
                (closed - oracle).abs() < 1e-3 * (v1.abs() + v2.abs()) + 1e-3,
                "v1={} v2={}: closed {} oracle {}",
                v1,
                v2,
                closed,
                oracle
            );
        }
    }

    #[test]
    fn oracle_agrees_with_closed_form_on_longitudinal_spot_checks() {
        for (vr, vf, p, a, bmin, bmax) in [
            (20.0, 10.0, 0.8, 1.5, 3.0, 7.0),
            (5.0, 0.0, 0.2, 0.5, 2.0, 2.0),
            (40.0, 35.0, 1.5, 3.0, 5.0, 9.0),
            (0.0, 10.0, 1.0, 2.0, 4.0, 8.0),
        ] {
            let params = LongitudinalParams::new(p, a, bmin, bmax).unwrap();
            let closed = longitudinal_safe_distance(
                &LongitudinalPair { v_rear: vr, v_front: vf, gap: 0.0 },
                &params,
            );
            let oracle = worst_case_gap_oracle(vr, vf, &params, 1e-3);
            assert!(
                (closed - oracle).abs() < 1e-3 * (vr + vf) + 1e-3,
                "closed {} oracle {}",
                closed,
                oracle
            );
        }
    }
}
