//! Closed-form safety-distance kinematics.
//!
//! All quantities are SI (meters, seconds, m/s, m/s²). Decelerations are
//! stored as positive magnitudes; the sign convention lives in the formulas.
//! Everything here is a pure function of its inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.80665;

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("{0} must be nonnegative, got {1}")]
    Negative(&'static str, f64),
    #[error("{0} must be strictly positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error("brake_min ({0}) must not exceed brake_max ({1})")]
    BrakeOrdering(f64, f64),
}

fn require_finite(name: &'static str, x: f64) -> Result<f64, KinematicsError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(KinematicsError::NonFinite(name))
    }
}

fn require_nonneg(name: &'static str, x: f64) -> Result<f64, KinematicsError> {
    require_finite(name, x)?;
    if x < 0.0 {
        Err(KinematicsError::Negative(name, x))
    } else {
        Ok(x)
    }
}

fn require_positive(name: &'static str, x: f64) -> Result<f64, KinematicsError> {
    require_finite(name, x)?;
    if x <= 0.0 {
        Err(KinematicsError::NonPositive(name, x))
    } else {
        Ok(x)
    }
}

/// Longitudinal response parameters: the rear vehicle may accelerate at up to
/// `accel_max` for `response_time` seconds before braking at no less than
/// `brake_min`; the front vehicle brakes at no more than `brake_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLongitudinalParams")]
pub struct LongitudinalParams {
    pub response_time: f64,
    pub accel_max: f64,
    pub brake_min: f64,
    pub brake_max: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLongitudinalParams {
    response_time: f64,
    accel_max: f64,
    brake_min: f64,
    brake_max: f64,
}

impl TryFrom<RawLongitudinalParams> for LongitudinalParams {
    type Error = KinematicsError;
    fn try_from(raw: RawLongitudinalParams) -> Result<Self, Self::Error> {
        LongitudinalParams::new(raw.response_time, raw.accel_max, raw.brake_min, raw.brake_max)
    }
}

impl LongitudinalParams {
    pub fn new(
        response_time: f64,
        accel_max: f64,
        brake_min: f64,
        brake_max: f64,
    ) -> Result<Self, KinematicsError> {
        require_nonneg("response_time", response_time)?;
        require_nonneg("accel_max", accel_max)?;
        require_positive("brake_min", brake_min)?;
        require_positive("brake_max", brake_max)?;
        if brake_min > brake_max {
            return Err(KinematicsError::BrakeOrdering(brake_min, brake_max));
        }
        Ok(Self { response_time, accel_max, brake_min, brake_max })
    }
}

/// Lateral response parameters. `brake_min_1` belongs to the left vehicle,
/// `brake_min_2` to the right vehicle; `margin` is the residual lateral
/// distance that must always remain between the two bodies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLateralParams")]
pub struct LateralParams {
    pub response_time: f64,
    pub lat_accel_max: f64,
    pub brake_min_1: f64,
    pub brake_min_2: f64,
    pub margin: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLateralParams {
    response_time: f64,
    lat_accel_max: f64,
    brake_min_1: f64,
    brake_min_2: f64,
    margin: f64,
}

impl TryFrom<RawLateralParams> for LateralParams {
    type Error = KinematicsError;
    fn try_from(raw: RawLateralParams) -> Result<Self, Self::Error> {
        LateralParams::new(
            raw.response_time,
            raw.lat_accel_max,
            raw.brake_min_1,
            raw.brake_min_2,
            raw.margin,
        )
    }
}

impl LateralParams {
    pub fn new(
        response_time: f64,
        lat_accel_max: f64,
        brake_min_1: f64,
        brake_min_2: f64,
        margin: f64,
    ) -> Result<Self, KinematicsError> {
        require_nonneg("response_time", response_time)?;
        require_nonneg("lat_accel_max", lat_accel_max)?;
        require_positive("brake_min_1", brake_min_1)?;
        require_positive("brake_min_2", brake_min_2)?;
        require_nonneg("margin", margin)?;
        Ok(Self { response_time, lat_accel_max, brake_min_1, brake_min_2, margin })
    }
}

/// A rear/front vehicle pair in the same lane. `gap` is bumper to bumper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongitudinalPair {
    pub v_rear: f64,
    pub v_front: f64,
    pub gap: f64,
}

impl LongitudinalPair {
    pub fn new(v_rear: f64, v_front: f64, gap: f64) -> Result<Self, KinematicsError> {
        require_nonneg("v_rear", v_rear)?;
        require_nonneg("v_front", v_front)?;
        require_nonneg("gap", gap)?;
        Ok(Self { v_rear, v_front, gap })
    }
}

/// A left/right vehicle pair. Lateral velocities are signed, rightward
/// positive; vehicle 1 is the left vehicle by convention. `lateral_gap` is
/// the distance between the nearest side surfaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LateralPair {
    pub v1_lat: f64,
    pub v2_lat: f64,
    pub lateral_gap: f64,
}

impl LateralPair {
    pub fn new(v1_lat: f64, v2_lat: f64, lateral_gap: f64) -> Result<Self, KinematicsError> {
        require_finite("v1_lat", v1_lat)?;
        require_finite("v2_lat", v2_lat)?;
        require_nonneg("lateral_gap", lateral_gap)?;
        Ok(Self { v1_lat, v2_lat, lateral_gap })
    }
}

/// Road adhesion context used to derate braking capability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAdhesionContext")]
pub struct AdhesionContext {
    pub adhesion_coefficient: f64,
    pub gravity: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdhesionContext {
    adhesion_coefficient: f64,
    #[serde(default = "default_gravity")]
    gravity: f64,
}

fn default_gravity() -> f64 {
    GRAVITY
}

impl TryFrom<RawAdhesionContext> for AdhesionContext {
    type Error = KinematicsError;
    fn try_from(raw: RawAdhesionContext) -> Result<Self, Self::Error> {
        require_positive("adhesion_coefficient", raw.adhesion_coefficient)?;
        require_positive("gravity", raw.gravity)?;
        Ok(AdhesionContext { adhesion_coefficient: raw.adhesion_coefficient, gravity: raw.gravity })
    }
}

impl AdhesionContext {
    pub fn new(adhesion_coefficient: f64) -> Result<Self, KinematicsError> {
        require_positive("adhesion_coefficient", adhesion_coefficient)?;
        Ok(Self { adhesion_coefficient, gravity: GRAVITY })
    }

    /// Maximum deceleration the road surface can transmit, μ·g.
    pub fn brake_limit(&self) -> f64 {
        self.adhesion_coefficient * self.gravity
    }
}

/// The positive-part clamp, max(x, 0). Rejects non-finite input.
pub fn positive_part(x: f64) -> Result<f64, KinematicsError> {
    require_finite("x", x)?;
    Ok(clamp_nonneg(x))
}

#[inline]
fn clamp_nonneg(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Worst-case distance to a full stop: travel while accelerating at
/// `accel_max` for `response_time`, then braking at `brake` to standstill.
pub fn stopping_distance(
    v: f64,
    response_time: f64,
    accel_max: f64,
    brake: f64,
) -> Result<f64, KinematicsError> {
    require_nonneg("v", v)?;
    require_nonneg("response_time", response_time)?;
    require_nonneg("accel_max", accel_max)?;
    require_positive("brake", brake)?;
    Ok(stopping_distance_unchecked(v, response_time, accel_max, brake))
}

#[inline]
fn stopping_distance_unchecked(v: f64, p: f64, accel: f64, brake: f64) -> f64 {
    let v_peak = v + accel * p;
    v * p + 0.5 * accel * p * p + v_peak * v_peak / (2.0 * brake)
}

/// Minimum safe following distance: the rear vehicle can come to a stop
/// without reaching the front vehicle even if the front brakes at its
/// hardest while the rear spends the full response time accelerating.
pub fn longitudinal_safe_distance(pair: &LongitudinalPair, params: &LongitudinalParams) -> f64 {
    let rear = stopping_distance_unchecked(
        pair.v_rear,
        params.response_time,
        params.accel_max,
        params.brake_min,
    );
    let front = pair.v_front * pair.v_front / (2.0 * params.brake_max);
    clamp_nonneg(rear - front)
}

/// Practical two-second-rule following distance, 2·v.
pub fn two_second_gap(v_rear: f64) -> Result<f64, KinematicsError> {
    require_nonneg("v_rear", v_rear)?;
    Ok(2.0 * v_rear)
}

/// Minimum safe lateral distance between a left vehicle (1) and a right
/// vehicle (2) with signed rightward-positive lateral velocities.
///
/// Worst case: both vehicles accelerate toward each other at `lat_accel_max`
/// for the response time, then each brakes its motion toward the other (a
/// vehicle already receding keeps receding). The returned distance is the
/// margin plus the largest total closing displacement of that maneuver,
/// clamped so the result is never below the margin.
pub fn lateral_safe_distance(pair: &LateralPair, params: &LateralParams) -> f64 {
    let p = params.response_time;
    let accel = params.lat_accel_max;
    // Velocities toward the other vehicle: rightward for 1, leftward for 2.
    let u1 = pair.v1_lat;
    let u2 = -pair.v2_lat;
    let u1p = u1 + accel * p;
    let u2p = u2 + accel * p;
    let response = 0.5 * (u1 + u1p) * p + 0.5 * (u2 + u2p) * p;

    let closing = if u1p > 0.0 && u2p > 0.0 {
        // Both still closing after the response time; each brakes to a halt.
        response + u1p * u1p / (2.0 * params.brake_min_1) + u2p * u2p / (2.0 * params.brake_min_2)
    } else if u1p > 0.0 && u1p + u2p > 0.0 {
        // Only vehicle 1 closes; vehicle 2 recedes at constant u2p ≤ 0.
        // Closing stops once vehicle 1 has braked down to vehicle 2's pace.
        let rel = u1p + u2p;
        response + rel * rel / (2.0 * params.brake_min_1)
    } else if u2p > 0.0 && u1p + u2p > 0.0 {
        let rel = u1p + u2p;
        response + rel * rel / (2.0 * params.brake_min_2)
    } else {
        // Relative motion never closes after the response time, and during it
        // the closing rate only grows toward u1p + u2p ≤ 0: no approach.
        return params.margin;
    };

    params.margin + clamp_nonneg(closing)
}

/// Caps both braking parameters at what the road surface can transmit.
pub fn effective_braking(params: &LongitudinalParams, ctx: &AdhesionContext) -> LongitudinalParams {
    let cap = ctx.brake_limit();
    LongitudinalParams {
        response_time: params.response_time,
        accel_max: params.accel_max,
        brake_min: params.brake_min.min(cap),
        brake_max: params.brake_max.min(cap),
    }
}
