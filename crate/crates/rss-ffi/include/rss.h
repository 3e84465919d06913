#ifndef RSS_FFI_H
#define RSS_FFI_H

/* Generated by cbindgen from the rss-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum RssStatus {
  RssStatus_Ok = 0,
  RssStatus_NullPointer = 1,
  RssStatus_InvalidParameter = 2,
  RssStatus_InvalidWorld = 3,
  RssStatus_UnknownAgent = 4,
} RssStatus;

/**
 * Opaque world under construction/evaluation.
 */
typedef struct RssWorld RssWorld;

/**
 * Longitudinal response parameters (decelerations as positive magnitudes).
 */
typedef struct RssLongitudinalParams {
  double response_time;
  double accel_max;
  double brake_min;
  double brake_max;
} RssLongitudinalParams;

/**
 * Lateral response parameters; vehicle 1 is the left vehicle.
 */
typedef struct RssLateralParams {
  double response_time;
  double lat_accel_max;
  double brake_min_1;
  double brake_min_2;
  double margin;
} RssLateralParams;

/**
 * Rule evaluation result. `status`: 0 safe, 1 dangerous, 2 not applicable.
 * `margin` and `counterpart` are valid only when their `has_` flag is set.
 */
typedef struct RssVerdict {
  uint8_t rule;
  uint8_t status;
  bool has_margin;
  double margin;
  bool has_counterpart;
  uint32_t counterpart;
} RssVerdict;

/**
 * Combined proper response. `maneuver`: 0 maintain, 1 brake, 2 full brake,
 * 3 lane change (then `target_lane` is valid). Accelerations are signed
 * with braking negative.
 */
typedef struct RssProperResponse {
  double lon_accel_min;
  double lon_accel_max;
  double lat_accel_min;
  double lat_accel_max;
  uint8_t maneuver;
  uint32_t target_lane;
} RssProperResponse;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Minimum safe following distance for a rear/front pair.
 */
enum RssStatus rss_longitudinal_safe_distance(const struct RssLongitudinalParams *params,
                                              double v_rear,
                                              double v_front,
                                              double *out_distance);

/**
 * Minimum safe lateral distance; `v1` belongs to the left vehicle,
 * rightward positive.
 */
enum RssStatus rss_lateral_safe_distance(const struct RssLateralParams *params,
                                         double v1_lat,
                                         double v2_lat,
                                         double *out_distance);

/**
 * Two-second-rule heuristic following distance.
 */
enum RssStatus rss_two_second_gap(double v_rear, double *out_distance);

/**
 * Worst-case stopping distance with response delay.
 */
enum RssStatus rss_stopping_distance(double v,
                                     double response_time,
                                     double accel_max,
                                     double brake,
                                     double *out_distance);

/**
 * Caps braking parameters at what the road adhesion can transmit
 * (standard gravity).
 */
enum RssStatus rss_effective_braking(const struct RssLongitudinalParams *params,
                                     double adhesion_coefficient,
                                     struct RssLongitudinalParams *out_params);

/**
 * Largest speed from which the worst-case stopping distance fits within
 * `distance_to_conflict`.
 */
enum RssStatus rss_max_speed_under_occlusion(const struct RssLongitudinalParams *params,
                                             double distance_to_conflict,
                                             double *out_speed);

/**
 * Creates an empty world. Free with `rss_world_free`.
 */
struct RssWorld *rss_world_new(uint32_t lane_count, double lane_width, double legal_speed_limit);

/**
 * Releases a world created by `rss_world_new`. Null is a no-op.
 */
void rss_world_free(struct RssWorld *world);

/**
 * Adds one agent. The first agent added becomes ego until
 * `rss_world_set_ego` says otherwise.
 */
enum RssStatus rss_world_add_agent(struct RssWorld *world,
                                   uint32_t id,
                                   uint32_t lane_index,
                                   double s,
                                   double d,
                                   double v_lon,
                                   double v_lat,
                                   double length,
                                   double width);

/**
 * Selects the ego agent by id.
 */
enum RssStatus rss_world_set_ego(struct RssWorld *world, uint32_t id);

/**
 * Evaluates rule 1 (safe following distance) for ego.
 */
enum RssStatus rss_world_rule1(const struct RssWorld *world,
                               const struct RssLongitudinalParams *params,
                               struct RssVerdict *out_verdict);

/**
 * Evaluates rule 2 (safe lateral distance) for ego.
 */
enum RssStatus rss_world_rule2(const struct RssWorld *world,
                               const struct RssLateralParams *params,
                               struct RssVerdict *out_verdict);

/**
 * Combined proper response over all five rules for ego.
 */
enum RssStatus rss_world_proper_response(const struct RssWorld *world,
                                         const struct RssLongitudinalParams *lon,
                                         const struct RssLateralParams *lat,
                                         struct RssProperResponse *out_response);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RSS_FFI_H */
