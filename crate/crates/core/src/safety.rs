//! Longitudinal Responsibility-Sensitive-Safety checks between the ego
//! vehicle and each object, on tracks (perceived) or ground truth (true).

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::scene::{OrientedBox, TruthObject};
use crate::tracking::Track;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RssParams {
    /// Seconds before the rear vehicle starts braking.
    pub response_time: f64,
    pub a_max_accel: f64,
    pub b_min_brake: f64,
    pub b_max_brake: f64,
    /// Objects laterally further than this from the ego lane center are
    /// ignored.
    pub lane_margin: f64,
    /// Distance from the ego origin to its front bumper.
    pub ego_front_offset: f64,
}

impl Default for RssParams {
    fn default() -> Self {
        Self {
            response_time: 1.0,
            a_max_accel: 3.5,
            b_min_brake: 4.0,
            b_max_brake: 8.0,
            lane_margin: 2.5,
            ego_front_offset: 2.0,
        }
    }
}

impl RssParams {
    pub fn is_valid(&self) -> bool {
        self.response_time > 0.0
            && self.a_max_accel > 0.0
            && self.b_min_brake > 0.0
            && self.b_max_brake >= self.b_min_brake
            && self.lane_margin >= 0.0
    }
}

/// Minimum safe gap for a rear vehicle at `rear_v` following a front
/// vehicle at `front_v` (both along the lane, m/s).
pub fn rss_min_distance(rear_v: f64, front_v: f64, p: &RssParams) -> f64 {
    let rho = p.response_time;
    let v_after = rear_v + rho * p.a_max_accel;
    let d =
        rear_v * rho + 0.5 * p.a_max_accel * rho * rho + v_after * v_after / (2.0 * p.b_min_brake)
            - front_v * front_v / (2.0 * p.b_max_brake);
    d.max(0.0)
}

/// Returns (safe, d_min); safe iff the gap exceeds d_min.
pub fn rss_longitudinal_safe(rear_v: f64, front_v: f64, gap: f64, p: &RssParams) -> (bool, f64) {
    let d_min = rss_min_distance(rear_v, front_v, p);
    (gap > d_min, d_min)
}

/// An object as seen by the safety check, in the ego frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyObject {
    pub id: u64,
    pub position: Vector3<f64>,
    /// Velocity over ground, expressed in the ego frame.
    pub velocity: Vector3<f64>,
    /// Half of the box extent along the ego heading.
    pub half_length: f64,
}

fn half_length_along_x(b: &OrientedBox) -> f64 {
    let h = b.half_extents();
    (h.x * b.yaw.cos()).abs() + (h.y * b.yaw.sin()).abs()
}

impl SafetyObject {
    /// From a track with velocity relative to the ego vehicle.
    pub fn from_track(t: &Track, ego_velocity: &Vector3<f64>) -> Self {
        Self {
            id: t.id,
            position: t.position(),
            velocity: t.velocity() + ego_velocity,
            half_length: half_length_along_x(&t.bbox()),
        }
    }

    pub fn from_truth(t: &TruthObject) -> Self {
        Self {
            id: t.id as u64,
            position: t.bbox.center,
            velocity: t.velocity,
            half_length: half_length_along_x(&t.bbox),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub object_id: u64,
    pub longitudinal_safe: bool,
    pub d_actual: f64,
    pub d_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyVerdict {
    pub frame: usize,
    pub pairs: Vec<PairVerdict>,
    pub unsafe_count: usize,
}

/// Check every object in front of the ego and within the lane margin.
/// Objects moving with the ego use the same-direction rule; objects moving
/// toward it use the closing speed as the rear speed and a stopped front.
pub fn evaluate_frame(
    frame: usize,
    ego_speed: f64,
    objects: &[SafetyObject],
    p: &RssParams,
) -> SafetyVerdict {
    let mut pairs = Vec::new();
    for o in objects {
        if o.position.x <= 0.0 || o.position.y.abs() > p.lane_margin {
            continue;
        }
        let gap = (o.position.x - o.half_length - p.ego_front_offset).max(0.0);
        let v_obj = o.velocity.x;
        let (rear, front) = if v_obj >= 0.0 {
            (ego_speed, v_obj)
        } else {
            (ego_speed + v_obj.abs(), 0.0)
        };
        let (safe, d_min) = rss_longitudinal_safe(rear, front, gap, p);
        pairs.push(PairVerdict {
            object_id: o.id,
            longitudinal_safe: safe,
            d_actual: gap,
            d_min,
        });
    }
    let unsafe_count = pairs.iter().filter(|v| !v.longitudinal_safe).count();
    SafetyVerdict {
        frame,
        pairs,
        unsafe_count,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SafetyConsistency {
    Consistent,
    /// Perceived unsafe while the real scene is safe.
    FalseAlarm,
    /// Perceived safe while the real scene is unsafe.
    MissedDanger,
}

pub fn perceived_vs_true(perceived: &SafetyVerdict, truth: &SafetyVerdict) -> SafetyConsistency {
    match (perceived.unsafe_count > 0, truth.unsafe_count > 0) {
        (true, false) => SafetyConsistency::FalseAlarm,
        (false, true) => SafetyConsistency::MissedDanger,
        _ => SafetyConsistency::Consistent,
    }
}
