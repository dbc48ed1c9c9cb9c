//! Synthetic driving scenes: objects on piecewise trajectories, rendered into
//! LiDAR sweeps by raycasting and projected into a pinhole camera.
//!
//! World frame: planar, z up, ground at z = 0. The ego frame has its origin on
//! the ground under the LiDAR with x forward; the sensor sits at
//! `(0, 0, mount_height)`.

mod camera;
mod file;
mod render;
mod suite;

pub use camera::{project_box, render_camera_truth, Box2d, CameraModel, CameraTruth};
pub use file::{load_scene, save_scene, SceneFileError};
pub use render::{render_frame, render_sweep, RenderConfig, RenderedFrame, TruthObject};
pub use suite::builtin_scene_suite;

use nalgebra::{Rotation3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Pose, SensorModel};

/// 3D box, yaw about +z. `dims` = (length, width, height).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vector3<f64>,
    pub dims: Vector3<f64>,
    pub yaw: f64,
}

impl OrientedBox {
    pub fn new(center: Vector3<f64>, dims: Vector3<f64>, yaw: f64) -> Self {
        Self {
            center,
            dims,
            yaw: wrap_angle(yaw),
        }
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Vector3::z_axis(), self.yaw)
    }

    pub fn half_extents(&self) -> Vector3<f64> {
        self.dims * 0.5
    }

    pub fn to_local(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation().inverse() * (p - self.center)
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let l = self.to_local(p);
        let h = self.half_extents();
        l.x.abs() <= h.x && l.y.abs() <= h.y && l.z.abs() <= h.z
    }

    /// Scale all dimensions by `factor` about the center.
    pub fn inflated(&self, factor: f64) -> Self {
        Self {
            dims: self.dims * factor,
            ..*self
        }
    }

    pub fn corners(&self) -> [Vector3<f64>; 8] {
        let h = self.half_extents();
        let r = self.rotation();
        let mut out = [Vector3::zeros(); 8];
        let mut k = 0;
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                for sz in [-1.0, 1.0] {
                    out[k] = self.center + r * Vector3::new(sx * h.x, sy * h.y, sz * h.z);
                    k += 1;
                }
            }
        }
        out
    }

    pub fn bev_center(&self) -> Vector2<f64> {
        Vector2::new(self.center.x, self.center.y)
    }

    /// Nearest positive ray parameter at which `origin + t·dir` enters the
    /// box (slab method in the box frame). A ray starting inside the box
    /// does not hit it.
    pub fn ray_entry(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let rinv = self.rotation().inverse();
        let o = rinv * (origin - self.center);
        let d = rinv * dir;
        let h = self.half_extents();
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        for a in 0..3 {
            if d[a].abs() < 1e-15 {
                if o[a].abs() > h[a] {
                    return None;
                }
                continue;
            }
            let t1 = (-h[a] - o[a]) / d[a];
            let t2 = (h[a] - o[a]) / d[a];
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            t_near = t_near.max(lo);
            t_far = t_far.min(hi);
            if t_near > t_far {
                return None;
            }
        }
        (t_near > 0.0).then_some(t_near)
    }

    /// Express a world-frame box in a frame whose pose is `frame`.
    pub fn in_frame(&self, frame: &Pose) -> Self {
        Self::new(
            frame.inverse_transform_point(&self.center),
            self.dims,
            self.yaw - frame.yaw,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectClass {
    Car,
    Pedestrian,
}

impl ObjectClass {
    pub fn default_dims(self) -> Vector3<f64> {
        match self {
            ObjectClass::Car => Vector3::new(4.0, 1.8, 1.5),
            ObjectClass::Pedestrian => Vector3::new(0.6, 0.6, 1.8),
        }
    }
}

/// One constant-speed, constant-turn-rate piece of a trajectory. Velocity is
/// `speed` along the heading plus `lateral_speed` to its left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub speed: f64,
    #[serde(default)]
    pub yaw_rate: f64,
    #[serde(default)]
    pub lateral_speed: f64,
}

impl Segment {
    pub fn straight(duration: f64, speed: f64) -> Self {
        Self {
            duration,
            speed,
            yaw_rate: 0.0,
            lateral_speed: 0.0,
        }
    }

    fn velocity(&self, yaw: f64) -> Vector3<f64> {
        let (s, c) = yaw.sin_cos();
        Vector3::new(
            self.speed * c - self.lateral_speed * s,
            self.speed * s + self.lateral_speed * c,
            0.0,
        )
    }

    /// Pose after `t` seconds from `start`.
    fn advance(&self, start: &Pose, t: f64) -> Pose {
        let y0 = start.yaw;
        let w = self.yaw_rate;
        let disp = if w.abs() < 1e-12 {
            self.velocity(y0) * t
        } else {
            let y1 = y0 + w * t;
            // ∫ (cos y, sin y) dy / w over [y0, y1]
            let ic = (y1.sin() - y0.sin()) / w;
            let is = (y0.cos() - y1.cos()) / w;
            Vector3::new(
                self.speed * ic - self.lateral_speed * is,
                self.speed * is + self.lateral_speed * ic,
                0.0,
            )
        };
        Pose::new(start.position + disp, y0 + w * t)
    }
}

/// Piecewise trajectory. The last segment extends indefinitely; with no
/// segments the pose is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: Pose,
    #[serde(default)]
    pub segments: Vec<Segment>,
}

impl Trajectory {
    pub fn stationary(start: Pose) -> Self {
        Self {
            start,
            segments: Vec::new(),
        }
    }

    pub fn straight(start: Pose, speed: f64) -> Self {
        Self {
            start,
            segments: vec![Segment::straight(1e9, speed)],
        }
    }

    fn locate(&self, t: f64) -> Option<(Pose, &Segment, f64)> {
        let mut pose = self.start;
        let mut elapsed = 0.0;
        for (k, seg) in self.segments.iter().enumerate() {
            let last = k + 1 == self.segments.len();
            if t < elapsed + seg.duration || last {
                return Some((pose, seg, t - elapsed));
            }
            pose = seg.advance(&pose, seg.duration);
            elapsed += seg.duration;
        }
        None
    }

    pub fn pose_at(&self, t: f64) -> Pose {
        match self.locate(t) {
            Some((p, seg, dt)) => seg.advance(&p, dt),
            None => self.start,
        }
    }

    pub fn velocity_at(&self, t: f64) -> Vector3<f64> {
        match self.locate(t) {
            Some((p, seg, dt)) => seg.velocity(p.yaw + seg.yaw_rate * dt),
            None => Vector3::zeros(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: u32,
    pub class: ObjectClass,
    /// (length, width, height).
    pub dims: Vector3<f64>,
    pub trajectory: Trajectory,
}

impl SceneObject {
    pub fn new(id: u32, class: ObjectClass, trajectory: Trajectory) -> Self {
        Self {
            id,
            class,
            dims: class.default_dims(),
            trajectory,
        }
    }

    /// World-frame box at time `t`, resting on the ground.
    pub fn box_at(&self, t: f64) -> OrientedBox {
        let p = self.trajectory.pose_at(t);
        OrientedBox::new(
            p.position + Vector3::new(0.0, 0.0, self.dims.z / 2.0),
            self.dims,
            p.yaw,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub name: String,
    pub seed: u64,
    pub frame_rate: f64,
    pub frame_count: usize,
    pub sensor: SensorModel,
    pub camera: CameraModel,
    pub ego: Trajectory,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
}

impl Scene {
    pub fn frame_time(&self, k: usize) -> f64 {
        k as f64 / self.frame_rate
    }

    pub fn ego_pose(&self, k: usize) -> Pose {
        self.ego.pose_at(self.frame_time(k))
    }

    /// Ego velocity expressed in the ego frame.
    pub fn ego_velocity(&self, k: usize) -> Vector3<f64> {
        let t = self.frame_time(k);
        let pose = self.ego.pose_at(t);
        pose.inverse_transform_vector(&self.ego.velocity_at(t))
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.frame_rate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn slab_hits_front_face() {
        let b = OrientedBox::new(
            Vector3::new(10.0, 0.0, 0.75),
            Vector3::new(4.0, 2.0, 1.5),
            0.0,
        );
        let t = b
            .ray_entry(&Vector3::new(0.0, 0.0, 0.75), &Vector3::new(1.0, 0.0, 0.0))
            .unwrap();
        assert!((t - 8.0).abs() < 1e-12);
        assert!(b
            .ray_entry(&Vector3::new(0.0, 0.0, 0.75), &Vector3::new(-1.0, 0.0, 0.0))
            .is_none());
        assert!(b
            .ray_entry(&Vector3::new(0.0, 5.0, 0.75), &Vector3::new(1.0, 0.0, 0.0))
            .is_none());
    }

    #[test]
    fn rotated_box_contains() {
        let b = OrientedBox::new(
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(4.0, 1.0, 1.0),
            PI / 2.0,
        );
        assert!(b.contains(&Vector3::new(0.0, 1.9, 0.0)));
        assert!(!b.contains(&Vector3::new(1.9, 0.0, 0.0)));
        assert_eq!(b.corners().len(), 8);
    }

    #[test]
    fn trajectory_segments() {
        let tr = Trajectory {
            start: Pose::new(Vector3::new(0.0, 0.0, 0.0), 0.0),
            segments: vec![
                Segment::straight(2.0, 5.0),
                Segment {
                    duration: 1.0,
                    speed: 5.0,
                    yaw_rate: 0.0,
                    lateral_speed: 2.0,
                },
                Segment::straight(10.0, 5.0),
            ],
        };
        let p = tr.pose_at(1.0);
        assert!((p.position.x - 5.0).abs() < 1e-12);
        let p = tr.pose_at(3.0);
        assert!((p.position.x - 15.0).abs() < 1e-12);
        assert!((p.position.y - 2.0).abs() < 1e-12);
        let v = tr.velocity_at(2.5);
        assert!((v.y - 2.0).abs() < 1e-12);
        // beyond the last segment: keeps going
        assert!((tr.pose_at(20.0).position.x - 100.0).abs() < 1e-9);
    }

    #[test]
    fn constant_turn_is_continuous() {
        let tr = Trajectory {
            start: Pose::identity(),
            segments: vec![
                Segment {
                    duration: PI,
                    speed: 1.0,
                    yaw_rate: 1.0,
                    lateral_speed: 0.0,
                },
                Segment::straight(5.0, 1.0),
            ],
        };
        // half circle of radius 1
        let p = tr.pose_at(PI);
        assert!(p.position.x.abs() < 1e-9);
        assert!((p.position.y - 2.0).abs() < 1e-9);
        let a = tr.pose_at(PI - 1e-7).position;
        let b = tr.pose_at(PI + 1e-7).position;
        assert!((a - b).norm() < 1e-6);
    }
}
