//! Pinhole camera model and projected 2D ground truth.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{OrientedBox, Scene};
use crate::geometry::Pose;
use crate::scene::render::ego_frame_boxes;

/// Points closer than this to the image plane are treated as behind it.
const NEAR_PLANE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Pixels.
    pub focal_length: f64,
    pub image_width: f64,
    pub image_height: f64,
    /// Pose relative to the ego frame; the optical axis is the local +x.
    pub mount: Pose,
    /// Objects beyond this distance are not detectable.
    pub max_range: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            focal_length: 1000.0,
            image_width: 1600.0,
            image_height: 900.0,
            mount: Pose::new(Vector3::new(0.0, 0.0, 1.6), 0.0),
            max_range: 80.0,
        }
    }
}

impl CameraModel {
    pub fn horizontal_fov(&self) -> f64 {
        2.0 * (self.image_width / 2.0 / self.focal_length).atan()
    }

    pub fn to_camera(&self, p_ego: &Vector3<f64>) -> Vector3<f64> {
        self.mount.inverse_transform_point(p_ego)
    }

    /// Pixel coordinates of an ego-frame point, if in front of the camera.
    pub fn project(&self, p_ego: &Vector3<f64>) -> Option<(f64, f64)> {
        let c = self.to_camera(p_ego);
        (c.x > NEAR_PLANE).then(|| {
            (
                self.image_width / 2.0 - self.focal_length * c.y / c.x,
                self.image_height / 2.0 - self.focal_length * c.z / c.x,
            )
        })
    }

    /// Whether an ego-frame position lies inside the horizontal field of view
    /// and detection range.
    pub fn in_fov(&self, p_ego: &Vector3<f64>) -> bool {
        let c = self.to_camera(p_ego);
        if c.x <= NEAR_PLANE {
            return false;
        }
        let bearing = c.y.atan2(c.x);
        bearing.abs() <= self.horizontal_fov() / 2.0 && c.x.hypot(c.y) <= self.max_range
    }
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box2d {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Box2d {
    pub fn center(&self) -> (f64, f64) {
        (
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn iou(&self, o: &Box2d) -> f64 {
        let inter = Box2d {
            x_min: self.x_min.max(o.x_min),
            y_min: self.y_min.max(o.y_min),
            x_max: self.x_max.min(o.x_max),
            y_max: self.y_max.min(o.y_max),
        };
        let i = if inter.width() > 0.0 && inter.height() > 0.0 {
            inter.area()
        } else {
            0.0
        };
        let u = self.area() + o.area() - i;
        if u > 0.0 {
            i / u
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraTruth {
    pub id: u32,
    pub box2d: Box2d,
    pub truncated: bool,
    /// Distance from the camera to the box center, metres.
    pub range: f64,
}

/// Project the corners of an ego-frame box. Returns `None` if the box is
/// entirely behind the camera or outside the image.
pub fn project_box(b: &OrientedBox, cam: &CameraModel) -> Option<(Box2d, bool)> {
    let corners = b.corners();
    let mut truncated = false;
    let mut bb = Box2d {
        x_min: f64::INFINITY,
        y_min: f64::INFINITY,
        x_max: f64::NEG_INFINITY,
        y_max: f64::NEG_INFINITY,
    };
    let mut any = false;
    for c in &corners {
        match cam.project(c) {
            Some((u, v)) => {
                any = true;
                bb.x_min = bb.x_min.min(u);
                bb.x_max = bb.x_max.max(u);
                bb.y_min = bb.y_min.min(v);
                bb.y_max = bb.y_max.max(v);
            }
            None => truncated = true,
        }
    }
    if !any {
        return None;
    }
    let clipped = Box2d {
        x_min: bb.x_min.max(0.0),
        y_min: bb.y_min.max(0.0),
        x_max: bb.x_max.min(cam.image_width),
        y_max: bb.y_max.min(cam.image_height),
    };
    if clipped.width() <= 0.0 || clipped.height() <= 0.0 {
        return None;
    }
    truncated |= clipped != bb;
    Some((clipped, truncated))
}

/// Projected 2D boxes of every object within camera range at frame `k`.
pub fn render_camera_truth(scene: &Scene, k: usize) -> Vec<CameraTruth> {
    let cam = &scene.camera;
    ego_frame_boxes(scene, k)
        .into_iter()
        .filter_map(|(obj, b)| {
            let range = cam.to_camera(&b.center).norm();
            if range > cam.max_range {
                return None;
            }
            project_box(&b, cam).map(|(box2d, truncated)| CameraTruth {
                id: obj.id,
                box2d,
                truncated,
                range,
            })
        })
        .collect()
}
