//! Detectors: a geometric LiDAR clustering detector shared by victim and
//! attacker, and noise-injected camera detectors working from projected
//! ground truth.

mod camera;
mod lidar;

pub use camera::{detect_camera_2d, detect_camera_mono3d, CameraNoise, Mono3dNoise};
pub use lidar::{detect_lidar, fit_box, LidarDetectorConfig};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::scene::{Box2d, OrientedBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionSource {
    Lidar,
    Camera2d,
    Camera3d,
}

/// 3D detection in the ego frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDetection {
    pub bbox: OrientedBox,
    pub score: f64,
    pub source: DetectionSource,
    /// Position covariance when the detector reports one (monocular 3D).
    pub position_cov: Option<Matrix3<f64>>,
    /// Supporting LiDAR points (0 for camera detections).
    pub point_count: usize,
}

/// 2D camera detection; carries a pixel rectangle only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection2d {
    pub box2d: Box2d,
    pub score: f64,
}
