//! Multi-object tracking and the four victim fusion architectures.
//!
//! * AV.1: LiDAR detections into a constant-velocity Kalman tracker.
//! * AV.2: AV.1 plus 2D camera detections as pixel measurements in the same
//!   tracker.
//! * AV.3: AV.2 plus a camera/LiDAR data-asymmetry monitor.
//! * AV.4: independent LiDAR and monocular-3D trackers merged by
//!   track-to-track association and covariance intersection.
//!
//! Tracks live in the ego frame with velocities relative to the ego
//! vehicle; the scenes keep the ego on straight constant-speed paths so the
//! relative motion stays constant-velocity.

mod kalman;
mod t2t;
mod tracker;
mod victim;

pub use kalman::{
    box_measurement_cov, correct, covariance_intersection, kf_predict, kf_update, kf_update_camera,
    min_eigenvalue, projected_center,
};
pub use t2t::{fuse_t2t, T2tMemory, T2tOutput};
pub use tracker::{associate, associate_tracks, Tracker, TrackerMode};
pub use victim::{AvCase, Victim};

use std::collections::VecDeque;

use nalgebra::{SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::OrientedBox;

pub const STATE_DIM: usize = 10;
pub type StateVector = SVector<f64, STATE_DIM>;
pub type StateCov = SMatrix<f64, STATE_DIM, STATE_DIM>;

/// State layout.
pub const POS: usize = 0;
pub const VEL: usize = 3;
pub const DIMS: usize = 6;
pub const YAW: usize = 9;

#[derive(Debug, Error, PartialEq)]
pub enum TrackingError {
    #[error("measurement covariance is not positive definite")]
    NonPdMeasurement,
    #[error("invalid fusion configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    /// BEV center distance gate, metres.
    pub association_gate: f64,
    /// Gate between projected track center and 2D box center, pixels.
    pub pixel_gate: f64,
    pub confirm_hits: u32,
    pub delete_misses: u32,
    pub ci_weight: f64,
    pub asymmetry_window_len: usize,
    pub asymmetry_min_camera_ratio: f64,
    /// Process noise standard deviations per 0.1 s.
    pub q_position: f64,
    pub q_velocity: f64,
    pub q_box: f64,
    /// Initial velocity standard deviation of a new track.
    pub init_velocity_sd: f64,
    /// LiDAR box measurement standard deviations.
    pub r_lidar_position: f64,
    pub r_lidar_dims: f64,
    pub r_lidar_yaw: f64,
    /// Box part of a monocular-3D measurement (position comes from the
    /// detection's own covariance).
    pub r_mono_dims: f64,
    pub r_mono_yaw: f64,
    /// Pixel noise of the 2D camera pseudo-measurement.
    pub sigma_px: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            association_gate: 2.0,
            pixel_gate: 50.0,
            confirm_hits: 3,
            delete_misses: 5,
            ci_weight: 0.5,
            asymmetry_window_len: 10,
            asymmetry_min_camera_ratio: 0.3,
            q_position: 0.1,
            q_velocity: 0.5,
            q_box: 0.01,
            init_velocity_sd: 10.0,
            r_lidar_position: 0.2,
            r_lidar_dims: 0.3,
            r_lidar_yaw: 0.2,
            r_mono_dims: 0.3,
            r_mono_yaw: 0.3,
            sigma_px: 4.0,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), TrackingError> {
        if !(0.0..=1.0).contains(&self.ci_weight) {
            return Err(TrackingError::Config(format!(
                "ci_weight {} outside [0, 1]",
                self.ci_weight
            )));
        }
        if !(0.0..=1.0).contains(&self.asymmetry_min_camera_ratio) {
            return Err(TrackingError::Config(
                "asymmetry_min_camera_ratio outside [0, 1]".into(),
            ));
        }
        if self.confirm_hits == 0 || self.delete_misses == 0 {
            return Err(TrackingError::Config(
                "hit/miss thresholds must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Deleted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub x: StateVector,
    pub p: StateCov,
    pub status: TrackStatus,
    pub hits_lidar: u32,
    pub hits_camera: u32,
    pub age: u32,
    pub frames_since_update: u32,
    /// Per-frame camera corroboration while confirmed and inside the camera
    /// field of view.
    pub asymmetry_window: VecDeque<bool>,
}

impl Track {
    /// New tentative track at a box measurement with zero velocity.
    pub fn from_box(
        id: u64,
        b: &OrientedBox,
        pos_cov: &nalgebra::Matrix3<f64>,
        cfg: &FusionConfig,
    ) -> Self {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<3>(POS).copy_from(&b.center);
        x.fixed_rows_mut::<3>(DIMS).copy_from(&b.dims);
        x[YAW] = b.yaw;
        let mut p = StateCov::zeros();
        p.fixed_view_mut::<3, 3>(POS, POS).copy_from(pos_cov);
        for i in 0..3 {
            p[(VEL + i, VEL + i)] = cfg.init_velocity_sd.powi(2);
            p[(DIMS + i, DIMS + i)] = cfg.r_lidar_dims.powi(2);
        }
        p[(YAW, YAW)] = cfg.r_lidar_yaw.powi(2);
        Self {
            id,
            x,
            p,
            status: TrackStatus::Tentative,
            hits_lidar: 0,
            hits_camera: 0,
            age: 0,
            frames_since_update: 0,
            asymmetry_window: VecDeque::new(),
        }
    }

    pub fn position(&self) -> Vector3<f64> {
        self.x.fixed_rows::<3>(POS).into_owned()
    }

    pub fn velocity(&self) -> Vector3<f64> {
        self.x.fixed_rows::<3>(VEL).into_owned()
    }

    pub fn position_cov(&self) -> nalgebra::Matrix3<f64> {
        self.p.fixed_view::<3, 3>(POS, POS).into_owned()
    }

    pub fn bbox(&self) -> OrientedBox {
        let d = self.x.fixed_rows::<3>(DIMS).map(|v| v.max(0.1));
        OrientedBox::new(self.position(), d, self.x[YAW])
    }

    pub fn hits(&self) -> u32 {
        self.hits_lidar + self.hits_camera
    }

    pub fn is_confirmed(&self) -> bool {
        self.status == TrackStatus::Confirmed
    }
}
