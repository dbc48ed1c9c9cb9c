//! Sensor model, spherical/Cartesian points and angle-grid arithmetic.
//!
//! Conventions: x forward, y left, z up. Azimuth θ is measured from +x
//! towards +y and normalised to `[0, 2π)`. Elevation φ is negative below the
//! horizon, so a ground return seen from height `h` satisfies
//! `h = ρ sin|φ|`.

use std::f64::consts::{PI, TAU};

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("cannot express the zero vector in spherical coordinates")]
    ZeroVector,
    #[error("invalid sensor model: {0}")]
    InvalidSensor(String),
}

/// Normalise an azimuth to `[0, 2π)`.
pub fn normalize_azimuth(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Wrap an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = (a + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w += TAU;
    }
    w
}

/// Smallest signed difference `a − b` between two azimuths.
pub fn azimuth_delta(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

/// One LiDAR return: range, azimuth, elevation, timestamp, intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    pub range: f64,
    pub azimuth: f64,
    pub elevation: f64,
    pub timestamp: f64,
    pub intensity: f64,
}

impl SphericalPoint {
    pub fn new(range: f64, azimuth: f64, elevation: f64) -> Self {
        Self {
            range,
            azimuth: normalize_azimuth(azimuth),
            elevation,
            timestamp: 0.0,
            intensity: 0.0,
        }
    }

    pub fn to_cartesian(&self) -> Vector3<f64> {
        spherical_to_cartesian(self)
    }

    /// Height of the return below the sensor (positive when the point is
    /// under the horizon).
    pub fn depth_below_sensor(&self) -> f64 {
        -self.range * self.elevation.sin()
    }
}

pub fn spherical_to_cartesian(p: &SphericalPoint) -> Vector3<f64> {
    let (st, ct) = p.azimuth.sin_cos();
    let (sp, cp) = p.elevation.sin_cos();
    Vector3::new(p.range * cp * ct, p.range * cp * st, p.range * sp)
}

/// Inverse of [`spherical_to_cartesian`]; timestamp and intensity are zero.
/// At the poles the azimuth is 0 by convention.
pub fn cartesian_to_spherical(v: &Vector3<f64>) -> Result<SphericalPoint, GeometryError> {
    let range = v.norm();
    if range == 0.0 || !range.is_finite() {
        return Err(GeometryError::ZeroVector);
    }
    let horizontal = v.x.hypot(v.y);
    let azimuth = if horizontal == 0.0 {
        0.0
    } else {
        normalize_azimuth(v.y.atan2(v.x))
    };
    let elevation = v.z.atan2(horizontal);
    Ok(SphericalPoint::new(range, azimuth, elevation))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReturnMode {
    #[default]
    Single,
    Dual,
}

impl ReturnMode {
    pub fn returns_per_angle(self) -> usize {
        match self {
            ReturnMode::Single => 1,
            ReturnMode::Dual => 2,
        }
    }
}

/// Spinning multi-channel LiDAR description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    /// One elevation per laser channel, radians, strictly increasing.
    pub elevation_angles: Vec<f64>,
    pub azimuth_count: usize,
    /// Hz.
    pub rotation_rate: f64,
    /// Seconds between successive firings.
    pub firing_interval: f64,
    pub max_range: f64,
    pub mount_height: f64,
    pub mount_yaw: f64,
    #[serde(default)]
    pub mode: ReturnMode,
}

impl SensorModel {
    /// Build a sensor whose azimuth count is derived from the rotation rate
    /// and firing interval.
    pub fn new(
        elevation_angles: Vec<f64>,
        rotation_rate: f64,
        firing_interval: f64,
        max_range: f64,
        mount_height: f64,
    ) -> Result<Self, GeometryError> {
        let azimuth_count = (1.0 / (rotation_rate * firing_interval)).round() as usize;
        let s = Self {
            elevation_angles,
            azimuth_count,
            rotation_rate,
            firing_interval,
            max_range,
            mount_height,
            mount_yaw: 0.0,
            mode: ReturnMode::Single,
        };
        s.validate()?;
        Ok(s)
    }

    /// 32 channels evenly spaced over [−30.67°, +10.67°], 1800 azimuths at 10 Hz.
    pub fn desk_default() -> Self {
        let m = 32;
        let lo = -30.67_f64;
        let hi = 10.67_f64;
        let elevations = (0..m)
            .map(|j| (lo + (hi - lo) * j as f64 / (m - 1) as f64).to_radians())
            .collect();
        Self::new(elevations, 10.0, 1.0 / 18_000.0, 130.0, 1.7).expect("default sensor is valid")
    }

    /// HDL-32E-like timing: 10 Hz rotation, 46 µs firing interval.
    pub fn hdl32e_like() -> Self {
        let mut s = Self::desk_default();
        s.firing_interval = 46e-6;
        s.azimuth_count = (1.0 / (s.rotation_rate * s.firing_interval)).round() as usize;
        s
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: &str| Err(GeometryError::InvalidSensor(m.to_string()));
        if self.elevation_angles.len() < 2 {
            return bad("need at least two elevation channels");
        }
        if self.elevation_angles.windows(2).any(|w| w[1] <= w[0]) {
            return bad("elevation angles must be strictly increasing");
        }
        if self.azimuth_count == 0 {
            return bad("azimuth count must be positive");
        }
        if !(self.rotation_rate > 0.0 && self.firing_interval > 0.0) {
            return bad("rotation rate and firing interval must be positive");
        }
        let expected = (1.0 / (self.rotation_rate * self.firing_interval)).round() as usize;
        if expected != self.azimuth_count {
            return bad("azimuth count inconsistent with rotation rate and firing interval");
        }
        if !(self.max_range > 0.0 && self.mount_height > 0.0) {
            return bad("max range and mount height must be positive");
        }
        Ok(())
    }

    pub fn channel_count(&self) -> usize {
        self.elevation_angles.len()
    }

    /// Maximum number of returns a single sweep may hold.
    pub fn max_points(&self) -> usize {
        self.azimuth_count * self.channel_count() * self.mode.returns_per_angle()
    }

    pub fn sweep_period(&self) -> f64 {
        1.0 / self.rotation_rate
    }

    pub fn grid(&self) -> AngleGrid {
        AngleGrid::new(self.azimuth_count, self.elevation_angles.clone())
    }
}

/// Cross product of the sensor's azimuth and elevation marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    pub azimuth_count: usize,
    pub elevations: Vec<f64>,
}

impl AngleGrid {
    pub fn new(azimuth_count: usize, elevations: Vec<f64>) -> Self {
        Self {
            azimuth_count,
            elevations,
        }
    }

    pub fn azimuth(&self, i: usize) -> f64 {
        TAU * i as f64 / self.azimuth_count as f64
    }

    pub fn elevation(&self, j: usize) -> f64 {
        self.elevations[j]
    }

    pub fn azimuth_spacing(&self) -> f64 {
        TAU / self.azimuth_count as f64
    }

    /// Smallest gap between adjacent elevation channels.
    pub fn elevation_spacing(&self) -> f64 {
        self.elevations
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.azimuth_count * self.elevations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nearest azimuth index (wrapping).
    pub fn nearest_azimuth(&self, theta: f64) -> usize {
        let n = self.azimuth_count as f64;
        ((normalize_azimuth(theta) / TAU * n).round() as usize) % self.azimuth_count
    }

    /// Nearest elevation channel.
    pub fn nearest_elevation(&self, phi: f64) -> usize {
        let idx = self.elevations.partition_point(|&e| e < phi);
        if idx == 0 {
            0
        } else if idx == self.elevations.len()
            || (phi - self.elevations[idx - 1]) <= (self.elevations[idx] - phi)
        {
            idx - 1
        } else {
            idx
        }
    }

    pub fn nearest_cell(&self, theta: f64, phi: f64) -> (usize, usize) {
        (self.nearest_azimuth(theta), self.nearest_elevation(phi))
    }

    /// Angular distance between a direction and a grid cell.
    pub fn cell_distance(&self, theta: f64, phi: f64, cell: (usize, usize)) -> f64 {
        let dt = azimuth_delta(theta, self.azimuth(cell.0));
        let dp = phi - self.elevation(cell.1);
        dt.hypot(dp)
    }

    pub fn flat_index(&self, cell: (usize, usize)) -> usize {
        cell.0 * self.elevations.len() + cell.1
    }
}

/// Every `(θ_i, φ_j)` pair, ordered lexicographically by `(i, j)`.
pub fn expected_angle_grid(sensor: &SensorModel) -> Vec<(f64, f64)> {
    let grid = sensor.grid();
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.azimuth_count {
        let theta = grid.azimuth(i);
        for &phi in &grid.elevations {
            out.push((theta, phi));
        }
    }
    out
}

/// Planar pose: position plus yaw (roll = pitch = 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub yaw: f64,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(position: Vector3<f64>, yaw: f64) -> Self {
        Self {
            position,
            yaw: wrap_angle(yaw),
        }
    }

    pub fn identity() -> Self {
        Self::new(Vector3::zeros(), 0.0)
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Vector3::z_axis(), self.yaw)
    }

    /// Map a point expressed in this pose's local frame into the parent frame.
    pub fn transform_point(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.rotation() * local + self.position
    }

    /// Map a parent-frame point into this pose's local frame.
    pub fn inverse_transform_point(&self, parent: &Vector3<f64>) -> Vector3<f64> {
        self.rotation().inverse() * (parent - self.position)
    }

    pub fn inverse_transform_vector(&self, parent: &Vector3<f64>) -> Vector3<f64> {
        self.rotation().inverse() * parent
    }

    /// Sensor-to-ground transform for a sensor at height `h`. The ground
    /// plane sits at `z = −h` in the sensor frame, so the transform is a pure
    /// lift by `h`.
    pub fn lidar_to_ground(height: f64) -> Self {
        Self::new(Vector3::new(0.0, 0.0, height), 0.0)
    }
}
