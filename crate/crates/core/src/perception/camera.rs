//! Pseudo-camera detectors: projected ground truth with injected noise,
//! missed detections and spurious boxes.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{BoxDetection, Detection2d, DetectionSource};
use crate::scene::{Box2d, CameraModel, CameraTruth, ObjectClass, OrientedBox};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraNoise {
    /// Per-edge pixel jitter.
    pub sigma_px: f64,
    pub p_fn: f64,
    /// Mean spurious boxes per frame.
    pub lambda_fp: f64,
}

impl Default for CameraNoise {
    fn default() -> Self {
        Self {
            sigma_px: 4.0,
            p_fn: 0.05,
            lambda_fp: 0.1,
        }
    }
}

impl CameraNoise {
    pub fn none() -> Self {
        Self {
            sigma_px: 0.0,
            p_fn: 0.0,
            lambda_fp: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Mono3dNoise {
    /// Depth standard deviation as a fraction of range.
    pub depth_coeff: f64,
    pub sigma_lateral: f64,
    pub sigma_vertical: f64,
    pub p_fn: f64,
    pub lambda_fp: f64,
}

impl Default for Mono3dNoise {
    fn default() -> Self {
        Self {
            depth_coeff: 0.05,
            sigma_lateral: 0.1,
            sigma_vertical: 0.1,
            p_fn: 0.05,
            lambda_fp: 0.1,
        }
    }
}

impl Mono3dNoise {
    pub fn none() -> Self {
        Self {
            depth_coeff: 0.0,
            sigma_lateral: 0.0,
            sigma_vertical: 0.0,
            p_fn: 0.0,
            lambda_fp: 0.0,
        }
    }
}

fn gauss<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
    } else {
        0.0
    }
}

fn spurious_count<R: Rng>(rng: &mut R, lambda: f64) -> usize {
    if lambda > 0.0 {
        Poisson::new(lambda).expect("positive rate").sample(rng) as usize
    } else {
        0
    }
}

/// Noisy 2D detections from projected truth. The random stream should be
/// keyed by scene seed and frame so runs are reproducible.
pub fn detect_camera_2d<R: Rng>(
    truth: &[CameraTruth],
    cam: &CameraModel,
    noise: &CameraNoise,
    rng: &mut R,
) -> Vec<Detection2d> {
    let mut out = Vec::new();
    for t in truth {
        if rng.random::<f64>() < noise.p_fn {
            continue;
        }
        let b = &t.box2d;
        let mut j = Box2d {
            x_min: b.x_min + gauss(rng, noise.sigma_px),
            y_min: b.y_min + gauss(rng, noise.sigma_px),
            x_max: b.x_max + gauss(rng, noise.sigma_px),
            y_max: b.y_max + gauss(rng, noise.sigma_px),
        };
        if j.x_max < j.x_min {
            std::mem::swap(&mut j.x_min, &mut j.x_max);
        }
        if j.y_max < j.y_min {
            std::mem::swap(&mut j.y_min, &mut j.y_max);
        }
        out.push(Detection2d {
            box2d: j,
            score: 1.0,
        });
    }
    for _ in 0..spurious_count(rng, noise.lambda_fp) {
        let w = rng.random_range(20.0..200.0);
        let h = rng.random_range(20.0..150.0);
        let x = rng.random_range(0.0..(cam.image_width - w));
        let y = rng.random_range(0.0..(cam.image_height - h));
        out.push(Detection2d {
            box2d: Box2d {
                x_min: x,
                y_min: y,
                x_max: x + w,
                y_max: y + h,
            },
            score: rng.random_range(0.3..0.8),
        });
    }
    out
}

/// Rotation whose columns are the line of sight from the camera to `p`,
/// the horizontal normal to it, and the completing vertical-ish axis.
fn sight_frame(cam: &CameraModel, p: &Vector3<f64>) -> Matrix3<f64> {
    let los = (p - cam.mount.position).normalize();
    let mut lat = Vector3::z().cross(&los);
    if lat.norm() < 1e-9 {
        lat = Vector3::y();
    }
    let lat = lat.normalize();
    let up = los.cross(&lat);
    Matrix3::from_columns(&[los, lat, up])
}

/// Noisy monocular 3D detections from ego-frame truth boxes. Position error
/// is drawn in the line-of-sight frame with depth spread proportional to
/// range, and the reported covariance is that same anisotropic Gaussian.
pub fn detect_camera_mono3d<R: Rng>(
    truth: &[OrientedBox],
    cam: &CameraModel,
    noise: &Mono3dNoise,
    rng: &mut R,
) -> Vec<BoxDetection> {
    let mut out = Vec::new();
    let emit = |rng: &mut R, b: &OrientedBox, score: f64| {
        let range = (b.center - cam.mount.position).norm();
        let rot = sight_frame(cam, &b.center);
        let sd = Vector3::new(
            noise.depth_coeff * range,
            noise.sigma_lateral,
            noise.sigma_vertical,
        );
        let e = Vector3::new(gauss(rng, sd.x), gauss(rng, sd.y), gauss(rng, sd.z));
        // floor keeps the covariance invertible when noise is disabled
        let var = sd.map(|s| (s * s).max(1e-6));
        let cov = rot * Matrix3::from_diagonal(&var) * rot.transpose();
        let mut bbox = *b;
        bbox.center += rot * e;
        BoxDetection {
            bbox,
            score,
            source: DetectionSource::Camera3d,
            position_cov: Some(cov),
            point_count: 0,
        }
    };
    for b in truth {
        if !cam.in_fov(&b.center) {
            continue;
        }
        if rng.random::<f64>() < noise.p_fn {
            continue;
        }
        out.push(emit(rng, b, 1.0));
    }
    let half_fov = cam.horizontal_fov() / 2.0;
    for _ in 0..spurious_count(rng, noise.lambda_fp) {
        let bearing = rng.random_range(-half_fov..half_fov) + cam.mount.yaw;
        let r = rng.random_range(5.0..cam.max_range);
        let dims = ObjectClass::Car.default_dims();
        let b = OrientedBox::new(
            Vector3::new(r * bearing.cos(), r * bearing.sin(), dims.z / 2.0)
                + Vector3::new(cam.mount.position.x, cam.mount.position.y, 0.0),
            dims,
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        );
        let score = rng.random_range(0.3..0.8);
        out.push(emit(rng, &b, score));
    }
    out
}
