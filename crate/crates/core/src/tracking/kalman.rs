//! Constant-velocity Kalman filter over [position, velocity, l, w, h, yaw],
//! camera pixel pseudo-measurements and covariance intersection.

use nalgebra::{Matrix3, SMatrix, SVector};

use super::{FusionConfig, StateCov, Track, TrackingError, DIMS, POS, STATE_DIM, VEL, YAW};
use crate::geometry::wrap_angle;
use crate::perception::{BoxDetection, Detection2d};
use crate::scene::{project_box, CameraModel};

/// Box measurement: center (3), dims (3), yaw.
pub const BOX_MEAS: usize = 7;
pub type BoxMeasCov = SMatrix<f64, BOX_MEAS, BOX_MEAS>;

const Q_REFERENCE_DT: f64 = 0.1;

pub fn min_eigenvalue<const N: usize>(p: &SMatrix<f64, N, N>) -> f64 {
    nalgebra::DMatrix::from_column_slice(N, N, p.as_slice())
        .symmetric_eigen()
        .eigenvalues
        .min()
}

fn symmetrize<const N: usize>(p: &mut SMatrix<f64, N, N>) {
    *p = (*p + p.transpose()) * 0.5;
}

/// Propagate a track by `dt` seconds under constant velocity.
pub fn kf_predict(track: &mut Track, dt: f64, cfg: &FusionConfig) {
    let mut f = StateCov::identity();
    for i in 0..3 {
        f[(POS + i, VEL + i)] = dt;
    }
    let scale = dt / Q_REFERENCE_DT;
    let mut q = StateCov::zeros();
    for i in 0..3 {
        q[(POS + i, POS + i)] = cfg.q_position.powi(2) * scale;
        q[(VEL + i, VEL + i)] = cfg.q_velocity.powi(2) * scale;
    }
    for i in DIMS..STATE_DIM {
        q[(i, i)] = cfg.q_box.powi(2) * scale;
    }
    track.x = f * track.x;
    track.p = f * track.p * f.transpose() + q;
    symmetrize(&mut track.p);
    track.age += 1;
}

/// Kalman correction with a linear(ised) measurement, Joseph form.
pub fn correct<const M: usize>(
    track: &mut Track,
    innovation: &SVector<f64, M>,
    h: &SMatrix<f64, M, STATE_DIM>,
    r: &SMatrix<f64, M, M>,
) -> Result<(), TrackingError> {
    if r.cholesky().is_none() {
        return Err(TrackingError::NonPdMeasurement);
    }
    let s = h * track.p * h.transpose() + r;
    let s_inv = s
        .cholesky()
        .ok_or(TrackingError::NonPdMeasurement)?
        .inverse();
    let k = track.p * h.transpose() * s_inv;
    track.x += k * innovation;
    let ikh = StateCov::identity() - k * h;
    track.p = ikh * track.p * ikh.transpose() + k * r * k.transpose();
    symmetrize(&mut track.p);
    track.x[YAW] = wrap_angle(track.x[YAW]);
    assert!(
        min_eigenvalue(&track.p) > 1e-12,
        "track covariance lost positive definiteness"
    );
    Ok(())
}

/// Measurement covariance of a 3D detection: the detector's own position
/// covariance if it reports one, otherwise the configured LiDAR values.
pub fn box_measurement_cov(det: &BoxDetection, cfg: &FusionConfig) -> BoxMeasCov {
    let mut r = BoxMeasCov::zeros();
    let (pos, dims, yaw) = match det.position_cov {
        Some(c) => (c, cfg.r_mono_dims, cfg.r_mono_yaw),
        None => (
            Matrix3::identity() * cfg.r_lidar_position.powi(2),
            cfg.r_lidar_dims,
            cfg.r_lidar_yaw,
        ),
    };
    r.fixed_view_mut::<3, 3>(0, 0).copy_from(&pos);
    for i in 3..6 {
        r[(i, i)] = dims * dims;
    }
    r[(6, 6)] = yaw * yaw;
    r
}

/// Update with a 3D box detection. The yaw innovation is wrapped to
/// (−π, π].
pub fn kf_update(
    track: &mut Track,
    det: &BoxDetection,
    r: &BoxMeasCov,
) -> Result<(), TrackingError> {
    let mut h = SMatrix::<f64, BOX_MEAS, STATE_DIM>::zeros();
    for i in 0..3 {
        h[(i, POS + i)] = 1.0;
        h[(3 + i, DIMS + i)] = 1.0;
    }
    h[(6, YAW)] = 1.0;
    let b = &det.bbox;
    let mut y = SVector::<f64, BOX_MEAS>::zeros();
    for i in 0..3 {
        y[i] = b.center[i] - track.x[POS + i];
        y[3 + i] = b.dims[i] - track.x[DIMS + i];
    }
    y[6] = wrap_angle(b.yaw - track.x[YAW]);
    correct(track, &y, &h, r)
}

/// Pixel center of the track's projected box, if visible.
pub fn projected_center(track: &Track, cam: &CameraModel) -> Option<(f64, f64)> {
    project_box(&track.bbox(), cam).map(|(b, _)| b.center())
}

/// Update with a 2D camera box: the measurement is the pixel center of the
/// projected track box, linearised numerically in the track position. The
/// box itself is never lifted to 3D, so depth stays unobserved apart from
/// perspective scaling.
pub fn kf_update_camera(
    track: &mut Track,
    det: &Detection2d,
    cam: &CameraModel,
    sigma_px: f64,
) -> Result<bool, TrackingError> {
    let Some(h0) = projected_center(track, cam) else {
        return Ok(false);
    };
    let mut h = SMatrix::<f64, 2, STATE_DIM>::zeros();
    let eps = 1e-4;
    for i in 0..3 {
        let mut probe = track.clone();
        probe.x[POS + i] += eps;
        let Some(h1) = projected_center(&probe, cam) else {
            return Ok(false);
        };
        h[(0, POS + i)] = (h1.0 - h0.0) / eps;
        h[(1, POS + i)] = (h1.1 - h0.1) / eps;
    }
    let (u, v) = det.box2d.center();
    let y = SVector::<f64, 2>::new(u - h0.0, v - h0.1);
    let r = SMatrix::<f64, 2, 2>::identity() * sigma_px.max(1e-3).powi(2);
    correct(track, &y, &h, &r)?;
    Ok(true)
}

/// Covariance intersection with weight ω on the first estimate:
/// P⁻¹ = ω P₁⁻¹ + (1−ω) P₂⁻¹, x = P (ω P₁⁻¹ x₁ + (1−ω) P₂⁻¹ x₂).
pub fn covariance_intersection<const N: usize>(
    x1: &SVector<f64, N>,
    p1: &SMatrix<f64, N, N>,
    x2: &SVector<f64, N>,
    p2: &SMatrix<f64, N, N>,
    omega: f64,
) -> Result<(SVector<f64, N>, SMatrix<f64, N, N>), TrackingError> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(TrackingError::Config(format!(
            "ci weight {omega} outside [0, 1]"
        )));
    }
    let i1 = p1
        .cholesky()
        .ok_or(TrackingError::NonPdMeasurement)?
        .inverse();
    let i2 = p2
        .cholesky()
        .ok_or(TrackingError::NonPdMeasurement)?
        .inverse();
    let info = i1 * omega + i2 * (1.0 - omega);
    let mut p = info
        .cholesky()
        .ok_or(TrackingError::NonPdMeasurement)?
        .inverse();
    symmetrize(&mut p);
    let x = p * (i1 * x1 * omega + i2 * x2 * (1.0 - omega));
    Ok((x, p))
}
