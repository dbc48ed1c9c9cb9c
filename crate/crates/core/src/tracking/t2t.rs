//! Track-to-track fusion of LiDAR and monocular-3D tracks (AV.4).

use std::collections::HashMap;

use super::kalman::covariance_intersection;
use super::tracker::associate_tracks;
use super::{FusionConfig, Track, TrackingError, YAW};
use crate::geometry::wrap_angle;
use crate::scene::CameraModel;

/// Offset added to camera-pipeline ids when a camera track passes through,
/// so they never collide with LiDAR track ids.
pub const CAMERA_ID_OFFSET: u64 = 1 << 40;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct T2tOutput {
    pub fused: Vec<Track>,
    /// LiDAR track ids dropped for lack of camera corroboration.
    pub suppressed_lidar: Vec<u64>,
    /// Camera track ids dropped for lack of LiDAR corroboration.
    pub suppressed_camera: Vec<u64>,
    /// (LiDAR id, camera id) of every fused pair.
    pub matched: Vec<(u64, u64)>,
}

/// Memory across frames of which single-sensor tracks were judged fake.
///
/// Each track keeps the verdict from the last frame it spent inside the
/// shared coverage: matched, or suppressed as a fake object. A track whose
/// last verdict was suppression stays removed after it drifts out of the
/// other sensor's view; otherwise it passes through as usual.
#[derive(Debug, Clone, Default)]
pub struct T2tMemory {
    lidar: HashMap<u64, bool>,
    camera: HashMap<u64, bool>,
}

impl T2tMemory {
    pub fn apply(&mut self, mut out: T2tOutput) -> T2tOutput {
        for &(l, c) in &out.matched {
            self.lidar.insert(l, true);
            self.camera.insert(c, true);
        }
        for &l in &out.suppressed_lidar {
            self.lidar.insert(l, false);
        }
        for &c in &out.suppressed_camera {
            self.camera.insert(c, false);
        }
        let rejected = |m: &HashMap<u64, bool>, id: u64| m.get(&id) == Some(&false);
        let mut removed_lidar = Vec::new();
        let mut removed_camera = Vec::new();
        out.fused.retain(|t| {
            if t.id >= CAMERA_ID_OFFSET {
                let c = t.id - CAMERA_ID_OFFSET;
                let drop = rejected(&self.camera, c);
                if drop {
                    removed_camera.push(c);
                }
                !drop
            } else {
                let drop = rejected(&self.lidar, t.id);
                if drop {
                    removed_lidar.push(t.id);
                }
                !drop
            }
        });
        out.suppressed_lidar.extend(removed_lidar);
        out.suppressed_camera.extend(removed_camera);
        out
    }
}

/// Associate confirmed tracks of the two pipelines by BEV distance and merge
/// each pair with covariance intersection. A track without a partner is
/// dropped when it lies where both sensors should have seen it (camera field
/// of view and within `lidar_range`); otherwise it passes through.
pub fn fuse_t2t(
    lidar_tracks: &[Track],
    camera_tracks: &[Track],
    camera: &CameraModel,
    lidar_range: f64,
    cfg: &FusionConfig,
) -> Result<T2tOutput, TrackingError> {
    cfg.validate()?;
    let lt: Vec<&Track> = lidar_tracks.iter().filter(|t| t.is_confirmed()).collect();
    let ct: Vec<&Track> = camera_tracks.iter().filter(|t| t.is_confirmed()).collect();
    let a = associate_tracks(&lt, &ct, cfg.association_gate);
    let shared = |t: &Track| {
        let p = t.position();
        camera.in_fov(&p) && p.x.hypot(p.y) <= lidar_range
    };
    let mut out = T2tOutput::default();
    for &(i, j) in &a.pairs {
        let (l, c) = (lt[i], ct[j]);
        let mut xc = c.x;
        let mut d = wrap_angle(xc[YAW] - l.x[YAW]);
        if d.abs() > std::f64::consts::FRAC_PI_2 {
            d = wrap_angle(d + std::f64::consts::PI);
        }
        xc[YAW] = l.x[YAW] + d;
        let (x, p) = covariance_intersection(&l.x, &l.p, &xc, &c.p, cfg.ci_weight)?;
        let mut f = l.clone();
        f.x = x;
        f.x[YAW] = wrap_angle(f.x[YAW]);
        f.p = p;
        f.hits_camera = c.hits();
        out.fused.push(f);
        out.matched.push((l.id, c.id));
    }
    for &i in &a.unmatched_rows {
        if shared(lt[i]) {
            out.suppressed_lidar.push(lt[i].id);
        } else {
            out.fused.push(lt[i].clone());
        }
    }
    for &j in &a.unmatched_cols {
        if shared(ct[j]) {
            out.suppressed_camera.push(ct[j].id);
        } else {
            let mut t = ct[j].clone();
            t.id += CAMERA_ID_OFFSET;
            out.fused.push(t);
        }
    }
    out.fused.sort_by_key(|t| t.id);
    Ok(out)
}
