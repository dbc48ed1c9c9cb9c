//! Single-stream tracker covering AV.1, AV.2 and AV.3.

use nalgebra::Matrix3;

use super::kalman::{
    box_measurement_cov, kf_predict, kf_update, kf_update_camera, projected_center,
};
use super::{FusionConfig, Track, TrackStatus};
use crate::assignment::{assign_gated, assign_gated_cols, Assignment};
use crate::geometry::wrap_angle;
use crate::perception::{BoxDetection, Detection2d};
use crate::scene::CameraModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackerMode {
    /// 3D box detections only (AV.1, and each AV.4 pipeline).
    Boxes,
    /// Boxes plus 2D camera pixel updates (AV.2).
    BoxesCamera,
    /// AV.2 plus the data-asymmetry monitor (AV.3).
    BoxesCameraMonitor,
}

/// Minimum-cost one-to-one matching of tracks to 3D detections by BEV
/// center distance; pairs farther apart than `gate` are forbidden.
pub fn associate(tracks: &[Track], dets: &[BoxDetection], gate: f64) -> Assignment {
    let cost: Vec<Vec<f64>> = tracks
        .iter()
        .map(|t| {
            let c = t.bbox().bev_center();
            dets.iter()
                .map(|d| (d.bbox.bev_center() - c).norm())
                .collect()
        })
        .collect();
    assign_gated_cols(&cost, dets.len(), gate)
}

/// Track-to-track variant of [`associate`].
pub fn associate_tracks(a: &[&Track], b: &[&Track], gate: f64) -> Assignment {
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|t| {
            let c = t.bbox().bev_center();
            b.iter()
                .map(|u| (u.bbox().bev_center() - c).norm())
                .collect()
        })
        .collect();
    assign_gated_cols(&cost, b.len(), gate)
}

fn pixel_cost(tracks: &[Track], dets: &[Detection2d], cam: &CameraModel) -> Vec<Vec<f64>> {
    tracks
        .iter()
        .map(|t| match projected_center(t, cam) {
            Some((u, v)) => dets
                .iter()
                .map(|d| {
                    let (du, dv) = d.box2d.center();
                    (du - u).hypot(dv - v)
                })
                .collect(),
            None => vec![f64::INFINITY; dets.len()],
        })
        .collect()
}

/// Boxes are symmetric under a half turn; present the detection with the
/// yaw closest to the track's.
fn align_yaw(det: &BoxDetection, yaw: f64) -> BoxDetection {
    let mut d = det.clone();
    if wrap_angle(d.bbox.yaw - yaw).abs() > std::f64::consts::FRAC_PI_2 {
        d.bbox.yaw = wrap_angle(d.bbox.yaw + std::f64::consts::PI);
    }
    d
}

#[derive(Debug, Clone)]
pub struct Tracker {
    pub mode: TrackerMode,
    pub cfg: FusionConfig,
    pub camera: CameraModel,
    pub tracks: Vec<Track>,
    next_id: u64,
    /// Tracks removed by the asymmetry monitor so far.
    pub monitor_deletions: u64,
}

impl Tracker {
    pub fn new(mode: TrackerMode, cfg: FusionConfig, camera: CameraModel) -> Self {
        Self {
            mode,
            cfg,
            camera,
            tracks: Vec::new(),
            next_id: 1,
            monitor_deletions: 0,
        }
    }

    /// Advance one frame and return the confirmed tracks.
    pub fn step(&mut self, dets: &[BoxDetection], cam_dets: &[Detection2d], dt: f64) -> Vec<Track> {
        for t in &mut self.tracks {
            kf_predict(t, dt, &self.cfg);
        }
        let mut updated = vec![false; self.tracks.len()];
        let a = associate(&self.tracks, dets, self.cfg.association_gate);
        for &(ti, di) in &a.pairs {
            let t = &mut self.tracks[ti];
            let d = align_yaw(&dets[di], t.x[super::YAW]);
            let r = box_measurement_cov(&d, &self.cfg);
            if kf_update(t, &d, &r).is_ok() {
                t.hits_lidar += 1;
                updated[ti] = true;
            }
        }
        for &di in &a.unmatched_cols {
            let d = &dets[di];
            let pos_cov = d
                .position_cov
                .unwrap_or_else(|| Matrix3::identity() * self.cfg.r_lidar_position.powi(2));
            let mut t = Track::from_box(self.next_id, &d.bbox, &pos_cov, &self.cfg);
            self.next_id += 1;
            t.hits_lidar = 1;
            self.tracks.push(t);
            updated.push(true);
        }

        let mut camera_matched = vec![false; self.tracks.len()];
        if self.mode != TrackerMode::Boxes && !cam_dets.is_empty() {
            let cost = pixel_cost(&self.tracks, cam_dets, &self.camera);
            let a = assign_gated(&cost, self.cfg.pixel_gate);
            for &(ti, di) in &a.pairs {
                let t = &mut self.tracks[ti];
                if let Ok(true) =
                    kf_update_camera(t, &cam_dets[di], &self.camera, self.cfg.sigma_px)
                {
                    t.hits_camera += 1;
                    updated[ti] = true;
                    camera_matched[ti] = true;
                }
            }
        }

        for (i, t) in self.tracks.iter_mut().enumerate() {
            if updated[i] {
                t.frames_since_update = 0;
            } else {
                t.frames_since_update += 1;
            }
            if t.status == TrackStatus::Tentative && t.hits() >= self.cfg.confirm_hits {
                t.status = TrackStatus::Confirmed;
            }
            if self.mode == TrackerMode::BoxesCameraMonitor
                && t.status == TrackStatus::Confirmed
                && self.camera.in_fov(&t.position())
            {
                t.asymmetry_window.push_back(camera_matched[i]);
                while t.asymmetry_window.len() > self.cfg.asymmetry_window_len {
                    t.asymmetry_window.pop_front();
                }
                if t.asymmetry_window.len() == self.cfg.asymmetry_window_len {
                    let hits = t.asymmetry_window.iter().filter(|&&m| m).count();
                    let ratio = hits as f64 / t.asymmetry_window.len() as f64;
                    if ratio < self.cfg.asymmetry_min_camera_ratio {
                        t.status = TrackStatus::Deleted;
                        self.monitor_deletions += 1;
                        log::debug!("asymmetry monitor removed track {}", t.id);
                    }
                }
            }
            if t.frames_since_update >= self.cfg.delete_misses {
                t.status = TrackStatus::Deleted;
            }
        }
        self.tracks.retain(|t| t.status != TrackStatus::Deleted);
        self.confirmed()
    }

    pub fn confirmed(&self) -> Vec<Track> {
        self.tracks
            .iter()
            .filter(|t| t.is_confirmed())
            .cloned()
            .collect()
    }
}
