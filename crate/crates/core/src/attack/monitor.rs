//! Attacker-side situational awareness built only from intercepted sweeps:
//! sensor height, a bird's-eye-view object tracker and target selection.

use std::collections::VecDeque;

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::assignment::assign_gated_cols;
use crate::perception::BoxDetection;
use crate::scene::OrientedBox;
use crate::sweep::Sweep;

/// Median of per-point height samples from the lowest downward channel,
/// over a sliding window of recent sweeps.
#[derive(Debug, Clone)]
pub struct HeightMonitor {
    window: usize,
    samples: VecDeque<Vec<f64>>,
}

impl HeightMonitor {
    pub fn new(window: usize) -> Self {
        Self {
            window: window.max(1),
            samples: VecDeque::new(),
        }
    }

    pub fn observe(&mut self, sweep: &Sweep) {
        let lowest = sweep
            .points
            .iter()
            .map(|p| p.elevation)
            .filter(|&e| e < 0.0)
            .min_by(f64::total_cmp);
        let Some(lowest) = lowest else {
            return;
        };
        let hs: Vec<f64> = sweep
            .points
            .iter()
            .filter(|p| p.elevation == lowest)
            .map(|p| p.range * (-p.elevation).sin())
            .collect();
        if hs.is_empty() {
            return;
        }
        self.samples.push_back(hs);
        while self.samples.len() > self.window {
            self.samples.pop_front();
        }
    }

    pub fn sample_count(&self) -> usize {
        self.samples.iter().map(Vec::len).sum()
    }

    pub fn estimate(&self) -> Option<f64> {
        let mut all: Vec<f64> = self.samples.iter().flatten().copied().collect();
        if all.is_empty() {
            return None;
        }
        let mid = all.len() / 2;
        let (_, m, _) = all.select_nth_unstable_by(mid, f64::total_cmp);
        let m = *m;
        (m > 0.0).then_some(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BevTrackerConfig {
    pub gate: f64,
    pub confirm_hits: usize,
    pub delete_misses: usize,
    pub r_position: f64,
    /// White-acceleration spectral density.
    pub q_accel: f64,
    pub init_velocity_sd: f64,
}

impl Default for BevTrackerConfig {
    fn default() -> Self {
        Self {
            gate: 2.0,
            confirm_hits: 3,
            delete_misses: 3,
            r_position: 0.3,
            q_accel: 1.0,
            init_velocity_sd: 5.0,
        }
    }
}

/// Constant-velocity track on (x, y, vx, vy) in the sensor's ground frame.
/// Shape, heading and height come from the last associated detection.
#[derive(Debug, Clone, PartialEq)]
pub struct BevTrack {
    pub id: u64,
    pub x: Vector4<f64>,
    pub p: Matrix4<f64>,
    pub hits: usize,
    pub misses: usize,
    pub age: usize,
    pub confirmed: bool,
    pub last_box: OrientedBox,
}

impl BevTrack {
    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x[0], self.x[1])
    }

    pub fn velocity(&self) -> Vector2<f64> {
        Vector2::new(self.x[2], self.x[3])
    }

    pub fn bearing(&self) -> f64 {
        self.x[1].atan2(self.x[0])
    }

    pub fn range(&self) -> f64 {
        self.x[0].hypot(self.x[1])
    }

    /// Last detected box moved to the current position estimate.
    pub fn predicted_box(&self) -> OrientedBox {
        let mut b = self.last_box;
        b.center.x = self.x[0];
        b.center.y = self.x[1];
        b
    }

    pub fn predict(&mut self, dt: f64, q_accel: f64) {
        let mut f = Matrix4::identity();
        f[(0, 2)] = dt;
        f[(1, 3)] = dt;
        let (d2, d3, d4) = (dt * dt, dt.powi(3), dt.powi(4));
        let mut q = Matrix4::zeros();
        for i in 0..2 {
            q[(i, i)] = d4 / 4.0;
            q[(i, i + 2)] = d3 / 2.0;
            q[(i + 2, i)] = d3 / 2.0;
            q[(i + 2, i + 2)] = d2;
        }
        self.x = f * self.x;
        self.p = f * self.p * f.transpose() + q * q_accel;
        self.age += 1;
    }

    fn update(&mut self, z: Vector2<f64>, r: f64) {
        let h = Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let s = h * self.p * h.transpose() + Matrix2::identity() * (r * r);
        let Some(s_inv) = s.try_inverse() else {
            return;
        };
        let k = self.p * h.transpose() * s_inv;
        self.x += k * (z - h * self.x);
        let ikh = Matrix4::identity() - k * h;
        self.p =
            ikh * self.p * ikh.transpose() + k * (Matrix2::identity() * (r * r)) * k.transpose();
        self.p = (self.p + self.p.transpose()) * 0.5;
    }
}

#[derive(Debug, Clone)]
pub struct BevTracker {
    pub cfg: BevTrackerConfig,
    pub tracks: Vec<BevTrack>,
    next_id: u64,
}

impl BevTracker {
    pub fn new(cfg: BevTrackerConfig) -> Self {
        Self {
            cfg,
            tracks: Vec::new(),
            next_id: 0,
        }
    }

    pub fn get(&self, id: u64) -> Option<&BevTrack> {
        self.tracks.iter().find(|t| t.id == id)
    }

    pub fn confirmed(&self) -> impl Iterator<Item = &BevTrack> {
        self.tracks.iter().filter(|t| t.confirmed)
    }

    pub fn step(&mut self, dets: &[BoxDetection], dt: f64) {
        let cfg = self.cfg.clone();
        for t in &mut self.tracks {
            t.predict(dt, cfg.q_accel);
        }
        let cost: Vec<Vec<f64>> = self
            .tracks
            .iter()
            .map(|t| {
                dets.iter()
                    .map(|d| (t.position() - d.bbox.bev_center()).norm())
                    .collect()
            })
            .collect();
        let a = assign_gated_cols(&cost, dets.len(), cfg.gate);
        for &(ti, di) in &a.pairs {
            let t = &mut self.tracks[ti];
            t.update(dets[di].bbox.bev_center(), cfg.r_position);
            t.last_box = dets[di].bbox;
            t.hits += 1;
            t.misses = 0;
        }
        for &ti in &a.unmatched_rows {
            self.tracks[ti].misses += 1;
        }
        for &di in &a.unmatched_cols {
            let c = dets[di].bbox.bev_center();
            let mut p = Matrix4::zeros();
            p[(0, 0)] = cfg.r_position * cfg.r_position;
            p[(1, 1)] = cfg.r_position * cfg.r_position;
            p[(2, 2)] = cfg.init_velocity_sd * cfg.init_velocity_sd;
            p[(3, 3)] = cfg.init_velocity_sd * cfg.init_velocity_sd;
            self.tracks.push(BevTrack {
                id: self.next_id,
                x: Vector4::new(c.x, c.y, 0.0, 0.0),
                p,
                hits: 1,
                misses: 0,
                age: 1,
                confirmed: false,
                last_box: dets[di].bbox,
            });
            self.next_id += 1;
        }
        for t in &mut self.tracks {
            if t.hits >= cfg.confirm_hits {
                t.confirmed = true;
            }
        }
        self.tracks.retain(|t| t.misses < cfg.delete_misses);
    }
}

/// Hard gates and soft-score ranges for choosing a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub min_age: usize,
    pub max_bearing_deg: f64,
    pub min_range: f64,
    pub max_range: f64,
    pub preferred_range: f64,
    pub lateral_velocity: (f64, f64),
    pub forward_velocity: (f64, f64),
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            min_age: 4,
            max_bearing_deg: 15.0,
            min_range: 5.0,
            max_range: 40.0,
            preferred_range: 22.5,
            lateral_velocity: (-1.0, 1.0),
            forward_velocity: (-2.0, 5.0),
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Score for each track, `None` where a hard gate fails. Soft features are
/// min-max normalised over the survivors before the sigmoid.
pub fn target_scores(tracks: &[&BevTrack], cfg: &SelectionConfig) -> Vec<Option<f64>> {
    let pass = |t: &BevTrack| {
        let v = t.velocity();
        t.confirmed
            && t.age >= cfg.min_age
            && t.bearing().abs() <= cfg.max_bearing_deg.to_radians()
            && (cfg.min_range..=cfg.max_range).contains(&t.range())
            && (cfg.lateral_velocity.0..=cfg.lateral_velocity.1).contains(&v.y)
            && (cfg.forward_velocity.0..=cfg.forward_velocity.1).contains(&v.x)
    };
    let feats: Vec<Option<[f64; 3]>> = tracks
        .iter()
        .map(|t| {
            pass(t).then(|| {
                [
                    t.bearing().abs(),
                    (t.range() - cfg.preferred_range).abs(),
                    t.velocity().y.abs(),
                ]
            })
        })
        .collect();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for f in feats.iter().flatten() {
        for i in 0..3 {
            lo[i] = lo[i].min(f[i]);
            hi[i] = hi[i].max(f[i]);
        }
    }
    feats
        .iter()
        .map(|f| {
            f.map(|f| {
                (0..3)
                    .map(|i| {
                        let span = hi[i] - lo[i];
                        let n = if span > 0.0 {
                            (f[i] - lo[i]) / span
                        } else {
                            0.0
                        };
                        sigmoid(n)
                    })
                    .product()
            })
        })
        .collect()
}

/// Lowest score wins; ties go to the lower track id.
pub fn select_target(tracks: &[&BevTrack], cfg: &SelectionConfig) -> Option<u64> {
    target_scores(tracks, cfg)
        .into_iter()
        .zip(tracks)
        .filter_map(|(s, t)| s.map(|s| (s, t.id)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}
