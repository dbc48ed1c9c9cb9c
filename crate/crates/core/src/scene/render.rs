//! Raycast renderer producing wire-quantised sweeps and ground truth.

use nalgebra::{Rotation3, Vector3};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ObjectClass, OrientedBox, Scene, SceneObject};
use crate::datagram::{intensity_to_raw, range_to_raw, RANGE_UNIT};
use crate::geometry::{azimuth_delta, SphericalPoint};
use crate::rng;
use crate::sweep::{firing_time, quantize_time, Sweep};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    /// Standard deviation of Gaussian range noise, metres.
    pub range_noise: f64,
    pub intensity_object: f64,
    pub intensity_ground: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            range_noise: 0.02,
            intensity_object: 0.8,
            intensity_ground: 0.3,
        }
    }
}

/// Ground-truth object state in the ego frame at one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthObject {
    pub id: u32,
    pub class: ObjectClass,
    pub bbox: OrientedBox,
    /// Velocity relative to the ego, ego frame.
    pub rel_velocity: Vector3<f64>,
    /// World velocity expressed in the ego frame.
    pub velocity: Vector3<f64>,
    /// LiDAR returns attributed to this object in the clean sweep.
    pub point_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub sweep: Sweep,
    pub truth: Vec<TruthObject>,
}

pub(crate) fn ego_frame_boxes(scene: &Scene, k: usize) -> Vec<(&SceneObject, OrientedBox)> {
    let t = scene.frame_time(k);
    let ego = scene.ego.pose_at(t);
    scene
        .objects
        .iter()
        .map(|o| (o, o.box_at(t).in_frame(&ego)))
        .collect()
}

struct Caster {
    center: Vector3<f64>,
    rinv: Rotation3<f64>,
    half: Vector3<f64>,
    /// Azimuth window (center, lower delta, upper delta); `None` = all around.
    window: Option<(f64, f64, f64)>,
}

impl Caster {
    fn new(b: &OrientedBox, origin: &Vector3<f64>) -> Self {
        let corners = b.corners();
        let rel = b.center - origin;
        let inside_footprint = {
            let l = b.to_local(&Vector3::new(origin.x, origin.y, b.center.z));
            l.x.abs() <= b.dims.x / 2.0 + 0.05 && l.y.abs() <= b.dims.y / 2.0 + 0.05
        };
        let window = if inside_footprint {
            None
        } else {
            let ac = rel.y.atan2(rel.x);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for c in &corners {
                let d = azimuth_delta((c.y - origin.y).atan2(c.x - origin.x), ac);
                lo = lo.min(d);
                hi = hi.max(d);
            }
            Some((ac, lo - 1e-6, hi + 1e-6))
        };
        Self {
            center: b.center,
            rinv: b.rotation().inverse(),
            half: b.half_extents(),
            window,
        }
    }

    fn covers(&self, theta: f64) -> bool {
        match self.window {
            None => true,
            Some((c, lo, hi)) => {
                let d = azimuth_delta(theta, c);
                d >= lo && d <= hi
            }
        }
    }

    fn entry(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let o = self.rinv * (origin - self.center);
        let d = self.rinv * dir;
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        for a in 0..3 {
            if d[a].abs() < 1e-15 {
                if o[a].abs() > self.half[a] {
                    return None;
                }
                continue;
            }
            let t1 = (-self.half[a] - o[a]) / d[a];
            let t2 = (self.half[a] - o[a]) / d[a];
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            t_near = t_near.max(lo);
            t_far = t_far.min(hi);
            if t_near > t_far {
                return None;
            }
        }
        (t_near > 0.0).then_some(t_near)
    }
}

/// Render frame `k`: one ray per grid cell from the sensor, nearest hit among
/// object boxes and the ground plane within max range, Gaussian range noise,
/// then quantised exactly as the wire format would.
pub fn render_frame(scene: &Scene, k: usize, cfg: &RenderConfig) -> RenderedFrame {
    let sensor = &scene.sensor;
    let grid = sensor.grid();
    let h = sensor.mount_height;
    let origin = Vector3::new(0.0, 0.0, h);
    let boxes = ego_frame_boxes(scene, k);
    let casters: Vec<Caster> = boxes.iter().map(|(_, b)| Caster::new(b, &origin)).collect();
    let mut counts = vec![0usize; boxes.len()];

    let mut rng = rng::stream(scene.seed, &[rng::TAG_RENDER, k as u64]);
    let noise = Normal::new(0.0, cfg.range_noise.max(0.0)).expect("finite noise");
    let start = quantize_time(scene.frame_time(k));
    let trig: Vec<(f64, f64)> = grid.elevations.iter().map(|e| e.sin_cos()).collect();

    let mut points = Vec::with_capacity(grid.len());
    let mut active = Vec::with_capacity(casters.len());
    for i in 0..grid.azimuth_count {
        let theta = grid.azimuth(i);
        let (st, ct) = theta.sin_cos();
        active.clear();
        active.extend((0..casters.len()).filter(|&o| casters[o].covers(theta)));
        let t_fire = firing_time(start, i, sensor);
        for (j, &(sp, cp)) in trig.iter().enumerate() {
            let dir = Vector3::new(cp * ct, cp * st, sp);
            let mut best = if sp < 0.0 { h / -sp } else { f64::INFINITY };
            let mut hit: Option<usize> = None;
            for &o in &active {
                if let Some(t) = casters[o].entry(&origin, &dir) {
                    if t < best {
                        best = t;
                        hit = Some(o);
                    }
                }
            }
            if best > sensor.max_range {
                continue;
            }
            let noisy = (best + noise.sample(&mut rng)).max(RANGE_UNIT);
            let intensity = match hit {
                Some(o) => {
                    counts[o] += 1;
                    cfg.intensity_object
                }
                None => cfg.intensity_ground,
            };
            points.push(SphericalPoint {
                range: range_to_raw(noisy) as f64 * RANGE_UNIT,
                azimuth: theta,
                elevation: grid.elevation(j),
                timestamp: t_fire,
                intensity: intensity_to_raw(intensity) as f64 / 255.0,
            });
        }
    }

    let t = scene.frame_time(k);
    let ego = scene.ego.pose_at(t);
    let ego_v = ego.inverse_transform_vector(&scene.ego.velocity_at(t));
    let truth = boxes
        .iter()
        .zip(&counts)
        .map(|((obj, b), &n)| {
            let v = ego.inverse_transform_vector(&obj.trajectory.velocity_at(t));
            TruthObject {
                id: obj.id,
                class: obj.class,
                bbox: *b,
                rel_velocity: v - ego_v,
                velocity: v,
                point_count: n,
            }
        })
        .collect();

    let mut sweep = Sweep::new(points, k as u64, start);
    sweep.source_datagram_count = sensor
        .azimuth_count
        .div_ceil(crate::sweep::azimuths_per_datagram(sensor));
    RenderedFrame { sweep, truth }
}

/// Sweep and truth boxes only.
pub fn render_sweep(
    scene: &Scene,
    k: usize,
    cfg: &RenderConfig,
) -> (Sweep, Vec<(u32, OrientedBox)>) {
    let f = render_frame(scene, k, cfg);
    let boxes = f.truth.iter().map(|t| (t.id, t.bbox)).collect();
    (f.sweep, boxes)
}
