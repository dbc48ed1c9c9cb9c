//! Ground removal, BEV Euclidean clustering and oriented box fitting.

use std::collections::BTreeMap;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::{BoxDetection, DetectionSource};
use crate::scene::OrientedBox;
use crate::sweep::Sweep;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LidarDetectorConfig {
    /// BEV neighbourhood radius, metres.
    pub cluster_eps: f64,
    pub min_points: usize,
    pub ground_margin: f64,
    pub score_norm: f64,
    /// Points beyond this range are ignored.
    pub max_range: f64,
    /// Car-size prior applied to clusters at least `prior_min_extent` long.
    pub prior_length: f64,
    pub prior_width: f64,
    pub prior_min_extent: f64,
    pub min_dim: f64,
}

impl Default for LidarDetectorConfig {
    fn default() -> Self {
        Self {
            cluster_eps: 1.0,
            min_points: 8,
            ground_margin: 0.15,
            score_norm: 50.0,
            max_range: 70.0,
            prior_length: 4.0,
            prior_width: 1.8,
            prior_min_extent: 1.0,
            min_dim: 0.2,
        }
    }
}

impl LidarDetectorConfig {
    /// Cheaper instance for the attacker's own monitoring.
    pub fn lightweight() -> Self {
        Self {
            min_points: 12,
            ..Self::default()
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller index as root for deterministic labels
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Ego-frame Cartesian points that survive ground removal and range gating.
fn foreground(sweep: &Sweep, h: f64, cfg: &LidarDetectorConfig) -> Vec<Vector3<f64>> {
    sweep
        .points
        .iter()
        .filter(|p| p.range <= cfg.max_range)
        .filter(|p| {
            !(p.elevation < 0.0 && (p.range * (-p.elevation).sin() - h).abs() <= cfg.ground_margin)
        })
        .map(|p| {
            let mut v = p.to_cartesian();
            v.z += h;
            v
        })
        .collect()
}

/// Connected components under "BEV distance ≤ eps". Points are binned into
/// cells of side eps/√2 (any two points in one cell are within eps), then
/// neighbouring cells are joined if any cross pair is within eps.
fn cluster(points: &[Vector3<f64>], eps: f64) -> Vec<Vec<usize>> {
    let side = eps / std::f64::consts::SQRT_2;
    let mut cells: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        let key = ((p.x / side).floor() as i64, (p.y / side).floor() as i64);
        cells.entry(key).or_default().push(i);
    }
    let mut uf = UnionFind::new(points.len());
    for members in cells.values() {
        for w in members.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let eps2 = eps * eps;
    for (&(cx, cy), a) in &cells {
        for dx in -2..=2i64 {
            for dy in -2..=2i64 {
                // visit each unordered cell pair once
                if (dx, dy) <= (0, 0) {
                    continue;
                }
                let Some(b) = cells.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                if uf.find(a[0]) == uf.find(b[0]) {
                    continue;
                }
                let close = a.iter().any(|&i| {
                    b.iter().any(|&j| {
                        let d = points[i] - points[j];
                        d.x * d.x + d.y * d.y <= eps2
                    })
                });
                if close {
                    uf.union(a[0], b[0]);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..points.len() {
        let r = uf.find(i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Fit an oriented box to an ego-frame cluster.
///
/// Yaw comes from the principal axis of the BEV scatter and extents from
/// the cluster bounds along the principal axes. Clusters at least
/// `prior_min_extent` long get the car-size prior: the longer principal
/// extent is the length axis when it clearly exceeds a car's width,
/// otherwise only one face is visible and the length axis is normal to it.
/// Missing extent is added on the side facing away from the sensor.
pub fn fit_box(points: &[Vector3<f64>], cfg: &LidarDetectorConfig) -> OrientedBox {
    let n = points.len() as f64;
    let mean = points.iter().fold(Vector2::zeros(), |a: Vector2<f64>, p| {
        a + Vector2::new(p.x, p.y)
    }) / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = Vector2::new(p.x, p.y) - mean;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let u = Vector2::new(angle.cos(), angle.sin());
    let v = Vector2::new(-u.y, u.x);
    let (mut umin, mut umax, mut vmin, mut vmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    let (mut zmin, mut zmax) = (f64::MAX, f64::MIN);
    for p in points {
        let q = Vector2::new(p.x, p.y);
        let (a, b) = (q.dot(&u), q.dot(&v));
        umin = umin.min(a);
        umax = umax.max(a);
        vmin = vmin.min(b);
        vmax = vmax.max(b);
        zmin = zmin.min(p.z);
        zmax = zmax.max(p.z);
    }
    let (eu, ev) = (umax - umin, vmax - vmin);
    let mut cu = (umin + umax) / 2.0;
    let mut cv = (vmin + vmax) / 2.0;
    let center_dir = u * cu + v * cv;

    let (mut du, mut dv) = (eu.max(cfg.min_dim), ev.max(cfg.min_dim));
    let mut length_along_u = eu >= ev;
    if eu.max(ev) >= cfg.prior_min_extent {
        length_along_u = eu > cfg.prior_width + 0.4;
        let (tu, tv) = if length_along_u {
            (cfg.prior_length, cfg.prior_width)
        } else {
            (cfg.prior_width, cfg.prior_length)
        };
        if tu > eu {
            cu += (tu - eu) / 2.0 * center_dir.dot(&u).signum();
            du = tu;
        }
        if tv > ev {
            cv += (tv - ev) / 2.0 * center_dir.dot(&v).signum();
            dv = tv;
        }
    }
    let c = u * cu + v * cv;
    let height = (zmax - zmin).max(cfg.min_dim);
    let (len, wid, yaw) = if length_along_u {
        (du, dv, angle)
    } else {
        (dv, du, angle + std::f64::consts::FRAC_PI_2)
    };
    OrientedBox::new(
        Vector3::new(c.x, c.y, (zmin + zmax) / 2.0),
        Vector3::new(len, wid, height),
        yaw,
    )
}

/// Detect objects in a sweep. `sensor_height` places the ground plane; the
/// returned boxes are in the ego frame (origin on the ground under the
/// sensor).
pub fn detect_lidar(
    sweep: &Sweep,
    sensor_height: f64,
    cfg: &LidarDetectorConfig,
) -> Vec<BoxDetection> {
    let pts = foreground(sweep, sensor_height, cfg);
    cluster(&pts, cfg.cluster_eps)
        .into_iter()
        .filter(|c| c.len() >= cfg.min_points)
        .map(|c| {
            let members: Vec<Vector3<f64>> = c.iter().map(|&i| pts[i]).collect();
            BoxDetection {
                bbox: fit_box(&members, cfg),
                score: (members.len() as f64 / cfg.score_norm).min(1.0),
                source: DetectionSource::Lidar,
                position_cov: None,
                point_count: members.len(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Pose, SensorModel};
    use crate::scene::{
        render_frame, CameraModel, ObjectClass, RenderConfig, Scene, SceneObject, Trajectory,
    };

    fn scene_with(cars: &[(f64, f64, f64)]) -> Scene {
        Scene {
            name: "t".into(),
            seed: 5,
            frame_rate: 10.0,
            frame_count: 1,
            sensor: SensorModel::desk_default(),
            camera: CameraModel::default(),
            ego: Trajectory::stationary(Pose::identity()),
            objects: cars
                .iter()
                .enumerate()
                .map(|(i, &(x, y, yaw))| {
                    SceneObject::new(
                        i as u32 + 1,
                        ObjectClass::Car,
                        Trajectory::stationary(Pose::new(Vector3::new(x, y, 0.0), yaw)),
                    )
                })
                .collect(),
        }
    }

    fn detect(scene: &Scene, noise: f64) -> (Vec<BoxDetection>, Vec<crate::scene::TruthObject>) {
        let cfg = RenderConfig {
            range_noise: noise,
            ..RenderConfig::default()
        };
        let f = render_frame(scene, 0, &cfg);
        (
            detect_lidar(
                &f.sweep,
                scene.sensor.mount_height,
                &LidarDetectorConfig::default(),
            ),
            f.truth,
        )
    }

    #[test]
    fn single_car_at_ten_metres() {
        let s = scene_with(&[(10.0, 0.0, 0.0)]);
        let (d, truth) = detect(&s, 0.0);
        assert!(truth[0].point_count >= 30);
        assert_eq!(d.len(), 1);
        let err = (d[0].bbox.bev_center() - truth[0].bbox.bev_center()).norm();
        assert!(err <= 0.5, "center error {err}");
    }

    #[test]
    fn empty_road_has_no_detections() {
        let s = scene_with(&[]);
        let (d, _) = detect(&s, 0.02);
        assert!(d.is_empty());
    }

    #[test]
    fn two_cars_twenty_metres_apart() {
        let s = scene_with(&[(10.0, 0.0, 0.0), (30.0, 3.5, 0.0)]);
        let (d, _) = detect(&s, 0.0);
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn oblique_and_side_cars_fit_within_gate() {
        let s = scene_with(&[
            (15.0, -6.5, 0.0),
            (25.0, 3.5, 0.4),
            (8.0, 6.5, 0.0),
            (40.0, -3.5, 0.0),
        ]);
        let (d, truth) = detect(&s, 0.02);
        assert_eq!(d.len(), 4);
        for t in &truth {
            let best = d
                .iter()
                .map(|x| (x.bbox.bev_center() - t.bbox.bev_center()).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1.0, "object {} best {best}", t.id);
        }
    }

    #[test]
    fn deterministic() {
        let s = scene_with(&[(12.0, 1.0, 0.3), (20.0, -4.0, 0.0)]);
        let f = render_frame(&s, 0, &RenderConfig::default());
        let cfg = LidarDetectorConfig::default();
        let a = detect_lidar(&f.sweep, 1.7, &cfg);
        let b = detect_lidar(&f.sweep, 1.7, &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn pedestrian_has_no_car_prior() {
        let pts: Vec<Vector3<f64>> = (0..20)
            .map(|i| {
                Vector3::new(
                    10.0 + 0.02 * i as f64,
                    0.3 * ((i % 3) as f64 - 1.0),
                    0.1 * i as f64,
                )
            })
            .collect();
        let b = fit_box(&pts, &LidarDetectorConfig::default());
        assert!(b.dims.x < 1.0 && b.dims.y < 1.0);
    }
}
