//! Execution subroutines shared by the attacks. All of them work on the
//! point-cloud matrix and only ever rewrite range entries.

use std::collections::BTreeSet;

use nalgebra::{Vector2, Vector3};

use super::spline::ThinPlateSpline;
use crate::datagram::{range_to_raw, RANGE_UNIT};
use crate::geometry::{normalize_azimuth, wrap_angle, AngleGrid, SphericalPoint};
use crate::scene::OrientedBox;
use crate::sweep::Sweep;

/// Grid cells with no return, after a 3×3 dilation of the occupancy so that
/// isolated dropouts do not count. Azimuth wraps; elevation does not.
pub fn find_missing_angles(sweep: &Sweep, grid: &AngleGrid) -> BTreeSet<(usize, usize)> {
    let (n, m) = (grid.azimuth_count, grid.elevations.len());
    let mut occ = vec![false; n * m];
    for (i, j) in sweep.cells(grid) {
        occ[i * m + j] = true;
    }
    let mut out = BTreeSet::new();
    for i in 0..n {
        for j in 0..m {
            let mut filled = false;
            'k: for di in [n - 1, 0, 1] {
                for dj in [-1i64, 0, 1] {
                    let jj = j as i64 + dj;
                    if jj < 0 || jj >= m as i64 {
                        continue;
                    }
                    if occ[((i + di) % n) * m + jj as usize] {
                        filled = true;
                        break 'k;
                    }
                }
            }
            if !filled {
                out.insert((i, j));
            }
        }
    }
    out
}

/// Circular mean of azimuths, used to centre angular work near ±π.
pub fn mean_azimuth(points: &[SphericalPoint]) -> f64 {
    let (s, c) = points.iter().fold((0.0, 0.0), |(s, c), p| {
        (s + p.azimuth.sin(), c + p.azimuth.cos())
    });
    s.atan2(c)
}

fn cross(o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Counter-clockwise convex hull (monotone chain), collinear points dropped.
pub fn convex_hull(points: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut lower: Vec<Vector2<f64>> = Vec::new();
    for q in &p {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], q) <= 0.0
        {
            lower.pop();
        }
        lower.push(*q);
    }
    let mut upper: Vec<Vector2<f64>> = Vec::new();
    for q in p.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], q) <= 0.0
        {
            upper.pop();
        }
        upper.push(*q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Inclusive point-in-convex-polygon test for a CCW hull.
pub fn hull_contains(hull: &[Vector2<f64>], q: &Vector2<f64>) -> bool {
    const EPS: f64 = 1e-12;
    match hull.len() {
        0 => false,
        1 => (hull[0] - q).norm() <= EPS,
        2 => {
            let c = cross(&hull[0], &hull[1], q).abs();
            let d = (hull[1] - hull[0]).dot(&(q - hull[0]));
            c <= EPS && d >= -EPS && d <= (hull[1] - hull[0]).norm_squared() + EPS
        }
        k => (0..k).all(|i| cross(&hull[i], &hull[(i + 1) % k], q) >= -EPS),
    }
}

/// Mask of sweep points whose (θ, φ) falls inside the convex hull of the
/// trace's angles.
pub fn point_mask_from_trace(sweep: &Sweep, trace: &[SphericalPoint]) -> Vec<bool> {
    if trace.is_empty() {
        return vec![false; sweep.len()];
    }
    let c = mean_azimuth(trace);
    let uv: Vec<Vector2<f64>> = trace
        .iter()
        .map(|p| Vector2::new(wrap_angle(p.azimuth - c), p.elevation))
        .collect();
    let hull = convex_hull(&uv);
    let (mut lo, mut hi) = (
        Vector2::repeat(f64::INFINITY),
        Vector2::repeat(f64::NEG_INFINITY),
    );
    for p in &uv {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    sweep
        .points
        .iter()
        .map(|p| {
            let q = Vector2::new(wrap_angle(p.azimuth - c), p.elevation);
            q.x >= lo.x && q.x <= hi.x && q.y >= lo.y && q.y <= hi.y && hull_contains(&hull, &q)
        })
        .collect()
}

/// Mask of sweep points inside a ground-frame box. `sensor_height` lifts
/// sensor-frame points to the ground frame. Points behind the box on the
/// same ray are outside it and stay unmasked.
pub fn point_mask_from_object(sweep: &Sweep, b: &OrientedBox, sensor_height: f64) -> Vec<bool> {
    let lift = Vector3::new(0.0, 0.0, sensor_height);
    sweep
        .points
        .iter()
        .map(|p| b.contains(&(p.to_cartesian() + lift)))
        .collect()
}

/// Range of a ray to the estimated ground plane, if it points down.
pub fn ground_range(elevation: f64, sensor_height: f64) -> Option<f64> {
    (elevation < 0.0).then(|| sensor_height / (-elevation).sin())
}

fn quantize(r: f64) -> f64 {
    range_to_raw(r) as f64 * RANGE_UNIT
}

/// Replace masked ranges with a smooth surface fitted to the trace. With
/// fewer than 16 trace points, or a singular fit, each masked point takes
/// the range of the angularly nearest trace point. Downward rays never end
/// below the estimated ground.
pub fn inpaint_as_object(
    sweep: &Sweep,
    mask: &[bool],
    trace: &[SphericalPoint],
    sensor_height: f64,
    max_range: f64,
) -> Sweep {
    let mut out = sweep.clone();
    if trace.is_empty() {
        return out;
    }
    let c = mean_azimuth(trace);
    let samples: Vec<(f64, f64, f64)> = trace
        .iter()
        .map(|p| (wrap_angle(p.azimuth - c), p.elevation, p.range))
        .collect();
    let spline = if samples.len() >= 16 {
        ThinPlateSpline::fit(&samples, 1e-6)
    } else {
        None
    };
    for (p, &m) in out.points.iter_mut().zip(mask) {
        if !m {
            continue;
        }
        let u = wrap_angle(p.azimuth - c);
        let mut r = match &spline {
            Some(s) => s.eval(u, p.elevation),
            None => {
                samples
                    .iter()
                    .min_by(|a, b| {
                        let da = (a.0 - u).hypot(a.1 - p.elevation);
                        let db = (b.0 - u).hypot(b.1 - p.elevation);
                        da.total_cmp(&db)
                    })
                    .expect("non-empty trace")
                    .2
            }
        };
        if let Some(g) = ground_range(p.elevation, sensor_height) {
            r = r.min(g);
        }
        p.range = quantize(r.clamp(RANGE_UNIT, max_range));
    }
    out
}

/// Neighbourhood used by background inpainting: angular windows and the
/// weight that makes elevation distance count more than azimuth distance,
/// so neighbours come from the same or adjacent channels.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct KnnConfig {
    pub k: usize,
    pub elevation_weight: f64,
    pub azimuth_window: f64,
    pub elevation_window: f64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: 5,
            elevation_weight: 20.0,
            azimuth_window: 0.6,
            elevation_window: 0.03,
        }
    }
}

/// Replace masked ranges with the mean range of the k nearest unmasked
/// points in angle space. Masked points with no unmasked neighbour fall
/// back to the ground-plane range, or `max_range` for upward rays.
pub fn inpaint_as_background(
    sweep: &Sweep,
    mask: &[bool],
    sensor_height: f64,
    max_range: f64,
    knn: &KnnConfig,
) -> Sweep {
    let mut out = sweep.clone();
    // unmasked points per distinct elevation, sorted by azimuth
    let mut channels: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for (p, &m) in sweep.points.iter().zip(mask) {
        if m {
            continue;
        }
        match channels.iter_mut().find(|(e, _)| *e == p.elevation) {
            Some((_, v)) => v.push((p.azimuth, p.range)),
            None => channels.push((p.elevation, vec![(p.azimuth, p.range)])),
        }
    }
    for (_, v) in &mut channels {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let w2 = knn.elevation_weight * knn.elevation_weight;
    let mut best: Vec<(f64, f64)> = Vec::new();
    for (p, &m) in out.points.iter_mut().zip(mask) {
        if !m {
            continue;
        }
        best.clear();
        for (e, v) in &channels {
            let de = e - p.elevation;
            if de.abs() > knn.elevation_window {
                continue;
            }
            let consider = |best: &mut Vec<(f64, f64)>, az: f64, r: f64| {
                let da = wrap_angle(az - p.azimuth);
                best.push((da * da + w2 * de * de, r));
            };
            let lo = normalize_azimuth(p.azimuth - knn.azimuth_window);
            let hi = normalize_azimuth(p.azimuth + knn.azimuth_window);
            let start = v.partition_point(|q| q.0 < lo);
            let end = v.partition_point(|q| q.0 <= hi);
            if lo <= hi {
                for &(az, r) in &v[start..end] {
                    consider(&mut best, az, r);
                }
            } else {
                for &(az, r) in v[start..].iter().chain(&v[..end]) {
                    consider(&mut best, az, r);
                }
            }
        }
        let r = if best.is_empty() {
            ground_range(p.elevation, sensor_height).map_or(max_range, |g| g.min(max_range))
        } else {
            best.sort_by(|a, b| a.0.total_cmp(&b.0));
            let k = knn.k.min(best.len()).max(1);
            best[..k].iter().map(|b| b.1).sum::<f64>() / k as f64
        };
        p.range = quantize(r.clamp(RANGE_UNIT, max_range));
    }
    out
}

/// Sample the sensor-facing surface of a box by casting rays from the
/// sensor origin over the box's angular extent. `b` is in the sensor frame.
/// The angular step is at most `max_step` with at least `min_samples` per
/// axis, and the total is capped near `max_points`.
pub fn box_trace(
    b: &OrientedBox,
    max_step: f64,
    min_samples: usize,
    max_points: usize,
) -> Vec<SphericalPoint> {
    let corners = b.corners();
    let c = b.center.y.atan2(b.center.x);
    let (mut umin, mut umax, mut vmin, mut vmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for k in &corners {
        let u = wrap_angle(k.y.atan2(k.x) - c);
        let v = k.z.atan2(k.x.hypot(k.y));
        umin = umin.min(u);
        umax = umax.max(u);
        vmin = vmin.min(v);
        vmax = vmax.max(v);
    }
    let steps = |span: f64| ((span / max_step).ceil() as usize).max(min_samples).max(2);
    let (mut nu, mut nv) = (steps(umax - umin), steps(vmax - vmin));
    let total = nu * nv;
    if total > max_points {
        let f = (max_points as f64 / total as f64).sqrt();
        nu = ((nu as f64 * f) as usize).max(min_samples.min(nu));
        nv = ((nv as f64 * f) as usize).max(min_samples.min(nv));
    }
    let origin = Vector3::zeros();
    let mut out = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = umin + (umax - umin) * i as f64 / (nu - 1) as f64;
        let az = normalize_azimuth(c + u);
        for j in 0..nv {
            let el = vmin + (vmax - vmin) * j as f64 / (nv - 1) as f64;
            let dir = Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
            if let Some(t) = b.ray_entry(&origin, &dir) {
                out.push(SphericalPoint::new(t, az, el));
            }
        }
    }
    out
}
