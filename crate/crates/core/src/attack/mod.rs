//! The limited-information attacker. Each frame runs monitor, schedule and
//! execute on the intercepted sweep. The attacker sees only sweeps and the
//! sensor's datasheet (angle grid, timing, max range); the mount
//! height is discarded on construction and re-estimated from data.
//!
//! All attacks only rewrite ranges of existing returns (false positive,
//! removal, translation) or substitute a previously seen sweep with new
//! timestamps (replays).

pub mod monitor;
pub mod schedule;
pub mod spline;
pub mod subroutines;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::datagram::{range_to_raw, RANGE_UNIT};
use crate::geometry::{AngleGrid, SensorModel};
use crate::perception::{detect_lidar, LidarDetectorConfig};
use crate::scene::OrientedBox;
use crate::sweep::Sweep;

pub use monitor::{
    select_target, target_scores, BevTrack, BevTracker, BevTrackerConfig, HeightMonitor,
    SelectionConfig,
};
pub use schedule::{
    forward_replay_source, jerk_for, phase_at, reverse_replay_source, JerkSchedule, Phase,
};
pub use subroutines::{
    box_trace, convex_hull, find_missing_angles, hull_contains, inpaint_as_background,
    inpaint_as_object, point_mask_from_object, point_mask_from_trace, KnnConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    /// False positive: a fake car approaching the victim.
    X1,
    /// Forward replay of a recorded buffer.
    X3,
    /// Reverse replay with held frames at both ends.
    X4,
    /// Removal of a selected target.
    X6,
    /// Translation of a selected target toward the victim.
    X7,
}

impl AttackKind {
    pub const ALL: [AttackKind; 5] = [
        AttackKind::X1,
        AttackKind::X3,
        AttackKind::X4,
        AttackKind::X6,
        AttackKind::X7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::X1 => "x1",
            AttackKind::X3 => "x3",
            AttackKind::X4 => "x4",
            AttackKind::X6 => "x6",
            AttackKind::X7 => "x7",
        }
    }

    pub fn needs_target(self) -> bool {
        matches!(self, AttackKind::X6 | AttackKind::X7)
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase().replace('.', "");
        AttackKind::ALL
            .into_iter()
            .find(|k| k.name() == t)
            .ok_or_else(|| format!("unknown attack '{s}' (expected x1, x3, x4, x6 or x7)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    pub stable_time: f64,
    pub attack_time: f64,
    pub rho0: f64,
    pub rho_n: f64,
    pub theta0: f64,
    pub theta_n: f64,
    /// Fake object size (length, width, height).
    pub fake_dims: [f64; 3],
    pub trace_step: f64,
    pub trace_min_samples: usize,
    pub trace_max_points: usize,
    /// Share of the trace that must land on occupied angles.
    pub min_coverage: f64,
    pub replay_buffer: usize,
    /// Frame at which replays start; defaults to the buffer length.
    pub replay_trigger: Option<usize>,
    pub smoothing_repeats: usize,
    pub removal_inflation: f64,
    /// Returns higher than this above the estimated ground count as the
    /// target's own surface when translating it.
    pub object_min_height: f64,
    pub min_translated_range: f64,
    pub height_window: usize,
    pub knn: KnnConfig,
    pub detector: LidarDetectorConfig,
    pub tracker: BevTrackerConfig,
    pub selection: SelectionConfig,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            stable_time: 2.5,
            attack_time: 4.5,
            rho0: 15.0,
            rho_n: 1.0,
            theta0: 0.0,
            theta_n: 0.0,
            fake_dims: [4.0, 2.0, 1.5],
            trace_step: 0.05,
            trace_min_samples: 10,
            trace_max_points: 400,
            min_coverage: 0.5,
            replay_buffer: 40,
            replay_trigger: None,
            smoothing_repeats: 5,
            removal_inflation: 1.2,
            object_min_height: 0.2,
            min_translated_range: 0.5,
            height_window: 20,
            knn: KnnConfig::default(),
            detector: LidarDetectorConfig::lightweight(),
            tracker: BevTrackerConfig::default(),
            selection: SelectionConfig::default(),
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<(), String> {
        let pos = [
            ("stable_time", self.stable_time >= 0.0),
            ("attack_time", self.attack_time > 0.0),
            ("rho0", self.rho0 > 0.0),
            ("rho_n", self.rho_n > 0.0),
            ("trace_step", self.trace_step > 0.0),
            ("replay_buffer", self.replay_buffer > 0),
            ("removal_inflation", self.removal_inflation >= 1.0),
            ("min_coverage", (0.0..=1.0).contains(&self.min_coverage)),
            ("knn.k", self.knn.k > 0),
        ];
        match pos.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(format!("attack parameter {name} out of range")),
            None => Ok(()),
        }
    }

    pub fn trigger(&self) -> usize {
        self.replay_trigger.unwrap_or(self.replay_buffer)
    }
}

/// What the attacker did with one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLog {
    pub frame: usize,
    pub phase: Phase,
    pub target: Option<u64>,
    pub r_k: Option<f64>,
    pub directive: String,
    pub height: Option<f64>,
    pub modified_points: usize,
}

#[derive(Debug, Clone)]
pub struct Attacker {
    kind: AttackKind,
    cfg: AttackConfig,
    sensor: SensorModel,
    grid: AngleGrid,
    height: HeightMonitor,
    tracker: BevTracker,
    frame: usize,
    last_start: Option<f64>,
    /// Clean sweeps kept for replays, by frame index.
    buffer: BTreeMap<usize, Sweep>,
    target: Option<BevTrack>,
    commenced: Option<usize>,
    jerk: Option<JerkSchedule>,
}

fn quantize(r: f64) -> f64 {
    range_to_raw(r) as f64 * RANGE_UNIT
}

impl Attacker {
    pub fn new(kind: AttackKind, cfg: AttackConfig, sensor: &SensorModel) -> Self {
        let mut sensor = sensor.clone();
        sensor.mount_height = 0.0;
        Self {
            kind,
            grid: sensor.grid(),
            sensor,
            height: HeightMonitor::new(cfg.height_window),
            tracker: BevTracker::new(cfg.tracker.clone()),
            cfg,
            frame: 0,
            last_start: None,
            buffer: BTreeMap::new(),
            target: None,
            commenced: if kind == AttackKind::X1 {
                Some(0)
            } else {
                None
            },
            jerk: None,
        }
    }

    pub fn kind(&self) -> AttackKind {
        self.kind
    }

    pub fn height_estimate(&self) -> Option<f64> {
        self.height.estimate()
    }

    pub fn bev_tracks(&self) -> &[BevTrack] {
        &self.tracker.tracks
    }

    /// Current estimate of the selected target, if any.
    pub fn target(&self) -> Option<&BevTrack> {
        self.target.as_ref()
    }

    fn period(&self) -> f64 {
        self.sensor.sweep_period()
    }

    fn frames(&self, seconds: f64) -> usize {
        (seconds / self.period()).round() as usize
    }

    /// Process one intercepted sweep and return what is forwarded.
    pub fn step(&mut self, sweep: &Sweep) -> (Sweep, FrameLog) {
        let k = self.frame;
        self.frame += 1;
        let dt = match self.last_start {
            Some(t) if sweep.start_time > t => sweep.start_time - t,
            _ => self.period(),
        };
        self.last_start = Some(sweep.start_time);

        // monitor
        self.height.observe(sweep);
        let h = self.height.estimate();
        let mut log = FrameLog {
            frame: k,
            phase: Phase::Waiting,
            target: None,
            r_k: None,
            directive: "none".into(),
            height: h,
            modified_points: 0,
        };
        if self.kind.needs_target() {
            self.monitor_objects(sweep, h, dt, k);
            log.target = self.target.as_ref().map(|t| t.id);
        }

        match self.kind {
            AttackKind::X1 => self.execute_false_positive(sweep, h, k, log),
            AttackKind::X3 | AttackKind::X4 => self.execute_replay(sweep, k, log),
            AttackKind::X6 => self.execute_removal(sweep, h, k, log),
            AttackKind::X7 => self.execute_translation(sweep, h, k, log),
        }
    }

    fn monitor_objects(&mut self, sweep: &Sweep, h: Option<f64>, dt: f64, k: usize) {
        let Some(h) = h else {
            return;
        };
        let dets = detect_lidar(sweep, h, &self.cfg.detector);
        self.tracker.step(&dets, dt);
        match &mut self.target {
            Some(t) => match self.tracker.get(t.id) {
                Some(live) => *t = live.clone(),
                None => t.predict(dt, self.cfg.tracker.q_accel),
            },
            None => {
                let cands: Vec<&BevTrack> = self.tracker.confirmed().collect();
                if let Some(id) = select_target(&cands, &self.cfg.selection) {
                    self.target = self.tracker.get(id).cloned();
                    self.commenced = Some(k + 1);
                    log::debug!("frame {k}: selected target {id}");
                }
            }
        }
    }

    fn frames_since_start(&self, k: usize) -> Option<usize> {
        self.commenced.and_then(|c| k.checked_sub(c))
    }

    fn advance_jerk(&mut self, rho0: f64, attack_k: usize) -> f64 {
        let period = self.period();
        let (rho_n, dur) = (self.cfg.rho_n, self.cfg.attack_time);
        let s = self
            .jerk
            .get_or_insert_with(|| JerkSchedule::new(rho0, rho_n, dur, period));
        while s.steps < attack_k {
            s.step();
        }
        s.r
    }

    fn execute_false_positive(
        &mut self,
        sweep: &Sweep,
        h: Option<f64>,
        k: usize,
        mut log: FrameLog,
    ) -> (Sweep, FrameLog) {
        let stable = self.frames(self.cfg.stable_time);
        let attack = self.frames(self.cfg.attack_time);
        let since = self.frames_since_start(k);
        log.phase = phase_at(since, stable, attack);
        let (theta, rho) = match log.phase {
            Phase::Stable => (self.cfg.theta0, self.cfg.rho0),
            Phase::Attacking => {
                let ak = since.unwrap() - stable;
                let frac = ak as f64 / attack.saturating_sub(1).max(1) as f64;
                let theta = self.cfg.theta0 + (self.cfg.theta_n - self.cfg.theta0) * frac;
                (theta, self.advance_jerk(self.cfg.rho0, ak))
            }
            _ => return (sweep.clone(), log),
        };
        log.r_k = Some(rho);
        let Some(h) = h else {
            log.directive = "defer:no_height".into();
            return (sweep.clone(), log);
        };
        let [l, w, ht] = self.cfg.fake_dims;
        let dir = Vector3::new(theta.cos(), theta.sin(), 0.0);
        let center = dir * (rho + l / 2.0) + Vector3::new(0.0, 0.0, -h + ht / 2.0);
        let fake = OrientedBox::new(center, Vector3::new(l, w, ht), theta);
        let trace = box_trace(
            &fake,
            self.cfg.trace_step,
            self.cfg.trace_min_samples,
            self.cfg.trace_max_points,
        );
        let missing = find_missing_angles(sweep, &self.grid);
        let covered = trace
            .iter()
            .filter(|p| !missing.contains(&self.grid.nearest_cell(p.azimuth, p.elevation)))
            .count();
        if trace.is_empty() || (covered as f64) < self.cfg.min_coverage * trace.len() as f64 {
            log.directive = "defer:coverage".into();
            return (sweep.clone(), log);
        }
        let mask = point_mask_from_trace(sweep, &trace);
        log.modified_points = mask.iter().filter(|&&m| m).count();
        log.directive = format!(
            "{}({:.4},{:.3})",
            if log.phase == Phase::Stable {
                "establish"
            } else {
                "move"
            },
            theta,
            rho
        );
        let out = inpaint_as_object(sweep, &mask, &trace, h, self.sensor.max_range);
        (out, log)
    }

    fn execute_replay(&mut self, sweep: &Sweep, k: usize, mut log: FrameLog) -> (Sweep, FrameLog) {
        let (b, trig, m) = (
            self.cfg.replay_buffer,
            self.cfg.trigger(),
            self.cfg.smoothing_repeats,
        );
        let reverse = self.kind == AttackKind::X4;
        // the reverse replay also keeps the trigger frame itself
        let last_kept = if reverse {
            trig
        } else {
            trig.saturating_sub(1)
        };
        if k + b >= trig && k <= last_kept {
            self.buffer.insert(k, sweep.clone());
        }
        let src = if reverse {
            reverse_replay_source(k, trig, b, m)
        } else {
            forward_replay_source(k, trig, b)
        };
        log.phase = if src.is_some() {
            Phase::Attacking
        } else {
            Phase::Waiting
        };
        let Some(src) = src else {
            return (sweep.clone(), log);
        };
        let Some(mut out) = self.buffer.get(&src).cloned() else {
            log.directive = "defer:buffer".into();
            return (sweep.clone(), log);
        };
        out.retime(sweep.start_time, &self.sensor);
        out.index = sweep.index;
        log.directive = format!("replay({src})");
        log.modified_points = out.len();
        (out, log)
    }

    fn removal_mask(&self, sweep: &Sweep, h: f64) -> Option<Vec<bool>> {
        let t = self.target.as_ref()?;
        let b = t.predicted_box().inflated(self.cfg.removal_inflation);
        Some(point_mask_from_object(sweep, &b, h))
    }

    fn execute_removal(
        &mut self,
        sweep: &Sweep,
        h: Option<f64>,
        k: usize,
        mut log: FrameLog,
    ) -> (Sweep, FrameLog) {
        // removal holds from commencement until the run ends
        log.phase = match self.frames_since_start(k) {
            Some(_) => Phase::Attacking,
            None => Phase::Waiting,
        };
        let (Some(h), Phase::Attacking) = (h, log.phase) else {
            return (sweep.clone(), log);
        };
        let Some(mask) = self.removal_mask(sweep, h) else {
            return (sweep.clone(), log);
        };
        log.modified_points = mask.iter().filter(|&&m| m).count();
        log.directive = format!("remove({})", log.target.unwrap_or_default());
        let out = inpaint_as_background(sweep, &mask, h, self.sensor.max_range, &self.cfg.knn);
        (out, log)
    }

    fn execute_translation(
        &mut self,
        sweep: &Sweep,
        h: Option<f64>,
        k: usize,
        mut log: FrameLog,
    ) -> (Sweep, FrameLog) {
        let attack = self.frames(self.cfg.attack_time);
        let since = self.frames_since_start(k);
        log.phase = phase_at(since, 0, attack);
        let (Some(h), Phase::Attacking) = (h, log.phase) else {
            return (sweep.clone(), log);
        };
        let Some(mask) = self.removal_mask(sweep, h) else {
            return (sweep.clone(), log);
        };
        let object: Vec<bool> = sweep
            .points
            .iter()
            .zip(&mask)
            .map(|(p, &m)| m && p.to_cartesian().z + h > self.cfg.object_min_height)
            .collect();
        let near = sweep
            .points
            .iter()
            .zip(&object)
            .filter(|(_, &o)| o)
            .map(|(p, _)| p.range)
            .min_by(f64::total_cmp);
        let rho_now = near.unwrap_or_else(|| {
            let t = self.target.as_ref().expect("mask implies target");
            t.range() - t.last_box.dims.x / 2.0
        });
        let r_k = self.advance_jerk(rho_now, since.unwrap());
        log.r_k = Some(r_k);
        let mut out = inpaint_as_background(sweep, &mask, h, self.sensor.max_range, &self.cfg.knn);
        let delta = r_k - rho_now;
        for ((q, p), &o) in out.points.iter_mut().zip(&sweep.points).zip(&object) {
            if o {
                q.range = quantize(
                    (p.range + delta).clamp(self.cfg.min_translated_range, self.sensor.max_range),
                );
            }
        }
        log.modified_points = mask.iter().filter(|&&m| m).count();
        log.directive = format!("translate({},{:.3})", log.target.unwrap_or_default(), delta);
        (out, log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;
    use crate::integrity::{IntegrityConfig, IntegrityMonitor};
    use crate::scene::{builtin_scene_suite, render_frame, Scene, Trajectory};

    fn lead_scene() -> Scene {
        let mut s = builtin_scene_suite().remove(0);
        s.objects.truncate(1);
        s.ego = Trajectory::stationary(Pose::identity());
        s.objects[0].trajectory =
            Trajectory::stationary(Pose::new(Vector3::new(20.0, 0.0, 0.0), 0.0));
        s
    }

    fn run(kind: AttackKind, scene: &Scene, frames: usize) -> Vec<(Sweep, Sweep, FrameLog)> {
        let mut a = Attacker::new(kind, AttackConfig::default(), &scene.sensor);
        (0..frames)
            .map(|k| {
                let clean = render_frame(scene, k, &Default::default()).sweep;
                let (out, log) = a.step(&clean);
                (clean, out, log)
            })
            .collect()
    }

    fn angles(s: &Sweep) -> Vec<(u64, u64)> {
        let mut v: Vec<_> = s
            .points
            .iter()
            .map(|p| (p.azimuth.to_bits(), p.elevation.to_bits()))
            .collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn names_round_trip() {
        for k in AttackKind::ALL {
            assert_eq!(k.name().parse::<AttackKind>().unwrap(), k);
        }
        assert_eq!("X.7".parse::<AttackKind>().unwrap(), AttackKind::X7);
        assert!("x2".parse::<AttackKind>().is_err());
    }

    #[test]
    fn sensor_height_is_not_read() {
        let scene = lead_scene();
        let a = Attacker::new(AttackKind::X1, AttackConfig::default(), &scene.sensor);
        assert_eq!(a.sensor.mount_height, 0.0);
    }

    #[test]
    fn forward_replay_frame_mapping() {
        let scene = lead_scene();
        let cfg = AttackConfig {
            replay_trigger: Some(50),
            ..Default::default()
        };
        let mut a = Attacker::new(AttackKind::X3, cfg, &scene.sensor);
        let clean: Vec<Sweep> = (0..51)
            .map(|k| render_frame(&scene, k, &Default::default()).sweep)
            .collect();
        let mut outs = Vec::new();
        for s in &clean {
            outs.push(a.step(s).0);
        }
        assert_eq!(outs[49], clean[49]);
        let got = &outs[50];
        assert_eq!(got.start_time, clean[50].start_time);
        assert_eq!(got.len(), clean[10].len());
        for ((g, src), now) in got
            .points
            .iter()
            .zip(&clean[10].points)
            .zip(&clean[50].points)
        {
            assert_eq!(g.range, src.range);
            assert_eq!(g.timestamp, now.timestamp);
        }
    }

    #[test]
    fn reverse_replay_frame_mapping() {
        let scene = lead_scene();
        let cfg = AttackConfig {
            replay_trigger: Some(60),
            ..Default::default()
        };
        let mut a = Attacker::new(AttackKind::X4, cfg, &scene.sensor);
        let clean: Vec<Sweep> = (0..66)
            .map(|k| render_frame(&scene, k, &Default::default()).sweep)
            .collect();
        let outs: Vec<Sweep> = clean.iter().map(|s| a.step(s).0).collect();
        for out in &outs[60..65] {
            assert!(out
                .points
                .iter()
                .zip(&clean[60].points)
                .all(|(a, b)| a.range == b.range));
        }
        assert!(outs[65]
            .points
            .iter()
            .zip(&clean[59].points)
            .all(|(a, b)| a.range == b.range));
        assert_eq!(outs[65].start_time, clean[65].start_time);
    }

    #[test]
    fn false_positive_keeps_grid_and_passes_integrity() {
        let mut scene = lead_scene();
        scene.objects.clear();
        let logs = run(AttackKind::X1, &scene, 30);
        let mut mon =
            IntegrityMonitor::new(IntegrityConfig::for_sensor(&scene.sensor), &scene.sensor);
        for (clean, out, log) in &logs {
            assert_eq!(angles(clean), angles(out));
            assert!(mon.check(out).zeta, "frame {}", log.frame);
        }
        assert_eq!(logs[0].2.phase, Phase::Stable);
        assert_eq!(logs[25].2.phase, Phase::Attacking);
        let h = logs[29].2.height.unwrap();
        let dets = detect_lidar(&logs[10].1, h, &LidarDetectorConfig::default());
        assert!(dets.iter().any(|d| d.bbox.bev_center().x > 14.0
            && d.bbox.bev_center().x < 20.0
            && d.bbox.center.y.abs() < 1.0));
    }

    #[test]
    fn removal_hides_lead_vehicle() {
        let scene = lead_scene();
        let logs = run(AttackKind::X6, &scene, 15);
        let first = logs
            .iter()
            .position(|l| l.2.modified_points > 0)
            .expect("attack commenced");
        assert!(logs[first - 1].2.target.is_some());
        let (clean, out, log) = &logs[14];
        assert_eq!(angles(clean), angles(out));
        let dets = detect_lidar(out, log.height.unwrap(), &LidarDetectorConfig::default());
        assert!(dets
            .iter()
            .all(|d| (d.bbox.bev_center().x - 22.0).abs() > 2.0));
    }

    #[test]
    fn translation_moves_lead_vehicle_closer() {
        let scene = lead_scene();
        let logs = run(AttackKind::X7, &scene, 30);
        let (clean, out, log) = &logs[29];
        assert_eq!(angles(clean), angles(out));
        let r = log.r_k.expect("attacking");
        assert!(r < 18.0);
        let dets = detect_lidar(out, log.height.unwrap(), &LidarDetectorConfig::default());
        let near_x = r + 2.0;
        assert!(
            dets.iter().any(
                |d| (d.bbox.bev_center().x - near_x).abs() < 2.0 && d.bbox.center.y.abs() < 1.0
            ),
            "{:?} r {}",
            dets.iter().map(|d| d.bbox.bev_center()).collect::<Vec<_>>(),
            r
        );
        assert!(dets
            .iter()
            .all(|d| (d.bbox.bev_center().x - 22.0).abs() > 2.0));
    }
}
