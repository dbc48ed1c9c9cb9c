//! One scene through every condition and victim.
//!
//! Frames are processed in order: each clean frame is rendered once, then
//! every condition's attacker, receiver checks, LiDAR detector and victims
//! step on it. Only per-frame summaries are kept, never the sweeps.

use lidarsec_core::attack::{AttackKind, Attacker, FrameLog};
use lidarsec_core::datagram::quantize_sweep;
use lidarsec_core::geometry::AngleGrid;
use lidarsec_core::integrity::IntegrityMonitor;
use lidarsec_core::metrics::{count_in_region, EvalRegion, EvalTruth, FrameMetrics};
use lidarsec_core::perception::{
    detect_camera_2d, detect_camera_mono3d, detect_lidar, BoxDetection, Detection2d,
};
use lidarsec_core::rng;
use lidarsec_core::safety::{
    evaluate_frame, perceived_vs_true, SafetyConsistency, SafetyObject, SafetyVerdict,
};
use lidarsec_core::scene::{render_camera_truth, render_frame, Scene, TruthObject};
use lidarsec_core::sweep::Sweep;
use lidarsec_core::tracking::{AvCase, Track, Victim};
use lidarsec_core::Config;
use serde::Serialize;

use crate::plan::Condition;

/// One confirmed output track in one frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackRow {
    pub frame: usize,
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub yaw: f64,
}

impl TrackRow {
    fn new(frame: usize, t: &Track) -> Self {
        let p = t.position();
        let v = t.velocity();
        let b = t.bbox();
        Self {
            frame,
            id: t.id,
            x: p.x,
            y: p.y,
            z: p.z,
            vx: v.x,
            vy: v.y,
            vz: v.z,
            length: b.dims.x,
            width: b.dims.y,
            height: b.dims.z,
            yaw: b.yaw,
        }
    }
}

/// One object pair of the longitudinal safety check, perceived or true.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SafetyRow {
    pub frame: usize,
    pub view: &'static str,
    pub object_id: u64,
    pub d_actual: f64,
    pub d_min: f64,
    pub safe: bool,
}

fn safety_rows(view: &'static str, v: &SafetyVerdict, out: &mut Vec<SafetyRow>) {
    out.extend(v.pairs.iter().map(|p| SafetyRow {
        frame: v.frame,
        view,
        object_id: p.object_id,
        d_actual: p.d_actual,
        d_min: p.d_min,
        safe: p.longitudinal_safe,
    }));
}

/// What the receiver and the attacker saw in one frame of one condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRow {
    pub frame: usize,
    pub phase: String,
    pub target: Option<u64>,
    pub r_k: Option<f64>,
    pub directive: String,
    pub height: Option<f64>,
    pub modified_points: usize,
    pub points: usize,
    pub detections: usize,
    pub zeta_alpha: bool,
    pub zeta_beta: bool,
    pub zeta_gamma: bool,
    pub zeta_rho: bool,
    pub zeta: bool,
    /// Angle multiset and point count unchanged; only checked for
    /// conditions that must not add or drop returns.
    pub contained: Option<bool>,
}

/// The attacker's target at the moment it was first chosen, against the
/// nearest true object.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetCheck {
    pub frame: usize,
    pub target: u64,
    pub x: f64,
    pub y: f64,
    pub nearest_truth: Option<u32>,
    pub distance: f64,
}

impl TargetCheck {
    /// Within `gate` metres of a real object.
    pub fn is_real(&self, gate: f64) -> bool {
        self.nearest_truth.is_some() && self.distance <= gate
    }
}

#[derive(Debug, Clone)]
pub struct ConditionRecord {
    pub condition: Condition,
    pub log: Vec<LogRow>,
    pub target: Option<TargetCheck>,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub av: AvCase,
    pub condition: Condition,
    pub metrics: Vec<FrameMetrics>,
    pub tracks: Vec<TrackRow>,
    pub safety: Vec<SafetyRow>,
}

#[derive(Debug, Clone)]
pub struct SceneRun {
    pub scene: String,
    pub conditions: Vec<ConditionRecord>,
    /// Condition-major, AV-minor.
    pub runs: Vec<RunRecord>,
}

impl SceneRun {
    pub fn run(&self, av: AvCase, c: Condition) -> Option<&RunRecord> {
        self.runs.iter().find(|r| r.av == av && r.condition == c)
    }

    pub fn condition(&self, c: Condition) -> Option<&ConditionRecord> {
        self.conditions.iter().find(|r| r.condition == c)
    }
}

/// Inputs shared by every condition in one frame.
struct CleanFrame {
    wire: Sweep,
    truth: Vec<TruthObject>,
    eval: Vec<EvalTruth>,
    camera_2d: Vec<Detection2d>,
    mono_3d: Vec<BoxDetection>,
}

fn clean_frame(scene: &Scene, k: usize, cfg: &Config) -> CleanFrame {
    let f = render_frame(scene, k, &cfg.render);
    let wire = quantize_sweep(&f.sweep, &scene.sensor);
    let mut r2 = rng::stream(scene.seed, &[rng::TAG_CAMERA2D, k as u64]);
    let camera_2d = detect_camera_2d(
        &render_camera_truth(scene, k),
        &scene.camera,
        &cfg.camera,
        &mut r2,
    );
    let boxes: Vec<_> = f.truth.iter().map(|t| t.bbox).collect();
    let mut r3 = rng::stream(scene.seed, &[rng::TAG_MONO3D, k as u64]);
    let mono_3d = detect_camera_mono3d(&boxes, &scene.camera, &cfg.mono3d, &mut r3);
    let eval = f
        .truth
        .iter()
        .map(|t| EvalTruth {
            center: t.bbox.center,
            clean_points: t.point_count,
        })
        .collect();
    CleanFrame {
        wire,
        truth: f.truth,
        eval,
        camera_2d,
        mono_3d,
    }
}

fn checks_containment(c: Condition) -> bool {
    matches!(
        c,
        Condition::Passthrough
            | Condition::Attack(AttackKind::X1 | AttackKind::X6 | AttackKind::X7)
    )
}

struct ConditionState {
    record: ConditionRecord,
    attacker: Option<Attacker>,
    monitor: IntegrityMonitor,
    victims: Vec<RunRecord>,
    stacks: Vec<Victim>,
}

impl ConditionState {
    fn new(c: Condition, avs: &[AvCase], scene: &Scene, cfg: &Config) -> Self {
        Self {
            record: ConditionRecord {
                condition: c,
                log: Vec::new(),
                target: None,
            },
            attacker: c
                .attack()
                .map(|k| Attacker::new(k, cfg.attack.clone(), &scene.sensor)),
            monitor: IntegrityMonitor::new(cfg.integrity_for(&scene.sensor), &scene.sensor),
            victims: avs
                .iter()
                .map(|&av| RunRecord {
                    av,
                    condition: c,
                    metrics: Vec::new(),
                    tracks: Vec::new(),
                    safety: Vec::new(),
                })
                .collect(),
            stacks: avs
                .iter()
                .map(|&av| {
                    Victim::new(
                        av,
                        cfg.fusion.clone(),
                        scene.camera.clone(),
                        cfg.detector.max_range,
                    )
                })
                .collect(),
        }
    }

    /// The sweep the victim receives this frame, plus the attacker's log.
    fn attacked(&mut self, clean: &Sweep, scene: &Scene) -> (Sweep, Option<FrameLog>) {
        match (&mut self.attacker, self.record.condition) {
            (Some(a), _) => {
                let (s, log) = a.step(clean);
                (quantize_sweep(&s, &scene.sensor), Some(log))
            }
            (None, Condition::Passthrough) => (quantize_sweep(clean, &scene.sensor), None),
            (None, _) => (clean.clone(), None),
        }
    }

    fn note_target(&mut self, k: usize, truth: &[TruthObject]) {
        if self.record.target.is_some() {
            return;
        }
        let Some(t) = self.attacker.as_ref().and_then(|a| a.target()) else {
            return;
        };
        let p = t.position();
        let nearest = truth
            .iter()
            .map(|o| (o.id, (o.bbox.center.xy() - p).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        self.record.target = Some(TargetCheck {
            frame: k,
            target: t.id,
            x: p.x,
            y: p.y,
            nearest_truth: nearest.map(|n| n.0),
            distance: nearest.map_or(f64::INFINITY, |n| n.1),
        });
    }
}

/// Run every condition and victim over the scene.
pub fn run_scene(
    scene: &Scene,
    conditions: &[Condition],
    avs: &[AvCase],
    cfg: &Config,
) -> SceneRun {
    let grid: AngleGrid = scene.sensor.grid();
    let region = EvalRegion::for_camera(&scene.camera);
    let dt = scene.dt();
    let mut states: Vec<ConditionState> = conditions
        .iter()
        .map(|&c| ConditionState::new(c, avs, scene, cfg))
        .collect();

    for k in 0..scene.frame_count {
        let f = clean_frame(scene, k, cfg);
        let ego_v = scene.ego_velocity(k);
        let true_objects: Vec<SafetyObject> =
            f.truth.iter().map(SafetyObject::from_truth).collect();
        let true_verdict = evaluate_frame(k, ego_v.x, &true_objects, &cfg.rss);
        let clean_sig = states
            .iter()
            .any(|s| checks_containment(s.record.condition))
            .then(|| f.wire.angle_signature(&grid));

        for st in &mut states {
            let (wire, log) = st.attacked(&f.wire, scene);
            st.note_target(k, &f.truth);
            let verdict = st.monitor.check(&wire);
            let contained = checks_containment(st.record.condition).then(|| {
                clean_sig
                    .as_ref()
                    .is_some_and(|c| *c == wire.angle_signature(&grid))
            });
            let dets = detect_lidar(&wire, scene.sensor.mount_height, &cfg.detector);
            let det_pos: Vec<_> = dets.iter().map(|d| d.bbox.center).collect();
            let (fp, fn_) = count_in_region(&det_pos, &f.eval, &region);

            st.record.log.push(LogRow {
                frame: k,
                phase: log.as_ref().map_or("none", |l| l.phase.name()).to_string(),
                target: log.as_ref().and_then(|l| l.target),
                r_k: log.as_ref().and_then(|l| l.r_k),
                directive: log
                    .as_ref()
                    .map(|l| l.directive.clone())
                    .unwrap_or_default(),
                height: log.as_ref().and_then(|l| l.height),
                modified_points: log.as_ref().map_or(0, |l| l.modified_points),
                points: wire.len(),
                detections: dets.len(),
                zeta_alpha: verdict.zeta_alpha,
                zeta_beta: verdict.zeta_beta,
                zeta_gamma: verdict.zeta_gamma,
                zeta_rho: verdict.zeta_rho,
                zeta: verdict.zeta,
                contained,
            });

            for (victim, rec) in st.stacks.iter_mut().zip(&mut st.victims) {
                let tracks = victim.step(&dets, &f.camera_2d, &f.mono_3d, dt);
                let pos: Vec<_> = tracks.iter().map(|t| t.position()).collect();
                let (ft, mt) = count_in_region(&pos, &f.eval, &region);
                let objects: Vec<SafetyObject> = tracks
                    .iter()
                    .map(|t| SafetyObject::from_track(t, &ego_v))
                    .collect();
                let perceived = evaluate_frame(k, ego_v.x, &objects, &cfg.rss);
                rec.metrics.push(FrameMetrics {
                    frame: k,
                    fp,
                    fn_,
                    ft,
                    mt,
                    unsafe_count: perceived.unsafe_count,
                    false_alarm: perceived_vs_true(&perceived, &true_verdict)
                        == SafetyConsistency::FalseAlarm,
                });
                rec.tracks
                    .extend(tracks.iter().map(|t| TrackRow::new(k, t)));
                safety_rows("perceived", &perceived, &mut rec.safety);
                safety_rows("truth", &true_verdict, &mut rec.safety);
            }
        }
    }

    let mut conditions_out = Vec::new();
    let mut runs = Vec::new();
    for st in states {
        conditions_out.push(st.record);
        runs.extend(st.victims);
    }
    SceneRun {
        scene: scene.name.clone(),
        conditions: conditions_out,
        runs,
    }
}
