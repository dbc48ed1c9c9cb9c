//! The four victim architectures behind one interface.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::t2t::{fuse_t2t, T2tMemory};
use super::tracker::{Tracker, TrackerMode};
use super::{FusionConfig, Track};
use crate::perception::{BoxDetection, Detection2d};
use crate::scene::CameraModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AvCase {
    Av1,
    Av2,
    Av3,
    Av4,
}

impl AvCase {
    pub const ALL: [AvCase; 4] = [AvCase::Av1, AvCase::Av2, AvCase::Av3, AvCase::Av4];

    pub fn name(self) -> &'static str {
        match self {
            AvCase::Av1 => "av1",
            AvCase::Av2 => "av2",
            AvCase::Av3 => "av3",
            AvCase::Av4 => "av4",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AvCase::Av1 => "LiDAR only",
            AvCase::Av2 => "detection fusion",
            AvCase::Av3 => "fusion + asymmetry monitor",
            AvCase::Av4 => "track-to-track fusion",
        }
    }
}

impl fmt::Display for AvCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AvCase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AvCase::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown AV case {s:?}"))
    }
}

/// One victim perception stack; feed it a frame of detections, get back
/// the tracks it would hand to planning.
#[derive(Debug, Clone)]
pub struct Victim {
    pub case: AvCase,
    primary: Tracker,
    mono: Option<Tracker>,
    memory: T2tMemory,
    camera: CameraModel,
    lidar_range: f64,
    cfg: FusionConfig,
    /// Per-frame count of tracks dropped by AV.4 for lack of a partner.
    pub suppressed: Vec<usize>,
}

impl Victim {
    /// `lidar_range` bounds the LiDAR detector's coverage, used by AV.4 to
    /// decide whether a camera track should have a LiDAR partner.
    pub fn new(case: AvCase, cfg: FusionConfig, camera: CameraModel, lidar_range: f64) -> Self {
        let mode = match case {
            AvCase::Av1 | AvCase::Av4 => TrackerMode::Boxes,
            AvCase::Av2 => TrackerMode::BoxesCamera,
            AvCase::Av3 => TrackerMode::BoxesCameraMonitor,
        };
        let mono = (case == AvCase::Av4)
            .then(|| Tracker::new(TrackerMode::Boxes, cfg.clone(), camera.clone()));
        Self {
            case,
            primary: Tracker::new(mode, cfg.clone(), camera.clone()),
            mono,
            memory: T2tMemory::default(),
            camera,
            lidar_range,
            cfg,
            suppressed: Vec::new(),
        }
    }

    pub fn step(
        &mut self,
        lidar: &[BoxDetection],
        camera_2d: &[Detection2d],
        mono_3d: &[BoxDetection],
        dt: f64,
    ) -> Vec<Track> {
        match &mut self.mono {
            None => self.primary.step(lidar, camera_2d, dt),
            Some(mono) => {
                let l = self.primary.step(lidar, &[], dt);
                let c = mono.step(mono_3d, &[], dt);
                let out = self.memory.apply(
                    fuse_t2t(&l, &c, &self.camera, self.lidar_range, &self.cfg)
                        .expect("fusion config validated at construction"),
                );
                self.suppressed
                    .push(out.suppressed_lidar.len() + out.suppressed_camera.len());
                out.fused
            }
        }
    }

    pub fn monitor_deletions(&self) -> u64 {
        self.primary.monitor_deletions
    }
}
