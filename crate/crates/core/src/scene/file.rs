//! TOML scene description files.
//!
//! A scene file mirrors [`Scene`](super::Scene):
//!
//! ```toml
//! name = "lead_follow"
//! seed = 1
//! frame_rate = 10.0
//! frame_count = 100
//!
//! [sensor]            # SensorModel: elevation_angles (rad), azimuth_count, ...
//! [camera]            # CameraModel: focal_length (px), image size, mount pose
//! [ego.start]         # position = [x, y, z], yaw (rad)
//! [[ego.segments]]    # duration (s), speed (m/s), yaw_rate, lateral_speed
//! [[objects]]         # id, class = "car" | "pedestrian", dims = [l, w, h]
//! [objects.trajectory.start]
//! [[objects.trajectory.segments]]
//! ```

use std::path::{Path, PathBuf};

use thiserror::Error;

use super::Scene;

#[derive(Debug, Error)]
pub enum SceneFileError {
    #[error("cannot read scene file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse scene file {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid scene {path}: {reason}")]
    Invalid { path: PathBuf, reason: String },
    #[error("cannot serialise scene: {0}")]
    Serialize(#[from] toml::ser::Error),
}

pub fn scene_to_string(scene: &Scene) -> Result<String, SceneFileError> {
    Ok(toml::to_string_pretty(scene)?)
}

pub fn scene_from_str(text: &str, path: &Path) -> Result<Scene, SceneFileError> {
    let scene: Scene = toml::from_str(text).map_err(|source| SceneFileError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let invalid = |reason: String| SceneFileError::Invalid {
        path: path.to_path_buf(),
        reason,
    };
    scene
        .sensor
        .validate()
        .map_err(|e| invalid(e.to_string()))?;
    if scene.frame_count == 0 || scene.frame_rate <= 0.0 {
        return Err(invalid(
            "frame_count and frame_rate must be positive".into(),
        ));
    }
    Ok(scene)
}

pub fn load_scene(path: &Path) -> Result<Scene, SceneFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| SceneFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    scene_from_str(&text, path)
}

pub fn save_scene(scene: &Scene, path: &Path) -> Result<(), SceneFileError> {
    let text = scene_to_string(scene)?;
    std::fs::write(path, text).map_err(|source| SceneFileError::Io {
        path: path.to_path_buf(),
        source,
    })
}
