//! The built-in scene suite: 22 deterministic 10-second scenes at 10 Hz.
//!
//! Road layout (world frame, ego starts at the origin heading +x):
//! ego lane y = 0, same-direction lane y = −3.5, oncoming lane y = +3.5,
//! parking strips y = ±6.5, sidewalks y = ±8.5.

use std::f64::consts::PI;

use nalgebra::Vector3;

use super::{CameraModel, ObjectClass, Scene, SceneObject, Segment, Trajectory};
use crate::geometry::{Pose, SensorModel};

const EGO_SPEED: f64 = 8.0;
const RIGHT_LANE: f64 = -3.5;
const ONCOMING_LANE: f64 = 3.5;
const PARK_RIGHT: f64 = -6.5;
const PARK_LEFT: f64 = 6.5;
const WALK_RIGHT: f64 = -8.5;
const WALK_LEFT: f64 = 8.5;

fn at(x: f64, y: f64, yaw: f64) -> Pose {
    Pose::new(Vector3::new(x, y, 0.0), yaw)
}

struct Builder {
    objects: Vec<SceneObject>,
}

impl Builder {
    fn new() -> Self {
        Self {
            objects: Vec::new(),
        }
    }

    fn push(mut self, class: ObjectClass, trajectory: Trajectory) -> Self {
        let id = self.objects.len() as u32 + 1;
        self.objects.push(SceneObject::new(id, class, trajectory));
        self
    }

    /// Car driving in +x.
    fn car(self, x: f64, y: f64, speed: f64) -> Self {
        self.push(ObjectClass::Car, Trajectory::straight(at(x, y, 0.0), speed))
    }

    fn oncoming(self, x: f64, speed: f64) -> Self {
        self.push(
            ObjectClass::Car,
            Trajectory::straight(at(x, ONCOMING_LANE, PI), speed),
        )
    }

    fn parked(self, x: f64, y: f64) -> Self {
        self.push(ObjectClass::Car, Trajectory::stationary(at(x, y, 0.0)))
    }

    fn walker(self, x: f64, y: f64, speed: f64) -> Self {
        let yaw = if speed < 0.0 { PI } else { 0.0 };
        self.push(
            ObjectClass::Pedestrian,
            Trajectory::straight(at(x, y, yaw), speed.abs()),
        )
    }

    fn custom(self, class: ObjectClass, trajectory: Trajectory) -> Self {
        self.push(class, trajectory)
    }
}

fn scene(name: &str, seed: u64, ego_speed: f64, b: Builder) -> Scene {
    let ego = if ego_speed == 0.0 {
        Trajectory::stationary(Pose::identity())
    } else {
        Trajectory::straight(Pose::identity(), ego_speed)
    };
    Scene {
        name: name.to_string(),
        seed,
        frame_rate: 10.0,
        frame_count: 100,
        sensor: SensorModel::desk_default(),
        camera: CameraModel::default(),
        ego,
        objects: b.objects,
    }
}

fn lane_change(x: f64, from_y: f64, speed: f64, after: f64, lateral: f64) -> Trajectory {
    Trajectory {
        start: at(x, from_y, 0.0),
        segments: vec![
            Segment::straight(after, speed),
            Segment {
                duration: 2.0,
                speed,
                yaw_rate: 0.0,
                lateral_speed: lateral,
            },
            Segment::straight(1e9, speed),
        ],
    }
}

/// Lead-vehicle, adjacent-lane, oncoming, crossing, lane-change,
/// multi-object, empty-road, parked-street, pedestrian and stationary-ego
/// scenes. Every scene is RSS-safe in ground truth.
pub fn builtin_scene_suite() -> Vec<Scene> {
    let v = EGO_SPEED;
    let mut out = Vec::new();
    let mut add = |name: &str, ego_speed: f64, b: Builder| {
        let seed = out.len() as u64 + 1;
        out.push(scene(name, seed, ego_speed, b));
    };

    add(
        "lead_vehicle_a",
        v,
        Builder::new()
            .car(35.0, 0.0, 9.0)
            .parked(20.0, PARK_RIGHT)
            .parked(45.0, PARK_RIGHT),
    );
    add(
        "lead_vehicle_b",
        v,
        Builder::new()
            .car(38.0, 0.0, 8.0)
            .oncoming(90.0, 10.0)
            .walker(30.0, WALK_LEFT, 1.2),
    );
    add(
        "lead_vehicle_c",
        v,
        Builder::new()
            .car(33.0, 0.0, 9.5)
            .car(-10.0, RIGHT_LANE, 9.0),
    );
    add(
        "lead_vehicle_d",
        v,
        Builder::new()
            .car(36.0, 0.0, 8.5)
            .parked(25.0, PARK_LEFT)
            .parked(60.0, PARK_LEFT),
    );
    add(
        "adjacent_lane_a",
        v,
        Builder::new()
            .car(18.0, RIGHT_LANE, 8.0)
            .parked(40.0, PARK_RIGHT),
    );
    add(
        "adjacent_lane_b",
        v,
        Builder::new()
            .car(22.0, RIGHT_LANE, 8.5)
            .oncoming(70.0, 9.0),
    );
    add(
        "adjacent_lane_c",
        v,
        Builder::new()
            .car(26.0, RIGHT_LANE, 8.0)
            .walker(20.0, WALK_RIGHT, 1.0),
    );
    add(
        "adjacent_lane_d",
        v,
        Builder::new().car(30.0, RIGHT_LANE, 9.0),
    );
    add(
        "adjacent_lane_e",
        v,
        Builder::new()
            .car(20.0, RIGHT_LANE, 7.5)
            .parked(15.0, PARK_LEFT)
            .parked(50.0, PARK_LEFT),
    );
    add(
        "adjacent_lane_f",
        v,
        Builder::new()
            .car(24.0, RIGHT_LANE, 8.0)
            .oncoming(100.0, 12.0),
    );
    add(
        "adjacent_lane_g",
        v,
        Builder::new()
            .car(16.0, RIGHT_LANE, 8.5)
            .walker(35.0, WALK_LEFT, -1.3),
    );
    add(
        "adjacent_lane_h",
        v,
        Builder::new()
            .car(28.0, RIGHT_LANE, 8.0)
            .parked(30.0, PARK_RIGHT)
            .parked(70.0, PARK_RIGHT),
    );
    add(
        "oncoming_traffic",
        v,
        Builder::new()
            .oncoming(80.0, 10.0)
            .oncoming(130.0, 9.0)
            .parked(30.0, PARK_RIGHT),
    );
    add(
        "crossing_intersection",
        5.0,
        Builder::new()
            .custom(
                ObjectClass::Car,
                Trajectory::straight(at(55.0, -40.0, PI / 2.0), 8.0),
            )
            .custom(
                ObjectClass::Car,
                Trajectory::straight(at(75.0, 45.0, -PI / 2.0), 9.0),
            ),
    );
    add(
        "lane_change_in",
        v,
        Builder::new().custom(
            ObjectClass::Car,
            lane_change(25.0, RIGHT_LANE, 10.0, 3.0, 1.75),
        ),
    );
    add(
        "lane_change_out",
        v,
        Builder::new()
            .custom(ObjectClass::Car, lane_change(32.0, 0.0, 9.0, 2.0, -1.75))
            .parked(50.0, PARK_LEFT),
    );
    add(
        "multi_object_a",
        v,
        Builder::new()
            .car(40.0, 0.0, 9.0)
            .car(22.0, RIGHT_LANE, 8.5)
            .oncoming(90.0, 10.0)
            .parked(35.0, PARK_RIGHT)
            .walker(25.0, WALK_LEFT, 1.0)
            .walker(50.0, WALK_RIGHT, -1.0),
    );
    add(
        "multi_object_b",
        v,
        Builder::new()
            .car(20.0, RIGHT_LANE, 8.0)
            .car(45.0, RIGHT_LANE, 8.5)
            .parked(15.0, PARK_LEFT)
            .parked(40.0, PARK_LEFT)
            .parked(65.0, PARK_LEFT)
            .walker(30.0, WALK_RIGHT, 1.2),
    );
    add("empty_road", v, Builder::new());
    add(
        "stationary_ego",
        0.0,
        Builder::new()
            .parked(16.0, RIGHT_LANE)
            .parked(8.0, PARK_RIGHT)
            .walker(15.0, WALK_LEFT, 1.2)
            .custom(
                ObjectClass::Car,
                Trajectory::straight(at(60.0, -30.0, PI / 2.0), 6.0),
            ),
    );
    add(
        "parked_street",
        v,
        Builder::new()
            .parked(20.0, PARK_RIGHT)
            .parked(30.0, PARK_RIGHT)
            .parked(45.0, PARK_LEFT)
            .parked(60.0, PARK_RIGHT)
            .parked(75.0, PARK_LEFT)
            .parked(90.0, PARK_RIGHT),
    );
    add(
        "pedestrians",
        v,
        Builder::new()
            .walker(20.0, WALK_RIGHT, 1.3)
            .walker(28.0, WALK_LEFT, -1.1)
            .walker(45.0, WALK_RIGHT, -1.4)
            .oncoming(60.0, 8.0),
    );
    out
}
