//! Simulation toolkit for partial-information cyber attacks on LiDAR
//! datagrams and the sensor-fusion architectures that consume them.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] – sensor model, spherical points, angle grids.
//! * [`datagram`] / [`sweep`] – the 1206-byte wire format, sweep assembly and
//!   reverse-engineering of datagrams from point-cloud matrices.
//! * [`integrity`] – first-order receiver integrity indicators.
//! * [`scene`] – synthetic longitudinal driving scenes rendered by raycasting.
//! * [`perception`] – clustering LiDAR detector and noisy camera detectors.
//! * [`tracking`] – Kalman tracking and the four victim architectures.
//! * [`attack`] – the monitor / schedule / execute attacker.
//! * [`safety`] – pairwise longitudinal RSS evaluation.
//! * [`metrics`] – FP/FN/FT/MT counting and increments over baseline.

pub mod assignment;
pub mod attack;
pub mod config;
pub mod datagram;
pub mod geometry;
pub mod integrity;
pub mod metrics;
pub mod perception;
pub mod rng;
pub mod safety;
pub mod scene;
pub mod sweep;
pub mod tracking;

pub use config::Config;
