//! Assembled sweeps (one full rotation) and the on-disk sweep file format.
//!
//! File layout, little-endian: magic `LSWP`, version `u32`, point count
//! `u32`, then per point `ρ f32, θ f32, φ f32, t f64, I f32`.

use std::io::{self, Read, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{AngleGrid, SensorModel, SphericalPoint};

pub const SWEEP_MAGIC: &[u8; 4] = b"LSWP";
pub const SWEEP_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SweepFileError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported sweep file version {0}")]
    Version(u32),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Point-cloud matrix for one rotation, sorted by (azimuth, elevation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Sweep {
    pub points: Vec<SphericalPoint>,
    pub index: u64,
    /// Time of the first firing of the rotation, seconds.
    pub start_time: f64,
    pub source_datagram_count: usize,
}

impl Sweep {
    pub fn new(points: Vec<SphericalPoint>, index: u64, start_time: f64) -> Self {
        let mut s = Self {
            points,
            index,
            start_time,
            source_datagram_count: 0,
        };
        s.sort();
        s
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Stable sort by (azimuth, elevation); equal-angle returns keep their
    /// relative order.
    pub fn sort(&mut self) {
        self.points.sort_by(|a, b| {
            a.azimuth
                .total_cmp(&b.azimuth)
                .then(a.elevation.total_cmp(&b.elevation))
        });
    }

    pub fn cartesian(&self) -> Vec<Vector3<f64>> {
        self.points.iter().map(|p| p.to_cartesian()).collect()
    }

    /// Grid cell `(azimuth index, channel)` of every point.
    pub fn cells(&self, grid: &AngleGrid) -> Vec<(usize, usize)> {
        self.points
            .iter()
            .map(|p| grid.nearest_cell(p.azimuth, p.elevation))
            .collect()
    }

    /// Sorted multiset of quantised angles, for containment checks.
    pub fn angle_signature(&self, grid: &AngleGrid) -> Vec<(usize, usize)> {
        let mut c = self.cells(grid);
        c.sort_unstable();
        c
    }

    /// Move the sweep to a new start time, recomputing each point's
    /// timestamp from its firing slot.
    pub fn retime(&mut self, new_start: f64, sensor: &SensorModel) {
        let grid = sensor.grid();
        self.start_time = quantize_time(new_start);
        let start = self.start_time;
        for p in &mut self.points {
            let i = grid.nearest_azimuth(p.azimuth);
            p.timestamp = firing_time(start, i, sensor);
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(SWEEP_MAGIC)?;
        w.write_all(&SWEEP_VERSION.to_le_bytes())?;
        w.write_all(&(self.points.len() as u32).to_le_bytes())?;
        for p in &self.points {
            w.write_all(&(p.range as f32).to_le_bytes())?;
            w.write_all(&(p.azimuth as f32).to_le_bytes())?;
            w.write_all(&(p.elevation as f32).to_le_bytes())?;
            w.write_all(&p.timestamp.to_le_bytes())?;
            w.write_all(&(p.intensity as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, SweepFileError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != SWEEP_MAGIC {
            return Err(SweepFileError::BadMagic(magic));
        }
        let version = read_u32(&mut r)?;
        if version != SWEEP_VERSION {
            return Err(SweepFileError::Version(version));
        }
        let n = read_u32(&mut r)? as usize;
        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            let range = read_f32(&mut r)? as f64;
            let azimuth = read_f32(&mut r)? as f64;
            let elevation = read_f32(&mut r)? as f64;
            let mut b8 = [0u8; 8];
            r.read_exact(&mut b8)?;
            let timestamp = f64::from_le_bytes(b8);
            let intensity = read_f32(&mut r)? as f64;
            points.push(SphericalPoint {
                range,
                azimuth,
                elevation,
                timestamp,
                intensity,
            });
        }
        let start_time = points.iter().map(|p| p.timestamp).fold(f64::NAN, f64::min);
        Ok(Self {
            points,
            index: 0,
            start_time: if start_time.is_nan() { 0.0 } else { start_time },
            source_datagram_count: 0,
        })
    }
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32<R: Read>(r: &mut R) -> io::Result<f32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(f32::from_le_bytes(b))
}

/// Round a time to the datagram clock resolution (1 µs).
pub fn quantize_time(t: f64) -> f64 {
    to_micros(t) as f64 * 1e-6
}

pub fn to_micros(t: f64) -> u64 {
    (t * 1e6).round().max(0.0) as u64
}

/// Number of azimuth columns carried by one datagram.
pub fn azimuths_per_datagram(sensor: &SensorModel) -> usize {
    crate::datagram::BLOCKS_PER_DATAGRAM / sensor.mode.returns_per_angle()
}

/// Timestamp in microseconds of datagram `d` of a sweep starting at `start`.
pub fn datagram_micros(start: f64, d: usize, sensor: &SensorModel) -> u64 {
    let per = azimuths_per_datagram(sensor) as f64;
    to_micros(start) + (d as f64 * per * sensor.firing_interval * 1e6).round() as u64
}

/// Timestamp carried by points at azimuth index `i`: the time of the
/// datagram that holds that column.
pub fn firing_time(start: f64, azimuth_index: usize, sensor: &SensorModel) -> f64 {
    let d = azimuth_index / azimuths_per_datagram(sensor);
    datagram_micros(start, d, sensor) as f64 * 1e-6
}
