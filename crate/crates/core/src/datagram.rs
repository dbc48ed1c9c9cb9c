//! HDL-32E-style datagram codec, sweep assembly and reverse engineering of
//! datagrams from a point-cloud matrix.
//!
//! Packet layout (1206 bytes, little-endian):
//!
//! ```text
//! 12 × block { 0xFF 0xEE, azimuth u16 (0.01°), 32 × { range u16 (2 mm), intensity u8 } }
//! timestamp u32 (µs), mode u8, model u8
//! ```

use std::f64::consts::TAU;

use thiserror::Error;

use crate::geometry::{normalize_azimuth, ReturnMode, SensorModel, SphericalPoint};
use crate::sweep::{azimuths_per_datagram, datagram_micros, Sweep};

pub const DATAGRAM_LEN: usize = 1206;
pub const BLOCKS_PER_DATAGRAM: usize = 12;
pub const CELLS_PER_BLOCK: usize = 32;
pub const BLOCK_LEN: usize = 2 + 2 + CELLS_PER_BLOCK * 3;
pub const BLOCK_FLAG: [u8; 2] = [0xFF, 0xEE];
/// Metres per range count.
pub const RANGE_UNIT: f64 = 0.002;
pub const MODE_STRONGEST: u8 = 0x37;
pub const MODE_LAST: u8 = 0x38;
pub const MODE_DUAL: u8 = 0x39;
pub const MODEL_HDL32E: u8 = 0x21;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("datagram must be {DATAGRAM_LEN} bytes, got {0}")]
    Frame(usize),
    #[error("block {block} has flag {flag:02X?}, expected FF EE")]
    Malformed { block: usize, flag: [u8; 2] },
    #[error("azimuth went backwards within a sweep: {prev} then {next} (0.01°)")]
    Ordering { prev: u16, next: u16 },
    #[error("no datagrams to assemble")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Cell {
    pub range_raw: u16,
    pub intensity_raw: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub azimuth_raw: u16,
    pub cells: [Cell; CELLS_PER_BLOCK],
}

impl Default for Block {
    fn default() -> Self {
        Self {
            azimuth_raw: 0,
            cells: [Cell::default(); CELLS_PER_BLOCK],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Datagram {
    pub blocks: [Block; BLOCKS_PER_DATAGRAM],
    pub timestamp_us: u32,
    pub mode_byte: u8,
    pub model_byte: u8,
}

impl Default for Datagram {
    fn default() -> Self {
        Self {
            blocks: [Block::default(); BLOCKS_PER_DATAGRAM],
            timestamp_us: 0,
            mode_byte: MODE_STRONGEST,
            model_byte: MODEL_HDL32E,
        }
    }
}

impl Datagram {
    pub fn first_azimuth(&self) -> u16 {
        self.blocks[0].azimuth_raw
    }

    pub fn last_azimuth(&self) -> u16 {
        self.blocks[BLOCKS_PER_DATAGRAM - 1].azimuth_raw
    }

    pub fn nonzero_cells(&self) -> usize {
        self.blocks
            .iter()
            .flat_map(|b| b.cells.iter())
            .filter(|c| c.range_raw != 0)
            .count()
    }
}

pub fn mode_byte(mode: ReturnMode) -> u8 {
    match mode {
        ReturnMode::Single => MODE_STRONGEST,
        ReturnMode::Dual => MODE_DUAL,
    }
}

pub fn encode(d: &Datagram) -> Vec<u8> {
    let mut out = Vec::with_capacity(DATAGRAM_LEN);
    for b in &d.blocks {
        out.extend_from_slice(&BLOCK_FLAG);
        out.extend_from_slice(&b.azimuth_raw.to_le_bytes());
        for c in &b.cells {
            out.extend_from_slice(&c.range_raw.to_le_bytes());
            out.push(c.intensity_raw);
        }
    }
    out.extend_from_slice(&d.timestamp_us.to_le_bytes());
    out.push(d.mode_byte);
    out.push(d.model_byte);
    debug_assert_eq!(out.len(), DATAGRAM_LEN);
    out
}

pub fn decode(bytes: &[u8]) -> Result<Datagram, CodecError> {
    if bytes.len() != DATAGRAM_LEN {
        return Err(CodecError::Frame(bytes.len()));
    }
    let mut d = Datagram::default();
    for (k, block) in d.blocks.iter_mut().enumerate() {
        let raw = &bytes[k * BLOCK_LEN..(k + 1) * BLOCK_LEN];
        let flag = [raw[0], raw[1]];
        if flag != BLOCK_FLAG {
            return Err(CodecError::Malformed { block: k, flag });
        }
        block.azimuth_raw = u16::from_le_bytes([raw[2], raw[3]]);
        for (j, cell) in block.cells.iter_mut().enumerate() {
            let o = 4 + 3 * j;
            cell.range_raw = u16::from_le_bytes([raw[o], raw[o + 1]]);
            cell.intensity_raw = raw[o + 2];
        }
    }
    let tail = BLOCKS_PER_DATAGRAM * BLOCK_LEN;
    d.timestamp_us = u32::from_le_bytes(bytes[tail..tail + 4].try_into().unwrap());
    d.mode_byte = bytes[tail + 4];
    d.model_byte = bytes[tail + 5];
    Ok(d)
}

/// Wire azimuth of grid column `i` out of `n`, rounded half-up.
pub fn azimuth_raw_for_index(i: usize, n: usize) -> u16 {
    (((72_000 * i as u64 + n as u64) / (2 * n as u64)) % 36_000) as u16
}

/// Wire azimuth for an arbitrary angle.
pub fn azimuth_raw_for_angle(theta: f64) -> u16 {
    ((normalize_azimuth(theta).to_degrees() * 100.0).round() as u64 % 36_000) as u16
}

/// Decode a wire azimuth, snapping to the sensor's column angle when the raw
/// value is exactly that column's encoding.
pub fn azimuth_from_raw(raw: u16, n: usize) -> f64 {
    let i = ((raw as f64 * n as f64 / 36_000.0).round() as usize) % n;
    if azimuth_raw_for_index(i, n) == raw {
        TAU * i as f64 / n as f64
    } else {
        normalize_azimuth((raw as f64 / 100.0).to_radians())
    }
}

pub fn range_to_raw(range: f64) -> u16 {
    (range / RANGE_UNIT).round().clamp(1.0, u16::MAX as f64) as u16
}

pub fn intensity_to_raw(i: f64) -> u8 {
    (i.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Convert a sequence of datagrams belonging to one rotation into a sweep.
/// Zero-range cells are omitted. Azimuths must be non-decreasing.
pub fn assemble_sweep(datagrams: &[Datagram], sensor: &SensorModel) -> Result<Sweep, CodecError> {
    let first = datagrams.first().ok_or(CodecError::Empty)?;
    let n = sensor.azimuth_count;
    let m = sensor.channel_count().min(CELLS_PER_BLOCK);
    let mut prev = 0u16;
    let mut points = Vec::new();
    for d in datagrams {
        let t = d.timestamp_us as f64 * 1e-6;
        for b in &d.blocks {
            if b.azimuth_raw < prev {
                return Err(CodecError::Ordering {
                    prev,
                    next: b.azimuth_raw,
                });
            }
            prev = b.azimuth_raw;
            let theta = azimuth_from_raw(b.azimuth_raw, n);
            for (j, c) in b.cells.iter().take(m).enumerate() {
                if c.range_raw == 0 {
                    continue;
                }
                points.push(SphericalPoint {
                    range: c.range_raw as f64 * RANGE_UNIT,
                    azimuth: theta,
                    elevation: sensor.elevation_angles[j],
                    timestamp: t,
                    intensity: c.intensity_raw as f64 / 255.0,
                });
            }
        }
    }
    let mut sweep = Sweep::new(points, 0, first.timestamp_us as f64 * 1e-6);
    sweep.source_datagram_count = datagrams.len();
    Ok(sweep)
}

/// Streaming assembler: feed datagrams in arrival order, get a sweep back
/// whenever the azimuth wraps past 360°.
#[derive(Debug, Clone)]
pub struct SweepAssembler {
    sensor: SensorModel,
    pending: Vec<Datagram>,
    next_index: u64,
}

impl SweepAssembler {
    pub fn new(sensor: SensorModel) -> Self {
        Self {
            sensor,
            pending: Vec::new(),
            next_index: 0,
        }
    }

    /// Add a datagram; returns the completed previous sweep if this datagram
    /// starts a new rotation.
    pub fn push(&mut self, d: Datagram) -> Option<Sweep> {
        let wrapped = self
            .pending
            .last()
            .is_some_and(|last| d.first_azimuth() < last.last_azimuth());
        let done = if wrapped { self.flush() } else { None };
        self.pending.push(d);
        done
    }

    /// Emit whatever is buffered as a sweep.
    pub fn flush(&mut self) -> Option<Sweep> {
        if self.pending.is_empty() {
            return None;
        }
        let batch = std::mem::take(&mut self.pending);
        // Batches are delimited on wrap, so ordering holds by construction.
        let mut s = assemble_sweep(&batch, &self.sensor).ok()?;
        s.index = self.next_index;
        self.next_index += 1;
        Some(s)
    }

    pub fn pending_datagrams(&self) -> &[Datagram] {
        &self.pending
    }

    /// Take the buffered datagrams without assembling them.
    pub fn take_pending(&mut self) -> Vec<Datagram> {
        std::mem::take(&mut self.pending)
    }
}

/// Outcome of mapping a point matrix back onto datagrams.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReverseEngineered {
    pub datagrams: Vec<Datagram>,
    /// Rows dropped because a higher-intensity row claimed the same cell.
    pub conflicts: Vec<usize>,
    /// Rows with no grid cell inside the gate.
    pub unassigned: Vec<usize>,
}

/// Angular gate used when assigning rows to grid cells: half the smallest
/// grid spacing, so at most one cell can fall inside it.
pub fn assignment_gate(sensor: &SensorModel) -> f64 {
    let g = sensor.grid();
    0.5 * g.azimuth_spacing().min(g.elevation_spacing())
}

/// Assign each row of the sweep matrix to a grid cell and pack the cells into
/// datagrams.
///
/// The cost of pairing a row with a cell is their angular distance and pairs
/// beyond [`assignment_gate`] are forbidden. Because the gate is half the
/// grid spacing every row has at most one admissible cell, so the sparse
/// assignment problem splits into independent per-cell contests; a contest
/// with more rows than the cell can hold keeps the highest-intensity rows.
pub fn reverse_engineer_datagrams(sweep: &Sweep, sensor: &SensorModel) -> ReverseEngineered {
    let grid = sensor.grid();
    let n = grid.azimuth_count;
    let m = sensor.channel_count().min(CELLS_PER_BLOCK);
    let returns = sensor.mode.returns_per_angle();
    let gate = assignment_gate(sensor);

    let mut out = ReverseEngineered::default();
    // claims[cell] = rows competing for the cell
    let mut claims: Vec<Vec<usize>> = vec![Vec::new(); n * m];
    for (r, p) in sweep.points.iter().enumerate() {
        let cell = grid.nearest_cell(p.azimuth, p.elevation);
        if cell.1 >= m || grid.cell_distance(p.azimuth, p.elevation, cell) >= gate {
            out.unassigned.push(r);
            continue;
        }
        claims[grid.flat_index(cell)].push(r);
    }

    let per = azimuths_per_datagram(sensor);
    let count = n.div_ceil(per);
    let mode = mode_byte(sensor.mode);
    for d in 0..count {
        let mut dg = Datagram {
            timestamp_us: datagram_micros(sweep.start_time, d, sensor) as u32,
            mode_byte: mode,
            ..Datagram::default()
        };
        let mut last_raw = 0u16;
        for slot in 0..per {
            let i = d * per + slot;
            let raw = if i < n {
                azimuth_raw_for_index(i, n)
            } else {
                last_raw
            };
            last_raw = raw;
            for ret in 0..returns {
                dg.blocks[slot * returns + ret].azimuth_raw = raw;
            }
            if i >= n {
                continue;
            }
            for j in 0..m {
                let rows = &mut claims[i * m + j];
                if rows.is_empty() {
                    continue;
                }
                if rows.len() > returns {
                    rows.sort_by(|&a, &b| {
                        let (pa, pb) = (&sweep.points[a], &sweep.points[b]);
                        pb.intensity.total_cmp(&pa.intensity).then(a.cmp(&b))
                    });
                    out.conflicts.extend(rows.drain(returns..));
                }
                // dual mode: nearer return goes in the first block
                rows.sort_by(|&a, &b| {
                    sweep.points[a]
                        .range
                        .total_cmp(&sweep.points[b].range)
                        .then(a.cmp(&b))
                });
                for (ret, &r) in rows.iter().enumerate() {
                    let p = &sweep.points[r];
                    dg.blocks[slot * returns + ret].cells[j] = Cell {
                        range_raw: range_to_raw(p.range),
                        intensity_raw: intensity_to_raw(p.intensity),
                    };
                }
            }
        }
        out.datagrams.push(dg);
    }
    out.conflicts.sort_unstable();
    out
}

/// Pass a sweep through the wire representation: what a receiver would see
/// after reverse engineering and reassembly.
pub fn quantize_sweep(sweep: &Sweep, sensor: &SensorModel) -> Sweep {
    let re = reverse_engineer_datagrams(sweep, sensor);
    let mut s = assemble_sweep(&re.datagrams, sensor).expect("datagrams built in order");
    s.index = sweep.index;
    s
}
