//! Receiving end: reassemble sweeps and run the integrity checks on each.

use std::fs::File;
use std::io::BufWriter;
use std::net::UdpSocket;
use std::path::Path;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use lidarsec_core::datagram::{decode, SweepAssembler};
use lidarsec_core::geometry::SensorModel;
use lidarsec_core::integrity::{IntegrityConfig, IntegrityMonitor, IntegrityVerdict};
use lidarsec_core::sweep::Sweep;
use serde::Serialize;

use crate::proxy::reader;
use crate::NetError;

#[derive(Debug, Clone, Default)]
pub struct Received {
    pub sweeps: Vec<Sweep>,
    pub verdicts: Vec<IntegrityVerdict>,
    pub packets: usize,
    pub malformed: usize,
}

impl Received {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.zeta)
    }
}

fn finish(mon: &mut IntegrityMonitor, out: &mut Received, s: Sweep) {
    out.verdicts.push(mon.check(&s));
    out.sweeps.push(s);
}

/// Receive until the end marker or `idle` without traffic.
pub fn run_receiver(
    socket: &UdpSocket,
    sensor: &SensorModel,
    integrity: IntegrityConfig,
    idle: Duration,
) -> Result<Received, NetError> {
    let (tx, rx) = mpsc::channel();
    let rsock = socket.try_clone()?;
    let handle = thread::spawn(move || reader(rsock, idle, tx));
    let mut asm = SweepAssembler::new(sensor.clone());
    let mut mon = IntegrityMonitor::new(integrity, sensor);
    let mut out = Received::default();
    for packet in rx {
        if packet.is_empty() {
            break;
        }
        out.packets += 1;
        match decode(&packet) {
            Ok(d) => {
                if let Some(s) = asm.push(d) {
                    finish(&mut mon, &mut out, s);
                }
            }
            Err(e) => {
                log::warn!("receiver: dropping packet: {e}");
                out.malformed += 1;
            }
        }
    }
    if let Some(s) = asm.flush() {
        finish(&mut mon, &mut out, s);
    }
    let _ = handle.join();
    Ok(out)
}

#[derive(Serialize)]
struct IntegrityRow {
    sweep: usize,
    start_time: f64,
    points: usize,
    zeta_alpha: bool,
    zeta_beta: bool,
    zeta_gamma: bool,
    zeta_rho: bool,
    zeta: bool,
}

/// One binary sweep file per sweep plus `integrity.csv`.
pub fn write_receiver_outputs(dir: &Path, r: &Received) -> Result<(), NetError> {
    std::fs::create_dir_all(dir)?;
    for (k, s) in r.sweeps.iter().enumerate() {
        s.write_to(BufWriter::new(File::create(
            dir.join(format!("sweep_{k:05}.lswp")),
        )?))?;
    }
    let mut w = csv::Writer::from_path(dir.join("integrity.csv"))?;
    for (k, (s, v)) in r.sweeps.iter().zip(&r.verdicts).enumerate() {
        w.serialize(IntegrityRow {
            sweep: k,
            start_time: s.start_time,
            points: s.len(),
            zeta_alpha: v.zeta_alpha,
            zeta_beta: v.zeta_beta,
            zeta_gamma: v.zeta_gamma,
            zeta_rho: v.zeta_rho,
            zeta: v.zeta,
        })?;
    }
    w.flush()?;
    Ok(())
}
