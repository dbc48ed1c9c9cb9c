//! Man-in-the-middle proxy. A reader thread drains the socket into a queue;
//! the worker owns the attacker, assembles sweeps, attacks each complete
//! sweep and forwards it re-encoded.

use std::net::{SocketAddr, UdpSocket};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use lidarsec_core::attack::Attacker;
use lidarsec_core::datagram::{decode, encode, reverse_engineer_datagrams, SweepAssembler};
use lidarsec_core::geometry::SensorModel;
use lidarsec_core::sweep::Sweep;

use crate::{NetError, END_OF_STREAM, MAX_PACKET};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProxyStats {
    pub received: usize,
    pub forwarded: usize,
    /// Packets that failed to decode; they are forwarded untouched.
    pub malformed: usize,
    pub sweeps: usize,
}

/// Drain the socket into the queue until the end marker or an idle timeout.
pub(crate) fn reader(socket: UdpSocket, idle: Duration, tx: mpsc::Sender<Vec<u8>>) {
    if let Err(e) = socket.set_read_timeout(Some(idle)) {
        log::error!("cannot set socket timeout: {e}");
    }
    let mut buf = [0u8; MAX_PACKET];
    loop {
        match socket.recv_from(&mut buf) {
            Ok((n, _)) => {
                if tx.send(buf[..n].to_vec()).is_err() || n == 0 {
                    return;
                }
            }
            Err(e) => {
                log::warn!("receive stopped: {e}");
                let _ = tx.send(END_OF_STREAM.to_vec());
                return;
            }
        }
    }
}

struct Forwarder<'a> {
    socket: &'a UdpSocket,
    dest: SocketAddr,
    sensor: &'a SensorModel,
    gap: Duration,
    stats: ProxyStats,
}

impl Forwarder<'_> {
    fn raw(&mut self, bytes: &[u8]) -> Result<(), NetError> {
        self.socket.send_to(bytes, self.dest)?;
        self.stats.forwarded += 1;
        Ok(())
    }

    fn sweep(&mut self, attacker: &mut Attacker, sweep: &Sweep) -> Result<(), NetError> {
        let (out, log) = attacker.step(sweep);
        log::debug!(
            "proxy frame {}: {} {}",
            log.frame,
            log.phase.name(),
            log.directive
        );
        for d in reverse_engineer_datagrams(&out, self.sensor).datagrams {
            if !self.gap.is_zero() {
                thread::sleep(self.gap);
            }
            self.raw(&encode(&d))?;
        }
        self.stats.sweeps += 1;
        Ok(())
    }
}

/// Run until the end marker arrives or the socket is idle for `idle`.
/// Without an attacker every packet is forwarded byte for byte. Attacked
/// sweeps go out as a burst with `gap` between datagrams so a slow
/// receiver does not overflow its socket buffer.
pub fn run_proxy(
    socket: UdpSocket,
    dest: SocketAddr,
    sensor: &SensorModel,
    mut attacker: Option<Attacker>,
    idle: Duration,
    gap: Duration,
) -> Result<ProxyStats, NetError> {
    let (tx, rx) = mpsc::channel();
    let rsock = socket.try_clone()?;
    let handle = thread::spawn(move || reader(rsock, idle, tx));
    let mut fwd = Forwarder {
        socket: &socket,
        dest,
        sensor,
        gap,
        stats: ProxyStats::default(),
    };
    let mut asm = SweepAssembler::new(sensor.clone());
    for packet in rx {
        if packet.is_empty() {
            break;
        }
        fwd.stats.received += 1;
        let Some(att) = attacker.as_mut() else {
            fwd.raw(&packet)?;
            continue;
        };
        match decode(&packet) {
            Ok(d) => {
                if let Some(s) = asm.push(d) {
                    fwd.sweep(att, &s)?;
                }
            }
            Err(e) => {
                log::warn!("proxy: forwarding undecodable packet unchanged: {e}");
                fwd.stats.malformed += 1;
                fwd.raw(&packet)?;
            }
        }
    }
    if let Some(att) = attacker.as_mut() {
        if let Some(s) = asm.flush() {
            fwd.sweep(att, &s)?;
        }
    }
    socket.send_to(END_OF_STREAM, dest)?;
    let _ = handle.join();
    Ok(fwd.stats)
}
