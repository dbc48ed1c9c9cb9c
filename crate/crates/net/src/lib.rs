//! UDP transport roles: a sender streaming rendered sweeps as datagrams, a
//! man-in-the-middle proxy that attacks at sweep granularity, and a
//! receiver that reassembles sweeps and runs the integrity checks.
//!
//! UDP has no end-of-stream, so each role ends its stream with one empty
//! packet ([`END_OF_STREAM`]) and also stops after an idle timeout.

pub mod proxy;
pub mod receiver;
pub mod sender;

use std::net::SocketAddr;
use std::time::Duration;

use thiserror::Error;

pub use proxy::{run_proxy, ProxyStats};
pub use receiver::{run_receiver, write_receiver_outputs, Received};
pub use sender::{run_sender, scene_datagrams, send_datagrams};

/// Zero-length payload marking the end of a stream.
pub const END_OF_STREAM: &[u8] = &[];

/// Largest payload any role expects; anything longer is truncated by the
/// socket and then fails to decode.
pub const MAX_PACKET: usize = 2048;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("socket error: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing outputs: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid stream configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pacing {
    /// Send each datagram at its timestamp offset from the first one.
    RealTime,
    /// Send back to back.
    MaxRate,
    /// Fixed gap between datagrams.
    Interval(Duration),
}

/// Addresses of the three roles.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamConfig {
    pub sender: SocketAddr,
    pub proxy_listen: SocketAddr,
    pub receiver: SocketAddr,
    pub pacing: Pacing,
    pub idle_timeout: Duration,
}

impl StreamConfig {
    /// All three roles need their own port.
    pub fn validate(&self) -> Result<(), NetError> {
        let ports = [self.sender, self.proxy_listen, self.receiver];
        for i in 0..3 {
            for j in i + 1..3 {
                if ports[i] == ports[j] {
                    return Err(NetError::Config(format!("address {} used twice", ports[i])));
                }
            }
        }
        Ok(())
    }
}
