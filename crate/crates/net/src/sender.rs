//! Render a scene and stream it as datagrams.

use std::net::{SocketAddr, UdpSocket};
use std::thread;
use std::time::{Duration, Instant};

use lidarsec_core::datagram::{encode, reverse_engineer_datagrams, Datagram};
use lidarsec_core::scene::{render_frame, RenderConfig, Scene};

use crate::{NetError, Pacing, END_OF_STREAM};

/// Datagrams of every frame of the scene, one inner list per sweep.
pub fn scene_datagrams<'a>(
    scene: &'a Scene,
    render: &RenderConfig,
) -> impl Iterator<Item = Vec<Datagram>> + 'a {
    let render = render.clone();
    (0..scene.frame_count).map(move |k| {
        let sweep = render_frame(scene, k, &render).sweep;
        reverse_engineer_datagrams(&sweep, &scene.sensor).datagrams
    })
}

/// Send datagrams in order and finish with the end marker. Returns the
/// number of datagrams sent (the marker is not counted).
pub fn send_datagrams<I>(
    socket: &UdpSocket,
    dest: SocketAddr,
    sweeps: I,
    pacing: Pacing,
) -> Result<usize, NetError>
where
    I: IntoIterator<Item = Vec<Datagram>>,
{
    let mut sent = 0;
    let mut clock: Option<(Instant, u32)> = None;
    for sweep in sweeps {
        for d in sweep {
            match pacing {
                Pacing::MaxRate => {}
                Pacing::Interval(gap) => {
                    if sent > 0 {
                        thread::sleep(gap);
                    }
                }
                Pacing::RealTime => {
                    let (t0, ts0) = *clock.get_or_insert((Instant::now(), d.timestamp_us));
                    let due = t0 + Duration::from_micros(d.timestamp_us.wrapping_sub(ts0) as u64);
                    let now = Instant::now();
                    if due > now {
                        thread::sleep(due - now);
                    }
                }
            }
            socket.send_to(&encode(&d), dest)?;
            sent += 1;
        }
    }
    socket.send_to(END_OF_STREAM, dest)?;
    Ok(sent)
}

pub fn run_sender(
    socket: &UdpSocket,
    dest: SocketAddr,
    scene: &Scene,
    render: &RenderConfig,
    pacing: Pacing,
) -> Result<usize, NetError> {
    let n = send_datagrams(socket, dest, scene_datagrams(scene, render), pacing)?;
    log::info!(
        "sent {n} datagrams for {} frames of {}",
        scene.frame_count,
        scene.name
    );
    Ok(n)
}
