//! Sender → proxy → receiver over loopback UDP.

use std::net::{SocketAddr, UdpSocket};
use std::thread;
use std::time::Duration;

use lidarsec_core::attack::{AttackConfig, AttackKind, Attacker};
use lidarsec_core::datagram::{decode, encode, quantize_sweep, Datagram, DATAGRAM_LEN};
use lidarsec_core::geometry::SensorModel;
use lidarsec_core::integrity::IntegrityConfig;
use lidarsec_core::scene::{builtin_scene_suite, render_frame, RenderConfig, Scene};
use lidarsec_core::sweep::Sweep;
use lidarsec_net::{
    run_proxy, run_receiver, run_sender, scene_datagrams, send_datagrams, write_receiver_outputs,
    Pacing, Received, END_OF_STREAM, MAX_PACKET,
};

const IDLE: Duration = Duration::from_secs(20);
const FWD_GAP: Duration = Duration::from_micros(20);
const GAP: Pacing = Pacing::Interval(Duration::from_micros(20));

fn bind() -> (UdpSocket, SocketAddr) {
    let s = UdpSocket::bind("127.0.0.1:0").unwrap();
    let a = s.local_addr().unwrap();
    (s, a)
}

fn capture(socket: UdpSocket) -> thread::JoinHandle<Vec<Vec<u8>>> {
    thread::spawn(move || {
        socket.set_read_timeout(Some(IDLE)).unwrap();
        let mut out = Vec::new();
        let mut buf = [0u8; MAX_PACKET];
        while let Ok((n, _)) = socket.recv_from(&mut buf) {
            if n == 0 {
                break;
            }
            out.push(buf[..n].to_vec());
        }
        out
    })
}

fn short_scene(frames: usize) -> Scene {
    let mut s = builtin_scene_suite().remove(0);
    s.frame_count = frames;
    s
}

fn tiny_sensor() -> SensorModel {
    let elev = (0..8)
        .map(|j| (-20.0 + 3.0 * j as f64).to_radians())
        .collect();
    SensorModel::new(elev, 10.0, 1.0 / 240.0, 100.0, 1.7).unwrap()
}

/// Full chain with the given attacker; returns what the receiver saw.
fn chain(scene: &Scene, attacker: Option<Attacker>) -> (Received, lidarsec_net::ProxyStats) {
    let (proxy_sock, proxy_addr) = bind();
    let (recv_sock, recv_addr) = bind();
    let (send_sock, _) = bind();
    let sensor = scene.sensor.clone();
    let integrity = IntegrityConfig::for_sensor(&sensor);
    let rx = {
        let sensor = sensor.clone();
        thread::spawn(move || run_receiver(&recv_sock, &sensor, integrity, IDLE).unwrap())
    };
    let px = {
        let sensor = sensor.clone();
        thread::spawn(move || {
            run_proxy(proxy_sock, recv_addr, &sensor, attacker, IDLE, FWD_GAP).unwrap()
        })
    };
    run_sender(&send_sock, proxy_addr, scene, &RenderConfig::default(), GAP).unwrap();
    let stats = px.join().unwrap();
    (rx.join().unwrap(), stats)
}

/// The offline pipeline on the wire view of each frame.
fn offline(scene: &Scene, kind: AttackKind, cfg: AttackConfig) -> Vec<Sweep> {
    let mut a = Attacker::new(kind, cfg, &scene.sensor);
    (0..scene.frame_count)
        .map(|k| {
            let clean = quantize_sweep(
                &render_frame(scene, k, &RenderConfig::default()).sweep,
                &scene.sensor,
            );
            quantize_sweep(&a.step(&clean).0, &scene.sensor)
        })
        .collect()
}

fn same_sweep(a: &Sweep, b: &Sweep) -> bool {
    a.start_time == b.start_time && a.points == b.points
}

#[test]
fn sender_packet_counts() {
    let mut scene = short_scene(10);
    scene.sensor = tiny_sensor();
    let (send_sock, _) = bind();
    for (frames, pacing, expect) in [
        (10, Pacing::RealTime, 20),
        (0, Pacing::RealTime, 0),
        (10, Pacing::MaxRate, 20),
    ] {
        scene.frame_count = frames;
        let (sink, addr) = bind();
        let cap = capture(sink);
        let n = run_sender(&send_sock, addr, &scene, &RenderConfig::default(), pacing).unwrap();
        let got = cap.join().unwrap();
        assert_eq!(n, expect);
        assert_eq!(got.len(), expect);
        let ts: Vec<u32> = got
            .iter()
            .map(|p| decode(p).unwrap().timestamp_us)
            .collect();
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn disabled_proxy_forwards_bytes_verbatim() {
    let scene = short_scene(3);
    let (proxy_sock, proxy_addr) = bind();
    let (sink, sink_addr) = bind();
    let (send_sock, _) = bind();
    let cap = capture(sink);
    let px = {
        let sensor = scene.sensor.clone();
        thread::spawn(move || {
            run_proxy(proxy_sock, sink_addr, &sensor, None, IDLE, FWD_GAP).unwrap()
        })
    };
    let mut sent: Vec<Vec<u8>> = scene_datagrams(&scene, &RenderConfig::default())
        .flatten()
        .map(|d| encode(&d))
        .collect();
    sent.insert(7, b"not a datagram".to_vec());
    for p in &sent {
        send_sock.send_to(p, proxy_addr).unwrap();
        thread::sleep(Duration::from_micros(20));
    }
    send_sock.send_to(END_OF_STREAM, proxy_addr).unwrap();
    let stats = px.join().unwrap();
    assert_eq!(cap.join().unwrap(), sent);
    assert_eq!(stats.forwarded, sent.len());
}

#[test]
fn malformed_packet_passes_attacking_proxy() {
    let scene = short_scene(2);
    let (proxy_sock, proxy_addr) = bind();
    let (sink, sink_addr) = bind();
    let (send_sock, _) = bind();
    let cap = capture(sink);
    let attacker = Attacker::new(AttackKind::X1, AttackConfig::default(), &scene.sensor);
    let px = {
        let sensor = scene.sensor.clone();
        thread::spawn(move || {
            run_proxy(
                proxy_sock,
                sink_addr,
                &sensor,
                Some(attacker),
                IDLE,
                FWD_GAP,
            )
            .unwrap()
        })
    };
    send_sock.send_to(b"\x01\x02\x03", proxy_addr).unwrap();
    send_datagrams(
        &send_sock,
        proxy_addr,
        scene_datagrams(&scene, &RenderConfig::default()),
        GAP,
    )
    .unwrap();
    let stats = px.join().unwrap();
    let got = cap.join().unwrap();
    assert_eq!(stats.malformed, 1);
    assert!(got.iter().any(|p| p.as_slice() == b"\x01\x02\x03"));
}

#[test]
fn clean_loopback_passes_integrity() {
    let scene = short_scene(5);
    let (r, _) = chain(&scene, None);
    assert_eq!(r.sweeps.len(), 5);
    assert!(r.all_pass());
    for (k, s) in r.sweeps.iter().enumerate() {
        let want = quantize_sweep(
            &render_frame(&scene, k, &RenderConfig::default()).sweep,
            &scene.sensor,
        );
        assert!(same_sweep(s, &want));
    }
    let dir = tempfile::tempdir().unwrap();
    write_receiver_outputs(dir.path(), &r).unwrap();
    let text = std::fs::read_to_string(dir.path().join("integrity.csv")).unwrap();
    assert_eq!(text.lines().count(), 6);
    let back = Sweep::read_from(std::fs::File::open(dir.path().join("sweep_00002.lswp")).unwrap())
        .unwrap();
    // sweep files store single precision
    assert_eq!(back.len(), r.sweeps[2].len());
    assert!(back
        .points
        .iter()
        .zip(&r.sweeps[2].points)
        .all(|(a, b)| (a.range - b.range).abs() < 1e-5));
}

#[test]
fn false_positive_online_equals_offline() {
    let scene = short_scene(30);
    let attacker = Attacker::new(AttackKind::X1, AttackConfig::default(), &scene.sensor);
    let (r, stats) = chain(&scene, Some(attacker));
    let clean_packets: usize = scene_datagrams(&scene, &RenderConfig::default())
        .map(|s| s.len())
        .sum();
    assert_eq!(stats.received, clean_packets);
    assert_eq!(stats.forwarded, clean_packets);
    assert_eq!(r.packets, clean_packets);
    assert!(r.all_pass());
    let want = offline(&scene, AttackKind::X1, AttackConfig::default());
    assert_eq!(r.sweeps.len(), want.len());
    for (k, (got, want)) in r.sweeps.iter().zip(&want).enumerate() {
        assert!(same_sweep(got, want), "frame {k} differs");
    }
    // the attack did change something
    let clean = quantize_sweep(
        &render_frame(&scene, 5, &RenderConfig::default()).sweep,
        &scene.sensor,
    );
    assert_ne!(r.sweeps[5].points, clean.points);
}

#[test]
fn reverse_replay_through_proxy_is_stealthy_and_matches_offline() {
    let scene = short_scene(24);
    let cfg = AttackConfig {
        replay_buffer: 8,
        smoothing_repeats: 3,
        ..Default::default()
    };
    let attacker = Attacker::new(AttackKind::X4, cfg.clone(), &scene.sensor);
    let (r, _) = chain(&scene, Some(attacker));
    assert!(r.all_pass());
    let want = offline(&scene, AttackKind::X4, cfg);
    for (k, (got, want)) in r.sweeps.iter().zip(&want).enumerate() {
        assert!(same_sweep(got, want), "frame {k} differs");
    }
    // trigger at frame 8, three held frames, so frame 11 shows clean frame 7
    // at frame 11's time
    let src = quantize_sweep(
        &render_frame(&scene, 7, &RenderConfig::default()).sweep,
        &scene.sensor,
    );
    let now = quantize_sweep(
        &render_frame(&scene, 11, &RenderConfig::default()).sweep,
        &scene.sensor,
    );
    assert_eq!(r.sweeps[11].start_time, now.start_time);
    assert!(r.sweeps[11]
        .points
        .iter()
        .zip(&src.points)
        .all(|(a, b)| a.range == b.range));
}

#[test]
fn appended_packets_fail_point_budget() {
    let scene = short_scene(2);
    let (recv_sock, recv_addr) = bind();
    let (send_sock, _) = bind();
    let rx = {
        let sensor = scene.sensor.clone();
        let cfg = IntegrityConfig::for_sensor(&sensor);
        thread::spawn(move || run_receiver(&recv_sock, &sensor, cfg, IDLE).unwrap())
    };
    let mut sweeps: Vec<Vec<Datagram>> =
        scene_datagrams(&scene, &RenderConfig::default()).collect();
    // extra packets at the end of the first rotation, full of returns
    let mut extra = sweeps[0].last().unwrap().clone();
    for b in &mut extra.blocks {
        b.azimuth_raw = 35_999;
        for c in &mut b.cells {
            c.range_raw = 5000;
        }
    }
    for _ in 0..60 {
        sweeps[0].push(extra.clone());
    }
    send_datagrams(&send_sock, recv_addr, sweeps, GAP).unwrap();
    let r = rx.join().unwrap();
    assert_eq!(r.verdicts.len(), 2);
    assert!(!r.verdicts[0].zeta_alpha);
    assert!(r.verdicts[1].zeta_alpha);
    assert_eq!(encode(&extra).len(), DATAGRAM_LEN);
}
