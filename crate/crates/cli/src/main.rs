//! `lidarsec` command-line front end.

use std::net::{SocketAddr, UdpSocket};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use lidarsec_core::attack::{AttackKind, Attacker};
use lidarsec_core::scene::{builtin_scene_suite, load_scene, save_scene, Scene};
use lidarsec_core::Config;
use lidarsec_harness::{emit_plots, read_summary, run_plan, ExperimentPlan};
use lidarsec_net::{run_proxy, run_receiver, run_sender, write_receiver_outputs, Pacing};

#[derive(Parser)]
#[command(
    name = "lidarsec",
    version,
    about = "LiDAR datagram attack simulation and AV fusion experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment plan and write its result tree and plots.
    Run {
        /// Plan file (TOML).
        plan: PathBuf,
        /// Output root; overrides the plan's `output`.
        #[arg(long, env = "LIDARSEC_OUT")]
        output: Option<PathBuf>,
        /// Skip the SVG charts.
        #[arg(long)]
        no_plots: bool,
    },
    /// Render grouped bar charts from a summary table.
    Plot {
        /// summary.csv written by `run`.
        summary: PathBuf,
        /// Directory for the SVG files [default: plots/ next to the summary].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the built-in scene suite as scene files.
    SceneGen {
        /// Target directory [default: $LIDARSEC_OUT/scenes or ./scenes].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default configuration.
    Config,
    /// Stream a scene as UDP datagrams.
    NetSend {
        /// Destination (proxy or receiver).
        #[arg(long)]
        to: SocketAddr,
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, default_value = "127.0.0.1:0")]
        bind: SocketAddr,
        /// `realtime`, `max` or a fixed gap in microseconds.
        #[arg(long, default_value = "realtime")]
        pacing: String,
        /// Configuration file for rendering.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Man-in-the-middle proxy, optionally attacking the stream.
    NetProxy {
        #[arg(long)]
        listen: SocketAddr,
        #[arg(long)]
        forward: SocketAddr,
        /// Attack to apply (x1, x3, x4, x6, x7); forwards verbatim when absent.
        #[arg(long)]
        attack: Option<AttackKind>,
        /// Scene whose sensor describes the stream.
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seconds without traffic before giving up.
        #[arg(long, default_value_t = 10.0)]
        idle: f64,
        /// Gap between re-sent datagrams of an attacked sweep, microseconds.
        #[arg(long, default_value_t = 20)]
        gap_us: u64,
    },
    /// Receive, assemble and integrity-check a datagram stream.
    NetRecv {
        #[arg(long)]
        listen: SocketAddr,
        /// Directory for sweeps and the integrity log.
        #[arg(long, env = "LIDARSEC_OUT")]
        out: Option<PathBuf>,
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10.0)]
        idle: f64,
    },
}

#[derive(clap::Args)]
struct SceneArg {
    /// `builtin:<name>` or a scene file [default: first built-in scene].
    #[arg(long)]
    scene: Option<String>,
}

impl SceneArg {
    fn resolve(&self) -> Result<Scene> {
        let suite = builtin_scene_suite();
        match self.scene.as_deref() {
            None => Ok(suite.into_iter().next().expect("suite is not empty")),
            Some(s) => match s.strip_prefix("builtin:") {
                Some(name) => suite
                    .into_iter()
                    .find(|sc| sc.name == name)
                    .with_context(|| format!("no built-in scene named {name:?}")),
                None => Ok(load_scene(Path::new(s))?),
            },
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    Ok(match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    })
}

fn parse_pacing(s: &str) -> Result<Pacing> {
    Ok(match s {
        "realtime" => Pacing::RealTime,
        "max" => Pacing::MaxRate,
        us => Pacing::Interval(Duration::from_micros(us.parse().with_context(|| {
            format!("pacing {us:?} is not realtime, max or microseconds")
        })?)),
    })
}

fn idle(secs: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(secs).with_context(|| format!("bad idle timeout {secs}"))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run {
            plan,
            output,
            no_plots,
        } => {
            let plan = ExperimentPlan::load(&plan, output)?;
            let out = run_plan(&plan)?;
            if !no_plots {
                emit_plots(&out.summary, &plan.output.join("plots"))?;
            }
            println!(
                "{:<6}{:<6}{:>9}{:>9}{:>9}{:>9}{:>9}",
                "av", "atk", "fp_inc", "fn_inc", "ft_inc", "mt_inc", "unsafe"
            );
            for r in &out.summary {
                println!(
                    "{:<6}{:<6}{:>9.3}{:>9.3}{:>9.3}{:>9.3}{:>9.2}",
                    r.av, r.attack, r.fp_inc, r.fn_inc, r.ft_inc, r.mt_inc, r.unsafe_fraction
                );
            }
            println!("results in {}", plan.output.display());
        }
        Command::Plot { summary, out } => {
            let rows = read_summary(&summary)?;
            let dir =
                out.unwrap_or_else(|| summary.parent().unwrap_or(Path::new(".")).join("plots"));
            for p in emit_plots(&rows, &dir)? {
                println!("{}", p.display());
            }
        }
        Command::SceneGen { out } => {
            let dir = out.unwrap_or_else(|| {
                std::env::var_os("LIDARSEC_OUT").map_or_else(
                    || PathBuf::from("scenes"),
                    |o| PathBuf::from(o).join("scenes"),
                )
            });
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            for s in builtin_scene_suite() {
                let p = dir.join(format!("{}.toml", s.name));
                save_scene(&s, &p)?;
                println!("{}", p.display());
            }
        }
        Command::Config => print!("{}", Config::default().to_toml()),
        Command::NetSend {
            to,
            scene,
            bind,
            pacing,
            config,
        } => {
            let scene = scene.resolve()?;
            let cfg = load_config(config.as_deref())?;
            let socket = UdpSocket::bind(bind)?;
            let n = run_sender(&socket, to, &scene, &cfg.render, parse_pacing(&pacing)?)?;
            log::info!("sent {n} datagrams of {} to {to}", scene.name);
        }
        Command::NetProxy {
            listen,
            forward,
            attack,
            scene,
            config,
            idle: idle_s,
            gap_us,
        } => {
            let scene = scene.resolve()?;
            let cfg = load_config(config.as_deref())?;
            let attacker = attack.map(|k| Attacker::new(k, cfg.attack.clone(), &scene.sensor));
            let socket = UdpSocket::bind(listen)?;
            let stats = run_proxy(
                socket,
                forward,
                &scene.sensor,
                attacker,
                idle(idle_s)?,
                Duration::from_micros(gap_us),
            )?;
            log::info!("proxy done: {stats:?}");
        }
        Command::NetRecv {
            listen,
            out,
            scene,
            config,
            idle: idle_s,
        } => {
            let scene = scene.resolve()?;
            let cfg = load_config(config.as_deref())?;
            let socket = UdpSocket::bind(listen)?;
            let r = run_receiver(
                &socket,
                &scene.sensor,
                cfg.integrity_for(&scene.sensor),
                idle(idle_s)?,
            )?;
            let failed = r.verdicts.iter().filter(|v| !v.zeta).count();
            println!(
                "{} sweeps from {} datagrams, {failed} failed integrity",
                r.sweeps.len(),
                r.packets
            );
            if let Some(dir) = out {
                write_receiver_outputs(&dir, &r)?;
            }
            if failed > 0 {
                bail!("{failed} sweeps failed the integrity check");
            }
        }
    }
    Ok(())
}
