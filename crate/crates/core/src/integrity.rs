//! Receiver-side integrity indicators.
//!
//! * ζ_α: point count does not exceed one return per angle per echo.
//! * ζ_β: point count reaches a minimum (most lasers return on a road).
//! * ζ_γ: arrival timestamps follow the expected schedule (χ² test on the
//!   residual of a recursive interval estimate).
//! * ζ_ρ: in dual mode, the second return never lies in front of the first.

use serde::{Deserialize, Serialize};

use crate::geometry::{ReturnMode, SensorModel};
use crate::sweep::Sweep;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrityConfig {
    pub alpha: usize,
    pub beta: usize,
    pub gamma: f64,
    /// Expected timing noise standard deviation, seconds.
    pub sigma_gamma: f64,
    /// Drop sweeps that fail ζ instead of flagging them.
    #[serde(default)]
    pub drop_failed: bool,
}

impl IntegrityConfig {
    /// Defaults derived from the sensor: α = n·m (·2 in dual mode),
    /// β = ½·n·m, γ = 9, σ_γ = 5 µs.
    pub fn for_sensor(sensor: &SensorModel) -> Self {
        let nm = sensor.azimuth_count * sensor.channel_count();
        Self {
            alpha: sensor.max_points(),
            beta: nm / 2,
            gamma: 9.0,
            sigma_gamma: 5e-6,
            drop_failed: false,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.alpha >= self.beta && self.gamma > 0.0 && self.sigma_gamma > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrityVerdict {
    pub zeta_alpha: bool,
    pub zeta_beta: bool,
    pub zeta_gamma: bool,
    pub zeta_rho: bool,
    pub zeta: bool,
}

impl IntegrityVerdict {
    pub fn new(zeta_alpha: bool, zeta_beta: bool, zeta_gamma: bool, zeta_rho: bool) -> Self {
        Self {
            zeta_alpha,
            zeta_beta,
            zeta_gamma,
            zeta_rho,
            zeta: zeta_alpha && zeta_beta && zeta_gamma && zeta_rho,
        }
    }
}

/// Scalar Kalman estimate of the interval between successive timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingEstimator {
    pub interval_estimate: f64,
    pub interval_variance: f64,
    pub last_timestamp: Option<f64>,
    pub residual: f64,
    /// Process noise on the interval, s².
    pub process_noise: f64,
    samples: usize,
}

impl TimingEstimator {
    /// `nominal` is the expected interval; process noise is (1% of it)².
    pub fn new(nominal: f64) -> Self {
        Self {
            interval_estimate: nominal,
            interval_variance: 0.0,
            last_timestamp: None,
            residual: 0.0,
            process_noise: (0.01 * nominal).powi(2),
            samples: 0,
        }
    }

    pub fn is_initialized(&self) -> bool {
        self.samples >= 2
    }

    /// Test a new timestamp and fold it into the estimate. Returns ζ_γ. Until
    /// two timestamps have been seen there is nothing to test against and the
    /// check passes.
    pub fn check(&mut self, ts: f64, cfg: &IntegrityConfig) -> bool {
        let r = cfg.sigma_gamma * cfg.sigma_gamma;
        let Some(last) = self.last_timestamp else {
            self.last_timestamp = Some(ts);
            self.samples = 1;
            return true;
        };
        let dt = ts - last;
        self.last_timestamp = Some(ts);
        if self.samples == 1 {
            self.interval_estimate = dt;
            self.interval_variance = r;
            self.samples = 2;
            self.residual = 0.0;
            return true;
        }
        self.samples += 1;
        self.interval_variance += self.process_noise;
        let y = dt - self.interval_estimate;
        self.residual = y;
        let ok = (y / cfg.sigma_gamma).powi(2) <= cfg.gamma;
        let k = self.interval_variance / (self.interval_variance + r);
        self.interval_estimate += k * y;
        self.interval_variance *= 1.0 - k;
        ok
    }
}

pub fn check_max_points(sweep: &Sweep, cfg: &IntegrityConfig) -> bool {
    sweep.len() <= cfg.alpha
}

pub fn check_min_points(sweep: &Sweep, cfg: &IntegrityConfig) -> bool {
    sweep.len() >= cfg.beta
}

pub fn check_timestamp(timing: &mut TimingEstimator, ts: f64, cfg: &IntegrityConfig) -> bool {
    timing.check(ts, cfg)
}

/// ζ_ρ. Returns at the same angle appear first-return-first in the matrix.
pub fn check_dual(sweep: &Sweep, mode: ReturnMode) -> bool {
    if mode == ReturnMode::Single {
        return true;
    }
    sweep.points.windows(2).all(|w| {
        let same = w[0].azimuth == w[1].azimuth && w[0].elevation == w[1].elevation;
        !same || w[1].range >= w[0].range
    })
}

pub fn check_all(
    sweep: &Sweep,
    timing: &mut TimingEstimator,
    ts: f64,
    cfg: &IntegrityConfig,
    mode: ReturnMode,
) -> IntegrityVerdict {
    IntegrityVerdict::new(
        check_max_points(sweep, cfg),
        check_min_points(sweep, cfg),
        check_timestamp(timing, ts, cfg),
        check_dual(sweep, mode),
    )
}

/// Per-stream monitor for the offline pipeline: one sweep per call, timed by
/// the sweep start.
#[derive(Debug, Clone)]
pub struct IntegrityMonitor {
    pub cfg: IntegrityConfig,
    pub mode: ReturnMode,
    pub timing: TimingEstimator,
}

impl IntegrityMonitor {
    pub fn new(cfg: IntegrityConfig, sensor: &SensorModel) -> Self {
        Self {
            cfg,
            mode: sensor.mode,
            timing: TimingEstimator::new(sensor.sweep_period()),
        }
    }

    pub fn check(&mut self, sweep: &Sweep) -> IntegrityVerdict {
        check_all(
            sweep,
            &mut self.timing,
            sweep.start_time,
            &self.cfg,
            self.mode,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SphericalPoint;

    fn sweep_of(n: usize) -> Sweep {
        Sweep {
            points: vec![SphericalPoint::new(1.0, 0.0, 0.0); n],
            ..Sweep::default()
        }
    }

    fn cfg(alpha: usize, beta: usize) -> IntegrityConfig {
        IntegrityConfig {
            alpha,
            beta,
            gamma: 9.0,
            sigma_gamma: 1e-3,
            drop_failed: false,
        }
    }

    #[test]
    fn max_points_boundary() {
        let c = cfg(100 * 32, 0);
        assert!(check_max_points(&sweep_of(3200), &c));
        assert!(!check_max_points(&sweep_of(3201), &c));
        let mut s = SensorModel::desk_default();
        s.azimuth_count = 100;
        s.firing_interval = 1e-3;
        s.mode = ReturnMode::Dual;
        let dual = IntegrityConfig::for_sensor(&s);
        assert_eq!(dual.alpha, 6400);
        assert!(check_max_points(&sweep_of(6400), &dual));
    }

    #[test]
    fn min_points() {
        assert!(check_min_points(&sweep_of(0), &cfg(10, 0)));
        assert!(!check_min_points(&sweep_of(999), &cfg(5000, 1000)));
    }

    #[test]
    fn timestamp_residuals() {
        let c = cfg(1, 0);
        let mut t = TimingEstimator::new(0.1);
        for k in 0..50 {
            assert!(t.check(k as f64 * 0.1, &c));
        }
        assert!(t.interval_variance > 0.0);
        let last = t.last_timestamp.unwrap();
        let est = t.interval_estimate;
        let mut a = t.clone();
        assert!(a.check(last + est + 2.0 * c.sigma_gamma, &c));
        assert!((a.residual - 2.0 * c.sigma_gamma).abs() < 1e-12);
        let mut b = t.clone();
        assert!(!b.check(last + est + 4.0 * c.sigma_gamma, &c));
    }

    #[test]
    fn warm_up_passes() {
        let c = cfg(1, 0);
        let mut t = TimingEstimator::new(0.1);
        assert!(t.check(0.0, &c));
        assert!(t.check(5.0, &c));
        assert!(t.is_initialized());
        assert!(!t.check(5.1, &c));
    }

    #[test]
    fn dual_ordering() {
        let s = sweep_of(3);
        assert!(check_dual(&s, ReturnMode::Single));
        let pair = |a: f64, b: f64| Sweep {
            points: vec![
                SphericalPoint::new(a, 0.1, -0.1),
                SphericalPoint::new(b, 0.1, -0.1),
            ],
            ..Sweep::default()
        };
        assert!(check_dual(&pair(5.0, 7.0), ReturnMode::Dual));
        assert!(!check_dual(&pair(7.0, 5.0), ReturnMode::Dual));
    }

    #[test]
    fn conjunction() {
        let v = IntegrityVerdict::new(true, true, true, true);
        assert!(v.zeta);
        for k in 0..4 {
            let f: Vec<bool> = (0..4).map(|i| i != k).collect();
            assert!(!IntegrityVerdict::new(f[0], f[1], f[2], f[3]).zeta);
        }
    }
}
