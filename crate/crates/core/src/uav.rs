//! Solar-powered UAV serving ground users from a variable altitude.
//!
//! State `s = b * n_z + z`: battery level `b` in `0..n_b` and altitude level
//! `z` in `0..n_z`, with altitude `z_min + z * level_size`. Action
//! `a = (vz * n_ptx + p) * n_theta + t` picks a climb rate, a transmit power
//! and an antenna beamwidth. The reward is the edge user's coverage
//! probability; the cost is the expected battery drop in Wh.
//!
//! Energy bookkeeping is in Joules with one battery level worth
//! `e_u = b_max_wh * 3600 / n_b`. Per slot the battery loses `E_UAV / e_u`
//! levels in expectation (the integer part surely, the fractional part as one
//! extra level with that probability) and gains a Poisson number of levels
//! with mean `E_solar / e_u`. Levels saturate at `0` and `n_b - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Cmdp, TransitionRow, TransitionsBuilder};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum UavInitial {
    /// Point mass on one battery level and altitude level.
    Point { battery: usize, altitude: usize },
    /// Uniform over all states.
    Uniform,
    /// Uniform over battery levels at one altitude level.
    UniformBattery { altitude: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UavConfig {
    pub n_z: usize,
    pub n_b: usize,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Harvesting efficiency.
    pub tau: f64,
    pub b_max_wh: f64,
    /// Required battery gain; the constraint bound is `-delta_b_wh`.
    pub delta_b_wh: f64,
    /// Slot length, s.
    pub dt: f64,
    /// Panel area, m^2.
    pub panel_area: f64,
    /// Carrier frequency, Hz.
    pub f0: f64,
    /// Solar intensity, W/m^2.
    pub solar_intensity: f64,
    /// Linear antenna gain outside the main lobe.
    pub off_lobe_gain: f64,
    /// Weight, N.
    pub weight: f64,
    /// Noise floor, dBm.
    pub noise_dbm: f64,
    /// Air density, kg/m^3.
    pub air_density: f64,
    /// Rotor disk area, m^2.
    pub rotor_area: f64,
    /// Static power, W.
    pub p_static: f64,
    /// Linear SNR threshold.
    pub snr_th: f64,
    /// Cell radius, m.
    pub r_c: f64,
    /// Cloud absorption, 1/m.
    pub cloud_absorption: f64,
    pub k1: f64,
    pub k2: f64,
    pub z_high: f64,
    pub z_low: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub g1: f64,
    pub g2: f64,
    /// LoS and NLoS shadowing means, dB.
    pub mu_los: f64,
    pub mu_nlos: f64,
    pub zeta: f64,
    pub eta: f64,
    pub gamma: f64,
    /// Climb rates, m/s.
    pub climb_rates: Vec<f64>,
    /// Transmit powers, dBm.
    pub tx_powers_dbm: Vec<f64>,
    /// Beamwidths, degrees.
    pub beamwidths_deg: Vec<f64>,
    pub initial: UavInitial,
}

impl Default for UavConfig {
    fn default() -> Self {
        Self {
            n_z: 121,
            n_b: 25,
            alpha: 2.5,
            tau: 0.4,
            b_max_wh: 100.0,
            delta_b_wh: 1.67,
            dt: 10.0,
            panel_area: 1.0,
            f0: 2e9,
            solar_intensity: 1367.0,
            off_lobe_gain: 0.0,
            weight: 39.2,
            noise_dbm: -100.0,
            air_density: 1.225,
            rotor_area: 0.18,
            p_static: 5.0,
            snr_th: 5.0,
            r_c: 250.0,
            cloud_absorption: 0.01,
            k1: 10.39,
            k2: 0.05,
            z_high: 1300.0,
            z_low: 700.0,
            z_min: 500.0,
            z_max: 1500.0,
            g1: 29.06,
            g2: 0.03,
            mu_los: 1.0,
            mu_nlos: 20.0,
            zeta: 0.6,
            eta: 0.11,
            gamma: 0.99,
            climb_rates: vec![-4.0, 0.0, 4.0],
            tx_powers_dbm: vec![34.0, 38.0],
            beamwidths_deg: vec![28.0, 56.0],
            initial: UavInitial::Point {
                battery: 0,
                altitude: 0,
            },
        }
    }
}

/// One element of the product action set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UavAction {
    pub climb_rate: f64,
    pub tx_power_dbm: f64,
    pub beamwidth_deg: f64,
}

impl UavConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_z < 2 || self.n_b < 2 {
            return bad("n_z and n_b must be at least 2");
        }
        if !(self.z_min < self.z_low && self.z_low < self.z_high && self.z_high < self.z_max) {
            return bad("altitudes must satisfy z_min < z_low < z_high < z_max");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must be in (0, 1)");
        }
        let positive = [
            self.alpha,
            self.tau,
            self.b_max_wh,
            self.dt,
            self.panel_area,
            self.f0,
            self.solar_intensity,
            self.weight,
            self.air_density,
            self.rotor_area,
            self.snr_th,
            self.r_c,
            self.k1,
            self.g1,
            self.zeta,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("physical parameters must be positive and finite");
        }
        if self.off_lobe_gain < 0.0 || self.p_static < 0.0 || self.cloud_absorption < 0.0 {
            return bad("off_lobe_gain, p_static and cloud_absorption must be non-negative");
        }
        if self.climb_rates.is_empty()
            || self.tx_powers_dbm.is_empty()
            || self.beamwidths_deg.is_empty()
        {
            return bad("action sets must be non-empty");
        }
        if self.beamwidths_deg.iter().any(|&t| !(t > 0.0 && t < 360.0)) {
            return bad("beamwidths must be in (0, 360) degrees");
        }
        match self.initial {
            UavInitial::Point { battery, altitude }
                if battery >= self.n_b || altitude >= self.n_z =>
            {
                bad("initial state out of range")
            }
            UavInitial::UniformBattery { altitude } if altitude >= self.n_z => {
                bad("initial altitude out of range")
            }
            _ => Ok(()),
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_b * self.n_z
    }

    pub fn n_actions(&self) -> usize {
        self.climb_rates.len() * self.tx_powers_dbm.len() * self.beamwidths_deg.len()
    }

    pub fn level_size(&self) -> f64 {
        (self.z_max - self.z_min) / (self.n_z - 1) as f64
    }

    pub fn altitude(&self, z_idx: usize) -> f64 {
        if z_idx + 1 == self.n_z {
            self.z_max
        } else {
            self.z_min + z_idx as f64 * self.level_size()
        }
    }

    /// Joules per battery level.
    pub fn energy_unit(&self) -> f64 {
        self.b_max_wh * 3600.0 / self.n_b as f64
    }

    /// Wh per battery level.
    pub fn level_wh(&self) -> f64 {
        self.b_max_wh / self.n_b as f64
    }

    pub fn state(&self, battery: usize, z_idx: usize) -> usize {
        battery * self.n_z + z_idx
    }

    /// `(battery, altitude level)`.
    pub fn decode_state(&self, s: usize) -> (usize, usize) {
        (s / self.n_z, s % self.n_z)
    }

    pub fn action(&self, a: usize) -> UavAction {
        let nt = self.beamwidths_deg.len();
        let np = self.tx_powers_dbm.len();
        UavAction {
            climb_rate: self.climb_rates[a / (np * nt)],
            tx_power_dbm: self.tx_powers_dbm[(a / nt) % np],
            beamwidth_deg: self.beamwidths_deg[a % nt],
        }
    }

    /// Altitude level after one slot at `climb_rate`, snapped to the nearest
    /// level and clamped to the altitude range.
    pub fn next_altitude(&self, z_idx: usize, climb_rate: f64) -> usize {
        let shift = (climb_rate * self.dt / self.level_size()).round() as isize;
        (z_idx as isize + shift).clamp(0, self.n_z as isize - 1) as usize
    }

    fn initial_dist(&self) -> Vec<f64> {
        let n = self.n_states();
        let mut beta = vec![0.0; n];
        match self.initial {
            UavInitial::Point { battery, altitude } => beta[self.state(battery, altitude)] = 1.0,
            UavInitial::Uniform => beta.iter_mut().for_each(|b| *b = 1.0 / n as f64),
            UavInitial::UniformBattery { altitude } => {
                for b in 0..self.n_b {
                    beta[self.state(b, altitude)] = 1.0 / self.n_b as f64;
                }
            }
        }
        beta
    }
}

/// `10 log10(29000 / theta^2)`, `theta` in degrees.
pub fn antenna_gain_db(theta_b: f64) -> f64 {
    10.0 * (29000.0 / (theta_b * theta_b)).log10()
}

/// Elevation angle of the edge user, degrees.
pub fn elevation_deg(z: f64, r_c: f64) -> f64 {
    (z / r_c).atan().to_degrees()
}

/// Line-of-sight probability `zeta * (psi - 15)^eta` with `psi` in degrees,
/// clamped to `[0, 1]`.
pub fn p_los(z: f64, r_c: f64, zeta: f64, eta: f64) -> f64 {
    let base = elevation_deg(z, r_c) - 15.0;
    if base <= 0.0 {
        return 0.0;
    }
    (zeta * base.powf(eta)).clamp(0.0, 1.0)
}

/// Standard normal upper tail.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Free-space path loss `10 alpha log10(4 pi f0 d / c)` to the edge user.
pub fn path_loss_db(z: f64, cfg: &UavConfig) -> f64 {
    let d = (cfg.r_c * cfg.r_c + z * z).sqrt();
    10.0 * cfg.alpha * (4.0 * std::f64::consts::PI * cfg.f0 * d / SPEED_OF_LIGHT).log10()
}

/// Whether the edge user lies inside the main lobe of a downward antenna.
pub fn edge_user_in_main_lobe(z: f64, theta_b: f64, r_c: f64) -> bool {
    (r_c / z).atan().to_degrees() <= theta_b / 2.0
}

/// Coverage probability of the edge user: LoS and NLoS branches, each the
/// probability that lognormal shadowing leaves the SNR above threshold.
/// Outside the main lobe the configured off-lobe gain applies; a gain of 0
/// gives no coverage.
pub fn coverage_probability(z: f64, theta_b: f64, p_tx_dbm: f64, cfg: &UavConfig) -> f64 {
    let gain_db = if edge_user_in_main_lobe(z, theta_b, cfg.r_c) {
        antenna_gain_db(theta_b)
    } else if cfg.off_lobe_gain > 0.0 {
        10.0 * cfg.off_lobe_gain.log10()
    } else {
        return 0.0;
    };
    coverage_with_gain(z, gain_db, p_tx_dbm, cfg)
}

/// Coverage with the main-lobe gain, whatever the geometry.
pub fn coverage_probability_main_lobe(z: f64, theta_b: f64, p_tx_dbm: f64, cfg: &UavConfig) -> f64 {
    coverage_with_gain(z, antenna_gain_db(theta_b), p_tx_dbm, cfg)
}

fn coverage_with_gain(z: f64, gain_db: f64, p_tx_dbm: f64, cfg: &UavConfig) -> f64 {
    let psi = elevation_deg(z, cfg.r_c);
    let los = p_los(z, cfg.r_c, cfg.zeta, cfg.eta);
    let sigma_los = cfg.k1 * (-cfg.k2 * psi).exp();
    let sigma_nlos = cfg.g1 * (-cfg.g2 * psi).exp();
    // Noise floor in mW so that P_min comes out in dBm.
    let noise_mw = 10f64.powf(cfg.noise_dbm / 10.0);
    let p_min = 10.0 * (noise_mw * cfg.snr_th).log10();
    let common = -p_tx_dbm - gain_db + path_loss_db(z, cfg) + p_min;
    let p = los * q_function((common + cfg.mu_los) / sigma_los)
        + (1.0 - los) * q_function((common + cfg.mu_nlos) / sigma_nlos);
    p.clamp(0.0, 1.0)
}

/// Harvested energy in one slot, Joules, from the mean altitude of the slot.
pub fn solar_energy(z_t: f64, z_next: f64, cfg: &UavConfig) -> f64 {
    let full = cfg.tau * cfg.panel_area * cfg.solar_intensity * cfg.dt;
    let z_bar = 0.5 * (z_t + z_next);
    let depth = if z_bar >= cfg.z_high {
        0.0
    } else if z_bar >= cfg.z_low {
        cfg.z_high - z_bar
    } else {
        cfg.z_high - cfg.z_low
    };
    full * (-cfg.cloud_absorption * depth).exp()
}

/// Hover-induced power `W^2 / (sqrt(2) rho A) / (sqrt(2) V_h)`, W.
pub fn induced_power(cfg: &UavConfig) -> f64 {
    let v_h = (cfg.weight / (2.0 * cfg.air_density * cfg.rotor_area)).sqrt();
    cfg.weight * cfg.weight
        / (2.0_f64.sqrt() * cfg.air_density * cfg.rotor_area)
        / (2.0_f64.sqrt() * v_h)
}

/// Energy used in one slot, Joules, floored at `p_static * dt`.
pub fn uav_energy(v_z: f64, p_tx_dbm: f64, cfg: &UavConfig) -> f64 {
    let p_tx_w = 10f64.powf((p_tx_dbm - 30.0) / 10.0);
    let e = (induced_power(cfg) + cfg.weight * v_z + cfg.p_static + p_tx_w) * cfg.dt;
    e.max(cfg.p_static * cfg.dt)
}

fn poisson_pmf(mean: f64, k_max: usize) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(k_max + 1);
    let mut p = (-mean).exp();
    for k in 0..=k_max {
        pmf.push(p);
        p *= mean / (k + 1) as f64;
    }
    pmf
}

/// Next-battery-level distribution for `departures` levels used (possibly
/// fractional) and Poisson arrivals with mean `arrival_mean`.
///
/// Returns a dense vector over `0..n_b`. Arrivals beyond the top level and
/// departures below the bottom are absorbed by the saturating level.
pub fn battery_transition_row(
    b_level: usize,
    departures: f64,
    arrival_mean: f64,
    n_b: usize,
) -> Vec<f64> {
    let top = n_b - 1;
    let d_lo = departures.floor();
    let frac = departures - d_lo;
    let mut row = vec![0.0; n_b];
    for (d, w) in [(d_lo as usize, 1.0 - frac), (d_lo as usize + 1, frac)] {
        if w <= 0.0 {
            continue;
        }
        let base = b_level.saturating_sub(d);
        // Arrivals needed to fill the battery from the post-departure level.
        let to_full = top - base;
        let pmf = poisson_pmf(arrival_mean, to_full);
        let mut below_top = 0.0;
        for (k, p) in pmf.iter().enumerate().take(to_full) {
            row[base + k] += w * p;
            below_top += p;
        }
        // The partial sum can overshoot 1 by an ulp when the tail is negligible.
        row[top] += w * (1.0 - below_top).max(0.0);
    }
    row
}

/// Built UAV problem with the configuration needed to read its states.
#[derive(Debug, Clone)]
pub struct UavModel {
    pub config: UavConfig,
    pub cmdp: Cmdp,
}

/// Builds the UAV CMDP.
pub fn build_uav_cmdp(cfg: &UavConfig) -> Result<UavModel> {
    cfg.validate()?;
    let n = cfg.n_states();
    let na = cfg.n_actions();
    let e_u = cfg.energy_unit();
    let level_wh = cfg.level_wh();

    let mut tb = TransitionsBuilder::new(n, na);
    let mut rewards = vec![0.0; n * na];
    let mut costs = vec![0.0; n * na];
    for z_idx in 0..cfg.n_z {
        let z = cfg.altitude(z_idx);
        for a in 0..na {
            let act = cfg.action(a);
            let z_next_idx = cfg.next_altitude(z_idx, act.climb_rate);
            let z_next = cfg.altitude(z_next_idx);
            let v_z = (z_next - z) / cfg.dt;
            let used = uav_energy(v_z, act.tx_power_dbm, cfg) / e_u;
            let harvested = solar_energy(z, z_next, cfg) / e_u;
            let reward = coverage_probability(z, act.beamwidth_deg, act.tx_power_dbm, cfg);
            for b in 0..cfg.n_b {
                let s = cfg.state(b, z_idx);
                let dist = battery_transition_row(b, used, harvested, cfg.n_b);
                let drop: f64 = dist
                    .iter()
                    .enumerate()
                    .map(|(b2, p)| p * (b as f64 - b2 as f64))
                    .sum();
                rewards[s * na + a] = reward;
                costs[s * na + a] = level_wh * drop;
                let row = dist
                    .into_iter()
                    .enumerate()
                    .filter(|&(_, p)| p > 0.0)
                    .map(|(b2, p)| (cfg.state(b2, z_next_idx), p))
                    .collect();
                tb.set_row(s, a, TransitionRow::Sparse(row))?;
            }
        }
    }
    let cmdp = Cmdp::new(
        tb.build(),
        rewards,
        costs,
        cfg.initial_dist(),
        cfg.gamma,
        -cfg.delta_b_wh,
    )?;
    Ok(UavModel {
        config: cfg.clone(),
        cmdp,
    })
}

impl UavModel {
    /// Same dynamics with another initial distribution.
    pub fn with_initial(&self, initial: UavInitial) -> Result<Self> {
        let config = UavConfig {
            initial,
            ..self.config.clone()
        };
        config.validate()?;
        let cmdp = self.cmdp.with_initial_dist(config.initial_dist())?;
        Ok(Self { config, cmdp })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gains() {
        assert!((antenna_gain_db(28.0) - 15.680819352145177).abs() < 1e-12);
        assert!((antenna_gain_db(56.0) - 9.660219438865553).abs() < 1e-12);
        assert!(antenna_gain_db(29000f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn los_probability() {
        assert!((p_los(1000.0, 250.0, 0.6, 0.11) - 0.9427).abs() < 1e-3);
        // 16 degrees elevation with eta = 0 leaves zeta.
        let z = 250.0 * 16f64.to_radians().tan();
        assert!((p_los(z, 250.0, 0.6, 0.0) - 0.6).abs() < 1e-12);
        let z = 250.0 * 14f64.to_radians().tan();
        assert_eq!(p_los(z, 250.0, 0.6, 0.11), 0.0);
    }

    #[test]
    fn solar_branches() {
        let c = UavConfig::default();
        assert!((solar_energy(1300.0, 1300.0, &c) - 5468.0).abs() < 1e-9);
        assert!((solar_energy(1290.0, 1310.0, &c) - 5468.0).abs() < 1e-9);
        assert!((solar_energy(600.0, 700.0, &c) - 5468.0 * (-6.0f64).exp()).abs() < 1e-9);
        assert!((solar_energy(1000.0, 1000.0, &c) - 5468.0 * (-3.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn consumption() {
        let c = UavConfig::default();
        let hover = uav_energy(0.0, 34.0, &c);
        assert!((induced_power(&c) - 369.58114430016883).abs() < 1e-9);
        assert!((hover - 3770.9303073167844).abs() < 1e-9, "{hover}");
        assert!((uav_energy(4.0, 34.0, &c) - hover - 1568.0).abs() < 1e-9);
        let dp = uav_energy(0.0, 38.0, &c) - hover;
        assert!((dp - (10f64.powf(0.8) - 10f64.powf(0.4)) * 10.0).abs() < 1e-9);
        assert_eq!(uav_energy(-100.0, 34.0, &c), c.p_static * c.dt);
    }

    #[test]
    fn coverage_golden_values() {
        // Independent evaluation with scipy's normal survival function.
        let c = UavConfig::default();
        let main = coverage_probability_main_lobe(1000.0, 28.0, 34.0, &c);
        assert!((main - 0.9660219004850903).abs() < 1e-12, "{main}");
        // 250 m at 1000 m altitude is 14.04 deg off boresight, outside the 14 deg half beam.
        assert_eq!(coverage_probability(1000.0, 28.0, 34.0, &c), 0.0);
        let p = coverage_probability(1000.0, 56.0, 34.0, &c);
        assert!((p - 0.943662104352499).abs() < 1e-12, "{p}");
        let p = coverage_probability(1500.0, 28.0, 38.0, &c);
        assert!((p - 0.9682278699332213).abs() < 1e-12, "{p}");
    }

    #[test]
    fn coverage_limits() {
        let c = UavConfig::default();
        assert!((coverage_probability(1000.0, 56.0, 400.0, &c) - 1.0).abs() < 1e-12);
        let mut flat = c.clone();
        flat.mu_nlos = flat.mu_los;
        flat.g1 = flat.k1;
        flat.g2 = flat.k2;
        let a = coverage_probability(1000.0, 56.0, 34.0, &flat);
        flat.zeta = 0.3;
        assert!((coverage_probability(1000.0, 56.0, 34.0, &flat) - a).abs() < 1e-12);
        // 28 degree beam misses the edge user at 500 m.
        assert!(!edge_user_in_main_lobe(500.0, 28.0, 250.0));
        assert_eq!(coverage_probability(500.0, 28.0, 34.0, &c), 0.0);
        for z in [500.0, 800.0, 1200.0, 1500.0] {
            let p = coverage_probability(z, 56.0, 34.0, &c);
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn battery_rows() {
        // No sun: deterministic drop.
        let r = battery_transition_row(5, 2.0, 0.0, 10);
        assert_eq!(r[3], 1.0);
        let r = battery_transition_row(1, 2.0, 0.0, 10);
        assert_eq!(r[0], 1.0);
        // One departure, unit arrival mean.
        let r = battery_transition_row(5, 1.0, 1.0, 10);
        assert!((r[4] - (-1.0f64).exp()).abs() < 1e-15);
        for (b, d, m) in [
            (0, 0.3, 0.4),
            (24, 0.26, 0.38),
            (12, 1.7, 2.5),
            (3, 0.0, 0.0),
        ] {
            let r = battery_transition_row(b, d, m, 25);
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn altitude_snapping() {
        let c = UavConfig::default();
        assert!((c.level_size() - 1000.0 / 120.0).abs() < 1e-12);
        assert_eq!(c.next_altitude(60, 4.0), 65);
        assert_eq!(c.next_altitude(60, -4.0), 55);
        assert_eq!(c.next_altitude(120, 4.0), 120);
        assert_eq!(c.next_altitude(2, -4.0), 0);
        assert_eq!(c.altitude(120), 1500.0);
    }

    #[test]
    fn action_decoding() {
        let c = UavConfig::default();
        assert_eq!(c.n_actions(), 12);
        let a = c.action(0);
        assert_eq!(
            (a.climb_rate, a.tx_power_dbm, a.beamwidth_deg),
            (-4.0, 34.0, 28.0)
        );
        let a = c.action(11);
        assert_eq!(
            (a.climb_rate, a.tx_power_dbm, a.beamwidth_deg),
            (4.0, 38.0, 56.0)
        );
        let a = c.action(5);
        assert_eq!(
            (a.climb_rate, a.tx_power_dbm, a.beamwidth_deg),
            (0.0, 34.0, 56.0)
        );
    }

    #[test]
    fn small_model_is_valid() {
        let c = UavConfig {
            n_z: 13,
            n_b: 6,
            ..UavConfig::default()
        };
        let m = build_uav_cmdp(&c).unwrap();
        assert_eq!(m.cmdp.n_states(), 78);
        assert!(m.cmdp.validate().ok);
        assert_eq!(m.cmdp.constraint_bound(), -1.67);
    }

    #[test]
    fn invalid_config() {
        let c = UavConfig {
            z_low: 1400.0,
            ..UavConfig::default()
        };
        assert!(build_uav_cmdp(&c).is_err());
        let c = UavConfig {
            initial: UavInitial::Point {
                battery: 25,
                altitude: 0,
            },
            ..UavConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
