//! Underwater acoustic propagation and link-quality mathematics.
//!
//! Covers Thorp absorption, distance/frequency dependent attenuation, the
//! four-component ambient noise spectrum, a Monte Carlo fit of the
//! log-normal in-band channel gain, and the bit/packet error models built
//! on top of a log-normal SINR.
//!
//! Frequencies are in kHz, distances in metres, powers in µPa² (linear) or
//! dB re µPa² where a function says so. Everything internal is linear.

mod ber;
mod multipath;

pub use ber::{
    ber_lognormal, packet_loss, packet_loss_segments, q_function, GaussHermite, DEFAULT_GH_ORDER,
};
pub use multipath::{
    fit_link_gain, sample_log_gains, MultipathGeometry, PathSpec, GAIN_GRID_POINTS, MIN_GAIN_SAMPLES,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of the propagation medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcousticEnvironment {
    /// Geometric spreading exponent (1 cylindrical, 2 spherical).
    pub spreading_factor: f64,
    /// Linear normalizing constant of the attenuation law.
    pub normalizing_constant: f64,
    /// Shipping activity in [0, 1].
    pub shipping_activity: f64,
    /// Wind speed in m/s.
    pub wind_speed: f64,
    /// Sound speed in m/s.
    pub sound_speed: f64,
}

impl Default for AcousticEnvironment {
    fn default() -> Self {
        Self {
            spreading_factor: 1.5,
            normalizing_constant: 1.0,
            shipping_activity: 0.5,
            wind_speed: 0.0,
            sound_speed: 1500.0,
        }
    }
}

impl AcousticEnvironment {
    pub fn validate(&self) -> Result<()> {
        let k = self.spreading_factor;
        if !(1.0..=2.0).contains(&k) {
            return Err(Error::Config(format!("spreading factor {k} outside [1, 2]")));
        }
        if !(self.normalizing_constant > 0.0) || !self.normalizing_constant.is_finite() {
            return Err(Error::Config("normalizing constant must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.shipping_activity) {
            return Err(Error::Config("shipping activity outside [0, 1]".into()));
        }
        if !(self.wind_speed >= 0.0) {
            return Err(Error::Config("wind speed must be non-negative".into()));
        }
        if !(self.sound_speed > 0.0) {
            return Err(Error::Config("sound speed must be positive".into()));
        }
        Ok(())
    }
}

/// A contiguous frequency band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub center_khz: f64,
    pub bandwidth_khz: f64,
}

impl Band {
    pub fn new(center_khz: f64, bandwidth_khz: f64) -> Result<Self> {
        let band = Self {
            center_khz,
            bandwidth_khz,
        };
        if !(bandwidth_khz > 0.0) || !(band.low_khz() > 0.0) {
            return Err(Error::Config(format!(
                "band {center_khz} kHz / {bandwidth_khz} kHz must have positive width and lower edge"
            )));
        }
        Ok(band)
    }

    pub fn low_khz(&self) -> f64 {
        self.center_khz - self.bandwidth_khz / 2.0
    }

    pub fn high_khz(&self) -> f64 {
        self.center_khz + self.bandwidth_khz / 2.0
    }

    /// Evenly spaced grid of `points` frequencies spanning the band edges.
    pub fn grid(&self, points: usize) -> Vec<f64> {
        let n = points.max(2);
        let step = self.bandwidth_khz / (n - 1) as f64;
        (0..n).map(|i| self.low_khz() + step * i as f64).collect()
    }
}

/// Fitted log-normal in-band channel gain, `ln G ~ N(mu, sigma²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGainModel {
    pub mu_ln: f64,
    pub sigma_ln: f64,
    pub band: Band,
}

impl LinkGainModel {
    /// `E[G] = exp(mu + sigma²/2)`.
    pub fn mean_gain(&self) -> f64 {
        (self.mu_ln + 0.5 * self.sigma_ln * self.sigma_ln).exp()
    }
}

/// Thorp absorption coefficient in dB/km for `f` in kHz.
pub fn absorption_db_per_km(f_khz: f64) -> Result<f64> {
    if !(f_khz > 0.0) || !f_khz.is_finite() {
        return Err(Error::Domain(format!("absorption needs f > 0, got {f_khz}")));
    }
    let f2 = f_khz * f_khz;
    Ok(0.11 * f2 / (1.0 + f2) + 44.0 * f2 / (4100.0 + f2) + 2.75e-4 * f2 + 0.003)
}

/// Attenuation `10 log10 A(d, f)` in dB, including `10 log10 A0`.
pub fn attenuation_db(d_m: f64, f_khz: f64, env: &AcousticEnvironment) -> Result<f64> {
    if !(d_m > 0.0) || !d_m.is_finite() {
        return Err(Error::Domain(format!("attenuation needs d > 0, got {d_m}")));
    }
    let absorption = absorption_db_per_km(f_khz)?;
    Ok(10.0 * env.normalizing_constant.log10()
        + env.spreading_factor * 10.0 * d_m.log10()
        + d_m / 1e3 * absorption)
}

/// Linear attenuation factor `A(d, f)`.
pub fn attenuation_linear(d_m: f64, f_khz: f64, env: &AcousticEnvironment) -> Result<f64> {
    Ok(db_to_linear(attenuation_db(d_m, f_khz, env)?))
}

/// Band-averaged deterministic power gain `(1/B) ∫ 1/A(d, f) df`.
pub fn band_path_gain(d_m: f64, band: &Band, env: &AcousticEnvironment) -> Result<f64> {
    let grid = band.grid(GAIN_GRID_POINTS);
    let values = grid
        .iter()
        .map(|&f| attenuation_linear(d_m, f, env).map(|a| 1.0 / a))
        .collect::<Result<Vec<_>>>()?;
    Ok(trapezoid(&grid, &values) / band.bandwidth_khz)
}

/// Ambient noise power spectral density at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePsd {
    pub turbulence_db: f64,
    pub shipping_db: f64,
    pub wind_db: f64,
    pub thermal_db: f64,
    /// Sum of the four components, µPa²/Hz.
    pub total_linear: f64,
}

impl NoisePsd {
    pub fn total_db(&self) -> f64 {
        linear_to_db(self.total_linear)
    }
}

/// Turbulence, shipping, wind and thermal noise PSDs (dB re µPa²/Hz).
pub fn noise_psd(f_khz: f64, env: &AcousticEnvironment) -> Result<NoisePsd> {
    if !(f_khz > 0.0) || !f_khz.is_finite() {
        return Err(Error::Domain(format!("noise PSD needs f > 0, got {f_khz}")));
    }
    let lf = f_khz.log10();
    let turbulence_db = 17.0 - 30.0 * lf;
    let shipping_db = 40.0 + 20.0 * (env.shipping_activity - 0.5) + 26.0 * lf
        - 60.0 * (f_khz + 0.03).log10();
    let wind_db = 50.0 + 7.5 * env.wind_speed.sqrt() + 20.0 * lf - 40.0 * (f_khz + 0.4).log10();
    let thermal_db = -15.0 + 20.0 * lf;
    let total_linear = [turbulence_db, shipping_db, wind_db, thermal_db]
        .iter()
        .map(|&db| db_to_linear(db))
        .sum();
    Ok(NoisePsd {
        turbulence_db,
        shipping_db,
        wind_db,
        thermal_db,
        total_linear,
    })
}

/// Total noise power in µPa² over a band (trapezoid rule, df in Hz).
pub fn in_band_noise_power(band: &Band, env: &AcousticEnvironment, points: usize) -> Result<f64> {
    let grid = band.grid(points);
    let psd = grid
        .iter()
        .map(|&f| noise_psd(f, env).map(|n| n.total_linear))
        .collect::<Result<Vec<_>>>()?;
    Ok(trapezoid(&grid, &psd) * 1e3)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn absorption_reference_points() {
        assert_relative_eq!(absorption_db_per_km(1e-9).unwrap(), 0.003, epsilon = 1e-12);
        assert_relative_eq!(absorption_db_per_km(1.0).unwrap(), 0.069004, epsilon = 1e-6);
        assert_relative_eq!(absorption_db_per_km(10.0).unwrap(), 1.18703, epsilon = 1e-5);
        assert!(absorption_db_per_km(0.0).is_err());
        assert!(absorption_db_per_km(-3.0).is_err());
    }

    #[test]
    fn absorption_is_increasing() {
        let mut prev = absorption_db_per_km(0.01).unwrap();
        for i in 1..2000 {
            let a = absorption_db_per_km(0.01 + 0.05 * i as f64).unwrap();
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn attenuation_reference_points() {
        let env = AcousticEnvironment::default();
        let a_unit = attenuation_db(1.0, 20.0, &env).unwrap();
        assert_relative_eq!(a_unit, absorption_db_per_km(20.0).unwrap() / 1e3, epsilon = 1e-12);
        let a = attenuation_db(2500.0, 32.0, &env).unwrap();
        assert_relative_eq!(a, 73.94, epsilon = 0.01);
        assert!(attenuation_db(2500.0, 33.4, &env).unwrap() > attenuation_db(2500.0, 30.6, &env).unwrap());
        assert!(attenuation_db(0.0, 30.0, &env).is_err());
    }

    #[test]
    fn attenuation_increases_in_distance_and_frequency() {
        let env = AcousticEnvironment::default();
        for di in 1..40 {
            for fi in 1..40 {
                let d = 100.0 * di as f64;
                let f = 1.0 * fi as f64;
                let base = attenuation_db(d, f, &env).unwrap();
                assert!(attenuation_db(d + 100.0, f, &env).unwrap() > base);
                assert!(attenuation_db(d, f + 1.0, &env).unwrap() > base);
            }
        }
    }

    #[test]
    fn noise_components_at_ten_khz() {
        let env = AcousticEnvironment::default();
        let n = noise_psd(10.0, &env).unwrap();
        assert_relative_eq!(n.turbulence_db, -13.0, epsilon = 1e-12);
        assert_relative_eq!(n.shipping_db, 5.92, epsilon = 5e-3);
        assert_relative_eq!(n.wind_db, 29.32, epsilon = 5e-3);
        assert_relative_eq!(n.thermal_db, 5.0, epsilon = 1e-12);
        let windy = noise_psd(10.0, &AcousticEnvironment { wind_speed: 5.0, ..env }).unwrap();
        assert!(windy.wind_db > n.wind_db);
        assert_eq!(windy.turbulence_db, n.turbulence_db);
        assert_eq!(windy.shipping_db, n.shipping_db);
        assert_eq!(windy.thermal_db, n.thermal_db);
        assert!(noise_psd(0.0, &env).is_err());
    }

    #[test]
    fn in_band_noise_converges() {
        let env = AcousticEnvironment::default();
        let band = Band::new(32.0, 4.0).unwrap();
        let coarse = in_band_noise_power(&band, &env, 201).unwrap();
        let fine = in_band_noise_power(&band, &env, 2001).unwrap();
        assert_relative_eq!(coarse, fine, max_relative = 1e-4);
    }

    #[test]
    fn environment_validation() {
        assert!(AcousticEnvironment::default().validate().is_ok());
        let bad = AcousticEnvironment { spreading_factor: 2.5, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(Band::new(1.0, 4.0).is_err());
    }
}
