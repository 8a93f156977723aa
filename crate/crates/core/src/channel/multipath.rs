//! Monte Carlo fit of the log-normal in-band channel gain from a
//! multipath geometry with random path-length deviations and micro-path
//! scattering.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::{absorption_db_per_km, attenuation_linear, AcousticEnvironment, Band, LinkGainModel};
use crate::error::{Error, Result};

/// Number of in-band frequencies at which `|H(f)|²` is evaluated.
pub const GAIN_GRID_POINTS: usize = 41;

/// Minimum number of realizations accepted by [`fit_link_gain`].
pub const MIN_GAIN_SAMPLES: usize = 10_000;

/// Propagation paths between one transmitter and one receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipathGeometry {
    /// Nominal path lengths in metres, ascending.
    pub nominal_path_lengths: Vec<f64>,
    /// Cumulative reflection coefficient per path; the direct path has 1.
    pub reflection_coeffs: Vec<f64>,
    /// Standard deviation of the random path-length deviation, metres.
    pub length_deviation_std: f64,
    /// Number of scattered micro-paths around each nominal path.
    pub micropath_count: usize,
    /// Width of the micro-path delay spread, seconds.
    pub micropath_delay_spread: f64,
    /// Linear per-metre absorption at the reference frequency.
    pub reference_absorption: f64,
}

/// Shallow-water settings used to derive a surface/bottom geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathSpec {
    pub water_depth: f64,
    pub surface_reflection: f64,
    pub bottom_reflection: f64,
    pub length_deviation_std: f64,
    pub micropath_count: usize,
    pub micropath_delay_spread: f64,
    pub sample_count: usize,
}

impl Default for PathSpec {
    fn default() -> Self {
        Self {
            water_depth: 100.0,
            surface_reflection: -0.9,
            bottom_reflection: 0.5,
            length_deviation_std: 10.0,
            micropath_count: 10,
            micropath_delay_spread: 1e-3,
            sample_count: MIN_GAIN_SAMPLES,
        }
    }
}

impl PathSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.water_depth > 0.0) {
            return Err(Error::Config("water depth must be positive".into()));
        }
        if self.surface_reflection.abs() > 1.0 || self.bottom_reflection.abs() > 1.0 {
            return Err(Error::Config("reflection coefficients must lie in [-1, 1]".into()));
        }
        if !(self.length_deviation_std >= 0.0) || !(self.micropath_delay_spread >= 0.0) {
            return Err(Error::Config("multipath spreads must be non-negative".into()));
        }
        if self.micropath_count == 0 {
            return Err(Error::Config("micropath count must be at least 1".into()));
        }
        if self.sample_count < MIN_GAIN_SAMPLES {
            return Err(Error::Config(format!(
                "gain fit needs at least {MIN_GAIN_SAMPLES} samples"
            )));
        }
        Ok(())
    }
}

impl MultipathGeometry {
    /// Direct, surface-reflected and bottom-reflected paths between two
    /// points at the given depths (positive downwards) and horizontal
    /// range.
    pub fn surface_bottom(
        range: f64,
        tx_depth: f64,
        rx_depth: f64,
        spec: &PathSpec,
        reference_khz: f64,
    ) -> Result<Self> {
        spec.validate()?;
        if !(range > 0.0) {
            return Err(Error::Domain(format!("range must be positive, got {range}")));
        }
        let depth = spec.water_depth;
        let direct = range.hypot(tx_depth - rx_depth);
        let surface = range.hypot(tx_depth + rx_depth);
        let bottom = range.hypot(2.0 * depth - tx_depth - rx_depth);
        let absorption = absorption_db_per_km(reference_khz)?;
        let geometry = Self {
            nominal_path_lengths: vec![direct, surface, bottom],
            reflection_coeffs: vec![1.0, spec.surface_reflection, spec.bottom_reflection],
            length_deviation_std: spec.length_deviation_std,
            micropath_count: spec.micropath_count,
            micropath_delay_spread: spec.micropath_delay_spread,
            reference_absorption: 10f64.powf(absorption / 1e4),
        };
        geometry.validate()?;
        Ok(geometry)
    }

    /// A single deterministic path of the given length.
    pub fn single_path(length: f64, reference_khz: f64) -> Result<Self> {
        let absorption = absorption_db_per_km(reference_khz)?;
        let geometry = Self {
            nominal_path_lengths: vec![length],
            reflection_coeffs: vec![1.0],
            length_deviation_std: 0.0,
            micropath_count: 1,
            micropath_delay_spread: 0.0,
            reference_absorption: 10f64.powf(absorption / 1e4),
        };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = &self.nominal_path_lengths;
        if lengths.is_empty() {
            return Err(Error::Config("multipath geometry has no paths".into()));
        }
        if lengths.len() != self.reflection_coeffs.len() {
            return Err(Error::Config("one reflection coefficient per path is required".into()));
        }
        if lengths.iter().any(|&d| !(d > 0.0)) || lengths.iter().any(|&d| d < lengths[0]) {
            return Err(Error::Config("path lengths must be positive with the direct path shortest".into()));
        }
        if self.reflection_coeffs[0] != 1.0 {
            return Err(Error::Config("direct path reflection coefficient must be 1".into()));
        }
        if self.micropath_count == 0 {
            return Err(Error::Config("micropath count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Draws `sample_count` realizations of `ln G` for the geometry.
pub fn sample_log_gains<R: Rng + ?Sized>(
    geometry: &MultipathGeometry,
    band: &Band,
    env: &AcousticEnvironment,
    sample_count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    geometry.validate()?;
    if sample_count < MIN_GAIN_SAMPLES {
        return Err(Error::Config(format!(
            "gain fit needs at least {MIN_GAIN_SAMPLES} samples, got {sample_count}"
        )));
    }
    let grid = band.grid(GAIN_GRID_POINTS);
    let paths = geometry.nominal_path_lengths.len();
    // Deterministic amplitude per path and frequency.
    let mut amplitude = vec![0.0; paths * grid.len()];
    for (l, &d) in geometry.nominal_path_lengths.iter().enumerate() {
        for (k, &f) in grid.iter().enumerate() {
            amplitude[l * grid.len() + k] =
                geometry.reflection_coeffs[l] / attenuation_linear(d, f, env)?.sqrt();
        }
    }
    let xi: Vec<f64> = geometry
        .nominal_path_lengths
        .iter()
        .map(|&d| geometry.reference_absorption - 1.0 + env.spreading_factor / d)
        .collect();
    let deviation = (geometry.length_deviation_std > 0.0)
        .then(|| Normal::new(0.0, geometry.length_deviation_std))
        .transpose()
        .map_err(|e| Error::Config(format!("length deviation: {e}")))?;
    let half_spread = geometry.micropath_delay_spread / 2.0;
    let scatter = (half_spread > 0.0 && geometry.micropath_count > 1)
        .then(|| Uniform::new(-half_spread, half_spread))
        .transpose()
        .map_err(|e| Error::Config(format!("micropath spread: {e}")))?;
    let norm = 1.0 / (geometry.micropath_count as f64).sqrt();
    let two_pi = 2.0 * std::f64::consts::PI;

    let mut delays = vec![0.0; geometry.micropath_count];
    let mut h = vec![(0.0f64, 0.0f64); grid.len()];
    let mut power = vec![0.0; grid.len()];
    let mut log_gains = Vec::with_capacity(sample_count);
    for _ in 0..sample_count {
        h.iter_mut().for_each(|v| *v = (0.0, 0.0));
        for l in 0..paths {
            let dd = deviation.as_ref().map_or(0.0, |n| n.sample(rng));
            let scale = (-xi[l] * dd / 2.0).exp() * norm;
            let tau = (geometry.nominal_path_lengths[l] + dd) / env.sound_speed;
            for delay in delays.iter_mut() {
                *delay = tau + scatter.as_ref().map_or(0.0, |u| u.sample(rng));
            }
            for (k, &f) in grid.iter().enumerate() {
                let amp = amplitude[l * grid.len() + k] * scale;
                let (mut re, mut im) = (0.0, 0.0);
                for &delay in &delays {
                    let (s, c) = (two_pi * f * 1e3 * delay).sin_cos();
                    re += c;
                    im -= s;
                }
                h[k].0 += amp * re;
                h[k].1 += amp * im;
            }
        }
        for (p, &(re, im)) in power.iter_mut().zip(&h) {
            *p = re * re + im * im;
        }
        let gain = super::trapezoid(&grid, &power) / band.bandwidth_khz;
        if !(gain > 0.0) || !gain.is_finite() {
            return Err(Error::Numerical(format!("channel gain realization {gain} is not positive")));
        }
        log_gains.push(gain.ln());
    }
    Ok(log_gains)
}

/// Draws `sample_count` realizations of the in-band transfer function,
/// averages `|H(f)|²` over the band and fits `ln G` by its sample mean and
/// standard deviation.
pub fn fit_link_gain<R: Rng + ?Sized>(
    geometry: &MultipathGeometry,
    band: &Band,
    env: &AcousticEnvironment,
    sample_count: usize,
    rng: &mut R,
) -> Result<LinkGainModel> {
    let log_gains = sample_log_gains(geometry, band, env, sample_count, rng)?;
    let n = log_gains.len() as f64;
    let mu = log_gains.iter().sum::<f64>() / n;
    let var = log_gains.iter().map(|g| (g - mu).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(LinkGainModel {
        mu_ln: mu,
        sigma_ln: var.sqrt(),
        band: *band,
    })
}
