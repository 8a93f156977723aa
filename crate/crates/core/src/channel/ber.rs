//! Bit and packet error probabilities under log-normal SINR.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub const DEFAULT_GH_ORDER: usize = 64;

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Gauss–Hermite nodes and weights for `∫ e^{-x²} f(x) dx`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Computes an `n`-point rule by Newton iteration on the orthonormal
    /// Hermite recurrence.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("Gauss-Hermite order must be positive".into()));
        }
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            let mut converged = false;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = (j + 1) as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-14 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Numerical(format!(
                    "Gauss-Hermite root {i} of order {n} did not converge"
                )));
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        Ok(Self { nodes, weights })
    }

    /// `E[f(X)]` for `X ~ N(mu, sigma²)`.
    pub fn expect_normal(&self, mu: f64, sigma: f64, f: impl Fn(f64) -> f64) -> f64 {
        let scale = std::f64::consts::SQRT_2 * sigma;
        let total: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mu + scale * x))
            .sum();
        total / std::f64::consts::PI.sqrt()
    }
}

/// Average BPSK BER `E[Q(√(2γ))]` for `ln γ ~ N(mu, sigma²)`.
pub fn ber_lognormal(mu: f64, sigma: f64, rule: &GaussHermite) -> Result<f64> {
    if !mu.is_finite() || !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("BER needs finite mu and sigma >= 0, got ({mu}, {sigma})")));
    }
    let ber = if sigma == 0.0 {
        q_function((2.0 * mu.exp()).sqrt())
    } else {
        rule.expect_normal(mu, sigma, |l| q_function((2.0 * l.exp()).sqrt()))
    };
    if !ber.is_finite() {
        return Err(Error::Numerical(format!("BER evaluated to {ber}")));
    }
    Ok(ber.clamp(0.0, 0.5))
}

/// `1 - (1 - ber)^bits`, evaluated in log space.
pub fn packet_loss(ber: f64, bits: u64) -> Result<f64> {
    packet_loss_segments(&[(ber, bits)])
}

/// Packet loss for a packet split into segments of `bits` bits with
/// per-segment bit error rate.
pub fn packet_loss_segments(segments: &[(f64, u64)]) -> Result<f64> {
    let mut log_success = 0.0;
    for &(ber, bits) in segments {
        if !(0.0..=1.0).contains(&ber) {
            return Err(Error::Domain(format!("bit error rate {ber} outside [0, 1]")));
        }
        if bits > 0 {
            log_success += bits as f64 * (-ber).ln_1p();
        }
    }
    Ok((-log_success.exp_m1()).clamp(0.0, 1.0))
}
