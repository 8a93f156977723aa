//! Probability-vector helpers shared by the planners.

use crate::error::{Error, Result};

/// Tolerance on the total mass of a belief.
pub const MASS_TOL: f64 = 1e-9;

pub fn point_mass(n: usize, at: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[at] = 1.0;
    v
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn check_belief(v: &[f64]) -> Result<()> {
    let mass: f64 = v.iter().sum();
    if v.iter().any(|&p| !(p >= 0.0)) || (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::Numerical(format!("belief has mass {mass} or negative entries")));
    }
    Ok(())
}

/// Posterior `∝ prior(s) · exp(log_lik(s))`, evaluated in log space.
///
/// When every state with prior mass has zero likelihood the prior is
/// returned unchanged.
pub fn bayes_update(prior: &[f64], log_lik: impl Fn(usize) -> f64) -> Result<Vec<f64>> {
    let logs: Vec<f64> = prior
        .iter()
        .enumerate()
        .map(|(s, &p)| if p > 0.0 { p.ln() + log_lik(s) } else { f64::NEG_INFINITY })
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return renormalize(prior.to_vec());
    }
    if top.is_nan() {
        return Err(Error::Numerical("belief update produced NaN".into()));
    }
    renormalize(logs.iter().map(|&l| (l - top).exp()).collect())
}

pub fn renormalize(mut v: Vec<f64>) -> Result<Vec<f64>> {
    let mass: f64 = v.iter().sum();
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::Numerical(format!("cannot normalize belief of mass {mass}")));
    }
    v.iter_mut().for_each(|p| *p /= mass);
    Ok(v)
}

/// Index drawn from the distribution `weights` with a uniform `u ∈ [0,1)`.
pub fn sample_index(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}
