//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the routine it is used to check; formulas are
//! re-derived in a different algebraic form and dynamics are stepped from
//! first principles.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};
use uwsched::channel::AcousticEnvironment;
use uwsched::decentral::{LocalModel, LpItem};
use uwsched::harness::{ScenarioConfig, TopologyConfig};
use uwsched::netmodel::{distance, packet_loss_for, Network, SystemState, TransitionModel};

/// Crossing scenario with `n` hops per chain and small run counts.
pub fn crossing(n_pu: usize, n_su: usize) -> ScenarioConfig {
    ScenarioConfig {
        topology: TopologyConfig::Crossing {
            n_pu,
            n_su,
            hop_length: 2500.0,
            su_position: 0.5,
            depth: 50.0,
        },
        ..ScenarioConfig::default()
    }
}

pub fn network(config: &ScenarioConfig) -> Network {
    Network::build(config.network_spec().unwrap()).unwrap()
}

pub fn fdm_network(config: &ScenarioConfig) -> Network {
    Network::build(config.fdm_network_spec().unwrap()).unwrap()
}

/// Thorp absorption written as `f² (a/(1+f²) + b/(4100+f²) + c) + d`.
pub fn thorp(f: f64) -> f64 {
    let f2 = f * f;
    f2 * (0.11 / (1.0 + f2) + 44.0 / (4100.0 + f2) + 2.75e-4) + 0.003
}

/// `10 log10(A0 · d^k · a(f)^(d/1000))` from the linear product form.
pub fn attenuation_db(d: f64, f: f64, env: &AcousticEnvironment) -> f64 {
    let a = 10f64.powf(thorp(f) / 10.0);
    let linear = env.normalizing_constant * d.powf(env.spreading_factor) * a.powf(d / 1000.0);
    10.0 * linear.log10()
}

/// Total noise PSD in linear units from the four dB components.
pub fn noise_linear(f: f64, env: &AcousticEnvironment) -> f64 {
    let lf = f.log10();
    let db = [
        17.0 - 30.0 * lf,
        40.0 + 20.0 * (env.shipping_activity - 0.5) + 26.0 * lf - 60.0 * (f + 0.03).log10(),
        50.0 + 7.5 * env.wind_speed.sqrt() + 20.0 * lf - 40.0 * (f + 0.4).log10(),
        -15.0 + 20.0 * lf,
    ];
    db.iter().map(|d| 10f64.powf(d / 10.0)).sum()
}

/// Gaussian upper tail from an independent CDF implementation.
pub fn q_tail(x: f64) -> f64 {
    StatNormal::new(0.0, 1.0).unwrap().sf(x)
}

/// Monte Carlo `E[Q(√(2 e^L))]`, `L ~ N(mu, sigma²)`: mean and standard
/// error.
pub fn mc_ber<R: Rng>(mu: f64, sigma: f64, draws: usize, rng: &mut R) -> (f64, f64) {
    let normal = Normal::new(mu, sigma).unwrap();
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..draws {
        let l: f64 = normal.sample(rng);
        let v = q_tail((2.0 * l.exp()).sqrt());
        sum += v;
        sum2 += v * v;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Victim bits of hop `j` (1-based) that hear transmitter `u`, found by
/// sampling the slot every `step` seconds.
pub fn grid_overlap(network: &Network, u: usize, j: usize, step: f64) -> Vec<u64> {
    let c = network.spec.environment.sound_speed;
    let victim = &network.hops[j];
    let src = &network.hops[u];
    let rs = distance(&victim.tx, &victim.rx) / c;
    let re = rs + victim.packet_bits as f64 / victim.bit_rate;
    let a_s = distance(&src.tx, &victim.rx) / c;
    let a_e = a_s + src.packet_bits as f64 / src.bit_rate;
    let points = (network.spec.slot_length / step).round() as usize;
    let mut bits = Vec::new();
    for k in 0..=points {
        let t = k as f64 * step;
        if t >= rs && t < re && t >= a_s && t < a_e {
            let b = ((t - rs) * victim.bit_rate).floor() as u64 + 1;
            if bits.last() != Some(&b) {
                bits.push(b);
            }
        }
    }
    bits
}

/// Packet loss of hop `j` under the active hop set, bit by bit: each bit
/// sees the interferers whose arrival window covers part of it.
pub fn per_bit_loss(network: &Network, j: usize, active: u64) -> f64 {
    let c = network.spec.environment.sound_speed;
    let victim = &network.hops[j];
    let rs = distance(&victim.tx, &victim.rx) / c;
    let rate = victim.bit_rate;
    let noise = network.noise[victim.carrier];
    let gain = &network.gains[j];
    let mut sources = Vec::new();
    for u in 0..network.n_hops() {
        if u == j || active >> u & 1 == 0 || network.hops[u].carrier != victim.carrier {
            continue;
        }
        let src = &network.hops[u];
        let a_s = distance(&src.tx, &victim.rx) / c;
        let a_e = a_s + src.packet_bits as f64 / src.bit_rate;
        let power = if src.tx_node == victim.rx_node {
            f64::INFINITY
        } else {
            network.received_power(u, &victim.rx).unwrap()
        };
        sources.push((a_s, a_e, power));
    }
    let mut ber_memo: HashMap<u64, f64> = HashMap::new();
    let mut log_success = 0.0;
    for b in 1..=victim.packet_bits {
        let lo = rs + (b - 1) as f64 / rate;
        let hi = rs + b as f64 / rate;
        let interference: f64 = sources
            .iter()
            .filter(|(a_s, a_e, _)| a_e.min(hi) - a_s.max(lo) > 1e-9)
            .map(|s| s.2)
            .sum();
        let ber = *ber_memo.entry(interference.to_bits()).or_insert_with(|| {
            if interference.is_infinite() {
                0.5
            } else {
                let mu = gain.mu_ln + network.tx_power.ln() - (interference + noise).ln();
                uwsched::channel::ber_lognormal(mu, gain.sigma_ln, &network.quadrature).unwrap()
            }
        });
        log_success += (-ber).ln_1p();
    }
    -log_success.exp_m1()
}

/// Ground-truth state of the full network, stepped without the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truth {
    pub t: usize,
    pub chain_on: bool,
    /// Packet waiting at primary hop `k >= 1`.
    pub waiting: Vec<bool>,
    /// Secondary buffers; the source is always full.
    pub buffer: Vec<bool>,
}

impl Truth {
    pub fn start(n_pu: usize, n_su: usize) -> Self {
        let mut buffer = vec![false; n_su];
        buffer[0] = true;
        Self {
            t: 0,
            chain_on: false,
            waiting: vec![false; n_pu],
            buffer,
        }
    }

    pub fn encode(&self) -> SystemState {
        let mut pu = self.chain_on as u32;
        for (k, &w) in self.waiting.iter().enumerate().skip(1) {
            pu |= (w as u32) << k;
        }
        let su = self.buffer.iter().enumerate().fold(0u32, |m, (i, &b)| m | (b as u32) << i);
        SystemState {
            phase: (self.t % 3) as u8,
            pu,
            su,
        }
    }
}

/// One slot of the full network under decision `delta`, drawing the
/// arrival chain and every packet outcome from `rng`.
pub struct Stepper<'a> {
    pub network: &'a Network,
    pub alpha1: f64,
    pub alpha2: f64,
    memo: HashMap<(usize, u64), f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(network: &'a Network, alpha1: f64, alpha2: f64) -> Self {
        Self {
            network,
            alpha1,
            alpha2,
            memo: HashMap::new(),
        }
    }

    fn loss(&mut self, j: usize, mask: u64) -> f64 {
        let network = self.network;
        *self.memo.entry((j, mask)).or_insert_with(|| packet_loss_for(network, j, mask).unwrap())
    }

    pub fn step<R: Rng>(&mut self, s: &Truth, delta: u32, rng: &mut R) -> Truth {
        let (m, n) = (self.network.n_pu, self.network.n_su);
        let phase = s.t % 3;
        let pu_tx: Vec<bool> = (0..m)
            .map(|k| phase == k % 3 && if k == 0 { s.chain_on } else { s.waiting[k] })
            .collect();
        let su_tx: Vec<bool> = (0..n).map(|i| delta >> i & 1 == 1 && s.buffer[i]).collect();
        let mut mask = 0u64;
        for k in 0..m {
            if pu_tx[k] {
                mask |= 1 << k;
            }
        }
        for i in 0..n {
            if su_tx[i] {
                mask |= 1 << (m + i);
            }
        }
        let mut pu_ok = vec![false; m];
        let mut su_ok = vec![false; n];
        for k in 0..m {
            let u: f64 = rng.random();
            if pu_tx[k] {
                pu_ok[k] = u >= self.loss(k, mask);
            }
        }
        for i in 0..n {
            let u: f64 = rng.random();
            if su_tx[i] {
                su_ok[i] = u >= self.loss(m + i, mask);
            }
        }
        let next_t = s.t + 1;
        let chain_on = if next_t.is_multiple_of(3) {
            let p = if s.chain_on { self.alpha2 } else { self.alpha1 };
            rng.random::<f64>() < p
        } else {
            s.chain_on
        };
        let mut waiting = vec![false; m];
        waiting[1..].copy_from_slice(&pu_ok[..m - 1]);
        let mut buffer: Vec<bool> = (0..n).map(|i| s.buffer[i] && !su_tx[i]).collect();
        for i in 1..n {
            buffer[i] |= su_ok[i - 1];
        }
        buffer[0] = true;
        Truth {
            t: next_t,
            chain_on,
            waiting,
            buffer,
        }
    }
}

/// Lagrangian dual of the budget LP, minimized over a grid of multipliers
/// that contains every breakpoint.
pub fn lp_dual_bound(items: &[LpItem], budget: f64) -> f64 {
    let dual = |lambda: f64| -> f64 {
        lambda * budget
            + items
                .iter()
                .map(|it| (it.gain - lambda * it.cost).max(0.0))
                .sum::<f64>()
    };
    let mut candidates = vec![0.0];
    for it in items {
        let ratio = it.gain / it.cost;
        if it.cost != 0.0 && ratio > 0.0 {
            candidates.push(ratio);
        }
    }
    let top = candidates.iter().cloned().fold(0.0, f64::max);
    for k in 0..=2000 {
        candidates.push(top * k as f64 / 2000.0);
    }
    candidates.into_iter().map(dual).fold(f64::INFINITY, f64::min)
}

/// Reference local plan: decisions at every basis belief of every slot by
/// direct backward recursion with the same feasibility rule.
pub struct LocalOracle {
    /// `[t][prev][s]` transmit decisions.
    pub decisions: Vec<[Vec<bool>; 2]>,
}

pub fn local_oracle(local: &LocalModel, horizon: usize, beta_bar: f64, reuse: Option<usize>) -> LocalOracle {
    const TOL: f64 = 1e-9;
    let model: &TransitionModel = &local.model;
    let n = model.n_states();
    let row = |d: u32, s: usize| -> Vec<f64> {
        let mut v = vec![0.0; n];
        for c in 0..n {
            v[c] = model.matrix(d).get(s, c);
        }
        v
    };
    let basis: [Vec<Vec<f64>>; 2] = [(0..n).map(|s| row(0, s)).collect(), (0..n).map(|s| row(1, s)).collect()];
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut next_v = [vec![0.0; n], vec![0.0; n]];
    let mut next_p = [vec![0.0; n], vec![0.0; n]];
    let mut w_next = vec![0.0; n];
    let mut decisions = vec![[Vec::new(), Vec::new()]; horizon];
    for t in (0..horizon).rev() {
        let w: Vec<f64> = (0..n).map(|s| model.g_pu(0)[s] + dot(&row(0, s), &w_next)).collect();
        let mut total = [vec![0.0; n], vec![0.0; n]];
        let mut primary = [vec![0.0; n], vec![0.0; n]];
        for d in 0..2 {
            let g = model.g(d as u32);
            for s in 0..n {
                total[d][s] = g[s] + next_v[d][s];
                primary[d][s] = model.g_pu(d as u32)[s] + next_p[d][s];
            }
        }
        let eligible = reuse.is_none_or(|r| t % r == local.su % r);
        let mut v = [vec![0.0; n], vec![0.0; n]];
        let mut p = [vec![0.0; n], vec![0.0; n]];
        for d in 0..2 {
            let mut dec = vec![false; n];
            for s in 0..n {
                let omega = &basis[d][s];
                let (q0, q1) = (dot(omega, &total[0]), dot(omega, &total[1]));
                let need = beta_bar * dot(omega, &w);
                let p1 = dot(omega, &primary[1]);
                let go = eligible && p1 >= need - TOL * (1.0 + need.abs()) && q1 > q0 + TOL * (1.0 + q0.abs());
                dec[s] = go;
                let k = go as usize;
                v[d][s] = dot(omega, &total[k]);
                p[d][s] = dot(omega, &primary[k]);
            }
            decisions[t][d] = dec;
        }
        next_v = v;
        next_p = p;
        w_next = w;
    }
    LocalOracle { decisions }
}
