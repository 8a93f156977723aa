//! Decentralized scheduling: every secondary hop plans alone on a local
//! model of the primary hops near it, decides with a one-slot-old belief,
//! and only transmits in its reuse phase.

mod packet;

pub use packet::{
    critical_sizes, optimize_packet_size, packet_lp, solve_budget_lp, stationary_distribution, LpItem, LpSolution,
    PacketSizePlan, MIN_SU_PACKET_BITS,
};

use std::ops::Range;

use rand::RngCore;
use serde::Serialize;

use crate::belief::{bayes_update, dot, point_mass};
use crate::central::VALUE_TOL;
use crate::error::{Error, Result};
use crate::netmodel::{
    distance, gaussian_log_likelihood, Network, Scope, SensingModel, TrafficModel, TransitionModel,
    REUSE_FACTOR,
};
use crate::policy::{Policy, SlotContext};

/// Primary hops a secondary hop models: those it can hear within one slot
/// of propagation or can reach with its own signal, widened to a
/// contiguous run.
pub fn neighbor_range(network: &Network, i: usize) -> Range<usize> {
    let reach = network.sound_speed() * network.spec.slot_length;
    let su = &network.hops[network.su_hop(i)];
    let near: Vec<usize> = (0..network.n_pu)
        .filter(|&j| {
            let pu = &network.hops[network.pu_hop(j)];
            distance(&pu.tx, &su.rx) <= reach || distance(&su.tx, &pu.rx) <= reach
        })
        .collect();
    match (near.first(), near.last()) {
        (Some(&a), Some(&b)) => a..b + 1,
        _ => 0..0,
    }
}

/// Per-hop reward-to-go of `β`: the local constraint coefficient.
pub fn local_beta(beta: f64, n_su: usize) -> f64 {
    beta.powf(1.0 / n_su as f64)
}

/// Local view of secondary hop `su`.
#[derive(Debug, Clone)]
pub struct LocalModel {
    pub su: usize,
    pub pu_range: Range<usize>,
    pub model: TransitionModel,
    /// Sensed power of each local primary transmitter.
    pub pu_power: Vec<f64>,
    /// Sensed power of the hop's own transmitter.
    pub self_power: f64,
    pub sigma: f64,
    /// Local primaries sharing the hop's carrier.
    pub same_channel: Vec<bool>,
}

impl LocalModel {
    pub fn build(network: &Network, traffic: TrafficModel, sensing: &SensingModel, su: usize, cap: usize) -> Result<Self> {
        let pu_range = neighbor_range(network, su);
        let scope = Scope::local(pu_range.clone(), su);
        let model = TransitionModel::build(network, traffic, scope, cap)?;
        let carrier = network.hops[network.su_hop(su)].carrier;
        Ok(Self {
            su,
            pu_power: pu_range.clone().map(|j| sensing.pu_power[su][j]).collect(),
            self_power: sensing.su_power[su][su],
            sigma: sensing.sigma,
            same_channel: pu_range
                .clone()
                .map(|j| network.hops[network.pu_hop(j)].carrier == carrier)
                .collect(),
            pu_range,
            model,
        })
    }

    pub fn n_states(&self) -> usize {
        self.model.n_states()
    }

    /// Log-likelihood of measurement `y` in local state `s`.
    pub fn log_likelihood(&self, s: usize, transmitted: bool, y: f64) -> f64 {
        let state = self.model.space.state(s);
        let tx = self.model.space.pu_transmitting(state);
        let mut mean: f64 = self
            .pu_power
            .iter()
            .enumerate()
            .filter(|(k, _)| tx >> k & 1 == 1)
            .map(|(_, p)| p)
            .sum();
        if transmitted {
            mean += self.self_power;
        }
        gaussian_log_likelihood(y, mean, self.sigma)
    }

    /// Probability that some local primary transmits.
    pub fn occupancy(&self, omega: &[f64]) -> f64 {
        self.occupancy_where(omega, |_| true)
    }

    /// Probability that some local primary on the hop's carrier transmits.
    pub fn channel_occupancy(&self, omega: &[f64]) -> f64 {
        self.occupancy_where(omega, |k| self.same_channel[k])
    }

    fn occupancy_where(&self, omega: &[f64], keep: impl Fn(usize) -> bool) -> f64 {
        omega
            .iter()
            .enumerate()
            .filter(|(s, _)| {
                let tx = self.model.space.pu_transmitting(self.model.space.state(*s));
                (0..self.pu_power.len()).any(|k| tx >> k & 1 == 1 && keep(k))
            })
            .map(|(_, &w)| w)
            .sum()
    }

    /// Basis belief: row `s` of `P_i(δ)`.
    pub fn basis_vector(&self, delta: bool, s: usize) -> Vec<f64> {
        self.model.predict(&point_mass(self.n_states(), s), delta as u32)
    }
}

/// A row of the local plan dump: the decision at one basis belief.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LocalPlanRow {
    pub su: usize,
    pub slot: usize,
    pub previous: bool,
    pub state: usize,
    pub value: f64,
    pub pu_value: f64,
    pub transmit: bool,
}

/// Offline plan of one secondary hop.
#[derive(Debug, Clone, Serialize)]
pub struct LocalPlan {
    pub su: usize,
    pub horizon: usize,
    pub beta_bar: f64,
    /// Transmit only when `t ≡ su (mod R)`; `None` lifts the restriction.
    pub reuse: Option<usize>,
    n: usize,
    /// Per slot and decision: `g(δ) + Ṽ_{t+1}(δ, ·)` and its primary part.
    total: [Vec<f64>; 2],
    primary: [Vec<f64>; 2],
    /// Silent-from-now primary value per state.
    silent: Vec<f64>,
    /// Threshold vectors: objective gain of transmitting, and primary
    /// slack of transmitting against the local requirement.
    gain: Vec<f64>,
    slack: Vec<f64>,
}

impl LocalPlan {
    pub fn eligible(&self, t: usize) -> bool {
        self.reuse.is_none_or(|r| t % r == self.su % r)
    }

    fn at(&self, t: usize) -> Range<usize> {
        t * self.n..(t + 1) * self.n
    }

    /// Objective and primary value of decision `delta` at belief `omega`.
    pub fn q_values(&self, t: usize, omega: &[f64], delta: bool) -> (f64, f64) {
        let r = self.at(t);
        let d = delta as usize;
        (dot(omega, &self.total[d][r.clone()]), dot(omega, &self.primary[d][r]))
    }

    /// Local requirement `β̄ · ω · w_t`.
    pub fn requirement(&self, t: usize, omega: &[f64]) -> f64 {
        self.beta_bar * dot(omega, &self.silent[self.at(t)])
    }

    /// Decision maximizing the planned objective over feasible choices.
    pub fn argmax_decision(&self, t: usize, omega: &[f64]) -> bool {
        if !self.eligible(t) {
            return false;
        }
        let (q0, _) = self.q_values(t, omega, false);
        let (q1, p1) = self.q_values(t, omega, true);
        let need = self.requirement(t, omega);
        let feasible = p1 >= need - VALUE_TOL * (1.0 + need.abs());
        feasible && q1 > q0 + VALUE_TOL * (1.0 + q0.abs())
    }

    /// Same decision from the precomputed linear thresholds.
    pub fn decide_threshold(&self, t: usize, omega: &[f64]) -> bool {
        if !self.eligible(t) {
            return false;
        }
        let r = self.at(t);
        let need = self.requirement(t, omega);
        let q0 = dot(omega, &self.total[0][r.clone()]);
        dot(omega, &self.slack[r.clone()]) >= -VALUE_TOL * (1.0 + need.abs())
            && dot(omega, &self.gain[r]) > VALUE_TOL * (1.0 + q0.abs())
    }

    /// Planned `(Ṽ_t, Ṽ_{P,t})` at belief `omega`.
    pub fn value(&self, t: usize, omega: &[f64]) -> (f64, f64) {
        self.q_values(t, omega, self.argmax_decision(t, omega))
    }

    /// Decisions and values at every basis belief of every slot.
    pub fn rows(&self, local: &LocalModel) -> Vec<LocalPlanRow> {
        let mut rows = Vec::with_capacity(self.horizon * 2 * self.n);
        for previous in [false, true] {
            let basis: Vec<Vec<f64>> = (0..self.n).map(|s| local.basis_vector(previous, s)).collect();
            for t in 0..self.horizon {
                for (state, omega) in basis.iter().enumerate() {
                    let (value, pu_value) = self.value(t, omega);
                    rows.push(LocalPlanRow {
                        su: self.su,
                        slot: t,
                        previous,
                        state,
                        value,
                        pu_value,
                        transmit: self.decide_threshold(t, omega),
                    });
                }
            }
        }
        rows.sort_by_key(|r| (r.slot, r.previous, r.state));
        rows
    }
}

/// Backward value iteration of one local model.
pub fn offline_plan_local(local: &LocalModel, horizon: usize, beta_bar: f64, reuse: Option<usize>) -> Result<LocalPlan> {
    if !(0.0..=1.0).contains(&beta_bar) {
        return Err(Error::Config(format!("local beta {beta_bar} outside [0, 1]")));
    }
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least one slot".into()));
    }
    let model = &local.model;
    let n = model.n_states();
    let size = horizon * n;
    let mut plan = LocalPlan {
        su: local.su,
        horizon,
        beta_bar,
        reuse,
        n,
        total: [vec![0.0; size], vec![0.0; size]],
        primary: [vec![0.0; size], vec![0.0; size]],
        silent: vec![0.0; size],
        gain: vec![0.0; size],
        slack: vec![0.0; size],
    };
    let basis: Vec<Vec<Vec<f64>>> = [false, true]
        .iter()
        .map(|&d| (0..n).map(|s| local.basis_vector(d, s)).collect())
        .collect();
    // Value of each basis belief at the following slot.
    let mut next_v = [vec![0.0; n], vec![0.0; n]];
    let mut next_p = [vec![0.0; n], vec![0.0; n]];
    let mut next_w = vec![0.0; n];
    let p0 = model.matrix(0);
    for t in (0..horizon).rev() {
        let r = t * n..(t + 1) * n;
        for s in 0..n {
            let w = model.g_pu(0)[s] + p0.row(s).map(|(c, p)| p * next_w[c]).sum::<f64>();
            plan.silent[r.start + s] = w;
        }
        for d in 0..2 {
            let g = model.g(d as u32);
            let gp = model.g_pu(d as u32);
            for s in 0..n {
                plan.total[d][r.start + s] = g[s] + next_v[d][s];
                plan.primary[d][r.start + s] = gp[s] + next_p[d][s];
            }
        }
        for s in 0..n {
            let k = r.start + s;
            plan.gain[k] = plan.total[1][k] - plan.total[0][k];
            plan.slack[k] = plan.primary[1][k] - beta_bar * plan.silent[k];
        }
        for d in 0..2 {
            for s in 0..n {
                let (v, p) = plan.value(t, &basis[d][s]);
                next_v[d][s] = v;
                next_p[d][s] = p;
            }
        }
        next_w = plan.silent[r].to_vec();
    }
    Ok(plan)
}

/// Belief tracking of one secondary hop from its own measurements.
#[derive(Debug, Clone)]
pub struct LocalTracker {
    /// Predicted belief for the slot being decided.
    pub predicted: Vec<f64>,
    posterior: Option<Vec<f64>>,
    last_action: bool,
}

impl LocalTracker {
    pub fn new(local: &LocalModel) -> Self {
        Self {
            predicted: point_mass(local.n_states(), local.model.space.initial_index()),
            posterior: None,
            last_action: false,
        }
    }

    /// Prediction for the next slot; call once per slot before deciding.
    pub fn advance(&mut self, local: &LocalModel) {
        if let Some(post) = self.posterior.take() {
            self.predicted = local.model.predict(&post, self.last_action as u32);
        }
    }

    /// Bayes update with this slot's measurement and actual action.
    pub fn update(&mut self, local: &LocalModel, transmitted: bool, y: f64) -> Result<()> {
        let post = bayes_update(&self.predicted, |s| local.log_likelihood(s, transmitted, y))?;
        self.posterior = Some(post);
        self.last_action = transmitted;
        Ok(())
    }
}

/// Runtime of all secondary hops running their local plans.
#[derive(Debug, Clone)]
pub struct DecentralController<'a> {
    locals: &'a [LocalModel],
    plans: &'a [LocalPlan],
    trackers: Vec<LocalTracker>,
    actions: u32,
}

impl<'a> DecentralController<'a> {
    pub fn new(locals: &'a [LocalModel], plans: &'a [LocalPlan]) -> Self {
        Self {
            trackers: locals.iter().map(LocalTracker::new).collect(),
            locals,
            plans,
            actions: 0,
        }
    }
}

impl Policy for DecentralController<'_> {
    fn decide(&mut self, ctx: &SlotContext, _: &mut dyn RngCore) -> Result<u32> {
        let mut delta = 0;
        for (i, (local, plan)) in self.locals.iter().zip(self.plans).enumerate() {
            let tracker = &mut self.trackers[i];
            tracker.advance(local);
            if ctx.t < plan.horizon && plan.decide_threshold(ctx.t, &tracker.predicted) {
                delta |= 1 << i;
            }
        }
        self.actions = delta & ctx.buffers;
        Ok(delta)
    }

    fn observe(&mut self, _: usize, y: &[f64]) -> Result<()> {
        for (i, local) in self.locals.iter().enumerate() {
            self.trackers[i].update(local, self.actions >> i & 1 == 1, y[i])?;
        }
        Ok(())
    }
}

/// Builds the local models and plans of every secondary hop.
pub fn plan_all(
    network: &Network,
    traffic: TrafficModel,
    sensing: &SensingModel,
    horizon: usize,
    beta: f64,
    reuse: bool,
    cap: usize,
) -> Result<(Vec<LocalModel>, Vec<LocalPlan>)> {
    let beta_bar = local_beta(beta, network.n_su);
    let reuse = reuse.then_some(REUSE_FACTOR);
    let locals = (0..network.n_su)
        .map(|i| LocalModel::build(network, traffic, sensing, i, cap))
        .collect::<Result<Vec<_>>>()?;
    let plans = locals
        .iter()
        .map(|l| offline_plan_local(l, horizon, beta_bar, reuse))
        .collect::<Result<Vec<_>>>()?;
    Ok((locals, plans))
}
