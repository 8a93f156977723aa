//! Centralized scheduling: a controller collects every secondary
//! measurement with a two-slot delay and picks joint decisions from a plan
//! computed offline over a finite basis of beliefs.
//!
//! A belief about slot `t` under the delay is a mixture of the rows of
//! `P(δ_{t-2}) P(δ_{t-1})` weighted by the posterior over `s_{t-2}`. The
//! plan assumes future observations are exact, so every successor is again
//! one of these rows, and it only admits decisions whose planned primary
//! throughput stays within `β` of staying silent from the same belief.

pub mod oracle;

use rand::RngCore;
use serde::Serialize;

use crate::belief::{bayes_update, check_belief, dot, point_mass, sample_index};
use crate::error::{Error, Result};
use crate::netmodel::{gaussian_log_likelihood, SensingModel, TransitionModel};
use crate::policy::{Policy, SlotContext};

/// Relative tolerance for value comparisons.
pub const VALUE_TOL: f64 = 1e-9;

/// Packs the bits of `value` selected by `mask` into the low bits.
fn pext(value: u32, mask: u32) -> u32 {
    let (mut out, mut bit) = (0, 0);
    for k in 0..32 {
        if mask >> k & 1 == 1 {
            out |= (value >> k & 1) << bit;
            bit += 1;
        }
    }
    out
}

/// Basis beliefs indexed by `(s, δa restricted to b(s), δb)`.
#[derive(Debug, Clone)]
pub struct BasisSet {
    offsets: Vec<usize>,
    su: Vec<u32>,
    decisions: usize,
    keys: Vec<(usize, u32, u32)>,
}

impl BasisSet {
    pub fn new(model: &TransitionModel) -> Self {
        let decisions = model.n_decisions();
        let mut offsets = Vec::with_capacity(model.n_states());
        let mut su = Vec::with_capacity(model.n_states());
        let mut keys = Vec::new();
        for (si, s) in model.space.states().iter().enumerate() {
            offsets.push(keys.len());
            su.push(s.su);
            let mut a = 0u32;
            // Enumerate submasks of the buffer mask in increasing packed order.
            for _ in 0..1u32 << s.su.count_ones() {
                for b in 0..decisions as u32 {
                    keys.push((si, a, b));
                }
                a = (a.wrapping_sub(s.su)) & s.su;
            }
        }
        Self {
            offsets,
            su,
            decisions,
            keys,
        }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Index of the row `s` of `P(a) P(b)`.
    pub fn index(&self, s: usize, a: u32, b: u32) -> usize {
        let mask = self.su[s];
        self.offsets[s] + pext(a & mask, mask) as usize * self.decisions + b as usize
    }

    /// `(s, a, b)` with `a` already restricted to the buffers of `s`.
    pub fn key(&self, index: usize) -> (usize, u32, u32) {
        self.keys[index]
    }

    /// The belief itself.
    pub fn vector(&self, model: &TransitionModel, index: usize) -> Vec<f64> {
        let (s, a, b) = self.key(index);
        let first = model.predict(&point_mass(model.n_states(), s), a);
        model.predict(&first, b)
    }
}

/// Offline plan over basis beliefs for slots `0..horizon`.
#[derive(Debug, Clone)]
pub struct PlanTable {
    pub horizon: usize,
    pub beta: f64,
    pub basis: BasisSet,
    decisions: Vec<u16>,
    values: Vec<Vec<f64>>,
    pu_values: Vec<Vec<f64>>,
    /// Expected primary bits from slot `t` to the horizon when silent,
    /// starting from the episode's initial state.
    pub baseline: Vec<f64>,
}

/// A row of the plan dump.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PlanRow {
    pub slot: usize,
    pub basis: usize,
    pub state: usize,
    pub previous: u32,
    pub last: u32,
    pub value: f64,
    pub pu_value: f64,
    pub decision: u32,
}

impl PlanTable {
    pub fn decision(&self, t: usize, index: usize) -> u32 {
        self.decisions[t * self.basis.len() + index] as u32
    }

    /// `Ṽ_t` over the basis, if retained for slot `t`.
    pub fn values(&self, t: usize) -> Option<&[f64]> {
        self.values.get(t).filter(|v| !v.is_empty()).map(Vec::as_slice)
    }

    pub fn pu_values(&self, t: usize) -> Option<&[f64]> {
        self.pu_values.get(t).filter(|v| !v.is_empty()).map(Vec::as_slice)
    }

    /// Time-sharing value `Σ π(s) Ṽ_t(s, a, b)`.
    pub fn mixture_value(&self, t: usize, posterior: &[f64], a: u32, b: u32) -> Result<f64> {
        check_belief(posterior)?;
        let values = self
            .values(t)
            .ok_or_else(|| Error::Contract(format!("values for slot {t} were not retained")))?;
        Ok(posterior
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, &p)| p * values[self.basis.index(s, a, b)])
            .sum())
    }

    /// Rows for every retained slot.
    pub fn rows(&self) -> Vec<PlanRow> {
        let mut rows = Vec::new();
        for t in 0..self.horizon {
            let (Some(v), Some(vp)) = (self.values(t), self.pu_values(t)) else {
                continue;
            };
            for i in 0..self.basis.len() {
                let (state, previous, last) = self.basis.key(i);
                rows.push(PlanRow {
                    slot: t,
                    basis: i,
                    state,
                    previous,
                    last,
                    value: v[i],
                    pu_value: vp[i],
                    decision: self.decision(t, i),
                });
            }
        }
        rows
    }
}

/// `V_{P,t}(Ψ0)` for `t = 0..=horizon` from `initial`.
pub fn baseline_pu_values(model: &TransitionModel, initial: &[f64], horizon: usize) -> Vec<f64> {
    let g = model.g_pu(0);
    let mut per_slot = Vec::with_capacity(horizon);
    let mut dist = initial.to_vec();
    for _ in 0..horizon {
        per_slot.push(dot(&dist, g));
        dist = model.predict(&dist, 0);
    }
    let mut out = vec![0.0; horizon + 1];
    for t in (0..horizon).rev() {
        out[t] = out[t + 1] + per_slot[t];
    }
    out
}

/// Decisions ordered by number of transmitters, then numerically.
pub fn decision_order(decisions: usize) -> Vec<u32> {
    let mut order: Vec<u32> = (0..decisions as u32).collect();
    order.sort_by_key(|d| (d.count_ones(), *d));
    order
}

/// Options for [`offline_plan`].
#[derive(Debug, Clone, Copy, Default)]
pub struct PlanOptions {
    /// Keep `Ṽ_t` for every slot rather than only slot 0.
    pub keep_values: bool,
}

/// Backward value iteration over the basis.
pub fn offline_plan(model: &TransitionModel, horizon: usize, beta: f64, options: PlanOptions) -> Result<PlanTable> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Config(format!("beta {beta} outside [0, 1]")));
    }
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least one slot".into()));
    }
    let basis = BasisSet::new(model);
    let (n, d, nb) = (model.n_states(), model.n_decisions(), basis.len());
    let order = decision_order(d);
    let initial = point_mass(n, model.space.initial_index());
    let baseline = baseline_pu_values(model, &initial, horizon);

    // (P(b) g(δ)) and (P(b) g_P(δ)) for every pair.
    let mut pg = vec![0.0; d * d * n];
    let mut pgp = vec![0.0; d * d * n];
    for b in 0..d as u32 {
        for delta in 0..d as u32 {
            let g = model.g(delta);
            let gp = model.g_pu(delta);
            let m = model.matrix(b);
            for s in 0..n {
                let (mut x, mut y) = (0.0, 0.0);
                for (c, p) in m.row(s) {
                    x += p * g[c];
                    y += p * gp[c];
                }
                let at = (b as usize * d + delta as usize) * n + s;
                pg[at] = x;
                pgp[at] = y;
            }
        }
    }

    let mut next_v = vec![0.0; nb];
    let mut next_vp = vec![0.0; nb];
    let mut w = vec![0.0; n];
    let mut decisions = vec![0u16; horizon * nb];
    let mut values = vec![Vec::new(); horizon];
    let mut pu_values = vec![Vec::new(); horizon];
    let mut cont = vec![0.0; d * d * n];
    let mut cont_p = vec![0.0; d * d * n];
    let mut pw = vec![0.0; d * n];
    for t in (0..horizon).rev() {
        // Silent-from-now primary value per state.
        let g0 = model.g_pu(0);
        let p0 = model.matrix(0);
        w = (0..n)
            .map(|s| g0[s] + p0.row(s).map(|(c, p)| p * w[c]).sum::<f64>())
            .collect();
        for b in 0..d as u32 {
            let m = model.matrix(b);
            for s in 0..n {
                pw[b as usize * n + s] = m.row(s).map(|(c, p)| p * w[c]).sum();
            }
        }
        for b in 0..d as u32 {
            for delta in 0..d as u32 {
                for s in 0..n {
                    let at = (b as usize * d + delta as usize) * n + s;
                    let next = basis.index(s, b, delta);
                    cont[at] = pg[at] + next_v[next];
                    cont_p[at] = pgp[at] + next_vp[next];
                }
            }
        }
        let mut v = vec![0.0; nb];
        let mut vp = vec![0.0; nb];
        for i in 0..nb {
            let (s, a, b) = basis.key(i);
            let row: Vec<(usize, f64)> = model.matrix(a).row(s).collect();
            let silent_base: f64 = row.iter().map(|&(c, p)| p * pw[b as usize * n + c]).sum();
            let need = beta * silent_base;
            let mut best: Option<(u32, f64, f64)> = None;
            for &delta in &order {
                let at = (b as usize * d + delta as usize) * n;
                let (mut q, mut qp) = (0.0, 0.0);
                for &(c, p) in &row {
                    q += p * cont[at + c];
                    qp += p * cont_p[at + c];
                }
                if qp < need - VALUE_TOL * (1.0 + need.abs()) {
                    continue;
                }
                match best {
                    Some((_, bq, _)) if q <= bq + VALUE_TOL * (1.0 + bq.abs()) => {}
                    _ => best = Some((delta, q, qp)),
                }
            }
            let (delta, q, qp) = best.ok_or_else(|| {
                Error::Numerical(format!("no feasible decision at slot {t}, basis {i}"))
            })?;
            decisions[t * nb + i] = delta as u16;
            v[i] = q;
            vp[i] = qp;
        }
        if options.keep_values || t == 0 {
            values[t] = v.clone();
            pu_values[t] = vp.clone();
        }
        next_v = v;
        next_vp = vp;
    }
    Ok(PlanTable {
        horizon,
        beta,
        basis,
        decisions,
        values,
        pu_values,
        baseline,
    })
}

/// Samples a basis index from the posterior over `s_{t-2}` and returns
/// its stored decision.
pub fn decide_online(plan: &PlanTable, t: usize, posterior: &[f64], a: u32, b: u32, u: f64) -> Result<u32> {
    check_belief(posterior)?;
    if t >= plan.horizon {
        return Err(Error::Contract(format!("slot {t} beyond the plan horizon")));
    }
    let s = sample_index(posterior, u);
    Ok(plan.decision(t, plan.basis.index(s, a, b)))
}

/// Log-likelihood of all secondary measurements in state `s`.
pub fn central_log_likelihood(model: &TransitionModel, sensing: &SensingModel, s: usize, delta: u32, y: &[f64]) -> f64 {
    let state = model.space.state(s);
    let pu = model.space.pu_transmitting(state) as u64;
    let su = (delta & state.su) as u64;
    y.iter()
        .enumerate()
        .map(|(i, &yi)| gaussian_log_likelihood(yi, sensing.mean(i, pu, su), sensing.sigma))
        .sum()
}

/// Posterior over the slot the measurements `y` were taken in, given the
/// belief `prior` over that slot and the decisions applied in it.
pub fn belief_update_central(
    model: &TransitionModel,
    sensing: &SensingModel,
    prior: &[f64],
    delta: u32,
    y: &[f64],
) -> Result<Vec<f64>> {
    check_belief(prior)?;
    if y.len() != sensing.pu_power.len() {
        return Err(Error::Contract(format!("expected {} measurements", sensing.pu_power.len())));
    }
    bayes_update(prior, |s| central_log_likelihood(model, sensing, s, delta, y))
}

/// Runtime controller: tracks the posterior two slots back and applies the
/// plan by time sharing.
#[derive(Debug, Clone)]
pub struct CentralController<'a> {
    model: &'a TransitionModel,
    sensing: &'a SensingModel,
    plan: &'a PlanTable,
    decisions: Vec<u32>,
    posteriors: Vec<Vec<f64>>,
}

impl<'a> CentralController<'a> {
    pub fn new(model: &'a TransitionModel, sensing: &'a SensingModel, plan: &'a PlanTable) -> Self {
        Self {
            model,
            sensing,
            plan,
            decisions: Vec::new(),
            posteriors: Vec::new(),
        }
    }

    /// Posterior over `s_t` after the slot-`t` measurements.
    pub fn posterior(&self, t: usize) -> Option<&[f64]> {
        self.posteriors.get(t).map(Vec::as_slice)
    }
}

impl Policy for CentralController<'_> {
    fn decide(&mut self, ctx: &SlotContext, rng: &mut dyn RngCore) -> Result<u32> {
        let t = ctx.t;
        if t != self.decisions.len() {
            return Err(Error::Contract(format!("slot {t} decided out of order")));
        }
        let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let delta = if t < 2 {
            0
        } else {
            let posterior = self
                .posteriors
                .get(t - 2)
                .ok_or_else(|| Error::Contract(format!("no measurements for slot {}", t - 2)))?;
            decide_online(self.plan, t, posterior, self.decisions[t - 2], self.decisions[t - 1], u)?
        };
        self.decisions.push(delta);
        Ok(delta)
    }

    fn observe(&mut self, t: usize, y: &[f64]) -> Result<()> {
        if t != self.posteriors.len() || t >= self.decisions.len() {
            return Err(Error::Contract(format!("measurements for slot {t} out of order")));
        }
        let prior = match t {
            0 => point_mass(self.model.n_states(), self.model.space.initial_index()),
            _ => self.model.predict(&self.posteriors[t - 1], self.decisions[t - 1]),
        };
        let post = belief_update_central(self.model, self.sensing, &prior, self.decisions[t], y)?;
        self.posteriors.push(post);
        Ok(())
    }
}
