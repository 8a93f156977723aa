//! Secondary packet-size selection: candidate sizes that just avoid
//! overlapping a primary reception, each scored by a single-constraint
//! linear program over per-state transmit probabilities.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::netmodel::{distance, reception_window, Network, Scope, TrafficModel, TransitionModel, REUSE_FACTOR};

/// Smallest secondary packet considered, 64 bytes.
pub const MIN_SU_PACKET_BITS: u64 = 64 * 8;

const STATIONARY_TOL: f64 = 1e-13;
const STATIONARY_MAX_ITER: usize = 100_000;

fn whole_bytes(bits: f64) -> u64 {
    ((bits.max(0.0) + 1e-9).floor() as u64) / 8 * 8
}

/// Largest packet sizes of secondary hop `i` that avoid each primary
/// hop's reception window, and the primary windows its own reception,
/// clamped to `[MIN_SU_PACKET_BITS, max_bits]`. `max_bits` is always a
/// candidate.
pub fn critical_sizes(network: &Network, i: usize, max_bits: u64) -> Vec<u64> {
    let c = network.sound_speed();
    let su = &network.hops[network.su_hop(i)];
    let rate = su.bit_rate;
    let su_start = su.length / c;
    let mut sizes = vec![max_bits];
    for j in 0..network.n_pu {
        let pu_index = network.pu_hop(j);
        let pu = &network.hops[pu_index];
        if pu.carrier != su.carrier {
            continue;
        }
        let pu_rx = reception_window(network, pu_index);
        let arrive = distance(&su.tx, &pu.rx) / c;
        if arrive < pu_rx.end {
            let room = if arrive < pu_rx.start { (pu_rx.start - arrive) * rate } else { 0.0 };
            sizes.push(whole_bytes(room));
        }
        let pu_start = distance(&pu.tx, &su.rx) / c;
        let pu_end = pu_start + pu.duration();
        if pu_end > su_start {
            let room = if pu_start > su_start { (pu_start - su_start) * rate } else { 0.0 };
            sizes.push(whole_bytes(room));
        }
    }
    let mut sizes: Vec<u64> = sizes
        .into_iter()
        .map(|b| b.clamp(MIN_SU_PACKET_BITS.min(max_bits), max_bits))
        .collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
}

/// Stationary distribution of `P(δ)` by power iteration on the lazy chain
/// `(I + P) / 2`, which shares its fixed points but is aperiodic.
pub fn stationary_distribution(model: &TransitionModel, delta: u32) -> Result<Vec<f64>> {
    let n = model.n_states();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..STATIONARY_MAX_ITER {
        let step = model.predict(&pi, delta);
        let residual = step.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual < STATIONARY_TOL {
            return Ok(pi);
        }
        pi = pi.iter().zip(&step).map(|(a, b)| 0.5 * (a + b)).collect();
    }
    Err(Error::Numerical(format!(
        "stationary distribution did not converge in {STATIONARY_MAX_ITER} iterations"
    )))
}

/// One LP coordinate: objective gain and constraint use at `q = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpItem {
    pub gain: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub q: Vec<f64>,
    /// `Σ q_k gain_k`.
    pub gain: f64,
}

/// `max Σ q_k gain_k` subject to `Σ q_k cost_k <= budget`, `q ∈ [0, 1]`.
///
/// Items that gain without using budget are taken outright. The rest are
/// filled in order of gain per unit cost, releasing budget from items with
/// negative cost while their loss per unit released is below the rate of
/// the next purchase.
pub fn solve_budget_lp(items: &[LpItem], budget: f64) -> LpSolution {
    let mut q = vec![0.0; items.len()];
    let mut left = budget.max(0.0);
    let mut buy = Vec::new();
    let mut sell = Vec::new();
    for (k, item) in items.iter().enumerate() {
        match (item.gain > 0.0, item.cost > 0.0) {
            (true, false) => {
                q[k] = 1.0;
                left -= item.cost;
            }
            (true, true) => buy.push(k),
            (false, false) if item.cost < 0.0 => sell.push(k),
            _ => {}
        }
    }
    let rate = |k: usize| items[k].gain / items[k].cost;
    buy.sort_by(|&a, &b| rate(b).total_cmp(&rate(a)).then(a.cmp(&b)));
    sell.sort_by(|&a, &b| rate(a).total_cmp(&rate(b)).then(a.cmp(&b)));
    let mut sells = sell.into_iter().peekable();
    for k in buy {
        let cost = items[k].cost;
        loop {
            if left > 0.0 {
                let take = (left / cost).min(1.0 - q[k]);
                q[k] += take;
                left -= take * cost;
            }
            if q[k] >= 1.0 {
                break;
            }
            // Release budget while it pays for the remaining purchase.
            let Some(&s) = sells.peek() else { break };
            if rate(s) >= rate(k) {
                break;
            }
            let want = (1.0 - q[k]) * cost;
            let room = (1.0 - q[s]) * -items[s].cost;
            let freed = want.min(room);
            q[s] += freed / -items[s].cost;
            left += freed;
            if q[s] >= 1.0 - 1e-15 {
                q[s] = 1.0;
                sells.next();
            }
        }
    }
    let gain = q.iter().zip(items).map(|(x, it)| x * it.gain).sum();
    LpSolution { q, gain }
}

/// Chosen size and transmit probabilities of one secondary hop.
#[derive(Debug, Clone, Serialize)]
pub struct PacketSizePlan {
    pub su: usize,
    pub candidates: Vec<u64>,
    /// LP objective for each candidate, bits per slot.
    pub objectives: Vec<f64>,
    pub chosen_bits: u64,
    /// Transmit probability given the previous local state.
    pub q: Vec<f64>,
    pub objective: f64,
}

/// LP for hop `i` at its current packet size: per previous local state,
/// the gain and primary cost of transmitting in the following slot.
pub fn packet_lp(network: &Network, traffic: TrafficModel, i: usize, beta: f64, reuse: bool, cap: usize) -> Result<(Vec<LpItem>, f64, f64)> {
    let scope = Scope::local(super::neighbor_range(network, i), i);
    let model = TransitionModel::build(network, traffic, scope, cap)?;
    let pi = stationary_distribution(&model, 0)?;
    let p0 = model.matrix(0);
    let expect = |g: &[f64], k: usize| -> f64 { p0.row(k).map(|(c, p)| p * g[c]).sum() };
    let (g0, g1) = (model.g(0), model.g(1));
    let (gp0, gp1) = (model.g_pu(0), model.g_pu(1));
    let mut items = Vec::with_capacity(pi.len());
    let (mut base, mut pu_base) = (0.0, 0.0);
    for (k, &w) in pi.iter().enumerate() {
        let next_phase = (model.space.state(k).phase as usize + 1) % REUSE_FACTOR;
        let allowed = !reuse || next_phase == i % REUSE_FACTOR;
        base += w * expect(&g0, k);
        pu_base += w * expect(gp0, k);
        items.push(if allowed {
            LpItem {
                gain: w * (expect(&g1, k) - expect(&g0, k)),
                cost: w * (expect(gp0, k) - expect(gp1, k)),
            }
        } else {
            LpItem { gain: 0.0, cost: 0.0 }
        });
    }
    Ok((items, base, (1.0 - beta) * pu_base))
}

/// Scores every critical size of hop `i` and keeps the best, preferring
/// larger packets on ties.
pub fn optimize_packet_size(
    network: &Network,
    traffic: TrafficModel,
    i: usize,
    max_bits: u64,
    beta: f64,
    reuse: bool,
    cap: usize,
) -> Result<PacketSizePlan> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Config(format!("beta {beta} outside [0, 1]")));
    }
    let candidates = critical_sizes(network, i, max_bits);
    let mut objectives = vec![0.0; candidates.len()];
    let mut best: Option<(usize, LpSolution, f64)> = None;
    for (c, &bits) in candidates.iter().enumerate().rev() {
        let mut sizes = network.spec.su_packet_bits.clone();
        sizes[i] = bits;
        let sized = network.with_su_packet_bits(&sizes)?;
        let (items, base, budget) = packet_lp(&sized, traffic, i, beta, reuse, cap)?;
        let solution = solve_budget_lp(&items, budget);
        let f = base + solution.gain;
        objectives[c] = f;
        let better = best
            .as_ref()
            .is_none_or(|(_, _, bf)| f > bf + 1e-12 * (1.0 + bf.abs()));
        if better {
            best = Some((c, solution, f));
        }
    }
    let (c, solution, objective) = best.ok_or_else(|| Error::Numerical("no packet-size candidates".into()))?;
    Ok(PacketSizePlan {
        su: i,
        chosen_bits: candidates[c],
        candidates,
        objectives,
        q: solution.q,
        objective,
    })
}
