//! Exact reference solutions for tiny instances.
//!
//! With exact (noise-free) delayed observations the controller's
//! information state at slot `t` is `(s_{t-2}, δ_{t-2}, δ_{t-1})`. The
//! achievable `(V, V_P)` pairs of randomized policies from an information
//! state form a convex set whose north-east frontier is computed here in
//! exact rational arithmetic, either by dynamic programming or by brute
//! enumeration of deterministic policies.

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::PlanTable;
use crate::belief::{dot, renormalize};
use crate::error::{Error, Result};
use crate::netmodel::TransitionModel;

pub type Q = BigRational;

/// Largest state space accepted by the exact oracles.
pub const MAX_STATES: usize = 8;
/// Longest horizon accepted by the exact oracles.
pub const MAX_HORIZON: usize = 4;

fn rational(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::Numerical(format!("{x} has no exact rational form")))
}

/// Information state `(s, a, b)`: last exactly observed state and the two
/// decisions applied since.
pub type Info = (usize, u32, u32);

/// Rational copy of a transition model.
#[derive(Debug, Clone)]
pub struct ExactModel {
    pub n_states: usize,
    pub n_decisions: usize,
    /// `p[δ][s]` lists `(s', P(δ)[s, s'])`.
    pub p: Vec<Vec<Vec<(usize, Q)>>>,
    pub g: Vec<Vec<Q>>,
    pub g_pu: Vec<Vec<Q>>,
}

/// A point `(V, V_P)`.
pub type Point = (Q, Q);

impl ExactModel {
    pub fn from_model(model: &TransitionModel) -> Result<Self> {
        let (n, d) = (model.n_states(), model.n_decisions());
        if n > MAX_STATES {
            return Err(Error::Config(format!("exact oracle refuses {n} > {MAX_STATES} states")));
        }
        let mut p = Vec::with_capacity(d);
        let mut g = Vec::with_capacity(d);
        let mut g_pu = Vec::with_capacity(d);
        for delta in 0..d as u32 {
            let m = model.matrix(delta);
            p.push(
                (0..n)
                    .map(|s| m.row(s).map(|(c, v)| Ok((c, rational(v)?))).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?,
            );
            g.push(model.g(delta).iter().map(|&x| rational(x)).collect::<Result<Vec<_>>>()?);
            g_pu.push(model.g_pu(delta).iter().map(|&x| rational(x)).collect::<Result<Vec<_>>>()?);
        }
        Ok(Self {
            n_states: n,
            n_decisions: d,
            p,
            g,
            g_pu,
        })
    }

    /// Expected `(g, g_P)` of decision `delta` from information state `x`.
    pub fn reward(&self, x: Info, delta: u32) -> Point {
        let (s, a, b) = x;
        let mut v = Q::zero();
        let mut vp = Q::zero();
        for (s1, p1) in &self.p[a as usize][s] {
            for (s2, p2) in &self.p[b as usize][*s1] {
                let w = p1 * p2;
                v += &w * &self.g[delta as usize][*s2];
                vp += &w * &self.g_pu[delta as usize][*s2];
            }
        }
        (v, vp)
    }

    /// Successor information states and their probabilities.
    pub fn successors(&self, x: Info, delta: u32) -> Vec<(Info, Q)> {
        let (s, a, b) = x;
        self.p[a as usize][s]
            .iter()
            .map(|(s1, p)| ((*s1, b, delta), p.clone()))
            .collect()
    }

    /// Exact value pair of a deterministic decision rule.
    pub fn evaluate(&self, x: Info, t: usize, horizon: usize, rule: &dyn Fn(usize, Info) -> u32) -> Point {
        if t >= horizon {
            return (Q::zero(), Q::zero());
        }
        let delta = rule(t, x);
        let (mut v, mut vp) = self.reward(x, delta);
        for (next, p) in self.successors(x, delta) {
            let (a, b) = self.evaluate(next, t + 1, horizon, rule);
            v += &p * a;
            vp += &p * b;
        }
        (v, vp)
    }

    /// Primary value of staying silent throughout.
    pub fn silent_pu_value(&self, x: Info, t: usize, horizon: usize) -> Q {
        self.evaluate(x, t, horizon, &|_, _| 0).1
    }

    /// North-east frontier of achievable pairs by dynamic programming.
    pub fn frontier(&self, x: Info, t: usize, horizon: usize) -> Vec<Point> {
        if t >= horizon {
            return vec![(Q::zero(), Q::zero())];
        }
        let mut all = Vec::new();
        for delta in 0..self.n_decisions as u32 {
            let mut acc = vec![self.reward(x, delta)];
            for (next, p) in self.successors(x, delta) {
                let sub: Vec<Point> = self
                    .frontier(next, t + 1, horizon)
                    .into_iter()
                    .map(|(a, b)| (&p * a, &p * b))
                    .collect();
                acc = minkowski(&acc, &sub);
            }
            all.extend(acc);
        }
        ne_hull(all)
    }

    /// Pairs of every deterministic history-dependent policy.
    pub fn enumerate(&self, x: Info, t: usize, horizon: usize) -> Vec<Point> {
        if t >= horizon {
            return vec![(Q::zero(), Q::zero())];
        }
        let mut all = Vec::new();
        for delta in 0..self.n_decisions as u32 {
            let mut acc = vec![self.reward(x, delta)];
            for (next, p) in self.successors(x, delta) {
                let sub = self.enumerate(next, t + 1, horizon);
                let mut grown = Vec::with_capacity(acc.len() * sub.len());
                for (a, b) in &acc {
                    for (c, d) in &sub {
                        grown.push((a + &p * c, b + &p * d));
                    }
                }
                grown.sort();
                grown.dedup();
                acc = grown;
            }
            all.extend(acc);
        }
        all
    }
}

fn minkowski(a: &[Point], b: &[Point]) -> Vec<Point> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (x, y) in a {
        for (u, v) in b {
            out.push((x + u, y + v));
        }
    }
    ne_hull(out)
}

fn cross(o: &Point, a: &Point, b: &Point) -> Q {
    (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
}

/// Vertices of the north-east frontier of the convex hull, sorted by
/// increasing `V` (and therefore decreasing `V_P`).
pub fn ne_hull(mut points: Vec<Point>) -> Vec<Point> {
    points.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)));
    let mut pareto: Vec<Point> = Vec::new();
    for p in points {
        if pareto.last().is_none_or(|last| p.1 > last.1) {
            pareto.push(p);
        }
    }
    pareto.reverse();
    let mut hull: Vec<Point> = Vec::new();
    for p in pareto {
        while hull.len() >= 2 && !cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p).is_negative() {
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

/// Largest `V` on the hull of `points` with `V_P >= need`.
pub fn constrained_max(points: &[Point], need: &Q) -> Option<Q> {
    let hull = ne_hull(points.to_vec());
    let mut best: Option<Q> = None;
    for w in hull.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        if &hi.1 >= need {
            continue;
        }
        if &lo.1 >= need {
            // Interpolate where the edge crosses `V_P = need`.
            let frac = (&lo.1 - need) / (&lo.1 - &hi.1);
            return Some(&lo.0 + frac * (&hi.0 - &lo.0));
        }
    }
    for p in &hull {
        if &p.1 >= need && best.as_ref().is_none_or(|b| &p.0 > b) {
            best = Some(p.0.clone());
        }
    }
    best
}

/// Exact constrained optimum, unconstrained optimum and the plan's exact
/// value pair from one information state.
#[derive(Debug, Clone)]
pub struct Sandwich {
    pub silent_pu: Q,
    pub optimum: Q,
    pub unconstrained: Q,
    pub plan: Point,
}

pub fn sandwich(model: &TransitionModel, plan: &PlanTable, x: Info) -> Result<Sandwich> {
    let horizon = plan.horizon;
    if horizon > MAX_HORIZON {
        return Err(Error::Config(format!("exact oracle refuses horizon {horizon}")));
    }
    let exact = ExactModel::from_model(model)?;
    let silent_pu = exact.silent_pu_value(x, 0, horizon);
    let frontier = exact.frontier(x, 0, horizon);
    let need = rational(plan.beta)? * &silent_pu;
    let optimum = constrained_max(&frontier, &need)
        .ok_or_else(|| Error::Numerical("silent policy missing from the frontier".into()))?;
    let unconstrained = frontier
        .iter()
        .map(|p| p.0.clone())
        .max()
        .unwrap_or_else(Q::zero);
    let basis = &plan.basis;
    let plan_point = exact.evaluate(x, 0, horizon, &|t, (s, a, b)| plan.decision(t, basis.index(s, a, b)));
    Ok(Sandwich {
        silent_pu,
        optimum,
        unconstrained,
        plan: plan_point,
    })
}

pub fn to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Finite-horizon value of the belief-space dynamic program with
/// observations quantized to a few levels, without constraints.
///
/// `levels[δ][s]` is the distribution of the quantized measurement taken in
/// state `s` under decision `δ`.
#[derive(Debug, Clone)]
pub struct QuantizedPomdp<'a> {
    pub model: &'a TransitionModel,
    pub levels: Vec<Vec<Vec<f64>>>,
}

impl QuantizedPomdp<'_> {
    pub fn validate(&self, horizon: usize) -> Result<()> {
        if self.model.n_states() > MAX_STATES || horizon > MAX_HORIZON {
            return Err(Error::Config("quantized oracle size caps exceeded".into()));
        }
        if self.levels.iter().flatten().any(|l| l.len() > 5) {
            return Err(Error::Config("at most 5 observation levels are supported".into()));
        }
        Ok(())
    }

    /// `V_t(ω)` where `ω` is the belief over the state of slot `t`.
    pub fn value(&self, omega: &[f64], t: usize, horizon: usize) -> Result<f64> {
        if t >= horizon {
            return Ok(0.0);
        }
        let model = self.model;
        let mut best = f64::NEG_INFINITY;
        for delta in 0..model.n_decisions() as u32 {
            let mut q = dot(omega, &model.g(delta));
            let obs = &self.levels[delta as usize];
            for level in 0..obs[0].len() {
                let joint: Vec<f64> = omega.iter().enumerate().map(|(s, &w)| w * obs[s][level]).collect();
                let mass: f64 = joint.iter().sum();
                if mass <= 0.0 {
                    continue;
                }
                let post = renormalize(joint)?;
                q += mass * self.value(&model.predict(&post, delta), t + 1, horizon)?;
            }
            best = best.max(q);
        }
        Ok(best)
    }
}

/// Measurement-level probabilities for Gaussian noise around `mean`,
/// quantized with the given interior cut points.
pub fn quantize_gaussian(mean: f64, sigma: f64, cuts: &[f64]) -> Vec<f64> {
    let cdf = |x: f64| 1.0 - crate::channel::q_function((x - mean) / sigma);
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut prev = 0.0;
    for &c in cuts {
        let here = cdf(c);
        out.push(here - prev);
        prev = here;
    }
    out.push(1.0 - prev);
    out
}
