//! Scenario preparation, Monte Carlo episodes and sweeps.
//!
//! Every run draws from three independent ChaCha streams derived from its
//! seed: the environment (arrivals and packet losses), the observation
//! noise and the scheme's own randomization. Schemes run with equal seeds
//! therefore face identical traffic and channel realizations.

pub mod config;
pub mod export;
pub mod metrics;
pub mod sweep;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{AlignmentPolicy, Occupancy, ThresholdPolicy};
use crate::central::{offline_plan, CentralController, PlanOptions, PlanTable};
use crate::decentral::{optimize_packet_size, plan_all, DecentralController, LocalModel, LocalPlan, PacketSizePlan};
use crate::error::{Error, Result};
use crate::netmodel::{simulate_slot, Network, NetworkSpec, Scope, SensingModel, TransitionModel};
use crate::policy::{Policy, Silent, SlotContext};

pub use config::{ScenarioConfig, Scheme, TopologyConfig};
pub use metrics::{Estimate, RunMetrics, Summary};

pub const ENV_STREAM: u64 = 0;
pub const OBS_STREAM: u64 = 1;
pub const POLICY_STREAM: u64 = 2;

/// Generator for one purpose within one run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed of run `run` of a scenario seeded with `base`.
pub fn run_seed(base: u64, run: usize) -> u64 {
    base.wrapping_add(run as u64)
}

/// One physical network with its ground-truth model and sensors.
#[derive(Debug, Clone)]
pub struct Arm {
    pub network: Network,
    pub model: TransitionModel,
    pub sensing: SensingModel,
    /// Per-secondary packet-size choices when optimization is enabled.
    pub packet_plans: Vec<PacketSizePlan>,
}

impl Arm {
    /// Builds the network; with `optimize` each secondary packet is resized
    /// by the throughput LP before the models are built.
    pub fn build(spec: NetworkSpec, config: &ScenarioConfig, reuse: bool) -> Result<Self> {
        let mut network = Network::build(spec)?;
        let mut packet_plans = Vec::new();
        if config.packets.optimize {
            for i in 0..network.n_su {
                let max_bits = network.spec.su_packet_bits[i];
                packet_plans.push(optimize_packet_size(
                    &network,
                    config.traffic,
                    i,
                    max_bits,
                    config.beta,
                    reuse,
                    config.state_cap,
                )?);
            }
            let bits: Vec<u64> = packet_plans.iter().map(|p| p.chosen_bits).collect();
            network = network.with_su_packet_bits(&bits)?;
        }
        let model = TransitionModel::build(&network, config.traffic, Scope::full(&network), config.state_cap)?;
        let sensing = SensingModel::build(&network, config.observation_sigma)?;
        Ok(Self {
            network,
            model,
            sensing,
            packet_plans,
        })
    }
}

/// Offline artefacts of one scheme.
#[derive(Debug, Clone)]
pub enum SchemePlan {
    Central(Box<PlanTable>),
    Decentral(Vec<LocalModel>, Vec<LocalPlan>),
    Threshold(Vec<LocalModel>, Occupancy),
    Alignment,
    Silent,
}

impl SchemePlan {
    pub fn build(scheme: Scheme, arm: &Arm, config: &ScenarioConfig) -> Result<Self> {
        let horizon = config.slotting.horizon;
        let locals = || {
            (0..arm.network.n_su)
                .map(|i| LocalModel::build(&arm.network, config.traffic, &arm.sensing, i, config.state_cap))
                .collect::<Result<Vec<_>>>()
        };
        Ok(match scheme {
            Scheme::Ccts => SchemePlan::Central(Box::new(offline_plan(
                &arm.model,
                horizon,
                config.beta,
                PlanOptions::default(),
            )?)),
            Scheme::Dcts | Scheme::DctsFdm => {
                let reuse = scheme == Scheme::Dcts;
                let (l, p) = plan_all(
                    &arm.network,
                    config.traffic,
                    &arm.sensing,
                    horizon,
                    config.beta,
                    reuse,
                    config.state_cap,
                )?;
                SchemePlan::Decentral(l, p)
            }
            Scheme::Ctdm => SchemePlan::Threshold(locals()?, Occupancy::AllWithReuse),
            Scheme::Cfdm => SchemePlan::Threshold(locals()?, Occupancy::SameChannel),
            Scheme::Ia => SchemePlan::Alignment,
            Scheme::Silent => SchemePlan::Silent,
        })
    }

    /// A fresh runtime controller.
    pub fn policy<'a>(&'a self, arm: &'a Arm, config: &ScenarioConfig) -> Box<dyn Policy + 'a> {
        match self {
            SchemePlan::Central(plan) => Box::new(CentralController::new(&arm.model, &arm.sensing, plan)),
            SchemePlan::Decentral(locals, plans) => Box::new(DecentralController::new(locals, plans)),
            SchemePlan::Threshold(locals, mode) => Box::new(ThresholdPolicy::new(locals, config.beta, *mode)),
            SchemePlan::Alignment => Box::new(AlignmentPolicy::new(&arm.network, &arm.model, config.alignment)),
            SchemePlan::Silent => Box::new(Silent),
        }
    }
}

/// Secondary bits that land inside the reception windows of the primary
/// hops in `pu_tx`; masks are chain indices.
pub fn overlap_bits(network: &Network, pu_tx: u64, su_tx: u64) -> u64 {
    let mut total = 0;
    for i in (0..network.n_su).filter(|i| su_tx >> i & 1 == 1) {
        for j in (0..network.n_pu).filter(|j| pu_tx >> j & 1 == 1) {
            if let Some(e) = network.overlap.entry(network.su_hop(i), network.pu_hop(j)) {
                total += e.bits.1 + 1 - e.bits.0;
            }
        }
    }
    total
}

/// Plays one episode of `horizon` slots from the idle initial state.
pub fn run_episode(arm: &Arm, policy: &mut dyn Policy, run: usize, seed: u64, horizon: usize) -> Result<RunMetrics> {
    let mut env = stream_rng(seed, ENV_STREAM);
    let mut obs = stream_rng(seed, OBS_STREAM);
    let mut own = stream_rng(seed, POLICY_STREAM);
    let model = &arm.model;
    let (m, n) = (arm.network.n_pu, arm.network.n_su);
    let mask = (1u32 << n) - 1;
    let mut si = model.space.initial_index();
    let mut metrics = RunMetrics {
        run,
        seed,
        slots: horizon,
        pu_bits: 0,
        su_bits: 0,
        su_active_slots: 0,
        su_overlap_bits: 0,
    };
    for t in 0..horizon {
        let s = model.space.state(si);
        let ctx = SlotContext {
            t,
            state: s,
            buffers: s.su & mask,
        };
        let delta = policy.decide(&ctx, &mut own)? & ctx.buffers;
        let tx = model.transmitting(s, delta);
        let (pu_tx, su_tx) = (tx & ((1 << m) - 1), tx >> m);
        if su_tx != 0 {
            metrics.su_active_slots += 1;
        }
        metrics.su_overlap_bits += overlap_bits(&arm.network, pu_tx, su_tx);
        let step = simulate_slot(model, si, delta, &mut env)?;
        metrics.pu_bits += step.pu_bits;
        metrics.su_bits += step.su_bits;
        let y = arm.sensing.observe(pu_tx, su_tx, &mut obs);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite measurement in slot {t}")));
        }
        policy.observe(t, &y)?;
        si = step.next;
    }
    Ok(metrics)
}

/// Runs `config.runs` seeded episodes in parallel; results are in run order.
pub fn run_many(arm: &Arm, plan: &SchemePlan, config: &ScenarioConfig) -> Result<Vec<RunMetrics>> {
    (0..config.runs)
        .into_par_iter()
        .map(|r| {
            let mut policy = plan.policy(arm, config);
            run_episode(arm, policy.as_mut(), r, run_seed(config.seed, r), config.slotting.horizon)
        })
        .collect()
}

/// Networks of a scenario; the frequency-division one is built on demand.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub tdm: Arm,
    pub fdm: Option<Arm>,
}

impl Scenario {
    pub fn build(config: ScenarioConfig, with_fdm: bool) -> Result<Self> {
        config.validate()?;
        let tdm = Arm::build(config.network_spec()?, &config, true)?;
        let fdm = if with_fdm {
            Some(Arm::build(config.fdm_network_spec()?, &config, false)?)
        } else {
            None
        };
        Ok(Self { config, tdm, fdm })
    }

    pub fn arm(&self, scheme: Scheme) -> Result<&Arm> {
        if scheme.uses_fdm() {
            self.fdm
                .as_ref()
                .ok_or_else(|| Error::Contract(format!("{scheme} needs the frequency-division network")))
        } else {
            Ok(&self.tdm)
        }
    }
}

/// Runs of one scheme next to the silent runs of the same network.
#[derive(Debug, Clone)]
pub struct SchemeResult {
    pub scheme: Scheme,
    pub runs: Vec<RunMetrics>,
    pub silent: Vec<RunMetrics>,
    pub summary: Summary,
}

/// Plans and simulates each scheme, each against its matched silent runs.
pub fn evaluate(scenario: &Scenario, schemes: &[Scheme]) -> Result<Vec<SchemeResult>> {
    let config = &scenario.config;
    let silent_for = |arm: &Arm| run_many(arm, &SchemePlan::Silent, config);
    let tdm_silent = silent_for(&scenario.tdm)?;
    let fdm_silent = match &scenario.fdm {
        Some(arm) if schemes.iter().any(|s| s.uses_fdm()) => Some(silent_for(arm)?),
        _ => None,
    };
    let bandwidth_hz = config.radio.bandwidth_khz * 1e3;
    schemes
        .iter()
        .map(|&scheme| {
            let arm = scenario.arm(scheme)?;
            let silent = if scheme.uses_fdm() {
                fdm_silent.clone().expect("built with the fdm arm")
            } else {
                tdm_silent.clone()
            };
            let runs = if scheme == Scheme::Silent {
                silent.clone()
            } else {
                let plan = SchemePlan::build(scheme, arm, config).map_err(|e| e.context(scheme))?;
                run_many(arm, &plan, config)?
            };
            let summary = Summary::build(&runs, &silent, config.slotting.slot_length, bandwidth_hz)?;
            Ok(SchemeResult {
                scheme,
                runs,
                silent,
                summary,
            })
        })
        .collect()
}
