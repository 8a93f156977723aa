//! Command-line driver: plans, simulates and sweeps scheduling scenarios
//! described by JSON configuration files and writes CSV results.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uwsched::central::{offline_plan, PlanOptions};
use uwsched::decentral::{optimize_packet_size, plan_all, PacketSizePlan};
use uwsched::harness::config::{FULL_HORIZON, FULL_RUNS};
use uwsched::harness::export::{write_csv, write_json, write_model, write_plan, write_sweep};
use uwsched::harness::sweep::{run_single, run_sweep, Axis, SweepPoint};
use uwsched::harness::{Arm, ScenarioConfig, Scheme};
use uwsched::netmodel::Network;
use uwsched::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "uwsched", version, about = "Cognitive underwater network scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute and dump the offline plan of a scheme.
    Plan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "ccts")]
        scheme: Scheme,
    },
    /// Simulate one or more schemes on a scenario.
    Run {
        #[command(flatten)]
        common: Common,
        /// Scheme to run; every scheme when omitted.
        #[arg(long)]
        scheme: Vec<Scheme>,
    },
    /// Simulate schemes across values of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long = "sweep")]
        axis: Axis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        scheme: Vec<Scheme>,
    },
    /// Choose secondary packet sizes with the throughput LP.
    OptimizePackets {
        #[command(flatten)]
        common: Common,
        /// `dcts` sizes for the shared band, `dcts-fdm` for sub-channels.
        #[arg(long, default_value = "dcts")]
        scheme: Scheme,
    },
    /// Write the enumerated Markov model and link tables.
    DumpModel {
        #[command(flatten)]
        common: Common,
        /// Dump the frequency-division network instead.
        #[arg(long, default_value = "ccts")]
        scheme: Scheme,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// JSON scenario file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Full-size horizon and run count.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn scenario(&self) -> Result<ScenarioConfig> {
        let mut config = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default(),
        };
        if self.paper_scale {
            config.slotting.horizon = FULL_HORIZON;
            config.runs = FULL_RUNS;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(runs) = self.runs {
            config.runs = runs;
        }
        if let Some(horizon) = self.horizon {
            config.slotting.horizon = horizon;
        }
        config.validate()?;
        Ok(config)
    }

    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out)?;
        Ok(&self.out)
    }
}

fn schemes_or_all(schemes: &[Scheme]) -> Vec<Scheme> {
    if schemes.is_empty() {
        Scheme::ALL.to_vec()
    } else {
        let mut v = schemes.to_vec();
        v.dedup();
        v
    }
}

fn arm_for(config: &ScenarioConfig, scheme: Scheme) -> Result<Arm> {
    if scheme.uses_fdm() {
        Arm::build(config.fdm_network_spec()?, config, false)
    } else {
        Arm::build(config.network_spec()?, config, true)
    }
}

fn print_points(points: &[SweepPoint]) {
    println!(
        "{:>10} {:>8} {:>9} {:>10} {:>10} {:>10} {:>9}",
        "axis", "value", "scheme", "pu", "su", "total", "pu_ratio"
    );
    for p in points {
        for r in &p.results {
            let s = &r.summary;
            println!(
                "{:>10} {:>8} {:>9} {:>10.1} {:>10.1} {:>10.1} {:>9.3}",
                p.axis_name(),
                p.value,
                r.scheme.name(),
                s.pu.mean,
                s.su.mean,
                s.total.mean,
                s.pu_ratio.mean
            );
        }
    }
}

fn plan(common: &Common, scheme: Scheme) -> Result<()> {
    let config = common.scenario()?;
    let arm = arm_for(&config, scheme)?;
    let out = common.out_dir()?;
    match scheme {
        Scheme::Ccts => {
            let table = offline_plan(&arm.model, config.slotting.horizon, config.beta, PlanOptions::default())?;
            let path = out.join("plan_ccts.csv");
            write_plan(&path, &table)?;
            println!("{} basis beliefs, slot-0 plan written to {}", table.basis.len(), path.display());
        }
        Scheme::Dcts | Scheme::DctsFdm => {
            let (locals, plans) = plan_all(
                &arm.network,
                config.traffic,
                &arm.sensing,
                config.slotting.horizon,
                config.beta,
                scheme == Scheme::Dcts,
                config.state_cap,
            )?;
            let rows: Vec<_> = locals.iter().zip(&plans).flat_map(|(l, p)| p.rows(l)).collect();
            let path = out.join(format!("plan_{scheme}.csv"));
            write_csv(&path, &rows)?;
            for l in &locals {
                println!("secondary hop {}: {} local states, primaries {:?}", l.su, l.n_states(), l.pu_range);
            }
            println!("local plans written to {}", path.display());
        }
        other => {
            return Err(Error::Config(format!("{other} has no offline plan; use ccts, dcts or dcts-fdm")));
        }
    }
    Ok(())
}

fn run(common: &Common, schemes: &[Scheme]) -> Result<()> {
    let config = common.scenario()?;
    let point = run_single(config, &schemes_or_all(schemes))?;
    let points = [point];
    write_sweep(common.out_dir()?, &points)?;
    print_points(&points);
    Ok(())
}

fn sweep(common: &Common, axis: Axis, values: &[f64], schemes: &[Scheme]) -> Result<()> {
    let config = common.scenario()?;
    let points = run_sweep(&config, axis, values, &schemes_or_all(schemes))?;
    write_sweep(common.out_dir()?, &points)?;
    print_points(&points);
    Ok(())
}

#[derive(Default, serde::Serialize)]
struct PacketRow {
    su: usize,
    candidate_bits: u64,
    objective: f64,
    chosen: bool,
}

fn optimize_packets(common: &Common, scheme: Scheme) -> Result<()> {
    if !matches!(scheme, Scheme::Dcts | Scheme::DctsFdm) {
        return Err(Error::Config(format!("packet sizes are optimized for dcts or dcts-fdm, not {scheme}")));
    }
    let config = common.scenario()?;
    let spec = if scheme.uses_fdm() {
        config.fdm_network_spec()?
    } else {
        config.network_spec()?
    };
    let network = Network::build(spec)?;
    let plans: Vec<PacketSizePlan> = (0..network.n_su)
        .map(|i| {
            optimize_packet_size(
                &network,
                config.traffic,
                i,
                network.spec.su_packet_bits[i],
                config.beta,
                scheme == Scheme::Dcts,
                config.state_cap,
            )
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for p in &plans {
        println!("secondary hop {}: {} bits (objective {:.3} bits/slot)", p.su, p.chosen_bits, p.objective);
        for (&bits, &objective) in p.candidates.iter().zip(&p.objectives) {
            rows.push(PacketRow {
                su: p.su,
                candidate_bits: bits,
                objective,
                chosen: bits == p.chosen_bits,
            });
        }
    }
    write_csv(&common.out_dir()?.join("packet_sizes.csv"), &rows)
}

#[derive(Default, serde::Serialize)]
struct OverlapRow {
    interferer: usize,
    victim: usize,
    offset_s: f64,
    first_bit: u64,
    last_bit: u64,
    power: f64,
    blocking: bool,
}

#[derive(Default, serde::Serialize)]
struct LinkRow {
    hop: usize,
    chain: String,
    index: usize,
    length_m: f64,
    packet_bits: u64,
    carrier: usize,
    mu_ln: f64,
    sigma_ln: f64,
    lone_loss: f64,
}

fn dump_model(common: &Common, scheme: Scheme) -> Result<()> {
    let config = common.scenario()?;
    let arm = arm_for(&config, scheme)?;
    let out = common.out_dir()?;
    write_model(out, &arm.model)?;
    let network = &arm.network;
    let overlaps: Vec<OverlapRow> = network
        .overlap
        .entries()
        .map(|e| OverlapRow {
            interferer: e.interferer,
            victim: e.victim,
            offset_s: e.offset,
            first_bit: e.bits.0,
            last_bit: e.bits.1,
            power: e.power,
            blocking: e.blocking,
        })
        .collect();
    write_csv(&out.join("overlap.csv"), &overlaps)?;
    let links = (0..network.n_hops())
        .map(|u| {
            let hop = &network.hops[u];
            let (chain, index) = if u < network.n_pu { ("pu", u) } else { ("su", u - network.n_pu) };
            Ok(LinkRow {
                hop: u,
                chain: chain.into(),
                index,
                length_m: hop.length,
                packet_bits: hop.packet_bits,
                carrier: hop.carrier,
                mu_ln: network.gains[u].mu_ln,
                sigma_ln: network.gains[u].sigma_ln,
                lone_loss: uwsched::netmodel::packet_loss_for(network, u, 1 << u)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_csv(&out.join("links.csv"), &links)?;
    write_json(&out.join("config.json"), &config)?;
    println!(
        "{} states, {} decisions, {} overlaps written to {}",
        arm.model.n_states(),
        arm.model.n_decisions(),
        network.overlap.entries().count(),
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan { common, scheme } => plan(common, *scheme),
        Command::Run { common, scheme } => run(common, scheme),
        Command::Sweep {
            common,
            axis,
            values,
            scheme,
        } => sweep(common, *axis, values, scheme),
        Command::OptimizePackets { common, scheme } => optimize_packets(common, *scheme),
        Command::DumpModel { common, scheme } => dump_model(common, *scheme),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
