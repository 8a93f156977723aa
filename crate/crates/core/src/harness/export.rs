//! CSV output of sweeps, runs and model dumps.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sweep::SweepPoint;
use crate::central::PlanTable;
use crate::error::Result;
use crate::netmodel::TransitionModel;

/// One scheme at one sweep point, one column per statistic.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub axis: String,
    pub value: f64,
    pub scheme: String,
    pub runs: usize,
    pub pu_mean: f64,
    pub pu_stderr: f64,
    pub su_mean: f64,
    pub su_stderr: f64,
    pub total_mean: f64,
    pub total_stderr: f64,
    pub spectral_efficiency_mean: f64,
    pub spectral_efficiency_stderr: f64,
    pub pu_ratio_mean: f64,
    pub pu_ratio_stderr: f64,
    pub su_overlap_bits_mean: f64,
}

/// Same data with one row per statistic.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LongRow {
    pub axis: String,
    pub value: f64,
    pub scheme: String,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// One episode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub axis: String,
    pub value: f64,
    pub scheme: String,
    pub run: usize,
    pub seed: u64,
    pub slots: usize,
    pub pu_bits: u64,
    pub su_bits: u64,
    pub su_active_slots: usize,
    pub su_overlap_bits: u64,
}

pub fn summary_rows(points: &[SweepPoint]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for p in points {
        for r in &p.results {
            let s = &r.summary;
            rows.push(SummaryRow {
                axis: p.axis_name().to_string(),
                value: p.value,
                scheme: r.scheme.to_string(),
                runs: r.runs.len(),
                pu_mean: s.pu.mean,
                pu_stderr: s.pu.stderr,
                su_mean: s.su.mean,
                su_stderr: s.su.stderr,
                total_mean: s.total.mean,
                total_stderr: s.total.stderr,
                spectral_efficiency_mean: s.spectral_efficiency.mean,
                spectral_efficiency_stderr: s.spectral_efficiency.stderr,
                pu_ratio_mean: s.pu_ratio.mean,
                pu_ratio_stderr: s.pu_ratio.stderr,
                su_overlap_bits_mean: s.su_overlap_bits.mean,
            });
        }
    }
    rows
}

pub fn long_rows(points: &[SweepPoint]) -> Vec<LongRow> {
    let mut rows = Vec::new();
    for p in points {
        for r in &p.results {
            let s = &r.summary;
            let metrics = [
                ("pu_throughput", s.pu),
                ("su_throughput", s.su),
                ("total_throughput", s.total),
                ("spectral_efficiency", s.spectral_efficiency),
                ("pu_ratio", s.pu_ratio),
                ("su_overlap_bits", s.su_overlap_bits),
            ];
            for (metric, e) in metrics {
                rows.push(LongRow {
                    axis: p.axis_name().to_string(),
                    value: p.value,
                    scheme: r.scheme.to_string(),
                    metric: metric.to_string(),
                    mean: e.mean,
                    stderr: e.stderr,
                    n: e.n,
                });
            }
        }
    }
    rows
}

pub fn run_rows(points: &[SweepPoint]) -> Vec<RunRow> {
    let mut rows = Vec::new();
    for p in points {
        for r in &p.results {
            for m in &r.runs {
                rows.push(RunRow {
                    axis: p.axis_name().to_string(),
                    value: p.value,
                    scheme: r.scheme.to_string(),
                    run: m.run,
                    seed: m.seed,
                    slots: m.slots,
                    pu_bits: m.pu_bits,
                    su_bits: m.su_bits,
                    su_active_slots: m.su_active_slots,
                    su_overlap_bits: m.su_overlap_bits,
                });
            }
        }
    }
    rows
}

/// Writes `rows` with a header line; an empty table still gets its header,
/// taken from the default row.
pub fn write_csv<T: Serialize + Default>(path: &Path, rows: &[T]) -> Result<()> {
    if rows.is_empty() {
        let mut probe = csv::Writer::from_writer(Vec::new());
        probe.serialize(T::default())?;
        let bytes = probe.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
        let header = bytes.split_inclusive(|&b| b == b'\n').next().unwrap_or_default();
        std::fs::write(path, header)?;
        return Ok(());
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?)
}

/// Writes `summary.csv`, `summary_long.csv` and `runs.csv` into `dir`.
pub fn write_sweep(dir: &Path, points: &[SweepPoint]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_csv(&dir.join("summary.csv"), &summary_rows(points))?;
    write_csv(&dir.join("summary_long.csv"), &long_rows(points))?;
    write_csv(&dir.join("runs.csv"), &run_rows(points))?;
    Ok(())
}

/// Enumerated states, per-decision transitions and expected throughputs.
pub fn write_model(dir: &Path, model: &TransitionModel) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut states = csv::Writer::from_path(dir.join("states.csv"))?;
    states.write_record(["index", "phase", "pu", "su"])?;
    for (k, s) in model.space.states().iter().enumerate() {
        states.write_record([k.to_string(), s.phase.to_string(), s.pu.to_string(), s.su.to_string()])?;
    }
    states.flush()?;
    let mut tr = csv::Writer::from_path(dir.join("transitions.csv"))?;
    tr.write_record(["decision", "from", "to", "probability"])?;
    let mut gains = csv::Writer::from_path(dir.join("throughput.csv"))?;
    gains.write_record(["decision", "state", "pu_bits", "su_bits"])?;
    for d in 0..model.n_decisions() as u32 {
        let p = model.matrix(d);
        for r in 0..p.rows() {
            for (c, v) in p.row(r) {
                tr.write_record([d.to_string(), r.to_string(), c.to_string(), v.to_string()])?;
            }
            gains.write_record([
                d.to_string(),
                r.to_string(),
                model.g_pu(d)[r].to_string(),
                model.g_su(d)[r].to_string(),
            ])?;
        }
    }
    tr.flush()?;
    gains.flush()?;
    Ok(())
}

/// Decision table of a centralized plan.
pub fn write_plan(path: &Path, plan: &PlanTable) -> Result<()> {
    write_csv(path, &plan.rows())
}

/// Text dump of any serializable value, for `dump-model` style output.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| crate::Error::Parse(e.to_string()))?;
    f.write_all(b"\n")?;
    Ok(())
}
