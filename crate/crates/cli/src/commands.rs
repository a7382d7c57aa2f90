use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use spad_gate_core::link::{sweep, BerPoint, SweepAxis};
use spad_gate_core::mc::{
    estimate_ber_mc_with, estimate_moments_mc, random_bits, trace_frame, write_trace, BerEstimate,
    ReceiverModel,
};
use spad_gate_core::photon_stats::count_stats;

use crate::config::{Grid, Mode, Scenario, NS};
use crate::error::CliError;

pub const BER_HEADER: [&str; 9] = [
    "axis_value",
    "ber_analytic",
    "ber_mc",
    "mc_halfwidth",
    "tg_star",
    "u0",
    "u1",
    "var0",
    "var1",
];

/// One CSV row. `tg_star` is the gate-ON time (ns) the point was evaluated
/// at: the optimum under the optimized policy. Moments are per pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerRow {
    pub axis_value: f64,
    pub ber_analytic: f64,
    pub ber_mc: Option<f64>,
    pub mc_halfwidth: Option<f64>,
    pub tg_star: f64,
    pub u0: f64,
    pub u1: f64,
    pub var0: f64,
    pub var1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerTable {
    pub rows: Vec<BerRow>,
    pub warnings: Vec<String>,
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out)
}

pub fn write_rows<W: Write, R: Serialize>(
    out: W,
    header: &[&str],
    rows: &[R],
) -> Result<(), CliError> {
    let mut w = csv_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Error count below which a simulated BER gets a precision warning.
pub const TARGET_ERRORS: u64 = 100;

fn point_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

fn model_at(s: &Scenario, value: f64, p: &BerPoint) -> Result<ReceiverModel, CliError> {
    let link = match s.axis {
        SweepAxis::GateOn => s.link,
        SweepAxis::ReceivedPower => s.link.with_received_power(value),
    };
    Ok(ReceiverModel::from_link(&link, p.gate_on)?)
}

pub fn ber_table(s: &Scenario) -> Result<BerTable, CliError> {
    let points = sweep(&s.link, s.axis, &s.values, s.policy)?;
    let mut rows = Vec::with_capacity(points.len());
    let mut warnings = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let mc: Option<BerEstimate> = match s.mode {
            Mode::Analytic => None,
            Mode::Mc | Mode::Both => {
                let model = model_at(s, s.values[i], p)?;
                Some(estimate_ber_mc_with(&model, &s.mc, point_seed(s.seed, i))?)
            }
        };
        if let Some(est) = mc.filter(|e| e.errors < TARGET_ERRORS) {
            warnings.push(format!(
                "axis_value {}: only {} errors in {} bits, MC BER is imprecise",
                s.axis_values[i], est.errors, est.bits
            ));
        }
        rows.push(BerRow {
            axis_value: s.axis_values[i],
            ber_analytic: p.ber_analytic,
            ber_mc: mc.map(|e| e.ber),
            mc_halfwidth: mc.map(|e| e.halfwidth),
            // Gates sit on a whole-picosecond grid.
            tg_star: (p.gate_on / NS * 1e3).round() / 1e3,
            u0: p.zero.mean,
            u1: p.one.mean,
            var0: p.zero.variance,
            var1: p.one.variance,
        });
    }
    Ok(BerTable { rows, warnings })
}

pub fn ber_summary(table: &BerTable) -> Vec<String> {
    let mut lines = vec![format!("{} points", table.rows.len())];
    if let Some(best) = table
        .rows
        .iter()
        .min_by(|a, b| a.ber_analytic.total_cmp(&b.ber_analytic))
    {
        lines.push(format!(
            "lowest analytic BER {:.3e} at axis_value {} (gate-ON {:.2} ns)",
            best.ber_analytic, best.axis_value, best.tg_star
        ));
    }
    lines.extend(table.warnings.iter().map(|w| format!("warning: {w}")));
    lines
}

/// Event trace of the scenario's first point.
pub fn write_scenario_trace(s: &Scenario, path: &Path) -> Result<String, CliError> {
    let Some(&first) = s.values.first() else {
        return Ok("empty sweep, no trace written".into());
    };
    let p = sweep(&s.link, s.axis, &[first], s.policy)?[0];
    let model = model_at(s, first, &p)?;
    let bits = random_bits(s.trace_symbols, s.seed);
    let records = trace_frame(&model, &bits, s.seed)?;
    let mut out = create(path)?;
    write_trace(&records, &mut out)?;
    out.flush()?;
    Ok(format!(
        "trace of {} symbols × {} pixels written to {}",
        bits.len(),
        model.pixels,
        path.display()
    ))
}

pub const STATS_HEADER: [&str; 9] = [
    "rate_hz",
    "gate_on_ns",
    "mean",
    "second_moment",
    "variance",
    "mc_mean",
    "mc_mean_se",
    "mc_variance",
    "mc_variance_se",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatsRow {
    pub rate_hz: f64,
    pub gate_on_ns: f64,
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    pub mc_mean: Option<f64>,
    pub mc_mean_se: Option<f64>,
    pub mc_variance: Option<f64>,
    pub mc_variance_se: Option<f64>,
}

pub fn stats_rows(grid: &Grid) -> Result<Vec<StatsRow>, CliError> {
    grid.points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let s = count_stats(p.rate, &p.timing)?;
            let mc = grid
                .trials
                .map(|n| estimate_moments_mc(p.rate, &p.mc_timing, n, point_seed(grid.seed, i)))
                .transpose()?;
            Ok(StatsRow {
                rate_hz: p.rate.hz(),
                gate_on_ns: p.gate_on_ns,
                mean: s.mean,
                second_moment: s.second_moment,
                variance: s.variance,
                mc_mean: mc.map(|m| m.stats.mean),
                mc_mean_se: mc.map(|m| m.mean_se),
                mc_variance: mc.map(|m| m.stats.variance),
                mc_variance_se: mc.map(|m| m.variance_se),
            })
        })
        .collect()
}

pub const VALIDATE_HEADER: [&str; 9] = [
    "rate_hz",
    "gate_on_ns",
    "mean",
    "mc_mean",
    "z_mean",
    "variance",
    "mc_variance",
    "z_variance",
    "pass",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidateRow {
    pub rate_hz: f64,
    pub gate_on_ns: f64,
    pub mean: f64,
    pub mc_mean: f64,
    pub z_mean: f64,
    pub variance: f64,
    pub mc_variance: f64,
    pub z_variance: f64,
    pub pass: bool,
}

pub const MAX_Z: f64 = 4.0;

// |a - b| in units of `se`; a zero standard error only passes an exact match.
fn z_score(a: f64, b: f64, se: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else if se > 0.0 {
        d / se
    } else {
        f64::INFINITY
    }
}

pub fn validate_rows(grid: &Grid) -> Result<Vec<ValidateRow>, CliError> {
    if grid.points.is_empty() {
        return Err(CliError::Config {
            field: "rates_hz".into(),
            message: "validation grid is empty".into(),
        });
    }
    let Some(trials) = grid.trials else {
        return Err(CliError::Config {
            field: "trials".into(),
            message: "required for validate".into(),
        });
    };
    grid.points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let s = count_stats(p.rate, &p.timing)?;
            let mc = estimate_moments_mc(p.rate, &p.mc_timing, trials, point_seed(grid.seed, i))?;
            let z_mean = z_score(s.mean, mc.stats.mean, mc.mean_se);
            let z_variance = z_score(s.variance, mc.stats.variance, mc.variance_se);
            Ok(ValidateRow {
                rate_hz: p.rate.hz(),
                gate_on_ns: p.gate_on_ns,
                mean: s.mean,
                mc_mean: mc.stats.mean,
                z_mean,
                variance: s.variance,
                mc_variance: mc.stats.variance,
                z_variance,
                pass: z_mean <= MAX_Z && z_variance <= MAX_Z,
            })
        })
        .collect()
}

pub fn validate_report(rows: &[ValidateRow]) -> Vec<String> {
    let mut lines = vec![format!(
        "{:>12} {:>10} {:>8} {:>8}  result",
        "rate_hz", "gate_on_ns", "z_mean", "z_var"
    )];
    for r in rows {
        lines.push(format!(
            "{:>12.4e} {:>10} {:>8.2} {:>8.2}  {}",
            r.rate_hz,
            r.gate_on_ns,
            r.z_mean,
            r.z_variance,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    lines.push(if failed == 0 {
        format!(
            "PASS: all {} points within {MAX_Z} standard errors",
            rows.len()
        )
    } else {
        format!(
            "FAIL: {failed} of {} points beyond {MAX_Z} standard errors",
            rows.len()
        )
    });
    lines
}
