//! Figure presets. Each one writes its CSV files into an output directory.

use std::fs;
use std::path::Path;

use serde::Serialize;
use spad_gate_core::link::optimize_gate_with;
use spad_gate_core::mc::{estimate_pmf, ReceiverModel};
use spad_gate_core::{GateTiming, RatePair};

use crate::commands::{
    ber_summary, ber_table, create, stats_rows, write_rows, BER_HEADER, STATS_HEADER,
};
use crate::config::{
    GateConfig, GridConfig, LinkConfig, McConfig, Mode, PolicyName, ScenarioConfig, SweepConfig, NS,
};
use crate::error::CliError;

pub const NAMES: [&str; 8] = [
    "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetOptions {
    pub seed: u64,
    /// Bits per simulated BER point; `None` skips the simulation where the
    /// figure has an analytic curve to show.
    pub mc_bits: Option<u64>,
}

const DEAD_TIME_NS: f64 = 10.0;

/// Array size with its symbol period in ns.
#[derive(Debug, Clone, Copy)]
struct Array(u32, f64);

const SMALL: Array = Array(64, 20.0);
const LARGE: Array = Array(1024, 5.0);
const WAVELENGTH_NM: f64 = 785.0;
const PDE: f64 = 0.18;

fn expect(
    preset: &'static str,
    field: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::PresetConstant {
            preset,
            field,
            value,
            expected,
        })
    }
}

// Every link preset uses the same wavelength, PDE and dead time, with either
// the small array at 50 Mbps or the large one at 200 Mbps.
fn check_link(preset: &'static str, l: &LinkConfig) -> Result<(), CliError> {
    expect(
        preset,
        "wavelength_nm",
        l.wavelength_nm,
        l.wavelength_nm == WAVELENGTH_NM,
        "785",
    )?;
    expect(preset, "pde", l.pde, l.pde == PDE, "0.18")?;
    expect(
        preset,
        "dead_time_ns",
        l.dead_time_ns,
        l.dead_time_ns == DEAD_TIME_NS,
        "10",
    )?;
    let pair_ok = matches!((l.array_size, l.symbol_period_ns), (64, 20.0) | (1024, 5.0));
    expect(
        preset,
        "symbol_period_ns",
        l.symbol_period_ns,
        pair_ok,
        "20 for N=64 or 5 for N=1024",
    )
}

fn link(Array(array_size, symbol_period_ns): Array, pr: f64, pb: f64) -> LinkConfig {
    LinkConfig {
        wavelength_nm: WAVELENGTH_NM,
        pde: PDE,
        received_power_nw: pr,
        background_power_nw: pb,
        array_size,
        symbol_period_ns,
        dead_time_ns: DEAD_TIME_NS,
        gate_on_ns: None,
    }
}

// `n` evenly spaced values `step·1 … step·n` written as k/den so that the
// CSV shows 0.3 rather than 0.30000000000000004.
fn ladder(n: u32, den: f64) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / den).collect()
}

struct Writer<'a> {
    dir: &'a Path,
    lines: Vec<String>,
}

impl Writer<'_> {
    fn file(&mut self, name: &str) -> Result<std::io::BufWriter<fs::File>, CliError> {
        let path = self.dir.join(name);
        self.lines.push(format!("wrote {}", path.display()));
        create(&path)
    }
}

fn scenario(
    preset: &'static str,
    link: LinkConfig,
    sweep: SweepConfig,
    policy: PolicyName,
    mc_bits: Option<u64>,
    seed: u64,
) -> Result<ScenarioConfig, CliError> {
    check_link(preset, &link)?;
    Ok(ScenarioConfig {
        link,
        mode: if mc_bits.is_some() {
            Mode::Both
        } else {
            Mode::Analytic
        },
        sweep: Some(sweep),
        gate: GateConfig {
            policy,
            ..GateConfig::default()
        },
        mc: McConfig {
            bits: mc_bits.unwrap_or(100_000),
            seed,
            ..McConfig::default()
        },
    })
}

fn write_ber(w: &mut Writer, name: &str, cfg: &ScenarioConfig) -> Result<(), CliError> {
    let table = ber_table(&cfg.resolve()?)?;
    write_rows(w.file(name)?, &BER_HEADER, &table.rows)?;
    w.lines
        .extend(ber_summary(&table).into_iter().map(|l| format!("  {l}")));
    Ok(())
}

fn fig3(w: &mut Writer, opts: &PresetOptions) -> Result<(), CliError> {
    let grid = GridConfig {
        symbol_period_ns: 20.0,
        dead_time_ns: DEAD_TIME_NS,
        rates_hz: vec![1e7, 1e8, 5e8],
        gate_on_ns: ladder(40, 2.0),
        trials: opts.mc_bits.map(|_| 1_000_000),
        seed: opts.seed,
        mc_dead_time_ns: None,
    };
    expect(
        "fig3",
        "dead_time_ns",
        grid.dead_time_ns,
        grid.dead_time_ns == DEAD_TIME_NS,
        "10",
    )?;
    let rows = stats_rows(&grid.resolve()?)?;
    write_rows(w.file("fig3.csv")?, &STATS_HEADER, &rows)
}

#[derive(Serialize)]
struct PmfRow {
    count: usize,
    pmf_exact_0: f64,
    pmf_approx_0: f64,
    pmf_exact_1: f64,
    pmf_approx_1: f64,
}

fn fig4(w: &mut Writer, opts: &PresetOptions) -> Result<(), CliError> {
    let timing = GateTiming::from_ns(50.0, 50.0, DEAD_TIME_NS)?;
    let model = ReceiverModel::new(RatePair::new(2e7, 7e7)?, 64, timing)?;
    let zero = estimate_pmf(&model, false, 100_000, opts.seed)?;
    let one = estimate_pmf(&model, true, 100_000, opts.seed.wrapping_add(1))?;
    let len = zero.approx.len().max(one.approx.len()) + 20;
    let at = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    let rows: Vec<PmfRow> = (0..len)
        .map(|k| PmfRow {
            count: k,
            pmf_exact_0: at(&zero.exact.probabilities, k),
            pmf_approx_0: at(&zero.approx, k),
            pmf_exact_1: at(&one.exact.probabilities, k),
            pmf_approx_1: at(&one.approx, k),
        })
        .collect();
    write_rows(
        w.file("fig4.csv")?,
        &[
            "count",
            "pmf_exact_0",
            "pmf_approx_0",
            "pmf_exact_1",
            "pmf_approx_1",
        ],
        &rows,
    )?;
    w.lines.push(format!(
        "  bit 1: simulated mean {:.3}, Gaussian mean {:.3}; bit 0: {:.3}, {:.3}",
        one.exact.mean(),
        one.approx_mean,
        zero.exact.mean(),
        zero.approx_mean
    ));
    Ok(())
}

fn ber_vs_gate(
    w: &mut Writer,
    preset: &'static str,
    array: Array,
    pb: f64,
    prs: &[f64],
    gates: Vec<f64>,
    opts: &PresetOptions,
) -> Result<(), CliError> {
    for (i, &pr) in prs.iter().enumerate() {
        let cfg = scenario(
            preset,
            link(array, pr, pb),
            SweepConfig::GateOnNs {
                values: gates.clone(),
            },
            PolicyName::Fixed,
            None,
            opts.seed.wrapping_add(1000 * i as u64),
        )?;
        write_ber(w, &format!("{preset}_pr{pr}.csv"), &cfg)?;
        let best = optimize_gate_with(&cfg.resolve()?.link, &Default::default())?;
        w.lines.push(format!(
            "  P_R={pr} nW: optimum {:.2} ns on the 0.02 ns grid, BER {:.3e}",
            best.gate_on / NS,
            best.ber
        ));
    }
    Ok(())
}

fn optimal_gate(
    w: &mut Writer,
    preset: &'static str,
    array: Array,
    pbs: &[f64],
    prs: Vec<f64>,
    opts: &PresetOptions,
) -> Result<(), CliError> {
    for (i, &pb) in pbs.iter().enumerate() {
        let cfg = scenario(
            preset,
            link(array, prs[0], pb),
            SweepConfig::ReceivedPowerNw {
                values: prs.clone(),
            },
            PolicyName::Optimized,
            None,
            opts.seed.wrapping_add(1000 * i as u64),
        )?;
        write_ber(w, &format!("{preset}_pb{pb}.csv"), &cfg)?;
    }
    Ok(())
}

fn ber_vs_power(
    w: &mut Writer,
    preset: &'static str,
    array: Array,
    pbs: &[f64],
    prs: Vec<f64>,
    opts: &PresetOptions,
) -> Result<(), CliError> {
    let mut k = 0u64;
    for &pb in pbs {
        for (policy, tag) in [
            (PolicyName::Optimized, "gated"),
            (PolicyName::FreeRunning, "free"),
        ] {
            let cfg = scenario(
                preset,
                link(array, prs[0], pb),
                SweepConfig::ReceivedPowerNw {
                    values: prs.clone(),
                },
                policy,
                opts.mc_bits,
                opts.seed.wrapping_add(1000 * k),
            )?;
            k += 1;
            write_ber(w, &format!("{preset}_pb{pb}_{tag}.csv"), &cfg)?;
        }
    }
    Ok(())
}

/// Runs preset `name` (or every preset for `all`) into `dir`; returns the
/// summary lines.
pub fn run(name: &str, dir: &Path, opts: &PresetOptions) -> Result<Vec<String>, CliError> {
    let names: Vec<&str> = if name == "all" {
        NAMES.to_vec()
    } else if NAMES.contains(&name) {
        vec![name]
    } else {
        return Err(CliError::UnknownPreset(name.to_string()));
    };
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut w = Writer {
        dir,
        lines: Vec::new(),
    };
    for name in names {
        w.lines.push(format!("{name}:"));
        match name {
            "fig3" => fig3(&mut w, opts)?,
            "fig4" => fig4(&mut w, opts)?,
            "fig5" => ber_vs_gate(
                &mut w,
                "fig5",
                SMALL,
                7.0,
                &[8.0, 10.0, 12.0, 15.0],
                ladder(200, 10.0),
                opts,
            )?,
            "fig6" => optimal_gate(
                &mut w,
                "fig6",
                SMALL,
                &[0.5, 1.5, 3.0, 5.0],
                ladder(20, 2.0),
                opts,
            )?,
            "fig7" => ber_vs_power(
                &mut w,
                "fig7",
                SMALL,
                &[0.5, 1.5, 3.0],
                ladder(10, 1.0),
                opts,
            )?,
            "fig8" => ber_vs_gate(
                &mut w,
                "fig8",
                LARGE,
                40.0,
                &[40.0, 50.0, 60.0, 70.0],
                ladder(250, 50.0),
                opts,
            )?,
            "fig9" => optimal_gate(
                &mut w,
                "fig9",
                LARGE,
                &[20.0, 40.0, 80.0],
                ladder(17, 0.2).into_iter().map(|v| v + 15.0).collect(),
                opts,
            )?,
            "fig10" => ber_vs_power(
                &mut w,
                "fig10",
                LARGE,
                &[40.0, 80.0],
                ladder(9, 0.1).into_iter().map(|v| v + 10.0).collect(),
                opts,
            )?,
            _ => unreachable!("names are checked above"),
        }
    }
    Ok(w.lines)
}
