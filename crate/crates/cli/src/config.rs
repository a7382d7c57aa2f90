//! JSON scenario files. Field names carry their units (`*_ns`, `*_nw`,
//! `*_hz`); everything is converted to seconds, watts and hertz here and
//! nowhere else.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use spad_gate_core::link::{GatePolicy, SearchOptions, SweepAxis};
use spad_gate_core::mc::{BerRun, Threshold, DEFAULT_WARMUP};
use spad_gate_core::{GateTiming, OpticalLink, PhotonRate};

use crate::error::CliError;

pub const NS: f64 = 1e-9;
pub const NW: f64 = 1e-9;
pub const NM: f64 = 1e-9;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(
            field,
            format!("must be a positive number, got {v}"),
        ))
    }
}

fn nonnegative(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(invalid(
            field,
            format!("must be a nonnegative number, got {v}"),
        ))
    }
}

fn default_wavelength() -> f64 {
    785.0
}

fn default_pde() -> f64 {
    0.18
}

fn default_dead_time() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    #[serde(default = "default_wavelength")]
    pub wavelength_nm: f64,
    #[serde(default = "default_pde")]
    pub pde: f64,
    pub received_power_nw: f64,
    pub background_power_nw: f64,
    pub array_size: u32,
    pub symbol_period_ns: f64,
    #[serde(default = "default_dead_time")]
    pub dead_time_ns: f64,
    /// Defaults to the symbol period (free-running).
    #[serde(default)]
    pub gate_on_ns: Option<f64>,
}

impl LinkConfig {
    pub fn resolve(&self) -> Result<OpticalLink, CliError> {
        let wavelength = positive("link.wavelength_nm", self.wavelength_nm)? * NM;
        if !(self.pde > 0.0 && self.pde <= 1.0) {
            return Err(invalid(
                "link.pde",
                format!("must be in (0, 1], got {}", self.pde),
            ));
        }
        let received_power = nonnegative("link.received_power_nw", self.received_power_nw)? * NW;
        let background_power =
            nonnegative("link.background_power_nw", self.background_power_nw)? * NW;
        if self.array_size == 0 || self.array_size >= 1 << 24 {
            return Err(invalid("link.array_size", "must be in 1..16777216"));
        }
        let ts = positive("link.symbol_period_ns", self.symbol_period_ns)?;
        let td = positive("link.dead_time_ns", self.dead_time_ns)?;
        let tg = match self.gate_on_ns {
            Some(tg) => positive("link.gate_on_ns", tg)?,
            None => ts,
        };
        if tg > ts {
            return Err(invalid(
                "link.gate_on_ns",
                format!("{tg} exceeds the symbol period {ts}"),
            ));
        }
        let timing = GateTiming::from_ns(ts, tg, td).map_err(|e| invalid("link", e.to_string()))?;
        Ok(OpticalLink {
            wavelength,
            pde: self.pde,
            received_power,
            background_power,
            array_size: self.array_size,
            timing,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Analytic,
    Mc,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepConfig {
    GateOnNs { values: Vec<f64> },
    ReceivedPowerNw { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    /// The link's `gate_on_ns`.
    #[default]
    Fixed,
    FreeRunning,
    Optimized,
}

fn default_grid_step() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfig {
    #[serde(default)]
    pub policy: PolicyName,
    #[serde(default = "default_grid_step")]
    pub grid_step_ns: f64,
    #[serde(default)]
    pub refine: bool,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            policy: PolicyName::default(),
            grid_step_ns: default_grid_step(),
            refine: false,
        }
    }
}

fn default_bits() -> u64 {
    100_000
}

fn default_warmup() -> usize {
    DEFAULT_WARMUP
}

fn default_trace_symbols() -> usize {
    100
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    /// Bits per point; with `auto_scale` the minimum.
    #[serde(default = "default_bits")]
    pub bits: u64,
    /// Keep going until 100 errors or 1e9 bits.
    #[serde(default)]
    pub auto_scale: bool,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    /// Fixed decision threshold on the array count instead of the Gaussian
    /// one.
    #[serde(default)]
    pub threshold: Option<u32>,
    #[serde(default = "default_trace_symbols")]
    pub trace_symbols: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            bits: default_bits(),
            auto_scale: false,
            warmup: default_warmup(),
            threshold: None,
            trace_symbols: default_trace_symbols(),
            seed: default_seed(),
        }
    }
}

impl McConfig {
    pub fn run(&self) -> Result<BerRun, CliError> {
        if self.bits < 10_000 {
            return Err(invalid(
                "mc.bits",
                format!("must be at least 10000, got {}", self.bits),
            ));
        }
        let mut run = if self.auto_scale {
            BerRun::auto(self.bits)
        } else {
            BerRun::fixed(self.bits)
        };
        if run.max_bits < run.min_bits {
            return Err(invalid(
                "mc.bits",
                "exceeds the 1e9-bit cap of auto scaling",
            ));
        }
        run.warmup = self.warmup;
        if let Some(k) = self.threshold {
            run.threshold = Threshold::Fixed(k);
        }
        Ok(run)
    }
}

/// Input of `ber`, `opt-tg` and `mc`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub link: LinkConfig,
    #[serde(default)]
    pub mode: Mode,
    /// Without a sweep the scenario is the single point described by `link`.
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub gate: GateConfig,
    #[serde(default)]
    pub mc: McConfig,
}

/// A scenario in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub link: OpticalLink,
    pub mode: Mode,
    pub axis: SweepAxis,
    /// Sweep values in SI units.
    pub values: Vec<f64>,
    /// Same values in the units of the config file, for the CSV.
    pub axis_values: Vec<f64>,
    pub policy: GatePolicy,
    /// Search settings, also used when a command forces optimization.
    pub search: SearchOptions,
    pub mc: BerRun,
    pub seed: u64,
    pub trace_symbols: usize,
}

impl ScenarioConfig {
    pub fn resolve(&self) -> Result<Scenario, CliError> {
        let link = self.link.resolve()?;
        let ts_ns = self.link.symbol_period_ns;
        let (axis, axis_values, scale) = match &self.sweep {
            Some(SweepConfig::GateOnNs { values }) => {
                for (i, &v) in values.iter().enumerate() {
                    let field = format!("sweep.values[{i}]");
                    positive(&field, v)?;
                    if v > ts_ns {
                        return Err(invalid(
                            &field,
                            format!("gate-ON {v} ns exceeds the symbol period"),
                        ));
                    }
                }
                (SweepAxis::GateOn, values.clone(), NS)
            }
            Some(SweepConfig::ReceivedPowerNw { values }) => {
                for (i, &v) in values.iter().enumerate() {
                    nonnegative(&format!("sweep.values[{i}]"), v)?;
                }
                (SweepAxis::ReceivedPower, values.clone(), NW)
            }
            None => (
                SweepAxis::ReceivedPower,
                vec![self.link.received_power_nw],
                NW,
            ),
        };
        let grid_step = positive("gate.grid_step_ns", self.gate.grid_step_ns)? * NS;
        let search = SearchOptions {
            grid_step,
            refine: self.gate.refine,
        };
        let policy = match self.gate.policy {
            PolicyName::Fixed => GatePolicy::Fixed,
            PolicyName::FreeRunning => GatePolicy::FreeRunning,
            PolicyName::Optimized => GatePolicy::Optimized(search),
        };
        Ok(Scenario {
            link,
            mode: self.mode,
            axis,
            values: axis_values.iter().map(|v| v * scale).collect(),
            axis_values,
            policy,
            search,
            mc: self.mc.run()?,
            seed: self.mc.seed,
            trace_symbols: self.mc.trace_symbols,
        })
    }
}

/// Input of `stats` and `validate`: a grid of constant rates and gate-ON
/// times for one pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub symbol_period_ns: f64,
    #[serde(default = "default_dead_time")]
    pub dead_time_ns: f64,
    pub rates_hz: Vec<f64>,
    pub gate_on_ns: Vec<f64>,
    /// Monte-Carlo symbols per point; `stats` skips the simulation without it.
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Dead time given to the simulator instead of `dead_time_ns`. Only for
    /// checking that `validate` catches a mismatch.
    #[serde(default)]
    pub mc_dead_time_ns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub points: Vec<GridPoint>,
    pub trials: Option<u64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub rate: PhotonRate,
    pub gate_on_ns: f64,
    pub timing: GateTiming,
    pub mc_timing: GateTiming,
}

impl GridConfig {
    pub fn resolve(&self) -> Result<Grid, CliError> {
        let ts = positive("symbol_period_ns", self.symbol_period_ns)?;
        let td = positive("dead_time_ns", self.dead_time_ns)?;
        let mc_td = match self.mc_dead_time_ns {
            Some(v) => positive("mc_dead_time_ns", v)?,
            None => td,
        };
        if let Some(n) = self.trials {
            if n < 100_000 {
                return Err(invalid(
                    "trials",
                    format!("must be at least 100000, got {n}"),
                ));
            }
        }
        let mut rates = Vec::with_capacity(self.rates_hz.len());
        for (i, &r) in self.rates_hz.iter().enumerate() {
            let field = format!("rates_hz[{i}]");
            rates.push(
                PhotonRate::new(nonnegative(&field, r)?)
                    .map_err(|e| invalid(&field, e.to_string()))?,
            );
        }
        let mut points = Vec::new();
        for rate in rates {
            for (i, &tg) in self.gate_on_ns.iter().enumerate() {
                let field = format!("gate_on_ns[{i}]");
                positive(&field, tg)?;
                let timing =
                    GateTiming::from_ns(ts, tg, td).map_err(|e| invalid(&field, e.to_string()))?;
                let mc_timing = GateTiming::from_ns(ts, tg, mc_td)
                    .map_err(|e| invalid(&field, e.to_string()))?;
                points.push(GridPoint {
                    rate,
                    gate_on_ns: tg,
                    timing,
                    mc_timing,
                });
            }
        }
        Ok(Grid {
            points,
            trials: self.trials,
            seed: self.seed,
        })
    }
}
