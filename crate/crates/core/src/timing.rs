//! Gate timing and photon-rate value types.
//!
//! All durations are seconds and all rates are Hz. The CLI layer converts from
//! nanoseconds once, at ingestion.

use crate::error::{check_nonnegative, check_positive, Error, Result};

const PICOSECOND: f64 = 1e-12;

/// Symbol period, gate-ON duration and dead time of one gated pixel.
///
/// The gate opens at the start of every symbol period and stays on for
/// `gate_on`; `gate_on == symbol_period` is the free-running receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateTiming {
    symbol_period: f64,
    gate_on: f64,
    dead_time: f64,
}

impl GateTiming {
    pub fn new(symbol_period: f64, gate_on: f64, dead_time: f64) -> Result<Self> {
        check_positive("symbol_period", symbol_period)?;
        check_positive("gate_on", gate_on)?;
        check_positive("dead_time", dead_time)?;
        if gate_on > symbol_period {
            return Err(Error::InvalidParameter {
                name: "gate_on",
                value: gate_on,
                reason: "gate-ON time must not exceed the symbol period",
            });
        }
        Ok(Self {
            symbol_period,
            gate_on,
            dead_time,
        })
    }

    /// Builds a timing from nanosecond values.
    pub fn from_ns(symbol_period_ns: f64, gate_on_ns: f64, dead_time_ns: f64) -> Result<Self> {
        Self::new(
            symbol_period_ns * 1e-9,
            gate_on_ns * 1e-9,
            dead_time_ns * 1e-9,
        )
    }

    /// Free-running receiver: the gate never closes.
    pub fn free_running(symbol_period: f64, dead_time: f64) -> Result<Self> {
        Self::new(symbol_period, symbol_period, dead_time)
    }

    pub fn symbol_period(&self) -> f64 {
        self.symbol_period
    }

    pub fn gate_on(&self) -> f64 {
        self.gate_on
    }

    pub fn dead_time(&self) -> f64 {
        self.dead_time
    }

    /// Gate-OFF time at the end of each symbol.
    pub fn gate_off(&self) -> f64 {
        self.symbol_period - self.gate_on
    }

    pub fn is_free_running(&self) -> bool {
        self.gate_on == self.symbol_period
    }

    /// Same symbol period and dead time with a different gate-ON time.
    pub fn with_gate_on(&self, gate_on: f64) -> Result<Self> {
        Self::new(self.symbol_period, gate_on, self.dead_time)
    }

    pub fn with_dead_time(&self, dead_time: f64) -> Result<Self> {
        Self::new(self.symbol_period, self.gate_on, dead_time)
    }

    /// Integer picosecond representation `(T_s, T_g, T_d)`, when all three
    /// durations are exact multiples of 1 ps.
    pub fn picoseconds(&self) -> Option<(i64, i64, i64)> {
        Some((
            to_picoseconds(self.symbol_period)?,
            to_picoseconds(self.gate_on)?,
            to_picoseconds(self.dead_time)?,
        ))
    }

    /// Smallest number of whole symbols that covers one dead time, plus one.
    pub fn min_warmup_symbols(&self) -> usize {
        (self.dead_time / self.symbol_period).ceil() as usize + 1
    }
}

fn to_picoseconds(seconds: f64) -> Option<i64> {
    let ps = seconds / PICOSECOND;
    let rounded = ps.round();
    if rounded > 0.0 && rounded < 1e15 && (ps - rounded).abs() <= 1e-6 {
        Some(rounded as i64)
    } else {
        None
    }
}

/// Photon arrival rate in Hz.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct PhotonRate(f64);

impl PhotonRate {
    pub const ZERO: PhotonRate = PhotonRate(0.0);

    pub fn new(hz: f64) -> Result<Self> {
        check_nonnegative("rate", hz)?;
        Ok(Self(hz))
    }

    pub fn hz(self) -> f64 {
        self.0
    }
}
