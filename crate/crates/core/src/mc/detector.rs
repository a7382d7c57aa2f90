use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::timing::GateTiming;

/// Incident and detected photon times of one pixel.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionRecord {
    pub incident_times: Vec<f64>,
    pub detected_times: Vec<f64>,
}

/// Whether absolute time `t` falls inside a gate-ON window. Symbol `k`
/// occupies `[k·T_s, (k+1)·T_s)` and its gate is `[k·T_s, k·T_s + T_g)`.
pub fn is_gate_on(t: f64, timing: &GateTiming) -> bool {
    if timing.is_free_running() {
        return true;
    }
    let ts = timing.symbol_period();
    let phase = t - (t / ts).floor() * ts;
    phase < timing.gate_on()
}

/// Paralyzable dead-time filter over arrivals that all reach the avalanche
/// stage. Returns one flag per arrival.
pub fn detect_paralyzable(arrivals: &[f64], dead_time: f64) -> Result<Vec<bool>> {
    check_sorted(arrivals)?;
    let mut last = f64::NEG_INFINITY;
    Ok(arrivals
        .iter()
        .map(|&t| {
            let detected = t - last >= dead_time;
            last = t;
            detected
        })
        .collect())
}

/// Applies gating and the paralyzable dead time to a sorted arrival stream.
pub fn apply_gated_dead_time(incident: &[f64], timing: &GateTiming) -> Result<DetectionRecord> {
    check_sorted(incident)?;
    let td = timing.dead_time();
    let mut last_on = f64::NEG_INFINITY;
    let mut detected_times = Vec::new();
    for &t in incident {
        if !is_gate_on(t, timing) {
            continue;
        }
        if t - last_on >= td {
            detected_times.push(t);
        }
        last_on = t;
    }
    Ok(DetectionRecord {
        incident_times: incident.to_vec(),
        detected_times,
    })
}

fn check_sorted(times: &[f64]) -> Result<()> {
    match times
        .windows(2)
        .position(|w| w[1].partial_cmp(&w[0]).is_none_or(|o| o.is_lt()))
    {
        Some(i) => Err(Error::UnsortedArrivals { index: i + 1 }),
        None => Ok(()),
    }
}

/// Streaming single-pixel state used by the fast simulators.
///
/// Only gate-ON arrivals are drawn, one gate window at a time; the time of
/// the last gate-ON arrival is kept relative to the start of the current
/// symbol.
#[derive(Debug, Clone)]
pub(crate) struct GatedPixel {
    last_on: f64,
    gate_on: f64,
    dead_time: f64,
    symbol_period: f64,
}

impl GatedPixel {
    pub(crate) fn new(timing: &GateTiming) -> Self {
        Self {
            last_on: f64::NEG_INFINITY,
            gate_on: timing.gate_on(),
            dead_time: timing.dead_time(),
            symbol_period: timing.symbol_period(),
        }
    }

    /// Runs one symbol at `rate` and returns the detected count.
    #[inline]
    pub(crate) fn step<R: Rng + ?Sized>(&mut self, rate: f64, rng: &mut R) -> u32 {
        let mut count = 0;
        if rate > 0.0 {
            let mean_gap = 1.0 / rate;
            let mut t = rng.sample::<f64, _>(Exp1) * mean_gap;
            while t < self.gate_on {
                if t - self.last_on >= self.dead_time {
                    count += 1;
                }
                self.last_on = t;
                t += rng.sample::<f64, _>(Exp1) * mean_gap;
            }
        }
        self.last_on -= self.symbol_period;
        if self.last_on < -self.dead_time {
            self.last_on = f64::NEG_INFINITY;
        }
        count
    }
}
