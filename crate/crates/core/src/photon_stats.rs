//! Closed-form statistics of the photon count detected by one passively
//! quenched (paralyzable) SPAD pixel per symbol when it is gated.
//!
//! The gate is ON during `[0, T_g)` of every symbol of length `T_s`. A photon
//! arriving at a gate-ON instant `t` is detected iff no other photon arrived
//! in the gate-ON part of `(t - T_d, t)`. Arrivals during gate-OFF have no
//! effect, so the receiver is a free-running SPAD illuminated by a pulse
//! train of width `T_g`.
//!
//! Inside one gate the window is cut into segments of length `T_d` (plus a
//! shorter remainder). At most one photon is detected per segment, only the
//! first segment sees the history of previous gates, and the counts of two
//! segments that are not adjacent are independent. That gives the mean and
//! second moment below; the correlation terms are exposed individually so the
//! aggregated second moment can be checked term by term.

use crate::error::{check_nonnegative, check_positive, check_range, Error, Result};
use crate::quadrature::{
    breakpoints_of_gate_overlap, integrate_piecewise_with, snap_guard, QuadratureConfig,
};
use crate::timing::{GateTiming, PhotonRate};

/// Largest negative variance that is treated as quadrature noise.
pub const VARIANCE_CLAMP: f64 = 1e-9;

/// Mean, second moment and variance of the per-symbol detected count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountStats {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
}

impl CountStats {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Detected rate of a free-running paralyzable detector, `λ·exp(-λ·T_d)`.
pub fn transfer_rate(rate: PhotonRate, dead_time: f64) -> Result<PhotonRate> {
    check_positive("dead_time", dead_time)?;
    let lambda = rate.hz();
    PhotonRate::new(lambda * (-lambda * dead_time).exp())
}

/// Total gate-ON time inside the look-back window `(s - T_d, 0)`, counting
/// back across previous symbols.
///
/// Defined for `s` in `[0, T_d]`.
pub fn gate_overlap(s: f64, timing: &GateTiming) -> Result<f64> {
    check_range("s", s, 0.0, timing.dead_time())?;
    Ok(gate_overlap_unchecked(s, timing))
}

pub(crate) fn gate_overlap_unchecked(s: f64, timing: &GateTiming) -> f64 {
    let window = (timing.dead_time() - s).max(0.0);
    if timing.is_free_running() {
        return window;
    }
    let ts = timing.symbol_period();
    let tg = timing.gate_on();
    let guard = snap_guard(timing);

    let q = window / ts;
    let nearest = q.round();
    let periods = if (window - nearest * ts).abs() <= guard {
        nearest
    } else {
        q.floor()
    };
    let rem = (window - periods * ts).max(0.0);
    let partial = rem - ts + tg;
    let partial = if partial <= guard { 0.0 } else { partial };
    periods * tg + partial
}

// ∫_0^upper λ·exp(-λ(G(s)+s)) ds: detection probability of the first
// segment when it has length `upper`.
fn first_segment_probability(
    lambda: f64,
    timing: &GateTiming,
    upper: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if lambda == 0.0 || upper == 0.0 {
        return Ok(0.0);
    }
    let bps = breakpoints_of_gate_overlap(timing, 0.0, upper)?;
    let f = |s: f64| lambda * (-lambda * (gate_overlap_unchecked(s, timing) + s)).exp();
    Ok(integrate_piecewise_with(f, &bps, cfg)?)
}

// ∫_0^upper exp(-λ(G(s)+s))·(offset - s) ds
fn first_segment_weighted(
    lambda: f64,
    timing: &GateTiming,
    upper: f64,
    offset: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if lambda == 0.0 || upper == 0.0 {
        return Ok(0.0);
    }
    let bps = breakpoints_of_gate_overlap(timing, 0.0, upper)?;
    let f = |s: f64| (-lambda * (gate_overlap_unchecked(s, timing) + s)).exp() * (offset - s);
    Ok(integrate_piecewise_with(f, &bps, cfg)?)
}

pub fn mean_count(rate: PhotonRate, timing: &GateTiming) -> Result<f64> {
    mean_count_with(rate, timing, &QuadratureConfig::default())
}

pub fn mean_count_with(
    rate: PhotonRate,
    timing: &GateTiming,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let lambda = rate.hz();
    let tg = timing.gate_on();
    let td = timing.dead_time();
    let first = first_segment_probability(lambda, timing, tg.min(td), cfg)?;
    let rest = (tg - td).max(0.0) * lambda * (-lambda * td).exp();
    Ok(first + rest)
}

fn check_segment(t: f64, dead_time: f64) -> Result<()> {
    check_positive("dead_time", dead_time)?;
    check_range("t", t, 0.0, dead_time)
}

/// `E[K_n K_{n+1}]` for two adjacent segments, neither of them the first.
pub fn corr_adjacent(t: f64, rate: PhotonRate, dead_time: f64) -> Result<f64> {
    check_segment(t, dead_time)?;
    let lambda = rate.hz();
    Ok(0.5 * lambda * lambda * t * t * (-2.0 * lambda * dead_time).exp())
}

/// `E[K_n K_j]` for two non-adjacent segments, neither of them the first.
pub fn corr_nonadjacent(t: f64, rate: PhotonRate, dead_time: f64) -> Result<f64> {
    check_segment(t, dead_time)?;
    let lambda = rate.hz();
    Ok(lambda * lambda * dead_time * t * (-2.0 * lambda * dead_time).exp())
}

/// `E[K_1 K_2]`: the first segment and the segment right after it.
pub fn corr_first_adjacent(t: f64, rate: PhotonRate, timing: &GateTiming) -> Result<f64> {
    corr_first_adjacent_with(t, rate, timing, &QuadratureConfig::default())
}

pub fn corr_first_adjacent_with(
    t: f64,
    rate: PhotonRate,
    timing: &GateTiming,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let td = timing.dead_time();
    check_segment(t, td)?;
    let lambda = rate.hz();
    let integral = first_segment_weighted(lambda, timing, t, t, cfg)?;
    Ok(lambda * lambda * (-lambda * td).exp() * integral)
}

/// `E[K_1 K_j]` for `j > 2`: the first segment and a non-adjacent one.
pub fn corr_first_nonadjacent(t: f64, rate: PhotonRate, timing: &GateTiming) -> Result<f64> {
    corr_first_nonadjacent_with(t, rate, timing, &QuadratureConfig::default())
}

pub fn corr_first_nonadjacent_with(
    t: f64,
    rate: PhotonRate,
    timing: &GateTiming,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let td = timing.dead_time();
    check_segment(t, td)?;
    let lambda = rate.hz();
    let first = first_segment_probability(lambda, timing, td, cfg)?;
    Ok(lambda * t * (-lambda * td).exp() * first)
}

pub fn second_moment(rate: PhotonRate, timing: &GateTiming) -> Result<f64> {
    count_stats(rate, timing).map(|s| s.second_moment)
}

// Second moment given an already computed mean.
fn second_moment_from_mean(
    mean: f64,
    lambda: f64,
    timing: &GateTiming,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let tg = timing.gate_on();
    let td = timing.dead_time();
    if tg < td {
        // At most one detection per symbol.
        return Ok(mean);
    }
    let scale = lambda * lambda * (-lambda * td).exp();
    if tg < 2.0 * td {
        let integral = first_segment_weighted(lambda, timing, tg - td, tg - td, cfg)?;
        return Ok(mean + 2.0 * scale * integral);
    }
    let tail = tg - 2.0 * td;
    let integral = first_segment_weighted(lambda, timing, td, tg - td, cfg)?;
    Ok(mean + lambda * lambda * (-2.0 * lambda * td).exp() * tail * tail + 2.0 * scale * integral)
}

pub fn variance(rate: PhotonRate, timing: &GateTiming) -> Result<f64> {
    count_stats(rate, timing).map(|s| s.variance)
}

/// Mean, second moment and variance in one pass.
pub fn count_stats(rate: PhotonRate, timing: &GateTiming) -> Result<CountStats> {
    count_stats_with(rate, timing, &QuadratureConfig::default())
}

pub fn count_stats_with(
    rate: PhotonRate,
    timing: &GateTiming,
    cfg: &QuadratureConfig,
) -> Result<CountStats> {
    let mean = mean_count_with(rate, timing, cfg)?;
    let second_moment = second_moment_from_mean(mean, rate.hz(), timing, cfg)?;
    let variance = clamp_variance(second_moment - mean * mean)?;
    Ok(CountStats {
        mean,
        second_moment,
        variance,
    })
}

fn clamp_variance(v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -VARIANCE_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::NegativeVariance { value: v })
    }
}

/// Free-running count statistics in closed form (gate always ON, counting
/// window `window`).
pub fn free_running_stats(rate: PhotonRate, window: f64, dead_time: f64) -> Result<CountStats> {
    check_nonnegative("window", window)?;
    check_positive("dead_time", dead_time)?;
    let lambda = rate.hz();
    let mean = lambda * window * (-lambda * dead_time).exp();
    let second_moment = if window < dead_time {
        mean
    } else {
        let excess = window - dead_time;
        mean + lambda * lambda * (-2.0 * lambda * dead_time).exp() * excess * excess
    };
    Ok(CountStats {
        mean,
        second_moment,
        variance: clamp_variance(second_moment - mean * mean)?,
    })
}
