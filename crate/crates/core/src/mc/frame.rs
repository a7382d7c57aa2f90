use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;

use super::arrivals::gen_arrivals_piecewise;
use super::detector::{apply_gated_dead_time, DetectionRecord, GatedPixel};
use super::rng::{substream, Purpose};
use crate::error::{Error, Result};
use crate::link::{pixel_rates, OpticalLink, RatePair};
use crate::timing::{GateTiming, PhotonRate};

/// Default number of discarded leading symbols.
pub const DEFAULT_WARMUP: usize = 10;

/// What the simulator needs: per-pixel rates, array size and gate timing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverModel {
    pub rates: RatePair,
    pub pixels: u32,
    pub timing: GateTiming,
}

impl ReceiverModel {
    pub fn new(rates: RatePair, pixels: u32, timing: GateTiming) -> Result<Self> {
        if pixels == 0 || pixels >= 1 << 24 {
            return Err(Error::InvalidParameter {
                name: "pixels",
                value: pixels as f64,
                reason: "array size must be in 1..2^24",
            });
        }
        Ok(Self {
            rates,
            pixels,
            timing,
        })
    }

    /// Model for `link` operated at gate-ON time `gate_on`.
    pub fn from_link(link: &OpticalLink, gate_on: f64) -> Result<Self> {
        Self::new(
            pixel_rates(link)?,
            link.array_size,
            link.timing.with_gate_on(gate_on)?,
        )
    }

    pub fn with_timing(&self, timing: GateTiming) -> Self {
        Self { timing, ..*self }
    }
}

/// Total array count per symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolCounts {
    pub counts: Vec<u32>,
}

/// Simulates `bits` through the array described by `link` with gate-ON time
/// `gate_on`. `warmup` random symbols (at least enough to cover one dead
/// time) precede the data and are discarded.
pub fn simulate_frame(
    link: &OpticalLink,
    gate_on: f64,
    bits: &[bool],
    warmup: usize,
    seed: u64,
) -> Result<SymbolCounts> {
    let model = ReceiverModel::from_link(link, gate_on)?;
    Ok(simulate_model_frame(&model, bits, warmup, seed))
}

pub fn simulate_model_frame(
    model: &ReceiverModel,
    bits: &[bool],
    warmup: usize,
    seed: u64,
) -> SymbolCounts {
    SymbolCounts {
        counts: simulate_block(model, bits, warmup, seed, 0),
    }
}

/// `n` equiprobable random bits, reproducible from `seed`.
pub fn random_bits(n: usize, seed: u64) -> Vec<bool> {
    let mut rng = substream(seed, Purpose::Standalone, 0, 0);
    (0..n).map(|_| rng.random::<bool>()).collect()
}

pub(crate) fn warmup_bits(
    model: &ReceiverModel,
    warmup: usize,
    seed: u64,
    block: u64,
) -> Vec<bool> {
    let n = warmup.max(model.timing.min_warmup_symbols());
    let mut rng = substream(seed, Purpose::WarmupBits, block, 0);
    (0..n).map(|_| rng.random::<bool>()).collect()
}

/// One independent block: fresh warm-up, then `bits`. Pixels run in parallel
/// and their counts are summed with integer adds.
pub(crate) fn simulate_block(
    model: &ReceiverModel,
    bits: &[bool],
    warmup: usize,
    seed: u64,
    block: u64,
) -> Vec<u32> {
    let lead = warmup_bits(model, warmup, seed, block);
    let (r0, r1) = (model.rates.zero.hz(), model.rates.one.hz());
    let timing = model.timing;
    (0..model.pixels)
        .into_par_iter()
        .fold(
            || vec![0u32; bits.len()],
            |mut acc, pixel| {
                let mut rng = substream(seed, Purpose::Pixel, block, pixel);
                let mut state = GatedPixel::new(&timing);
                for &b in &lead {
                    state.step(if b { r1 } else { r0 }, &mut rng);
                }
                for (slot, &b) in acc.iter_mut().zip(bits) {
                    *slot += state.step(if b { r1 } else { r0 }, &mut rng);
                }
                acc
            },
        )
        .reduce(
            || vec![0u32; bits.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

/// Full event trace of every pixel for a short bit stream, including
/// gate-OFF arrivals. The detector starts idle at time 0.
pub fn trace_frame(
    model: &ReceiverModel,
    bits: &[bool],
    seed: u64,
) -> Result<Vec<DetectionRecord>> {
    let rates: Vec<PhotonRate> = bits.iter().map(|&b| model.rates.for_bit(b)).collect();
    (0..model.pixels)
        .map(|pixel| {
            let mut rng = substream(seed, Purpose::Arrivals, 0, pixel);
            let incident = gen_arrivals_piecewise(&rates, model.timing.symbol_period(), &mut rng)?;
            apply_gated_dead_time(&incident, &model.timing)
        })
        .collect()
}

/// Writes `pixel,time_s,event` rows. Every incident photon gets an
/// `incident` row; detected photons get an extra `detected` row.
pub fn write_trace<W: Write>(records: &[DetectionRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "pixel,time_s,event")?;
    for (pixel, rec) in records.iter().enumerate() {
        let mut detected = rec.detected_times.iter().peekable();
        for &t in &rec.incident_times {
            writeln!(out, "{pixel},{t:e},incident")?;
            if detected.peek() == Some(&&t) {
                detected.next();
                writeln!(out, "{pixel},{t:e},detected")?;
            }
        }
    }
    Ok(())
}
