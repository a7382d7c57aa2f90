use rand::Rng;
use rayon::prelude::*;

use super::detector::GatedPixel;
use super::frame::{simulate_block, ReceiverModel, DEFAULT_WARMUP};
use super::rng::{substream, Purpose};
use crate::error::{Error, Result};
use crate::link::breakdown_for_rates;
use crate::photon_stats::CountStats;
use crate::timing::{GateTiming, PhotonRate};

const BLOCK_SYMBOLS: usize = 1 << 16;
const Z95: f64 = 1.959_963_984_540_054;

/// Half-width of the 95% Wilson score interval for `errors` out of `trials`.
pub fn wilson_halfwidth(errors: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.5;
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n)
}

/// Decision rule applied to the array count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Decide '1' iff `count ≥ N·(σ0·u1 + σ1·u0)/(σ0 + σ1)`, using the
    /// analytic moments at the simulated gate.
    Gaussian,
    /// Decide '1' iff `count ≥ k`.
    Fixed(u32),
}

/// Stopping rule for a BER run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerRun {
    pub min_bits: u64,
    /// Keep simulating until this many errors were seen...
    pub target_errors: u64,
    /// ...or this many bits were sent.
    pub max_bits: u64,
    pub warmup: usize,
    pub threshold: Threshold,
}

impl BerRun {
    /// Exactly `n_bits` bits.
    pub fn fixed(n_bits: u64) -> Self {
        Self {
            min_bits: n_bits,
            target_errors: 0,
            max_bits: n_bits,
            warmup: DEFAULT_WARMUP,
            threshold: Threshold::Gaussian,
        }
    }

    /// At least `min_bits`, then grow until 100 errors or 1e9 bits.
    pub fn auto(min_bits: u64) -> Self {
        Self {
            min_bits,
            target_errors: 100,
            max_bits: 1_000_000_000,
            warmup: DEFAULT_WARMUP,
            threshold: Threshold::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    pub ber: f64,
    pub halfwidth: f64,
    pub errors: u64,
    pub bits: u64,
    /// Fewer errors than the run's target: the estimate is only an upper
    /// bound at the stated confidence.
    pub upper_bounded: bool,
    pub threshold: f64,
}

/// Monte-Carlo BER with random equiprobable bits, `n_bits` of them.
pub fn estimate_ber_mc(model: &ReceiverModel, n_bits: u64, seed: u64) -> Result<BerEstimate> {
    estimate_ber_mc_with(model, &BerRun::fixed(n_bits), seed)
}

pub fn estimate_ber_mc_with(model: &ReceiverModel, run: &BerRun, seed: u64) -> Result<BerEstimate> {
    if run.min_bits < 10_000 || run.max_bits < run.min_bits {
        return Err(Error::InvalidParameter {
            name: "n_bits",
            value: run.min_bits as f64,
            reason: "need at least 1e4 bits and max_bits >= min_bits",
        });
    }
    let threshold = match run.threshold {
        Threshold::Fixed(k) => k as f64,
        Threshold::Gaussian => {
            breakdown_for_rates(&model.rates, model.pixels, &model.timing)?.threshold(model.pixels)
        }
    };

    let mut bits_done = 0u64;
    let mut errors = 0u64;
    let mut block = 0u64;
    while bits_done < run.max_bits && (bits_done < run.min_bits || errors < run.target_errors) {
        let len = (run.max_bits - bits_done).min(BLOCK_SYMBOLS as u64) as usize;
        let mut rng = substream(seed, Purpose::DataBits, block, 0);
        let bits: Vec<bool> = (0..len).map(|_| rng.random::<bool>()).collect();
        let counts = simulate_block(model, &bits, run.warmup, seed, block);
        errors += bits
            .iter()
            .zip(&counts)
            .filter(|(&b, &c)| (c as f64 >= threshold) != b)
            .count() as u64;
        bits_done += len as u64;
        block += 1;
    }
    Ok(BerEstimate {
        ber: errors as f64 / bits_done as f64,
        halfwidth: wilson_halfwidth(errors, bits_done),
        errors,
        bits: bits_done,
        upper_bounded: errors < run.target_errors,
        threshold,
    })
}

/// Empirical probability mass function on `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    pub probabilities: Vec<f64>,
}

impl Pmf {
    pub fn from_counts(samples: &[u32]) -> Self {
        let max = samples.iter().copied().max().unwrap_or(0) as usize;
        let mut hist = vec![0u64; max + 1];
        for &s in samples {
            hist[s as usize] += 1;
        }
        let n = samples.len().max(1) as f64;
        Self {
            probabilities: hist.into_iter().map(|h| h as f64 / n).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| (k as f64 - m).powi(2) * p)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// Gaussian density with the given mean and variance sampled at `0..len`;
/// a zero variance gives a point mass at the rounded mean.
pub fn gaussian_pmf(mean: f64, variance: f64, len: usize) -> Vec<f64> {
    if variance <= 0.0 {
        let mut v = vec![0.0; len];
        let k = mean.round();
        if k >= 0.0 && (k as usize) < len {
            v[k as usize] = 1.0;
        }
        return v;
    }
    let sd = variance.sqrt();
    (0..len)
        .map(|k| {
            let z = (k as f64 - mean) / sd;
            (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
        })
        .collect()
}

/// Exact (simulated) and Gaussian-approximated count distributions for one
/// bit value.
#[derive(Debug, Clone, PartialEq)]
pub struct PmfEstimate {
    pub exact: Pmf,
    /// Gaussian density on the same support, from the analytic moments.
    pub approx: Vec<f64>,
    pub approx_mean: f64,
    pub approx_variance: f64,
}

/// Array-count distribution of symbols carrying `bit` inside random data.
pub fn estimate_pmf(
    model: &ReceiverModel,
    bit: bool,
    n_trials: usize,
    seed: u64,
) -> Result<PmfEstimate> {
    if n_trials < 100_000 {
        return Err(Error::InvalidParameter {
            name: "n_trials",
            value: n_trials as f64,
            reason: "need at least 1e5 trials",
        });
    }
    let mut samples = Vec::with_capacity(n_trials);
    let mut block = 0u64;
    while samples.len() < n_trials {
        let mut rng = substream(seed, Purpose::DataBits, block, 0);
        let bits: Vec<bool> = (0..BLOCK_SYMBOLS).map(|_| rng.random::<bool>()).collect();
        let counts = simulate_block(model, &bits, DEFAULT_WARMUP, seed, block);
        samples.extend(
            bits.iter()
                .zip(counts)
                .filter(|(&b, _)| b == bit)
                .map(|(_, c)| c)
                .take(n_trials - samples.len()),
        );
        block += 1;
    }
    let exact = Pmf::from_counts(&samples);
    let stats = breakdown_for_rates(&model.rates, model.pixels, &model.timing)?;
    let per_pixel = if bit { stats.one } else { stats.zero };
    let n = model.pixels as f64;
    let (approx_mean, approx_variance) = (n * per_pixel.mean, n * per_pixel.variance);
    Ok(PmfEstimate {
        approx: gaussian_pmf(approx_mean, approx_variance, exact.probabilities.len()),
        exact,
        approx_mean,
        approx_variance,
    })
}

/// Sample moments of the per-symbol count of one pixel under a constant rate,
/// with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub stats: CountStats,
    pub mean_se: f64,
    pub variance_se: f64,
    pub trials: u64,
}

/// One continuous constant-rate run of a single pixel, after `warmup`
/// discarded symbols.
pub fn simulate_constant_counts(
    rate: PhotonRate,
    timing: &GateTiming,
    n: usize,
    warmup: usize,
    seed: u64,
) -> Vec<u32> {
    constant_run(rate, timing, n, warmup, seed, 0)
}

fn constant_run(
    rate: PhotonRate,
    timing: &GateTiming,
    n: usize,
    warmup: usize,
    seed: u64,
    chunk: u64,
) -> Vec<u32> {
    let mut rng = substream(seed, Purpose::Chunk, chunk, 0);
    let mut pixel = GatedPixel::new(timing);
    for _ in 0..warmup.max(timing.min_warmup_symbols()) {
        pixel.step(rate.hz(), &mut rng);
    }
    (0..n).map(|_| pixel.step(rate.hz(), &mut rng)).collect()
}

const MOMENT_CHUNKS: usize = 256;

/// Moments of the detected count from `n_trials` symbols.
///
/// The run is split into 256 independent chunks, each with its own warm-up;
/// standard errors come from the spread of the chunk estimates, so they stay
/// honest when counts of consecutive symbols are correlated.
pub fn estimate_moments_mc(
    rate: PhotonRate,
    timing: &GateTiming,
    n_trials: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    if n_trials < 100_000 {
        return Err(Error::InvalidParameter {
            name: "n_trials",
            value: n_trials as f64,
            reason: "need at least 1e5 trials",
        });
    }
    let chunks = MOMENT_CHUNKS as u64;
    let per_chunk: Vec<u64> = (0..chunks)
        .map(|i| n_trials / chunks + u64::from(i < n_trials % chunks))
        .collect();
    // (n, Σk, Σk²) per chunk, in integers.
    let sums: Vec<(u64, u64, u64)> = per_chunk
        .par_iter()
        .enumerate()
        .map(|(i, &len)| {
            let counts = constant_run(rate, timing, len as usize, DEFAULT_WARMUP, seed, i as u64);
            let s: u64 = counts.iter().map(|&k| k as u64).sum();
            let s2: u64 = counts.iter().map(|&k| (k as u64) * (k as u64)).sum();
            (len, s, s2)
        })
        .collect();

    let n: u64 = sums.iter().map(|c| c.0).sum();
    let s: u64 = sums.iter().map(|c| c.1).sum();
    let s2: u64 = sums.iter().map(|c| c.2).sum();
    let nf = n as f64;
    let mean = s as f64 / nf;
    let second_moment = s2 as f64 / nf;
    let variance = ((s2 as f64 - nf * mean * mean) / (nf - 1.0)).max(0.0);

    let chunk_means: Vec<f64> = sums.iter().map(|&(n, s, _)| s as f64 / n as f64).collect();
    let chunk_vars: Vec<f64> = sums
        .iter()
        .map(|&(n, s, s2)| {
            let n = n as f64;
            let m = s as f64 / n;
            (s2 as f64 - n * m * m) / (n - 1.0)
        })
        .collect();
    Ok(MomentEstimate {
        stats: CountStats {
            mean,
            second_moment,
            variance,
        },
        mean_se: standard_error(&chunk_means),
        variance_se: standard_error(&chunk_vars),
        trials: n,
    })
}

fn standard_error(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}
