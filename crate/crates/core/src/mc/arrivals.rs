use rand::Rng;
use rand_distr::Exp1;

use super::rng::{substream, Purpose};
use crate::error::{check_nonnegative, check_positive, Result};
use crate::timing::PhotonRate;

/// Homogeneous Poisson arrivals on `[0, duration)`.
pub fn gen_arrivals(rate: PhotonRate, duration: f64, seed: u64) -> Result<Vec<f64>> {
    check_nonnegative("duration", duration)?;
    let mut rng = substream(seed, Purpose::Arrivals, 0, 0);
    let mut out = Vec::new();
    push_arrivals(&mut rng, rate.hz(), 0.0, duration, &mut out);
    Ok(out)
}

/// Poisson arrivals whose rate is `rates[k]` during symbol `k`, i.e. on
/// `[k·T_s, (k+1)·T_s)`. The residual inter-arrival time is re-drawn at every
/// symbol boundary, which is exact by memorylessness.
pub fn gen_arrivals_piecewise<R: Rng + ?Sized>(
    rates: &[PhotonRate],
    symbol_period: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_positive("symbol_period", symbol_period)?;
    let mut out = Vec::new();
    for (k, rate) in rates.iter().enumerate() {
        let start = k as f64 * symbol_period;
        push_arrivals(rng, rate.hz(), start, start + symbol_period, &mut out);
    }
    Ok(out)
}

pub(crate) fn push_arrivals<R: Rng + ?Sized>(
    rng: &mut R,
    rate: f64,
    start: f64,
    end: f64,
    out: &mut Vec<f64>,
) {
    if rate <= 0.0 {
        return;
    }
    let mean_gap = 1.0 / rate;
    let mut t = start + rng.sample::<f64, _>(Exp1) * mean_gap;
    while t < end {
        out.push(t);
        t += rng.sample::<f64, _>(Exp1) * mean_gap;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_empty() {
        assert!(gen_arrivals(PhotonRate::ZERO, 1.0, 3).unwrap().is_empty());
    }

    #[test]
    fn sorted_and_in_range() {
        let a = gen_arrivals(PhotonRate::new(1e8).unwrap(), 1e-5, 9).unwrap();
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(a.iter().all(|&t| (0.0..1e-5).contains(&t)));
    }

    #[test]
    fn piecewise_rates_respected() {
        let rates = [
            PhotonRate::ZERO,
            PhotonRate::new(1e9).unwrap(),
            PhotonRate::ZERO,
        ];
        let mut rng = substream(1, Purpose::Arrivals, 0, 0);
        let a = gen_arrivals_piecewise(&rates, 1e-6, &mut rng).unwrap();
        assert!(!a.is_empty());
        assert!(a.iter().all(|&t| (1e-6..2e-6).contains(&t)));
    }
}
