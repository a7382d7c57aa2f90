//! OOK link budget, Gaussian BER and gate-ON time optimization.

use rayon::prelude::*;

use crate::error::{check_nonnegative, check_positive, check_range, Error, Result};
use crate::photon_stats::{count_stats, CountStats};
use crate::timing::{GateTiming, PhotonRate};

/// Planck constant, J·s (CODATA 2018, exact).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s (CODATA 2018, exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default grid step of the gate-ON search, seconds.
pub const DEFAULT_GRID_STEP: f64 = 0.02e-9;

/// Physical description of an OOK link terminated by an `N`-pixel SPAD array.
///
/// `received_power` is the average signal power: a '1' carries `2·P_R`, a
/// '0' carries none. Background power adds to both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalLink {
    pub wavelength: f64,
    pub pde: f64,
    pub received_power: f64,
    pub background_power: f64,
    pub array_size: u32,
    pub timing: GateTiming,
}

impl OpticalLink {
    pub fn validate(&self) -> Result<()> {
        check_positive("wavelength", self.wavelength)?;
        check_range("pde", self.pde, f64::MIN_POSITIVE, 1.0)?;
        check_nonnegative("received_power", self.received_power)?;
        check_nonnegative("background_power", self.background_power)?;
        if self.array_size == 0 {
            return Err(Error::InvalidParameter {
                name: "array_size",
                value: 0.0,
                reason: "must be at least one pixel",
            });
        }
        Ok(())
    }

    pub fn with_gate_on(&self, gate_on: f64) -> Result<Self> {
        Ok(Self {
            timing: self.timing.with_gate_on(gate_on)?,
            ..*self
        })
    }

    pub fn with_received_power(&self, received_power: f64) -> Self {
        Self {
            received_power,
            ..*self
        }
    }

    /// The same link with the gate left open for the whole symbol.
    pub fn free_running(&self) -> Self {
        Self {
            timing: self
                .timing
                .with_gate_on(self.timing.symbol_period())
                .expect("symbol period is a valid gate-ON time"),
            ..*self
        }
    }

    pub fn photon_energy(&self) -> f64 {
        PLANCK * SPEED_OF_LIGHT / self.wavelength
    }
}

/// Per-pixel photon rates for the two OOK symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    pub zero: PhotonRate,
    pub one: PhotonRate,
}

impl RatePair {
    pub fn new(zero: f64, one: f64) -> Result<Self> {
        let zero = PhotonRate::new(zero)?;
        let one = PhotonRate::new(one)?;
        if one < zero {
            return Err(Error::InvalidParameter {
                name: "rate_one",
                value: one.hz(),
                reason: "bit '1' rate must not be below bit '0' rate",
            });
        }
        Ok(Self { zero, one })
    }

    pub fn for_bit(&self, bit: bool) -> PhotonRate {
        if bit {
            self.one
        } else {
            self.zero
        }
    }
}

pub fn pixel_rates(link: &OpticalLink) -> Result<RatePair> {
    link.validate()?;
    let per_pixel = link.pde / (link.array_size as f64 * link.photon_energy());
    RatePair::new(
        per_pixel * link.background_power,
        per_pixel * (2.0 * link.received_power + link.background_power),
    )
}

/// `Q(x) = ½·erfc(x/√2)`, accurate far into the tail.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Gaussian BER together with the moments it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerBreakdown {
    pub gate_on: f64,
    pub ber: f64,
    /// Argument of the Q-function; `+inf` when both variances vanish and the
    /// means differ.
    pub q_argument: f64,
    pub zero: CountStats,
    pub one: CountStats,
}

impl BerBreakdown {
    /// Decision threshold on the array count where the two Gaussians are
    /// equally many standard deviations away.
    pub fn threshold(&self, array_size: u32) -> f64 {
        let n = array_size as f64;
        let (s0, s1) = (self.zero.std_dev(), self.one.std_dev());
        if s0 + s1 == 0.0 {
            0.5 * n * (self.zero.mean + self.one.mean)
        } else {
            n * (s0 * self.one.mean + s1 * self.zero.mean) / (s0 + s1)
        }
    }
}

fn q_argument(n: u32, zero: &CountStats, one: &CountStats) -> f64 {
    let gap = (n as f64).sqrt() * (one.mean - zero.mean);
    let spread = zero.std_dev() + one.std_dev();
    if spread == 0.0 {
        if gap > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        gap / spread
    }
}

/// Gaussian-approximation BER at gate-ON time `gate_on`.
pub fn ber_gaussian(link: &OpticalLink, gate_on: f64) -> Result<f64> {
    ber_breakdown(link, gate_on).map(|b| b.ber)
}

pub fn ber_breakdown(link: &OpticalLink, gate_on: f64) -> Result<BerBreakdown> {
    let rates = pixel_rates(link)?;
    let timing = link.timing.with_gate_on(gate_on)?;
    breakdown_for_rates(&rates, link.array_size, &timing)
}

/// Same as [`ber_breakdown`] for explicitly given per-pixel rates.
pub fn breakdown_for_rates(
    rates: &RatePair,
    array_size: u32,
    timing: &GateTiming,
) -> Result<BerBreakdown> {
    let zero = count_stats(rates.zero, timing)?;
    let one = count_stats(rates.one, timing)?;
    let q_argument = q_argument(array_size, &zero, &one);
    let ber = if q_argument.is_infinite() {
        0.0
    } else {
        q_function(q_argument)
    };
    Ok(BerBreakdown {
        gate_on: timing.gate_on(),
        ber,
        q_argument,
        zero,
        one,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub grid_step: f64,
    /// Golden-section refinement within one grid step of the best point.
    pub refine: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            grid_step: DEFAULT_GRID_STEP,
            refine: false,
        }
    }
}

/// Gate-ON grid `{step, 2·step, …}` ending exactly at `T_s`.
pub fn gate_grid(symbol_period: f64, step: f64) -> Result<Vec<f64>> {
    check_positive("grid_step", step)?;
    let n = (symbol_period / step * (1.0 + 1e-12)).floor() as usize;
    let mut grid: Vec<f64> = (1..=n).map(|i| i as f64 * step).collect();
    match grid.last_mut() {
        Some(last) if (symbol_period - *last).abs() <= 1e-9 * step => *last = symbol_period,
        _ => grid.push(symbol_period),
    }
    Ok(grid)
}

/// Exhaustive search of the gate-ON time minimizing the Gaussian BER.
///
/// Candidates are compared on the Q-function argument so that BERs that
/// underflow to zero still rank correctly. Ties go to the larger gate.
pub fn optimize_gate(link: &OpticalLink, grid_step: f64) -> Result<BerBreakdown> {
    optimize_gate_with(
        link,
        &SearchOptions {
            grid_step,
            refine: false,
        },
    )
}

pub fn optimize_gate_with(link: &OpticalLink, opts: &SearchOptions) -> Result<BerBreakdown> {
    let rates = pixel_rates(link)?;
    let grid = gate_grid(link.timing.symbol_period(), opts.grid_step)?;
    let evaluate = |tg: f64| -> Result<BerBreakdown> {
        breakdown_for_rates(&rates, link.array_size, &link.timing.with_gate_on(tg)?)
    };
    let candidates = grid
        .par_iter()
        .map(|&tg| evaluate(tg))
        .collect::<Result<Vec<_>>>()?;

    let mut best = candidates[0];
    for c in &candidates[1..] {
        if c.q_argument >= best.q_argument {
            best = *c;
        }
    }
    if opts.refine {
        let ts = link.timing.symbol_period();
        let lo = (best.gate_on - opts.grid_step).max(opts.grid_step.min(ts) * 1e-3);
        let hi = (best.gate_on + opts.grid_step).min(ts);
        let refined = golden_section_max(lo, hi, 1e-15, |tg| {
            evaluate(tg)
                .map(|b| b.q_argument)
                .unwrap_or(f64::NEG_INFINITY)
        });
        let candidate = evaluate(refined)?;
        if candidate.q_argument > best.q_argument {
            best = candidate;
        }
    }
    Ok(best)
}

fn golden_section_max<F: Fn(f64) -> f64>(mut a: f64, mut b: f64, tol: f64, f: F) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Values are gate-ON times in seconds.
    GateOn,
    /// Values are average received signal powers in watts.
    ReceivedPower,
}

/// Gate-ON policy for received-power sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GatePolicy {
    /// Use the template's gate-ON time.
    Fixed,
    /// Free-running (`T_g = T_s`).
    FreeRunning,
    /// Search `T_g*` for every point.
    Optimized(SearchOptions),
}

/// One row of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    pub axis_value: f64,
    pub gate_on: f64,
    pub ber_analytic: f64,
    pub ber_mc: Option<f64>,
    pub mc_halfwidth: Option<f64>,
    pub zero: CountStats,
    pub one: CountStats,
}

impl BerPoint {
    fn from_breakdown(axis_value: f64, b: &BerBreakdown) -> Self {
        Self {
            axis_value,
            gate_on: b.gate_on,
            ber_analytic: b.ber,
            ber_mc: None,
            mc_halfwidth: None,
            zero: b.zero,
            one: b.one,
        }
    }
}

/// Evaluates the analytic BER at every value of `axis`; results keep the
/// input order.
pub fn sweep(
    template: &OpticalLink,
    axis: SweepAxis,
    values: &[f64],
    policy: GatePolicy,
) -> Result<Vec<BerPoint>> {
    template.validate()?;
    values
        .par_iter()
        .map(|&v| {
            let breakdown = match axis {
                SweepAxis::GateOn => ber_breakdown(template, v)?,
                SweepAxis::ReceivedPower => {
                    let link = template.with_received_power(v);
                    match policy {
                        GatePolicy::Fixed => ber_breakdown(&link, link.timing.gate_on())?,
                        GatePolicy::FreeRunning => {
                            ber_breakdown(&link, link.timing.symbol_period())?
                        }
                        GatePolicy::Optimized(opts) => optimize_gate_with(&link, &opts)?,
                    }
                }
            };
            Ok(BerPoint::from_breakdown(v, &breakdown))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(n: u32, ts_ns: f64, pr_nw: f64, pb_nw: f64) -> OpticalLink {
        OpticalLink {
            wavelength: 785e-9,
            pde: 0.18,
            received_power: pr_nw * 1e-9,
            background_power: pb_nw * 1e-9,
            array_size: n,
            timing: GateTiming::from_ns(ts_ns, ts_ns, 10.0).unwrap(),
        }
    }

    #[test]
    fn rates_examples() {
        let r = pixel_rates(&link(64, 20.0, 0.0, 0.0)).unwrap();
        assert_eq!((r.zero.hz(), r.one.hz()), (0.0, 0.0));

        let l = link(64, 20.0, 8.0, 7.0);
        assert!((l.photon_energy() - 2.5305e-19).abs() < 1e-23);
        let r = pixel_rates(&l).unwrap();
        assert!(
            (r.one.hz() - 2.555e8).abs() / 2.555e8 < 1e-3,
            "{}",
            r.one.hz()
        );
        assert!(
            (r.zero.hz() - 7.77e7).abs() / 7.77e7 < 2e-3,
            "{}",
            r.zero.hz()
        );

        let doubled = pixel_rates(&OpticalLink {
            array_size: 128,
            ..l
        })
        .unwrap();
        assert!((doubled.one.hz() * 2.0 - r.one.hz()).abs() < 1e-6);
        assert!((doubled.zero.hz() * 2.0 - r.zero.hz()).abs() < 1e-6);
    }

    #[test]
    fn invalid_links_rejected() {
        let base = link(64, 20.0, 8.0, 7.0);
        assert!(pixel_rates(&OpticalLink {
            wavelength: 0.0,
            ..base
        })
        .is_err());
        assert!(pixel_rates(&OpticalLink { pde: 0.0, ..base }).is_err());
        assert!(pixel_rates(&OpticalLink { pde: 1.5, ..base }).is_err());
        assert!(pixel_rates(&OpticalLink {
            array_size: 0,
            ..base
        })
        .is_err());
        assert!(pixel_rates(&OpticalLink {
            received_power: -1.0,
            ..base
        })
        .is_err());
    }

    #[test]
    fn q_function_values() {
        assert_eq!(q_function(0.0), 0.5);
        assert!((q_function(1.0) - 0.158_655_253_931_457).abs() < 1e-14);
        // Q(6) and Q(9) from tabulated values.
        assert!((q_function(6.0) / 9.865_876_450_377e-10 - 1.0).abs() < 1e-10);
        assert!((q_function(9.0) / 1.128_588_405_953e-19 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn no_signal_is_coin_flip() {
        let l = link(64, 20.0, 0.0, 7.0);
        assert_eq!(ber_gaussian(&l, 10e-9).unwrap(), 0.5);
        let dark = link(64, 20.0, 0.0, 0.0);
        assert_eq!(ber_gaussian(&dark, 10e-9).unwrap(), 0.5);
    }

    #[test]
    fn degenerate_spread_with_gap_is_error_free() {
        let zero = CountStats {
            mean: 0.0,
            second_moment: 0.0,
            variance: 0.0,
        };
        let one = CountStats {
            mean: 1.0,
            second_moment: 1.0,
            variance: 0.0,
        };
        assert_eq!(q_argument(64, &zero, &one), f64::INFINITY);
        assert_eq!(q_argument(64, &zero, &zero), 0.0);
    }

    #[test]
    fn reported_small_array_points() {
        let l = link(64, 20.0, 8.0, 7.0);
        let b = ber_gaussian(&l, 10e-9).unwrap();
        assert!(b > 3.5e-5 / 2.0 && b < 3.5e-5 * 2.0, "{b}");
        let l = link(64, 20.0, 15.0, 7.0);
        let b = ber_gaussian(&l, 7.8e-9).unwrap();
        assert!(b > 3.1e-9 / 3.0 && b < 3.1e-9 * 3.0, "{b}");
    }

    #[test]
    fn ber_improves_with_array_size_at_fixed_pixel_rates() {
        let rates = RatePair::new(5e7, 2e8).unwrap();
        let t = GateTiming::from_ns(20.0, 9.0, 10.0).unwrap();
        let mut prev = 1.0;
        for n in [1, 4, 16, 64, 256] {
            let b = breakdown_for_rates(&rates, n, &t).unwrap().ber;
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn grid_ends_at_symbol_period() {
        let g = gate_grid(20e-9, 0.02e-9).unwrap();
        assert_eq!(g.len(), 1000);
        assert_eq!(*g.last().unwrap(), 20e-9);
        let g = gate_grid(5e-9, 0.3e-9).unwrap();
        assert_eq!(*g.last().unwrap(), 5e-9);
        assert!(g[g.len() - 2] < 5e-9);
        assert!(gate_grid(5e-9, 0.0).is_err());
    }

    #[test]
    fn optimized_never_loses_to_free_running() {
        for (pr, pb) in [(1.0, 0.5), (4.0, 3.0), (10.0, 0.5), (8.0, 7.0)] {
            let l = link(64, 20.0, pr, pb);
            let best = optimize_gate(&l, 0.1e-9).unwrap();
            let free = ber_gaussian(&l, 20e-9).unwrap();
            assert!(best.ber <= free);
        }
    }

    #[test]
    fn refinement_never_worse() {
        let l = link(64, 20.0, 15.0, 7.0);
        let coarse = optimize_gate(&l, 0.1e-9).unwrap();
        let fine = optimize_gate_with(
            &l,
            &SearchOptions {
                grid_step: 0.1e-9,
                refine: true,
            },
        )
        .unwrap();
        assert!(fine.q_argument >= coarse.q_argument);
        assert!((fine.gate_on - coarse.gate_on).abs() <= 0.1e-9 + 1e-15);
    }

    #[test]
    fn ties_prefer_larger_gate() {
        // Without any light every gate gives BER 0.5.
        let l = link(64, 20.0, 0.0, 0.0);
        let best = optimize_gate(&l, 1e-9).unwrap();
        assert_eq!(best.gate_on, 20e-9);
        assert_eq!(best.ber, 0.5);
    }

    #[test]
    fn sweep_keeps_order_and_handles_empty() {
        let l = link(64, 20.0, 8.0, 7.0);
        assert!(sweep(&l, SweepAxis::GateOn, &[], GatePolicy::Fixed)
            .unwrap()
            .is_empty());
        let values = [2e-9, 10e-9, 5e-9, 20e-9];
        let pts = sweep(&l, SweepAxis::GateOn, &values, GatePolicy::Fixed).unwrap();
        for (p, v) in pts.iter().zip(values) {
            assert_eq!(p.axis_value, v);
            assert_eq!(p.gate_on, v);
            assert_eq!(p.ber_analytic, ber_gaussian(&l, v).unwrap());
        }
    }

    #[test]
    fn free_running_ber_is_not_monotone_in_power() {
        let l = link(64, 20.0, 0.0, 3.0);
        let powers: Vec<f64> = (1..=40).map(|i| i as f64 * 0.25e-9).collect();
        let pts = sweep(
            &l,
            SweepAxis::ReceivedPower,
            &powers,
            GatePolicy::FreeRunning,
        )
        .unwrap();
        let (imin, _) = pts
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.ber_analytic.total_cmp(&b.1.ber_analytic))
            .unwrap();
        assert!(imin > 0 && imin < pts.len() - 1, "minimum at {imin}");
    }
}
