//! Piecewise adaptive Gauss–Legendre integration.
//!
//! The integrands of the count statistics contain the gate-overlap function,
//! which is continuous but has kinks wherever the look-back window crosses a
//! gate edge. Those kinks are located explicitly by
//! [`breakpoints_of_gate_overlap`], so every piece handed to the rule is
//! analytic and a 15-point rule with a few bisections is enough.

use std::sync::OnceLock;

use thiserror::Error;

use crate::error::{check_range, Result};
use crate::timing::GateTiming;

/// Gauss–Legendre order used on every piece.
pub const ORDER: usize = 15;

pub const DEFAULT_REL_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_DEPTH: u32 = 30;

/// Below this tolerance the rule is limited by roundoff and cannot converge.
pub const MIN_REL_TOL: f64 = 1e-15;

// Limits the refinement tree when a piece refuses to converge.
const MAX_INTERVALS_PER_PIECE: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error(
        "quadrature did not converge: achieved relative error {achieved:e}, requested {requested:e}"
    )]
    NotConverged { achieved: f64, requested: f64 },
    #[error("relative tolerance {0:e} is below the supported minimum")]
    ToleranceTooSmall(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    /// Maximum number of bisections of a single piece.
    pub max_depth: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_REL_TOL,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

/// Strictly increasing integration nodes, endpoints included.
///
/// A degenerate range `a == b` is represented by the single point `[a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakpoints(Vec<f64>);

impl Breakpoints {
    /// Validates and wraps a list of points.
    pub fn new(points: Vec<f64>) -> Option<Self> {
        if points.is_empty() || points.iter().any(|p| !p.is_finite()) {
            return None;
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return None;
        }
        Some(Self(points))
    }

    /// Just the two endpoints.
    pub fn endpoints(a: f64, b: f64) -> Option<Self> {
        if a == b {
            Self::new(vec![a])
        } else {
            Self::new(vec![a, b])
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn start(&self) -> f64 {
        self.0[0]
    }

    pub fn end(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Adds extra points inside the range (used to test that results do not
    /// depend on artificial subdivisions).
    pub fn refined_with(&self, extra: &[f64]) -> Self {
        let (a, b) = (self.start(), self.end());
        let mut points = self.0.clone();
        points.extend(extra.iter().copied().filter(|&x| x > a && x < b));
        points.sort_by(f64::total_cmp);
        points.dedup();
        Self(points)
    }
}

/// Snap distance used when comparing durations against gate edges.
pub(crate) fn snap_guard(timing: &GateTiming) -> f64 {
    1e-15_f64.min(timing.symbol_period() * 1e-6)
}

/// Every `s` in `[a, b]` where the gate-overlap function changes slope, plus
/// `a` and `b`.
///
/// Kinks sit where the look-back length `T_d - s` crosses a multiple of `T_s`
/// and where it crosses a multiple of `T_s` plus the gate-OFF time. For a
/// free-running gate the function is affine and only the endpoints are
/// returned.
pub fn breakpoints_of_gate_overlap(timing: &GateTiming, a: f64, b: f64) -> Result<Breakpoints> {
    let td = timing.dead_time();
    check_range("a", a, 0.0, td)?;
    check_range("b", b, a, td)?;

    let mut interior = Vec::new();
    if !timing.is_free_running() {
        match timing.picoseconds() {
            Some((ts, tg, td)) => {
                let off = ts - tg;
                let mut k = 0i64;
                while td - k * ts >= 0 {
                    interior.push((td - k * ts) as f64 / 1e12);
                    interior.push((td - k * ts - off) as f64 / 1e12);
                    k += 1;
                }
            }
            None => {
                let ts = timing.symbol_period();
                let off = timing.gate_off();
                let mut k = 0.0;
                while td - k * ts >= 0.0 {
                    interior.push(td - k * ts);
                    interior.push(td - k * ts - off);
                    k += 1.0;
                }
            }
        }
    }

    let guard = snap_guard(timing);
    interior.retain(|&x| x > a + guard && x < b - guard);
    interior.sort_by(f64::total_cmp);

    let mut points = Vec::with_capacity(interior.len() + 2);
    points.push(a);
    for x in interior {
        if x - points[points.len() - 1] > guard {
            points.push(x);
        }
    }
    if b > a {
        points.push(b);
    }
    Ok(Breakpoints(points))
}

struct Rule {
    nodes: [f64; ORDER],
    weights: [f64; ORDER],
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(legendre_rule)
}

// Roots of P_n by Newton iteration from the Chebyshev-like initial guesses.
fn legendre_rule() -> Rule {
    let n = ORDER;
    let mut nodes = [0.0; ORDER];
    let mut weights = [0.0; ORDER];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let r = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for (x, w) in r.nodes.iter().zip(r.weights.iter()) {
        sum += w * f(mid + half * x);
    }
    sum * half
}

#[derive(Default)]
struct Accumulator {
    value: f64,
    error: f64,
    intervals: usize,
    failed: bool,
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    depth: u32,
    cfg: &QuadratureConfig,
    acc: &mut Accumulator,
) {
    let mid = 0.5 * (a + b);
    let left = gauss_legendre(f, a, mid);
    let right = gauss_legendre(f, mid, b);
    let fine = left + right;
    let diff = (fine - whole).abs();
    acc.intervals += 2;
    if diff <= cfg.rel_tol * fine.abs() {
        acc.value += fine;
        acc.error += diff;
        return;
    }
    if depth >= cfg.max_depth || acc.intervals >= MAX_INTERVALS_PER_PIECE || mid <= a || mid >= b {
        acc.value += fine;
        acc.error += diff;
        acc.failed = true;
        return;
    }
    adapt(f, a, mid, left, depth + 1, cfg, acc);
    adapt(f, mid, b, right, depth + 1, cfg, acc);
}

/// Integrates `f` over the range spanned by `bps`, applying an adaptive
/// Gauss–Legendre rule on every piece.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(
    f: F,
    bps: &Breakpoints,
    rel_tol: f64,
) -> std::result::Result<f64, QuadratureError> {
    integrate_piecewise_with(
        f,
        bps,
        &QuadratureConfig {
            rel_tol,
            ..QuadratureConfig::default()
        },
    )
}

pub fn integrate_piecewise_with<F: Fn(f64) -> f64>(
    f: F,
    bps: &Breakpoints,
    cfg: &QuadratureConfig,
) -> std::result::Result<f64, QuadratureError> {
    if cfg.rel_tol.is_nan() || cfg.rel_tol < MIN_REL_TOL {
        return Err(QuadratureError::ToleranceTooSmall(cfg.rel_tol));
    }
    let mut total = 0.0;
    let mut error = 0.0;
    let mut failed = false;
    for w in bps.as_slice().windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut acc = Accumulator::default();
        let whole = gauss_legendre(&f, a, b);
        adapt(&f, a, b, whole, 0, cfg, &mut acc);
        total += acc.value;
        error += acc.error;
        failed |= acc.failed;
    }
    if failed {
        let achieved = if total != 0.0 {
            error / total.abs()
        } else {
            error
        };
        if achieved > cfg.rel_tol {
            return Err(QuadratureError::NotConverged {
                achieved,
                requested: cfg.rel_tol,
            });
        }
    }
    Ok(total)
}
