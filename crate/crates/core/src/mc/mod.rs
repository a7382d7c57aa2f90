//! Event-level Monte-Carlo of a gated, passively quenched SPAD array.
//!
//! Photon arrivals are Poisson with a rate that switches at symbol
//! boundaries. An arrival is detected iff it falls inside a gate-ON window and
//! no other gate-ON arrival occurred during the preceding dead time; every
//! gate-ON arrival, detected or not, restarts the dead time. Arrivals during
//! gate-OFF never reach the avalanche stage and leave the detector state
//! untouched.
//!
//! All results are a deterministic function of the seed and the parameters:
//! every pixel and every block of symbols draws from its own ChaCha stream, and
//! all reductions are integer sums.

mod arrivals;
mod detector;
mod estimate;
mod frame;
mod rng;

pub use arrivals::{gen_arrivals, gen_arrivals_piecewise};
pub use detector::{apply_gated_dead_time, detect_paralyzable, is_gate_on, DetectionRecord};
pub use estimate::{
    estimate_ber_mc, estimate_ber_mc_with, estimate_moments_mc, estimate_pmf, gaussian_pmf,
    simulate_constant_counts, wilson_halfwidth, BerEstimate, BerRun, MomentEstimate, Pmf,
    PmfEstimate, Threshold,
};
pub use frame::{
    random_bits, simulate_frame, simulate_model_frame, trace_frame, write_trace, ReceiverModel,
    SymbolCounts, DEFAULT_WARMUP,
};
