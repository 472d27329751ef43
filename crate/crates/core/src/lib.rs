//! Multi-level over-the-air (OTA) aggregation of MapReduce intermediate values
//! over multihop device-to-device networks.
//!
//! The crate covers the full pipeline:
//!
//! * [`topology`]: channel graphs, Prim/Kruskal minimum spanning trees rooted at
//!   the destination, and all tree queries (levels, descendants, effective
//!   channels).
//! * [`channel`]: fading draws, noise profiles, effective power budgets and the
//!   per-source transmit-coefficient caps.
//! * [`mapreduce`]: nomographic decomposition and partially aggregated IVAs.
//! * [`protocol`]: slot-by-slot simulation of the OTA aggregation and its
//!   analytic MSE.
//! * [`optimize`]: closed-form common-coefficient design, the unbiased design,
//!   the Dinkelbach/SDR general solver and the Rayleigh-quotient baseline.
//! * [`sdp`]: the dense primal-dual interior-point solver for the relaxation
//!   and rank-one recovery.
//! * [`digital`]: quantize-and-relay QAM baseline.
//! * [`experiments`]: seeded Monte Carlo sweeps and CSV output.
//!
//! Devices are indexed `0..k` internally; the destination is always the last
//! index `k - 1`. Files and CLI output use 1-based indices (WD 1..K).

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod digital;
mod error;
pub mod experiments;
pub mod mapreduce;
pub mod optimize;
pub mod protocol;
pub mod rng;
pub mod sdp;
pub mod topology;

pub use num_complex::Complex64;

pub use channel::{
    constraint_set, effective_power_budgets, ConstraintSet, FadingConfig, FadingModel,
    NoiseProfile, PowerBudget,
};
pub use error::{Error, Result};
pub use experiments::{ExperimentConfig, ResultRow, Scheme};
pub use mapreduce::{IvaDistribution, IvaProfile, NomographicTask};
pub use optimize::{DinkelbachOptions, RealifiedProblem, Solution};
pub use protocol::{analytic_mse, simulate_aggregation, ProtocolTrace, TransceiverDesign};
pub use topology::{build_mst_kruskal, build_mst_prim, AggregationTree, ChannelGraph};
