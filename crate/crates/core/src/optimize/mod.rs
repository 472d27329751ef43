//! Transceiver optimizers: the closed-form common-coefficient and unbiased
//! designs, the general Dinkelbach/SDR solver and the Rayleigh-quotient
//! baseline.

mod closed_form;
mod dinkelbach;
mod rayleigh;
mod realified;

use num_complex::Complex64;

use crate::protocol::TransceiverDesign;
use crate::sdp::SdpOptions;

pub use closed_form::{
    common_mse, optimal_gamma_scalar, optimal_gamma_vector, orient, phase_aligned, solve_common,
    solve_unbiased, unbiased_mse,
};
pub use dinkelbach::solve_dinkelbach;
pub use rayleigh::solve_rayleigh_quotient;
pub use realified::RealifiedProblem;

/// A design together with its analytic MSE and solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub design: TransceiverDesign,
    pub mse: f64,
    /// Outer iterations (zero for closed forms).
    pub iterations: usize,
    /// `xi[0], xi[1], ...` for Dinkelbach; empty otherwise.
    pub xi_trace: Vec<f64>,
    /// `F(eta[t+1], xi[t])` at the last iteration.
    pub final_f: f64,
    pub sdr_solves: usize,
    pub rank_one_solves: usize,
}

impl Solution {
    pub(crate) fn closed_form(design: TransceiverDesign, mse: f64) -> Self {
        Self {
            design,
            mse,
            iterations: 0,
            xi_trace: Vec::new(),
            final_f: 0.0,
            sdr_solves: 0,
            rank_one_solves: 0,
        }
    }

    pub fn eta(&self) -> &[Complex64] {
        &self.design.eta
    }

    pub fn gamma(&self) -> f64 {
        self.design.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DinkelbachOptions {
    /// Stop once `xi[t-1] - xi[t] < eps`.
    pub eps: f64,
    pub max_iter: usize,
    /// Gaussian randomization rounds when the relaxation is not rank one.
    pub rounds: usize,
    pub seed: u64,
    pub sdp: SdpOptions,
}

impl Default for DinkelbachOptions {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            max_iter: 50,
            rounds: 100,
            seed: 0,
            sdp: SdpOptions {
                tol: 1e-10,
                max_iter: 100,
            },
        }
    }
}
