use nalgebra::DVector;

use super::closed_form::{optimal_gamma_vector, orient, phase_aligned};
use super::{DinkelbachOptions, RealifiedProblem, Solution};
use crate::channel::ConstraintSet;
use crate::mapreduce::IvaProfile;
use crate::protocol::{analytic_mse, TransceiverDesign};
use crate::rng::derive_seed;
use crate::sdp::{recover_rank1, solve_sdr, SdrProblem};
use crate::{Error, Result};

/// General transceiver design by Dinkelbach's method.
///
/// Starting from the common-coefficient point, each iteration minimizes
/// `F(eta, xi) = eta^T B(xi) eta + sigma^2 (1 - xi)` over the caps through
/// the semidefinite relaxation, recovers a rank-one point and updates
/// `xi` to the new ratio. A recovered point that does worse than the current
/// iterate on `F(., xi)` is discarded, so `xi` never increases. A noiseless
/// problem is solved directly by the phase-aligned full-power design.
pub fn solve_dinkelbach(
    caps: &ConstraintSet,
    ivas: &IvaProfile,
    sigma_sq: f64,
    opts: &DinkelbachOptions,
) -> Result<Solution> {
    if !(opts.eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {}", opts.eps)));
    }
    if sigma_sq == 0.0 {
        return phase_aligned(caps, ivas, sigma_sq);
    }
    let problem = RealifiedProblem::new(ivas, caps, sigma_sq)?;
    let m = problem.sources();
    let eta0 = caps.p_min().sqrt();
    let mut eta = DVector::from_fn(2 * m, |i, _| if i < m { eta0 } else { 0.0 });
    let mut xi = problem.ratio(&eta);
    let mut trace = vec![xi];
    let mut final_f = 0.0;
    let mut sdr_solves = 0;
    let mut rank_one_solves = 0;
    let mut converged = false;

    for t in 1..=opts.max_iter {
        let sdr = SdrProblem::new(problem.b_matrix(xi), problem.caps.clone())?;
        let relaxed = solve_sdr(&sdr, &opts.sdp)?;
        let recovered = recover_rank1(&relaxed, &sdr, opts.rounds, derive_seed(opts.seed, &[t as u64]));
        sdr_solves += 1;
        rank_one_solves += usize::from(recovered.rank_one);

        let mut candidate = recovered.eta_ext;
        if problem.f_value(&candidate, xi) > problem.f_value(&eta, xi) {
            candidate = eta.clone();
        }
        let next = problem.ratio(&candidate);
        final_f = problem.f_value(&candidate, xi);
        eta = candidate;
        trace.push(next);
        log::trace!("dinkelbach t={t} xi={next:.12e} F={final_f:.3e}");
        let decrease = xi - next;
        xi = next;
        if decrease < opts.eps {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            iterations: opts.max_iter,
            xi_trace: trace,
        });
    }

    let eta = orient(problem.to_complex(&eta), ivas);
    let gamma = optimal_gamma_vector(&eta, ivas, sigma_sq)?;
    let design = TransceiverDesign::new(eta, gamma)?;
    let mse = analytic_mse(&design, ivas, sigma_sq)?;
    Ok(Solution {
        design,
        mse,
        iterations: trace.len() - 1,
        xi_trace: trace,
        final_f,
        sdr_solves,
        rank_one_solves,
    })
}
