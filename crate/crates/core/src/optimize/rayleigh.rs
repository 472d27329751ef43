use nalgebra::{DMatrix, SymmetricEigen};

use super::closed_form::{optimal_gamma_vector, orient, phase_aligned};
use super::{RealifiedProblem, Solution};
use crate::channel::ConstraintSet;
use crate::mapreduce::IvaProfile;
use crate::protocol::{analytic_mse, TransceiverDesign};
use crate::{Error, Result};

/// Rayleigh-quotient baseline.
///
/// Fixing `||eta||^2 = (K-1) P_min` turns the MSE ratio into the generalized
/// Rayleigh quotient of `(a3 a3^T + eps I, a1 a1^T + a2 a2^T + eps I)` with
/// `eps = sigma^2 / ((K-1) P_min)`. Its minimizing direction is then scaled
/// by the largest factor that keeps every cap satisfied.
pub fn solve_rayleigh_quotient(caps: &ConstraintSet, ivas: &IvaProfile, sigma_sq: f64) -> Result<Solution> {
    if sigma_sq == 0.0 {
        return phase_aligned(caps, ivas, sigma_sq);
    }
    let problem = RealifiedProblem::new(ivas, caps, sigma_sq)?;
    let m = problem.sources();
    let n = 2 * m;
    let norm_sq = m as f64 * caps.p_min();
    let eps = sigma_sq / norm_sq;

    let num = &problem.a3 * problem.a3.transpose() + DMatrix::identity(n, n) * eps;
    let den = &problem.a1 * problem.a1.transpose()
        + &problem.a2 * problem.a2.transpose()
        + DMatrix::identity(n, n) * eps;
    let chol = den
        .cholesky()
        .ok_or_else(|| Error::Domain("quotient denominator is not positive definite".into()))?;
    let l = chol.l();
    let half = l
        .solve_lower_triangular(&num)
        .and_then(|t| l.solve_lower_triangular(&t.transpose()))
        .ok_or_else(|| Error::Domain("singular quotient denominator".into()))?;
    let eig = SymmetricEigen::new((&half + half.transpose()) * 0.5);
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty spectrum");
    let u = eig.eigenvectors.column(imin).into_owned();
    let mut v = l
        .transpose()
        .solve_upper_triangular(&u)
        .ok_or_else(|| Error::Domain("singular quotient denominator".into()))?;
    v /= v.norm();
    let tilde = v * norm_sq.sqrt();

    let beta = (0..m)
        .map(|i| {
            let p = tilde[i].powi(2) + tilde[i + m].powi(2);
            if p > 0.0 {
                (caps.caps[i] / p).sqrt()
            } else {
                f64::INFINITY
            }
        })
        .fold(f64::INFINITY, f64::min);
    if !beta.is_finite() {
        return Err(Error::Domain("quotient minimizer is zero".into()));
    }
    let eta = orient(problem.to_complex(&(tilde * beta)), ivas);
    let gamma = optimal_gamma_vector(&eta, ivas, sigma_sq)?;
    let design = TransceiverDesign::new(eta, gamma)?;
    let mse = analytic_mse(&design, ivas, sigma_sq)?;
    Ok(Solution::closed_form(design, mse))
}
